"""Subshifts of finite type: construction, word and periodic-orbit enumeration.

Symbols are the integers ``0 .. N-1`` throughout the library. Text forms
(JSON keys, CSV, reports) show them 1-based, so the word ``(0, 1)`` prints as
``"12"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import LengthTooLarge, PeriodTooLarge, RowOrColumnEmpty, ValidationError

Word = tuple[int, ...]

DEFAULT_WORD_CAP = 10**7


def perron_root(matrix, tol=1e-12, max_iter=100_000):
    """Spectral radius and Perron vector of a nonnegative matrix.

    Power iteration on ``M + I`` from the uniform vector. The shift makes
    irreducible-but-periodic matrices converge and does not move the
    eigenvectors.

    Returns
    -------
    root : float
    vector : ndarray
        Nonnegative, unit 1-norm, ``M @ vector ~= root * vector``.
    """
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    shifted = m + np.eye(n)
    x = np.full(n, 1.0 / n)
    root = 0.0
    for _ in range(max_iter):
        y = shifted @ x
        s = y.sum()
        y /= s
        root = s - 1.0
        if np.max(np.abs(m @ y - root * y)) <= tol * max(1.0, root):
            return float(root), y
        x = y
    return float(root), x


def _mixing_time(a: np.ndarray) -> Optional[int]:
    n = a.shape[0]
    b = (a > 0).astype(np.int64)
    power = b.copy()
    for m in range(1, n * n + 1):
        if power.all():
            return m
        power = ((power @ b) > 0).astype(np.int64)
    return None


@dataclass(frozen=True, eq=False)
class Sft:
    """One-sided subshift of finite type.

    ``mixing_time`` is the least M with every entry of ``A**M`` positive, or
    ``None`` when no ``M <= N**2`` works (the ``not_mixing`` flag).
    """

    alphabet_size: int
    transitions: np.ndarray
    mixing_time: Optional[int]
    entropy: float
    perron_root: float

    @property
    def not_mixing(self) -> bool:
        return self.mixing_time is None

    def admissible(self, a: int, b: int) -> bool:
        return bool(self.transitions[a, b])

    def is_admissible(self, word) -> bool:
        if any(not (0 <= s < self.alphabet_size) for s in word):
            return False
        return all(self.transitions[a, b] for a, b in zip(word, word[1:]))

    def word_count(self, n: int) -> int:
        """Number of admissible words of length ``n`` (exact integer arithmetic)."""
        if n < 1:
            raise ValidationError("word length must be >= 1")
        a = [[int(v) for v in row] for row in self.transitions]
        counts = [1] * self.alphabet_size
        for _ in range(n - 1):
            counts = [sum(counts[i] * a[i][j] for i in range(self.alphabet_size))
                      for j in range(self.alphabet_size)]
        return sum(counts)

    def __repr__(self):
        rows = ";".join("".join(str(int(v)) for v in r) for r in self.transitions)
        return f"Sft(N={self.alphabet_size}, A=[{rows}], M={self.mixing_time})"


def new_sft(alphabet_size: int, transitions) -> Sft:
    try:
        a = np.asarray(transitions)
    except ValueError:
        raise ValidationError("transitions must be a square list of rows") from None
    if a.shape != (alphabet_size, alphabet_size):
        raise ValidationError(
            f"transitions must be {alphabet_size}x{alphabet_size}, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        bad = np.argwhere(~np.isin(a, (0, 1)))[0]
        raise ValidationError(f"transitions[{bad[0]}][{bad[1]}] = {a[tuple(bad)]!r} is not 0 or 1")
    a = a.astype(np.int8)
    for i in range(alphabet_size):
        if not a[i].any():
            raise RowOrColumnEmpty(f"row {i} (symbol {i + 1}) has no successor")
        if not a[:, i].any():
            raise RowOrColumnEmpty(f"column {i} (symbol {i + 1}) has no predecessor")
    a.setflags(write=False)
    root, _ = perron_root(a)
    # the Perron root of a 0/1 matrix with no empty rows is >= 1
    entropy = 0.0 if abs(root - 1.0) < 1e-12 else float(np.log(root))
    return Sft(alphabet_size, a, _mixing_time(a), entropy, root)


def enumerate_words(sft: Sft, n: int, cap: int = DEFAULT_WORD_CAP) -> list[Word]:
    """All admissible words of length ``n`` in lexicographic order."""
    count = sft.word_count(n)
    if count > cap:
        raise LengthTooLarge(f"{count} words of length {n} exceed cap {cap}")
    succ = [[b for b in range(sft.alphabet_size) if sft.transitions[a, b]]
            for a in range(sft.alphabet_size)]
    words: list[Word] = [(a,) for a in range(sft.alphabet_size)]
    for _ in range(n - 1):
        words = [w + (b,) for w in words for b in succ[w[-1]]]
    return words


def minimal_rotation(word: Word) -> Word:
    return min(word[i:] + word[:i] for i in range(len(word)))


def _is_primitive_word(word: Word) -> bool:
    p = len(word)
    return all(word != word[d:] + word[:d] for d in range(1, p) if p % d == 0)


@dataclass(frozen=True)
class PeriodicOrbit:
    """Cyclic admissible word stored as its lexicographically minimal rotation."""

    word: Word

    @property
    def period(self) -> int:
        return len(self.word)

    def points(self) -> list[Word]:
        w = self.word
        return [w[i:] + w[:i] for i in range(len(w))]


def periodic_orbits(sft: Sft, max_period: int, cap: int = DEFAULT_WORD_CAP) -> list[PeriodicOrbit]:
    """Canonical periodic orbits of least period ``<= max_period``.

    Ordered by period, then lexicographically.
    """
    if max_period < 1:
        raise ValidationError("max_period must be >= 1")
    a = sft.transitions.astype(object)
    power = np.identity(sft.alphabet_size, dtype=object)
    total = 0
    for _ in range(max_period):
        power = power.dot(a)
        total += int(np.trace(power))
    if total > cap:
        raise PeriodTooLarge(f"{total} periodic points up to period {max_period} exceed cap {cap}")

    n = sft.alphabet_size
    succ = [[b for b in range(n) if sft.transitions[x, b]] for x in range(n)]
    orbits = []
    for p in range(1, max_period + 1):
        found = []
        for first in range(n):
            # a minimal rotation never contains a symbol below its first one
            stack = [(first,)]
            while stack:
                w = stack.pop()
                if len(w) == p:
                    if sft.transitions[w[-1], first] and _is_primitive_word(w) \
                            and minimal_rotation(w) == w:
                        found.append(w)
                    continue
                stack.extend(w + (b,) for b in reversed(succ[w[-1]]) if b >= first)
        orbits.extend(PeriodicOrbit(w) for w in sorted(found))
    return orbits


def format_word(word, alphabet_size: int) -> str:
    sep = "" if alphabet_size <= 9 else "-"
    return sep.join(str(s + 1) for s in word)


def parse_word(text: str, alphabet_size: int) -> Word:
    parts = list(text) if alphabet_size <= 9 else text.split("-")
    try:
        word = tuple(int(p) - 1 for p in parts)
    except ValueError:
        raise ValidationError(f"cannot parse word {text!r}") from None
    if not word or any(not (0 <= s < alphabet_size) for s in word):
        raise ValidationError(f"word {text!r} uses symbols outside 1..{alphabet_size}")
    return word

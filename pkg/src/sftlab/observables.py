"""Locally constant functions on an SFT and higher-block recoding.

A function of range ``r`` is a table over admissible words of length ``r``;
its value at a one-sided sequence is read off the first ``r`` symbols. The
same type carries potentials and observables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import BlockAlphabetTooLarge, RangeTooLarge, ValidationError, WordTooShort
from .sft import Sft, Word, enumerate_words, format_word, new_sft

MAX_BLOCKS = 4096


class LocallyConstantFn:
    """Real function of the first ``range`` symbols of a sequence.

    Supports ``+``, ``-`` and scalar ``*``; mixed ranges are promoted to the
    larger one.
    """

    __slots__ = ("sft", "range", "values")

    def __init__(self, sft: Sft, range: int, values: Mapping[Word, float]):
        if range < 1:
            raise ValidationError("range must be >= 1")
        words = enumerate_words(sft, range)
        table = {}
        for w in words:
            if w not in values:
                raise ValidationError(
                    f"no value for admissible word {format_word(w, sft.alphabet_size)}")
            table[w] = float(values[w])
        extra = set(values) - set(table)
        if extra:
            w = sorted(extra)[0]
            raise ValidationError(
                f"value given for inadmissible or wrong-length word {format_word(w, sft.alphabet_size)}")
        self.sft = sft
        self.range = range
        self.values = table

    @classmethod
    def constant(cls, sft: Sft, c: float) -> "LocallyConstantFn":
        return cls(sft, 1, {(a,): c for a in range(sft.alphabet_size)})

    @classmethod
    def indicator(cls, sft: Sft, symbol: int) -> "LocallyConstantFn":
        """``1`` on the cylinder ``[symbol]``, else ``0`` (0-based symbol)."""
        return cls(sft, 1, {(a,): float(a == symbol) for a in range(sft.alphabet_size)})

    @classmethod
    def from_symbol_values(cls, sft: Sft, values: Sequence[float]) -> "LocallyConstantFn":
        return cls(sft, 1, {(a,): values[a] for a in range(sft.alphabet_size)})

    @classmethod
    def coboundary(cls, u: "LocallyConstantFn") -> "LocallyConstantFn":
        """``u o shift - u``; has range ``u.range + 1``."""
        r = u.range
        return cls(u.sft, r + 1,
                   {w: u.values[w[1:]] - u.values[w[:r]] for w in enumerate_words(u.sft, r + 1)})

    def extend(self, r: int) -> "LocallyConstantFn":
        """Same function tabulated on words of length ``r >= range``."""
        if r < self.range:
            raise ValidationError("cannot shrink range")
        if r == self.range:
            return self
        return LocallyConstantFn(self.sft, r,
                                 {w: self.values[w[:self.range]] for w in enumerate_words(self.sft, r)})

    def _combine(self, other, op):
        if isinstance(other, LocallyConstantFn):
            if other.sft is not self.sft:
                raise ValidationError("functions live on different shifts")
            r = max(self.range, other.range)
            a, b = self.extend(r), other.extend(r)
            return LocallyConstantFn(self.sft, r, {w: op(a.values[w], b.values[w]) for w in a.values})
        c = float(other)
        return LocallyConstantFn(self.sft, self.range, {w: op(v, c) for w, v in self.values.items()})

    def __add__(self, other):
        return self._combine(other, lambda x, y: x + y)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda x, y: x - y)

    def __rsub__(self, other):
        return self._combine(other, lambda x, y: y - x)

    def __mul__(self, c):
        c = float(c)
        return LocallyConstantFn(self.sft, self.range, {w: c * v for w, v in self.values.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @property
    def variation(self) -> tuple[float, ...]:
        """``var_k`` for ``k = 0 .. range-1``; every later ``var_k`` is zero.

        ``var_k`` is the largest spread of values among words sharing their
        first ``k`` symbols.
        """
        out = []
        for k in range(self.range):
            groups: dict[Word, list[float]] = {}
            for w, v in self.values.items():
                groups.setdefault(w[:k], []).append(v)
            out.append(max(max(g) - min(g) for g in groups.values()))
        return tuple(out)

    @property
    def sup_norm(self) -> float:
        return max(abs(v) for v in self.values.values())

    def __repr__(self):
        return f"LocallyConstantFn(range={self.range}, {len(self.values)} words)"


def evaluate(f: LocallyConstantFn, word) -> float:
    if len(word) < f.range:
        raise WordTooShort(f"word of length {len(word)} shorter than range {f.range}")
    return f.values[tuple(word[:f.range])]


def birkhoff_sum(f: LocallyConstantFn, word, n: int) -> float:
    """``sum_{k<n} f(shift^k word)``."""
    if len(word) < n + f.range - 1:
        raise WordTooShort(f"need {n + f.range - 1} symbols, got {len(word)}")
    w = tuple(word)
    r = f.range
    return math.fsum(f.values[w[k:k + r]] for k in range(n))


@dataclass(frozen=True, eq=False)
class BlockSystem:
    """Higher-block presentation of ``base`` with blocks of length ``order``.

    Block ``u`` may follow block ``v`` when they overlap in ``order - 1``
    symbols and their union is admissible. For ``order == 1`` the block
    system is the base shift itself.
    """

    base: Sft
    order: int
    blocks: tuple[Word, ...]
    block_sft: Sft

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @cached_property
    def index(self) -> dict:
        return {b: i for i, b in enumerate(self.blocks)}

    def encode(self, word) -> tuple[int, ...]:
        """Base word of length ``m >= order`` to its ``m - order + 1`` blocks."""
        L = self.order
        if len(word) < L:
            raise WordTooShort(f"need at least {L} symbols to encode")
        idx = self.index
        w = tuple(word)
        return tuple(idx[w[k:k + L]] for k in range(len(w) - L + 1))

    def decode(self, block_word) -> Word:
        if not block_word:
            return ()
        first = self.blocks[block_word[0]]
        return first + tuple(self.blocks[b][-1] for b in block_word[1:])

    def block_label(self, b: int) -> str:
        return format_word(self.blocks[b], self.base.alphabet_size)


def block_system(sft: Sft, order: int) -> BlockSystem:
    if order == 1:
        return BlockSystem(sft, 1, tuple((a,) for a in range(sft.alphabet_size)), sft)
    count = sft.word_count(order)
    if count > MAX_BLOCKS:
        raise BlockAlphabetTooLarge(f"{count} blocks of length {order} exceed cap {MAX_BLOCKS}")
    blocks = tuple(enumerate_words(sft, order))
    idx = {b: i for i, b in enumerate(blocks)}
    a = np.zeros((len(blocks), len(blocks)), dtype=np.int8)
    for u, bu in enumerate(blocks):
        for s in range(sft.alphabet_size):
            if sft.transitions[bu[-1], s]:
                a[u, idx[bu[1:] + (s,)]] = 1
    return BlockSystem(sft, order, blocks, new_sft(len(blocks), a))


def recode_to_blocks(sft: Sft, fns: Sequence[LocallyConstantFn]):
    """Move ``fns`` to one block system on which each has range at most 2.

    Returns ``(system, recoded)``. With every range equal to 1 the recoding
    is the identity. Otherwise blocks are words of length ``r - 1`` for the
    largest range ``r`` (at least 2), and each function becomes a function of
    consecutive block pairs.
    """
    for f in fns:
        if f.sft is not sft:
            raise ValidationError("all functions must live on the given shift")
    r = max((f.range for f in fns), default=1)
    if r == 1:
        return block_system(sft, 1), list(fns)
    order = r - 1
    system = block_system(sft, order)
    bsft = system.block_sft
    pairs = enumerate_words(bsft, 2)
    recoded = []
    for f in fns:
        full = f.extend(r)
        values = {(u, v): full.values[system.blocks[u] + system.blocks[v][-1:]] for u, v in pairs}
        recoded.append(LocallyConstantFn(bsft, 2, values))
    return system, recoded


def edge_values(f: LocallyConstantFn) -> np.ndarray:
    """Matrix ``G[u, v]`` = value on the transition ``u -> v`` (zero if inadmissible).

    A range-1 function is constant along rows.
    """
    if f.range > 2:
        raise RangeTooLarge(f"range {f.range} > 2; recode to blocks first")
    sft = f.sft
    n = sft.alphabet_size
    g = np.zeros((n, n))
    for u in range(n):
        for v in range(n):
            if sft.transitions[u, v]:
                g[u, v] = f.values[(u,)] if f.range == 1 else f.values[(u, v)]
    return g

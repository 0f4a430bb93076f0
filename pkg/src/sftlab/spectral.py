"""Transfer matrices, Perron data, pressure and the Gibbs chain.

Conventions
-----------
For a potential ``phi`` of range at most 2 on a block system the weighted
matrix is ``B[u, v] = A[u, v] * exp(phi(u v))``. The transfer operator sums
over preimages, ``(L f)(v) = sum_u B[u, v] f(u)``, i.e. it is ``B.T`` acting
on functions. Hence

* ``h`` (eigenfunction) solves ``B.T h = lam h``;
* ``nu`` (eigenmeasure) solves ``B nu = lam nu``;
* ``mu = h * nu`` is the equilibrium state, normalised so ``sum(nu) = 1`` and
  ``sum(h * nu) = 1``.

The forward Markov chain of ``mu`` is ``q[u, v] = B[u, v] nu[v] / (lam nu[u])``
and the normalised transfer operator ``Q[v, u] = B[u, v] h[u] / (lam h[v])``
is its time reversal. For a symmetric ``B`` the two vectors coincide.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationCap, NoConvergence, NotPrimitive, RangeTooLarge, ValidationError
from .observables import BlockSystem, LocallyConstantFn, edge_values
from .sft import enumerate_words

DENSE_LIMIT = 512
RESIDUAL_TARGET = 1e-10


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    system: BlockSystem
    entries: np.ndarray
    potential: LocallyConstantFn


def transfer_matrix(system: BlockSystem, potential: LocallyConstantFn) -> TransferMatrix:
    if potential.sft is not system.block_sft:
        raise ValidationError("potential must live on the block system's shift")
    if potential.range > 2:
        raise RangeTooLarge(f"potential range {potential.range} > 2 on the block system")
    a = system.block_sft.transitions
    b = np.where(a > 0, np.exp(edge_values(potential)), 0.0)
    return TransferMatrix(system, b, potential)


@dataclass(frozen=True, eq=False)
class RpfData:
    """Perron triple and spectral summary of a transfer matrix.

    ``spectrum`` is ``None`` above ``DENSE_LIMIT`` blocks, where only the
    Perron root and ``theta1`` (from a deflated power iteration) are computed.
    """

    lam: float
    pressure: float
    h: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    spectrum: np.ndarray | None
    theta1: float
    residual: float
    transfer: TransferMatrix

    @property
    def system(self) -> BlockSystem:
        return self.transfer.system

    @property
    def gamma(self) -> float:
        return spectral_gap(self)[1]

    def to_json(self) -> dict:
        spec = None
        if self.spectrum is not None:
            spec = [[float(z.real), float(z.imag)] for z in self.spectrum]
        return {
            "lambda": self.lam,
            "pressure": self.pressure,
            "h": self.h.tolist(),
            "nu": self.nu.tolist(),
            "mu": self.mu.tolist(),
            "spectrum": spec,
            "theta1": self.theta1,
            "residual": self.residual,
        }


def _power(matrix, start, tol=1e-13, max_iter=100_000):
    x = start / start.sum()
    lam = 0.0
    for _ in range(max_iter):
        y = matrix @ x
        lam = y.sum()
        y /= lam
        if np.max(np.abs(y - x)) <= tol:
            return lam, y
        x = y
    raise NoConvergence(f"power iteration did not converge in {max_iter} steps")


def _perron_pair(b: np.ndarray):
    """Perron root with right and left eigenvectors, polished to full precision."""
    n = b.shape[0]
    if n <= DENSE_LIMIT:
        w, vr = np.linalg.eig(b)
        k = int(np.argmax(w.real))
        w_l, vl = np.linalg.eig(b.T)
        kl = int(np.argmax(w_l.real))
        right = np.abs(vr[:, k].real)
        left = np.abs(vl[:, kl].real)
        spectrum = w
    else:
        right = left = np.ones(n)
        spectrum = None
    _, right = _power(b, right + 1e-300)
    _, left = _power(b.T, left + 1e-300)
    lam = float((left @ b @ right) / (left @ right))
    return lam, right, left, spectrum


def _theta_deflated(b, lam, right, left, tol=1e-12, max_iter=100_000):
    """Second-largest eigenvalue modulus via power iteration on the deflated matrix."""
    proj = np.outer(right, left) / (left @ right)
    d = b - lam * proj
    x = np.random.default_rng(0).standard_normal(b.shape[0])
    x -= proj @ x
    prev = 0.0
    for k in range(max_iter):
        y = d @ d @ x  # two steps so a real negative or complex pair gives a stable ratio
        ny, nx = np.linalg.norm(y), np.linalg.norm(x)
        if ny == 0.0:
            return 0.0
        est = np.sqrt(ny / nx)
        x = y / ny
        if k > 10 and abs(est - prev) <= tol * lam:
            return float(est / lam)
        prev = est
    return float(prev / lam)


def rpf_solve(tm: TransferMatrix) -> RpfData:
    bsft = tm.system.block_sft
    if bsft.not_mixing:
        raise NotPrimitive("block transition matrix is not primitive")
    b = tm.entries
    lam, nu, h, spectrum = _perron_pair(b)
    nu = nu / nu.sum()
    h = h / (h @ nu)
    mu = h * nu
    mu = mu / mu.sum()
    scale = max(1.0, lam)
    residual = float(max(np.max(np.abs(b @ nu - lam * nu)),
                         np.max(np.abs(b.T @ h - lam * h)) / max(1.0, h.max())) / scale)
    if residual > RESIDUAL_TARGET:
        raise NoConvergence(f"eigen-equation residual {residual:.3g} above {RESIDUAL_TARGET}")
    if spectrum is not None:
        spectrum = spectrum[np.lexsort((-spectrum.imag, -np.abs(spectrum)))]
        k = int(np.argmin(np.abs(spectrum - lam)))
        rest = np.delete(spectrum, k)
        if rest.size and np.max(np.abs(rest)) > lam - 1e-8:
            raise NoConvergence("Perron eigenvalue not separated from the rest of the spectrum")
        theta1 = float(np.max(np.abs(rest)) / lam) if rest.size else 0.0
    else:
        theta1 = _theta_deflated(b, lam, nu, h)
    # roundoff in eig leaves ~1e-17 where the exact value is zero
    if theta1 < 1e-13:
        theta1 = 0.0
    return RpfData(lam, float(np.log(lam)), h, nu, mu, spectrum, theta1, residual, tm)


def solve(system: BlockSystem, potential: LocallyConstantFn) -> RpfData:
    return rpf_solve(transfer_matrix(system, potential))


def pressure(system: BlockSystem, potential: LocallyConstantFn) -> float:
    return rpf_solve(transfer_matrix(system, potential)).pressure


def spectral_gap(rpf: RpfData) -> tuple[float, float]:
    """``(theta1, gamma)`` with ``gamma = -log(theta1)``; ``inf`` when ``theta1 == 0``."""
    t = rpf.theta1
    return t, (float("inf") if t == 0.0 else float(-np.log(t)))


@dataclass(frozen=True, eq=False)
class GibbsChain:
    transition: np.ndarray
    stationary: np.ndarray

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    def cylinder_measure(self, block_word) -> float:
        p = self.stationary[block_word[0]]
        for u, v in zip(block_word, block_word[1:]):
            p *= self.transition[u, v]
        return float(p)


def gibbs_chain(rpf: RpfData) -> GibbsChain:
    b = rpf.transfer.entries
    q = b * rpf.nu[None, :] / (rpf.lam * rpf.nu[:, None])
    q /= q.sum(axis=1, keepdims=True)
    return GibbsChain(q, rpf.mu.copy())


def normalized_operator(rpf: RpfData) -> np.ndarray:
    """Matrix of the normalised transfer operator acting on column vectors.

    ``Q @ 1 == 1`` and ``mu @ Q == mu``.
    """
    b = rpf.transfer.entries
    return b.T * rpf.h[None, :] / (rpf.lam * rpf.h[:, None])


@dataclass(frozen=True)
class GibbsRatio:
    c1: float
    c2: float
    per_length: tuple  # (n, min, max) rows


def gibbs_ratio_check(rpf: RpfData, n_max: int, cap: int = 10**6) -> GibbsRatio:
    """Extremes of ``mu(C_w) * exp(n P - S_n phi(w))`` over block words of length ``n <= n_max``.

    ``S_n phi(w)`` sums the potential over every complete window of ``w``
    (``n`` terms for a range-1 potential, ``n - 1`` for range 2).
    """
    system = rpf.system
    bsft = system.block_sft
    total = sum(bsft.word_count(n) for n in range(1, n_max + 1))
    if total > cap:
        raise EnumerationCap(f"{total} cylinders up to length {n_max} exceed cap {cap}")
    chain = gibbs_chain(rpf)
    pot = rpf.transfer.potential
    g = edge_values(pot)
    rows = []
    for n in range(1, n_max + 1):
        lo, hi = np.inf, -np.inf
        for w in enumerate_words(bsft, n):
            if pot.range == 1:
                s = sum(pot.values[(u,)] for u in w)
            else:
                s = sum(g[u, v] for u, v in zip(w, w[1:]))
            r = chain.cylinder_measure(w) * np.exp(n * rpf.pressure - s)
            lo, hi = min(lo, r), max(hi, r)
        rows.append((n, float(lo), float(hi)))
    return GibbsRatio(min(r[1] for r in rows), max(r[2] for r in rows), tuple(rows))


def pressure_curve(system: BlockSystem, phi: LocallyConstantFn, g: LocallyConstantFn,
                   t_grid, workers: int = 1) -> list[tuple[float, float]]:
    """``(t, P(phi + t g) - P(phi))`` for each ``t``; exactly 0 at ``t == 0``."""
    p0 = pressure(system, phi)

    def point(t):
        t = float(t)
        if t == 0.0:
            return t, 0.0
        return t, pressure(system, phi + t * g) - p0

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(point, t_grid))
    return [point(t) for t in t_grid]

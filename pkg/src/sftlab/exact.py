"""Exact law of Birkhoff sums of lattice observables.

Forward dynamic programming over ``(state, accumulated integer value)``
under the Gibbs chain. This is the brute-force reference for the CLT,
Berry-Esseen, local-limit and large-deviation checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import norm

from .errors import DegenerateSigma, MemoryCap, NonLattice, ValidationError
from .observables import LocallyConstantFn, edge_values

SNAP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """``g = integer_values / q`` on every admissible block transition."""

    q: int
    integer_values: np.ndarray
    admissible: np.ndarray


def lattice_check(g: LocallyConstantFn, q_max: int = 10**6) -> LatticeSpec:
    """Smallest ``q <= q_max`` making every value of ``g`` an integer multiple of ``1/q``."""
    if q_max < 1:
        raise ValidationError("q_max must be >= 1")
    ge = edge_values(g)
    adm = g.sft.transitions > 0
    q = 1
    for v in sorted(set(ge[adm].tolist())):
        d = Fraction(v).limit_denominator(q_max).denominator
        if abs(d * v - round(d * v)) > SNAP_TOL:
            raise NonLattice(f"value {v!r} is not a multiple of 1/q for any q <= {q_max}")
        q = q * d // math.gcd(q, d)
        if q > q_max:
            raise NonLattice(f"common denominator exceeds {q_max}")
    scaled = ge * q
    ints = np.rint(scaled)
    if np.max(np.abs(scaled - ints)[adm], initial=0.0) > SNAP_TOL:
        raise NonLattice("values do not share a lattice within snapping tolerance")
    return LatticeSpec(q, np.where(adm, ints, 0).astype(np.int64), adm)


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    """``P(S_n g = support[i] / q) = probs[i]``."""

    n: int
    q: int
    support: np.ndarray
    probs: np.ndarray
    mean: float
    variance: float
    pruned_mass: float = 0.0

    @property
    def values(self) -> np.ndarray:
        return self.support / self.q

    @property
    def span(self) -> int:
        """Lattice step of the support, in units of ``1/q``."""
        ks = self.support[self.probs > 0]
        if ks.size < 2:
            return 1
        return int(np.gcd.reduce(np.diff(ks)))


def exact_dist(chain, spec: LatticeSpec, n: int, memory_cap: int = 10**8,
               prune: float = 0.0) -> ExactDistribution:
    """Law of ``S_n g`` for the stationary chain, ``g`` read on transitions ``x_k -> x_{k+1}``.

    Atoms below ``prune`` are dropped after every step and the lost mass is
    reported; the default keeps everything so deep tails stay exact.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    k = spec.integer_values
    adm = spec.admissible
    lo_step = int(k[adm].min())
    hi_step = int(k[adm].max())
    width = n * (hi_step - lo_step) + 1
    states = chain.n_states
    if states * width > memory_cap:
        raise MemoryCap(f"{states} states x {width} lattice cells exceed cap {memory_cap}")
    p = chain.transition
    edges = [(u, v, int(k[u, v]) - lo_step, p[u, v])
             for u in range(states) for v in range(states) if adm[u, v] and p[u, v] > 0]
    dist = np.zeros((states, width))
    dist[:, 0] = chain.stationary
    pruned = 0.0
    top = 0  # highest occupied offset
    for _ in range(n):
        new = np.zeros_like(dist)
        for u, v, shift, w in edges:
            new[v, shift:shift + top + 1] += w * dist[u, :top + 1]
        top += hi_step - lo_step
        dist = new
        if prune > 0.0:
            mask = dist < prune
            pruned += float(dist[mask].sum())
            dist[mask] = 0.0
    probs = dist.sum(axis=0)
    support = np.arange(width, dtype=np.int64) + n * lo_step
    keep = probs > 0
    support, probs = support[keep], probs[keep]
    x = support / spec.q
    m = float(probs @ x)
    var = float(probs @ (x - m) ** 2)
    return ExactDistribution(n, spec.q, support, probs, m, var, pruned)


def ks_vs_gaussian(dist: ExactDistribution, mean_rate: float, sigma: float) -> float:
    """Sup distance between the CDF of ``(S_n - n mean_rate) / (sigma sqrt n)`` and the normal CDF.

    Checked on both sides of every atom, which is where the supremum of a
    step function against a continuous CDF is attained.
    """
    if not sigma > 0:
        raise DegenerateSigma(f"sigma must be positive, got {sigma!r}")
    z = (dist.values - dist.n * mean_rate) / (sigma * math.sqrt(dist.n))
    upper = np.cumsum(dist.probs)
    lower = upper - dist.probs
    phi = norm.cdf(z)
    return float(max(np.max(np.abs(upper - phi)), np.max(np.abs(lower - phi))))


def local_limit_check(dist: ExactDistribution, sigma: float, mean_rate: float | None = None,
                      window: float = 3.0) -> float:
    """Max deviation of the rescaled atom masses from the Gaussian profile.

    Compares ``sigma sqrt(2 pi n) P(S_n = x) / step`` with
    ``exp(-(x - n mean)^2 / (2 sigma^2 n))`` over atoms within ``window``
    standard deviations of the mean; ``step`` is the lattice span of ``S_n``.
    """
    if not sigma > 0:
        raise DegenerateSigma(f"sigma must be positive, got {sigma!r}")
    n = dist.n
    if mean_rate is None:
        mean_rate = dist.mean / n
    step = dist.span / dist.q
    sd = sigma * math.sqrt(n)
    x = dist.values
    central = np.abs(x - n * mean_rate) <= window * sd
    if not central.any():
        return float("inf")
    scaled = sd * math.sqrt(2 * math.pi) * dist.probs[central] / step
    gauss = np.exp(-((x[central] - n * mean_rate) ** 2) / (2 * sd * sd))
    return float(np.max(np.abs(scaled - gauss)))


def interval_prob(dist: ExactDistribution, a: float, eps: float) -> float:
    """``P(|S_n / n - a| <= eps)``."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    avg = dist.values / dist.n
    inside = np.abs(avg - a) <= eps + 1e-12
    return float(dist.probs[inside].sum())


def distribution_csv_rows(dist: ExactDistribution):
    for k, p in zip(dist.support, dist.probs):
        yield int(k), k / dist.q, float(p)

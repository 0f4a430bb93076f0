"""Seeded Monte Carlo sampling of Gibbs chains.

Chain ``k`` of an experiment with root seed ``s`` draws from
``numpy.random.Generator(PCG64(SeedSequence(s, spawn_key=(k,))))``. Each
orbit of length ``n`` consumes exactly ``n`` uniforms: the first picks the
initial state from the stationary law, the rest drive the transitions by
inverse-CDF lookup. A single orbit drawn with ``sample_orbit`` therefore
matches the same chain index inside a batch.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy.stats import kstest

from .errors import DegenerateSigma, ValidationError
from .spectral import GibbsChain

GENERATOR_ID = f"numpy-{np.__version__}/PCG64/SeedSequence(root_seed, spawn_key=(chain,))"


@dataclass(frozen=True)
class SampleConfig:
    root_seed: int
    chains: int
    length: int
    burn_in: int = 0

    def __post_init__(self):
        if self.chains < 1 or self.length < 1:
            raise ValidationError("need chains >= 1 and length >= 1")
        if self.burn_in < 0:
            raise ValidationError("burn_in must be >= 0")


def chain_generator(root_seed: int, chain: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(int(root_seed) & (2**64 - 1), spawn_key=(int(chain),))
    return np.random.Generator(np.random.PCG64(seq))


def _cumulative(chain: GibbsChain):
    p = chain.transition
    cum = np.cumsum(p, axis=1)
    cum /= cum[:, -1:]
    # past the last reachable successor the CDF is exactly 1, so u < 1 never lands on a zero-probability state
    for u in range(p.shape[0]):
        last = np.flatnonzero(p[u] > 0)[-1]
        cum[u, last:] = 1.0
    start = np.cumsum(chain.stationary)
    start /= start[-1]
    start[np.flatnonzero(chain.stationary > 0)[-1]:] = 1.0
    return start, cum


def _run_single(start, cum, u) -> np.ndarray:
    # plain-Python loop: per-step numpy calls dominate for a single long orbit
    rows = [list(r) for r in cum]
    us = u.tolist()
    x = bisect_right(list(start), us[0])
    out = [x]
    for v in us[1:]:
        x = bisect_right(rows[x], v)
        out.append(x)
    return np.asarray(out, dtype=np.int64)


def _run(chain: GibbsChain, uniforms: np.ndarray) -> np.ndarray:
    """States for a ``(K, n)`` block of uniforms."""
    start, cum = _cumulative(chain)
    k, n = uniforms.shape
    if k == 1:
        return _run_single(start, cum, uniforms[0])[None, :]
    out = np.empty((k, n), dtype=np.int64)
    out[:, 0] = np.searchsorted(start, uniforms[:, 0], side="right")
    for j in range(1, n):
        out[:, j] = (cum[out[:, j - 1]] <= uniforms[:, j, None]).sum(axis=1)
    return out


def sample_orbit(chain: GibbsChain, n: int, seed: int, chain_index: int = 0) -> np.ndarray:
    """Admissible state sequence of length ``n`` started from the stationary law."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    u = chain_generator(seed, chain_index).random(n)
    return _run(chain, u[None, :])[0]


def sample_orbits(chain: GibbsChain, config: SampleConfig) -> np.ndarray:
    """``(chains, length + burn_in)`` array; row ``k`` is chain ``k`` of ``config.root_seed``."""
    n = config.length + config.burn_in
    u = np.stack([chain_generator(config.root_seed, k).random(n) for k in range(config.chains)])
    return _run(chain, u)[:, config.burn_in:]


def birkhoff_sums(orbits: np.ndarray, g_edge: np.ndarray) -> np.ndarray:
    """``S_n`` along each row; a row of ``n + 1`` states carries ``n`` transitions."""
    return g_edge[orbits[:, :-1], orbits[:, 1:]].sum(axis=1)


@dataclass(frozen=True)
class EmpiricalCltReport:
    z_scores: np.ndarray
    ks_stat: float
    mean: float
    var: float
    config: SampleConfig
    generator: str = GENERATOR_ID

    def to_json(self) -> dict:
        return {"ks_stat": self.ks_stat, "mean": self.mean, "var": self.var,
                "chains": self.config.chains, "n": self.config.length,
                "seed": self.config.root_seed, "generator": self.generator}


def empirical_clt(chain: GibbsChain, g_edge: np.ndarray, config: SampleConfig,
                  sigma: float, mean_rate: float) -> EmpiricalCltReport:
    """z-scores ``(S_n g - n mean) / (sigma sqrt n)`` of ``config.chains`` orbits.

    ``config.length`` is the number of summed terms; each orbit is sampled
    with one extra state so range-2 observables are defined on every term.
    """
    if not sigma > 0:
        raise DegenerateSigma(f"sigma must be positive, got {sigma!r}")
    n = config.length
    cfg = SampleConfig(config.root_seed, config.chains, n + 1, config.burn_in)
    s = birkhoff_sums(sample_orbits(chain, cfg), g_edge)
    z = (s - n * mean_rate) / (sigma * math.sqrt(n))
    ks = float(kstest(z, "norm").statistic)
    return EmpiricalCltReport(z, ks, float(z.mean()), float(z.var()), config)


def lil_diagnostic(chain: GibbsChain, g_edge: np.ndarray, n: int, seed: int,
                   sigma: float, mean_rate: float) -> float:
    """``max_{100 <= k <= n} |S_k - k mean| / (sigma sqrt(2 k log log k))`` along one orbit.

    Diagnostic only; nothing downstream asserts on it.
    """
    if n < 100:
        raise ValidationError("n must be >= 100")
    orbit = sample_orbit(chain, n + 1, seed)
    incr = g_edge[orbit[:-1], orbit[1:]] - mean_rate
    s = np.cumsum(incr)
    k = np.arange(1, n + 1)
    sel = k >= 100
    ratio = np.abs(s[sel]) / (sigma * np.sqrt(2 * k[sel] * np.log(np.log(k[sel]))))
    return float(ratio.max())


@dataclass(frozen=True)
class DeviationReport:
    n: int
    t: tuple
    frequencies: tuple
    envelope_c: float
    chains: int
    seed: int
    generator: str = GENERATOR_ID

    def rows(self):
        return list(zip(self.t, self.frequencies))


def deviation_frequencies(chain: GibbsChain, g_edge: np.ndarray, n: int, t_list, chains: int,
                          seed: int, mean_rate: float) -> DeviationReport:
    """Empirical ``P(|S_n - n mean| >= t sqrt n)`` and the largest ``c`` with
    every frequency below ``2 exp(-c t^2)``.
    """
    if chains < 1000:
        raise ValidationError("need at least 1000 chains")
    cfg = SampleConfig(seed, chains, n + 1)
    s = birkhoff_sums(sample_orbits(chain, cfg), g_edge)
    dev = np.abs(s - n * mean_rate) / math.sqrt(n)
    ts = tuple(float(t) for t in t_list)
    freqs = tuple(float(np.mean(dev >= t)) for t in ts)
    bounds = [math.log(2.0 / f) / (t * t) for t, f in zip(ts, freqs) if t > 0 and f > 0]
    c = min(bounds) if bounds else float("inf")
    return DeviationReport(n, ts, freqs, c, chains, seed)

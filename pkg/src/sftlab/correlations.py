"""Exact correlations, mixing coefficients and the asymptotic variance.

Observables are block functions of range at most 2, i.e. functions of one
transition ``x_k -> x_{k+1}`` of the Gibbs chain. For range-1 observables
this is the usual ``g(x_k)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DepthTooLarge, SolveFailure, ValidationError
from .observables import LocallyConstantFn, edge_values
from .sft import enumerate_words
from .spectral import RpfData, gibbs_chain, normalized_operator, pressure

NOISE_FLOOR = 1e-14


def _edge(rpf: RpfData, f: LocallyConstantFn) -> np.ndarray:
    if f.sft is not rpf.system.block_sft:
        raise ValidationError("observable must live on the block system of the Perron data")
    return edge_values(f)


def mean(rpf: RpfData, f: LocallyConstantFn) -> float:
    chain = gibbs_chain(rpf)
    g = _edge(rpf, f)
    return float(chain.stationary @ (chain.transition * g).sum(axis=1))


@dataclass(frozen=True)
class CorrelationSeq:
    """``values[k] = C_k``; ``|C_k| <= prefactor * rate**k`` for ``k >= k0``.

    The bound is fitted on terms above the ``1e-14`` noise floor; terms below
    it are treated as zero.
    """

    values: np.ndarray
    fitted_rate: float
    fitted_prefactor: float
    k0: int


def _fit_rate(values: np.ndarray, n_max: int):
    # fit on [ceil(n_max/4), first noise-level term); if the sequence hits the
    # noise floor before that, fall back to the window starting at lag 1
    def window(start):
        ks = []
        for k in range(start, len(values)):
            if abs(values[k]) < NOISE_FLOOR:
                break
            ks.append(k)
        return ks

    k0 = math.ceil(n_max / 4)
    ks = window(k0)
    if len(ks) < 2:
        k0 = 1
        ks = window(1)
    if len(ks) < 2:
        # correlations vanish (up to noise) from lag 1 on
        return 0.0, float(abs(values[0])), 1
    ks = np.asarray(ks)
    # fit the upper envelope max_{j >= k} |C_j|; complex subdominant
    # eigenvalues make |C_k| itself oscillate
    env = np.maximum.accumulate(np.abs(values[ks])[::-1])[::-1]
    slope, _ = np.polyfit(ks, np.log(env), 1)
    rate = float(min(np.exp(slope), 1.0 - 1e-15))
    pref = float(np.max(np.abs(values[ks]) / rate ** ks))
    return rate, pref, k0


def _correlation_values(chain, g: np.ndarray, h: np.ndarray, n_max: int) -> np.ndarray:
    p, pi = chain.transition, chain.stationary
    pg = p * g
    mg = pi @ pg.sum(axis=1)
    mh = pi @ (p * h).sum(axis=1)
    out = np.empty(n_max + 1)
    out[0] = pi @ (pg * h).sum(axis=1) - mg * mh
    # centred vectors: the weight on x_1 after reading g on x_0 -> x_1, and
    # E[h(x_k, x_{k+1}) | x_k]; keeping them centred avoids cancellation
    a = pi @ pg - mg * pi
    b = (p * h).sum(axis=1) - mh
    for k in range(1, n_max + 1):
        out[k] = a @ b
        a = a @ p
    return out


def correlation_sequence(rpf: RpfData, g: LocallyConstantFn, h: LocallyConstantFn,
                         n_max: int) -> CorrelationSeq:
    """``C_k = E[g(x_0..) h(x_k..)] - mu(g) mu(h)`` for ``k = 0 .. n_max``."""
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    vals = _correlation_values(gibbs_chain(rpf), _edge(rpf, g), _edge(rpf, h), n_max)
    rate, pref, k0 = _fit_rate(vals, n_max)
    return CorrelationSeq(vals, rate, pref, k0)


def correlation_via_transfer(rpf: RpfData, g: LocallyConstantFn, h: LocallyConstantFn,
                             k: int) -> float:
    """``int (Q^k g) h dmu - mu(g) mu(h)`` through the normalised transfer operator.

    Duality with the forward chain makes this equal ``C_k(g, h)``. Range-1
    observables only.
    """
    if g.range != 1 or h.range != 1:
        raise ValidationError("transfer-operator route needs range-1 observables")
    n = rpf.system.n_blocks
    gv = np.array([g.values[(u,)] for u in range(n)])
    hv = np.array([h.values[(u,)] for u in range(n)])
    q = normalized_operator(rpf)
    x = gv.copy()
    for _ in range(k):
        x = q @ x
    return float(rpf.mu @ (x * hv) - (rpf.mu @ gv) * (rpf.mu @ hv))


@dataclass(frozen=True)
class VarianceReport:
    corr_sum: float
    pressure_fd: float
    resolvent: float
    dp_slope: Optional[float]
    consensus: float
    max_discrepancy: float
    terms: int = 0
    notes: tuple = field(default_factory=tuple)

    def routes(self) -> dict:
        out = {"corr_sum": self.corr_sum, "pressure_fd": self.pressure_fd,
               "resolvent": self.resolvent}
        if self.dp_slope is not None:
            out["dp_slope"] = self.dp_slope
        return out

    def to_json(self) -> dict:
        d = self.routes()
        d.update(dp_slope=self.dp_slope, consensus=self.consensus,
                 max_discrepancy=self.max_discrepancy, terms=self.terms, notes=list(self.notes))
        return d


RESOLVENT_NOTE = ("resolvent route uses 2<g,(I-Q+Pi)^-1 g> - mu(g^2), the form consistent with "
                  "the correlation-sum formula; the single-term display <g,(I-Q+Pi)^-1 g> "
                  "equals (sigma^2 + C_0)/2")


def _corr_sum(chain, g: np.ndarray, theta: float, tol=1e-12, max_terms=10**6):
    p, pi = chain.transition, chain.stationary
    vals = _correlation_values(chain, g, g, 0)
    total = vals[0]
    pg = p * g
    m = pi @ pg.sum(axis=1)
    a = pi @ pg - m * pi
    b = pg.sum(axis=1) - m
    rate = min(max(theta, 1e-3), 1.0 - 1e-9)
    bmax = np.max(np.abs(b))
    k = 0
    for k in range(1, max_terms):
        total += 2.0 * (a @ b)
        a = a @ p
        # |C_j| <= ||a_j||_1 * max|b|, and a_j contracts at ~rate
        if 2.0 * np.abs(a).sum() * bmax / (1.0 - rate) < tol:
            break
    return float(total), k


def _resolvent(chain, g: np.ndarray):
    p, pi = chain.transition, chain.stationary
    n = p.shape[0]
    m = pi @ (p * g).sum(axis=1)
    gc = np.where(p > 0, g - m, 0.0)
    c0 = pi @ (p * gc * gc).sum(axis=1)
    a = pi @ (p * gc)
    b = (p * gc).sum(axis=1)
    mat = np.eye(n) - p + np.outer(np.ones(n), pi)
    if np.linalg.cond(mat) > 1e12:
        raise SolveFailure("I - P + Pi is numerically singular; the chain is not mixing")
    x = np.linalg.solve(mat, b)
    return float(c0 + 2.0 * a @ x)


def _pressure_fd(rpf: RpfData, g: LocallyConstantFn, steps=(1e-3, 5e-4)):
    system = rpf.system
    phi = rpf.transfer.potential
    p0 = rpf.pressure

    def second(h):
        return (pressure(system, phi + h * g) - 2 * p0 + pressure(system, phi - h * g)) / (h * h)

    h1, h2 = steps
    d1, d2 = second(h1), second(h2)
    r = (h1 / h2) ** 2
    return float((r * d2 - d1) / (r - 1.0))


def _dp_slope(rpf: RpfData, g: LocallyConstantFn):
    from .errors import CapabilityError
    from .exact import exact_dist, lattice_check

    try:
        spec = lattice_check(g)
    except CapabilityError:
        return None
    theta = max(rpf.theta1, 1e-3)
    n1 = int(min(max(math.ceil(math.log(1e-13) / math.log(theta)), 64), 4000))
    chain = gibbs_chain(rpf)
    try:
        v1 = exact_dist(chain, spec, n1).variance
        v2 = exact_dist(chain, spec, 2 * n1).variance
    except CapabilityError:
        return None
    return float((v2 - v1) / n1)


def variance(rpf: RpfData, g: LocallyConstantFn, with_dp: bool = True) -> VarianceReport:
    """Asymptotic variance of ``S_n g`` by four independent routes.

    ``corr_sum`` sums the exact correlation series, ``pressure_fd`` is a
    Richardson-extrapolated second difference of ``t -> P(phi + t g)``,
    ``resolvent`` solves one linear system, and ``dp_slope`` (lattice
    observables only) is the increment of ``Var(S_n)`` between two horizons of
    the exact distribution.
    """
    chain = gibbs_chain(rpf)
    ge = _edge(rpf, g)
    corr, terms = _corr_sum(chain, ge, rpf.theta1)
    fd = _pressure_fd(rpf, g)
    res = _resolvent(chain, ge)
    dp = _dp_slope(rpf, g) if with_dp else None
    routes = [corr, fd, res] + ([dp] if dp is not None else [])
    # a variance cannot be negative; clamp roundoff on coboundaries
    routes = [max(r, 0.0) for r in routes]
    corr, fd, res = routes[:3]
    if dp is not None:
        dp = routes[3]
    spread = max(abs(x - y) for x, y in itertools.combinations(routes, 2))
    return VarianceReport(corr, fd, res, dp, float(np.mean(routes)), float(spread), terms,
                          (RESOLVENT_NOTE,))


def multiple_correlation(rpf: RpfData, g_list: Sequence[LocallyConstantFn],
                         times: Sequence[int]) -> float:
    """``E[prod_j g_j(x_{n_j}..)] - prod_j mu(g_j)`` for ``0 = n_0 < n_1 < ...``."""
    if len(g_list) != len(times) or not g_list:
        raise ValidationError("need one time per observable")
    if times[0] != 0 or any(b <= a for a, b in zip(times, times[1:])):
        raise ValidationError("times must start at 0 and increase strictly")
    chain = gibbs_chain(rpf)
    p, pi = chain.transition, chain.stationary
    edges = [_edge(rpf, f) for f in g_list]
    w = pi @ (p * edges[0])
    for prev, t, ge in zip(times, times[1:], edges[1:]):
        for _ in range(t - prev - 1):
            w = w @ p
        w = w @ (p * ge)
    prod_means = math.prod(float(pi @ (p * ge).sum(axis=1)) for ge in edges)
    return float(w.sum() - prod_means)


@dataclass(frozen=True)
class MixingCoefficient:
    alpha: float
    exact: bool
    atoms: int


def _joint_cylinders(rpf: RpfData, depth: int, n: int, words):
    chain = gibbs_chain(rpf)
    p = chain.transition
    idx = {w: i for i, w in enumerate(words)}
    m = len(words)
    joint = np.zeros((m, m))
    if n >= depth:
        gap = np.linalg.matrix_power(p, n - depth + 1)
        meas = np.array([chain.cylinder_measure(w) for w in words])
        # tail weight of b given its first symbol
        tail = np.array([chain.cylinder_measure(w) / chain.stationary[w[0]] for w in words])
        for i, a in enumerate(words):
            joint[i] = meas[i] * gap[a[-1], [b[0] for b in words]] * tail
    else:
        bsft = rpf.system.block_sft
        for w in enumerate_words(bsft, n + depth):
            joint[idx[w[:depth]], idx[w[n:n + depth]]] += chain.cylinder_measure(w)
    return joint


def mixing_coefficient(rpf: RpfData, depth: int, n: int, exact_limit: int = 12,
                       atom_cap: int = 4096) -> MixingCoefficient:
    """Strong mixing coefficient between depth-``depth`` cylinders at lag ``n``.

    Exact (subset enumeration) for at most ``exact_limit`` atoms, otherwise
    the upper bound ``(1/2) sum |mu(a & shift^-n b) - mu(a) mu(b)|``.
    """
    if depth < 1 or n < 0:
        raise ValidationError("need depth >= 1 and n >= 0")
    bsft = rpf.system.block_sft
    m = bsft.word_count(depth)
    if m > atom_cap:
        raise DepthTooLarge(f"{m} atoms at depth {depth} exceed cap {atom_cap}")
    words = enumerate_words(bsft, depth)
    joint = _joint_cylinders(rpf, depth, n, words)
    meas = joint.sum(axis=1)
    d = joint - np.outer(meas, joint.sum(axis=0))
    if m > exact_limit:
        return MixingCoefficient(float(0.5 * np.abs(d).sum()), False, m)
    best = 0.0
    # for fixed A the best B collects every column of one sign
    for mask in range(1, 1 << m):
        rows = [i for i in range(m) if mask >> i & 1]
        col = d[rows].sum(axis=0)
        best = max(best, col[col > 0].sum(), -col[col < 0].sum())
    return MixingCoefficient(float(best), True, m)

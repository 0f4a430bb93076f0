"""Cumulant curves, Legendre rate functions and level-2 rates.

``Lambda(t) = P(phi + t g) - P(phi)`` and ``I(a) = sup_t (t a - Lambda(t))``.
The derivative ``Lambda'(t)`` is the mean of ``g`` under the equilibrium
state of the tilted potential ``phi + t g``; the Legendre maximiser ``t*``
solves ``Lambda'(t*) = a`` by bracketing on the monotone derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import OutOfDomain, UnsupportedTransition, ValidationError, ZeroProbability
from .exact import ExactDistribution, interval_prob
from .observables import BlockSystem, LocallyConstantFn, edge_values
from .spectral import RpfData, gibbs_chain, solve

T_TOL = 1e-10


def tilted(system: BlockSystem, phi: LocallyConstantFn, g: LocallyConstantFn, t: float) -> RpfData:
    return solve(system, phi + t * g)


def tilted_mean(rpf: RpfData, g_edge: np.ndarray) -> float:
    chain = gibbs_chain(rpf)
    return float(chain.stationary @ (chain.transition * g_edge).sum(axis=1))


@dataclass(frozen=True)
class RatePoint:
    a: float
    value: float
    t_star: float


class RateFunction:
    """Legendre transform of the cumulant curve of ``g`` under ``phi``.

    Calling the object returns ``I(a)``, with ``inf`` outside the achievable
    interval ``domain``; :meth:`solve` raises :class:`OutOfDomain` there instead.
    """

    def __init__(self, system: BlockSystem, phi: LocallyConstantFn, g: LocallyConstantFn,
                 t_max: float, grid: int):
        if not t_max > 0:
            raise ValidationError("t_max must be positive")
        if grid < 33:
            raise ValidationError("grid must be >= 33")
        self.system = system
        self.phi = phi
        self.g = g
        self.t_max = float(t_max)
        self._g_edge = edge_values(g)
        self._p0 = solve(system, phi).pressure
        ts = np.linspace(-t_max, t_max, grid)
        self.cumulant = tuple((float(t), *self._point(float(t))) for t in ts)
        self.mean = self._point(0.0)[1]
        self.domain = (self.cumulant[0][2], self.cumulant[-1][2])

    def _point(self, t: float):
        if t == 0.0:
            rpf = solve(self.system, self.phi)
            return 0.0, tilted_mean(rpf, self._g_edge)
        rpf = tilted(self.system, self.phi, self.g, t)
        return rpf.pressure - self._p0, tilted_mean(rpf, self._g_edge)

    def cgf(self, t: float) -> float:
        return self._point(float(t))[0]

    def cgf_derivative(self, t: float) -> float:
        return self._point(float(t))[1]

    def t_star(self, a: float) -> float:
        lo, hi = self.domain
        if not lo <= a <= hi:
            raise OutOfDomain(a, self.domain)
        if a == self.mean:
            return 0.0
        if a == lo:
            return -self.t_max
        if a == hi:
            return self.t_max
        # bracket from the grid, then refine
        ts = [c[0] for c in self.cumulant]
        ds = [c[2] for c in self.cumulant]
        i = int(np.searchsorted(ds, a))
        left, right = ts[max(i - 1, 0)], ts[min(i, len(ts) - 1)]
        if left == right:
            return left
        return brentq(lambda t: self.cgf_derivative(t) - a, left, right, xtol=T_TOL, rtol=1e-15)

    def solve(self, a: float) -> RatePoint:
        a = float(a)
        t = self.t_star(a)
        if t == 0.0:
            return RatePoint(a, 0.0, 0.0)
        return RatePoint(a, t * a - self.cgf(t), t)

    def __call__(self, a: float) -> float:
        try:
            return self.solve(a).value
        except OutOfDomain:
            return math.inf

    def inf_over(self, lo: float, hi: float) -> float:
        """Infimum of ``I`` over ``[lo, hi]`` (convexity puts it at the point nearest the mean)."""
        if lo <= self.mean <= hi:
            return 0.0
        return self(hi if hi < self.mean else lo)

    def curve_rows(self, n_points: int = 101):
        lo, hi = self.domain
        for a in np.linspace(lo, hi, n_points)[1:-1]:
            p = self.solve(float(a))
            yield p.a, p.value, p.t_star


def build_rate_function(system: BlockSystem, phi: LocallyConstantFn, g: LocallyConstantFn,
                        t_max: float = 8.0, grid: int = 129) -> RateFunction:
    return RateFunction(system, phi, g, t_max, grid)


@dataclass(frozen=True)
class TailRow:
    n: int
    empirical_rate: float
    rate_inf: float


def ldp_tail_compare(rate: RateFunction, dists: Sequence[ExactDistribution], a: float,
                     eps: float) -> list[TailRow]:
    """``-(1/n) log P(|S_n/n - a| <= eps)`` per horizon against ``inf I`` on the window."""
    target = rate.inf_over(a - eps, a + eps)
    rows = []
    for d in dists:
        p = interval_prob(d, a, eps)
        if p <= 0.0:
            raise ZeroProbability(f"window [{a - eps}, {a + eps}] carries no mass at n={d.n}")
        rows.append(TailRow(d.n, -math.log(p) / d.n, target))
    return rows


@dataclass(frozen=True, eq=False)
class MarkovMeasureSpec:
    transition: np.ndarray
    stationary: np.ndarray


def markov_measure(transition) -> MarkovMeasureSpec:
    p = np.asarray(transition, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError("transition matrix must be square")
    if (p < 0).any() or np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-12:
        raise ValidationError("transition matrix must be row-stochastic")
    n = p.shape[0]
    mat = np.vstack([p.T - np.eye(n), np.ones(n)])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return MarkovMeasureSpec(p, pi / pi.sum())


def entropy_rate(m: MarkovMeasureSpec) -> float:
    p = m.transition
    logs = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(-(m.stationary @ (p * logs).sum(axis=1)))


def level2_rate(rpf: RpfData, candidate: MarkovMeasureSpec, phi: LocallyConstantFn | None = None) -> float:
    """``P(phi) - h(nu) - int phi dnu`` for a Markov candidate ``nu`` on the block graph."""
    if phi is None:
        phi = rpf.transfer.potential
    a = rpf.system.block_sft.transitions
    if candidate.transition.shape != a.shape:
        raise ValidationError("candidate lives on a different state space")
    bad = np.argwhere((candidate.transition > 0) & (a == 0))
    if bad.size:
        u, v = bad[0]
        raise UnsupportedTransition(f"candidate uses inadmissible transition {u}->{v}")
    p = candidate.transition
    integral = float(candidate.stationary @ (p * edge_values(phi)).sum(axis=1))
    return rpf.pressure - entropy_rate(candidate) - integral


def contract_rate(system: BlockSystem, phi: LocallyConstantFn, g: LocallyConstantFn, a: float,
                  method: str = "tilt", rate: RateFunction | None = None,
                  t_max: float = 8.0) -> float:
    """Infimum of the level-2 rate over Markov measures with ``int g = a``.

    ``method="tilt"`` evaluates the level-2 rate at the Gibbs chain of
    ``phi + t g`` whose mean is ``a``; ``method="direct"`` minimises over all
    transition matrices on the block graph with an equality constraint.
    """
    rpf = solve(system, phi)
    ge = edge_values(g)
    if method == "tilt":
        if rate is None:
            rate = build_rate_function(system, phi, g, t_max, 33)
        t = rate.t_star(a)
        return level2_rate(rpf, markov_measure(gibbs_chain(tilted(system, phi, g, t)).transition), phi)
    if method == "direct":
        return _contract_direct(rpf, phi, ge, a)
    raise ValidationError(f"unknown method {method!r}")


def _contract_direct(rpf: RpfData, phi, ge: np.ndarray, a: float) -> float:
    adm = rpf.system.block_sft.transitions > 0
    n = adm.shape[0]
    free = [(u, v) for u in range(n) for v in range(n) if adm[u, v]]

    def chain_of(x):
        logits = np.full((n, n), -np.inf)
        for (u, v), val in zip(free, x):
            logits[u, v] = val
        logits -= logits.max(axis=1, keepdims=True)
        w = np.exp(logits)
        return markov_measure(w / w.sum(axis=1, keepdims=True))

    def objective(x):
        return level2_rate(rpf, chain_of(x), phi)

    def constraint(x):
        m = chain_of(x)
        return float(m.stationary @ (m.transition * ge).sum(axis=1)) - a

    x0 = np.log(gibbs_chain(rpf).transition[adm])
    res = minimize(objective, x0, method="SLSQP",
                   constraints=[{"type": "eq", "fun": constraint}],
                   options={"ftol": 1e-14, "maxiter": 1000})
    if abs(constraint(res.x)) > 1e-8:
        raise OutOfDomain(a, (float("nan"), float("nan")))
    return float(res.fun)

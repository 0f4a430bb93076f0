"""Coboundary detection for locally constant observables.

For a function of range at most 2 on a block graph, ``g - c`` is a
coboundary ``u o shift - u`` exactly when every cycle of the graph has
centred sum zero. The test integrates ``g - c`` along an out-arborescence
from block 0, which gives the candidate transfer function, and reads the
residual on the remaining edges. Reported cycles close each non-tree edge
with tree paths (out-tree to reach it, in-tree to return), and those closed
walks span the cycle space.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .correlations import variance
from .observables import BlockSystem, LocallyConstantFn, edge_values
from .sft import PeriodicOrbit, format_word, minimal_rotation
from .spectral import gibbs_chain, solve

ZERO_TOL = 1e-8
GRAY_TOL = 1e-6
SIGMA2_TOL = 1e-6


@dataclass(frozen=True)
class CycleSum:
    orbit: PeriodicOrbit
    centred_sum: float


@dataclass(frozen=True, eq=False)
class ObstructionReport:
    cycles: tuple
    max_abs: float
    status: str  # "coboundary", "obstructed" or "indeterminate"
    mean: float
    transfer: Optional[np.ndarray]
    transfer_residual: Optional[float]

    @property
    def is_coboundary(self) -> Optional[bool]:
        return {"coboundary": True, "obstructed": False}.get(self.status)

    def to_json(self, system: BlockSystem) -> dict:
        n = system.block_sft.alphabet_size
        return {
            "mean": self.mean,
            "max_abs": self.max_abs,
            "status": self.status,
            "is_coboundary": self.is_coboundary,
            "cycles": [{"word": format_word(c.orbit.word, n), "period": c.orbit.period,
                        "centred_sum": c.centred_sum} for c in self.cycles],
            "transfer": None if self.transfer is None else self.transfer.tolist(),
            "transfer_residual": self.transfer_residual,
        }


def _bfs_tree(adj: np.ndarray, root: int):
    parent = {root: None}
    order = [root]
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in np.flatnonzero(adj[x]):
            y = int(y)
            if y not in parent:
                parent[y] = x
                order.append(y)
                queue.append(y)
    return parent, order


def _path_from_root(parent, x):
    path = [x]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def cycle_obstructions(system: BlockSystem, g: LocallyConstantFn,
                       mean: float | None = None) -> ObstructionReport:
    """Cycle-sum test of whether ``g - mean`` is a coboundary on the block graph.

    ``mean`` defaults to the mean of ``g`` under the measure of maximal entropy.
    """
    bsft = system.block_sft
    adj = bsft.transitions > 0
    n = adj.shape[0]
    ge = edge_values(g)
    if mean is None:
        mean = _mean(system, g)
    gc = np.where(adj, ge - mean, 0.0)

    out_parent, order = _bfs_tree(adj, 0)
    in_parent, _ = _bfs_tree(adj.T, 0)
    u = np.zeros(n)
    for y in order[1:]:
        x = out_parent[y]
        u[y] = u[x] + gc[x, y]

    cycles = []
    for x in range(n):
        for y in range(n):
            if not adj[x, y] or out_parent.get(y) == x:
                continue
            if x == y:
                walk = [x]
            else:
                back = _path_from_root(in_parent, y)[::-1]  # y -> ... -> 0 along in-tree edges
                # vertex cycle 0 -> .. -> x -> y -> .. -> back to 0
                walk = _path_from_root(out_parent, x) + back[:-1]
            s = sum(gc[a, b] for a, b in zip(walk, walk[1:] + walk[:1]))
            cycles.append(CycleSum(PeriodicOrbit(minimal_rotation(tuple(walk))), float(s)))
    cycles.sort(key=lambda c: (c.orbit.period, c.orbit.word))
    max_abs = max((abs(c.centred_sum) for c in cycles), default=0.0)

    if max_abs <= ZERO_TOL:
        resid = float(np.max(np.abs(np.where(adj, gc - (u[None, :] - u[:, None]), 0.0))))
        return ObstructionReport(tuple(cycles), max_abs, "coboundary", float(mean), u, resid)
    status = "indeterminate" if max_abs < GRAY_TOL else "obstructed"
    return ObstructionReport(tuple(cycles), max_abs, status, float(mean), None, None)


def _mean(system: BlockSystem, g: LocallyConstantFn) -> float:
    zero = LocallyConstantFn.constant(system.block_sft, 0.0)
    chain = gibbs_chain(solve(system, zero))
    return float(chain.stationary @ (chain.transition * edge_values(g)).sum(axis=1))


@dataclass(frozen=True)
class ZeroVarianceResult:
    sigma2: float
    is_coboundary: Optional[bool]
    consistent: bool


class InconsistentClassification(AssertionError):
    pass


def zero_variance_classify(system: BlockSystem, phi: LocallyConstantFn, g: LocallyConstantFn,
                           strict: bool = True) -> ZeroVarianceResult:
    """Compare the variance test with the cycle-sum test.

    With ``strict`` an inconsistent pair raises instead of being returned.
    """
    rpf = solve(system, phi)
    chain = gibbs_chain(rpf)
    mean = float(chain.stationary @ (chain.transition * edge_values(g)).sum(axis=1))
    sigma2 = variance(rpf, g, with_dp=False).consensus
    report = cycle_obstructions(system, g, mean)
    consistent = report.is_coboundary is not None and (sigma2 <= SIGMA2_TOL) == report.is_coboundary
    if strict and not consistent:
        raise InconsistentClassification(
            f"sigma^2={sigma2:.3g} but cycle test says {report.status} (max |sum|={report.max_abs:.3g})")
    return ZeroVarianceResult(sigma2, report.is_coboundary, consistent)

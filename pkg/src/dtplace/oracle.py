"""Exhaustive enumeration for tiny instances; ground truth for the heuristics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import Placement, evaluate
from .domain import Instance
from .errors import SizeCapExceeded
from .saa import SaaParams, SampleSet, allowed_overloads, is_feasible, overload_profile

DEFAULT_SIZE_CAP = 2_000_000


@dataclass(frozen=True)
class OracleResult:
    optimum: float | None  # None when no placement is feasible
    argmin: Placement | None
    states_enumerated: int

    @property
    def feasible(self) -> bool:
        return self.optimum is not None


def exact_solve(
    inst: Instance,
    samples: SampleSet,
    params: SaaParams,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> OracleResult:
    """Enumerate every placement; minimal-cost feasible one, first on ties.

    Enumeration walks assignments in lexicographic order over the flat
    component sequence with incremental cost and load updates; the reported
    optimum is recomputed from scratch for the winning placement.
    """
    S, K = inst.num_servers, inst.total_components
    total_states = S**K
    if total_states > size_cap:
        raise SizeCapExceeded(
            f"{S}^{K} = {total_states} placements exceeds the size cap {size_cap}"
        )

    r = inst.unit_transport_cost
    e = inst.dist_server_device
    l_ss = inst.dist_server_server
    g = inst.exchange_matrix
    h = inst.component_offload_kb
    m = inst.cost_rates
    cap = inst.capacities
    cyc = samples.cycles
    budget = allowed_overloads(params)
    # Siblings with a smaller flat index: each unordered pair is charged
    # twice (ordered-pair convention) when its second member is assigned.
    prev_sib = [np.nonzero(inst.sibling_mask[k][:k])[0] for k in range(K)]

    assignment = np.zeros(K, dtype=np.int64)
    load = np.zeros((S, samples.theta))
    counts = np.zeros(S, dtype=np.int64)
    over = 0  # servers currently above the overload budget
    best_cost = np.inf
    best_assignment: np.ndarray | None = None

    def recurse(k: int, cost: float) -> None:
        nonlocal over, best_cost, best_assignment
        if k == K:
            if over == 0 and cost < best_cost:
                best_cost = cost
                best_assignment = assignment.copy()
            return
        d = int(inst.component_device[k])
        sib = prev_sib[k]
        for s in range(S):
            assignment[k] = s
            delta = r * h[k] * e[s, d]
            if sib.size:
                delta += 2.0 * r * float(g[k, sib] @ l_ss[s, assignment[sib]])
            saved_row = load[s].copy()
            saved_count = int(counts[s])
            load[s] = saved_row + m[s] * cyc[k]
            counts[s] = (load[s] > cap[s]).sum()
            over_delta = int(counts[s] > budget) - int(saved_count > budget)
            over += over_delta
            recurse(k + 1, cost + delta)
            load[s] = saved_row
            counts[s] = saved_count
            over -= over_delta
        assignment[k] = 0

    recurse(0, 0.0)

    if best_assignment is None:
        return OracleResult(optimum=None, argmin=None, states_enumerated=total_states)
    placement = Placement(tuple(int(s) for s in best_assignment))
    exact_cost = evaluate(inst, placement).total
    profile = overload_profile(inst, samples, placement, params)
    if not is_feasible(profile, params):
        raise RuntimeError("enumeration accepted a placement that fails the scratch check")
    return OracleResult(
        optimum=exact_cost, argmin=placement, states_enumerated=total_states
    )

"""Feasibility-preserving local search over single-component reassignments.

A search state is a complete placement plus cached cost, features, and
overload profile. The neighborhood of a state is every placement reachable
by moving exactly one component to a different server, restricted to moves
that keep every server inside its overload budget. Hillclimbing is steepest
descent with a deterministic lexicographic tie-break, so a climb is a pure
function of its inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .costs import CostBreakdown, FeatureVector, Placement, evaluate, features
from .domain import Instance
from .errors import NoFeasibleState
from .saa import OverloadProfile, SaaParams, SampleSet, allowed_overloads, load_matrix, overload_profile
from .seeding import stream


@dataclass(frozen=True, eq=False)
class SearchState:
    """A placement together with caches consistent with it."""

    placement: Placement
    eval: CostBreakdown
    features: FeatureVector
    profile: OverloadProfile


@dataclass(frozen=True)
class Trajectory:
    """Feature points of every visited state, tagged with the endpoint cost."""

    points: tuple[FeatureVector, ...]
    endpoint_value: float
    length: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "length", len(self.points))


@dataclass(frozen=True)
class SearchStats:
    states_visited: int
    neighbors_evaluated: int


class CostObjective:
    """Descend on the true placement cost."""

    def values(self, total, dist_off, dist_com):
        return total


COST = CostObjective()


def make_state(inst: Instance, samples: SampleSet, params: SaaParams, pl: Placement) -> SearchState:
    """Build a state with all caches computed from scratch."""
    return SearchState(
        placement=pl,
        eval=evaluate(inst, pl),
        features=features(inst, pl),
        profile=overload_profile(inst, samples, pl, params),
    )


@dataclass
class _MoveTables:
    """Per-candidate values for every (component, target server) move."""

    offload: np.ndarray  # (K, S) new offload cost
    communication: np.ndarray  # (K, S) new communication cost
    dist_off: np.ndarray  # (K, S)
    dist_com: np.ndarray  # (K, S)
    counts: np.ndarray  # (K, S) target server's overload count after the move
    feasible: np.ndarray  # (K, S) bool; False on the current server


class _Workspace:
    """Mutable support structure for one climb; states snapshot from scratch."""

    def __init__(self, inst: Instance, samples: SampleSet, params: SaaParams, assignment):
        self.inst = inst
        self.samples = samples
        self.params = params
        self.assignment = np.array(assignment, dtype=np.int64)
        self.allowed = allowed_overloads(params)
        self.load = load_matrix(inst, samples, self.assignment)
        self.counts = (self.load > inst.capacities[:, None]).sum(axis=1)
        self.siblings = [np.nonzero(inst.sibling_mask[k])[0] for k in range(inst.total_components)]
        self._refresh()

    def _refresh(self) -> None:
        pl = Placement(tuple(int(s) for s in self.assignment))
        cost = evaluate(self.inst, pl)
        feat = features(self.inst, pl)
        self.offload = cost.offload
        self.communication = cost.communication
        self.dist_off = feat.dist_off
        self.dist_com = feat.dist_com

    def is_feasible(self) -> bool:
        return bool((self.counts <= self.allowed).all())

    def snapshot(self) -> SearchState:
        inst = self.inst
        excess = self.load - inst.capacities[:, None]
        profile = OverloadProfile(
            overload_count=self.counts.copy(),
            proportion=self.counts / self.samples.theta,
            worst_excess=excess.max(axis=1),
            theta=self.samples.theta,
        )
        return SearchState(
            placement=Placement(tuple(int(s) for s in self.assignment)),
            eval=CostBreakdown(offload=self.offload, communication=self.communication),
            features=FeatureVector(dist_off=self.dist_off, dist_com=self.dist_com),
            profile=profile,
        )

    def apply(self, k: int, target: int) -> None:
        inst = self.inst
        source = int(self.assignment[k])
        self.assignment[k] = target
        for s in (source, target):
            members = self.assignment == s
            if members.any():
                self.load[s] = inst.cost_rates[s] * self.samples.cycles[members].sum(axis=0)
            else:
                self.load[s] = 0.0
            self.counts[s] = (self.load[s] > inst.capacities[s]).sum()
        self._refresh()

    def move_tables(self) -> _MoveTables:
        inst = self.inst
        K, S = inst.total_components, inst.num_servers
        r = inst.unit_transport_cost
        e = inst.dist_server_device
        l_ss = inst.dist_server_server
        g = inst.exchange_matrix
        h = inst.component_offload_kb
        m = inst.cost_rates
        cap = inst.capacities
        cyc = self.samples.cycles

        off_new = np.empty((K, S))
        com_new = np.empty((K, S))
        f1_new = np.empty((K, S))
        f2_new = np.empty((K, S))
        counts_new = np.empty((K, S), dtype=np.int64)
        feasible = np.empty((K, S), dtype=bool)

        for k in range(K):
            a = int(self.assignment[k])
            d = int(inst.component_device[k])
            e_col = e[:, d]
            off_new[k] = self.offload + r * h[k] * (e_col - e_col[a])
            f1_new[k] = self.dist_off + (e_col - e_col[a])
            sib = self.siblings[k]
            if sib.size:
                srv_sib = self.assignment[sib]
                l_cols = l_ss[:, srv_sib]
                pair_cost = l_cols @ g[k, sib]
                pair_dist = l_cols.sum(axis=1)
                com_new[k] = self.communication + 2.0 * r * (pair_cost - pair_cost[a])
                f2_new[k] = self.dist_com + 2.0 * (pair_dist - pair_dist[a])
            else:
                com_new[k] = self.communication
                f2_new[k] = self.dist_com
            cand = self.load + m[:, None] * cyc[k][None, :]
            counts_new[k] = (cand > cap[:, None]).sum(axis=1)
            row_ok = counts_new[k] <= self.allowed
            row_ok[a] = False
            feasible[k] = row_ok
        return _MoveTables(off_new, com_new, f1_new, f2_new, counts_new, feasible)


def neighbors(
    inst: Instance, samples: SampleSet, params: SaaParams, state: SearchState
) -> Iterator[SearchState]:
    """Feasible one-move neighbor states in (device, component, server) order.

    Costs, features, and profiles of yielded states are produced by delta
    evaluation: only the moved component's offload term, its sibling exchange
    terms, and the two touched server rows are recomputed.
    """
    ws = _Workspace(inst, samples, params, state.placement.array())
    tables = ws.move_tables()
    m = inst.cost_rates
    cap = inst.capacities
    for k in range(inst.total_components):
        a = int(ws.assignment[k])
        removed = ws.load[a] - m[a] * samples.cycles[k]
        count_a = int((removed > cap[a]).sum())
        worst_a = float((removed - cap[a]).max())
        for s in range(inst.num_servers):
            if not tables.feasible[k, s]:
                continue
            servers = list(state.placement.servers)
            servers[k] = s
            counts = ws.counts.copy()
            counts[a] = count_a
            counts[s] = tables.counts[k, s]
            worst = ws.load.max(axis=1) - cap
            worst[a] = worst_a
            worst[s] = float((ws.load[s] + m[s] * samples.cycles[k] - cap[s]).max())
            yield SearchState(
                placement=Placement(tuple(servers)),
                eval=CostBreakdown(
                    offload=float(tables.offload[k, s]),
                    communication=float(tables.communication[k, s]),
                ),
                features=FeatureVector(
                    dist_off=float(tables.dist_off[k, s]),
                    dist_com=float(tables.dist_com[k, s]),
                ),
                profile=OverloadProfile(
                    overload_count=counts,
                    proportion=counts / samples.theta,
                    worst_excess=worst,
                    theta=samples.theta,
                ),
            )


def hill_climb(
    inst: Instance,
    samples: SampleSet,
    params: SaaParams,
    start: SearchState,
    objective=COST,
    max_steps: int | None = None,
    on_visit: Callable[[SearchState], None] | None = None,
) -> tuple[SearchState, Trajectory, SearchStats]:
    """Steepest descent from a feasible start.

    Each step moves to the feasible neighbor with the strictly smallest
    objective value, first-in-scan-order on ties, and stops when no neighbor
    strictly improves (or after ``max_steps`` accepted moves). The trajectory
    records the features of every visited state; its endpoint value is the
    placement cost of the final state regardless of the objective used.
    """
    K, S = inst.total_components, inst.num_servers
    ws = _Workspace(inst, samples, params, start.placement.array())
    if not ws.is_feasible():
        raise ValueError("hill_climb requires a feasible start state")
    state = start
    current = float(objective.values(state.eval.total, state.features.dist_off, state.features.dist_com))
    points = [state.features]
    if on_visit is not None:
        on_visit(state)
    neighbors_evaluated = 0
    steps = 0
    while max_steps is None or steps < max_steps:
        tables = ws.move_tables()
        neighbors_evaluated += K * (S - 1)
        cand = np.asarray(
            objective.values(
                tables.offload + tables.communication, tables.dist_off, tables.dist_com
            ),
            dtype=np.float64,
        )
        cand = np.where(tables.feasible, cand, np.inf)
        flat = int(np.argmin(cand))
        if not cand.flat[flat] < current:
            break
        k, target = divmod(flat, S)
        source = int(ws.assignment[k])
        ws.apply(k, target)
        accepted = ws.snapshot()
        value = float(
            objective.values(
                accepted.eval.total, accepted.features.dist_off, accepted.features.dist_com
            )
        )
        if not value < current:
            # Screened delta said "improves" but the from-scratch value does
            # not; treat as a tie and stop rather than cycle.
            ws.apply(k, source)
            break
        state = accepted
        current = value
        points.append(state.features)
        if on_visit is not None:
            on_visit(state)
        steps += 1
    traj = Trajectory(points=tuple(points), endpoint_value=state.eval.total)
    stats = SearchStats(states_visited=len(points), neighbors_evaluated=neighbors_evaluated)
    return state, traj, stats


def random_feasible_state(
    inst: Instance,
    samples: SampleSet,
    params: SaaParams,
    seed: int,
    max_tries: int = 10000,
) -> SearchState:
    """Uniform rejection sampling of a feasible placement, greedy fallback.

    Draws components-to-servers uniformly and keeps the first draw whose
    overload counts all stay within budget. After ``max_tries`` rejections,
    assigns components in random order to the feasible server with the
    smallest current worst excess; raises :class:`NoFeasibleState` when that
    also fails.
    """
    rng = stream(seed, "search")
    K, S = inst.total_components, inst.num_servers
    budget = allowed_overloads(params)
    cap = inst.capacities
    for _ in range(max_tries):
        assignment = rng.integers(0, S, size=K)
        load = load_matrix(inst, samples, assignment)
        counts = (load > cap[:, None]).sum(axis=1)
        if (counts <= budget).all():
            return make_state(inst, samples, params, Placement(tuple(int(s) for s in assignment)))

    order = rng.permutation(K)
    assignment = np.full(K, -1, dtype=np.int64)
    load = np.zeros((S, samples.theta))
    for k in order:
        worst = (load - cap[:, None]).max(axis=1)
        placed = False
        for s in np.argsort(worst, kind="stable"):
            cand = load[s] + inst.cost_rates[s] * samples.cycles[k]
            if (cand > cap[s]).sum() <= budget:
                assignment[k] = s
                load[s] = cand
                placed = True
                break
        if not placed:
            raise NoFeasibleState(
                f"no server can host component {int(k)} within the overload budget "
                f"({budget} of {samples.theta} scenarios)"
            )
    state = make_state(inst, samples, params, Placement(tuple(int(s) for s in assignment)))
    if not (state.profile.overload_count <= budget).all():
        raise NoFeasibleState("greedy fallback produced an over-budget placement")
    return state


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Debug export: one row per visited state."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "dist_off", "dist_com", "rho_endpoint"])
        for q, point in enumerate(traj.points, start=1):
            writer.writerow(
                [q, f"{point.dist_off:.6f}", f"{point.dist_com:.6f}", f"{traj.endpoint_value:.6f}"]
            )

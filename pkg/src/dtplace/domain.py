"""Problem instances: edge servers, physical devices, digital-twin components.

An :class:`Instance` is an immutable snapshot of a wireless edge deployment:
heterogeneous servers on a plane, devices whose digital twins are split into
placeable components, a unit transport cost, and precomputed Manhattan
distances. Generation is a pure function of (config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .seeding import stream

DEFAULT_AREA_SIDE = 120.0


@dataclass(frozen=True)
class Point:
    """2-D location in meters."""

    x: float
    y: float


def manhattan(p: Point, q: Point) -> float:
    """L1 distance between two points, in meters."""
    return abs(p.x - q.x) + abs(p.y - q.y)


@dataclass(frozen=True)
class EdgeServer:
    """Heterogeneous edge server: per-cycle cost rate and a cost budget."""

    id: int  # 1-based label
    position: Point
    cost_per_cycle: float  # cost units per CPU cycle
    capacity: float  # maximum computation cost the server tolerates


@dataclass(frozen=True)
class DtComponent:
    """One placeable digital-twin component.

    ``exchange_kb[j]`` is the payload exchanged with the sibling component at
    0-based position ``j`` within the owning device; the vector is symmetric
    across the device's components with a zero self-entry.
    """

    id: int  # 1-based label within the device
    mean_cycles: float  # base of the component's CPU-cycle distribution
    offload_kb: float
    exchange_kb: tuple[float, ...]


@dataclass(frozen=True)
class PhysicalDevice:
    id: int  # 1-based label
    position: Point
    components: tuple[DtComponent, ...]


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable placement problem instance.

    Distance matrices are precomputed at construction time and indexed by
    0-based positions (``dist_server_device[s, d]``). Flat per-component
    arrays (component order: devices in order, components in order) are
    derived in ``__post_init__`` for fast evaluation and are read-only.
    """

    servers: tuple[EdgeServer, ...]
    devices: tuple[PhysicalDevice, ...]
    unit_transport_cost: float  # cost per (KB * meter)
    dist_server_device: np.ndarray  # (S, D) meters
    dist_server_server: np.ndarray  # (S, S) meters

    def __post_init__(self):
        counts = [len(dev.components) for dev in self.devices]
        offsets = np.concatenate(([0], np.cumsum(counts, dtype=np.int64)))
        total = int(offsets[-1])

        comp_device = np.empty(total, dtype=np.int64)
        comp_local = np.empty(total, dtype=np.int64)
        offload_kb = np.empty(total, dtype=np.float64)
        mean_cycles = np.empty(total, dtype=np.float64)
        exchange = np.zeros((total, total), dtype=np.float64)
        sibling = np.zeros((total, total), dtype=bool)

        for d, dev in enumerate(self.devices):
            lo, hi = int(offsets[d]), int(offsets[d + 1])
            comp_device[lo:hi] = d
            comp_local[lo:hi] = np.arange(hi - lo)
            for c, comp in enumerate(dev.components):
                offload_kb[lo + c] = comp.offload_kb
                mean_cycles[lo + c] = comp.mean_cycles
                row = np.asarray(comp.exchange_kb, dtype=np.float64)
                if row.shape == (hi - lo,):
                    exchange[lo + c, lo:hi] = row
            sibling[lo:hi, lo:hi] = True

        np.fill_diagonal(sibling, False)

        cost_rates = np.array([s.cost_per_cycle for s in self.servers])
        capacities = np.array([s.capacity for s in self.servers])

        for name, value in (
            ("component_offsets", offsets),
            ("component_device", comp_device),
            ("component_local_index", comp_local),
            ("component_offload_kb", offload_kb),
            ("component_mean_cycles", mean_cycles),
            ("exchange_matrix", exchange),
            ("sibling_mask", sibling),
            ("cost_rates", cost_rates),
            ("capacities", capacities),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def num_servers(self) -> int:
        return len(self.servers)

    @property
    def num_devices(self) -> int:
        return len(self.devices)

    @property
    def total_components(self) -> int:
        return int(self.component_offsets[-1])

    def flat_index(self, device: int, component: int) -> int:
        """Flat component index for (0-based device, 0-based component)."""
        return int(self.component_offsets[device]) + component


@dataclass(frozen=True)
class GenConfig:
    """Instance-generation parameters.

    Defaults follow the standard synthetic setup: entities uniform over a
    square area, per-cycle cost rates normal around a uniform base with a
    fixed relative spread, capacities and payload sizes uniform.
    """

    num_servers: int
    num_devices: int
    components_range: tuple[int, int]
    area_side: float = DEFAULT_AREA_SIDE
    cost_rate_base_range: tuple[float, float] = (1.0, 10.0)
    cost_rate_sd_frac: float = 0.2
    capacity_range: tuple[float, float] = (0.3e9, 0.4e9)
    mean_cycles_range: tuple[float, float] = (1.0e6, 10.0e6)
    offload_kb_range: tuple[float, float] = (100.0, 500.0)
    exchange_kb_range: tuple[float, float] = (50.0, 250.0)
    unit_cost_range: tuple[float, float] = (0.0, 1.0)

    def validate(self) -> None:
        if self.num_servers < 1:
            raise ConfigurationError("num_servers must be >= 1")
        if self.num_devices < 1:
            raise ConfigurationError("num_devices must be >= 1")
        lo, hi = self.components_range
        if lo < 1 or hi < lo:
            raise ConfigurationError(
                f"components_range must satisfy 1 <= lo <= hi, got [{lo}, {hi}]"
            )
        if not self.area_side > 0:
            raise ConfigurationError("area_side must be positive")
        if not self.cost_rate_sd_frac > 0:
            raise ConfigurationError("cost_rate_sd_frac must be positive")
        for name in (
            "cost_rate_base_range",
            "capacity_range",
            "mean_cycles_range",
            "offload_kb_range",
            "exchange_kb_range",
            "unit_cost_range",
        ):
            a, b = getattr(self, name)
            if not a < b:
                raise ConfigurationError(f"{name} must be a non-degenerate range")


def _positive_normal(rng: np.random.Generator, mean: float, sd: float) -> float:
    # Resample instead of truncating; at sd = 0.2*mean a non-positive draw
    # has probability ~3e-7.
    while True:
        value = rng.normal(mean, sd)
        if value > 0:
            return float(value)


def generate_instance(cfg: GenConfig, seed: int) -> Instance:
    """Draw a random instance; pure function of (cfg, seed)."""
    cfg.validate()
    rng = stream(seed, "instance")
    side = cfg.area_side

    servers = []
    for s in range(cfg.num_servers):
        pos = Point(float(rng.uniform(0, side)), float(rng.uniform(0, side)))
        base = rng.uniform(*cfg.cost_rate_base_range)
        rate = _positive_normal(rng, base, cfg.cost_rate_sd_frac * base)
        cap = float(rng.uniform(*cfg.capacity_range))
        servers.append(EdgeServer(id=s + 1, position=pos, cost_per_cycle=rate, capacity=cap))

    devices = []
    lo, hi = cfg.components_range
    for d in range(cfg.num_devices):
        pos = Point(float(rng.uniform(0, side)), float(rng.uniform(0, side)))
        n_comp = int(rng.integers(lo, hi + 1))
        mean_cycles = float(rng.uniform(*cfg.mean_cycles_range))
        offloads = [float(rng.uniform(*cfg.offload_kb_range)) for _ in range(n_comp)]
        # Draw only the upper triangle so the exchange matrix is symmetric
        # with a zero diagonal by construction.
        g = np.zeros((n_comp, n_comp))
        for c in range(n_comp):
            for c2 in range(c + 1, n_comp):
                g[c, c2] = g[c2, c] = rng.uniform(*cfg.exchange_kb_range)
        comps = tuple(
            DtComponent(
                id=c + 1,
                mean_cycles=mean_cycles,
                offload_kb=offloads[c],
                exchange_kb=tuple(float(v) for v in g[c]),
            )
            for c in range(n_comp)
        )
        devices.append(PhysicalDevice(id=d + 1, position=pos, components=comps))

    unit_cost = float(rng.uniform(*cfg.unit_cost_range))

    dist_sd = np.array(
        [[manhattan(s.position, dev.position) for dev in devices] for s in servers]
    )
    dist_ss = np.array(
        [[manhattan(a.position, b.position) for b in servers] for a in servers]
    )
    return Instance(
        servers=tuple(servers),
        devices=tuple(devices),
        unit_transport_cost=unit_cost,
        dist_server_device=dist_sd,
        dist_server_server=dist_ss,
    )


def validate_instance(inst: Instance) -> list[str]:
    """Check every structural invariant; returns all violations found."""
    out: list[str] = []
    S, D = inst.num_servers, inst.num_devices
    if S < 1:
        out.append("instance has no servers")
    if D < 1:
        out.append("instance has no devices")

    for pos_owner, pos in [(f"server {s.id}", s.position) for s in inst.servers] + [
        (f"device {d.id}", d.position) for d in inst.devices
    ]:
        if pos.x < 0 or pos.y < 0:
            out.append(f"{pos_owner} has a negative coordinate")

    for i, srv in enumerate(inst.servers):
        if srv.id != i + 1:
            out.append(f"server at position {i} has id {srv.id}, expected {i + 1}")
        if not srv.cost_per_cycle > 0:
            out.append(f"server {srv.id} cost_per_cycle not positive")
        if not srv.capacity > 0:
            out.append(f"server {srv.id} capacity not positive")

    for i, dev in enumerate(inst.devices):
        if dev.id != i + 1:
            out.append(f"device at position {i} has id {dev.id}, expected {i + 1}")
        n = len(dev.components)
        if n < 1:
            out.append(f"device {dev.id} has no components")
        for j, comp in enumerate(dev.components):
            if comp.id != j + 1:
                out.append(f"device {dev.id} component at position {j} has id {comp.id}")
            if not comp.mean_cycles > 0:
                out.append(f"device {dev.id} component {comp.id} mean_cycles not positive")
            if not comp.offload_kb > 0:
                out.append(f"device {dev.id} component {comp.id} offload_kb not positive")
            if len(comp.exchange_kb) != n:
                out.append(
                    f"device {dev.id} component {comp.id} exchange vector length "
                    f"{len(comp.exchange_kb)}, expected {n}"
                )
        for c in range(n):
            row = dev.components[c].exchange_kb
            if len(row) == n and row[c] != 0:
                out.append(f"device {dev.id} exchange matrix has nonzero self-entry at {c + 1}")
            for c2 in range(c + 1, n):
                other = dev.components[c2].exchange_kb
                if len(row) == n and len(other) == n and row[c2] != other[c]:
                    out.append(
                        f"device {dev.id} exchange matrix asymmetric at ({c + 1}, {c2 + 1})"
                    )

    sd = np.asarray(inst.dist_server_device)
    ss = np.asarray(inst.dist_server_server)
    if sd.shape != (S, D):
        out.append(f"server-device distance matrix shape {sd.shape}, expected ({S}, {D})")
    else:
        for s in range(S):
            for d in range(D):
                expect = manhattan(inst.servers[s].position, inst.devices[d].position)
                if sd[s, d] != expect:
                    out.append(f"server-device distance matrix stale at ({s + 1}, {d + 1})")
    if ss.shape != (S, S):
        out.append(f"server-server distance matrix shape {ss.shape}, expected ({S}, {S})")
    else:
        for a in range(S):
            if ss[a, a] != 0:
                out.append(f"server-server distance matrix has nonzero diagonal at {a + 1}")
            for b in range(S):
                expect = manhattan(inst.servers[a].position, inst.servers[b].position)
                if ss[a, b] != expect:
                    out.append(f"server-server distance matrix stale at ({a + 1}, {b + 1})")
                if ss[a, b] != ss[b, a]:
                    out.append(f"server-server distance matrix asymmetric at ({a + 1}, {b + 1})")
    return out


def instance_to_dict(inst: Instance) -> dict:
    """Plain-data form of an instance (JSON-ready, exact float round-trip)."""
    return {
        "servers": [
            {
                "id": s.id,
                "x": s.position.x,
                "y": s.position.y,
                "cost_per_cycle": s.cost_per_cycle,
                "capacity": s.capacity,
            }
            for s in inst.servers
        ],
        "devices": [
            {
                "id": d.id,
                "x": d.position.x,
                "y": d.position.y,
                "components": [
                    {
                        "id": c.id,
                        "mean_cycles": c.mean_cycles,
                        "offload_kb": c.offload_kb,
                        "exchange_kb": list(c.exchange_kb),
                    }
                    for c in d.components
                ],
            }
            for d in inst.devices
        ],
        "unit_transport_cost": inst.unit_transport_cost,
        "dist_server_device": np.asarray(inst.dist_server_device).tolist(),
        "dist_server_server": np.asarray(inst.dist_server_server).tolist(),
    }


def instance_from_dict(data: dict) -> Instance:
    servers = tuple(
        EdgeServer(
            id=int(s["id"]),
            position=Point(float(s["x"]), float(s["y"])),
            cost_per_cycle=float(s["cost_per_cycle"]),
            capacity=float(s["capacity"]),
        )
        for s in data["servers"]
    )
    devices = tuple(
        PhysicalDevice(
            id=int(d["id"]),
            position=Point(float(d["x"]), float(d["y"])),
            components=tuple(
                DtComponent(
                    id=int(c["id"]),
                    mean_cycles=float(c["mean_cycles"]),
                    offload_kb=float(c["offload_kb"]),
                    exchange_kb=tuple(float(v) for v in c["exchange_kb"]),
                )
                for c in d["components"]
            ),
        )
        for d in data["devices"]
    )
    return Instance(
        servers=servers,
        devices=devices,
        unit_transport_cost=float(data["unit_transport_cost"]),
        dist_server_device=np.array(data["dist_server_device"], dtype=np.float64),
        dist_server_server=np.array(data["dist_server_server"], dtype=np.float64),
    )

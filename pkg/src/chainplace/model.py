"""Problem instance data model: topology, VNF catalog, chains, demands.

All quantities that enter feasibility decisions (rates, capacities, core
budgets, configuration costs) are exact `Fraction`s; floating point only
appears inside the MILP kernel. Types are immutable after construction and
safe to share across threads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class _Unbounded:
    """Sentinel for a node without a CPU-core capacity constraint (a DC node)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unbounded"


UNBOUNDED = _Unbounded()

CoreBudget = Fraction | _Unbounded


@dataclass(frozen=True)
class Link:
    """One directed link of the physical topology."""

    id: str
    tail: str
    head: str
    capacity: Fraction  # Gbps


@dataclass(frozen=True)
class Topology:
    nodes: frozenset[str]
    links: tuple[Link, ...]
    nfv_nodes: frozenset[str]
    _out: Mapping[str, tuple[Link, ...]] = field(repr=False, default=None)
    _in: Mapping[str, tuple[Link, ...]] = field(repr=False, default=None)
    _by_id: Mapping[str, Link] = field(repr=False, default=None)

    def __post_init__(self):
        out: dict[str, list[Link]] = {v: [] for v in sorted(self.nodes)}
        inc: dict[str, list[Link]] = {v: [] for v in sorted(self.nodes)}
        for lk in self.links:
            if lk.tail in out:
                out[lk.tail].append(lk)
            if lk.head in inc:
                inc[lk.head].append(lk)
        object.__setattr__(self, "_out", {v: tuple(ls) for v, ls in out.items()})
        object.__setattr__(self, "_in", {v: tuple(ls) for v, ls in inc.items()})
        object.__setattr__(self, "_by_id", {lk.id: lk for lk in self.links})

    def out_links(self, v: str) -> tuple[Link, ...]:
        return self._out[v]

    def in_links(self, v: str) -> tuple[Link, ...]:
        return self._in[v]

    def link(self, link_id: str) -> Link:
        return self._by_id[link_id]


@dataclass(frozen=True)
class VnfType:
    id: str
    cores_per_gbps: Fraction


@dataclass(frozen=True)
class ServiceChain:
    id: str
    vnf_sequence: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.vnf_sequence)

    @property
    def first(self) -> str:
        return self.vnf_sequence[0]

    @property
    def last(self) -> str:
        return self.vnf_sequence[-1]

    @property
    def distinct_vnfs(self) -> tuple[str, ...]:
        """Distinct VNF types in first-occurrence order."""
        seen: list[str] = []
        for f in self.vnf_sequence:
            if f not in seen:
                seen.append(f)
        return tuple(seen)


@dataclass(frozen=True)
class Demand:
    source: str
    destination: str
    chain: str
    rate: Fraction  # Gbps


@dataclass(frozen=True)
class Instance:
    topology: Topology
    catalog: tuple[VnfType, ...]
    chains: tuple[ServiceChain, ...]
    demands: tuple[Demand, ...]
    core_budget: Mapping[str, CoreBudget]

    def chain(self, chain_id: str) -> ServiceChain:
        for c in self.chains:
            if c.id == chain_id:
                return c
        raise KeyError(chain_id)

    def vnf(self, vnf_id: str) -> VnfType:
        for f in self.catalog:
            if f.id == vnf_id:
                return f
        raise KeyError(vnf_id)

    def demands_of(self, chain_id: str) -> tuple[Demand, ...]:
        return tuple(d for d in self.demands if d.chain == chain_id)

    def chain_rate(self, chain_id: str) -> Fraction:
        """Total traffic of all flows routed through the given chain."""
        return sum((d.rate for d in self.demands_of(chain_id)), Fraction(0))

    @property
    def nfv_nodes_sorted(self) -> tuple[str, ...]:
        return tuple(sorted(self.topology.nfv_nodes))


@dataclass(frozen=True)
class ChainConfiguration:
    """One candidate deployment of a chain: VNF locations plus the directed
    path (possibly empty) between consecutive VNF locations.

    `placements` holds (node, vnf) pairs; `segments[i]` is the ordered link-id
    path from the host of position i to the host of position i+1. `cost` is
    the bandwidth this deployment consumes, total chain traffic times the
    number of inter-VNF link hops.
    """

    chain: str
    placements: frozenset[tuple[str, str]]
    segments: tuple[tuple[str, ...], ...]
    cost: Fraction

    def location_of(self, vnf_id: str) -> str:
        for v, f in self.placements:
            if f == vnf_id:
                return v
        raise KeyError(vnf_id)

    def segment_link_count(self) -> int:
        return sum(len(seg) for seg in self.segments)

    def link_multiplicity(self) -> dict[str, int]:
        """How many segments use each link (capacity-row coefficients)."""
        mult: dict[str, int] = {}
        for seg in self.segments:
            for lid in seg:
                mult[lid] = mult.get(lid, 0) + 1
        return mult

    def key(self) -> tuple:
        """Identity for duplicate detection: same placements, same link sets."""
        return (
            self.chain,
            tuple(sorted(self.placements)),
            tuple(tuple(sorted(seg)) for seg in self.segments),
        )


def make_configuration(
    instance: Instance,
    chain_id: str,
    placements: Iterable[tuple[str, str]],
    segments: Sequence[Sequence[str]],
) -> ChainConfiguration:
    """Build a configuration with its bandwidth cost precomputed."""
    segs = tuple(tuple(seg) for seg in segments)
    hops = sum(len(s) for s in segs)
    cost = instance.chain_rate(chain_id) * hops
    return ChainConfiguration(
        chain=chain_id,
        placements=frozenset(placements),
        segments=segs,
        cost=cost,
    )


class InvalidConfigurationError(ValueError):
    pass


def config_cost(config: ChainConfiguration, instance: Instance) -> Fraction:
    """Bandwidth consumed by a configuration: total chain traffic times the
    number of links on all inter-VNF segments."""
    chain_ids = {c.id for c in instance.chains}
    if config.chain not in chain_ids:
        raise InvalidConfigurationError(
            f"configuration references unknown chain {config.chain!r}"
        )
    return instance.chain_rate(config.chain) * config.segment_link_count()


def shortest_path(topology: Topology, src: str, dst: str) -> tuple[Link, ...] | None:
    """Minimum-hop directed path src -> dst, ties broken by lexicographically
    smallest node-id sequence. Returns None when dst is unreachable."""
    if src not in topology.nodes or dst not in topology.nodes:
        raise KeyError(f"unknown node in shortest_path: {src!r} -> {dst!r}")
    if src == dst:
        return ()
    dist = hop_distances_to(topology, dst)
    if dist.get(src) is None:
        return None
    # Greedy reconstruction: smallest next node id among distance-decreasing
    # neighbours yields the lexicographically smallest node sequence.
    path: list[Link] = []
    cur = src
    while cur != dst:
        best: Link | None = None
        for lk in topology.out_links(cur):
            if dist.get(lk.head) == dist[cur] - 1:
                if best is None or lk.head < best.head:
                    best = lk
        path.append(best)
        cur = best.head
    return tuple(path)


def hop_distances_to(topology: Topology, dst: str) -> dict[str, int | None]:
    """BFS hop count from every node to dst along directed links."""
    dist: dict[str, int | None] = {v: None for v in topology.nodes}
    dist[dst] = 0
    queue = deque([dst])
    # Walk the reversed graph: predecessors of v are tails of v's in-links.
    while queue:
        v = queue.popleft()
        for lk in topology.in_links(v):
            if dist[lk.tail] is None:
                dist[lk.tail] = dist[v] + 1
                queue.append(lk.tail)
    return dist


def hop_distances_from(topology: Topology, src: str) -> dict[str, int | None]:
    dist: dict[str, int | None] = {v: None for v in topology.nodes}
    dist[src] = 0
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for lk in topology.out_links(v):
            if dist[lk.head] is None:
                dist[lk.head] = dist[v] + 1
                queue.append(lk.head)
    return dist


def validate_instance(instance: Instance) -> list[str]:
    """Collect every invariant violation; an empty list means valid.

    Messages come out in a fixed order (topology, catalog, chains, demands,
    budgets) so reports are reproducible.
    """
    violations: list[str] = []
    topo = instance.topology

    seen_link_ids: set[str] = set()
    directed = set()
    for lk in topo.links:
        if lk.tail == lk.head:
            violations.append(f"link {lk.id}: tail and head must differ")
        if lk.tail not in topo.nodes or lk.head not in topo.nodes:
            violations.append(f"link {lk.id}: endpoint not in node set")
        if lk.id in seen_link_ids:
            violations.append(f"link {lk.id}: duplicate link id")
        seen_link_ids.add(lk.id)
        if (lk.tail, lk.head) in directed:
            violations.append(f"link {lk.id}: duplicate direction {lk.tail}->{lk.head}")
        directed.add((lk.tail, lk.head))
        if lk.capacity < 0:
            violations.append(f"link {lk.id}: capacity must be nonnegative")
    for tail, head in sorted(directed):
        if (head, tail) not in directed:
            violations.append(
                f"link {tail}->{head}: missing reverse direction {head}->{tail}"
            )
    for v in sorted(topo.nfv_nodes):
        if v not in topo.nodes:
            violations.append(f"nfv node {v} not in node set")

    seen_vnfs: set[str] = set()
    for f in instance.catalog:
        if f.id in seen_vnfs:
            violations.append(f"vnf {f.id}: duplicate id")
        seen_vnfs.add(f.id)
        if f.cores_per_gbps < 0:
            violations.append(f"vnf {f.id}: cores_per_gbps must be nonnegative")

    seen_chains: set[str] = set()
    for c in instance.chains:
        if c.id in seen_chains:
            violations.append(f"chain {c.id}: duplicate id")
        seen_chains.add(c.id)
        if c.length < 2:
            violations.append(f"chain {c.id}: must contain at least two VNFs")
        for f in c.vnf_sequence:
            if f not in seen_vnfs:
                violations.append(f"chain {c.id}: references unknown VNF {f!r}")

    seen_demands: set[tuple[str, str, str]] = set()
    for d in instance.demands:
        if d.rate <= 0:
            violations.append(
                f"demand {d.source}->{d.destination} chain {d.chain}: "
                "demand rate must be positive"
            )
        if d.source == d.destination:
            violations.append(
                f"demand {d.source}->{d.destination} chain {d.chain}: "
                "source and destination must differ"
            )
        for endpoint in (d.source, d.destination):
            if endpoint not in topo.nodes:
                violations.append(
                    f"demand {d.source}->{d.destination} chain {d.chain}: "
                    f"unknown node {endpoint}"
                )
        if d.chain not in seen_chains:
            violations.append(
                f"demand {d.source}->{d.destination}: unknown chain {d.chain!r}"
            )
        key = (d.source, d.destination, d.chain)
        if key in seen_demands:
            violations.append(
                f"demand {d.source}->{d.destination} chain {d.chain}: duplicate demand"
            )
        seen_demands.add(key)

    budget_nodes = set(instance.core_budget)
    if budget_nodes != set(topo.nfv_nodes):
        missing = sorted(set(topo.nfv_nodes) - budget_nodes)
        extra = sorted(budget_nodes - set(topo.nfv_nodes))
        if missing:
            violations.append(f"core budget missing for nfv nodes: {', '.join(missing)}")
        if extra:
            violations.append(f"core budget given for non-nfv nodes: {', '.join(extra)}")
    for v in sorted(budget_nodes & set(topo.nfv_nodes)):
        b = instance.core_budget[v]
        if b is not UNBOUNDED and b < 0:
            violations.append(f"core budget at {v} must be nonnegative")

    if instance.demands and not topo.nfv_nodes:
        violations.append("instance has demands but no NFV-PoP nodes")

    return violations


def validate_configuration(config: ChainConfiguration, instance: Instance) -> list[str]:
    """Check a configuration against its instance; empty list means valid."""
    violations: list[str] = []
    try:
        chain = instance.chain(config.chain)
    except KeyError:
        return [f"configuration references unknown chain {config.chain!r}"]
    topo = instance.topology

    for v, f in sorted(config.placements):
        if v not in topo.nfv_nodes:
            violations.append(f"config {config.chain}: placement of {f} at non-NFV node {v}")
    for f in chain.distinct_vnfs:
        hosts = [v for v, g in config.placements if g == f]
        if len(hosts) != 1:
            violations.append(
                f"config {config.chain}: VNF {f} placed at {len(hosts)} nodes, expected 1"
            )
    if len(config.segments) != chain.length - 1:
        violations.append(
            f"config {config.chain}: expected {chain.length - 1} segments, "
            f"got {len(config.segments)}"
        )
        return violations
    for i in range(chain.length - 1):
        try:
            u = config.location_of(chain.vnf_sequence[i])
            w = config.location_of(chain.vnf_sequence[i + 1])
        except KeyError:
            continue
        cur = u
        for lid in config.segments[i]:
            try:
                lk = topo.link(lid)
            except KeyError:
                violations.append(f"config {config.chain}: segment {i} unknown link {lid}")
                break
            if lk.tail != cur:
                violations.append(
                    f"config {config.chain}: segment {i} not a contiguous path at {lid}"
                )
                break
            cur = lk.head
        else:
            if cur != w:
                violations.append(
                    f"config {config.chain}: segment {i} ends at {cur}, expected {w}"
                )
    expected = instance.chain_rate(config.chain) * config.segment_link_count()
    if config.cost != expected:
        violations.append(
            f"config {config.chain}: cached cost {config.cost} != recomputed {expected}"
        )
    return violations

"""NSFNet experiment harness: NFVI schemes, synthetic workloads, and the
(scheme x traffic x core budget) sweep grid.

The VNF core catalog is synthetic (per-type cores/Gbps drawn from a small
default set, overridable); absolute published curves are out of scope, the
sweep reproduces the structural comparisons between schemes.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .driver import CgParams, CgReport, run
from .model import (
    CoreBudget,
    Demand,
    Instance,
    Link,
    ServiceChain,
    Topology,
    UNBOUNDED,
    VnfType,
)

NSFNET_SHA256 = "cb771fb6037d01d36b53c697a27827b00d74470bd20542f807fc6cacbc176edf"

# NFVI scheme node sets on NSFNet (degree-3 nodes, degree-4 nodes, every
# node, and the skewed-right set).
DEG3_NODES = ("1", "5", "6", "7", "9", "13")
DEG4_NODES = ("3", "8", "10")
SR_NODES = ("9", "11", "12", "13", "14")

BASE_SCHEMES = ("NFV-Deg3", "NFV-Deg4", "NFV-ALL", "NFV-SR")


class TopologyDataError(RuntimeError):
    pass


def nsfnet() -> Topology:
    """The embedded 14-node NSFNet, 40 directed links of 40 Gbps.

    The edge list is checksummed and self-tested against the scheme degree
    profile (nodes 1,5,6,7,9,13 have degree 3; nodes 3,8,10 degree 4); any
    edit to the data file fails here.
    """
    raw = importlib.resources.files("chainplace.data").joinpath("nsfnet.json").read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != NSFNET_SHA256:
        raise TopologyDataError(f"nsfnet.json checksum mismatch: {digest}")
    payload = json.loads(raw)
    cap = Fraction(payload["capacity_gbps"])
    links = []
    nodes = set()
    for u, v in payload["edges"]:
        nodes.add(u)
        nodes.add(v)
        links.append(Link(f"{u}->{v}", u, v, cap))
        links.append(Link(f"{v}->{u}", v, u, cap))
    topo = Topology(frozenset(nodes), tuple(links), frozenset(nodes))
    degree = {v: len(topo.out_links(v)) for v in nodes}
    deg3 = tuple(sorted((v for v, d in degree.items() if d == 3), key=int))
    deg4 = tuple(sorted((v for v, d in degree.items() if d == 4), key=int))
    if deg3 != tuple(sorted(DEG3_NODES, key=int)) or deg4 != tuple(sorted(DEG4_NODES, key=int)):
        raise TopologyDataError(f"degree profile self-test failed: deg3={deg3} deg4={deg4}")
    if len(nodes) != 14:
        raise TopologyDataError(f"expected 14 nodes, found {len(nodes)}")
    return topo


@dataclass(frozen=True)
class Scheme:
    """An NFVI deployment scheme; DC-prefixed kinds add one data-center node
    (no core constraint) on top of the base scheme's NFV-PoPs."""

    kind: str
    dc_node: str | None = None

    @property
    def is_dc(self) -> bool:
        return self.kind.startswith("DC-")

    @property
    def base_kind(self) -> str:
        return self.kind[3:] if self.is_dc else self.kind

    def nfv_nodes(self, topology: Topology) -> frozenset[str]:
        base = self.base_kind
        if base == "NFV-Deg3":
            nodes = set(DEG3_NODES)
        elif base == "NFV-Deg4":
            nodes = set(DEG4_NODES)
        elif base == "NFV-SR":
            nodes = set(SR_NODES)
        elif base == "NFV-ALL":
            nodes = set(topology.nodes)
        else:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.is_dc and self.dc_node is not None:
            nodes.add(self.dc_node)
        return frozenset(nodes)


def parse_scheme(name: str) -> Scheme:
    name = name.strip()
    base = name[3:] if name.startswith("DC-") else name
    if base not in BASE_SCHEMES:
        valid = list(BASE_SCHEMES) + ["DC-" + s for s in BASE_SCHEMES]
        raise ValueError(f"unknown scheme {name!r}; valid: {', '.join(valid)}")
    return Scheme(kind=name)


@dataclass(frozen=True)
class Workload:
    catalog: tuple[VnfType, ...]
    chains: tuple[ServiceChain, ...]
    demands: tuple[Demand, ...]


def generate_workload(
    seed: int,
    n_chains: int = 13,
    n_vnfs: int = 33,
    n_flows: int = 20,
    traffic: Fraction | int | str = 1,
    core_values: tuple[int, ...] = (1, 2, 4, 8),
    topology: Topology | None = None,
) -> Workload:
    """Deterministic synthetic workload: `n_vnfs` VNF types with cores/Gbps
    drawn uniformly from `core_values`, `n_chains` chains of length 2..5
    (chain 1 fixed to SBC -> QoS), and `n_flows` distinct ordered node pairs
    assigned to chains round-robin at `traffic` Gbps each.

    Every VNF type is used by at least one chain. The first and last type of
    each chain appears nowhere else in the workload, so access-leg routing
    never couples distinct chains through a shared endpoint type; the
    remaining types are shared among chain interiors.
    """
    if n_vnfs < 2 * n_chains:
        raise ValueError("need at least two unique endpoint VNF types per chain")
    topo = topology or nsfnet()
    rng = np.random.default_rng(seed)
    traffic = Fraction(str(traffic))

    names = ["SBC", "QoS"] + [f"vnf{i:02d}" for i in range(3, n_vnfs + 1)]
    catalog = tuple(
        VnfType(name, Fraction(int(rng.choice(core_values)))) for name in names
    )

    endpoint_types = names[: 2 * n_chains]
    middle_pool = names[2 * n_chains :]
    while True:
        lengths = [2] + [int(L) for L in rng.integers(2, 6, size=n_chains - 1)]
        middle_slots = sum(length - 2 for length in lengths)
        if middle_slots >= len(middle_pool):
            break
    while True:
        chains = []
        used_middles: set[str] = set()
        for idx, length in enumerate(lengths):
            first = endpoint_types[2 * idx]
            last = endpoint_types[2 * idx + 1]
            n_mid = length - 2
            if middle_pool and n_mid > 0:
                mids = [
                    middle_pool[int(i)]
                    for i in rng.choice(len(middle_pool), size=n_mid, replace=False)
                ]
            else:
                mids = []
            used_middles.update(mids)
            chains.append(ServiceChain(f"sc{idx + 1:02d}", tuple([first] + mids + [last])))
        if used_middles >= set(middle_pool):
            break
    chains = tuple(chains)

    nodes = sorted(topo.nodes)
    pairs = [(s, d) for s in nodes for d in nodes if s != d]
    picked = rng.choice(len(pairs), size=n_flows, replace=False)
    demands = tuple(
        Demand(pairs[int(p)][0], pairs[int(p)][1], chains[j % n_chains].id, traffic)
        for j, p in enumerate(picked)
    )
    return Workload(catalog=catalog, chains=chains, demands=demands)


def build_instance(
    topology: Topology,
    scheme: Scheme,
    workload: Workload,
    cores: CoreBudget | int,
) -> Instance:
    """Instance for one sweep cell: the scheme's NFV set with a uniform core
    budget, the DC node (if any) unbounded."""
    nfv = scheme.nfv_nodes(topology)
    topo = Topology(topology.nodes, topology.links, nfv)
    budget: dict[str, CoreBudget] = {}
    for v in sorted(nfv):
        if scheme.is_dc and v == scheme.dc_node:
            budget[v] = UNBOUNDED
        elif cores is UNBOUNDED:
            budget[v] = UNBOUNDED
        else:
            budget[v] = Fraction(cores)
    return Instance(
        topology=topo,
        catalog=workload.catalog,
        chains=workload.chains,
        demands=workload.demands,
        core_budget=budget,
    )


@dataclass(frozen=True)
class SweepCell:
    """One CG run inside the sweep (one CSV row)."""

    scheme: str
    traffic: Fraction
    cores: CoreBudget
    dc_node: str | None
    status: str
    objective: float | None
    lp_bound: float | None
    gap: float | None
    iterations: int
    columns: int
    runtime_ms: float


@dataclass(frozen=True)
class SweepResult:
    """One (scheme, traffic, cores) grid cell; DC schemes carry the
    per-placement series and report the average as the headline cell."""

    cell: SweepCell
    placements: tuple[SweepCell, ...] = ()
    infeasible_placements: int | None = None
    reports: dict = field(default_factory=dict, compare=False)

    def rows(self) -> list[SweepCell]:
        return [*self.placements, self.cell]


def run_cell(
    topology: Topology,
    scheme: Scheme,
    workload: Workload,
    traffic: Fraction,
    cores: CoreBudget,
    params: CgParams,
) -> tuple[SweepCell, CgReport]:
    instance = build_instance(topology, scheme, workload, cores)
    t0 = time.monotonic()
    report = run(instance, params)
    ms = (time.monotonic() - t0) * 1000.0
    return (
        SweepCell(
            scheme=scheme.kind,
            traffic=traffic,
            cores=cores,
            dc_node=scheme.dc_node,
            status=report.status,
            objective=report.ilp_objective,
            lp_bound=report.lp_lower_bound,
            gap=report.gap,
            iterations=report.iterations,
            columns=sum(report.columns_generated.values()),
            runtime_ms=ms,
        ),
        report,
    )


def run_sweep(
    schemes: list[str | Scheme],
    traffic_levels: list,
    core_budgets: list,
    seed: int = 42,
    params: CgParams | None = None,
    topology: Topology | None = None,
    workload_kwargs: dict | None = None,
    collect_reports: bool = False,
    progress=None,
) -> list[SweepResult]:
    """One CG run per (scheme, traffic, cores) cell; DC schemes run every DC
    placement plus the feasible-average aggregate. Fully deterministic for a
    given seed; per-cell failures are recorded, never raised."""
    params = params or CgParams()
    topo = topology or nsfnet()
    results: list[SweepResult] = []
    wl_kwargs = workload_kwargs or {}

    workloads: dict[Fraction, Workload] = {}
    for traffic in traffic_levels:
        traffic = Fraction(str(traffic))
        workloads[traffic] = generate_workload(seed, traffic=traffic, topology=topo, **wl_kwargs)

    for scheme_in in schemes:
        scheme = parse_scheme(scheme_in) if isinstance(scheme_in, str) else scheme_in
        for traffic in [Fraction(str(t)) for t in traffic_levels]:
            workload = workloads[traffic]
            for cores in core_budgets:
                cores = cores if cores is UNBOUNDED else Fraction(str(cores))
                if not scheme.is_dc:
                    cell, report = run_cell(topo, scheme, workload, traffic, cores, params)
                    reports = {None: report} if collect_reports else {}
                    results.append(SweepResult(cell=cell, reports=reports))
                    if progress:
                        progress(results[-1])
                    continue
                placements = []
                reports = {}
                for dc in sorted(topo.nodes):
                    placed = Scheme(kind=scheme.kind, dc_node=dc)
                    cell, report = run_cell(topo, placed, workload, traffic, cores, params)
                    placements.append(cell)
                    if collect_reports:
                        reports[dc] = report
                feasible = [c for c in placements if c.status == "optimal-heuristic"]
                infeasible_count = sum(1 for c in placements if c.status == "infeasible")
                avg = SweepCell(
                    scheme=scheme.kind,
                    traffic=traffic,
                    cores=cores,
                    dc_node="avg",
                    status="optimal-heuristic" if feasible else "infeasible",
                    objective=(
                        sum(c.objective for c in feasible) / len(feasible) if feasible else None
                    ),
                    lp_bound=(
                        sum(c.lp_bound for c in feasible) / len(feasible) if feasible else None
                    ),
                    gap=(sum(c.gap for c in feasible) / len(feasible) if feasible else None),
                    iterations=int(round(sum(c.iterations for c in placements) / len(placements))),
                    columns=int(round(sum(c.columns for c in placements) / len(placements))),
                    runtime_ms=sum(c.runtime_ms for c in placements),
                )
                results.append(
                    SweepResult(
                        cell=avg,
                        placements=tuple(placements),
                        infeasible_placements=infeasible_count,
                        reports=reports,
                    )
                )
                if progress:
                    progress(results[-1])
    return results

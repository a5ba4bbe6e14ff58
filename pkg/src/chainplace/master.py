"""Restricted master problem over the current configuration pool.

Builds the bandwidth-minimizing selection model: one configuration per chain,
VNF coverage, per-node core budgets, link capacities, placement-consistency
linking, and the access-leg routing systems from every source to its chain's
first VNF and from the last VNF to every destination. Solving the LP
relaxation yields the dual prices the pricing problems consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .milp import EQ, GE, LE, BINARY, CONTINUOUS, MilpModel, MilpSolution
from .model import ChainConfiguration, Instance, UNBOUNDED


class BuilderError(ValueError):
    pass


class DualContractError(RuntimeError):
    pass


class ColumnPool:
    """Known configurations per chain plus the always-present artificial
    column flag. Duplicate configurations (same placements, same segment link
    sets) are rejected on add."""

    def __init__(self, instance: Instance):
        self._cols: dict[str, list[ChainConfiguration]] = {c.id: [] for c in instance.chains}
        self._keys: dict[str, set] = {c.id: set() for c in instance.chains}
        self.artificial: dict[str, bool] = {c.id: True for c in instance.chains}

    def add(self, config: ChainConfiguration) -> bool:
        key = config.key()
        if key in self._keys[config.chain]:
            return False
        self._keys[config.chain].add(key)
        self._cols[config.chain].append(config)
        return True

    def columns(self, chain_id: str) -> tuple[ChainConfiguration, ...]:
        return tuple(self._cols[chain_id])

    def counts(self) -> dict[str, int]:
        return {c: len(cols) for c, cols in self._cols.items()}

    def total(self) -> int:
        return sum(len(cols) for cols in self._cols.values())


@dataclass
class DualPrices:
    """Dual vector of the master LP, normalized so every family except the
    convexity rows is nonnegative (<= rows are negated)."""

    u_convexity: dict[str, float] = field(default_factory=dict)
    u_function: dict[str, float] = field(default_factory=dict)
    u_core: dict[str, float] = field(default_factory=dict)
    u_capacity: dict[str, float] = field(default_factory=dict)
    u_consist_lo: dict[tuple[str, str], float] = field(default_factory=dict)
    u_consist_hi: dict[tuple[str, str], float] = field(default_factory=dict)


def big_m_cost(instance: Instance) -> float:
    """Artificial-column objective coefficient: strictly dominates any real
    routing cost so artificial usage in the final ILP signals infeasibility."""
    total = float(sum((d.rate for d in instance.demands), start=0))
    return 1e6 * max(total, 1.0) * max(len(instance.topology.links), 1)


def build_rmp(instance: Instance, pool: ColumnPool, integer: bool = False) -> MilpModel:
    """Construct the master over the pooled columns.

    Variables: z per column, one artificial per chain, x per (vnf, NFV node),
    and per-demand access-leg link indicators for the first and last legs.
    With `integer` set, z/x/y become binary (the final ILP); otherwise all are
    relaxed to [0,1].
    """
    topo = instance.topology
    nfv = instance.nfv_nodes_sorted
    big = big_m_cost(instance)
    kind = BINARY if integer else CONTINUOUS
    m = MilpModel()
    m.meta["big"] = big
    rows: dict[str, tuple] = {}
    m.meta["rows"] = rows
    z_vars: dict[str, tuple[str, int]] = {}
    art_vars: dict[str, str] = {}
    x_vars: dict[tuple[str, str], str] = {}
    y_vars: dict[tuple, str] = {}
    m.meta["z"] = z_vars
    m.meta["art"] = art_vars
    m.meta["x"] = x_vars
    m.meta["y"] = y_vars

    chain_rate = {c.id: float(instance.chain_rate(c.id)) for c in instance.chains}
    demanded = {c.id for c in instance.chains if chain_rate[c.id] > 0.0}
    for cid in sorted(demanded):
        if not pool.columns(cid) and not pool.artificial.get(cid, False):
            raise BuilderError(f"no column pooled for demanded chain {cid}")

    # In the relaxation, z and the artificials get no explicit upper bound:
    # the convexity equality already implies z <= 1, and a redundant bound
    # would let a selected column sit at its upper bound with a negative
    # reduced cost, which destroys the pricing optimality condition.
    # Branching order in the final ILP: configuration choice first, then
    # placement indicators, then access legs (which integralize on their own
    # once the former are fixed).
    z_ub = 1.0 if integer else float("inf")
    for chain in instance.chains:
        for k, config in enumerate(pool.columns(chain.id)):
            name = f"z[{chain.id},{k}]"
            m.add_variable(name, kind=kind, lb=0.0, ub=z_ub, obj=float(config.cost))
            z_vars[name] = (chain.id, k)
        name = f"art[{chain.id}]"
        m.add_variable(name, kind=kind, lb=0.0, ub=z_ub, obj=big)
        art_vars[name] = chain.id

    for f in instance.catalog:
        for v in nfv:
            name = f"x[{f.id},{v}]"
            m.add_variable(name, kind=kind, lb=0.0, ub=1.0, obj=0.0, branch_priority=1)
            x_vars[(f.id, v)] = name

    for d in instance.demands:
        rate = float(d.rate)
        for lk in topo.links:
            yf = f"yf[{d.chain},{d.source},{d.destination},{lk.id}]"
            yl = f"yl[{d.chain},{d.source},{d.destination},{lk.id}]"
            m.add_variable(yf, kind=kind, lb=0.0, ub=1.0, obj=rate, branch_priority=2)
            m.add_variable(yl, kind=kind, lb=0.0, ub=1.0, obj=rate, branch_priority=2)
            y_vars[("first", d.chain, d.source, d.destination, lk.id)] = yf
            y_vars[("last", d.chain, d.source, d.destination, lk.id)] = yl

    # Eq. (3): exactly one configuration (or the artificial) per chain.
    for chain in instance.chains:
        coeffs = {f"z[{chain.id},{k}]": 1.0 for k in range(len(pool.columns(chain.id)))}
        coeffs[f"art[{chain.id}]"] = 1.0
        name = m.add_constraint(f"conv[{chain.id}]", coeffs, EQ, 1.0)
        rows[name] = ("conv", chain.id)

    # Eq. (4): every VNF placed somewhere by the selected columns. The
    # artificial stands in for an imaginary placement of its chain's VNFs so
    # an artificial-only pool stays feasible.
    for f in instance.catalog:
        coeffs: dict[str, float] = {}
        for chain in instance.chains:
            placed = f.id in chain.distinct_vnfs
            for k, config in enumerate(pool.columns(chain.id)):
                cnt = sum(1 for v, g in config.placements if g == f.id)
                if cnt:
                    coeffs[f"z[{chain.id},{k}]"] = float(cnt)
            if placed:
                coeffs[f"art[{chain.id}]"] = 1.0
        name = m.add_constraint(f"cover[{f.id}]", coeffs, GE, 1.0)
        rows[name] = ("cover", f.id)

    # Eq. (5): CPU cores per NFV-PoP; omitted entirely for unbounded nodes.
    m.meta["core_unbounded"] = [v for v in nfv if instance.core_budget[v] is UNBOUNDED]
    for v in nfv:
        budget = instance.core_budget[v]
        if budget is UNBOUNDED:
            continue
        coeffs = {}
        for chain in instance.chains:
            rate = chain_rate[chain.id]
            for k, config in enumerate(pool.columns(chain.id)):
                load = 0.0
                for node, f in config.placements:
                    if node == v:
                        load += float(instance.vnf(f).cores_per_gbps) * rate
                if load:
                    coeffs[f"z[{chain.id},{k}]"] = load
        name = m.add_constraint(f"core[{v}]", coeffs, LE, float(budget))
        rows[name] = ("core", v)

    # Eq. (6): per-link capacity over access legs and segment flows.
    for lk in topo.links:
        coeffs = {}
        for d in instance.demands:
            rate = float(d.rate)
            coeffs[y_vars[("first", d.chain, d.source, d.destination, lk.id)]] = rate
            coeffs[y_vars[("last", d.chain, d.source, d.destination, lk.id)]] = rate
        for chain in instance.chains:
            rate = chain_rate[chain.id]
            for k, config in enumerate(pool.columns(chain.id)):
                mult = config.link_multiplicity().get(lk.id, 0)
                if mult and rate:
                    coeffs[f"z[{chain.id},{k}]"] = rate * mult
        name = m.add_constraint(f"cap[{lk.id}]", coeffs, LE, float(lk.capacity))
        rows[name] = ("cap", lk.id)

    # Eqs. (7)-(8): x consistent with the selected placements, M = |C|.
    bigm = float(len(instance.chains))
    for f in instance.catalog:
        for v in nfv:
            sel = {}
            for chain in instance.chains:
                for k, config in enumerate(pool.columns(chain.id)):
                    if (v, f.id) in config.placements:
                        sel[f"z[{chain.id},{k}]"] = 1.0
            lo = dict(sel)
            lo[x_vars[(f.id, v)]] = -1.0
            name = m.add_constraint(f"lnklo[{f.id},{v}]", lo, GE, 0.0)
            rows[name] = ("lo", (v, f.id))
            hi = dict(sel)
            hi[x_vars[(f.id, v)]] = -bigm
            name = m.add_constraint(f"lnkhi[{f.id},{v}]", hi, LE, 0.0)
            rows[name] = ("hi", (v, f.id))

    # Eqs. (9)-(16): access-leg routing per demand.
    nfv_set = topo.nfv_nodes
    for d in instance.demands:
        chain = instance.chain(d.chain)
        first, last = chain.first, chain.last
        tag = f"{d.chain},{d.source},{d.destination}"

        def yname(leg, lid):
            return y_vars[(leg, d.chain, d.source, d.destination, lid)]

        coeffs = {yname("first", lk.id): 1.0 for lk in topo.out_links(d.source)}
        if d.source in nfv_set:
            coeffs[x_vars[(first, d.source)]] = 1.0
        name = m.add_constraint(f"src[{tag}]", coeffs, EQ, 1.0)
        rows[name] = ("src", (d.chain, d.source, d.destination))

        for v in nfv:
            if v == d.source:
                continue
            coeffs = {yname("first", lk.id): 1.0 for lk in topo.in_links(v)}
            coeffs[x_vars[(first, v)]] = -1.0
            m.add_constraint(f"fin[{tag},{v}]", coeffs, GE, 0.0)
            coeffs = {yname("first", lk.id): 1.0 for lk in topo.out_links(v)}
            for lk in topo.in_links(v):
                coeffs[yname("first", lk.id)] = coeffs.get(yname("first", lk.id), 0.0) - 1.0
            coeffs[x_vars[(first, v)]] = 1.0
            m.add_constraint(f"fbal[{tag},{v}]", coeffs, EQ, 0.0)
        for v in sorted(topo.nodes - nfv_set):
            if v == d.source:
                continue
            coeffs = {yname("first", lk.id): 1.0 for lk in topo.out_links(v)}
            for lk in topo.in_links(v):
                coeffs[yname("first", lk.id)] = coeffs.get(yname("first", lk.id), 0.0) - 1.0
            m.add_constraint(f"fcon[{tag},{v}]", coeffs, EQ, 0.0)

        coeffs = {yname("last", lk.id): 1.0 for lk in topo.in_links(d.destination)}
        if d.destination in nfv_set:
            coeffs[x_vars[(last, d.destination)]] = 1.0
        name = m.add_constraint(f"dst[{tag}]", coeffs, EQ, 1.0)
        rows[name] = ("dst", (d.chain, d.source, d.destination))

        for v in nfv:
            if v == d.destination:
                continue
            coeffs = {yname("last", lk.id): 1.0 for lk in topo.out_links(v)}
            coeffs[x_vars[(last, v)]] = -1.0
            m.add_constraint(f"lout[{tag},{v}]", coeffs, GE, 0.0)
            coeffs = {yname("last", lk.id): 1.0 for lk in topo.out_links(v)}
            for lk in topo.in_links(v):
                coeffs[yname("last", lk.id)] = coeffs.get(yname("last", lk.id), 0.0) - 1.0
            coeffs[x_vars[(last, v)]] = -1.0
            m.add_constraint(f"lbal[{tag},{v}]", coeffs, EQ, 0.0)
        for v in sorted(topo.nodes - nfv_set):
            if v == d.destination:
                continue
            coeffs = {yname("last", lk.id): 1.0 for lk in topo.out_links(v)}
            for lk in topo.in_links(v):
                coeffs[yname("last", lk.id)] = coeffs.get(yname("last", lk.id), 0.0) - 1.0
            m.add_constraint(f"lcon[{tag},{v}]", coeffs, EQ, 0.0)

    return m


def extract_duals(model: MilpModel, solution: MilpSolution) -> DualPrices:
    """Map kernel duals onto the paper-facing dual vector.

    Kernel convention is <=: dual <= 0, >=: dual >= 0. Stored values are all
    nonnegative (the <= families are negated), matching the signs the pricing
    objective expects. Rows omitted for unbounded-core nodes yield zero.
    """
    if solution.status != "optimal":
        raise DualContractError(f"duals require an optimal LP solve, got {solution.status}")
    duals = DualPrices()
    for name, (family, key) in model.meta["rows"].items():
        d = solution.duals.get(name, 0.0)
        if family == "conv":
            duals.u_convexity[key] = d
        elif family == "cover":
            duals.u_function[key] = max(0.0, d)
        elif family == "core":
            duals.u_core[key] = max(0.0, -d)
        elif family == "cap":
            duals.u_capacity[key] = max(0.0, -d)
        elif family == "lo":
            duals.u_consist_lo[key] = max(0.0, d)
        elif family == "hi":
            duals.u_consist_hi[key] = max(0.0, -d)
    for v in model.meta.get("core_unbounded", ()):
        duals.u_core[v] = 0.0
    return duals

"""Generic linear / mixed-integer program container.

A model is a list of named variables (continuous or binary, bounded, with an
objective coefficient) and named constraints (sparse coefficient mapping,
sense, right-hand side), always minimizing. Models are built once and treated
as immutable by the solver; `meta` is a free-form side table for callers that
need to map rows/columns back to domain objects.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field


CONTINUOUS = "continuous"
BINARY = "binary"

LE = "<="
EQ = "="
GE = ">="


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class MilpVariable:
    name: str
    kind: str
    lb: float
    ub: float
    obj: float
    branch_priority: int = 0  # lower branches first; ties by declaration order


@dataclass(frozen=True)
class MilpConstraint:
    name: str
    coeffs: dict[str, float]
    sense: str
    rhs: float


@dataclass
class MilpModel:
    variables: list[MilpVariable] = field(default_factory=list)
    constraints: list[MilpConstraint] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    _var_index: dict[str, int] = field(default_factory=dict, repr=False)
    _con_names: set[str] = field(default_factory=set, repr=False)

    def add_variable(
        self,
        name: str,
        kind: str = CONTINUOUS,
        lb: float = 0.0,
        ub: float = math.inf,
        obj: float = 0.0,
        branch_priority: int = 0,
    ) -> str:
        if name in self._var_index:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        if lb > ub:
            raise ModelError(f"variable {name!r}: lb {lb} exceeds ub {ub}")
        if not (math.isfinite(lb) or math.isfinite(ub)):
            raise ModelError(f"variable {name!r}: needs at least one finite bound")
        self._var_index[name] = len(self.variables)
        self.variables.append(
            MilpVariable(name, kind, float(lb), float(ub), float(obj), int(branch_priority))
        )
        return name

    def add_constraint(self, name: str, coeffs: dict[str, float], sense: str, rhs: float) -> str:
        if name in self._con_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        if sense not in (LE, EQ, GE):
            raise ModelError(f"unknown constraint sense {sense!r}")
        for var in coeffs:
            if var not in self._var_index:
                raise ModelError(f"constraint {name!r} references unknown variable {var!r}")
        self._con_names.add(name)
        self.constraints.append(
            MilpConstraint(name, {k: float(v) for k, v in coeffs.items()}, sense, float(rhs))
        )
        return name

    def var_index(self, name: str) -> int:
        return self._var_index[name]

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def binary_names(self) -> list[str]:
        return [v.name for v in self.variables if v.kind == BINARY]

    def to_lp_format(self) -> str:
        """Render in CPLEX-style LP text format for external cross-checks."""
        names = _sanitized_names([v.name for v in self.variables])
        cnames = _sanitized_names([c.name for c in self.constraints], prefix="c")
        lines = ["Minimize"]
        terms = [
            _term(v.obj, names[i], first=(k == 0))
            for k, (i, v) in enumerate(
                (i, v) for i, v in enumerate(self.variables) if v.obj != 0.0
            )
        ]
        lines.append(" obj: " + (" ".join(terms) if terms else "0 " + names[0]))
        lines.append("Subject To")
        for ci, con in enumerate(self.constraints):
            parts = [
                _term(coef, names[self._var_index[var]], first=(k == 0))
                for k, (var, coef) in enumerate(sorted(con.coeffs.items()))
            ]
            body = " ".join(parts) if parts else "0 " + names[0]
            lines.append(f" {cnames[ci]}: {body} {con.sense} {_num(con.rhs)}")
        lines.append("Bounds")
        for i, v in enumerate(self.variables):
            lo = "-inf" if not math.isfinite(v.lb) else _num(v.lb)
            hi = "+inf" if not math.isfinite(v.ub) else _num(v.ub)
            lines.append(f" {lo} <= {names[i]} <= {hi}")
        binaries = [names[i] for i, v in enumerate(self.variables) if v.kind == BINARY]
        if binaries:
            lines.append("Binaries")
            for chunk in range(0, len(binaries), 8):
                lines.append(" " + " ".join(binaries[chunk : chunk + 8]))
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MilpSolution:
    status: str  # optimal | infeasible | unbounded | iteration-limit
    objective: float | None
    primal: dict[str, float]
    duals: dict[str, float]
    stats: dict

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


_NAME_RE = re.compile(r"[^A-Za-z0-9_.]")


def _sanitized_names(names: list[str], prefix: str = "x") -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    for name in names:
        clean = _NAME_RE.sub("_", name)
        if not clean or clean[0].isdigit() or clean[0] == ".":
            clean = prefix + "_" + clean
        base, k = clean, 1
        while clean in seen:
            k += 1
            clean = f"{base}_{k}"
        seen.add(clean)
        out.append(clean)
    return out


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _term(coef: float, name: str, first: bool) -> str:
    sign = "-" if coef < 0 else ("" if first else "+")
    mag = abs(coef)
    coef_s = "" if mag == 1.0 else _num(mag) + " "
    lead = sign if first else (sign + " " if sign else "")
    return f"{lead}{coef_s}{name}"

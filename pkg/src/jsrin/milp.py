"""Exact MILP model: variables, tagged constraint rows C1-C9, objective.

The model can be written to fixed-format MPS (and read back), so any
external MILP solver can be used on instances too large for
:mod:`jsrin.exact`.  Variable and row names are at most eight characters,
as fixed MPS requires:

* ``X{n}``, ``W{n}``, ``Z{n}``, ``Y{n}``, ``L{n}`` for x, w, z, y, lambda
* ``C{k}R{n}`` for the n-th row of constraint family Ck
"""
from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .model import Allocation, NetworkInstance

log = logging.getLogger(__name__)

BINARY = "binary"
CONTINUOUS = "continuous"
TAGS = tuple(f"C{i}" for i in range(1, 10))
INT_TOL = 1e-6


class MilpError(ValueError):
    pass


@dataclass
class Variable:
    name: str
    kind: str
    lower: float = 0.0
    upper: Optional[float] = None


@dataclass
class Row:
    name: str
    tag: str
    coefs: Dict[str, float]
    sense: str  # "<=", ">=", "=="
    rhs: float

    def satisfied(self, values: Mapping[str, float], tol: float = 1e-9) -> bool:
        lhs = sum(c * values[v] for v, c in self.coefs.items())
        slack = tol * max(1.0, abs(self.rhs))
        if self.sense == "<=":
            return lhs <= self.rhs + slack
        if self.sense == ">=":
            return lhs >= self.rhs - slack
        return abs(lhs - self.rhs) <= slack


@dataclass
class MilpModel:
    name: str = "JSRIN"
    variables: Dict[str, Variable] = field(default_factory=dict)
    rows: List[Row] = field(default_factory=list)
    objective: Dict[str, float] = field(default_factory=dict)
    sense: str = "max"
    warnings: List[str] = field(default_factory=list)

    def add_var(self, name: str, kind: str, lower: float = 0.0, upper: Optional[float] = None) -> str:
        if kind == BINARY:
            lower, upper = 0.0, 1.0
        self.variables[name] = Variable(name, kind, lower, upper)
        return name

    def add_row(self, tag: str, coefs: Dict[str, float], sense: str, rhs: float) -> Row:
        counts = self._counts
        counts[tag] += 1
        row = Row(f"{tag}R{counts[tag]}", tag, coefs, sense, float(rhs))
        self.rows.append(row)
        return row

    @property
    def _counts(self) -> Counter:
        if "_tagcount" not in self.__dict__:
            self.__dict__["_tagcount"] = Counter(r.tag for r in self.rows)
        return self.__dict__["_tagcount"]

    def rows_by_tag(self) -> Dict[str, List[Row]]:
        out: Dict[str, List[Row]] = defaultdict(list)
        for r in self.rows:
            out[r.tag].append(r)
        return out

    def check_well_formed(self) -> None:
        for r in self.rows:
            if r.tag not in TAGS:
                raise MilpError(f"row {r.name} has bad tag {r.tag}")
            for v in r.coefs:
                if v not in self.variables:
                    raise MilpError(f"row {r.name} references unknown variable {v}")
        for v in self.variables.values():
            if v.kind == BINARY and (v.lower, v.upper) != (0.0, 1.0):
                raise MilpError(f"binary {v.name} must have bounds [0, 1]")

    def objective_value(self, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for v, c in self.objective.items())

    def violated_rows(self, values: Mapping[str, float], tol: float = 1e-9) -> List[Row]:
        return [r for r in self.rows if not r.satisfied(values, tol)]


@dataclass
class VariableMap:
    """Names <-> semantic indices: ("x", u, p), ("w", u, p, v), ("z", u, p, e), ("y", v), ("lam", m)."""

    by_name: Dict[str, tuple] = field(default_factory=dict)
    by_index: Dict[tuple, str] = field(default_factory=dict)

    def add(self, name: str, index: tuple) -> str:
        if name in self.by_name or index in self.by_index:
            raise MilpError(f"duplicate variable {name} / {index}")
        self.by_name[name] = index
        self.by_index[index] = name
        return name

    def __getitem__(self, index: tuple) -> str:
        return self.by_index[index]

    def get(self, index: tuple) -> Optional[str]:
        return self.by_index.get(index)


def _big_m_rate(instance: NetworkInstance, rate: float) -> float:
    return rate if instance.big_m_policy == "tight" else float(instance.big_m_policy)


def _big_m_node(instance: NetworkInstance, capacity: float) -> float:
    return capacity if instance.big_m_policy == "tight" else float(instance.big_m_policy)


def build_model(instance: NetworkInstance, mode: str = "opt_in") -> Tuple[MilpModel, VariableMap]:
    if mode not in ("opt_in", "opt_c"):
        raise ValueError(f"mode must be 'opt_in' or 'opt_c', got {mode!r}")
    model = MilpModel()
    vmap = VariableMap()
    cloud = instance.cloud
    counters = Counter()

    def new(prefix: str, index: tuple, kind: str, lower=0.0, upper=None) -> str:
        name = f"{prefix}{counters[prefix]}"
        counters[prefix] += 1
        vmap.add(name, index)
        return model.add_var(name, kind, lower, upper)

    for u in instance.users:
        paths = instance.paths_of(u.id)
        if not paths:
            model.warnings.append(f"empty path set for user {u.id}")
            log.warning("empty path set for user %s; user is structurally rejected", u.id)
        for p in paths:
            new("X", ("x", u.id, p.id), BINARY)
            for v in p.nodes:
                fixed_zero = mode == "opt_c" and v != cloud
                new("W", ("w", u.id, p.id, v), CONTINUOUS, 0.0, 0.0 if fixed_zero else None)
            for e in p.links:
                new("Z", ("z", u.id, p.id, e), BINARY)
    for n in instance.nodes:
        new("Y", ("y", n.id), BINARY)
    for m in instance.slices:
        new("L", ("lam", m.id), CONTINUOUS, 0.0, 1.0)

    x = lambda u, p: vmap[("x", u, p)]
    w = lambda u, p, v: vmap[("w", u, p, v)]
    z = lambda u, p, e: vmap[("z", u, p, e)]
    y = lambda v: vmap[("y", v)]
    lam = lambda m: vmap[("lam", m)]

    # C1
    for u in instance.users:
        paths = instance.paths_of(u.id)
        if paths:
            model.add_row("C1", {x(u.id, p.id): 1.0 for p in paths}, "<=", 1.0)
    # C2
    for u in instance.users:
        for p in instance.paths_of(u.id):
            coefs = {w(u.id, p.id, v): 1.0 for v in p.nodes}
            coefs[x(u.id, p.id)] = -u.rate_requirement
            model.add_row("C2", coefs, "==", 0.0)
    # C3
    for u in instance.users:
        big_m = _big_m_rate(instance, u.rate_requirement)
        for p in instance.paths_of(u.id):
            for v in p.nodes:
                for e in sorted(p.prefix_links[v]):
                    model.add_row("C3", {w(u.id, p.id, v): 1.0, z(u.id, p.id, e): -big_m}, "<=", 0.0)
    # C4
    touching: Dict[int, List[str]] = defaultdict(list)
    for u in instance.users:
        for p in instance.paths_of(u.id):
            for v in p.nodes:
                touching[v].append(w(u.id, p.id, v))
    for n in instance.nodes:
        coefs = {name: 1.0 for name in touching[n.id]}
        coefs[y(n.id)] = -_big_m_node(instance, n.compute_capacity)
        model.add_row("C4", coefs, "<=", 0.0)
    # C5, C6
    for s in instance.slices:
        members = [instance.user[u] for u in s.users]
        for n in instance.nodes:
            coefs = {w(u.id, p.id, n.id): 1.0 for u in members for p in instance.paths_of(u.id) if n.id in p.nodes}
            coefs[lam(s.id)] = -n.compute_capacity
            model.add_row("C5", coefs, "<=", 0.0)
        for e in instance.links:
            coefs = {z(u.id, p.id, e.id): u.rate_requirement
                     for u in members for p in instance.paths_of(u.id) if e.id in p.links}
            coefs[lam(s.id)] = -e.capacity
            model.add_row("C6", coefs, "<=", 0.0)
    # C7, C8
    for s in instance.slices:
        model.add_row("C7", {lam(s.id): 1.0}, ">=", s.min_fraction)
    if instance.slices:
        model.add_row("C8", {lam(s.id): 1.0 for s in instance.slices}, "==", 1.0)
    # C9
    for u in instance.users:
        for p in instance.paths_of(u.id):
            coefs = {w(u.id, p.id, v): instance.node[v].compute_delay_per_rate for v in p.nodes}
            for e in p.links:
                coefs[z(u.id, p.id, e)] = instance.link[e].delay_per_rate * u.rate_requirement
            model.add_row("C9", coefs, "<=", u.delay_budget)

    # objective: alpha * A - (V_ec + P_ec + E_ec)
    alpha = instance.objective_weight
    obj: Dict[str, float] = defaultdict(float)
    for u in instance.users:
        for p in instance.paths_of(u.id):
            obj[x(u.id, p.id)] += alpha
            for v in p.nodes:
                obj[w(u.id, p.id, v)] -= instance.node[v].compute_cost_per_rate
            for e in p.links:
                obj[z(u.id, p.id, e)] -= u.rate_requirement * instance.link[e].cost_per_rate
    for n in instance.nodes:
        obj[y(n.id)] -= n.activation_cost
    model.objective = dict(obj)
    model.check_well_formed()
    return model, vmap


def allocation_values(alloc: Allocation, vmap: VariableMap) -> Dict[str, float]:
    """Variable values that encode ``alloc`` (the inverse of import_solution)."""
    vals = {}
    for name, idx in vmap.by_name.items():
        kind = idx[0]
        if kind == "x":
            vals[name] = 1.0 if (idx[1], idx[2]) in alloc.path_choice else 0.0
        elif kind == "w":
            vals[name] = alloc.compute_share.get(idx[1:], 0.0)
        elif kind == "z":
            vals[name] = 1.0 if idx[1:] in alloc.link_use else 0.0
        elif kind == "y":
            vals[name] = 1.0 if idx[1] in alloc.node_active else 0.0
        else:
            vals[name] = alloc.slice_fraction.get(idx[1], 0.0)
    return vals


def import_solution(vmap: VariableMap, values: Mapping[str, float]) -> Allocation:
    missing = [n for n in vmap.by_name if n not in values]
    if missing:
        raise MilpError(f"missing variable {missing[0]}" + (f" (+{len(missing) - 1} more)" if len(missing) > 1 else ""))
    alloc = Allocation()
    for name, idx in vmap.by_name.items():
        val = float(values[name])
        kind = idx[0]
        if kind in ("x", "z", "y"):
            if min(abs(val), abs(val - 1.0)) > INT_TOL:
                raise MilpError(f"non-integral binary {name}={val!r}")
            if round(val) == 1:
                if kind == "x":
                    alloc.path_choice.add((idx[1], idx[2]))
                elif kind == "z":
                    alloc.link_use.add(idx[1:])
                else:
                    alloc.node_active.add(idx[1])
        elif kind == "w":
            if val != 0.0:
                alloc.compute_share[idx[1:]] = max(val, 0.0)
        else:
            alloc.slice_fraction[idx[1]] = val
    return alloc


# --------------------------------------------------------------------------
# fixed-format MPS

_FIELD_START = (1, 4, 14, 24, 39, 49)  # 0-based starts of fields 1-6
_FIELD_WIDTH = (2, 8, 8, 12, 8, 12)
_SENSE_CODE = {"<=": "L", ">=": "G", "==": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}
OBJ_ROW = "OBJ"


def format_number(x: float) -> str:
    """Shortest decimal string for ``x`` that fits in 12 columns."""
    if x == int(x) and abs(x) < 1e11:
        return str(int(x))
    s = repr(float(x))
    if len(s) <= 12:
        return s
    for digits in range(12, 0, -1):
        s = f"{x:.{digits}g}"
        if len(s) <= 12:
            return s
    raise MilpError(f"cannot format {x!r} in 12 columns")


def _line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    for name in (f2, f3, f5):
        if len(name) > 8:
            raise MilpError(f"name {name!r} longer than 8 characters")
    s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        s += f"   {f5:<8}  {f6:>12}"
    return s.rstrip()


def mps_text(model: MilpModel) -> str:
    model.check_well_formed()
    out = [f"NAME          {model.name}", "OBJSENSE", "    MAX" if model.sense == "max" else "    MIN", "ROWS"]
    out.append(_line("N", OBJ_ROW))
    for r in model.rows:
        out.append(_line(_SENSE_CODE[r.sense], r.name))
    out.append("COLUMNS")
    col_entries: Dict[str, List[Tuple[str, float]]] = {v: [] for v in model.variables}
    for v, c in model.objective.items():
        if c != 0.0:
            col_entries[v].append((OBJ_ROW, c))
    for r in model.rows:
        for v, c in r.coefs.items():
            if c != 0.0:
                col_entries[v].append((r.name, c))
    in_int = False
    marker = 0
    for name, var in model.variables.items():
        is_int = var.kind == BINARY
        if is_int != in_int:
            tag = "'INTORG'" if is_int else "'INTEND'"
            out.append(_line("", f"M{marker}", "'MARKER'", "", tag).rstrip())
            marker += 1
            in_int = is_int
        entries = col_entries[name]
        if not entries:
            # keep empty columns visible to readers
            entries = [(OBJ_ROW, 0.0)]
        for i in range(0, len(entries), 2):
            pair = entries[i:i + 2]
            if len(pair) == 2:
                out.append(_line("", name, pair[0][0], format_number(pair[0][1]), pair[1][0], format_number(pair[1][1])))
            else:
                out.append(_line("", name, pair[0][0], format_number(pair[0][1])))
    if in_int:
        out.append(_line("", f"M{marker}", "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    rhs = [(r.name, r.rhs) for r in model.rows if r.rhs != 0.0]
    for i in range(0, len(rhs), 2):
        pair = rhs[i:i + 2]
        if len(pair) == 2:
            out.append(_line("", "RHS", pair[0][0], format_number(pair[0][1]), pair[1][0], format_number(pair[1][1])))
        else:
            out.append(_line("", "RHS", pair[0][0], format_number(pair[0][1])))
    out.append("BOUNDS")
    for name, var in model.variables.items():
        if var.kind == BINARY:
            out.append(_line("BV", "BND", name))
        elif var.upper is not None and var.upper == var.lower:
            out.append(_line("FX", "BND", name, format_number(var.lower)))
        else:
            if var.lower != 0.0:
                out.append(_line("LO", "BND", name, format_number(var.lower)))
            if var.upper is not None:
                out.append(_line("UP", "BND", name, format_number(var.upper)))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_model(model: MilpModel, vmap: VariableMap, path) -> FsPath:
    missing = [n for n in model.variables if n not in vmap.by_name]
    if missing:
        raise MilpError(f"variable {missing[0]} not in variable map")
    path = FsPath(path)
    path.write_text(mps_text(model))
    return path


def _fields(line: str) -> List[str]:
    padded = line.ljust(61)
    return [padded[s:s + w].strip() for s, w in zip(_FIELD_START, _FIELD_WIDTH)]


def read_mps(path) -> MilpModel:
    """Parse a fixed-format MPS file written by :func:`export_model`.

    Row tags are recovered from the ``C{k}R{n}`` row names.
    """
    model = MilpModel()
    section = None
    in_int = False
    sense_of: Dict[str, str] = {}
    rows: Dict[str, Row] = {}
    obj_row = None
    for raw in FsPath(path).read_text().splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            head = raw.split()
            section = head[0]
            if section == "NAME":
                model.name = raw[14:].strip() or (head[1] if len(head) > 1 else "")
            continue
        if section == "OBJSENSE":
            model.sense = "max" if raw.strip().upper().startswith("MAX") else "min"
            continue
        f1, f2, f3, f4, f5, f6 = _fields(raw)
        if section == "ROWS":
            if f1 == "N":
                obj_row = f2
            else:
                tag = f2.split("R")[0]
                row = Row(f2, tag, {}, _CODE_SENSE[f1], 0.0)
                rows[f2] = row
                model.rows.append(row)
        elif section == "COLUMNS":
            if f3 == "'MARKER'":
                in_int = f5 == "'INTORG'"
                continue
            if f2 not in model.variables:
                model.add_var(f2, BINARY if in_int else CONTINUOUS)
                if in_int:
                    model.variables[f2].upper = None  # set by the BOUNDS section
            for rname, val in ((f3, f4), (f5, f6)):
                if not rname:
                    continue
                if rname == obj_row:
                    if float(val) != 0.0:
                        model.objective[f2] = float(val)
                else:
                    rows[rname].coefs[f2] = float(val)
        elif section == "RHS":
            for rname, val in ((f3, f4), (f5, f6)):
                if rname:
                    rows[rname].rhs = float(val)
        elif section == "BOUNDS":
            var = model.variables[f3]
            if f1 == "BV":
                var.kind, var.lower, var.upper = BINARY, 0.0, 1.0
            elif f1 == "FX":
                var.lower = var.upper = float(f4)
            elif f1 == "LO":
                var.lower = float(f4)
            elif f1 == "UP":
                var.upper = float(f4)
            else:
                raise MilpError(f"unsupported bound type {f1}")
    for var in model.variables.values():
        if var.kind == BINARY and var.upper is None:
            var.upper = 1.0
    model.__dict__.pop("_tagcount", None)
    model.check_well_formed()
    return model


def read_solution(path) -> Dict[str, float]:
    """Read ``name value`` lines; other lines are skipped.

    Also accepts raw solver dumps (status lines, ``# Columns``/``# Rows``
    blocks); reading stops at a ``# Dual ...`` block so dual values never
    shadow primal ones.
    """
    values = {}
    for raw in FsPath(path).read_text().splitlines():
        stripped = raw.strip()
        if stripped.startswith("#"):
            if stripped[1:].strip().lower().startswith("dual"):
                break
            continue
        parts = stripped.split()
        if len(parts) < 2:
            continue
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            continue
    return values


def write_solution(values: Mapping[str, float], path) -> None:
    FsPath(path).write_text("".join(f"{k} {v!r}\n" for k, v in values.items()))

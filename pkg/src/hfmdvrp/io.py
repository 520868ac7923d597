"""Instance and solution files.

Instances use a TSPLIB-style text format. The extended form looks like::

    NAME : SMT-t6-r2-d1
    TYPE : HFMDVRP-DV
    PICKING : 5
    STATIONS : 1
    ROBOTS : 2
    EDGE_WEIGHT_TYPE : MAN_2D
    NODE_COORD_SECTION
    1 10 20
    ...                      (picks 1..m, then stations m+1..m+p)
    DEMAND_SECTION
    1 7
    ...                      (stations carry demand 0)
    STATION_SECTION
    6
    -1
    ROBOT_SECTION
    1 0 0 100 1.5 amr-0100   (id x y capacity speed [model])
    EOF

Classic single-depot CVRP files (``CAPACITY`` header plus ``DEPOT_SECTION``)
load as XMT instances: every non-depot node becomes a pick, renumbered
densely in node order, and robots with speed 1.0 start at the depot.

Solutions are versioned JSON records.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any

from .model import (
    DeliveryStation,
    Family,
    Instance,
    PickingTask,
    Point,
    Robot,
    RouteStep,
    Solution,
    StepKind,
    validate_instance,
)

SOLUTION_FORMAT = "hfmdvrp-solution"
SOLUTION_VERSION = 1

SECTIONS = (
    "NODE_COORD_SECTION",
    "DEMAND_SECTION",
    "DEPOT_SECTION",
    "STATION_SECTION",
    "ROBOT_SECTION",
)

# bounded so values stay well inside int64 arithmetic
_INT = re.compile(r"[+-]?\d{1,15}\Z")
_DECIMAL = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d{1,3})?\Z")
_HEADER = re.compile(r"([A-Z_][A-Z0-9_]*)\s*:\s*(.*)\Z")
_K_IN_NAME = re.compile(r"-k(\d+)(?![0-9])")


class ParseError(ValueError):
    """Malformed or inconsistent input, located by line/column where possible."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None, ref: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        self.ref = ref
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + message)


@dataclass
class _Row:
    line: int
    fields: list[tuple[str, int]]  # token and its 1-based column


def _tokens(text: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", text)]


def _decode(data: str | bytes) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data.count(b"\n", 0, e.start) + 1
        col = e.start - (data.rfind(b"\n", 0, e.start) + 1) + 1
        raise ParseError("not valid UTF-8 text", line, col) from None


def _int(tok: tuple[str, int], line: int, what: str) -> int:
    text, col = tok
    if not _INT.match(text):
        raise ParseError(f"{what}: expected an integer, got {text!r}", line, col)
    return int(text)


def _coord(tok: tuple[str, int], line: int, lenient: bool) -> int:
    text, col = tok
    if _INT.match(text):
        return int(text)
    if lenient and _DECIMAL.match(text):
        value = float(text)
        if abs(value) < 1e15 and value == int(value):
            return int(value)
    raise ParseError(f"coordinate: expected an integer, got {text!r}", line, col)


def _speed(tok: tuple[str, int], line: int) -> float:
    text, col = tok
    if not _DECIMAL.match(text):
        raise ParseError(f"speed: expected a decimal number, got {text!r}", line, col)
    value = float(text)
    if not math.isfinite(value) or value <= 0:
        raise ParseError(f"speed must be a positive finite number, got {text!r}", line, col)
    return value


def _scan(text: str) -> tuple[dict[str, tuple[str, int]], dict[str, list[_Row]]]:
    header: dict[str, tuple[str, int]] = {}
    sections: dict[str, list[_Row]] = {}
    current: str | None = None
    ended = False
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        stripped = line.strip()
        if not stripped:
            continue
        if ended:
            raise ParseError("content after EOF", lineno, 1)
        if stripped == "EOF":
            ended = True
            continue
        key = stripped.split()[0]
        if key in SECTIONS and stripped == key:
            if key in sections:
                raise ParseError(f"duplicate {key}", lineno, 1)
            sections[key] = []
            current = key
            continue
        if current is None:
            m = _HEADER.match(stripped)
            if not m:
                raise ParseError(f"expected 'KEY : value', got {stripped[:40]!r}", lineno, 1)
            name, value = m.group(1), m.group(2).strip()
            if name in header:
                raise ParseError(f"duplicate header {name}", lineno, 1)
            header[name] = (value, lineno)
            continue
        if _HEADER.match(stripped) and not _INT.match(key):
            raise ParseError(f"header {key} inside {current}", lineno, 1)
        sections[current].append(_Row(lineno, _tokens(line)))
    return header, sections


def _header_int(header, key: str, required: bool = True) -> int | None:
    if key not in header:
        if required:
            raise ParseError(f"missing {key} header")
        return None
    value, line = header[key]
    if not _INT.match(value):
        raise ParseError(f"{key}: expected an integer, got {value!r}", line)
    n = int(value)
    if n < 0:
        raise ParseError(f"{key} must not be negative", line)
    return n


def _node_table(rows: list[_Row], arity: int, what: str, lenient: bool = False) -> dict[int, tuple[int, ...]]:
    out: dict[int, tuple[int, ...]] = {}
    for row in rows:
        if len(row.fields) != arity + 1:
            raise ParseError(f"{what}: expected {arity + 1} fields, got {len(row.fields)}", row.line, 1)
        nid = _int(row.fields[0], row.line, f"{what} id")
        if nid in out:
            raise ParseError(f"{what}: duplicate node id {nid}", row.line, row.fields[0][1], ref=nid)
        if what == "NODE_COORD_SECTION":
            out[nid] = tuple(_coord(t, row.line, lenient) for t in row.fields[1:])
        else:
            out[nid] = tuple(_int(t, row.line, what) for t in row.fields[1:])
    return out


def _id_list(rows: list[_Row], what: str) -> list[int]:
    ids: list[int] = []
    closed = False
    for row in rows:
        for tok in row.fields:
            if closed:
                raise ParseError(f"{what}: entries after -1", row.line, tok[1])
            v = _int(tok, row.line, what)
            if v == -1:
                closed = True
            else:
                ids.append(v)
    if not closed:
        raise ParseError(f"{what}: missing -1 terminator", rows[-1].line if rows else None)
    return ids


def _require(sections, key: str) -> list[_Row]:
    if key not in sections:
        raise ParseError(f"missing {key}")
    return sections[key]


def _finish(inst: Instance) -> Instance:
    report = validate_instance(inst)
    if not report.ok:
        raise ParseError("invalid instance: " + "; ".join(report.violations))
    return inst


def parse_instance(data: str | bytes) -> Instance:
    """Parse extended or classic CVRP instance text into a validated Instance."""
    text = _decode(data)
    header, sections = _scan(text)
    if "ROBOTS" not in header and "CAPACITY" in header:
        return _parse_classic(header, sections)
    return _parse_extended(header, sections)


def _parse_extended(header, sections) -> Instance:
    name = header.get("NAME", ("", 0))[0]
    if not name:
        raise ParseError("missing NAME header")
    if "TYPE" not in header:
        raise ParseError("missing TYPE header")
    type_text, type_line = header["TYPE"]
    try:
        family = Family.from_problem_type(type_text)
    except ValueError as e:
        raise ParseError(str(e), type_line) from None
    ewt = header.get("EDGE_WEIGHT_TYPE")
    if ewt is not None and ewt[0] != "MAN_2D":
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt[0]!r}", ewt[1])
    m = _header_int(header, "PICKING")
    p = _header_int(header, "STATIONS")
    n = _header_int(header, "ROBOTS")

    coords = _node_table(_require(sections, "NODE_COORD_SECTION"), 2, "NODE_COORD_SECTION")
    demands = _node_table(_require(sections, "DEMAND_SECTION"), 1, "DEMAND_SECTION")
    station_nodes = _id_list(_require(sections, "STATION_SECTION"), "STATION_SECTION")

    if len(coords) != m + p:
        raise ParseError(f"node count mismatch: header says {m + p}, NODE_COORD_SECTION lists {len(coords)}")
    for nid in range(1, m + p + 1):
        if nid not in coords:
            raise ParseError(f"missing coordinates for node {nid}", ref=nid)
        if nid not in demands:
            raise ParseError(f"missing demand for node {nid}", ref=nid)
    extra = sorted(set(demands) - set(coords))
    if extra:
        raise ParseError(f"demand for unknown node {extra[0]}", ref=extra[0])
    if len(station_nodes) != p:
        raise ParseError(f"station count mismatch: header says {p}, STATION_SECTION lists {len(station_nodes)}")
    if sorted(station_nodes) != list(range(m + 1, m + p + 1)):
        bad = next((s for s in station_nodes if not m < s <= m + p), station_nodes[0] if station_nodes else None)
        raise ParseError(f"station nodes must be {m + 1}..{m + p}; offending node {bad}", ref=bad)

    tasks = tuple(PickingTask(i, Point(*coords[i]), demands[i][0]) for i in range(1, m + 1))
    for i in range(m + 1, m + p + 1):
        if demands[i][0] != 0:
            raise ParseError(f"station node {i} must have demand 0", ref=i)
    stations = tuple(DeliveryStation(i - m, Point(*coords[i])) for i in range(m + 1, m + p + 1))
    robots = _robots(_require(sections, "ROBOT_SECTION"), n)
    return _finish(Instance(name, tasks, stations, robots, family))


def _robots(rows: list[_Row], n: int) -> tuple[Robot, ...]:
    found: dict[int, Robot] = {}
    for row in rows:
        if len(row.fields) not in (5, 6):
            raise ParseError(f"ROBOT_SECTION: expected 5 or 6 fields, got {len(row.fields)}", row.line, 1)
        rid = _int(row.fields[0], row.line, "robot id")
        if rid in found:
            raise ParseError(f"duplicate robot id {rid}", row.line, row.fields[0][1], ref=rid)
        x = _int(row.fields[1], row.line, "robot x")
        y = _int(row.fields[2], row.line, "robot y")
        cap = _int(row.fields[3], row.line, "robot capacity")
        speed = _speed(row.fields[4], row.line)
        model = row.fields[5][0] if len(row.fields) == 6 else None
        found[rid] = Robot(rid, Point(x, y), cap, speed, model)
    if len(found) != n:
        raise ParseError(f"robot count mismatch: header says {n}, ROBOT_SECTION lists {len(found)}")
    for rid in range(1, n + 1):
        if rid not in found:
            raise ParseError(f"robot ids must be 1..{n}; missing {rid}", ref=rid)
    return tuple(found[i] for i in range(1, n + 1))


def _parse_classic(header, sections) -> Instance:
    name = header.get("NAME", ("", 0))[0] or "cvrp"
    capacity = _header_int(header, "CAPACITY")
    coords = _node_table(_require(sections, "NODE_COORD_SECTION"), 2, "NODE_COORD_SECTION", lenient=True)
    demands = _node_table(_require(sections, "DEMAND_SECTION"), 1, "DEMAND_SECTION")
    depots = _id_list(_require(sections, "DEPOT_SECTION"), "DEPOT_SECTION")
    dim = _header_int(header, "DIMENSION", required=False)
    if dim is not None and dim != len(coords):
        raise ParseError(f"node count mismatch: DIMENSION says {dim}, NODE_COORD_SECTION lists {len(coords)}")
    if len(depots) != 1:
        raise ParseError(f"expected exactly one depot, got {len(depots)}")
    depot = depots[0]
    if depot not in coords:
        raise ParseError(f"depot node {depot} has no coordinates", ref=depot)
    for nid in coords:
        if nid not in demands:
            raise ParseError(f"missing demand for node {nid}", ref=nid)
    extra = sorted(set(demands) - set(coords))
    if extra:
        raise ParseError(f"demand for unknown node {extra[0]}", ref=extra[0])

    customers = sorted(nid for nid in coords if nid != depot)
    tasks = tuple(
        PickingTask(i + 1, Point(*coords[nid]), demands[nid][0]) for i, nid in enumerate(customers)
    )
    n = _classic_fleet_size(name, header, [t.demand for t in tasks], capacity)
    start = Point(*coords[depot])
    robots = tuple(Robot(i + 1, start, capacity, 1.0) for i in range(n))
    return _finish(Instance(name, tasks, (DeliveryStation(1, start),), robots, Family.XMT))


def _classic_fleet_size(name: str, header, demands: list[int], capacity: int) -> int:
    m = _K_IN_NAME.search(name)
    if m and int(m.group(1)) > 0:
        return int(m.group(1))
    vehicles = _header_int(header, "VEHICLES", required=False)
    if vehicles:
        return vehicles
    if capacity <= 0:
        raise ParseError("CAPACITY must be positive")
    return max(1, math.ceil(sum(demands) / capacity))


def _check_token(value: str, what: str) -> None:
    if not value or any(c.isspace() for c in value):
        raise ValueError(f"{what} must be a non-empty token without whitespace: {value!r}")


def write_instance(inst: Instance) -> str:
    """Canonical text: entities ordered by id, single spaces, LF line ends."""
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.violations))
    if inst.name != inst.name.strip() or not inst.name or "\n" in inst.name or "\r" in inst.name:
        raise ValueError(f"instance name must be one trimmed line: {inst.name!r}")
    tasks = sorted(inst.tasks, key=lambda t: t.id)
    stations = sorted(inst.stations, key=lambda s: s.id)
    robots = sorted(inst.robots, key=lambda r: r.id)
    m = len(tasks)
    out = [
        f"NAME : {inst.name}",
        f"TYPE : {inst.family.problem_type}",
        f"PICKING : {m}",
        f"STATIONS : {len(stations)}",
        f"ROBOTS : {len(robots)}",
        "EDGE_WEIGHT_TYPE : MAN_2D",
        "NODE_COORD_SECTION",
    ]
    out += [f"{t.id} {t.pos[0]} {t.pos[1]}" for t in tasks]
    out += [f"{m + s.id} {s.pos[0]} {s.pos[1]}" for s in stations]
    out.append("DEMAND_SECTION")
    out += [f"{t.id} {t.demand}" for t in tasks]
    out += [f"{m + s.id} 0" for s in stations]
    out.append("STATION_SECTION")
    out += [str(m + s.id) for s in stations]
    out.append("-1")
    out.append("ROBOT_SECTION")
    for r in robots:
        row = f"{r.id} {r.start[0]} {r.start[1]} {r.max_capacity} {float(r.speed)!r}"
        if r.model_name is not None:
            _check_token(r.model_name, "robot model name")
            row += f" {r.model_name}"
        out.append(row)
    out.append("EOF")
    return "\n".join(out) + "\n"


def write_solution(sol: Solution) -> str:
    record = {
        "format": SOLUTION_FORMAT,
        "version": SOLUTION_VERSION,
        "instance": sol.instance,
        "algorithm": sol.algorithm,
        "seed": sol.seed,
        "total_cost": float(sol.total_cost),
        "depot_visits": sol.depot_visits,
        "used_robots": sol.used_robots,
        "wall_time": float(sol.wall_time),
        "routes": [
            {"robot": rid, "steps": [[s.kind.value, s.ref] for s in sol.routes[rid]]}
            for rid in sorted(sol.routes)
        ],
    }
    return json.dumps(record, indent=2, allow_nan=False) + "\n"


def _field(record: dict, key: str, kind: type | tuple[type, ...]) -> Any:
    if key not in record:
        raise ParseError(f"solution: missing field {key!r}")
    value = record[key]
    if isinstance(value, bool) or not isinstance(value, kind):
        raise ParseError(f"solution: field {key!r} has the wrong type")
    return value


def parse_solution(data: str | bytes) -> Solution:
    text = _decode(data)
    try:
        record = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"solution: {e.msg}", e.lineno, e.colno) from None
    except RecursionError:
        raise ParseError("solution: nesting too deep") from None
    if not isinstance(record, dict):
        raise ParseError("solution: expected a JSON object")
    if record.get("format") != SOLUTION_FORMAT:
        raise ParseError(f"solution: format must be {SOLUTION_FORMAT!r}")
    version = _field(record, "version", int)
    if version != SOLUTION_VERSION:
        raise ParseError(f"solution: unsupported version {version}")
    routes: dict[int, tuple[RouteStep, ...]] = {}
    for entry in _field(record, "routes", list):
        if not isinstance(entry, dict):
            raise ParseError("solution: route entries must be objects")
        rid = _field(entry, "robot", int)
        if rid in routes:
            raise ParseError(f"solution: duplicate route for robot {rid}", ref=rid)
        steps = []
        for step in _field(entry, "steps", list):
            if (
                not isinstance(step, list)
                or len(step) != 2
                or step[0] not in ("pick", "deliver")
                or isinstance(step[1], bool)
                or not isinstance(step[1], int)
            ):
                raise ParseError(f"solution: malformed step in route of robot {rid}", ref=rid)
            steps.append(RouteStep(StepKind(step[0]), step[1]))
        routes[rid] = tuple(steps)
    return Solution(
        routes=routes,
        total_cost=float(_field(record, "total_cost", (int, float))),
        depot_visits=_field(record, "depot_visits", int),
        used_robots=_field(record, "used_robots", int),
        wall_time=float(_field(record, "wall_time", (int, float))),
        algorithm=_field(record, "algorithm", str),
        seed=_field(record, "seed", int),
        instance=_field(record, "instance", str),
    )

"""Scenario files and leader input programs.

A scenario is an INI file with these sections::

    [scenario]
    name = example1            # optional, defaults to the file stem
    mode = track               # track | consensus | formation
    duration = 20
    dt = 1e-3
    gains = 2.25, 4.5, 1, 9.25 # k_p, k_d, k, k_e (optional)
    log_branch = plus          # plus | minus (optional)
    output = example1.csv      # optional CSV path

    [nodes]                    # theta, x, y[, omega, vx]
    0 = 0, 0, 0, 0, 0
    1 = -pi/2, 500, -500, 2, 10

    [topology]                 # optional in track mode (every follower -> 0)
    edges = 0->1, 1->2, 1->3, 2->3
    weights.3 = 0.5            # one fewer weight than parents

    [inputs]
    u_theta = cos(0.15, 0.4)
    u_x = 10

    [formation]                # formation mode only
    1 = -15, 15

Numbers accept arithmetic on literals plus ``pi`` and ``e``.  Input channels
accept a constant, ``sin(A, w[, phi])``, ``cos(A, w[, phi])``,
``piecewise 0: expr; 3: expr`` or ``table 0: v; 2: v`` (zero-order hold).
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np

from .controllers import DEFAULT_GAINS, Gains
from .liegroup import LogBranch
from .network import Topology, TopologyError, validate

MODES = ("track", "consensus", "formation")
SCENARIO_SUFFIX = ".scenario"


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


class ValidationError(ValueError):
    """A scenario parsed but breaks an invariant."""


# numeric expressions

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "e": math.e}


def _eval_node(node: ast.AST) -> float:
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        return _UNOPS[type(node.op)](_eval_node(node.operand))
    raise ValueError(f"unsupported element {ast.dump(node)}")


def eval_number(text: str) -> float:
    """Evaluate ``-pi/2``, ``1e-3``, ``2**-10`` and the like; nothing else."""
    try:
        value = _eval_node(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"bad number {text!r}: {exc}") from None
    if not math.isfinite(value):
        raise ValueError(f"bad number {text!r}: not finite")
    return value


def _numbers(text: str) -> list[float]:
    return [eval_number(part) for part in text.split(",") if part.strip()]


# input programs

class Constant(NamedTuple):
    value: float

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)


class Sinusoid(NamedTuple):
    kind: str  # "sin" or "cos"
    amplitude: float
    frequency: float
    phase: float = 0.0

    def __call__(self, t):
        fn = np.sin if self.kind == "sin" else np.cos
        return self.amplitude * fn(self.frequency * np.asarray(t, dtype=float) + self.phase)


class Piecewise(NamedTuple):
    starts: tuple[float, ...]
    pieces: tuple[Union[Constant, Sinusoid], ...]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.starts, t, side="right") - 1
        out = np.zeros_like(t)
        for j, piece in enumerate(self.pieces):
            mask = idx == j
            if np.any(mask):
                out[mask] = piece(t[mask])
        return out


class Tabulated(NamedTuple):
    times: tuple[float, ...]
    values: tuple[float, ...]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.asarray(self.values)[np.clip(idx, 0, None)]


Program = Union[Constant, Sinusoid, Piecewise, Tabulated]

_CALL = re.compile(r"^(sin|cos|const)\s*\((.*)\)$", re.S)


def _parse_simple(text: str) -> Constant | Sinusoid:
    text = text.strip()
    m = _CALL.match(text)
    if m is None:
        return Constant(eval_number(text))
    kind, args = m.group(1), _numbers(m.group(2))
    if kind == "const":
        if len(args) != 1:
            raise ValueError(f"const takes one argument, got {len(args)}")
        return Constant(args[0])
    if len(args) not in (2, 3):
        raise ValueError(f"{kind}(A, w[, phi]) takes 2 or 3 arguments, got {len(args)}")
    return Sinusoid(kind, *args)


def _segments(body: str) -> list[tuple[float, str]]:
    segs = []
    for chunk in re.split(r"[;\n]", body):
        if not chunk.strip():
            continue
        if ":" not in chunk:
            raise ValueError(f"segment {chunk.strip()!r} needs the form 'start: value'")
        start, expr = chunk.split(":", 1)
        segs.append((eval_number(start), expr))
    if not segs:
        raise ValueError("no segments")
    starts = [s for s, _ in segs]
    if starts[0] != 0.0:
        raise ValueError(f"first segment must start at 0, got {starts[0]}")
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise ValueError(f"segment starts must increase: {starts}")
    return segs


def parse_program(text: str) -> Program:
    text = text.strip()
    head, _, body = text.partition(" ")
    if head == "piecewise":
        segs = _segments(body)
        return Piecewise(tuple(s for s, _ in segs), tuple(_parse_simple(e) for _, e in segs))
    if head == "table":
        segs = _segments(body)
        return Tabulated(tuple(s for s, _ in segs), tuple(eval_number(e) for _, e in segs))
    return _parse_simple(text)


class InputProgram(NamedTuple):
    u_theta: Program
    u_x: Program

    def sample(self, t) -> np.ndarray:
        """Leader input at times ``t`` as an (len(t), 2) array."""
        t = np.asarray(t, dtype=float)
        return np.ascontiguousarray(np.stack([self.u_theta(t), self.u_x(t)], axis=1))


# scenario

NodeInit = tuple[float, float, float, float, float]


@dataclass(frozen=True)
class Scenario:
    name: str
    mode: str
    duration: float
    dt: float
    gains: Gains
    topology: Topology
    initial: tuple[NodeInit, ...]
    inputs: InputProgram
    offsets: dict[int, tuple[float, float]] = field(default_factory=dict)
    branch: LogBranch = LogBranch.PlusPi
    output: str | None = None

    @property
    def num_nodes(self) -> int:
        return len(self.initial)

    @property
    def nsteps(self) -> int:
        return int(round(self.duration / self.dt))

    def with_overrides(self, dt: float | None = None, duration: float | None = None) -> "Scenario":
        changed = replace(
            self,
            dt=self.dt if dt is None else dt,
            duration=self.duration if duration is None else duration,
        )
        check_scenario(changed)
        return changed


def check_scenario(sc: Scenario) -> list[int]:
    """Raise :class:`ValidationError` on a broken invariant; return evaluation order."""
    if sc.mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {sc.mode!r}")
    if not (sc.dt > 0 and math.isfinite(sc.dt)):
        raise ValidationError(f"dt must be positive, got {sc.dt}")
    if not (sc.duration >= sc.dt and math.isfinite(sc.duration)):
        raise ValidationError(f"duration must be at least dt ({sc.dt}), got {sc.duration}")
    if sc.num_nodes < 2:
        raise ValidationError("need a leader (node 0) and at least one follower")
    if sc.topology.num_nodes != sc.num_nodes:
        raise ValidationError(f"topology has {sc.topology.num_nodes} nodes, scenario lists {sc.num_nodes}")
    try:
        order = validate(sc.topology)
    except TopologyError as exc:
        raise ValidationError(f"topology: {exc}") from None
    if sc.mode == "track":
        for i in range(1, sc.num_nodes):
            if sc.topology.parents_of(i) != [0]:
                raise ValidationError(f"track mode: node {i} must have node 0 as its only parent")
    if sc.mode == "formation":
        missing = [i for i in range(1, sc.num_nodes) if i not in sc.offsets]
        if missing:
            raise ValidationError(f"formation mode: no offset for nodes {missing}")
    extra = [i for i in sc.offsets if not 1 <= i < sc.num_nodes]
    if extra:
        raise ValidationError(f"offsets given for unknown or leader nodes {extra}")
    for i, s in enumerate(sc.initial):
        if not all(math.isfinite(v) for v in s):
            raise ValidationError(f"node {i}: non-finite initial state {s}")
    return order


def _line_of(lines: list[str], section: str, key: str | None = None) -> int | None:
    current = None
    for n, raw in enumerate(lines, 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
            if key is None and current == section:
                return n
            continue
        if current == section and key is not None:
            k = re.split(r"[=:]", s, 1)[0].strip().lower()
            if k == key:
                return n
    return None


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    lines = text.splitlines()
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",), delimiters=("=",)
    )
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None

    def err(section: str, key: str | None, msg: str) -> ParseError:
        return ParseError(msg, _line_of(lines, section, key), f"[{section}] {key}" if key else f"[{section}]")

    def need(section: str) -> configparser.SectionProxy:
        if not cp.has_section(section):
            raise ParseError(f"missing section [{section}]")
        return cp[section]

    def num(section: str, key: str, default: float | None = None) -> float:
        sec = cp[section] if cp.has_section(section) else {}
        if key not in sec:
            if default is None:
                raise err(section, None, f"missing key {key!r}")
            return default
        try:
            return eval_number(sec[key])
        except ValueError as exc:
            raise err(section, key, str(exc)) from None

    head = need("scenario")
    mode = head.get("mode", "").strip()
    duration = num("scenario", "duration")
    dt = num("scenario", "dt", 1e-3)
    gains = DEFAULT_GAINS
    if "gains" in head:
        try:
            vals = _numbers(head["gains"])
        except ValueError as exc:
            raise err("scenario", "gains", str(exc)) from None
        if len(vals) != 4:
            raise err("scenario", "gains", f"need 4 gains (k_p, k_d, k, k_e), got {len(vals)}")
        try:
            gains = Gains(*vals)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
    try:
        branch = LogBranch.parse(head.get("log_branch", "plus"))
    except ValueError as exc:
        raise err("scenario", "log_branch", str(exc)) from None

    nodes_sec = need("nodes")
    states: dict[int, NodeInit] = {}
    for key, val in nodes_sec.items():
        try:
            idx = int(key)
        except ValueError:
            raise err("nodes", key, "node keys must be integers") from None
        try:
            vals = _numbers(val)
        except ValueError as exc:
            raise err("nodes", key, str(exc)) from None
        if len(vals) == 3:
            vals += [0.0, 0.0]
        if len(vals) != 5:
            raise err("nodes", key, f"need theta, x, y[, omega, vx]; got {len(vals)} values")
        states[idx] = tuple(vals)
    n = len(states)
    if sorted(states) != list(range(n)):
        raise ValidationError(f"nodes must be numbered 0..{n - 1}, got {sorted(states)}")
    initial = tuple(states[i] for i in range(n))

    edges: list[tuple[int, int]] = []
    weights: dict[int, list[float]] = {}
    if cp.has_section("topology"):
        topo = cp["topology"]
        for part in topo.get("edges", "").split(","):
            if not part.strip():
                continue
            m = re.fullmatch(r"\s*(\d+)\s*->\s*(\d+)\s*", part)
            if m is None:
                raise err("topology", "edges", f"edge {part.strip()!r} is not of the form 'a->b'")
            edges.append((int(m.group(1)), int(m.group(2))))
        for key, val in topo.items():
            if key == "edges":
                continue
            m = re.fullmatch(r"weights\.(\d+)", key)
            if m is None:
                raise err("topology", key, "unknown key")
            try:
                weights[int(m.group(1))] = _numbers(val)
            except ValueError as exc:
                raise err("topology", key, str(exc)) from None
    else:
        edges = [(0, i) for i in range(1, n)]
    try:
        topology = Topology.from_edges(n, edges, weights)
    except TopologyError as exc:
        raise ValidationError(f"topology: {exc}") from None

    inp = need("inputs")
    programs = {}
    for ch in ("u_theta", "u_x"):
        if ch not in inp:
            raise err("inputs", None, f"missing key {ch!r}")
        try:
            programs[ch] = parse_program(inp[ch])
        except ValueError as exc:
            raise err("inputs", ch, str(exc)) from None

    offsets: dict[int, tuple[float, float]] = {}
    if cp.has_section("formation"):
        for key, val in cp["formation"].items():
            try:
                idx = int(key)
                vals = _numbers(val)
            except ValueError as exc:
                raise err("formation", key, str(exc)) from None
            if len(vals) != 2:
                raise err("formation", key, f"offset needs 2 values, got {len(vals)}")
            offsets[idx] = (vals[0], vals[1])

    sc = Scenario(
        name=head.get("name", name).strip(),
        mode=mode,
        duration=duration,
        dt=dt,
        gains=gains,
        topology=topology,
        initial=initial,
        inputs=InputProgram(programs["u_theta"], programs["u_x"]),
        offsets=offsets,
        branch=branch,
        output=head.get("output"),
    )
    check_scenario(sc)
    return sc


def shipped_scenarios() -> list[str]:
    """Names of the scenarios bundled with the package."""
    root = resources.files("se2track") / "scenarios"
    return sorted(p.name[: -len(SCENARIO_SUFFIX)] for p in root.iterdir() if p.name.endswith(SCENARIO_SUFFIX))


def shipped_path(name: str):
    stem = name[: -len(SCENARIO_SUFFIX)] if name.endswith(SCENARIO_SUFFIX) else name
    return resources.files("se2track") / "scenarios" / (stem + SCENARIO_SUFFIX)


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file; bare names of shipped scenarios also work."""
    p = Path(path)
    if p.is_file():
        text = p.read_text()
    else:
        bundled = shipped_path(p.name)
        if p.parent != Path(".") or not bundled.is_file():
            raise ValidationError(f"scenario file not found: {path}")
        text = bundled.read_text()
    stem = p.name[: -len(SCENARIO_SUFFIX)] if p.name.endswith(SCENARIO_SUFFIX) else p.stem
    return parse_scenario(text, stem)

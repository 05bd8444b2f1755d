"""Measurement-based computation on graph states.

A *wire* carries one logical qumode along a path of vertices; it is named by
its input vertex. Measuring the head vertex ``v`` of a wire in the basis
``p_f = e^{-if(q)} p e^{if(q)}`` with result ``m`` teleports the state to the
next vertex as ``X(m) F e^{if(q)}``. The byproduct ``B`` of each wire
(physical state = ``B`` applied to the logical state) is tracked, never
applied: with ``frame`` adaptation the requested logical gate ``e^{if(v)}``
is translated into the physical polynomial ``g(q) = f(B v B^-1)``, which
needs ``B v B^-1`` to be a function of ``q`` alone.

For ``deg f <= 2`` the physical basis is the rotated quadrature ``p + b q``
with ``b = 2 g_2``: a homodyne at ``theta = atan(b)`` whose reading is
rescaled by ``sqrt(1 + b^2)``. The angle depends only on Fourier powers of
the byproducts, not on earlier outcomes, so Gaussian measurements may be
performed in any order; the outcome dependence enters only through the
classical offset ``m = y + g_1``. Forced outcomes are the readings ``y``.

Byproduct normal form: ``B = F^k P^r X(x) Z(z)`` with ``k in {0, 1}``,
displacements applied first.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from cvcluster import gaussian as gs
from cvcluster import grid as gr
from cvcluster.errors import FrameError, OrderingError, ValidationError
from cvcluster.fock import DEFAULT_DIM, LEAK_THRESHOLD, cubic_correction, gamma_of_n, run_circuit_cluster
from cvcluster.graph import Graph, build_graph
from cvcluster.nullifier import (
    NullifierSet,
    QuadratureForm,
    as_fraction,
    conjugate,
    conjugate_all,
    measure,
    momentum_eigenstates,
)

BACKENDS = ("nullifier", "gaussian")


# ---------------------------------------------------------------------------
# Single-mode frames


@dataclass(frozen=True)
class Frame:
    """Affine single-mode map ``(q, p) -> L (q, p) + c``; exact when entries are Fractions."""

    L: tuple[tuple, tuple] = ((1, 0), (0, 1))
    c: tuple = (0, 0)

    @staticmethod
    def of_tag(tag: tuple) -> Frame:
        name = tag[0]
        if name == "X":
            return Frame(c=(tag[1], 0))
        if name == "Z":
            return Frame(c=(0, tag[1]))
        if name == "F":
            return Frame(L=((0, -1), (1, 0)))
        if name == "FDAG":
            return Frame(L=((0, 1), (-1, 0)))
        if name == "P":
            return Frame(L=((-1, 0), (0, -1)))
        raise ValidationError(f"unknown byproduct tag {tag!r}")

    def then(self, other: Frame) -> Frame:
        """``self`` followed by ``other``."""
        (a, b), (c, d) = other.L
        (e, f), (g, h) = self.L
        L = ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))
        cx = a * self.c[0] + b * self.c[1] + other.c[0]
        cy = c * self.c[0] + d * self.c[1] + other.c[1]
        return Frame(L, (cx, cy))

    def inverse_L(self) -> tuple[tuple, tuple]:
        (a, b), (c, d) = self.L  # det = 1
        return ((d, -b), (-c, a))

    def conjugated(self, kind: str) -> tuple:
        """``B v B^-1 = alpha q + delta p + beta`` for ``v`` in {q, p}; returns (alpha, delta, beta)."""
        Li = self.inverse_L()
        row = Li[0] if kind == "q" else Li[1]
        beta = -(row[0] * self.c[0] + row[1] * self.c[1])
        return row[0], row[1], beta

    def fourier_power(self) -> int | None:
        for k, L in enumerate((((1, 0), (0, 1)), ((0, -1), (1, 0)), ((-1, 0), (0, -1)), ((0, 1), (-1, 0)))):
            if all(self.L[i][j] == L[i][j] for i in range(2) for j in range(2)):
                return k
        return None

    def is_displacement(self) -> bool:
        return self.fourier_power() == 0

    def symplectic(self) -> gs.SymplecticOp:
        return gs.SymplecticOp(np.array(self.L, dtype=float), np.array(self.c, dtype=float))


def _inverse_tag(tag: tuple) -> tuple:
    name = tag[0]
    if name in ("X", "Z"):
        return (name, -tag[1])
    return {"F": ("FDAG",), "FDAG": ("F",), "P": ("P",)}[name]


@dataclass
class ByproductRecord:
    """Per-wire byproduct tags in application order; wires are named by their input vertex."""

    tags: dict[int, list[tuple]] = field(default_factory=dict)
    heads: dict[int, int | None] = field(default_factory=dict)

    def ensure(self, wire: int, head: int | None = None) -> None:
        if wire not in self.tags:
            self.tags[wire] = []
            self.heads[wire] = wire if head is None else head

    def add(self, wire: int, tag: tuple) -> None:
        self.ensure(wire)
        self.tags[wire].append(tag)

    def prepend(self, wire: int, tag: tuple) -> None:
        self.ensure(wire)
        self.tags[wire].insert(0, tag)

    def frame(self, wire: int) -> Frame:
        fr = Frame()
        for t in self.tags.get(wire, []):
            fr = fr.then(Frame.of_tag(t))
        return fr

    def symplectic(self, wire: int) -> gs.SymplecticOp:
        return self.frame(wire).symplectic()

    def inverse_tags(self, wire: int) -> list[tuple]:
        return [_inverse_tag(t) for t in reversed(self.tags.get(wire, []))]

    def normal_form(self, wire: int) -> dict:
        """``B = F^k P^r X(x) Z(z)``, ``k in {0, 1}``, displacements applied first."""
        fr = self.frame(wire)
        k = fr.fourier_power()
        if k is None:
            raise FrameError(f"byproduct on wire {wire} is not a Fourier power times a displacement")
        # B = F^k D  =>  c = F^k d  =>  d = F^-k c
        inv = Frame(L=fr.L).inverse_L()
        x = inv[0][0] * fr.c[0] + inv[0][1] * fr.c[1]
        z = inv[1][0] * fr.c[0] + inv[1][1] * fr.c[1]
        return {"fourier": k % 2, "reflection": k >= 2, "x": x, "z": z}

    def to_dict(self) -> dict:
        def enc(v):
            return [v.numerator, v.denominator] if isinstance(v, Fraction) else float(v)

        return {
            "wires": {
                str(w): {"mode": self.heads.get(w), "tags": [[t[0]] + [enc(x) for x in t[1:]] for t in tags]}
                for w, tags in self.tags.items()
            }
        }


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class Step:
    """Measure ``mode`` in ``p_f`` with ``f(v) = c0 + c1 v + c2 v^2 + c3 v^3``.

    ``target`` names the logical quadrature ``v`` the gate acts on; ``adapt``
    is ``frame`` (translate through the wire byproduct) or ``none`` (use ``f``
    on the physical ``q`` as given). ``observable='q'`` measures position
    instead (vertex removal; no wire).
    """

    mode: int
    poly: tuple = (0, 0, 0, 0)
    target: str = "q"
    adapt: str = "frame"
    wire: int | None = None
    next_mode: int | None = None
    observable: str = "p_f"

    def __post_init__(self) -> None:
        poly = tuple(self.poly) + (0,) * (4 - len(self.poly))
        if len(poly) != 4:
            raise ValidationError(f"step on mode {self.mode}: polynomial degree exceeds 3")
        object.__setattr__(self, "poly", tuple(_number(x) for x in poly))
        if self.target not in ("q", "p"):
            raise ValidationError(f"step on mode {self.mode}: target must be 'q' or 'p'")
        if self.adapt not in ("frame", "none"):
            raise ValidationError(f"step on mode {self.mode}: adapt must be 'frame' or 'none'")
        if self.observable not in ("p_f", "q"):
            raise ValidationError(f"step on mode {self.mode}: observable must be 'p_f' or 'q'")
        if self.observable == "q" and self.wire is not None:
            raise ValidationError(f"step on mode {self.mode}: position measurements cannot carry a wire")
        if self.next_mode is not None and self.wire is None:
            raise ValidationError(f"step on mode {self.mode}: next_mode given without a wire")

    @property
    def degree(self) -> int:
        nz = [k for k, c in enumerate(self.poly) if c != 0]
        return max(nz) if nz else 0

    @property
    def is_gaussian(self) -> bool:
        return self.degree <= 2

    def to_dict(self) -> dict:
        d = {"mode": self.mode, "poly": [_enc_number(x) for x in self.poly], "target": self.target, "adapt": self.adapt}
        if self.wire is not None:
            d["wire"] = self.wire
        if self.next_mode is not None:
            d["next_mode"] = self.next_mode
        if self.observable != "p_f":
            d["observable"] = self.observable
        return d


def _number(x):
    if isinstance(x, float):
        return x
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return Fraction(int(x[0]), int(x[1]))
    return as_fraction(x)


def _enc_number(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else [x.numerator, x.denominator]
    return x


EVENT_OPS = ("F", "CZ")


@dataclass(frozen=True)
class MeasurementProgram:
    """Ordered measurement steps plus classical frame events.

    ``events`` are ``("F", after, wire, power)`` (a logical ``F^power`` absorbed
    into the wire byproduct) or ``("CZ", after, u, v)`` (the logical CZ carried
    by edge ``(u, v)``), processed in list order once ``after`` steps have been
    booked. Inter-wire edges without an explicit event fire as soon as both
    endpoints are wire heads.
    """

    steps: tuple[Step, ...]
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()
    events: tuple[tuple, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "events", tuple(tuple(e) for e in self.events))
        seen = set()
        for st in self.steps:
            if st.mode in seen:
                raise ValidationError(f"mode {st.mode} is measured more than once")
            seen.add(st.mode)
            if st.mode in self.outputs:
                raise ValidationError(f"output mode {st.mode} is measured")
        for ev in self.events:
            if len(ev) != 4 or ev[0] not in EVENT_OPS:
                raise ValidationError(f"malformed program event {ev!r}")
            if not 0 <= ev[1] <= len(self.steps):
                raise ValidationError(f"event {ev!r} refers to a position outside 0..{len(self.steps)}")

    @property
    def measured(self) -> set[int]:
        return {s.mode for s in self.steps}

    def events_at(self, position: int) -> list[tuple]:
        return [e for e in self.events if e[1] == position]

    def validate(self, g: Graph) -> None:
        """Check labels, wire continuity and that every non-output vertex gets measured."""
        for v in list(self.inputs) + list(self.outputs) + [s.mode for s in self.steps]:
            if not 1 <= v <= g.n:
                raise ValidationError(f"program refers to vertex {v} outside 1..{g.n}")
        heads = {w: w for w in self.inputs}
        for i, st in enumerate(self.steps, 1):
            if st.wire is None:
                continue
            if st.wire not in heads:
                raise ValidationError(f"step {i}: wire {st.wire} is not an input vertex")
            if heads[st.wire] != st.mode:
                raise ValidationError(f"step {i}: wire {st.wire} is at vertex {heads[st.wire]}, not {st.mode}")
            if st.next_mode is not None and not g.has_edge(st.mode, st.next_mode):
                raise ValidationError(f"step {i}: no edge between {st.mode} and next mode {st.next_mode}")
            heads[st.wire] = st.next_mode
        for ev in self.events:
            if ev[0] == "F" and ev[2] not in heads:
                raise ValidationError(f"event {ev!r}: wire {ev[2]} is not an input vertex")
            if ev[0] == "CZ" and not g.has_edge(ev[2], ev[3]):
                raise ValidationError(f"event {ev!r}: no such edge in the graph")
        missing = set(g.vertices) - self.measured - set(self.outputs)
        if missing:
            raise ValidationError(f"vertices {sorted(missing)} are neither measured nor outputs")

    def to_dict(self) -> dict:
        d = {"inputs": list(self.inputs), "outputs": list(self.outputs), "steps": [s.to_dict() for s in self.steps]}
        if self.events:
            d["events"] = [
                {"op": "F", "after": e[1], "wire": e[2], "power": e[3]} if e[0] == "F"
                else {"op": "CZ", "after": e[1], "modes": [e[2], e[3]]}
                for e in self.events
            ]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> MeasurementProgram:
        if not isinstance(data, dict) or not isinstance(data.get("steps"), list):
            raise ValidationError("program JSON must be an object with a 'steps' list")
        steps = []
        for k, raw in enumerate(data["steps"], 1):
            if not isinstance(raw, dict) or "mode" not in raw:
                raise ValidationError(f"program step {k} needs a 'mode' field")
            extra = set(raw) - {"mode", "poly", "target", "adapt", "wire", "next_mode", "observable"}
            if extra:
                raise ValidationError(f"program step {k}: unknown field(s) {sorted(extra)}")
            steps.append(
                Step(
                    mode=int(raw["mode"]),
                    poly=tuple(raw.get("poly", (0, 0, 0, 0))),
                    target=raw.get("target", "q"),
                    adapt=raw.get("adapt", "frame"),
                    wire=raw.get("wire"),
                    next_mode=raw.get("next_mode"),
                    observable=raw.get("observable", "p_f"),
                )
            )
        events = []
        for k, raw in enumerate(data.get("events", []), 1):
            try:
                if raw["op"] == "F":
                    events.append(("F", int(raw["after"]), int(raw["wire"]), int(raw.get("power", 1))))
                elif raw["op"] == "CZ":
                    u, v = raw["modes"]
                    events.append(("CZ", int(raw["after"]), int(u), int(v)))
                else:
                    raise ValidationError(f"program event {k}: unknown op {raw['op']!r}")
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"program event {k}: malformed ({exc})") from exc
        return cls(tuple(steps), tuple(data.get("inputs", ())), tuple(data.get("outputs", ())), tuple(events))


def load_program(path: str | Path) -> MeasurementProgram:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return MeasurementProgram.from_dict(data)


# ---------------------------------------------------------------------------
# Compilation


@dataclass(frozen=True)
class CompiledProgram:
    graph: Graph
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    program: MeasurementProgram


CIRCUIT_OPS = ("DQ", "DP", "F", "I", "CZ")


def compile_brickwork(circuit: Sequence[tuple], n_wires: int, initial_fourier: int | Sequence[int] = 0) -> CompiledProgram:
    """Translate a circuit into a brickwork graph and measurement program.

    Operations: ``("Dq", w, poly)`` and ``("Dp", w, poly)`` apply
    ``e^{if(q)}`` / ``e^{if(p)}`` on wire ``w``; ``("F", w)`` is absorbed
    into the byproduct; ``("I", w)`` is an identity hop; ``("CZ", a, b)``
    becomes an edge. Identity hops are inserted where the byproduct's Fourier
    power would make a gate unreachable (``Dq`` needs an even power, ``Dp``
    an odd one, ``CZ`` a multiple of four on both wires). Input vertices are
    ``1..n_wires``; new vertices are appended in creation order.
    """
    if n_wires < 1:
        raise ValidationError("need at least one wire")
    powers = [initial_fourier] * n_wires if isinstance(initial_fourier, int) else list(initial_fourier)
    if len(powers) != n_wires:
        raise ValidationError("initial_fourier must give one power per wire")
    powers = [p % 4 for p in powers]
    heads = list(range(1, n_wires + 1))
    n_vertices = n_wires
    edges: set[tuple[int, int]] = set()
    steps: list[Step] = []
    events: list[tuple] = []

    def hop(w: int, poly=(0, 0, 0, 0), target="q") -> None:
        nonlocal n_vertices
        n_vertices += 1
        new = n_vertices
        edges.add((heads[w], new))
        steps.append(Step(heads[w], tuple(poly), target, "frame", w + 1, new))
        heads[w] = new
        powers[w] = (powers[w] + 1) % 4

    def wire_index(w) -> int:
        if not isinstance(w, (int, np.integer)) or not 1 <= w <= n_wires:
            raise ValidationError(f"wire {w!r} out of range 1..{n_wires}")
        return int(w) - 1

    for op in circuit:
        if not op:
            raise ValidationError("empty circuit operation")
        name = str(op[0]).upper()
        if name not in CIRCUIT_OPS:
            raise ValidationError(f"unsupported gate {op[0]!r}; expected one of Dq, Dp, F, I, CZ")
        if name == "CZ":
            if len(op) != 3:
                raise ValidationError(f"CZ needs two wires: {op}")
            a, b = wire_index(op[1]), wire_index(op[2])
            if a == b:
                raise ValidationError(f"CZ on a single wire: {op}")
            for w in (a, b):
                while powers[w] != 0:
                    hop(w)
            key = (min(heads[a], heads[b]), max(heads[a], heads[b]))
            if key in edges:  # same heads already coupled; move wire a on by a full Fourier cycle
                for _ in range(4):
                    hop(a)
                key = (min(heads[a], heads[b]), max(heads[a], heads[b]))
            edges.add(key)
            events.append(("CZ", len(steps), key[0], key[1]))
            continue
        w = wire_index(op[1])
        if name == "F":
            powers[w] = (powers[w] - 1) % 4
            events.append(("F", len(steps), w + 1, 1))
        elif name == "I":
            hop(w)
        else:
            if len(op) != 3:
                raise ValidationError(f"{op[0]} needs a wire and a polynomial: {op}")
            poly = tuple(op[2])
            if len(poly) > 4:
                raise ValidationError(f"{op[0]}: polynomial degree exceeds 3")
            want = 0 if name == "DQ" else 1
            if powers[w] % 2 != want:
                hop(w)
            hop(w, poly, "q" if name == "DQ" else "p")
    g = build_graph(n_vertices, sorted((min(e), max(e)) for e in edges))
    inputs = tuple(range(1, n_wires + 1))
    program = MeasurementProgram(tuple(steps), inputs, tuple(heads), tuple(events))
    return CompiledProgram(g, inputs, tuple(heads), program)


# ---------------------------------------------------------------------------
# Execution


@dataclass
class OutcomeLogRow:
    step: int
    mode: int
    basis: float  # homodyne angle theta
    raw: float  # homodyne reading (before rescaling)
    result: float  # outcome m used by the byproduct X(m)

    def as_tuple(self) -> tuple:
        return (self.step, self.mode, self.basis, self.raw, self.result)


@dataclass
class RunResult:
    state: object  # NullifierSet or GaussianState
    record: ByproductRecord
    log: list[OutcomeLogRow]
    backend: str
    outputs: tuple[int, ...]

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "mode", "basis", "outcome", "result"])
        for row in self.log:
            w.writerow([row.step, row.mode, repr(float(row.basis)), _fmt(row.raw), _fmt(row.result)])
        return buf.getvalue()


def _fmt(x) -> str:
    return str(x) if isinstance(x, Fraction) else repr(float(x))


def homodyne_basis_of_shear(s: float) -> tuple[float, float]:
    """``p + s q = r p_theta`` with ``theta = atan(s)`` and ``r = sqrt(1 + s^2)``."""
    return math.atan(s), math.sqrt(1.0 + s * s)


def _physical_poly(step: Step, frame: Frame) -> tuple:
    """Coefficients of ``g(q) = f(B v B^-1)`` on the physical ``q``."""
    if step.adapt == "none" or step.degree == 0:
        return step.poly
    alpha, delta, beta = frame.conjugated(step.target)
    if delta != 0:
        k = frame.fourier_power()
        raise FrameError(
            f"mode {step.mode}: logical {step.target} maps to a momentum-dependent operator under the "
            f"byproduct (Fourier power {k}); insert an identity hop or change the target"
        )
    c0, c1, c2, c3 = step.poly
    # f(alpha q + beta) expanded in powers of q
    g0 = c0 + c1 * beta + c2 * beta**2 + c3 * beta**3
    g1 = c1 * alpha + 2 * c2 * alpha * beta + 3 * c3 * alpha * beta**2
    g2 = c2 * alpha**2 + 3 * c3 * alpha**2 * beta
    g3 = c3 * alpha**3
    return (g0, g1, g2, g3)


def generalized_graph_state(g: Graph, backend: str, inputs: Sequence[int] = (), input_state=None, s: float | None = None):
    """Input state on ``inputs`` (others in the ideal or squeezed ``|0>_p``), then CZ along every edge."""
    inputs = tuple(inputs)
    others = [v for v in g.vertices if v not in inputs]
    if backend == "nullifier":
        if input_state is None:
            input_state = momentum_eigenstates(inputs) if inputs else None
        if input_state is not None and not isinstance(input_state, NullifierSet):
            raise ValidationError("backend mismatch: nullifier backend needs a NullifierSet input")
        parts = [p for p in (input_state, momentum_eigenstates(others) if others else None) if p is not None]
        st = nullifier_tensor(*parts)
        st = reorder_nullifiers(st, tuple(g.vertices))
        for i, j in g.edges:
            st = conjugate(st, ("CZ", i, j))
        return st
    if backend == "gaussian":
        if s is None:
            raise ValidationError("gaussian backend needs an accuracy s")
        sq = gs.apply(gs.gate("SQUEEZE", 1, 1, s), gs.vacuum(1))
        if input_state is None and inputs:
            input_state = gs.tensor(*[sq.relabel([v]) for v in inputs])
        if input_state is not None and not isinstance(input_state, gs.GaussianState):
            raise ValidationError("backend mismatch: gaussian backend needs a GaussianState input")
        if input_state is not None and tuple(input_state.labels) != inputs:
            input_state = input_state.relabel(inputs)
        parts = ([input_state] if input_state is not None else []) + [sq.relabel([v]) for v in others]
        st = gs.tensor(*parts).select(tuple(g.vertices))
        for i, j in g.edges:
            st = gs.apply_on(st, "CZ", (i, j))
        return st
    raise ValidationError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def nullifier_tensor(*sets: NullifierSet) -> NullifierSet:
    """Nullifiers of a product state (labels concatenated)."""
    labels = sum((s.labels for s in sets), ())
    n = len(labels)
    forms = []
    off = 0
    for s in sets:
        k = s.n
        for f in s.forms:
            z = [Fraction(0)] * n
            q = list(z)
            p = list(z)
            q[off : off + k] = f.q
            p[off : off + k] = f.p
            forms.append(QuadratureForm(tuple(q), tuple(p), f.const))
        off += k
    return NullifierSet(tuple(forms), labels, validate=False)


def reorder_nullifiers(ns: NullifierSet, labels: Sequence[int]) -> NullifierSet:
    idx = [ns.position(l) for l in labels]
    forms = tuple(QuadratureForm(tuple(f.q[i] for i in idx), tuple(f.p[i] for i in idx), f.const) for f in ns.forms)
    return NullifierSet(forms, tuple(labels), validate=False)


def _sample_reading(backend: str, rng: np.random.Generator):
    x = float(rng.normal())
    return Fraction(x).limit_denominator(1000) if backend == "nullifier" else x


def _measure_physical(state, backend: str, mode: int, b, observable: str, reading, rng):
    """Measure ``p + b q`` (or ``q``); returns (state, reading y, raw homodyne value, theta)."""
    if backend == "nullifier":
        obs = "q" if observable == "q" else (("p_plus_sq", b) if b != 0 else "p")
        if reading is None:
            reading = _sample_reading(backend, rng)
        res = measure(state, mode, obs, reading)
        theta = math.pi / 2 if observable == "q" else math.atan(float(b))
        return res.state, res.outcome, res.outcome, theta
    if observable == "q":
        theta, r = math.pi / 2, 1.0
    else:
        theta, r = homodyne_basis_of_shear(float(b))
    raw = None if reading is None else float(reading) / r
    res = gs.homodyne(state, mode, theta, raw, rng)
    return res.state, res.outcome * r, res.outcome, theta


def run_program(
    graph: Graph,
    program: MeasurementProgram,
    backend: str = "nullifier",
    s: float | None = None,
    input_state=None,
    state=None,
    record: ByproductRecord | None = None,
    forced: Sequence | dict | None = None,
    rng=None,
    order: Sequence[int] | None = None,
) -> RunResult:
    """Run a measurement program on the nullifier (ideal) or gaussian (accuracy ``s``) backend.

    ``state`` overrides the generalized graph state built from ``input_state``;
    ``record`` seeds the byproducts (e.g. from :func:`attach_input`).
    ``forced`` holds readings ``y`` of ``p + b q`` per step (list in step order
    or ``{mode: y}``). ``order`` permutes the physical measurement order.
    """
    if backend not in BACKENDS:
        raise ValidationError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    program.validate(graph)
    for i, st in enumerate(program.steps, 1):
        if not st.is_gaussian:
            raise ValidationError(
                f"step {i} (mode {st.mode}) has a cubic basis; the {backend} backend cannot represent it. "
                "Register the Fock delegate by running the gate through run_cubic_gate."
            )
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    steps = program.steps
    if forced is None:
        readings = [None] * len(steps)
    elif isinstance(forced, dict):
        readings = [forced.get(st.mode) for st in steps]
    else:
        forced = list(forced)
        if len(forced) != len(steps):
            raise ValidationError(f"got {len(forced)} forced outcomes for {len(steps)} measurement steps")
        readings = forced
    if backend == "nullifier":
        # exact arithmetic throughout: floats are taken at their binary value
        readings = [None if y is None else as_fraction(_number(y)) for y in readings]
        steps = tuple(replace(st, poly=tuple(as_fraction(c) for c in st.poly)) for st in steps)
    if state is None:
        state = generalized_graph_state(graph, backend, program.inputs, input_state, s)
    record = ByproductRecord() if record is None else record
    for w in program.inputs:
        record.ensure(w)

    # Fourier powers (hence physical angles) do not depend on outcomes: replay the wire frames
    # with all displacements zero to get each step's b = 2 g_2.
    probe = ByproductRecord({w: [t for t in tags if t[0] not in ("X", "Z")] for w, tags in record.tags.items()},
                            dict(record.heads))
    bs = []
    for i, st in enumerate(steps):
        _absorb_events(probe, program.events_at(i))
        frame = probe.frame(st.wire) if st.wire is not None else Frame()
        g = _physical_poly(st, frame) if st.observable == "p_f" else (0, 0, 0, 0)
        bs.append(2 * g[2])
        if st.wire is not None:
            probe.add(st.wire, ("F",))

    phys_order = list(range(len(steps))) if order is None else list(order)
    if sorted(phys_order) != list(range(len(steps))):
        raise ValidationError("order must be a permutation of the step indices")
    values: dict[int, tuple] = {}
    for i in phys_order:
        st = steps[i]
        state, y, raw, theta = _measure_physical(state, backend, st.mode, bs[i], st.observable, readings[i], gen)
        values[i] = (y, raw, theta)

    # bookkeeping in logical order
    log: list[OutcomeLogRow] = []
    wire_of = {record.heads.get(w, w): w for w in program.inputs}
    explicit = {(min(e[2], e[3]), max(e[2], e[3])) for e in program.events if e[0] == "CZ"}
    pending = [e for e in _inter_wire_edges(graph, program) if e not in explicit]
    done: set = set()
    for i in range(len(steps) + 1):
        for ev in program.events_at(i):
            if ev[0] == "F":
                absorb_fourier(record, ev[2], ev[3])
            else:
                e = (min(ev[2], ev[3]), max(ev[2], ev[3]))
                if e[0] not in wire_of or e[1] not in wire_of:
                    raise FrameError(f"CZ event {e}: both vertices must be current wire heads")
                _cz_byproducts(record, e, wire_of)
                done.add(e)
        for e in pending:
            if e not in done and e[0] in wire_of and e[1] in wire_of:
                _cz_byproducts(record, e, wire_of)
                done.add(e)
        if i == len(steps):
            break
        st = steps[i]
        y, raw, theta = values[i]
        if st.wire is None:
            log.append(OutcomeLogRow(i + 1, st.mode, theta, raw, y))
            continue
        frame = record.frame(st.wire)
        g = _physical_poly(st, frame) if st.observable == "p_f" else (0, 0, 0, 0)
        m = y + g[1]
        log.append(OutcomeLogRow(i + 1, st.mode, theta, raw, m))
        for e in pending + sorted(explicit):
            if st.mode in e and e not in done:
                raise FrameError(f"CZ edge {e} cannot be scheduled: vertex {st.mode} is measured before its partner arrives")
        record.add(st.wire, ("F",))
        record.add(st.wire, ("X", m))
        del wire_of[st.mode]
        record.heads[st.wire] = st.next_mode
        if st.next_mode is not None:
            wire_of[st.next_mode] = st.wire
    return RunResult(state, record, log, backend, program.outputs)


def _absorb_events(record: ByproductRecord, events: Sequence[tuple]) -> None:
    for ev in events:
        if ev[0] == "F":
            absorb_fourier(record, ev[2], ev[3])


def _inter_wire_edges(graph: Graph, program: MeasurementProgram) -> list[tuple[int, int]]:
    owner = {w: w for w in program.inputs}
    for st in program.steps:
        if st.wire is not None:
            owner[st.mode] = st.wire
            if st.next_mode is not None:
                owner[st.next_mode] = st.wire
    return [e for e in graph.edges if e[0] in owner and e[1] in owner and owner[e[0]] != owner[e[1]]]


def _cz_byproducts(record: ByproductRecord, e: tuple[int, int], wire_of: dict) -> None:
    wa, wb = wire_of[e[0]], wire_of[e[1]]
    fa, fb = record.frame(wa), record.frame(wb)
    if not (fa.is_displacement() and fb.is_displacement()):
        raise FrameError(
            f"CZ edge {e}: wire byproducts carry Fourier powers {fa.fourier_power()} and "
            f"{fb.fourier_power()}; a logical CZ needs both to be displacements"
        )
    # CZ X_a(x) = X_a(x) Z_b(x) CZ; Z commutes with CZ
    xa, xb = fa.c[0], fb.c[0]
    if xb != 0:
        record.add(wa, ("Z", xb))
    if xa != 0:
        record.add(wb, ("Z", xa))


def absorb_fourier(record: ByproductRecord, wire: int, power: int = 1) -> None:
    """Account for a logical ``F^power`` without measuring anything: ``B -> B F^-power``."""
    for _ in range(power % 4):
        record.prepend(wire, ("FDAG",))


def finalize(result_or_state, record: ByproductRecord | None = None, backend: str | None = None):
    """Apply every wire's inverse byproduct to its output mode (for oracle comparisons)."""
    if isinstance(result_or_state, RunResult):
        state, record, backend = result_or_state.state, result_or_state.record, result_or_state.backend
    else:
        state = result_or_state
        backend = backend or ("nullifier" if isinstance(state, NullifierSet) else "gaussian")
    for w, mode in record.heads.items():
        if mode is None:
            continue
        if backend == "nullifier":
            gates = [(t[0], mode) + tuple(t[1:]) for t in record.inverse_tags(w)]
            state = conjugate_all(state, gates)
        else:
            op = record.symplectic(w).inverse()
            k = state.position(mode)
            n = state.n
            L = np.eye(2 * n)
            c = np.zeros(2 * n)
            idx = [k, n + k]
            L[np.ix_(idx, idx)] = op.L
            c[idx] = op.c
            state = gs.apply(gs.SymplecticOp(L, c), state)
    return state


# ---------------------------------------------------------------------------
# Input attachment


@dataclass
class AttachResult:
    state: object
    record: ByproductRecord
    outcomes: dict[int, object]


def attach_input(cluster_state, input_state, pairing: dict[int, int], forced: dict | None = None, rng=None) -> AttachResult:
    """Teleport input modes ``u`` onto cluster vertices ``v = pairing[u]``.

    CZ couples each pair, ``p`` is measured on ``u`` and ``X(m) F`` is recorded
    on the wire named ``v``.
    """
    if len(set(pairing.values())) != len(pairing):
        raise ValidationError("pairing must be injective")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    forced = forced or {}
    record = ByproductRecord()
    outcomes = {}
    if isinstance(cluster_state, NullifierSet):
        if not isinstance(input_state, NullifierSet):
            raise ValidationError("backend mismatch: nullifier cluster needs a NullifierSet input")
        st = nullifier_tensor(input_state, cluster_state)
        for u, v in pairing.items():
            st = conjugate(st, ("CZ", u, v))
            y = forced.get(u)
            res = measure(st, u, "p", _sample_reading("nullifier", gen) if y is None else as_fraction(y))
            st = res.state
            outcomes[u] = res.outcome
            record.ensure(v)
            record.add(v, ("F",))
            record.add(v, ("X", res.outcome))
        return AttachResult(st, record, outcomes)
    if isinstance(cluster_state, gs.GaussianState):
        if not isinstance(input_state, gs.GaussianState):
            raise ValidationError("backend mismatch: gaussian cluster needs a GaussianState input")
        st = gs.tensor(input_state, cluster_state)
        for u, v in pairing.items():
            st = gs.apply_on(st, "CZ", (u, v))
            res = gs.homodyne(st, u, 0.0, forced.get(u), gen)
            st = res.state
            outcomes[u] = res.outcome
            record.ensure(v)
            record.add(v, ("F",))
            record.add(v, ("X", res.outcome))
        return AttachResult(st, record, outcomes)
    raise ValidationError(f"unsupported cluster state type {type(cluster_state).__name__}")


# ---------------------------------------------------------------------------
# Squeezing as a measurement sub-program


def squeeze_shears(t: float) -> tuple[float, float, float]:
    """Shear strengths with ``F Sh(a3) F Sh(a2) F Sh(a1) = S(t) P``: ``(-t, -1/t, -t)``."""
    if t == 0:
        raise ValidationError("squeeze factor must be nonzero")
    return (-t, -1 / t, -t)


def squeeze_program_circuit(wire: int, t: float) -> list[tuple]:
    """Circuit ops realising ``S(t)`` on ``wire``: three shear hops, and ``P = F^2`` to drop the reflection."""
    a1, a2, a3 = squeeze_shears(t)
    return [("Dq", wire, (0, 0, a1 / 2)), ("F", wire), ("Dq", wire, (0, 0, a2 / 2)), ("F", wire),
            ("Dq", wire, (0, 0, a3 / 2)), ("F", wire), ("F", wire), ("F", wire)]


# ---------------------------------------------------------------------------
# Cubic gate on the position grid


@dataclass
class CubicGateResult:
    output: gr.GridWavefunction
    raw_output: gr.GridWavefunction
    n: int
    t: float
    reflection: bool
    gamma_resource: float
    outcomes: tuple[float, float]
    corrections: list[tuple]
    leak: float
    resource: gr.GridWavefunction


CUBIC_SCHEDULE = ("count", "B", "hop1", "hop2", "E")


def resource_cubic_strength(n: int, r: float) -> float:
    """Cubic coefficient of the state heralded by the cluster circuit: ``-sign(r) gamma(n)``."""
    return -math.copysign(gamma_of_n(n), r)


def _apply_squeeze_grid(psi: gr.GridWavefunction, t: float, via_shears: bool) -> gr.GridWavefunction:
    """``S(t) psi``, either by rescaling or as ``P F Sh(-t) F Sh(-1/t) F Sh(-t)``."""
    if not via_shears:
        src = psi.evaluate
        return psi.map_points(lambda p: src(np.asarray(p) / t) / math.sqrt(t))
    out = psi
    for a in squeeze_shears(t):
        cur = out
        out = cur.map_points(lambda p, cur=cur, a=a: cur.evaluate(p) * np.exp(1j * a * np.asarray(p) ** 2 / 2))
        out = gr.fourier(out)
    src = out.evaluate
    return out.map_points(lambda p: src(-np.asarray(p)))


def run_cubic_gate(
    phi: gr.GridWavefunction | Callable,
    a: float,
    s: float = 1.5,
    r: float = 5.0,
    n: int | None = 12,
    dim: int = DEFAULT_DIM,
    dims: tuple[int, int] | None = None,
    outcomes: tuple[float, float] | None = (0.0, 0.0),
    rng=None,
    squeeze: str = "direct",
    schedule: Sequence[str] = CUBIC_SCHEDULE,
    grid: gr.Grid | None = None,
    threshold: float | None = LEAK_THRESHOLD,
) -> CubicGateResult:
    """Apply ``e^{i a q^3}`` to ``phi`` with a photon-counted cubic resource.

    Pipeline: count the cluster circuit (heralding ``n`` and a resource of
    strength ``g = -sign(r) gamma(n)``), pick ``t = (|a| / gamma(n))^(1/3)``,
    then sub-cluster B applies ``F^dag S(t)`` (and a reflection ``P`` when
    ``sign(a) != sign(g)``), the input hops onto the resource (``p`` result
    ``m1``), the resource hops once more (``m2``) and sub-cluster E applies the
    inverse of the known Gaussian byproduct
    ``X(m2) F X(m1) Z(3 g m1^2) Sh(6 g m1) S(t) P^r``. Both B and E depend on
    ``n``, so they must come after the count.
    """
    schedule = tuple(schedule)
    if sorted(schedule) != sorted(CUBIC_SCHEDULE):
        raise ValidationError(f"schedule must order the events {CUBIC_SCHEDULE}")
    pos = {e: i for i, e in enumerate(schedule)}
    for ev in ("B", "E"):
        if pos[ev] < pos["count"]:
            raise OrderingError(f"squeezer {ev} is scheduled before the photon count; t(n) is not yet known")
    if not (pos["B"] < pos["hop1"] < pos["hop2"] < pos["E"]):
        raise OrderingError("the cubic gate needs B, hop1, hop2, E in that order")
    if squeeze not in ("direct", "program"):
        raise ValidationError("squeeze must be 'direct' or 'program'")
    if a == 0:
        raise ValidationError("target strength must be nonzero")
    grid = grid or gr.Grid()
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if not isinstance(phi, gr.GridWavefunction):
        phi = gr.GridWavefunction.from_function(phi, grid)
    phi = phi.normalized()

    circ = run_circuit_cluster(s, r, dim, n, gen, dims=dims, threshold=threshold)
    n = circ.n
    g_res = resource_cubic_strength(n, r)
    t = cubic_correction(abs(a), n)
    reflect = (a > 0) != (g_res > 0)
    chi = gr.fock_to_grid(circ.state.amplitudes, grid)
    chi_eval = chi.evaluate

    # B: S(t) P^r (its F^dag is cancelled by the hop's F below)
    pre = phi
    if reflect:
        src = pre.evaluate
        pre = pre.map_points(lambda p: src(-np.asarray(p)))
    pre = _apply_squeeze_grid(pre, t, squeeze == "program")
    pre_eval = pre.evaluate

    def hop1_state(m1):
        return lambda p: chi_eval(p) * pre_eval(np.asarray(p) - m1)

    if outcomes is None:
        ms = np.linspace(-6, 6, 241)
        dens = np.array([np.sum(np.abs(hop1_state(m)(grid.x)) ** 2) for m in ms])
        m1 = float(gen.choice(ms, p=dens / dens.sum()))
    else:
        m1 = float(outcomes[0])
    mode2 = gr.GridWavefunction.from_function(hop1_state(m1), grid).normalized()
    f2 = gr.fourier(mode2)
    if outcomes is None:
        dens = np.abs(f2.values) ** 2
        m2 = float(gen.choice(grid.x, p=dens / dens.sum()))
    else:
        m2 = float(outcomes[1])
    f2_eval = f2.evaluate
    raw = gr.GridWavefunction.from_function(lambda p: f2_eval(np.asarray(p) - m2), grid)

    # E: undo X(m2) F X(m1) Z(z) Sh(sh) S(t) P^r
    z = 3 * g_res * m1**2
    sh = 6 * g_res * m1
    raw_frozen = gr.GridWavefunction(grid, raw.values)

    def corrected(p):
        y = t * np.asarray(p, dtype=float)
        if reflect:
            y = -y
        u = y + m1
        h = np.exp(1j * m2 * u) * gr.fourier_eval(raw_frozen, u, inverse=True)
        return math.sqrt(t) * np.exp(-1j * z * y - 1j * sh * y**2 / 2) * h

    out = gr.GridWavefunction.from_function(corrected, grid).normalized()
    corrections = [("X", m2), ("F",), ("X", m1), ("Z", z), ("SHEAR", sh), ("SQUEEZE", t)] + ([("P",)] if reflect else [])
    return CubicGateResult(out, raw, n, t, reflect, g_res, (m1, m2), corrections, circ.leak, chi)


def cubic_phase_coefficient(result: CubicGateResult, reference: gr.GridWavefunction, threshold: float = 0.05) -> float:
    """Cubic coefficient of ``arg(output) - arg(reference)`` on the common support."""
    return float(gr.fit_phase_polynomial(result.output, 3, reference, threshold)[0])

"""Exact nullifier representation of ideal CV graph states.

A state is described by ``n`` commuting, linearly independent Hermitian
forms ``H = a.q + b.p + c`` with ``H|psi> = 0``. All coefficients are
:class:`fractions.Fraction`, so measurement updates are bit-exact.

Sign conventions (``U v U^dagger`` images used by :func:`conjugate`)::

    CZ(i,j)   p_i -> p_i - q_j,  p_j -> p_j - q_i
    F(i)      q -> p,   p -> -q          (F^dag p F = q, F^dag (-q) F = p)
    FDAG(i)   q -> -p,  p -> q
    P(i)      q -> -q,  p -> -p          (reflection, P = F^2)
    X(i,s)    q -> q - s                 (X(s) = exp(-i s p))
    Z(i,s)    p -> p - s                 (Z(s) = exp(i s q))
    S(i,s)    q -> q / s,  p -> s p      (S^dag q S = s q)
    SHEAR(i,s) p -> p - s q              (exp(i s q^2 / 2))

If ``K`` nullifies ``|psi>`` then ``U K U^dagger`` nullifies ``U|psi>``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

from cvcluster.errors import ValidationError
from cvcluster.graph import Graph, build_graph

Rational = Union[int, Fraction, str]


def as_fraction(x) -> Fraction:
    """Convert to an exact rational; floats are taken at their exact binary value."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ValidationError(f"expected a rational number, got {x!r}")
    try:
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"expected a rational number, got {x!r}") from exc


@dataclass(frozen=True)
class QuadratureForm:
    """The operator ``sum_i q[i] q_i + sum_i p[i] p_i + const`` over ``n`` modes."""

    q: tuple[Fraction, ...]
    p: tuple[Fraction, ...]
    const: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if len(self.q) != len(self.p):
            raise ValidationError("q and p coefficient vectors differ in length")
        object.__setattr__(self, "q", tuple(as_fraction(x) for x in self.q))
        object.__setattr__(self, "p", tuple(as_fraction(x) for x in self.p))
        object.__setattr__(self, "const", as_fraction(self.const))

    @classmethod
    def zero(cls, n: int) -> QuadratureForm:
        return cls((Fraction(0),) * n, (Fraction(0),) * n, Fraction(0))

    @classmethod
    def from_terms(cls, n: int, q: dict | None = None, p: dict | None = None, const: Rational = 0) -> QuadratureForm:
        """Build from sparse ``{position: coefficient}`` maps (positions 0-based)."""
        qv = [Fraction(0)] * n
        pv = [Fraction(0)] * n
        for k, v in (q or {}).items():
            qv[k] = as_fraction(v)
        for k, v in (p or {}).items():
            pv[k] = as_fraction(v)
        return cls(tuple(qv), tuple(pv), as_fraction(const))

    @property
    def n(self) -> int:
        return len(self.q)

    def vector(self) -> tuple[Fraction, ...]:
        """Coefficients as ``(q..., p..., const)``."""
        return self.q + self.p + (self.const,)

    @classmethod
    def from_vector(cls, vec: Sequence[Fraction]) -> QuadratureForm:
        n = (len(vec) - 1) // 2
        return cls(tuple(vec[:n]), tuple(vec[n : 2 * n]), vec[2 * n])

    def is_constant(self) -> bool:
        return not any(self.q) and not any(self.p)

    def __add__(self, other: QuadratureForm) -> QuadratureForm:
        _check_same_n(self, other)
        return QuadratureForm(
            tuple(a + b for a, b in zip(self.q, other.q)),
            tuple(a + b for a, b in zip(self.p, other.p)),
            self.const + other.const,
        )

    def __neg__(self) -> QuadratureForm:
        return self.scale(-1)

    def __sub__(self, other: QuadratureForm) -> QuadratureForm:
        return self + (-other)

    def scale(self, k: Rational) -> QuadratureForm:
        k = as_fraction(k)
        return QuadratureForm(tuple(k * a for a in self.q), tuple(k * b for b in self.p), k * self.const)

    def __mul__(self, k: Rational) -> QuadratureForm:
        return self.scale(k)

    __rmul__ = __mul__

    def shift(self, c: Rational) -> QuadratureForm:
        return QuadratureForm(self.q, self.p, self.const + as_fraction(c))

    def drop(self, position: int) -> QuadratureForm:
        """Remove the coefficients of one mode (0-based position)."""
        return QuadratureForm(
            self.q[:position] + self.q[position + 1 :],
            self.p[:position] + self.p[position + 1 :],
            self.const,
        )

    def format(self, labels: Sequence[int] | None = None) -> str:
        labels = list(labels) if labels is not None else list(range(1, self.n + 1))
        terms: list[tuple[Fraction, str]] = []
        for k, lab in enumerate(labels):
            if self.p[k]:
                terms.append((self.p[k], f"p{lab}"))
        for k, lab in enumerate(labels):
            if self.q[k]:
                terms.append((self.q[k], f"q{lab}"))
        if self.const:
            terms.append((self.const, ""))
        if not terms:
            return "0"
        out = []
        for idx, (c, name) in enumerate(terms):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = name if (mag == 1 and name) else (f"{mag}{'*' + name if name else ''}")
            if idx == 0:
                out.append(("-" if c < 0 else "") + body)
            else:
                out.append(f" {sign} {body}")
        return "".join(out)

    def __str__(self) -> str:
        return self.format()

    def to_dict(self) -> dict:
        return {
            "q": [_frac_json(x) for x in self.q],
            "p": [_frac_json(x) for x in self.p],
            "const": _frac_json(self.const),
        }

    @classmethod
    def from_dict(cls, data: dict) -> QuadratureForm:
        try:
            return cls(
                tuple(_frac_from_json(x) for x in data["q"]),
                tuple(_frac_from_json(x) for x in data["p"]),
                _frac_from_json(data.get("const", [0, 1])),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed quadrature form: {data!r}") from exc


def _frac_json(x: Fraction) -> list[int]:
    return [x.numerator, x.denominator]


def _frac_from_json(x) -> Fraction:
    if isinstance(x, list) and len(x) == 2:
        if x[1] == 0:
            raise ValidationError("zero denominator in rational")
        return Fraction(int(x[0]), int(x[1]))
    return as_fraction(x)


def _check_same_n(f: QuadratureForm, g: QuadratureForm) -> None:
    if f.n != g.n:
        raise ValidationError(f"mode count mismatch: {f.n} vs {g.n}")


def symplectic_bracket(f: QuadratureForm, g: QuadratureForm) -> Fraction:
    """Return ``beta`` with ``[f, g] = i * beta``: ``a.b' - b.a'``."""
    _check_same_n(f, g)
    return sum((a * bp for a, bp in zip(f.q, g.p)), Fraction(0)) - sum(
        (b * ap for b, ap in zip(f.p, g.q)), Fraction(0)
    )


def rref(rows: Sequence[Sequence[Fraction]], ncols: int | None = None) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals; pivots restricted to the first ``ncols`` columns."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    width = len(m[0]) if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(width):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


@dataclass(frozen=True)
class NullifierSet:
    """A basis of the nullifier space of a pure state on ``len(labels)`` modes.

    ``labels`` are the original vertex labels of the live modes, so they
    survive measurements that project modes out.
    """

    forms: tuple[QuadratureForm, ...]
    labels: tuple[int, ...]
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "forms", tuple(self.forms))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValidationError(f"repeated mode label in {self.labels}")
        if len(self.forms) != n:
            raise ValidationError(f"need {n} forms for {n} modes, got {len(self.forms)}")
        for f in self.forms:
            if f.n != n:
                raise ValidationError(f"form over {f.n} modes in a set over {n} modes")
        if self.validate:
            self.check()

    def check(self) -> None:
        """Raise unless the forms are independent and pairwise commuting."""
        ops = [f.q + f.p for f in self.forms]
        _, piv = rref(ops)
        if len(piv) != len(self.forms):
            raise ValidationError("nullifier forms are linearly dependent")
        for f, g in itertools.combinations(self.forms, 2):
            if symplectic_bracket(f, g) != 0:
                raise ValidationError(f"forms {f.format(self.labels)} and {g.format(self.labels)} do not commute")

    @property
    def n(self) -> int:
        return len(self.labels)

    def position(self, label: int) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"mode {label} is not live (live modes: {list(self.labels)})") from None

    def canonical(self) -> tuple[tuple[Fraction, ...], ...]:
        """RREF of the ``(q | p | const)`` rows; equal iff the nullifier spaces are equal."""
        m, _ = rref([f.vector() for f in self.forms], ncols=2 * self.n)
        return tuple(tuple(r) for r in m)

    def equivalent(self, other: NullifierSet) -> bool:
        """Same live modes (in the same order) and the same nullifier space."""
        return self.labels == other.labels and self.canonical() == other.canonical()

    def contains(self, form: QuadratureForm) -> bool:
        """True when ``form`` lies in the span of the nullifiers."""
        rows = [f.vector() for f in self.forms]
        _, piv0 = rref(rows)
        _, piv1 = rref(rows + [form.vector()])
        return len(piv0) == len(piv1)

    def format(self) -> list[str]:
        return [f.format(self.labels) for f in self.forms]

    def __str__(self) -> str:
        return "{" + ", ".join(self.format()) + "}"

    def to_dict(self) -> dict:
        return {"modes": list(self.labels), "forms": [f.to_dict() for f in self.forms], "text": self.format()}

    @classmethod
    def from_dict(cls, data: dict) -> NullifierSet:
        try:
            return cls(tuple(QuadratureForm.from_dict(f) for f in data["forms"]), tuple(data["modes"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed nullifier set: {exc}") from exc


def momentum_eigenstates(labels: Sequence[int], values: Sequence[Rational] | None = None) -> NullifierSet:
    """``|v_1>_p ... |v_k>_p`` (zero by default)."""
    n = len(labels)
    values = [0] * n if values is None else list(values)
    forms = [QuadratureForm.from_terms(n, p={k: 1}, const=-as_fraction(v)) for k, v in enumerate(values)]
    return NullifierSet(tuple(forms), tuple(labels))


def standard_nullifiers(g: Graph) -> NullifierSet:
    """``H_i = p_i - sum_{j in N(i)} q_j`` for every vertex."""
    n = g.n
    forms = []
    for v in g.vertices:
        forms.append(QuadratureForm.from_terms(n, p={v - 1: 1}, q={u - 1: -1 for u in g.neighbors(v)}))
    return NullifierSet(tuple(forms), tuple(g.vertices), validate=False)


# ---------------------------------------------------------------------------
# Heisenberg conjugation


GATE_ARITY = {"CZ": (2, 0), "F": (1, 0), "FDAG": (1, 0), "P": (1, 0), "X": (1, 1), "Z": (1, 1), "S": (1, 1), "SHEAR": (1, 1)}


def _images(tag: str, pos: Sequence[int], param: Fraction | None, n: int) -> dict:
    """Map ('q'|'p', position) -> image form for every quadrature the gate moves."""
    def unit(kind: str, k: int, coeff: Rational = 1, const: Rational = 0) -> QuadratureForm:
        return QuadratureForm.from_terms(n, **{kind: {k: coeff}}, const=const)

    if tag == "CZ":
        i, j = pos
        return {
            ("p", i): QuadratureForm.from_terms(n, p={i: 1}, q={j: -1}),
            ("p", j): QuadratureForm.from_terms(n, p={j: 1}, q={i: -1}),
        }
    (k,) = pos
    if tag == "F":
        return {("q", k): unit("p", k), ("p", k): unit("q", k, -1)}
    if tag == "FDAG":
        return {("q", k): unit("p", k, -1), ("p", k): unit("q", k)}
    if tag == "P":
        return {("q", k): unit("q", k, -1), ("p", k): unit("p", k, -1)}
    if tag == "X":
        return {("q", k): unit("q", k, 1, -param)}
    if tag == "Z":
        return {("p", k): unit("p", k, 1, -param)}
    if tag == "S":
        if param <= 0:
            raise ValidationError(f"squeeze factor must be positive, got {param}")
        return {("q", k): unit("q", k, 1 / param), ("p", k): unit("p", k, param)}
    if tag == "SHEAR":
        return {("p", k): QuadratureForm.from_terms(n, p={k: 1}, q={k: -param})}
    raise ValidationError(f"unknown gate tag {tag!r}")


def parse_gate(gate: Sequence) -> tuple[str, tuple[int, ...], Fraction | None]:
    """Split ``("CZ", 1, 2)``, ``("F", 3)`` or ``("X", 1, s)`` into (tag, modes, parameter)."""
    if not gate:
        raise ValidationError("empty gate")
    tag = str(gate[0]).upper()
    if tag not in GATE_ARITY:
        raise ValidationError(f"unknown gate tag {gate[0]!r}; expected one of {sorted(GATE_ARITY)}")
    nmodes, nparams = GATE_ARITY[tag]
    if len(gate) != 1 + nmodes + nparams:
        raise ValidationError(f"gate {tuple(gate)} needs {nmodes} mode(s) and {nparams} parameter(s)")
    modes = tuple(int(m) for m in gate[1 : 1 + nmodes])
    if len(set(modes)) != len(modes):
        raise ValidationError(f"gate {tuple(gate)} acts twice on one mode")
    param = as_fraction(gate[-1]) if nparams else None
    return tag, modes, param


def conjugate(ns: NullifierSet, gate: Sequence) -> NullifierSet:
    """Nullifiers of ``U|psi>`` given those of ``|psi>``: every form ``H -> U H U^dagger``."""
    tag, modes, param = parse_gate(gate)
    pos = [ns.position(m) for m in modes]
    images = _images(tag, pos, param, ns.n)
    new = []
    for f in ns.forms:
        out = QuadratureForm((Fraction(0),) * ns.n, (Fraction(0),) * ns.n, f.const)
        qs, ps = list(f.q), list(f.p)
        for (kind, k), img in images.items():
            coeff = qs[k] if kind == "q" else ps[k]
            if coeff:
                out = out + img.scale(coeff)
                if kind == "q":
                    qs[k] = Fraction(0)
                else:
                    ps[k] = Fraction(0)
        out = out + QuadratureForm(tuple(qs), tuple(ps), Fraction(0))
        new.append(out)
    return NullifierSet(tuple(new), ns.labels, validate=False)


def conjugate_all(ns: NullifierSet, gates: Iterable[Sequence]) -> NullifierSet:
    for gate in gates:
        ns = conjugate(ns, gate)
    return ns


def graph_state(g: Graph) -> NullifierSet:
    """CZ along every edge applied to ``|0>_p`` on every vertex."""
    return conjugate_all(momentum_eigenstates(tuple(g.vertices)), (("CZ", i, j) for i, j in g.edges))


# ---------------------------------------------------------------------------
# Measurement


@dataclass(frozen=True)
class MeasurementResult:
    state: NullifierSet
    outcome: Fraction
    forced: bool  # True when the state was already an eigenstate of the observable


def _observable(ns: NullifierSet, k: int, kind: str) -> QuadratureForm:
    return QuadratureForm.from_terms(ns.n, **{kind: {k: 1}})


def measure(ns: NullifierSet, mode: int, observable, outcome: Rational | None = None) -> MeasurementResult:
    """Measure ``q``, ``p`` or ``("p_plus_sq", s)`` (i.e. ``p + s q``) on ``mode``.

    The forms are recombined so that only the lowest-index non-commuting form
    fails to commute with the observable (rescaled to bracket -1), that form
    is replaced by ``observable - outcome``, the outcome is substituted into
    the others and the mode is projected out. When the observable already
    commutes with every form the state is an eigenstate: the eigenvalue is
    reported (``forced=True``) and ``outcome`` is ignored.
    """
    if isinstance(observable, (tuple, list)):
        if len(observable) != 2 or str(observable[0]) != "p_plus_sq":
            raise ValidationError(f"observable {observable!r} is not a linear quadrature")
        ns = conjugate(ns, ("SHEAR", mode, observable[1]))
        observable = "p"
    if observable not in ("q", "p"):
        raise ValidationError(f"observable {observable!r} is not a linear quadrature")
    k = ns.position(mode)
    obs = _observable(ns, k, observable)
    brackets = [symplectic_bracket(obs, f) for f in ns.forms]
    noncommuting = [i for i, b in enumerate(brackets) if b != 0]

    if not noncommuting:
        coeffs = _express(obs, ns.forms)
        value = -sum((c * f.const for c, f in zip(coeffs, ns.forms)), Fraction(0))
        pivot = next(i for i, c in enumerate(coeffs) if c != 0)
        forms = list(ns.forms)
        forms[pivot] = obs.shift(-value)
        forced = True
    else:
        if outcome is None:
            raise ValidationError("outcome required: the state is not an eigenstate of the observable")
        value = as_fraction(outcome)
        pivot = noncommuting[0]
        piv_form = ns.forms[pivot].scale(Fraction(-1) / brackets[pivot])
        forms = []
        for i, f in enumerate(ns.forms):
            if i != pivot and brackets[i] != 0:
                f = f - piv_form.scale(brackets[i] / Fraction(-1))
            forms.append(f)
        forms[pivot] = obs.shift(-value)
        forced = False

    out = []
    for i, f in enumerate(forms):
        if i == pivot:
            continue
        coeff = f.p[k] if observable == "p" else f.q[k]
        out.append(f.shift(coeff * value).drop(k))
    labels = ns.labels[:k] + ns.labels[k + 1 :]
    return MeasurementResult(NullifierSet(tuple(out), labels, validate=False), value, forced)


def _express(target: QuadratureForm, forms: Sequence[QuadratureForm]) -> list[Fraction]:
    """Coefficients ``c`` with ``sum c_k (operator part of forms[k]) = operator part of target``."""
    n_forms = len(forms)
    width = 2 * target.n
    # columns: forms; solve A c = t with A[:, k] = operator vector of forms[k]
    rows = [[f.vector()[r] for f in forms] + [target.vector()[r]] for r in range(width)]
    m, piv = rref(rows, ncols=n_forms)
    for r in m[len(piv) :]:
        if r[-1] != 0:
            raise ValidationError("observable is not in the nullifier span")
    coeffs = [Fraction(0)] * n_forms
    for r, c in enumerate(piv):
        coeffs[c] = m[r][-1]
    return coeffs


# ---------------------------------------------------------------------------
# Recognising graph states


@dataclass(frozen=True)
class ModeCorrection:
    """Local operation ``F^fourier P^reflection Z(z) X(x)`` (rightmost applied first)."""

    mode: int
    fourier: int = 0
    reflection: bool = False
    x: Fraction = Fraction(0)
    z: Fraction = Fraction(0)

    def is_identity(self) -> bool:
        return not self.fourier and not self.reflection and self.x == 0 and self.z == 0

    def gates(self) -> list[tuple]:
        out: list[tuple] = []
        if self.x:
            out.append(("X", self.mode, self.x))
        if self.z:
            out.append(("Z", self.mode, self.z))
        if self.reflection:
            out.append(("P", self.mode))
        for _ in range(self.fourier % 4):
            out.append(("F", self.mode))
        return out

    def describe(self) -> str:
        parts = []
        if self.fourier:
            parts.append(f"F^{self.fourier}")
        if self.reflection:
            parts.append("reflection")
        if self.z:
            parts.append(f"Z({self.z})")
        if self.x:
            parts.append(f"X({self.x})")
        return " ".join(parts) if parts else "identity"


@dataclass(frozen=True)
class GraphReduction:
    """Result of :func:`graph_from_nullifiers`.

    ``graph`` is over positions 1..k of ``labels``; the state equals
    ``prod_j C_j |graph>`` with ``C_j`` from ``corrections``. ``graph`` is
    ``None`` when no such form exists, and ``reduced`` then holds the RREF rows.
    """

    graph: Graph | None
    labels: tuple[int, ...]
    corrections: tuple[ModeCorrection, ...]
    reduced: tuple[tuple[Fraction, ...], ...]
    reason: str = ""

    @property
    def is_graph_state(self) -> bool:
        return self.graph is not None

    def correction_gates(self) -> list[tuple]:
        out: list[tuple] = []
        for c in self.corrections:
            out.extend(c.gates())
        return out

    def rebuild(self) -> NullifierSet:
        """Apply the corrections to the graph state (on the original labels)."""
        if self.graph is None:
            raise ValidationError("not a graph state: " + self.reason)
        base = standard_nullifiers(self.graph)
        base = NullifierSet(base.forms, self.labels, validate=False)
        return conjugate_all(base, self.correction_gates())


def graph_from_nullifiers(ns: NullifierSet, allow_fourier: bool = False) -> GraphReduction:
    """Identify ``ns`` as a graph state up to single-mode corrections.

    Corrections are drawn from {Fourier power, reflection, Z displacement};
    Fourier powers are only searched when ``allow_fourier`` is set (otherwise a
    position eigenstate would count as a rotated momentum eigenstate). Among
    valid answers the one with the fewest Fourier corrections, then the lowest
    labels, is returned; reflections are placed so that the lowest label of
    each connected component is unreflected.
    """
    n = ns.n
    subsets: Iterable[tuple[int, ...]] = [()]
    if allow_fourier:
        subsets = itertools.chain.from_iterable(itertools.combinations(range(n), r) for r in range(n + 1))
    for subset in subsets:
        trial = conjugate_all(ns, (("FDAG", ns.labels[k]) for k in subset))
        found = _match_graph(trial)
        if found is None:
            continue
        adj, sigma, consts = found
        edges = [(i + 1, j + 1) for i in range(n) for j in range(i + 1, n) if adj[i][j]]
        corrections = []
        for k in range(n):
            corrections.append(
                ModeCorrection(
                    mode=ns.labels[k],
                    fourier=1 if k in subset else 0,
                    reflection=sigma[k] < 0,
                    z=-consts[k],
                )
            )
        return GraphReduction(build_graph(n, edges), ns.labels, tuple(corrections), ns.canonical())
    return GraphReduction(None, ns.labels, (), ns.canonical(), reason=_diagnose(ns))


def _match_graph(ns: NullifierSet):
    """Return (adjacency, reflection signs, constants) if ``ns`` is a reflected, displaced graph state."""
    n = ns.n
    if n == 0:
        return [], [], []
    # Solve for the basis whose p-block is the identity: rows [X | I | c].
    rows = [f.p + f.q + (f.const,) for f in ns.forms]
    m, piv = rref(rows, ncols=n)
    if piv != list(range(n)):
        return None
    X = [r[n : 2 * n] for r in m]
    for i in range(n):
        if X[i][i] != 0:
            return None
        for j in range(n):
            if X[i][j] not in (0, 1, -1):
                return None
    # sign assignment: sigma_i sigma_j X_ij = -1 on every edge
    sigma = [0] * n
    for start in range(n):
        if sigma[start]:
            continue
        sigma[start] = 1
        stack = [start]
        while stack:
            i = stack.pop()
            for j in range(n):
                if X[i][j] == 0:
                    continue
                want = -1 * sigma[i] * int(X[i][j])  # sigma_j = -1 / (sigma_i X_ij)
                if sigma[j] == 0:
                    sigma[j] = want
                    stack.append(j)
                elif sigma[j] != want:
                    return None
    adj = [[1 if X[i][j] != 0 else 0 for j in range(n)] for i in range(n)]
    # after undoing reflections the row for p_i reads p_i - sum A_ij q_j + sigma_i c_i
    consts = [sigma[i] * m[i][2 * n] for i in range(n)]
    return adj, sigma, consts


def _diagnose(ns: NullifierSet) -> str:
    n = ns.n
    _, piv = rref([f.p for f in ns.forms])
    if len(piv) < n:
        return f"momentum block has rank {len(piv)} < {n}: some mode is pinned in position"
    return "reduced adjacency block is not a signed 0/1 matrix of a simple graph"

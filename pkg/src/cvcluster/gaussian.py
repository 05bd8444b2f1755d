"""Gaussian states and symplectic operations at finite squeezing.

Phase-space vectors are ordered ``(q_1..q_n, p_1..p_n)`` with hbar = 1, so
the vacuum has covariance ``I/2``. Operations act in the Heisenberg picture
as ``U^dagger v U = L v + c``; on states this is ``mean -> L mean + c`` and
``cov -> L cov L^T``.

Gate actions (single mode, ``(q, p)`` block)::

    ROTATE(t)   q -> cos t q - sin t p,  p -> sin t q + cos t p   (ROTATE(pi/2) = F)
    X(s)        q -> q + s           Z(s)  p -> p + s
    SQUEEZE(s)  q -> s q, p -> p / s
    SHEAR(s)    p -> p + s q         (exp(i s q^2 / 2))
    CZ(i,j)     p_i -> p_i + q_j,  p_j -> p_j + q_i
    BEAMSPLITTER(t)  (q_i, q_j) and (p_i, p_j) both rotated by [[c, -s], [s, c]]

Homodyne conditioning
---------------------
Measuring ``w.x`` (``w`` a unit quadrature direction on one mode) with result
``m`` conditions the Wigner function on a hyperplane. Because the Wigner
function is a joint normal, the remaining modes follow the usual conditional
normal law::

    mean' = mean_B + S_Bw (m - w.mean) / (w^T S w)
    cov'  = cov_B  - S_Bw S_wB / (w^T S w)

and ``m`` has density ``N(m; w.mean, w^T S w)``. ``cov'`` never depends on
``m``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from cvcluster.errors import NumericalError, ValidationError
from cvcluster.graph import Graph

TOL = 1e-10

CONVENTIONS = {
    "ordering": "q1..qn,p1..pn",
    "hbar": 1,
    "vacuum_variance": 0.5,
    "db": "10*log10(s^2)",
}


def omega(n: int) -> np.ndarray:
    """Symplectic form ``[[0, I], [-I, 0]]`` in block ordering."""
    z = np.zeros((n, n))
    i = np.eye(n)
    return np.block([[z, i], [-i, z]])


@dataclass(frozen=True, eq=False)
class SymplecticOp:
    """Affine symplectic map ``v -> L v + c`` on ``n`` modes."""

    L: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        L = np.asarray(self.L, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] % 2:
            raise ValidationError(f"L must be 2n x 2n, got shape {L.shape}")
        if c.shape != (L.shape[0],):
            raise ValidationError(f"displacement has shape {c.shape}, expected ({L.shape[0]},)")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.L.shape[0] // 2

    @classmethod
    def identity(cls, n: int) -> SymplecticOp:
        return cls(np.eye(2 * n), np.zeros(2 * n))

    def then(self, other: SymplecticOp) -> SymplecticOp:
        """``self`` followed by ``other`` (operator product ``other . self``)."""
        _same_n(self.n, other.n)
        return SymplecticOp(other.L @ self.L, other.L @ self.c + other.c)

    def __matmul__(self, other: SymplecticOp) -> SymplecticOp:
        """Operator product: ``(A @ B)`` applies ``B`` first."""
        return other.then(self)

    def inverse(self) -> SymplecticOp:
        Li = np.linalg.inv(self.L)
        return SymplecticOp(Li, -Li @ self.c)

    def symplectic_error(self) -> float:
        om = omega(self.n)
        return float(np.linalg.norm(self.L @ om @ self.L.T - om))

    def check(self, tol: float = TOL) -> None:
        err = self.symplectic_error()
        det = float(np.linalg.det(self.L))
        if err > tol or abs(det - 1) > tol:
            raise NumericalError(f"map is not symplectic: |L W L^T - W| = {err:.3e}, det L = {det!r}")

    def allclose(self, other: SymplecticOp, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.L, other.L, atol=atol) and np.allclose(self.c, other.c, atol=atol))


def _same_n(a: int, b: int) -> None:
    if a != b:
        raise ValidationError(f"mode count mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class GaussianState:
    """First and second moments of a Gaussian state; ``labels`` name the live modes."""

    mean: np.ndarray
    cov: np.ndarray
    labels: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size % 2:
            raise ValidationError(f"mean must be a length-2n vector, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise ValidationError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        n = mean.size // 2
        labels = tuple(self.labels) if self.labels else tuple(range(1, n + 1))
        if len(labels) != n or len(set(labels)) != n:
            raise ValidationError(f"labels {labels} do not name {n} distinct modes")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.mean.size // 2

    def position(self, label: int) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"mode {label} is not live (live modes: {list(self.labels)})") from None

    def quadrature_index(self, label: int, kind: str) -> int:
        k = self.position(label)
        return k if kind == "q" else self.n + k

    def check(self, tol: float = TOL) -> None:
        """Symmetry and the uncertainty relation ``cov + i W / 2 >= 0``."""
        if not np.allclose(self.cov, self.cov.T, atol=tol):
            raise NumericalError("covariance matrix is not symmetric")
        eig = np.linalg.eigvalsh(self.cov + 0.5j * omega(self.n))
        if eig.min() < -tol:
            raise NumericalError(f"covariance violates the uncertainty relation (min eigenvalue {eig.min():.3e})")

    def purity(self) -> float:
        """``1 / sqrt(det(2 cov))``."""
        return float(1.0 / np.sqrt(np.linalg.det(2 * self.cov)))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(np.linalg.det(2 * self.cov) - 1) <= tol

    def select(self, labels: Sequence[int]) -> GaussianState:
        """Reduced state on ``labels`` (partial trace)."""
        idx = [self.position(l) for l in labels]
        full = idx + [k + self.n for k in idx]
        return GaussianState(self.mean[full], self.cov[np.ix_(full, full)], tuple(labels))

    def relabel(self, labels: Sequence[int]) -> GaussianState:
        return GaussianState(self.mean, self.cov, tuple(labels))

    def to_dict(self) -> dict:
        return {
            "conventions": CONVENTIONS,
            "modes": list(self.labels),
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> GaussianState:
        try:
            return cls(np.array(data["mean"], dtype=float), np.array(data["cov"], dtype=float), tuple(data.get("modes", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed Gaussian state: {exc}") from exc


def vacuum(n: int) -> GaussianState:
    if n < 1:
        raise ValidationError(f"need at least one mode, got {n}")
    return GaussianState(np.zeros(2 * n), 0.5 * np.eye(2 * n))


def coherent(alpha_q: Sequence[float], alpha_p: Sequence[float]) -> GaussianState:
    """Vacuum displaced to mean ``(alpha_q, alpha_p)``."""
    mean = np.concatenate([np.asarray(alpha_q, float), np.asarray(alpha_p, float)])
    return GaussianState(mean, 0.5 * np.eye(mean.size))


def tensor(*states: GaussianState) -> GaussianState:
    """Product state; labels are concatenated and must stay distinct."""
    qs = np.concatenate([s.mean[: s.n] for s in states])
    ps = np.concatenate([s.mean[s.n :] for s in states])
    n = qs.size
    cov = np.zeros((2 * n, 2 * n))
    off = 0
    for s in states:
        k = s.n
        idx = np.r_[off : off + k, n + off : n + off + k]
        cov[np.ix_(idx, idx)] = s.cov
        off += k
    labels = sum((s.labels for s in states), ())
    return GaussianState(np.concatenate([qs, ps]), cov, labels)


# ---------------------------------------------------------------------------
# Gates

GATE_TAGS = ("ROTATE", "F", "FDAG", "P", "X", "Z", "SQUEEZE", "SHEAR", "CZ", "BEAMSPLITTER")


def _block(tag: str, param: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Single-mode 2x2 block and displacement in ``(q, p)`` ordering."""
    zero = np.zeros(2)
    if tag in ("ROTATE", "F", "FDAG", "P"):
        t = {"F": np.pi / 2, "FDAG": -np.pi / 2, "P": np.pi}.get(tag, param)
        c, s = np.cos(t), np.sin(t)
        if tag != "ROTATE":  # exact entries for the Fourier powers
            c, s = round(c), round(s)
        return np.array([[c, -s], [s, c]]), zero
    if tag == "X":
        return np.eye(2), np.array([param, 0.0])
    if tag == "Z":
        return np.eye(2), np.array([0.0, param])
    if tag == "SQUEEZE":
        if not param > 0:
            raise ValidationError(f"squeeze factor must be positive, got {param}")
        return np.diag([param, 1.0 / param]), zero
    if tag == "SHEAR":
        return np.array([[1.0, 0.0], [param, 1.0]]), zero
    raise ValidationError(f"unknown gate tag {tag!r}")


def gate(tag: str, modes: int | Sequence[int], n: int, param: float | None = None) -> SymplecticOp:
    """Embed a named gate acting on 1-based ``modes`` of an ``n``-mode system.

    Examples
    --------
    >>> gate("F", 1, 1).L
    array([[ 0., -1.],
           [ 1.,  0.]])
    """
    tag = tag.upper()
    if tag not in GATE_TAGS:
        raise ValidationError(f"unknown gate tag {tag!r}; expected one of {list(GATE_TAGS)}")
    modes = (modes,) if isinstance(modes, (int, np.integer)) else tuple(modes)
    for m in modes:
        if not 1 <= m <= n:
            raise ValidationError(f"mode {m} out of range 1..{n}")
    if len(set(modes)) != len(modes):
        raise ValidationError(f"overlapping target modes {modes}")
    needs_param = tag in ("ROTATE", "X", "Z", "SQUEEZE", "SHEAR", "BEAMSPLITTER")
    if needs_param and param is None:
        raise ValidationError(f"gate {tag} needs a parameter")
    L = np.eye(2 * n)
    c = np.zeros(2 * n)
    if tag in ("CZ", "BEAMSPLITTER"):
        if len(modes) != 2:
            raise ValidationError(f"{tag} acts on two modes, got {modes}")
        i, j = (m - 1 for m in modes)
        if tag == "CZ":
            L[n + i, j] = 1.0
            L[n + j, i] = 1.0
        else:
            co, si = np.cos(param), np.sin(param)
            for off in (0, n):
                L[off + i, off + i] = co
                L[off + i, off + j] = -si
                L[off + j, off + i] = si
                L[off + j, off + j] = co
        return SymplecticOp(L, c)
    if len(modes) != 1:
        raise ValidationError(f"{tag} acts on one mode, got {modes}")
    k = modes[0] - 1
    block, shift = _block(tag, None if param is None else float(param))
    idx = [k, n + k]
    L[np.ix_(idx, idx)] = block
    c[idx] = shift
    return SymplecticOp(L, c)


def sequence(n: int, gates: Iterable[tuple]) -> SymplecticOp:
    """Compose ``(tag, modes[, param])`` tuples applied left to right."""
    op = SymplecticOp.identity(n)
    for g in gates:
        tag, modes, *rest = g
        op = op.then(gate(tag, modes, n, rest[0] if rest else None))
    return op


def apply(op: SymplecticOp, st: GaussianState) -> GaussianState:
    _same_n(op.n, st.n)
    return GaussianState(op.L @ st.mean + op.c, op.L @ st.cov @ op.L.T, st.labels)


def apply_on(st: GaussianState, tag: str, modes, param: float | None = None) -> GaussianState:
    """Apply a named gate addressed by mode labels."""
    modes = (modes,) if isinstance(modes, (int, np.integer)) else tuple(modes)
    pos = tuple(st.position(m) + 1 for m in modes)
    return apply(gate(tag, pos, st.n, param), st)


def generation_matrix(g: Graph, s: float) -> SymplecticOp:
    """``M(s) = C . S(s)``: squeeze every mode then CZ along every edge."""
    if not s > 0:
        raise ValidationError(f"accuracy must be positive, got {s}")
    n = g.n
    a = g.adjacency_matrix().astype(float)
    L = np.block([[s * np.eye(n), np.zeros((n, n))], [s * a, np.eye(n) / s]])
    return SymplecticOp(L, np.zeros(2 * n))


def canonical_cluster(g: Graph, s: float) -> GaussianState:
    return apply(generation_matrix(g, s), vacuum(g.n))


# ---------------------------------------------------------------------------
# Measurement


@dataclass(frozen=True, eq=False)
class HomodyneResult:
    outcome: float
    state: GaussianState | None  # None once the last mode is measured
    density: float
    measured_mean: float
    measured_var: float


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def condition(st: GaussianState, w: np.ndarray, m: float) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Condition on ``w . x = m``; returns (mean, cov, w.mean, w^T cov w) on all 2n entries."""
    sw = st.cov @ w
    var = float(w @ sw)
    if var <= 0:
        raise NumericalError("measured quadrature has zero variance; the state is an exact eigenstate")
    mu = float(w @ st.mean)
    mean = st.mean + sw * (m - mu) / var
    cov = st.cov - np.outer(sw, sw) / var
    return mean, cov, mu, var


def homodyne(
    st: GaussianState,
    mode: int,
    theta: float = 0.0,
    forced_outcome: float | None = None,
    rng=None,
) -> HomodyneResult:
    """Measure ``sin(theta) q + cos(theta) p`` on ``mode`` and trace it out.

    The outcome is drawn from its normal marginal using ``rng`` unless forced.
    """
    k = st.position(mode)
    n = st.n
    w = np.zeros(2 * n)
    w[k] = np.sin(theta)
    w[n + k] = np.cos(theta)
    var = float(w @ st.cov @ w)
    mu = float(w @ st.mean)
    if forced_outcome is None:
        m = float(_rng(rng).normal(mu, np.sqrt(var)))
    else:
        m = float(forced_outcome)
    mean, cov, mu, var = condition(st, w, m)
    density = float(np.exp(-((m - mu) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var))
    if n == 1:
        return HomodyneResult(m, None, density, mu, var)
    keep = [i for i in range(2 * n) if i not in (k, n + k)]
    labels = st.labels[:k] + st.labels[k + 1 :]
    out = GaussianState(mean[keep], cov[np.ix_(keep, keep)], labels)
    return HomodyneResult(m, out, density, mu, var)


def form_vector(form, n: int) -> tuple[np.ndarray, float]:
    """Float coefficient vector (and constant) of an exact quadrature form."""
    if form.n != n:
        raise ValidationError(f"form over {form.n} modes applied to a {n}-mode state")
    vec = np.array([float(x) for x in form.q + form.p])
    return vec, float(form.const)


def nullifier_stats(st: GaussianState, ns) -> list[tuple[float, float]]:
    """Mean and variance of every nullifier form in ``ns`` (labels must match the state)."""
    if tuple(ns.labels) != tuple(st.labels):
        raise ValidationError(f"nullifier modes {list(ns.labels)} differ from state modes {list(st.labels)}")
    out = []
    for f in ns.forms:
        v, c = form_vector(f, st.n)
        out.append((float(v @ st.mean + c), float(v @ st.cov @ v)))
    return out


def wigner_eval(st: GaussianState, q: Sequence[float], p: Sequence[float]) -> float:
    """Wigner function of the state at phase-space point ``(q, p)``."""
    q = np.atleast_1d(np.asarray(q, float))
    p = np.atleast_1d(np.asarray(p, float))
    if q.size != st.n or p.size != st.n:
        raise ValidationError(f"point must have {st.n} q and {st.n} p coordinates")
    x = np.concatenate([q, p]) - st.mean
    vals, vecs = np.linalg.eigh(st.cov)
    if vals.min() <= 1e-14 * max(1.0, vals.max()):
        null = vecs[:, int(np.argmin(vals))]
        names = [f"q{l}" for l in st.labels] + [f"p{l}" for l in st.labels]
        direction = " + ".join(f"{c:.3g}*{nm}" for c, nm in zip(null, names) if abs(c) > 1e-9)
        raise NumericalError(f"covariance is singular along {direction}")
    y = vecs.T @ x
    quad = float(np.sum(y**2 / vals))
    logdet = float(np.sum(np.log(vals)))
    return float(np.exp(-0.5 * quad - 0.5 * logdet - st.n * np.log(2 * np.pi)))


# ---------------------------------------------------------------------------
# Finite-squeezing teleportation


def teleport_hop(st: GaussianState, mode: int, s: float, m: float) -> tuple[GaussianState, float]:
    """Single-shot hop of ``mode`` through a ``p``-squeezed ancilla of accuracy ``s``.

    Works directly from the output wavefunction ``g(q) X(m) F psi`` with
    envelope ``g(q) = exp(-q^2 / (2 s^2))``. Pulled back through ``X(m) F`` the
    envelope becomes ``g(m - p)``, whose Wigner action is a ``q``-convolution of
    variance ``1/(2 s^2)`` and a ``p``-weight ``exp(-(p - m)^2 / s^2)``. The
    function returns the normalised output and the outcome density of ``m``.
    Used as an oracle independent of :func:`homodyne`.
    """
    iq = st.quadrature_index(mode, "q")
    ip = st.quadrature_index(mode, "p")
    cov = st.cov.copy()
    cov[iq, iq] += 1.0 / (2 * s * s)
    # weight exp(-(p - m)^2 / s^2) = Gaussian likelihood of m with variance s^2 / 2
    sp = cov[:, ip]
    tot = cov[ip, ip] + s * s / 2
    mean = st.mean + sp * (m - st.mean[ip]) / tot
    cov = cov - np.outer(sp, sp) / tot
    density = float(np.exp(-((m - st.mean[ip]) ** 2) / (2 * tot)) / np.sqrt(2 * np.pi * tot))
    out = GaussianState(mean, cov, st.labels)
    out = apply_on(out, "F", mode)
    out = apply_on(out, "X", mode, m)
    return out, density


def average_teleport_chain(st: GaussianState, s: float, hops: int, corrected: bool = True) -> GaussianState:
    """Outcome-averaged state after ``hops`` teleportation steps on a one-mode input.

    Each hop adds ``1/(2 s^2)`` to one quadrature, alternating ``q`` then ``p``
    in the fully corrected frame (the frame where every ``X(m) F`` byproduct is
    undone). With ``corrected=False`` the Fourier byproducts ``F^hops`` are
    left on the state (displacements average out of the frame anyway).
    """
    if st.n != 1:
        raise ValidationError("average_teleport_chain expects a single-mode input")
    if hops < 0:
        raise ValidationError(f"hop count must be non-negative, got {hops}")
    cov = st.cov.copy()
    noise = 1.0 / (2 * s * s)
    for h in range(hops):
        cov[h % 2, h % 2] += noise
    out = GaussianState(st.mean.copy(), cov, st.labels)
    if not corrected:
        for _ in range(hops % 4):
            out = apply(gate("F", 1, 1), out)
    return out


def teleport_noise_table(st: GaussianState, s: float, max_hops: int) -> list[dict]:
    """Rows of (hops, Var q, Var p, added q, added p) in the corrected frame."""
    rows = []
    for h in range(max_hops + 1):
        out = average_teleport_chain(st, s, h)
        rows.append(
            {
                "hops": h,
                "var_q": out.cov[0, 0],
                "var_p": out.cov[1, 1],
                "added_q": out.cov[0, 0] - st.cov[0, 0],
                "added_p": out.cov[1, 1] - st.cov[1, 1],
            }
        )
    return rows


def rows_to_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r)
    return buf.getvalue()

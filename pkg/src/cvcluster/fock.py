"""Truncated number-basis simulation of the non-Gaussian circuits.

Unitaries are ``exp(-i G)`` of truncated Hermitian generators::

    SQUEEZE(t)        G = ln(t) (qp + pq) / 2        q -> t q
    DISPLACE_X(r)     G = r p                        X(r) = exp(-i r p)
    DISPLACE_Z(r)     G = -r q                       Z(r) = exp(i r q)
    ROTATE(t)         exp(i t n)                     ROTATE(pi/2) = F
    CUBIC(g)          exp(i g q^3)
    CZ                exp(i q_1 q_2)
    BEAMSPLITTER(t)   G = t (q_1 p_2 - p_1 q_2)

Functions of ``q`` alone are applied in the eigenbasis of the truncated
``q`` matrix, so they are exactly unitary in the truncated space. Errors are
confined to the top ``guard`` levels of each mode; ``norm_leak`` records the
population found there plus any loss of norm, and a state whose leak exceeds
``threshold`` raises :class:`TruncationError`.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from cvcluster.errors import TruncationError, ValidationError

GUARD_BAND = 8
LEAK_THRESHOLD = 1e-4
DEFAULT_DIM = 40


@functools.lru_cache(maxsize=64)
def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def quadrature_ops(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated ``q = (a + a^dag)/sqrt 2`` and ``p = (a - a^dag)/(i sqrt 2)``."""
    if dim < 2:
        raise ValidationError(f"truncation dimension must be >= 2, got {dim}")
    a = _ladder(dim)
    q = (a + a.T) / np.sqrt(2)
    p = (a - a.T) / (1j * np.sqrt(2))
    return q, p


@functools.lru_cache(maxsize=64)
def _q_eigen(dim: int) -> tuple[np.ndarray, np.ndarray]:
    q, _ = quadrature_ops(dim)
    return np.linalg.eigh(q)


@dataclass(frozen=True, eq=False)
class FockState:
    """Amplitude tensor over ``mode_dims``; ``labels`` name the modes."""

    amplitudes: np.ndarray
    labels: tuple[int, ...] = ()
    norm_leak: float = 0.0
    guard: int = GUARD_BAND
    threshold: float | None = field(default=LEAK_THRESHOLD)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        labels = tuple(self.labels) if self.labels else tuple(range(1, amps.ndim + 1))
        if len(labels) != amps.ndim or len(set(labels)) != amps.ndim:
            raise ValidationError(f"labels {labels} do not match a {amps.ndim}-mode tensor")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", labels)

    @property
    def mode_dims(self) -> tuple[int, ...]:
        return self.amplitudes.shape

    @property
    def n(self) -> int:
        return self.amplitudes.ndim

    def axis(self, label: int) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"mode {label} is not live (live modes: {list(self.labels)})") from None

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def guard_population(self) -> float:
        """Population in the top ``guard`` levels of any mode."""
        probs = np.abs(self.amplitudes) ** 2
        mask = np.zeros(probs.shape, dtype=bool)
        for ax, d in enumerate(self.mode_dims):
            g = min(self.guard, d - 1)
            sl = [slice(None)] * self.n
            sl[ax] = slice(d - g, d)
            mask[tuple(sl)] = True
        return float(probs[mask].sum())

    def with_amplitudes(self, amps: np.ndarray, labels=None, extra_leak: float = 0.0) -> FockState:
        out = FockState(amps, self.labels if labels is None else labels, 0.0, self.guard, self.threshold)
        leak = max(self.norm_leak, out.guard_population() + abs(1.0 - out.norm2()) + extra_leak)
        out = FockState(amps, out.labels, leak, self.guard, self.threshold)
        out.check_leak()
        return out

    def check_leak(self) -> None:
        if self.threshold is not None and self.norm_leak > self.threshold:
            raise TruncationError(
                f"truncation leak {self.norm_leak:.3e} exceeds threshold {self.threshold:.1e} "
                f"(dims {self.mode_dims}, guard {self.guard}); increase the dimension"
            )

    def marginal(self, label: int) -> np.ndarray:
        ax = self.axis(label)
        probs = np.abs(self.amplitudes) ** 2
        return probs.sum(axis=tuple(i for i in range(self.n) if i != ax))

    def expectation(self, op: np.ndarray, label: int) -> complex:
        ax = self.axis(label)
        phi = np.moveaxis(np.tensordot(op, self.amplitudes, axes=([1], [ax])), 0, ax)
        return complex(np.vdot(self.amplitudes, phi) / self.norm2())

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean and symmetrised covariance in ``(q..., p...)`` ordering."""
        n = self.n
        ops = []
        for lab, d in zip(self.labels, self.mode_dims):
            q, p = quadrature_ops(d)
            ops.append((lab, q, p))
        vecs = []
        for kind in (1, 2):
            for lab, q, p in ops:
                vecs.append((lab, q if kind == 1 else p))
        psi = self.amplitudes / np.sqrt(self.norm2())

        def act(op, lab, v):
            ax = self.axis(lab)
            return np.moveaxis(np.tensordot(op, v, axes=([1], [ax])), 0, ax)

        applied = [act(op, lab, psi) for lab, op in vecs]
        mean = np.array([np.vdot(psi, a).real for a in applied])
        cov = np.zeros((2 * n, 2 * n))
        for i in range(2 * n):
            for j in range(i, 2 * n):
                val = np.vdot(applied[i], applied[j]).real - mean[i] * mean[j]
                cov[i, j] = cov[j, i] = val
        return mean, cov

    def to_rows(self) -> list[tuple]:
        """``(index..., re, im)`` rows for export."""
        rows = []
        for idx in np.ndindex(*self.mode_dims):
            a = self.amplitudes[idx]
            rows.append(tuple(int(i) for i in idx) + (float(a.real), float(a.imag)))
        return rows

    def to_dict(self) -> dict:
        return {
            "modes": list(self.labels),
            "dims": list(self.mode_dims),
            "norm_leak": self.norm_leak,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes.ravel()],
        }


def fock_vacuum(dims, labels=(), threshold: float | None = LEAK_THRESHOLD) -> FockState:
    dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
    amps = np.zeros(dims, dtype=complex)
    amps[(0,) * len(dims)] = 1.0
    return FockState(amps, tuple(labels), 0.0, GUARD_BAND, threshold)


def squeezed_vacuum(r: float, dim: int = DEFAULT_DIM, label: int = 1, threshold: float | None = LEAK_THRESHOLD) -> FockState:
    """``S(r)|0>`` (position variance ``r^2/2``) from the two-photon expansion.

    ``c_{2k} = sqrt((2k)!) / (2^k k!) * tanh(ln r)^k / sqrt(cosh(ln r))``;
    odd amplitudes vanish. The truncated vector is renormalised and the
    discarded weight is recorded in ``norm_leak``.
    """
    if not r > 0:
        raise ValidationError(f"squeeze factor must be positive, got {r}")
    rho = np.log(r)
    th = np.tanh(rho)
    amps = np.zeros(dim, dtype=complex)
    if th == 0:
        amps[0] = 1.0
    else:
        k = np.arange(0, (dim + 1) // 2)
        logmag = 0.5 * gammaln(2 * k + 1) - k * np.log(2.0) - gammaln(k + 1) + k * np.log(abs(th))
        amps[2 * k] = np.exp(logmag) * np.sign(th) ** k / np.sqrt(np.cosh(rho))
    kept = float(np.sum(np.abs(amps) ** 2))
    amps /= np.sqrt(kept)
    st = FockState(amps, (label,), 0.0, GUARD_BAND, None)
    leak = (1.0 - kept) + st.guard_population()
    out = FockState(amps, (label,), max(leak, 0.0), GUARD_BAND, threshold)
    out.check_leak()
    return out


def tensor(*states: FockState) -> FockState:
    amps = states[0].amplitudes
    for s in states[1:]:
        amps = np.multiply.outer(amps, s.amplitudes)
    labels = sum((s.labels for s in states), ())
    thr = states[0].threshold
    return FockState(amps, labels, max(s.norm_leak for s in states), states[0].guard, thr)


# ---------------------------------------------------------------------------
# Generators


def single_mode_unitary(tag: str, param: float, dim: int) -> np.ndarray:
    tag = tag.upper()
    q, p = quadrature_ops(dim)
    if tag == "SQUEEZE":
        if not param > 0:
            raise ValidationError(f"squeeze factor must be positive, got {param}")
        return sla.expm(-1j * np.log(param) * (q @ p + p @ q) / 2)
    if tag == "DISPLACE_X":
        return sla.expm(-1j * param * p)
    if tag == "DISPLACE_Z":
        return sla.expm(1j * param * q)
    if tag == "ROTATE":
        return np.diag(np.exp(1j * param * np.arange(dim)))
    if tag in ("CUBIC", "SHEAR"):
        x, V = _q_eigen(dim)
        phase = param * x**3 if tag == "CUBIC" else param * x**2 / 2
        return (V * np.exp(1j * phase)) @ V.T
    raise ValidationError(f"unknown generator tag {tag!r}")


TWO_MODE = ("CZ", "BEAMSPLITTER")
ONE_MODE = ("SQUEEZE", "DISPLACE_X", "DISPLACE_Z", "ROTATE", "CUBIC", "SHEAR")


def apply_generator(st: FockState, tag: str, modes, param: float | None = None) -> FockState:
    """Apply ``exp(-i G)`` for a named generator to the modes (labels) given."""
    tag = tag.upper()
    modes = (modes,) if isinstance(modes, (int, np.integer)) else tuple(modes)
    if tag in ONE_MODE:
        if len(modes) != 1:
            raise ValidationError(f"{tag} acts on one mode, got {modes}")
        if param is None:
            raise ValidationError(f"{tag} needs a parameter")
        ax = st.axis(modes[0])
        U = single_mode_unitary(tag, float(param), st.mode_dims[ax])
        amps = np.moveaxis(np.tensordot(U, st.amplitudes, axes=([1], [ax])), 0, ax)
        return st.with_amplitudes(amps)
    if tag in TWO_MODE:
        if len(modes) != 2 or modes[0] == modes[1]:
            raise ValidationError(f"{tag} acts on two distinct modes, got {modes}")
        a1, a2 = st.axis(modes[0]), st.axis(modes[1])
        perm = [a1, a2] + [i for i in range(st.n) if i not in (a1, a2)]
        psi = np.transpose(st.amplitudes, perm)
        d1, d2 = psi.shape[:2]
        rest = psi.shape[2:]
        mat = psi.reshape(d1, d2, -1)
        if tag == "CZ":
            x1, V1 = _q_eigen(d1)
            x2, V2 = _q_eigen(d2)
            phi = np.einsum("ia,ijr,jb->abr", V1, mat, V2)
            phi *= np.exp(1j * np.outer(x1, x2))[:, :, None]
            mat = np.einsum("ia,abr,jb->ijr", V1, phi, V2)
        else:
            if param is None:
                raise ValidationError("BEAMSPLITTER needs an angle")
            q1, p1 = quadrature_ops(d1)
            q2, p2 = quadrature_ops(d2)
            G = param * (sp.kron(sp.csr_matrix(q1), sp.csr_matrix(p2)) - sp.kron(sp.csr_matrix(p1), sp.csr_matrix(q2)))
            vec = mat.reshape(d1 * d2, -1)
            vec = expm_multiply(-1j * G.tocsc(), vec)
            mat = np.asarray(vec).reshape(d1, d2, -1)
        psi = mat.reshape((d1, d2) + rest)
        amps = np.transpose(psi, np.argsort(perm))
        return st.with_amplitudes(amps)
    raise ValidationError(f"unknown generator tag {tag!r}; expected one of {list(ONE_MODE + TWO_MODE)}")


def unitarity_error(U: np.ndarray, guard: int = GUARD_BAND) -> float:
    """``||U^dag U - I||`` on the interior ``dim - guard`` block."""
    k = U.shape[0] - guard
    if k <= 0:
        raise ValidationError("guard band covers the whole space")
    return float(np.linalg.norm((U.conj().T @ U)[:k, :k] - np.eye(k)))


# ---------------------------------------------------------------------------
# Photon counting


@dataclass(frozen=True, eq=False)
class CountResult:
    n: int
    state: FockState | None
    probability: float
    distribution: np.ndarray


def photon_count(st: FockState, mode: int, outcome: int | None = None, rng=None) -> CountResult:
    """Project ``mode`` onto ``|n>``; sample ``n`` from the marginal when not forced.

    ``probability`` is ``<psi|Pi_n|psi>`` for the (possibly unnormalised) input.
    """
    probs = st.marginal(mode)
    if outcome is None:
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        outcome = int(gen.choice(probs.size, p=probs / probs.sum()))
    if not 0 <= outcome < probs.size:
        raise ValidationError(f"outcome {outcome} outside the truncated range 0..{probs.size - 1}")
    prob = float(probs[outcome])
    if prob <= 0:
        raise ValidationError(f"photon number {outcome} has zero probability")
    ax = st.axis(mode)
    cond = np.take(st.amplitudes, outcome, axis=ax) / np.sqrt(prob)
    labels = st.labels[:ax] + st.labels[ax + 1 :]
    if not labels:
        return CountResult(outcome, None, prob, probs)
    out = FockState(cond, labels, st.norm_leak, st.guard, st.threshold)
    out = FockState(cond, labels, max(st.norm_leak, out.guard_population()), st.guard, st.threshold)
    return CountResult(outcome, out, prob, probs)


# ---------------------------------------------------------------------------
# Cubic phase resources


def gamma_of_n(n: int) -> float:
    """Cubic strength heralded by ``n`` photons: ``1 / (6 sqrt(2n + 1))``."""
    if n < 0:
        raise ValidationError(f"photon number must be non-negative, got {n}")
    return float(1.0 / (6.0 * np.sqrt(2 * n + 1)))


def cubic_correction(a: float, n: int) -> float:
    """Squeeze factor ``t = (a / gamma(n))^(1/3)`` with ``S^dag(t) e^{i gamma q^3} S(t) = e^{i a q^3}``.

    Negative strengths are handled by callers through a reflection, since
    ``P e^{i a q^3} P = e^{-i a q^3}``.
    """
    if not a > 0:
        raise ValidationError(f"target strength must be positive (use a reflection for a < 0), got {a}")
    return float(np.cbrt(a / gamma_of_n(n)))


@dataclass(frozen=True, eq=False)
class CircuitResult:
    n: int
    state: FockState
    probability: float
    distribution: np.ndarray
    leak: float


def _dims(dim, dims) -> tuple[int, int]:
    if dims is not None:
        d1, d2 = dims
    else:
        d1 = d2 = dim
    if min(d1, d2) <= GUARD_BAND:
        raise ValidationError(f"dimensions {(d1, d2)} must exceed the guard band {GUARD_BAND}")
    return int(d1), int(d2)


def run_circuit_cluster(s: float, r: float, dim: int = DEFAULT_DIM, n: int | None = None, rng=None,
                        dims: tuple[int, int] | None = None, threshold: float | None = LEAK_THRESHOLD) -> CircuitResult:
    """Two-node cluster ``CZ (S(s)|0> S(s)|0>)``, ``X(r)`` on node 1, count node 1.

    ``dims`` overrides ``(dim, dim)`` for (counted mode, output mode).
    """
    d1, d2 = _dims(dim, dims)
    st = tensor(squeezed_vacuum(s, d1, 1, threshold), squeezed_vacuum(s, d2, 2, threshold))
    st = apply_generator(st, "CZ", (1, 2))
    st = apply_generator(st, "DISPLACE_X", 1, r)
    res = photon_count(st, 1, n, rng)
    return CircuitResult(res.n, res.state, res.probability, res.distribution, res.state.norm_leak)


def run_circuit_gkp(s: float, r: float, dim: int = DEFAULT_DIM, n: int | None = None, rng=None,
                    theta: float = np.pi / 4, dims: tuple[int, int] | None = None,
                    threshold: float | None = LEAK_THRESHOLD) -> CircuitResult:
    """``S(1/s)|0>`` (mode A) and ``S(s)|0>`` (mode B) mixed on ``BEAMSPLITTER(theta)``, ``Z(r)`` on A, count A."""
    d1, d2 = _dims(dim, dims)
    st = tensor(squeezed_vacuum(1.0 / s, d1, 1, threshold), squeezed_vacuum(s, d2, 2, threshold))
    st = apply_generator(st, "BEAMSPLITTER", (1, 2), theta)
    st = apply_generator(st, "DISPLACE_Z", 1, r)
    res = photon_count(st, 1, n, rng)
    return CircuitResult(res.n, res.state, res.probability, res.distribution, res.state.norm_leak)


def matched_gkp_parameters(s: float) -> tuple[float, float]:
    """``(s_gkp, theta)`` making the beamsplitter resource equal the two-node cluster at accuracy ``s``
    up to a Fourier gate on the counted mode.

    The Fourier-rotated cluster has zero ``q``-``p`` correlations and ``q`` block
    ``[[s^2 + s^-2, -s^2], [-s^2, s^2]] / 2``. Its larger eigenvalue is
    ``lambda_+^2 / 2`` (two-mode generation-matrix singular value), so
    ``s_gkp = lambda_+`` and ``theta`` aligns the beamsplitter with the
    corresponding eigenvector. Counting is insensitive to the Fourier gate
    and ``F X(r) F^dag = Z(r)``.
    """
    if not s > 0:
        raise ValidationError(f"accuracy must be positive, got {s}")
    Q = np.array([[s * s + s**-2, -s * s], [-s * s, s * s]])
    w, V = np.linalg.eigh(Q)
    v = V[:, 1]
    return float(np.sqrt(w[1])), float(np.arctan2(-v[0], v[1]))


def best_fourier_overlap(a: FockState, b: FockState) -> tuple[float, int]:
    """``max_k |<a|F^k b>|`` over Fourier powers, for single-mode states."""
    if a.n != 1 or b.n != 1:
        raise ValidationError("expected single-mode states")
    d = min(a.mode_dims[0], b.mode_dims[0])
    va = a.amplitudes[:d] / np.linalg.norm(a.amplitudes)
    vb = b.amplitudes[:d] / np.linalg.norm(b.amplitudes)
    best = (-1.0, 0)
    for k in range(4):
        ov = abs(np.vdot(va, (1j ** np.arange(d)) ** k * vb))
        best = max(best, (float(ov), k))
    return best

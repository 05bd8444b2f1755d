"""Position-grid wavefunctions.

Conventions: ``psi(x) = <x|psi>``; the Fourier gate ``F = exp(i pi n / 2)``
acts as ``(F psi)(y) = int e^{ixy} psi(x) dx / sqrt(2 pi)``; ``X(s)``
shifts, ``(X(s) psi)(x) = psi(x - s)``; ``S(t)`` stretches,
``(S(t) psi)(x) = psi(x / t) / sqrt(t)``. Transforms are evaluated as exact
sums over the grid samples (no FFT wrap-around), so they can be taken at
arbitrary output points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize

from cvcluster.errors import ValidationError


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[-qmax, qmax]``."""

    qmax: float = 10.0
    points: int = 2048

    def __post_init__(self) -> None:
        if self.qmax <= 0 or self.points < 8:
            raise ValidationError(f"invalid grid: qmax={self.qmax}, points={self.points}")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.qmax, self.qmax, self.points)

    @property
    def dx(self) -> float:
        return 2 * self.qmax / (self.points - 1)


@dataclass(frozen=True, eq=False)
class GridWavefunction:
    """Samples of a wavefunction; ``source`` (optional) evaluates it exactly anywhere."""

    grid: Grid
    values: np.ndarray
    source: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.points,):
            raise ValidationError(f"expected {self.grid.points} samples, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], grid: Grid | None = None) -> GridWavefunction:
        grid = grid or Grid()
        return cls(grid, fn(grid.x), fn)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dx))

    def normalized(self) -> GridWavefunction:
        nrm = self.norm()
        if nrm == 0:
            raise ValidationError("cannot normalise a zero wavefunction")
        src = self.source
        return GridWavefunction(self.grid, self.values / nrm, None if src is None else (lambda p: src(p) / nrm))

    def inner(self, other: GridWavefunction) -> complex:
        """``<self|other>``."""
        _same_grid(self, other)
        return complex(np.vdot(self.values, other.values) * self.grid.dx)

    def overlap(self, other: GridWavefunction) -> float:
        """``|<a|b>| / (|a| |b|)``."""
        return abs(self.inner(other)) / (self.norm() * other.norm())

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at arbitrary points: exact if a source is known, otherwise a cubic spline (zero outside)."""
        points = np.asarray(points, dtype=float)
        if self.source is not None:
            return np.asarray(self.source(points), dtype=complex)
        x = self.grid.x
        re = CubicSpline(x, self.values.real, extrapolate=False)(points)
        im = CubicSpline(x, self.values.imag, extrapolate=False)(points)
        return np.nan_to_num(re) + 1j * np.nan_to_num(im)

    def map_points(self, fn: Callable[[np.ndarray], np.ndarray]) -> GridWavefunction:
        """New wavefunction ``x -> fn(x)`` sampled on the same grid (``fn`` becomes the source)."""
        return GridWavefunction(self.grid, fn(self.grid.x), fn)

    def phase(self, threshold: float = 0.05) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unwrapped phase on the support ``|psi| > threshold * max``; returns (x, phase, |psi|)."""
        amp = np.abs(self.values)
        mask = amp > threshold * amp.max()
        idx = np.flatnonzero(mask)
        # keep the contiguous run around the peak so unwrapping is well defined
        peak = int(np.argmax(amp))
        lo = peak
        while lo - 1 >= 0 and mask[lo - 1]:
            lo -= 1
        hi = peak
        while hi + 1 < amp.size and mask[hi + 1]:
            hi += 1
        sel = slice(lo, hi + 1) if idx.size else slice(0, 0)
        ph = np.unwrap(np.angle(self.values[sel]))
        return self.grid.x[sel], ph, amp[sel]


def _same_grid(a: GridWavefunction, b: GridWavefunction) -> None:
    if a.grid != b.grid:
        raise ValidationError("wavefunctions live on different grids")


def fourier_eval(psi: GridWavefunction, points: np.ndarray, inverse: bool = False, chunk: int = 1024) -> np.ndarray:
    """``(F psi)(y)`` (or ``F^dagger``) at ``points`` by direct summation over the grid."""
    x = psi.grid.x
    points = np.asarray(points, dtype=float)
    sign = -1.0 if inverse else 1.0
    out = np.empty(points.shape, dtype=complex)
    flat = points.ravel()
    res = out.ravel()
    w = psi.values * psi.grid.dx / np.sqrt(2 * np.pi)
    for start in range(0, flat.size, chunk):
        y = flat[start : start + chunk]
        res[start : start + chunk] = np.exp(sign * 1j * np.outer(y, x)) @ w
    return out


def fourier(psi: GridWavefunction, inverse: bool = False) -> GridWavefunction:
    """``F psi`` sampled on the same grid; the result evaluates exactly at any point."""
    base = GridWavefunction(psi.grid, psi.values)  # freeze the samples
    fn = lambda p: fourier_eval(base, p, inverse=inverse)
    return GridWavefunction(psi.grid, fn(psi.grid.x), fn)


def hermite_functions(dim: int, x: np.ndarray) -> np.ndarray:
    """Rows ``k = 0..dim-1`` of the normalised Hermite functions ``<x|k>``."""
    x = np.asarray(x, dtype=float)
    h = np.zeros((dim,) + x.shape)
    h[0] = np.pi**-0.25 * np.exp(-x * x / 2)
    if dim > 1:
        h[1] = np.sqrt(2.0) * x * h[0]
    for k in range(2, dim):
        h[k] = np.sqrt(2.0 / k) * x * h[k - 1] - np.sqrt((k - 1) / k) * h[k - 2]
    return h


def fock_to_grid(amplitudes: np.ndarray, grid: Grid | None = None) -> GridWavefunction:
    """Single-mode number-basis amplitudes to a position wavefunction."""
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.ndim != 1:
        raise ValidationError("expected single-mode amplitudes")
    fn = lambda p: amps @ hermite_functions(amps.size, p)
    return GridWavefunction.from_function(fn, grid)


def squeezed_vacuum_wavefunction(s: float, grid: Grid | None = None) -> GridWavefunction:
    """``S(s)|0>``: a Gaussian with position variance ``s^2 / 2``."""
    if not s > 0:
        raise ValidationError(f"squeeze factor must be positive, got {s}")
    fn = lambda p: np.pi**-0.25 / np.sqrt(s) * np.exp(-np.asarray(p) ** 2 / (2 * s * s)) + 0j
    return GridWavefunction.from_function(fn, grid)


def check_phase_resolution(gamma: float, grid: Grid) -> None:
    """Reject grids whose spacing cannot resolve the cubic phase near the edges."""
    if abs(gamma) * grid.qmax**2 * grid.dx >= np.pi / 4:
        raise ValidationError(
            f"grid too coarse for cubic phase {gamma}: |gamma| qmax^2 dx = "
            f"{abs(gamma) * grid.qmax ** 2 * grid.dx:.3f} >= pi/4"
        )


def cubic_target(gamma: float, s_env: float, grid: Grid | None = None, x0: float = 0.0, p0: float = 0.0) -> GridWavefunction:
    """``e^{i gamma q^3}`` times a Gaussian envelope of position width ``s_env``, normalised.

    ``x0`` and ``p0`` displace the state in phase space (``Z(p0) X(x0)``).
    """
    grid = grid or Grid()
    if not s_env > 1:
        raise ValidationError(f"envelope width must exceed 1, got {s_env}")
    check_phase_resolution(gamma, grid)
    norm = np.pi**-0.25 / np.sqrt(s_env)

    def fn(p):
        y = np.asarray(p, dtype=float) - x0
        return norm * np.exp(1j * gamma * y**3 - y * y / (2 * s_env**2) + 1j * p0 * np.asarray(p))

    return GridWavefunction.from_function(fn, grid)


@dataclass(frozen=True)
class OverlapFit:
    overlap: float
    x0: float
    p0: float


def max_overlap_over_shifts(
    psi: GridWavefunction,
    make_target: Callable[[float, float], GridWavefunction],
    starts: int = 5,
    span: tuple[float, float] = (3.0, 3.0),
) -> OverlapFit:
    """Maximise ``|<target(x0, p0)|psi>|`` over phase-space shifts (multi-start Nelder-Mead)."""
    psi = psi.normalized()

    def cost(v):
        t = make_target(float(v[0]), float(v[1]))
        return -abs(t.inner(psi)) / t.norm()

    best = None
    for x0 in np.linspace(-span[0], span[0], starts):
        for p0 in np.linspace(-span[1], span[1], starts):
            r = minimize(cost, [x0, p0], method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-10})
            if best is None or r.fun < best.fun:
                best = r
    return OverlapFit(float(-best.fun), float(best.x[0]), float(best.x[1]))


def fit_phase_polynomial(psi: GridWavefunction, degree: int = 3, reference: GridWavefunction | None = None,
                         threshold: float = 0.05) -> np.ndarray:
    """Weighted polynomial fit of ``arg psi - arg reference`` on the support (highest power first)."""
    if reference is not None:
        _same_grid(psi, reference)
        ratio = psi.values * np.conj(reference.values)
        amp = np.abs(psi.values) * np.abs(reference.values)
        mask_amp = np.sqrt(amp)
        tmp = GridWavefunction(psi.grid, mask_amp * np.exp(1j * np.angle(ratio)))
        x, ph, w = tmp.phase(threshold)
    else:
        x, ph, w = psi.phase(threshold)
    if x.size <= degree:
        raise ValidationError("support too small for the phase fit")
    return np.polyfit(x, ph, degree, w=w)


def squeeze(psi: GridWavefunction, t: float) -> GridWavefunction:
    """``S(t) psi``, evaluated through ``psi.evaluate`` at rescaled points."""
    if t == 0:
        raise ValidationError("squeeze factor must be nonzero")
    src = psi.evaluate
    return psi.map_points(lambda p: src(np.asarray(p) / t) / np.sqrt(abs(t)))


def cubic_phase(psi: GridWavefunction, gamma: float) -> GridWavefunction:
    """``e^{i gamma q^3} psi``."""
    src = psi.evaluate
    return psi.map_points(lambda p: np.exp(1j * gamma * np.asarray(p) ** 3) * src(p))


def squeezer_sandwich(psi: GridWavefunction, gamma: float, t: float) -> GridWavefunction:
    """``S^dag(t) e^{i gamma q^3} S(t) psi``; equals ``e^{i gamma t^3 q^3} psi``."""
    return squeeze(cubic_phase(squeeze(psi, t), gamma), 1.0 / t)


def pointwise_phase_error(a: GridWavefunction, b: GridWavefunction, threshold: float = 1e-6) -> float:
    """Largest ``|arg(a / b)|`` where both amplitudes exceed ``threshold`` times their peak."""
    _same_grid(a, b)
    amp_a, amp_b = np.abs(a.values), np.abs(b.values)
    mask = (amp_a > threshold * amp_a.max()) & (amp_b > threshold * amp_b.max())
    if not mask.any():
        raise ValidationError("wavefunctions share no support above the threshold")
    return float(np.max(np.abs(np.angle(a.values[mask] * np.conj(b.values[mask])))))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvcluster import fock as fk
from cvcluster import grid as gr
from cvcluster.errors import ValidationError

GRID = gr.Grid(10.0, 1024)


def test_grid_is_symmetric():
    assert np.allclose(GRID.x, -GRID.x[::-1])
    with pytest.raises(ValidationError):
        gr.Grid(-1.0, 100)


def test_fourier_of_vacuum_is_vacuum():
    vac = gr.squeezed_vacuum_wavefunction(1.0, GRID)
    assert np.allclose(gr.fourier(vac).values, vac.values, atol=1e-10)


def test_fourier_matches_number_phase():
    # F |n> = i^n |n>
    h = gr.hermite_functions(4, GRID.x)
    for n in range(4):
        psi = gr.GridWavefunction(GRID, h[n])
        assert np.allclose(gr.fourier(psi).values, (1j) ** n * h[n], atol=1e-9)


def test_fourier_inverse_round_trip():
    psi = gr.cubic_target(0.05, 1.5, GRID)
    back = gr.fourier(gr.fourier(psi), inverse=True)
    assert psi.overlap(back) > 1 - 1e-10


def test_fock_to_grid_matches_squeezed_gaussian():
    a = gr.fock_to_grid(fk.squeezed_vacuum(1.4, 40).amplitudes, GRID)
    b = gr.squeezed_vacuum_wavefunction(1.4, GRID)
    assert a.overlap(b) > 1 - 1e-8


def test_cubic_target_zero_gamma_is_gaussian():
    a = gr.cubic_target(0.0, 2.0, GRID)
    assert a.overlap(gr.squeezed_vacuum_wavefunction(2.0, GRID)) >= 0.999
    assert abs(a.norm() - 1) < 1e-9


@given(st.floats(-0.2, 0.2), st.floats(1.1, 3.0))
def test_cubic_target_modulus_is_symmetric(g, s):
    amp = np.abs(gr.cubic_target(g, s, GRID).values)
    assert np.allclose(amp, amp[::-1])


def test_cubic_target_preconditions():
    with pytest.raises(ValidationError, match="envelope"):
        gr.cubic_target(0.1, 1.0, GRID)
    with pytest.raises(ValidationError, match="too coarse"):
        gr.cubic_target(5.0, 2.0, gr.Grid(10.0, 256))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 1.0), st.integers(0, 50))
def test_squeezer_sandwich_identity(a, n):
    t = fk.cubic_correction(a, n)
    psi = gr.squeezed_vacuum_wavefunction(2.0, GRID)
    lhs = gr.squeezer_sandwich(psi, fk.gamma_of_n(n), t)
    rhs = gr.cubic_phase(psi, a)
    assert gr.pointwise_phase_error(lhs, rhs) <= 1e-6
    assert np.allclose(np.abs(lhs.values), np.abs(rhs.values), atol=1e-12)


def test_overlap_optimiser_finds_shift():
    target = lambda x0, p0: gr.cubic_target(0.03, 2.0, GRID, x0, p0)
    psi = target(0.7, -0.4)
    fit = gr.max_overlap_over_shifts(psi, target, starts=3)
    assert fit.overlap > 1 - 1e-8
    assert abs(fit.x0 - 0.7) < 1e-3 and abs(fit.p0 + 0.4) < 1e-3


def test_phase_fit_recovers_polynomial():
    base = gr.squeezed_vacuum_wavefunction(2.0, GRID)
    psi = base.map_points(lambda p: base.evaluate(p) * np.exp(1j * (0.04 * p**3 - 0.3 * p**2 + 0.5 * p)))
    c = gr.fit_phase_polynomial(psi, 3, base)
    assert np.allclose(c[:3], [0.04, -0.3, 0.5], atol=1e-8)


def test_spline_evaluation_outside_grid_is_zero():
    psi = gr.GridWavefunction(GRID, gr.squeezed_vacuum_wavefunction(1.0, GRID).values)
    assert psi.evaluate(np.array([20.0]))[0] == 0
    assert abs(psi.evaluate(np.array([0.0]))[0] - np.pi**-0.25) < 1e-6


def test_different_grids_rejected():
    a = gr.squeezed_vacuum_wavefunction(1.0, GRID)
    b = gr.squeezed_vacuum_wavefunction(1.0, gr.Grid(8.0, 1024))
    with pytest.raises(ValidationError, match="different grids"):
        a.inner(b)

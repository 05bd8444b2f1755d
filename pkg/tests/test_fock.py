import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvcluster import fock as fk
from cvcluster import gaussian as gs
from cvcluster.errors import TruncationError, ValidationError
from cvcluster.graph import build_graph

DATA = Path(__file__).parent / "data"


def test_quadrature_ops_dim2():
    q, p = fk.quadrature_ops(2)
    assert np.allclose(q, [[0, 1 / np.sqrt(2)], [1 / np.sqrt(2), 0]])
    assert np.allclose(q, q.conj().T) and np.allclose(p, p.conj().T)


def test_commutator_defect_confined_to_last_level():
    q, p = fk.quadrature_ops(12)
    comm = q @ p - p @ q
    assert np.allclose(comm[:-1, :-1], 1j * np.eye(11))
    assert abs(comm[-1, -1] - 1j) > 1


def test_quadrature_ops_reject_tiny_dim():
    with pytest.raises(ValidationError):
        fk.quadrature_ops(1)


def test_squeezed_vacuum_basics():
    assert np.allclose(fk.squeezed_vacuum(1.0, 10).amplitudes, np.eye(10)[0])
    st_ = fk.squeezed_vacuum(1.5, 40)
    assert np.all(st_.amplitudes[1::2] == 0)
    mean, cov = st_.moments()
    assert abs(cov[0, 0] - 1.5**2 / 2) < 1e-6
    assert abs(cov[1, 1] - 0.5 / 1.5**2) < 1e-6


def test_squeezed_vacuum_matches_exponentiated_generator():
    dim = 60
    st_ = fk.squeezed_vacuum(1.4, dim, threshold=None)
    U = fk.single_mode_unitary("SQUEEZE", 1.4, dim)
    ref = U[:, 0]
    assert abs(abs(np.vdot(ref[:30], st_.amplitudes[:30])) - 1) < 1e-8


def test_squeezed_vacuum_leak_error():
    with pytest.raises(TruncationError, match="increase the dimension"):
        fk.squeezed_vacuum(4.0, 12)
    with pytest.raises(ValidationError):
        fk.squeezed_vacuum(0.0, 12)


def test_beamsplitter_keeps_vacuum():
    st_ = fk.apply_generator(fk.fock_vacuum((10, 10)), "BEAMSPLITTER", (1, 2), 0.7)
    assert abs(abs(st_.amplitudes[0, 0]) - 1) < 1e-12


@pytest.mark.parametrize("tag,param", [("SQUEEZE", 1.3), ("DISPLACE_X", 0.8), ("DISPLACE_Z", -0.6), ("ROTATE", 0.4),
                                       ("CUBIC", 0.05), ("SHEAR", 0.3)])
def test_unitaries_are_unitary_on_interior(tag, param):
    U = fk.single_mode_unitary(tag, param, 40)
    assert fk.unitarity_error(U) <= 1e-8


def test_unknown_generator():
    with pytest.raises(ValidationError, match="unknown generator"):
        fk.apply_generator(fk.fock_vacuum(5), "KERR", 1, 0.1)


def test_cz_matches_gaussian_covariance():
    s = 1.2
    st_ = fk.tensor(fk.squeezed_vacuum(s, 30, 1), fk.squeezed_vacuum(s, 30, 2))
    st_ = fk.apply_generator(st_, "CZ", (1, 2))
    mean, cov = st_.moments()
    ref = gs.canonical_cluster(build_graph(2, [(1, 2)]), s)
    assert np.allclose(mean, ref.mean, atol=1e-8)
    assert np.allclose(cov, ref.cov, atol=1e-5)


def test_photon_count_vacuum_and_completeness(rng):
    res = fk.photon_count(fk.fock_vacuum((6, 6)), 1)
    assert res.n == 0 and res.probability == 1.0
    st_ = fk.tensor(fk.squeezed_vacuum(1.3, 30, 1), fk.squeezed_vacuum(1.3, 30, 2))
    st_ = fk.apply_generator(st_, "BEAMSPLITTER", (1, 2), 0.5)
    dist = fk.photon_count(st_, 1, rng=rng).distribution
    assert np.all(dist >= 0)
    assert abs(dist.sum() - st_.norm2()) < 1e-10


def test_photon_count_errors():
    st_ = fk.squeezed_vacuum(1.5, 20, threshold=None)
    with pytest.raises(ValidationError, match="zero probability"):
        fk.photon_count(fk.tensor(st_, fk.fock_vacuum(4, (2,))), 1, 1)
    with pytest.raises(ValidationError, match="outside"):
        fk.photon_count(st_, 1, 25)
    with pytest.raises(ValidationError, match="not live"):
        fk.photon_count(st_, 3, 0)


def test_coherent_count_concentrates_near_displacement_energy():
    r = 3.0
    st_ = fk.apply_generator(fk.fock_vacuum(40), "DISPLACE_X", 1, r)
    dist = fk.photon_count(st_, 1, 0).distribution
    mean_n = float(np.arange(40) @ dist)
    assert abs(mean_n - r * r / 2) < 1e-6  # |alpha|^2 = r^2 / 2, Poisson


def test_gamma_and_correction():
    assert fk.gamma_of_n(0) == pytest.approx(1 / 6)
    assert fk.gamma_of_n(4) == pytest.approx(1 / 18)
    assert all(fk.gamma_of_n(n + 1) < fk.gamma_of_n(n) for n in range(20))
    assert fk.cubic_correction(fk.gamma_of_n(3), 3) == pytest.approx(1.0)
    assert fk.cubic_correction(8 * fk.gamma_of_n(0), 0) == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        fk.cubic_correction(0.0, 1)
    with pytest.raises(ValidationError):
        fk.gamma_of_n(-1)


@given(st.floats(1e-4, 10), st.integers(0, 200))
def test_correction_identity(a, n):
    t = fk.cubic_correction(a, n)
    assert abs(fk.gamma_of_n(n) * t**3 - a) <= 1e-12 * a


def test_circuits_agree_up_to_fourier_at_matched_parameters():
    s, r = 1.5, 3.0
    sg, theta = fk.matched_gkp_parameters(s)
    for n in (0, 2, 4):
        a = fk.run_circuit_cluster(s, r, 40, n)
        b = fk.run_circuit_gkp(sg, r, 40, n, theta=theta)
        ov, k = fk.best_fourier_overlap(a.state, b.state)
        assert ov >= 0.99
        assert abs(a.probability - b.probability) < 1e-8


def test_circuits_share_count_distribution():
    s, r = 1.5, 3.0
    sg, theta = fk.matched_gkp_parameters(s)
    a = fk.run_circuit_cluster(s, r, 40, 0)
    b = fk.run_circuit_gkp(sg, r, 40, 0, theta=theta)
    assert np.allclose(a.distribution, b.distribution, atol=1e-6)  # beamsplitter truncation


def test_circuit_sampling_is_seeded():
    a = fk.run_circuit_cluster(1.5, 3.0, 30, rng=np.random.default_rng(9), threshold=None)
    b = fk.run_circuit_cluster(1.5, 3.0, 30, rng=np.random.default_rng(9), threshold=None)
    assert a.n == b.n and np.array_equal(a.state.amplitudes, b.state.amplitudes)


def test_forced_zero_golden_state():
    data = json.loads((DATA / "cluster_n0_s1.5_r3_dim30.json").read_text())
    p = data["params"]
    res = fk.run_circuit_cluster(p["s"], p["r"], p["dim"], p["n"], threshold=None)
    ref = np.array([complex(re, im) for re, im in data["amplitudes"]])
    assert np.allclose(res.state.amplitudes, ref, atol=1e-10)
    assert abs(res.probability - data["probability"]) < 1e-12


def test_leak_threshold_raises_for_small_dims():
    with pytest.raises(TruncationError):
        fk.run_circuit_cluster(1.5, 5.0, 20, 12)


def test_dims_must_exceed_guard_band():
    with pytest.raises(ValidationError, match="guard band"):
        fk.run_circuit_cluster(1.5, 3.0, fk.GUARD_BAND, 0)


def test_state_export():
    st_ = fk.squeezed_vacuum(1.2, 24)
    rows = st_.to_rows()
    assert len(rows) == 24 and rows[0][0] == 0
    d = st_.to_dict()
    assert d["dims"] == [24] and len(d["amplitudes"]) == 24

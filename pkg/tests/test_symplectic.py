import math
import time

import numpy as np
import pytest

from conftest import haar_unitary
from phasemask.symplectic import (
    ComplexUnitary,
    GaussianParams,
    RealSymplectic,
    amplitudes_to_mean,
    apply_encryption,
    coherent_covariance,
    form_matrix,
    is_symplectic,
    mean_to_amplitudes,
    omega_matrix,
    realify,
    transform_gaussian,
    unitary_to_symplectic,
)
from phasemask.waveform import ModeAmplitudes, ModeGrid, PpmConfig, build_ppm_signal


def small_omegas(M):
    return 1.0 + 0.37 * np.arange(M)


# -- Omega and the coherent covariance -----------------------------------------

def test_omega_single_mode():
    assert np.array_equal(omega_matrix([2.0]), np.diag([1.0, 2.0]))


def test_omega_positive_diagonal():
    grid = ModeGrid.main_lobe(1e-7, 20_000_000, 7)
    om = omega_matrix(grid)
    assert np.count_nonzero(om - np.diag(np.diag(om))) == 0
    assert np.all(np.diag(om) > 0)


def test_coherent_blocks_have_unit_determinant():
    w = small_omegas(5)
    A = coherent_covariance(w)
    for m in range(5):
        blk = 2 * A[2 * m:2 * m + 2, 2 * m:2 * m + 2]
        assert np.linalg.det(blk) == pytest.approx(1.0, abs=1e-14)


def test_omega_rejects_nonpositive_frequency():
    with pytest.raises(ValueError):
        omega_matrix([1.0, 0.0])


# -- is_symplectic -------------------------------------------------------------

def test_is_symplectic_examples():
    assert is_symplectic(np.eye(4), 1e-12)
    assert is_symplectic(np.diag([2.0, 0.5]), 1e-12)
    assert not is_symplectic(np.diag([2.0, 2.0]), 1e-12)


def test_is_symplectic_shape_errors():
    with pytest.raises(ValueError):
        is_symplectic(np.eye(3))
    with pytest.raises(ValueError):
        is_symplectic(np.ones((2, 4)))


def test_form_matrix_is_antisymmetric_and_squares_to_minus_one():
    J = form_matrix(3)
    assert np.array_equal(J, -J.T)
    assert np.array_equal(J @ J, -np.eye(6))


# -- the unitary to symplectic map ---------------------------------------------

def test_identity_maps_to_identity():
    L = unitary_to_symplectic(ComplexUnitary(np.eye(4)), small_omegas(4)).entries
    assert np.array_equal(L, np.eye(8))


def test_quarter_turn_block():
    w = 3.0
    L = unitary_to_symplectic(ComplexUnitary.phase_mask([math.pi / 2]), [w]).entries
    om = omega_matrix([w])
    O = np.linalg.inv(om) @ L @ om
    # alpha -> i alpha sends (x, y) to (-y, x)
    assert np.allclose(O, [[0.0, -1.0], [1.0, 0.0]], rtol=0, atol=1e-15)
    assert is_symplectic(L, 1e-12)
    A = coherent_covariance([w])
    assert np.allclose(L @ A @ L.T, A, rtol=0, atol=1e-12)


def test_realify_of_polar_entry():
    r, t = 0.6, 1.1
    blk = realify([[r * np.exp(1j * t)]])
    assert np.allclose(blk, r * np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]), atol=1e-16)


@pytest.mark.parametrize("seed", range(100))
def test_random_unitaries_give_covariance_preserving_symplectic_maps(seed):
    M = 1 + seed % 9
    w = small_omegas(M)
    U = haar_unitary(M, seed)
    L = unitary_to_symplectic(U, w).entries
    A = coherent_covariance(w)
    om = omega_matrix(w)
    O = np.linalg.inv(om) @ L @ om
    assert is_symplectic(L, 1e-10)
    assert np.max(np.abs(L @ A @ L.T - A)) <= 1e-10
    assert np.max(np.abs(O @ O.T - np.eye(2 * M))) <= 1e-10
    assert is_symplectic(O, 1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_homomorphism(seed):
    M = 6
    w = small_omegas(M)
    U1, U2 = haar_unitary(M, seed), haar_unitary(M, 1000 + seed)
    L12 = unitary_to_symplectic(U1 @ U2, w).entries
    L1L2 = unitary_to_symplectic(U1, w).entries @ unitary_to_symplectic(U2, w).entries
    assert np.max(np.abs(L12 - L1L2)) <= 1e-10


def test_non_unitary_rejected():
    with pytest.raises(ValueError, match="not unitary"):
        ComplexUnitary(np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        ComplexUnitary(np.ones((2, 3)))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        unitary_to_symplectic(ComplexUnitary(np.eye(3)), small_omegas(4))


def test_real_symplectic_rejects_non_symplectic():
    with pytest.raises(ValueError):
        RealSymplectic(np.diag([2.0, 2.0]))


def test_physical_frequencies_are_handled():
    grid = ModeGrid.from_bandwidth(200e12, 10e6, 1e9)
    U = haar_unitary(grid.M, 5)
    L = unitary_to_symplectic(U, grid).entries
    A = coherent_covariance(grid)
    scale = np.max(np.abs(A))
    assert np.max(np.abs(L @ A @ L.T - A)) <= 1e-10 * scale


def test_largest_table_dimension_is_fast():
    grid = ModeGrid.main_lobe(1e-7, 97 * 1000, 97)
    assert grid.M == 193
    U = haar_unitary(grid.M, 11)
    t0 = time.perf_counter()
    L = unitary_to_symplectic(U, grid)
    elapsed = time.perf_counter() - t0
    assert is_symplectic(L.entries, 1e-10 * np.max(np.abs(L.entries)) ** 2)
    assert elapsed < 2.0


# -- encryption ----------------------------------------------------------------

def _signal(N=4, ell=2, S=3.0):
    grid = ModeGrid.main_lobe(2 * math.pi, 8 * N, N)
    return build_ppm_signal(PpmConfig(N, S, ell), grid)


def test_identity_encryption():
    a = _signal()
    b = apply_encryption(ComplexUnitary(np.eye(a.grid.M)), a)
    assert np.array_equal(a.amps, b.amps)
    assert b.grid.same_as(a.grid)


def test_phase_mask_multiplies_elementwise():
    a = _signal()
    theta = np.linspace(0.1, 5.0, a.grid.M)
    b = apply_encryption(ComplexUnitary.phase_mask(theta), a)
    assert np.allclose(b.amps, np.exp(1j * theta) * a.amps, rtol=0, atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_round_trip(seed):
    a = _signal()
    U = haar_unitary(a.grid.M, seed)
    back = apply_encryption(U.dagger(), apply_encryption(U, a))
    assert np.max(np.abs(back.amps - a.amps)) <= 1e-12


def test_encryption_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_encryption(ComplexUnitary(np.eye(2)), _signal())


def test_amplitude_coordinate_round_trip():
    a = _signal()
    v = amplitudes_to_mean(a.amps, a.grid)
    assert np.allclose(mean_to_amplitudes(v, a.grid), a.amps, rtol=0, atol=1e-15)


# -- Gaussian transforms -------------------------------------------------------

def test_identity_transform_leaves_state_unchanged():
    g = GaussianParams.coherent(_signal())
    h = transform_gaussian(np.eye(g.mean.size), g)
    assert np.array_equal(h.mean, g.mean)
    assert np.array_equal(h.cov, g.cov)


@pytest.mark.parametrize("seed", range(5))
def test_encryption_preserves_coherent_covariance_and_rotates_mean(seed):
    a = _signal()
    g = GaussianParams.coherent(a)
    U = haar_unitary(a.grid.M, seed)
    h = transform_gaussian(unitary_to_symplectic(U, a.grid), g)
    assert np.max(np.abs(h.cov - g.cov)) <= 1e-10
    # the Omega-weighted norm of the mean is the conserved quantity
    om_inv = np.diag(1 / np.diag(omega_matrix(a.grid)))
    assert np.linalg.norm(om_inv @ h.mean) == pytest.approx(np.linalg.norm(om_inv @ g.mean), rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_commuting_square(seed):
    a = _signal(N=3, ell=1 + seed % 3)
    U = haar_unitary(a.grid.M, seed)
    via_amplitudes = amplitudes_to_mean(apply_encryption(U, a).amps, a.grid)
    via_phase_space = transform_gaussian(unitary_to_symplectic(U, a.grid), GaussianParams.coherent(a)).mean
    assert np.max(np.abs(via_amplitudes - via_phase_space)) <= 1e-10


def test_transform_dimension_mismatch():
    g = GaussianParams.coherent(_signal())
    with pytest.raises(ValueError):
        transform_gaussian(np.eye(4), g)


def test_gaussian_params_validation():
    with pytest.raises(ValueError):
        GaussianParams(np.zeros(3), np.eye(3))
    with pytest.raises(ValueError):
        GaussianParams(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))


# -- serialization -------------------------------------------------------------

def test_unitary_json_round_trip():
    U = haar_unitary(4, 2)
    obj = U.to_json()
    assert obj["M"] == 4 and len(obj["re"]) == 4
    V = ComplexUnitary.from_json(obj)
    assert np.array_equal(U.entries, V.entries)


def test_unitary_json_shape_mismatch():
    obj = ComplexUnitary(np.eye(2)).to_json()
    obj["M"] = 3
    with pytest.raises(ValueError):
        ComplexUnitary.from_json(obj)


def test_symplectic_json():
    L = unitary_to_symplectic(haar_unitary(2, 0), [1.0, 2.0])
    obj = L.to_json()
    assert obj["M"] == 2
    assert np.array_equal(np.array(obj["entries"]), L.entries)

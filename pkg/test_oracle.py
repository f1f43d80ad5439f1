import math
import numpy as np
import pytest
from exceptions import DimensionError
from operator_algebra import OperatorSum
from model import LatticeSpec, HubbardParams, build_hubbard, build_tc_hubbard
from statevector import basis_state, apply_sum
import oracle

# 1×2, t=1, U=4: синглет N=2 равен (U - √(U² + 16t²))/2, глобальный минимум -t при N=1
DIMER_PAIR_GROUND = 2 - math.sqrt(8)
DIMER_GROUND = -1.0


def test_dense_matrix_basics(kron_operator):
    np.testing.assert_allclose(oracle.dense_matrix(OperatorSum(1, {"Z": 1.0})), np.diag([1.0, -1.0]))
    op = OperatorSum(3, {"XYZ": 0.5 + 0.25j, "ZIX": -1.0, "YYI": 2j})
    np.testing.assert_allclose(oracle.dense_matrix(op), kron_operator(op), atol=1e-14)
    np.testing.assert_allclose(oracle.dense_matrix(op.adjoint()), oracle.dense_matrix(op).conj().T, atol=1e-14)


def test_dense_matrix_matches_apply_sum(random_state):
    op = build_tc_hubbard(LatticeSpec(2, 2), HubbardParams(j=-0.5))
    state = random_state(8)
    np.testing.assert_allclose(
        oracle.dense_matrix(op) @ state.amplitudes, apply_sum(op, state).amplitudes, atol=1e-10
    )


def test_dense_matrix_cap():
    with pytest.raises(DimensionError):
        oracle.dense_matrix(OperatorSum(3, {"ZZZ": 1.0}), qubit_cap=2)


def test_dimer_global_ground_is_degenerate_single_particle_level():
    result = oracle.ground_pair(build_hubbard(LatticeSpec(1, 2), HubbardParams(t=1.0, u=4.0)))
    assert result.eigenvalue == pytest.approx(DIMER_GROUND, abs=1e-9)
    assert result.degeneracy == 2
    assert result.right_basis.shape == (2, 16)


def test_dimer_pair_ground_energy_closed_form():
    h = build_hubbard(LatticeSpec(1, 2), HubbardParams(t=1.0, u=4.0))
    result = oracle.ground_pair(h, particles=2)
    assert result.eigenvalue == pytest.approx(DIMER_PAIR_GROUND, abs=1e-9)
    support = np.flatnonzero(np.abs(result.right_vector.amplitudes) > 1e-12)
    assert set(support) <= set(oracle.sector_indices(4, 2))
    assert result.right_residual < oracle.RESIDUAL_BOUND
    assert result.left_residual < oracle.RESIDUAL_BOUND
    assert result.degeneracy == 1
    # эрмитов оператор: левый и правый векторы совпадают с точностью до фазы
    assert abs(np.vdot(result.left_vector.amplitudes, result.right_vector.amplitudes)) > 1 - 1e-10


def test_ground_particle_number_of_dimer():
    particles, energy = oracle.ground_particle_number(build_hubbard(LatticeSpec(1, 2), HubbardParams()))
    assert particles == 1
    assert energy == pytest.approx(DIMER_GROUND, abs=1e-10)


@pytest.mark.parametrize("j", [-0.6, -0.5, 0.4])
def test_tc_ground_pair_is_isospectral(j):
    lat = LatticeSpec(2, 2)
    p = HubbardParams(t=1.0, u=4.0, j=j)
    regular = oracle.ground_pair(build_hubbard(lat, p), particles=2)
    tc = oracle.ground_pair(build_tc_hubbard(lat, p), particles=2)
    assert tc.eigenvalue == pytest.approx(regular.eigenvalue, abs=1e-8)
    assert tc.right_residual < oracle.RESIDUAL_BOUND
    assert tc.left_residual < oracle.RESIDUAL_BOUND
    # правый и левый векторы неэрмитова H' различны
    assert abs(np.vdot(tc.left_vector.amplitudes, tc.right_vector.amplitudes)) < 1 - 1e-6


def test_tc_right_vector_is_gutzwiller_image_of_regular_ground():
    from model import gutzwiller_diagonal
    lat = LatticeSpec(1, 2)
    p = HubbardParams(j=-0.5)
    regular = oracle.ground_pair(build_hubbard(lat, p), particles=2)
    tc = oracle.ground_pair(build_tc_hubbard(lat, p), particles=2)
    # H' = D⁻¹HD: правый вектор ∝ D⁻¹v, левый ∝ D v
    d = gutzwiller_diagonal(lat, p.j)
    right = regular.right_vector.amplitudes / d
    left = regular.right_vector.amplitudes * d
    assert oracle.fidelity(right, tc.right_vector) == pytest.approx(1.0, abs=1e-10)
    assert oracle.fidelity(left, tc.left_vector) == pytest.approx(1.0, abs=1e-10)


def test_spectrum_is_real_and_isospectral():
    lat = LatticeSpec(2, 2)
    p = HubbardParams(j=-0.5)
    regular = oracle.spectrum(build_hubbard(lat, p))
    tc = oracle.spectrum(build_tc_hubbard(lat, p))
    assert regular.shape == tc.shape == (256,)
    assert np.max(np.abs(tc.imag)) < 1e-8
    np.testing.assert_allclose(tc.real, regular.real, atol=1e-8)


def test_sectors():
    assert len(oracle.sector_indices(4, 2)) == 6
    block = oracle.sector_matrix(build_hubbard(LatticeSpec(1, 2), HubbardParams()), 2)
    assert block.shape == (6, 6)
    assert np.linalg.eigvalsh(block)[0] == pytest.approx(DIMER_PAIR_GROUND)


def test_fidelity():
    state = basis_state(2, 1)
    assert oracle.fidelity(state, state) == pytest.approx(1.0)
    assert oracle.fidelity(state, basis_state(2, 2)) == 0.0
    basis = np.array([basis_state(2, 1).amplitudes, basis_state(2, 2).amplitudes])
    plus = np.array([0, 1, 1, 1]) / math.sqrt(3)
    assert oracle.subspace_fidelity(basis, plus) == pytest.approx(2 / 3)


def test_fix_phase_makes_first_amplitude_real_positive():
    fixed = oracle.fix_phase(np.array([0.0, -1j, 1.0]) / math.sqrt(2))
    assert fixed[1].imag == pytest.approx(0.0)
    assert fixed[1].real > 0


def test_exact_imaginary_time_zero_and_eigenvector():
    lat = LatticeSpec(1, 2)
    h = build_hubbard(lat, HubbardParams())
    start = basis_state(4, 0b0011)
    assert oracle.exact_imaginary_time(h, start, 0.0) is start
    ground = oracle.ground_pair(h).right_vector
    moved = oracle.exact_imaginary_time(h, ground, 3.0)
    assert oracle.fidelity(moved, ground) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("rows, cols", [(1, 2), (2, 2)])
def test_exact_imaginary_time_reaches_tc_ground(rows, cols, random_state):
    lat = LatticeSpec(rows, cols)
    h = build_tc_hubbard(lat, HubbardParams(j=-0.5))
    result = oracle.ground_pair(h)
    evolved = oracle.exact_imaginary_time(h, random_state(lat.qubit_count), 50.0)
    assert oracle.subspace_fidelity(result.right_basis, evolved) > 1 - 1e-6
    further = oracle.exact_imaginary_time(h, evolved, 1.0)
    assert abs(oracle.subspace_fidelity(result.right_basis, further)
               - oracle.subspace_fidelity(result.right_basis, evolved)) < 1e-6


def test_ground_pair_argument_validation():
    op = build_hubbard(LatticeSpec(1, 2), HubbardParams())
    with pytest.raises(ValueError):
        oracle.ground_pair(op, particles=5)
    with pytest.raises(ValueError):
        oracle.ground_pair(op, max_iterations=0)
    with pytest.raises(ValueError):
        oracle.ground_pair(op, block_size=0)


SMALL_LATTICES = [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (1, 4), (4, 1), (2, 2)]


@pytest.mark.parametrize("rows, cols", SMALL_LATTICES)
def test_isospectral_for_random_j_on_small_lattices(rows, cols, rng):
    lat = LatticeSpec(rows, cols)
    for j in rng.uniform(-1.0, 1.0, size=3):
        p = HubbardParams(t=1.0, u=4.0, j=float(j))
        regular = oracle.spectrum(build_hubbard(lat, p))
        tc = oracle.spectrum(build_tc_hubbard(lat, p))
        assert np.max(np.abs(tc.imag)) < 1e-8
        np.testing.assert_allclose(tc.real, regular.real, atol=1e-8)


@pytest.mark.parametrize("j", [-0.6, -0.5, 0.0, 0.3])
def test_ladder_spectrum_is_isospectral(j):
    lat = LatticeSpec(3, 2)
    p = HubbardParams(t=1.0, u=4.0, j=j)
    regular = oracle.spectrum(build_hubbard(lat, p))
    tc = oracle.spectrum(build_tc_hubbard(lat, p))
    assert regular.shape == tc.shape == (4096,)
    assert np.max(np.abs(tc.imag)) < 1e-8
    np.testing.assert_allclose(tc.real, regular.real, atol=1e-8)


@pytest.mark.parametrize("j", [0.0, -0.5, -0.6])
def test_square_ground_pair_residuals(j):
    lat = LatticeSpec(2, 2)
    p = HubbardParams(t=1.0, u=4.0, j=j)
    particles, energy = oracle.ground_particle_number(build_hubbard(lat, p))
    result = oracle.ground_pair(build_tc_hubbard(lat, p), particles=particles)
    assert result.eigenvalue == pytest.approx(energy, abs=1e-8)
    assert result.right_residual < 1e-8
    assert result.left_residual < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("j", [0.0, -0.5, -0.6])
def test_ladder_ground_pair_residuals(j):
    lat = LatticeSpec(3, 2)
    p = HubbardParams(t=1.0, u=4.0, j=j)
    particles, energy = oracle.ground_particle_number(build_hubbard(lat, p))
    result = oracle.ground_pair(build_tc_hubbard(lat, p), particles=particles)
    assert result.eigenvalue == pytest.approx(energy, abs=1e-8)
    assert result.right_residual < 1e-8
    assert result.left_residual < 1e-8

import numpy as np
import pytest
from exceptions import ConfigError, DimensionError, NumericalFailure
from operator_algebra import OperatorSum
from model import LatticeSpec, HubbardParams, build_hubbard, build_tc_hubbard
from ansatz import AnsatzProgram, build_hva, evaluate, evaluate_array, perturb_parameters
from evolution import (
    EvolutionConfig,
    McLachlanSystem,
    References,
    Target,
    TangentMode,
    assemble,
    solve_update,
    euler_step,
    evolve,
    gradient_descent,
    target_hamiltonian,
    energy_residuals,
)
import oracle

ALL_TWO_QUBIT = [a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II"]


@pytest.fixture
def dimer():
    return LatticeSpec(1, 2), HubbardParams(t=1.0, u=4.0, j=-0.5)


@pytest.fixture
def dimer_program(dimer):
    lat, p = dimer
    return build_hva(lat, p, layers=1, particles=2)


def test_config_validation():
    with pytest.raises(ConfigError):
        EvolutionConfig(dtau=-1.0)
    with pytest.raises(ConfigError):
        EvolutionConfig(record_interval=0)
    with pytest.raises(ConfigError):
        EvolutionConfig(svd_cutoff=0.0)
    assert EvolutionConfig(tangent_mode="finite_difference").tangent_mode is TangentMode.FINITE_DIFFERENCE


def test_solve_update_identity_and_cutoff(rng):
    c = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(solve_update(McLachlanSystem(np.eye(3), c, 0j)), -c)
    system = McLachlanSystem(np.diag([1.0, 1e-9]), np.array([1.0, 1.0]), 0j)
    np.testing.assert_allclose(solve_update(system, 1e-6), [-1.0, 0.0])
    m = rng.normal(size=(6, 6))
    a = m @ m.T + 0.5 * np.eye(6)
    c = rng.normal(size=6)
    theta_dot = solve_update(McLachlanSystem(a, c, 0j), 1e-6)
    assert np.linalg.norm(a @ theta_dot + c) <= 1e-8 * np.linalg.norm(c)


def test_euler_step():
    np.testing.assert_allclose(euler_step([0.0], [-2.0], 0.01), [-0.02])
    np.testing.assert_array_equal(euler_step([1.0, 2.0], [0.0, 0.0], 0.5), [1.0, 2.0])
    np.testing.assert_array_equal(euler_step([1.0, 2.0], [3.0, 4.0], 0.0), [1.0, 2.0])
    with pytest.raises(DimensionError):
        euler_step([1.0], [1.0, 2.0], 0.1)


def test_assembled_system_properties(dimer, dimer_program):
    lat, p = dimer
    theta = perturb_parameters(dimer_program.zero_parameters(), 0.3, seed=5)
    system = assemble(dimer_program, theta, build_tc_hubbard(lat, p))
    assert system.a[0, 0] == pytest.approx(1.0)
    np.testing.assert_allclose(system.a, system.a.T, atol=1e-10)
    assert np.linalg.eigvalsh(system.a).min() >= -1e-8
    # глобальная фаза: C₀ = Re⟨iφ|H|φ⟩ = Im E
    assert system.c[0] == pytest.approx(system.energy.imag, abs=1e-12)


def test_assemble_dimension_mismatch(dimer_program):
    with pytest.raises(DimensionError):
        assemble(dimer_program, dimer_program.zero_parameters(), OperatorSum(2, {"ZZ": 1.0}))


def test_gradient_is_half_energy_derivative_for_hermitian(dimer, dimer_program):
    lat, p = dimer
    h = build_hubbard(lat, p)
    theta = perturb_parameters(dimer_program.zero_parameters(), 0.4, seed=9)
    system = assemble(dimer_program, theta, h)
    step = 1e-5
    for i in range(dimer_program.parameter_count):
        shift = np.zeros_like(theta)
        shift[i] = step
        plus = evaluate_array(dimer_program, theta + shift)
        minus = evaluate_array(dimer_program, theta - shift)
        dense = oracle.dense_matrix(h)
        derivative = (np.vdot(plus, dense @ plus).real - np.vdot(minus, dense @ minus).real) / (2 * step)
        assert system.c[i] == pytest.approx(derivative / 2, abs=1e-6)


def test_update_descends_energy_to_first_order(dimer, dimer_program):
    # dE/dτ = 2·C·θ̇ = -2·Cᵀ A⁺ C ≤ 0; знак C закреплён проверкой C = ½ dE/dθ выше
    lat, p = dimer
    h = build_hubbard(lat, p)
    for seed in range(5):
        theta = perturb_parameters(dimer_program.zero_parameters(), 0.4, seed=seed)
        system = assemble(dimer_program, theta, h)
        rate = 2 * float(system.c @ solve_update(system))
        assert rate < 0
        assert rate <= -1e-3 * float(system.c @ system.c)


def test_analytic_and_finite_difference_systems_agree(dimer, dimer_program):
    lat, p = dimer
    h = build_tc_hubbard(lat, p)
    theta = perturb_parameters(dimer_program.zero_parameters(), 0.2, seed=2)
    analytic = assemble(dimer_program, theta, h, TangentMode.ANALYTIC)
    numeric = assemble(dimer_program, theta, h, TangentMode.FINITE_DIFFERENCE, fd_step=1e-10)
    np.testing.assert_allclose(numeric.a, analytic.a, atol=1e-4)
    np.testing.assert_allclose(numeric.c, analytic.c, atol=1e-4)


def _toy_step_error(dtau, reference, operator):
    program = AnsatzProgram.from_generators(reference, ALL_TWO_QUBIT, 1)
    cfg = EvolutionConfig(dtau=dtau, steps=1, record_interval=1)
    trace = evolve(program, program.zero_parameters(), operator, cfg)
    variational = evaluate(program, trace.final_theta).amplitudes
    exact = oracle.exact_imaginary_time(operator, reference, dtau).amplitudes
    return np.linalg.norm(variational - exact)


def test_full_tangent_space_matches_exact_step_to_second_order(random_state):
    operator = OperatorSum(2, {"ZI": 0.7, "XX": 0.4, "IY": -0.3, "ZZ": 0.2, "YX": 0.5})
    reference = random_state(2)
    coarse = _toy_step_error(1e-3, reference, operator)
    fine = _toy_step_error(5e-4, reference, operator)
    assert coarse < 1e-4
    assert 4 * 0.7 < coarse / fine < 4 * 1.3


def test_zero_steps_gives_single_record(dimer, dimer_program):
    lat, p = dimer
    trace = evolve(dimer_program, dimer_program.zero_parameters(), build_tc_hubbard(lat, p),
                   EvolutionConfig(steps=0))
    assert len(trace) == 1
    assert trace.final.tau == 0.0
    assert trace.final.fidelity_right is None


def test_record_schedule(dimer, dimer_program):
    lat, p = dimer
    trace = evolve(dimer_program, dimer_program.zero_parameters(), build_tc_hubbard(lat, p),
                   EvolutionConfig(steps=25, record_interval=10, snapshot_interval=2))
    assert [r.tau for r in trace.records] == pytest.approx([0.0, 0.1, 0.2, 0.25])
    assert trace.records[0].theta is not None
    assert trace.records[1].theta is None
    assert trace.records[2].theta is not None


def test_hermitian_energy_is_monotone_and_converges():
    lat, p = LatticeSpec(1, 2), HubbardParams(t=1.0, u=4.0)
    h = build_hubbard(lat, p)
    program = build_hva(lat, p, layers=2, particles=2)
    exact = oracle.ground_pair(h, particles=2)
    theta0 = perturb_parameters(program.zero_parameters(), 0.02 * np.pi, seed=1)
    cfg = EvolutionConfig(dtau=0.01, steps=1000, target=Target.REGULAR)
    trace = evolve(program, theta0, h, cfg, References.from_spectral(exact))
    energies = [r.e_real for r in trace.records]
    # 1e-6 на шаг Эйлера, записи идут через record_interval шагов
    slack = 1e-6 * cfg.record_interval
    assert all(b <= a + slack for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0] - 0.1
    assert max(abs(r.e_imag) for r in trace.records) < 1e-10
    re_residual, im_residual = energy_residuals(trace, exact.eigenvalue)
    assert exact.eigenvalue == pytest.approx(2 - np.sqrt(8), abs=1e-9)
    assert re_residual < 1e-3
    assert im_residual < 1e-10
    assert trace.final.fidelity_right > trace.records[0].fidelity_right


def test_gradient_descent_descends_for_hermitian(dimer_program):
    lat, p = LatticeSpec(1, 2), HubbardParams(t=1.0, u=4.0)
    h = build_hubbard(lat, p)
    theta0 = perturb_parameters(dimer_program.zero_parameters(), 0.3, seed=4)
    cfg = EvolutionConfig(steps=200)
    trace = gradient_descent(dimer_program, theta0, h, cfg)
    energies = [r.e_real for r in trace.records]
    assert all(b <= a + 1e-6 * cfg.record_interval for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]


def test_exact_eigenstate_is_a_fixed_point(dimer):
    lat, p = dimer
    h = build_tc_hubbard(lat, p)
    ground = oracle.ground_pair(h, particles=2)
    program = build_hva(lat, p, layers=1, reference_state=ground.right_vector)
    system = assemble(program, program.zero_parameters(), h)
    np.testing.assert_allclose(system.c, 0.0, atol=1e-8)
    trace = gradient_descent(program, program.zero_parameters(), h, EvolutionConfig(steps=5, record_interval=1))
    np.testing.assert_allclose(trace.final_theta, 0.0, atol=1e-9)


def test_left_target_is_adjoint_of_right(dimer):
    lat, p = dimer
    right = target_hamiltonian(lat, p, Target.RIGHT)
    left = target_hamiltonian(lat, p, "left_tc")
    assert left.terms == right.adjoint().terms
    assert target_hamiltonian(lat, p, Target.REGULAR).terms == build_hubbard(lat, p).terms


def test_divergence_aborts_with_partial_trace(dimer, dimer_program):
    lat, p = dimer
    theta0 = perturb_parameters(dimer_program.zero_parameters(), 0.3, seed=7)
    with pytest.raises(NumericalFailure) as info:
        evolve(dimer_program, theta0, build_tc_hubbard(lat, p), EvolutionConfig(dtau=1e6, steps=3))
    partial = info.value.trace
    assert partial is not None
    assert len(partial.records) == 1
    assert partial.records[0].tau == 0.0


@pytest.mark.slow
def test_tc_square_imaginary_part_decays():
    lat, p = LatticeSpec(2, 2), HubbardParams(t=1.0, u=4.0, j=-0.5)
    h = build_tc_hubbard(lat, p)
    particles, _ = oracle.ground_particle_number(build_hubbard(lat, p))
    exact = oracle.ground_pair(h, particles=particles)
    program = build_hva(lat, p, layers=3, particles=particles)
    theta0 = perturb_parameters(program.zero_parameters(), 0.02 * np.pi, seed=0)
    trace = evolve(program, theta0, h, EvolutionConfig(steps=500), References.from_spectral(exact))
    at_half = next(r for r in trace.records if r.tau == pytest.approx(0.5))
    assert abs(trace.final.e_imag) < 1e-3
    assert abs(trace.final.e_imag) < abs(at_half.e_imag)
    assert abs(trace.final.e_real - exact.eigenvalue) < 1e-2
    assert trace.final.fidelity_right > trace.records[0].fidelity_right

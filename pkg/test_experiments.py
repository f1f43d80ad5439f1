import math
import numpy as np
import pytest
from exceptions import NumericalFailure
from model import LatticeSpec, HubbardParams
from evolution import EvolutionConfig, Target
from experiments import (
    ExperimentSpec,
    JScanRow,
    Method,
    best_j,
    initial_fidelity,
    optimize_j,
    resolve_particles,
    run_depth_sweep,
    run_single,
    run_target_comparison,
    scan_j,
)

SHORT = EvolutionConfig(dtau=0.01, steps=20, record_interval=5)


def _spec(**overrides):
    values = dict(
        lattice=LatticeSpec(1, 2),
        params=HubbardParams(t=1.0, u=4.0, j=-0.5),
        layers_list=(1,),
        repetitions=3,
        methods=(Method.IMAGINARY_TIME,),
        targets=(Target.RIGHT,),
        evolution=SHORT,
        particles=2,
    )
    values.update(overrides)
    return ExperimentSpec(**values)


def test_spec_validation_and_seeds():
    spec = _spec(seed_base=7, methods=("gradient_descent",), targets=("left_tc",))
    assert spec.seeds() == [7, 8, 9]
    assert spec.methods == (Method.GRADIENT_DESCENT,)
    assert spec.targets == (Target.LEFT,)
    with pytest.raises(ValueError):
        _spec(repetitions=0)
    with pytest.raises(ValueError):
        _spec(layers_list=(-1,))
    with pytest.raises(ValueError):
        _spec(methods=())
    with pytest.raises(ValueError):
        _spec(workers=0)


def test_resolve_particles():
    lat, p = LatticeSpec(1, 2), HubbardParams()
    assert resolve_particles(lat, p, 2) == 2
    assert resolve_particles(lat, p) == 1


def test_run_single_records_and_determinism():
    calls = []
    first = run_single(_spec(), on_trace=calls.append)
    second = run_single(_spec())
    assert len(first) == 5
    assert [r.tau for r in first.records] == pytest.approx([0.0, 0.05, 0.1, 0.15, 0.2])
    assert [r.e_real for r in first.records] == [r.e_real for r in second.records]
    np.testing.assert_array_equal(first.final_theta, second.final_theta)
    assert 0.0 <= first.final.fidelity_right <= 1.0
    assert 0.0 <= first.final.fidelity_left <= 1.0
    assert len(calls) == 1 and calls[0].ok


def test_run_single_rejects_initial_state_method():
    with pytest.raises(ValueError):
        run_single(_spec(methods=(Method.INITIAL_STATE,)))


def test_run_single_seed_changes_start():
    a = run_single(_spec(seed_base=0))
    b = run_single(_spec(seed_base=1))
    assert a.records[0].e_real != b.records[0].e_real


def test_depth_sweep_rows_and_statistics():
    spec = _spec(layers_list=(0, 1, 2), methods=(Method.IMAGINARY_TIME, Method.GRADIENT_DESCENT))
    seen = []
    result = run_depth_sweep(spec, on_trace=seen.append)
    assert len(seen) == 2 * 2 * 3
    assert [(r.layers, r.method) for r in result.rows] == [
        (0, Method.INITIAL_STATE),
        (1, Method.IMAGINARY_TIME),
        (1, Method.GRADIENT_DESCENT),
        (2, Method.IMAGINARY_TIME),
        (2, Method.GRADIENT_DESCENT),
    ]

    initial = result.row(0, "initial_state", "right_tc")
    assert initial.mean_abs_im_residual is None
    assert initial.stderr_fidelity == 0.0

    row = result.row(2, Method.IMAGINARY_TIME, Target.RIGHT)
    assert row.seeds == (0, 1, 2)
    assert row.failures == ()
    fidelities = np.array(row.fidelities)
    assert row.mean_fidelity == pytest.approx(fidelities.mean(), abs=1e-12)
    assert row.stderr_fidelity == pytest.approx(fidelities.std(ddof=1) / math.sqrt(3), abs=1e-12)
    assert row.mean_abs_im_residual >= 0.0
    assert all(0.0 <= f <= 1.0 for f in fidelities)
    with pytest.raises(KeyError):
        result.row(3, Method.IMAGINARY_TIME, Target.RIGHT)


def test_single_repetition_has_zero_stderr():
    result = run_depth_sweep(_spec(repetitions=1))
    assert result.row(1, Method.IMAGINARY_TIME, Target.RIGHT).stderr_fidelity == 0.0


def test_sweep_is_deterministic():
    a = run_depth_sweep(_spec(layers_list=(0, 1)))
    b = run_depth_sweep(_spec(layers_list=(0, 1)))
    assert a.rows == b.rows


def test_target_comparison_uses_each_targets_own_ground():
    spec = _spec(targets=(Target.RIGHT, Target.LEFT, Target.REGULAR), methods=(Method.GRADIENT_DESCENT,))
    result = run_target_comparison(spec)
    assert {(r.method, r.target) for r in result.rows} == {
        (Method.IMAGINARY_TIME, Target.RIGHT),
        (Method.IMAGINARY_TIME, Target.LEFT),
        (Method.IMAGINARY_TIME, Target.REGULAR),
    }
    # H' изоспектрален H: энергия основного состояния одна и та же
    assert result.ground_energy == pytest.approx(2 - math.sqrt(8), abs=1e-8)


def test_target_comparison_single_target_matches_run_single():
    spec = _spec(repetitions=1)
    row = run_target_comparison(spec).row(1, Method.IMAGINARY_TIME, Target.RIGHT)
    assert row.mean_fidelity == run_single(spec).final.fidelity_right


def test_failed_repetitions_are_excluded_and_reported():
    spec = _spec(evolution=EvolutionConfig(dtau=1e6, steps=2))
    result = run_depth_sweep(spec)
    row = result.row(1, Method.IMAGINARY_TIME, Target.RIGHT)
    assert row.mean_fidelity is None
    assert row.seeds == ()
    assert [seed for seed, _ in row.failures] == [0, 1, 2]
    assert len(result.failures()) == 3
    assert result.failures()[0][:4] == (1, "imaginary_time", "right_tc", 0)


def test_worker_pool_matches_inline_run():
    inline = run_depth_sweep(_spec(layers_list=(1, 2)))
    seen = []
    pooled = run_depth_sweep(_spec(layers_list=(1, 2), workers=2), on_trace=seen.append)
    assert len(seen) == 2 * 3
    for a, b in zip(inline.rows, pooled.rows):
        assert a.seeds == b.seeds
        assert b.fidelities == pytest.approx(a.fidelities, rel=1e-12)


def test_best_j_tie_break_and_failure():
    rows = [
        JScanRow(j=-0.6, mean_fidelity=0.9, stderr_fidelity=0.0),
        JScanRow(j=-0.4, mean_fidelity=0.9, stderr_fidelity=0.0),
        JScanRow(j=-0.5, mean_fidelity=0.8, stderr_fidelity=0.0),
        JScanRow(j=-0.3, mean_fidelity=None, stderr_fidelity=None),
    ]
    assert best_j(rows) == -0.4
    with pytest.raises(NumericalFailure):
        best_j([JScanRow(j=0.0, mean_fidelity=None, stderr_fidelity=None)])


def test_optimize_j_singleton_grid():
    lat, p = LatticeSpec(1, 2), HubbardParams()
    assert optimize_j(lat, p, 1, [-0.3], repetitions=1, evolution=SHORT, particles=2) == -0.3
    with pytest.raises(ValueError):
        scan_j(lat, p, 1, [])


def test_scan_j_at_zero_matches_regular_target():
    lat, p = LatticeSpec(1, 2), HubbardParams(j=0.0)
    rows = scan_j(lat, p, 1, [0.0], repetitions=2, evolution=SHORT, particles=2)
    regular = run_target_comparison(_spec(params=p, repetitions=2, targets=(Target.REGULAR,)))
    expected = regular.row(1, Method.IMAGINARY_TIME, Target.REGULAR)
    assert rows[0].seeds == expected.seeds
    assert rows[0].mean_fidelity == pytest.approx(expected.mean_fidelity, abs=1e-8)


def test_scan_j_depth_zero_is_initial_fidelity():
    lat, p = LatticeSpec(1, 2), HubbardParams()
    rows = scan_j(lat, p, 0, [0.0, -0.5], repetitions=1, particles=2)
    assert rows[0].mean_fidelity == pytest.approx(initial_fidelity(lat, p, particles=2), abs=1e-9)
    assert rows[1].mean_fidelity != pytest.approx(rows[0].mean_fidelity, abs=1e-6)


def test_initial_fidelity_of_dimer_pair_sector():
    # синглет: cos²(φ/2), tan φ = U/4t
    expected = (1 + 4 / math.sqrt(32)) / 2
    assert initial_fidelity(LatticeSpec(1, 2), HubbardParams(), particles=2) == pytest.approx(expected, abs=1e-9)


@pytest.mark.slow
def test_square_imaginary_time_beats_gradient_descent():
    spec = ExperimentSpec(
        lattice=LatticeSpec(2, 2),
        params=HubbardParams(t=1.0, u=4.0, j=-0.5),
        layers_list=(1, 2, 3),
        repetitions=10,
        methods=(Method.IMAGINARY_TIME, Method.GRADIENT_DESCENT),
        workers=4,
    )
    result = run_depth_sweep(spec)
    shallow = result.row(1, Method.IMAGINARY_TIME, Target.RIGHT)
    deep = result.row(3, Method.IMAGINARY_TIME, Target.RIGHT)
    assert deep.mean_fidelity - shallow.mean_fidelity > math.hypot(deep.stderr_fidelity, shallow.stderr_fidelity)
    for layers in (1, 2, 3):
        vite = result.row(layers, Method.IMAGINARY_TIME, Target.RIGHT)
        descent = result.row(layers, Method.GRADIENT_DESCENT, Target.RIGHT)
        pooled = math.hypot(vite.stderr_fidelity, descent.stderr_fidelity)
        assert vite.mean_fidelity - descent.mean_fidelity > pooled
        assert not vite.failures


@pytest.mark.slow
def test_ladder_right_tc_target_gives_highest_fidelity():
    spec = ExperimentSpec(
        lattice=LatticeSpec(3, 2),
        params=HubbardParams(t=1.0, u=4.0, j=-0.6),
        layers_list=(2,),
        repetitions=10,
        targets=(Target.RIGHT, Target.REGULAR, Target.LEFT),
        workers=4,
    )
    result = run_target_comparison(spec)
    right, regular, left = (result.row(2, Method.IMAGINARY_TIME, t) for t in (Target.RIGHT, Target.REGULAR, Target.LEFT))
    assert right.mean_fidelity - regular.mean_fidelity > math.hypot(right.stderr_fidelity, regular.stderr_fidelity)
    assert regular.mean_fidelity - left.mean_fidelity > math.hypot(regular.stderr_fidelity, left.stderr_fidelity)


@pytest.mark.slow
def test_ladder_optimal_j():
    grid = [-0.8, -0.7, -0.6, -0.5, -0.4]
    j = optimize_j(LatticeSpec(3, 2), HubbardParams(t=1.0, u=4.0), 2, grid, repetitions=10, workers=4)
    assert j == pytest.approx(-0.6)

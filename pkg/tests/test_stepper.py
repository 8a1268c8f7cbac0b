import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdlab.grid import DomainSpec, ScalarField
from rdlab.kinetics import ModelSpec, homogeneous_exact
from rdlab.stepper import (
    InitialCondition,
    RunSchedule,
    StepFailure,
    StepperConfig,
    TimeSeries,
    make_initial_condition,
    read_snapshot,
    run,
    step,
    write_snapshot,
)

D1 = DomainSpec(1, (50,), 0.5)


def test_pair_exact_reaction_map():
    f = ScalarField.constant(D1, 1.0)
    out = step(f, ModelSpec.pair(1.0), StepperConfig(dt=1.0), 1.0)
    np.testing.assert_allclose(out.values, 0.5, rtol=1e-15)


def test_triplet_exact_reaction_map():
    f = ScalarField.constant(D1, 1.0)
    out = step(f, ModelSpec.triplet(1.0), StepperConfig(dt=1.5), 1.5)
    np.testing.assert_allclose(out.values, 0.5, rtol=1e-15)


def test_constant_unchanged_by_diffusion():
    d = DomainSpec(2, (10, 12), 0.5)
    f = ScalarField.constant(d, 0.7)
    m = ModelSpec.pcpd(0.0, 1e-300)
    for scheme in ("strang", "rk4", "euler"):
        out = step(f, m, StepperConfig(scheme=scheme), 0.05)
        np.testing.assert_allclose(out.values, 0.7, rtol=1e-12)


def test_auto_dt_cfl():
    d = DomainSpec(2, (10, 10), 0.5)
    assert StepperConfig().resolve_dt(d, ModelSpec.pair(1.0)) == pytest.approx(0.8 * 0.25 / 4)


@pytest.mark.parametrize("model,T,expected", [
    (ModelSpec.pair(1.0), 10.0, 1 / 11),
    (ModelSpec.triplet(1.0), 4.0, 1 / 3),
])
def test_run_homogeneous_oracle(model, T, expected):
    ic = InitialCondition("constant", {"a0": 1.0})
    s, _ = run(D1, model, ic, StepperConfig(), RunSchedule.geometric(T))
    assert s.t[-1] == T
    assert s.mean[-1] == pytest.approx(expected, rel=1e-6)
    np.testing.assert_allclose(s.mean, [homogeneous_exact(model, 1.0, t) for t in s.t], rtol=1e-6)


def test_schedule_geometric():
    sched = RunSchedule.geometric(10.0, t0=0.1, growth=2.0, snapshot_times=(1.5,))
    assert sched.record_times == (0.0, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 10.0)
    assert sched.snapshot_times == (1.6,)
    with pytest.raises(ValueError):
        RunSchedule(1.0, (0.0, 0.5, 0.5))


@pytest.fixture(scope="module")
def rough_pair():
    d = DomainSpec(1, (200,), 0.5)
    ic = InitialCondition("uniform_noise", {"lo": 0.0, "hi": 2.0})
    return run(d, ModelSpec.pair(1.0), ic, StepperConfig(), RunSchedule.geometric(50.0), seed=3)[0]


def test_mean_non_increasing_and_positive(rough_pair):
    assert np.all(np.diff(rough_pair.mean) <= 0)
    assert np.all(rough_pair.mean > 0)
    assert np.all(rough_pair.mean**2 <= rough_pair.mean_sq * (1 + 1e-12))


def test_seed_determinism(rough_pair):
    d = DomainSpec(1, (200,), 0.5)
    ic = InitialCondition("uniform_noise", {"lo": 0.0, "hi": 2.0})
    again = run(d, ModelSpec.pair(1.0), ic, StepperConfig(), RunSchedule.geometric(50.0), seed=3)[0]
    assert np.array_equal(again.rows(), rough_pair.rows())
    other = run(d, ModelSpec.pair(1.0), ic, StepperConfig(), RunSchedule.geometric(50.0), seed=4)[0]
    assert not np.array_equal(other.rows(), rough_pair.rows())


def test_rk4_and_strang_agree_on_smooth_ic():
    d = DomainSpec(1, (100,), 0.5)
    f = ScalarField.from_function(d, lambda x: 1.0 + 0.5 * np.cos(np.pi * x / 50.0))
    sched = RunSchedule.geometric(20.0)
    m = ModelSpec.pair(1.0)
    a = run(d, m, f, StepperConfig(scheme="strang"), sched)[0].mean[-1]
    b = run(d, m, f, StepperConfig(scheme="rk4"), sched)[0].mean[-1]
    assert abs(a - b) / b <= 1e-4


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.5, 20.0), st.sampled_from(["pair", "triplet"]))
def test_strang_positivity(seed, hi, kind):
    m = ModelSpec.pair(1.0) if kind == "pair" else ModelSpec.triplet(1.0)
    d = DomainSpec(1, (40,), 0.5)
    f = make_initial_condition(d, InitialCondition("uniform_noise", {"lo": 0.0, "hi": hi}), seed)
    cfg = StepperConfig()
    dt = cfg.resolve_dt(d, m)
    for _ in range(20):
        f = step(f, m, cfg, dt)
        assert f.values.min() >= 0.0


def test_step_failure_below_dt_min():
    f = ScalarField.constant(D1, 1.0)
    cfg = StepperConfig(scheme="euler", dt=10.0, dt_min=1.0)
    with pytest.raises(StepFailure) as exc:
        run(D1, ModelSpec.pair(1.0), f, cfg, RunSchedule.geometric(30.0, t0=10.0))
    assert exc.value.last_time == 0.0
    assert np.array_equal(exc.value.last_field.values, f.values)


def test_halving_recovers_when_allowed():
    f = ScalarField.constant(D1, 1.0)
    out = step(f, ModelSpec.pair(1.0), StepperConfig(scheme="euler", dt=3.0), 3.0)
    assert out.values.min() >= 0


def test_initial_condition_examples():
    d = DomainSpec(1, (10000,), 0.1)
    np.testing.assert_array_equal(make_initial_condition(d, InitialCondition("constant", {"a0": 1.0})).values, 1.0)
    u = make_initial_condition(d, InitialCondition("uniform_noise", {"lo": 0.0, "hi": 2.0}), seed=7).values
    assert abs(u.mean() - 1.0) <= 3 * (2 / np.sqrt(12)) / np.sqrt(u.size)
    z = make_initial_condition(d, InitialCondition("gaussian_blobs", {"count": 3, "amplitude": 0.0}), seed=1)
    assert np.all(z.values == 0.0)


def test_initial_condition_clamp_flag():
    d = DomainSpec(1, (256,), 0.5)
    ic = InitialCondition("filtered_noise", {"cutoff": 0.2, "mean": 0.0, "amplitude": 1.0})
    f, clamped = make_initial_condition(d, ic, seed=2, return_clamped=True)
    assert clamped and f.values.min() == 0.0
    ic = InitialCondition("filtered_noise", {"cutoff": 0.2, "mean": 5.0, "amplitude": 0.1})
    assert not make_initial_condition(d, ic, seed=2, return_clamped=True)[1]


def test_snapshot_and_series_round_trip(tmp_path, rough_pair):
    d = DomainSpec(2, (4, 5), 0.25)
    f = ScalarField(d, np.random.default_rng(0).uniform(size=(4, 5)))
    write_snapshot(tmp_path / "s.txt", f, 1.25)
    g, t = read_snapshot(tmp_path / "s.txt")
    assert t == 1.25 and g.domain == d and np.array_equal(g.values, f.values)
    rough_pair.to_csv(tmp_path / "series.csv")
    assert np.array_equal(TimeSeries.from_csv(tmp_path / "series.csv").rows(), rough_pair.rows())

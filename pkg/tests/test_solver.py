import numpy as np
import pytest
from hypothesis import given, strategies as st

from ulch import (Field, Forcing, GridSpec, InitialCondition, SafeguardError, SimConfig, ValidationError, compute_mu,
                  cubic, regular, run, singular, step, write_snapshot)
from ulch.solver import Stepper, initial_state, make_forcing, make_initial, step_pair, time_derivative, with_overrides


def _cfg(**kw):
    base = dict(grid=GridSpec(1, 64, 8.0), potential=cubic(), dt=0.01, T_end=0.1, seed=1)
    return SimConfig(**{**base, **kw})


def test_mu_of_sine():
    grid = GridSpec(1, 64, np.pi)
    cfg = SimConfig(grid, cubic())
    u = Field.from_function(grid, np.sin)
    # -u'' + u^3 - u = sin^3
    assert np.max(np.abs(compute_mu(u, cfg).values - np.sin(grid.coords()[0]) ** 3)) < 1e-10


@pytest.mark.parametrize("c", [-0.5, 0.0, 0.3])
def test_constant_state_is_stationary_ch(c):
    cfg = _cfg(ic=InitialCondition("constant", mean=c), T_end=1.0)
    tr = run(cfg)
    assert np.max(np.abs(tr.final.u.values - c)) < 1e-14


@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_zero_mode_decay(lam):
    cfg = _cfg(lam=lam, ic=InitialCondition("noise", amplitude=0.4, mean=0.2), T_end=0.5)
    tr = run(cfg)
    c0 = tr.recorded[0].u.mean()
    for st_ in tr.recorded:
        assert st_.u.mean() == pytest.approx(c0 * (1 + cfg.dt * lam) ** (-st_.step), abs=1e-12)


def test_mean_conserved_without_absorption():
    tr = run(_cfg(T_end=1.0, ic=InitialCondition("noise", mean=0.1)))
    m = [s.u.mean() for s in tr.recorded]
    assert np.max(np.abs(np.array(m) - m[0])) < 1e-13


@pytest.mark.parametrize("lam,c1", [(0.0, 0.5), (1.0, -0.5), (0.3, 2.5)])
def test_linear_nonlinearity_three_modes(lam, c1):
    # f(u) = c1 u: every mode evolves by its own amplification factor
    grid = GridSpec(1, 32, np.pi)
    cfg = SimConfig(grid, regular((0.0, c1)), lam=lam, dt=0.01, T_end=0.2, s=3.0)
    x = grid.coords()[0]
    modes = [(1, 0.3), (2, -0.2), (5, 0.1)]
    u0 = Field(grid, sum(a * np.cos(m * x) for m, a in modes))
    tr = run(cfg, u0=u0, keep_states=False)
    n = cfg.n_steps
    expect = 0.0
    for m, a in modes:
        k2 = float(m * m)
        amp = (1 - cfg.dt * k2 * (c1 - 3.0)) / (1 + cfg.dt * (k2 * k2 + 3.0 * k2 + lam))
        expect = expect + a * amp**n * np.cos(m * x)
    assert np.max(np.abs(tr.final.u.values - expect)) < 1e-13


def test_first_order_in_time():
    cfg = _cfg(T_end=0.5, s=2.0)
    ref = run(with_overrides(cfg, dt=0.5 / 4096), keep_states=False).final.u.values
    errs = [np.max(np.abs(run(with_overrides(cfg, dt=dt), keep_states=False).final.u.values - ref))
            for dt in (0.01, 0.005, 0.0025)]
    for a, b in zip(errs, errs[1:]):
        assert 1.8 < a / b < 2.3


def test_stabilisation_tracks_fprime():
    cfg = _cfg(ic=InitialCondition("constant", mean=1.5))
    st0 = initial_state(cfg)
    assert st0.s == pytest.approx(3 * 1.5**2 - 1)
    assert initial_state(_cfg(ic=InitialCondition("constant", mean=0.0))).s == 2.0
    assert initial_state(_cfg(s=0.5)).s == 0.5


def _singular_cfg(**kw):
    base = dict(grid=GridSpec(1, 64, 8.0), potential=singular(2, 2.0), dt=0.5, T_end=0.5, delta_min=0.02,
                ic=InitialCondition("bump", amplitude=0.95, width=0.3))
    return SimConfig(**{**base, **kw})


def test_safeguard_halves_and_respects_bound():
    cfg = _singular_cfg()
    stp = Stepper(cfg)
    u0 = make_initial(cfg).values
    assert np.max(np.abs(stp._raw_step(u0, 0.5, 12.0))) > 1.0
    out = stp.advance([u0], 0.5, 12.0, 0.0)[0]
    assert np.max(np.abs(out)) <= 1 - cfg.delta_min
    # an accepted step equals two explicit half steps of the recursion
    half = 0.25
    if np.max(np.abs(stp._raw_step(u0, half, 12.0))) <= 1 - cfg.delta_min:
        twice = stp._raw_step(stp._raw_step(u0, half, 12.0), half, 12.0)
        assert np.array_equal(out, twice)


def test_safeguard_error_below_dt_min():
    with pytest.raises(SafeguardError):
        cfg = _singular_cfg(dt_min=0.4, s=12.0)
        step(initial_state(cfg), cfg)


def test_singular_initial_data_range():
    with pytest.raises(ValidationError):
        make_initial(_singular_cfg(ic=InitialCondition("constant", mean=0.99)))


def test_step_pair_shares_stabilisation():
    cfg = _cfg()
    stp = Stepper(cfg)
    a = initial_state(cfg)
    b = initial_state(cfg, Field(cfg.grid, a.u.values + 0.8))
    a1, b1 = step_pair(a, b, cfg, stp)
    assert a1.s == b1.s == max(a.s, b.s)
    assert a1.t == b1.t == cfg.dt


@pytest.mark.parametrize("kind", ["noise", "smooth", "rough", "bump"])
def test_initial_conditions_seeded(kind):
    cfg = _cfg(ic=InitialCondition(kind, amplitude=0.3, smoothness=2.0))
    a, b = make_initial(cfg), make_initial(cfg)
    assert np.array_equal(a.values, b.values)
    assert np.max(np.abs(a.values)) <= 0.3 + 1e-12
    if kind in ("smooth", "rough"):
        assert np.max(np.abs(a.values)) == pytest.approx(0.3)


def test_file_initial_and_forcing(tmp_path, rng):
    grid = GridSpec(1, 64, 8.0)
    f = Field(grid, 0.1 * rng.standard_normal(64))
    write_snapshot(tmp_path / "u0.ulch", f, 0.0)
    cfg = _cfg(ic=InitialCondition("file", path=str(tmp_path / "u0.ulch")),
               forcing=Forcing("file", path=str(tmp_path / "u0.ulch")))
    assert np.array_equal(make_initial(cfg).values, f.values)
    assert np.array_equal(make_forcing(cfg).values, f.values)
    with pytest.raises(ValidationError):
        make_initial(_cfg(grid=GridSpec(1, 32, 8.0), ic=cfg.ic))


def test_cos_forcing():
    cfg = _cfg(forcing=Forcing("cos", 0.5, 4))
    x = cfg.grid.coords()[0]
    assert np.allclose(make_forcing(cfg).values, 0.5 * np.cos(np.pi * 4 * x / 8.0))


def test_time_derivative_of_constant_with_absorption():
    cfg = _cfg(lam=2.0)
    u = Field.constant(cfg.grid, 0.3)
    assert np.allclose(time_derivative(u, cfg).values, -0.6)


def test_run_cadence_and_final():
    tr = run(_cfg(T_end=0.25, dt=0.01, cadence=10))
    assert [s.step for s in tr.recorded] == [0, 10, 20, 25]
    assert tr.final.t == pytest.approx(0.25)


@pytest.mark.parametrize("kw", [dict(lam=-1.0), dict(dt=0.0), dict(T_end=-1.0), dict(s=-1.0),
                                dict(delta_min=1.0), dict(cadence=0)])
def test_config_rejects(kw):
    with pytest.raises(ValidationError):
        _cfg(**kw)


def test_dealias_default_by_degree():
    assert not _cfg().use_dealias
    assert _cfg(potential=regular((0, 1, 0, 0, 0, 1))).use_dealias


@given(st.integers(0, 2**31 - 1), st.floats(0.0, 2.0))
def test_absorbed_mean_property(seed, lam):
    cfg = _cfg(lam=lam, seed=seed, T_end=0.05, ic=InitialCondition("noise", mean=0.3))
    tr = run(cfg, keep_states=False)
    m0 = make_initial(cfg).mean()
    assert tr.final.u.mean() == pytest.approx(m0 * (1 + cfg.dt * lam) ** (-cfg.n_steps), abs=1e-12)


def test_mu_of_zero_and_constant():
    cfg = _cfg()
    assert np.all(compute_mu(Field.constant(cfg.grid, 0.0), cfg).values == 0.0)
    mu = compute_mu(Field.constant(cfg.grid, 0.7), cfg).values
    assert np.allclose(mu, 0.7**3 - 0.7, atol=1e-14)


def test_linear_modes_match_exact_exponential():
    grid = GridSpec(1, 32, np.pi)
    x = grid.coords()[0]
    errs = []
    for dt in (1e-3, 5e-4):
        cfg = SimConfig(grid, regular((0.0, 1.0)), lam=0.5, dt=dt, T_end=0.1, s=1.0)
        u0 = Field(grid, 0.3 * np.cos(x) - 0.2 * np.cos(2 * x) + 0.1 * np.cos(3 * x))
        out = run(cfg, u0=u0, keep_states=False).final.u.values
        exact = sum(a * np.exp(-(m**4 + m**2 + 0.5) * 0.1) * np.cos(m * x)
                    for m, a in ((1, 0.3), (2, -0.2), (3, 0.1)))
        errs.append(np.max(np.abs(out - exact)))
    assert errs[0] < 5e-3 and 1.8 < errs[0] / errs[1] < 2.2


def test_zero_horizon_records_only_initial():
    tr = run(_cfg(T_end=0.0))
    assert len(tr.recorded) == 1 and tr.final.step == 0

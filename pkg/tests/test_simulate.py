"""Monte Carlo engine: config validation, determinism across workers,
antithetic pairing, control ordering, and the summary statistics."""

import io
import math
from dataclasses import replace

import numpy as np
import pytest

from fundiv import (
    ConfigError,
    DoubleBarrier,
    EmptyInput,
    MissingParameter,
    SimConfig,
    SolvencyConstrained,
    UnconstrainedBarrier,
    paired_compare,
    simulate_paths,
    summarize,
    summary_lines,
    write_paired_csv,
    write_paths_csv,
)
from helpers import P1, make_params

BASE_CFG = SimConfig(x1_0=2.0, x2_0=1.0, dt=0.25, horizon_T=2.0, n_paths=8, seed=99)


def test_config_rejections():
    p = make_params()
    pol = UnconstrainedBarrier(beta=1.5)
    bad = [
        (replace(BASE_CFG, dt=0.0), pol, p),
        (replace(BASE_CFG, dt=-0.1), pol, p),
        (replace(BASE_CFG, horizon_T=0.0), pol, p),
        (replace(BASE_CFG, n_paths=0), pol, p),
        (replace(BASE_CFG, n_paths=7, antithetic=True), pol, p),
        (replace(BASE_CFG, seed=-1), pol, p),
        (replace(BASE_CFG, seed=2**128), pol, p),
        (replace(BASE_CFG, n_workers=0), pol, p),
        (replace(BASE_CFG, x2_0=0.0), pol, p),
        (replace(BASE_CFG, x1_0=0.5), pol, p),  # starts below the ruin ray
        (replace(BASE_CFG, dt=4.0), pol, p),  # horizon shorter than one step
        (BASE_CFG, UnconstrainedBarrier(beta=0.5), p),
        (BASE_CFG, SolvencyConstrained(beta=2.0, alpha1=1.0), p),
        (BASE_CFG, SolvencyConstrained(beta=1.1, alpha1=1.2), p),
        (BASE_CFG, DoubleBarrier(beta=2.0, gamma=0.5), make_params(kappa=1.05)),
        (BASE_CFG, DoubleBarrier(beta=1.3, gamma=1.3), make_params(kappa=1.05)),
        (BASE_CFG, "pay everything", p),
    ]
    for cfg, policy, params in bad:
        with pytest.raises(ConfigError):
            simulate_paths(cfg, policy, params)


def test_double_barrier_needs_kappa():
    with pytest.raises(MissingParameter):
        simulate_paths(BASE_CFG, DoubleBarrier(beta=2.0, gamma=1.0), make_params())


def test_one_step_matches_manual_recomputation():
    # Reproduce the engine's draws from the same counter-based streams and
    # recompute one exact lognormal step by hand, including the antithetic
    # negation of the odd path.
    p = make_params()
    cfg = SimConfig(
        x1_0=2.0, x2_0=1.0, dt=1.0, horizon_T=1.0, n_paths=2, seed=777, antithetic=True
    )
    beta = 1.5
    result = simulate_paths(cfg, UnconstrainedBarrier(beta=beta), p)

    z = np.random.Generator(np.random.Philox(key=777).jumped(0)).standard_normal(2)
    for i, sign in enumerate((1.0, -1.0)):
        z1, z2 = sign * z[0], sign * z[1]
        pvd = cfg.x1_0 - beta * cfg.x2_0  # lump at t = 0, discount 1
        x1 = beta * cfg.x2_0
        x2 = cfg.x2_0
        x1 *= np.exp((p.mu_A - 0.5 * p.sigma_A**2) * cfg.dt + p.sigma_A * math.sqrt(cfg.dt) * z1)
        x2 *= np.exp(
            (p.mu_L - 0.5 * p.sigma_L**2) * cfg.dt
            + p.sigma_L * math.sqrt(cfg.dt) * (p.rho * z1 + math.sqrt(1 - p.rho**2) * z2)
        )
        if x1 <= p.alpha0 * x2:
            assert result.ruin_time[i] == 0.0 or result.ruin_time[i] == 1.0
            assert not result.censored[i]
        else:
            pvd += max(x1 - beta * x2, 0.0) * np.exp(-p.delta * cfg.dt)
            assert result.censored[i]
        assert result.pv_dividends[i] == pytest.approx(pvd, rel=1e-15)


def test_bitwise_identical_across_worker_counts():
    # Each path owns a jumped stream, so splitting paths across processes --
    # even splitting an antithetic pair across two blocks -- changes nothing.
    p = make_params(kappa=1.05)
    pol = DoubleBarrier(beta=1.8, gamma=1.0)
    cfg = replace(BASE_CFG, n_paths=6, antithetic=True)
    base = simulate_paths(cfg, pol, p)
    for workers in (2, 4):
        other = simulate_paths(replace(cfg, n_workers=workers), pol, p)
        assert np.array_equal(base.pv_dividends, other.pv_dividends)
        assert np.array_equal(base.pv_injections, other.pv_injections)
        assert np.array_equal(base.ruin_time, other.ruin_time)
        assert np.array_equal(base.censored, other.censored)


def test_paired_compare_same_policy_is_exactly_zero():
    p = make_params()
    pol = UnconstrainedBarrier(beta=1.7)
    paired = paired_compare(BASE_CFG, pol, pol, p)
    assert np.all(paired.diff_pv_dividends == 0.0)
    assert paired.mean_diff == 0.0
    assert paired.se_diff == 0.0


def test_immediate_ruin_on_the_ruin_ray():
    # Starting exactly at alpha0 is admissible and ruins at t = 0.
    p = make_params()
    cfg = replace(BASE_CFG, x1_0=1.0)
    result = simulate_paths(cfg, UnconstrainedBarrier(beta=1.5), p)
    assert np.all(result.pv_dividends == 0.0)
    assert np.all(result.ruin_time == 0.0)
    assert not result.censored.any()
    assert result.summary.ruin_fraction == 1.0
    assert result.summary.mean_ruin_time_censored == 0.0


def test_ruined_paths_stop_paying():
    # Near the ruin ray with beta just above it, any path ruined at the first
    # grid time has never been above the barrier, so it collected nothing.
    p = make_params()
    cfg = SimConfig(x1_0=1.05, x2_0=1.0, dt=1.0, horizon_T=2.0, n_paths=64, seed=5)
    result = simulate_paths(cfg, UnconstrainedBarrier(beta=1.06), p)
    first_step = result.ruin_time == 1.0
    assert first_step.any()  # sigma_A = 0.3 over dt = 1 ruins plenty of paths
    assert np.all(result.pv_dividends[first_step] == 0.0)
    assert not result.censored[first_step].any()


def test_injections_keep_paths_alive_and_start_below_gamma():
    p = make_params(kappa=1.05)
    cfg = replace(BASE_CFG, x1_0=1.1, n_paths=16)
    result = simulate_paths(cfg, DoubleBarrier(beta=1.8, gamma=1.3), p)
    assert result.censored.all()
    assert np.all(result.ruin_time == cfg.horizon_T)
    assert result.summary.ruin_fraction == 0.0
    # t = 0 injection lifts the ratio from 1.1 to gamma at discount one.
    assert np.all(result.pv_injections >= 0.2 - 1e-12)
    net = result.pv_dividends - p.kappa * result.pv_injections
    assert result.summary.mean_net_value == pytest.approx(float(np.mean(net)), rel=1e-15)


def test_summarize_rejections():
    with pytest.raises(EmptyInput):
        summarize(np.array([]))
    with pytest.raises(ConfigError):
        summarize(np.ones(3), pv_injections=np.ones(2), horizon_T=1.0)
    with pytest.raises(ConfigError):
        summarize(np.ones(3), pv_injections=np.ones(3), horizon_T=1.0)  # kappa missing
    with pytest.raises(ConfigError):
        summarize(np.ones(3))  # all censored by default, no horizon to censor at
    with pytest.raises(ConfigError):
        summarize(np.ones(3), ruin_time=np.ones(3), censored=np.array([True, False, False]))


def test_summarize_statistics():
    pvd = np.array([1.0, 2.0, 3.0, 6.0])
    s = summarize(pvd, horizon_T=10.0)
    assert s.n_paths == 4
    assert s.mean_pv_dividends == pytest.approx(3.0)
    assert s.var_pv_dividends == pytest.approx(np.var(pvd, ddof=1))
    assert s.se_pv_dividends == pytest.approx(math.sqrt(np.var(pvd, ddof=1) / 4))
    assert s.cv_pv_dividends == pytest.approx(math.sqrt(np.var(pvd, ddof=1)) / 3.0)
    assert s.cv_pv_dividends_defined
    assert s.ruin_fraction == 0.0
    assert s.mean_ruin_time_censored == 10.0

    mixed = summarize(
        pvd,
        ruin_time=np.array([1.0, 2.0, 99.0, 99.0]),
        censored=np.array([False, False, True, True]),
        horizon_T=10.0,
    )
    assert mixed.ruin_fraction == 0.5
    assert mixed.mean_ruin_time_censored == pytest.approx((1.0 + 2.0 + 10.0 + 10.0) / 4)

    netted = summarize(pvd, pv_injections=np.full(4, 0.5), kappa=2.0, horizon_T=1.0)
    assert netted.mean_net_value == pytest.approx(2.0)


def test_summarize_cv_undefined_for_nonpositive_mean():
    s = summarize(np.zeros(4), horizon_T=1.0)
    assert not s.cv_pv_dividends_defined
    assert math.isnan(s.cv_pv_dividends)
    assert not s.cv_net_value_defined


def test_summarize_single_path():
    s = summarize(np.array([2.0]), horizon_T=1.0)
    assert s.var_pv_dividends == 0.0
    assert s.se_pv_dividends == 0.0
    assert s.cv_pv_dividends == 0.0
    assert s.cv_pv_dividends_defined


def test_paths_csv_round_trips():
    p = make_params()
    result = simulate_paths(BASE_CFG, UnconstrainedBarrier(beta=1.5), p)
    buf = io.StringIO()
    write_paths_csv(result, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "path_index,pv_dividends,pv_injections,ruin_time,censored"
    assert len(lines) == 1 + BASE_CFG.n_paths
    for i, line in enumerate(lines[1:]):
        idx, pvd, pvi, rt, cen = line.split(",")
        assert int(idx) == i
        assert float(pvd) == result.pv_dividends[i]  # .17g round-trips exactly
        assert float(pvi) == result.pv_injections[i]
        assert float(rt) == result.ruin_time[i]
        assert cen == ("1" if result.censored[i] else "0")


def test_paired_csv_round_trips():
    p = make_params()
    paired = paired_compare(
        BASE_CFG, UnconstrainedBarrier(beta=1.5), UnconstrainedBarrier(beta=2.5), p
    )
    buf = io.StringIO()
    write_paired_csv(paired, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == (
        "path_index,pv_dividends_a,pv_dividends_b,diff_pv_dividends,"
        "ruin_time_a,ruin_time_b,censored_a,censored_b"
    )
    assert len(lines) == 1 + BASE_CFG.n_paths
    row = lines[1].split(",")
    assert float(row[1]) == paired.result_a.pv_dividends[0]
    assert float(row[2]) == paired.result_b.pv_dividends[0]
    assert float(row[3]) == paired.diff_pv_dividends[0]


def test_summary_lines_format():
    p = make_params()
    result = simulate_paths(BASE_CFG, UnconstrainedBarrier(beta=1.5), p)
    lines = summary_lines(result.summary)
    assert len(lines) == 13
    assert lines[0] == f"n_paths = {BASE_CFG.n_paths}"
    as_dict = dict(line.split(" = ") for line in lines)
    assert as_dict["cv_pv_dividends_defined"] in ("true", "false")
    assert float(as_dict["mean_pv_dividends"]) == result.summary.mean_pv_dividends

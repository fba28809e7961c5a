"""Monte Carlo validation engine for barrier dividend strategies.

Paths use the exact lognormal transition over each grid step dt,

    X1 <- X1 * exp((mu_A - sigma_A^2/2) dt + sigma_A sqrt(dt) Z1)
    X2 <- X2 * exp((mu_L - sigma_L^2/2) dt + sigma_L sqrt(dt) (rho Z1 + sqrt(1-rho^2) Z2)),

so the only discretisation left is that controls act at grid times: at every
t_k = k dt (including t = 0, before any diffusion) the engine applies, in
order, the injection check, the ruin check, then the dividend check.  Lump
dividends are the overshoot above the policy barrier, injections lift the
ratio back to the injection ray, ruin is the first grid time with
X1/X2 <= alpha0, and every lump is discounted by exp(-delta t_k).

Randomness is counter-based: path i draws from a Philox stream jumped i
blocks ahead of the master seed, so results are a pure function of
(seed, path index) and are bit-identical no matter how paths are split
across workers.  With antithetic pairing path 2j+1 consumes the negated
draws of stream j.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Union

import numpy as np

from .errors import ConfigError, EmptyInput
from .params import ModelParams, require_kappa, validate

__all__ = [
    "UnconstrainedBarrier",
    "SolvencyConstrained",
    "DoubleBarrier",
    "Policy",
    "SimConfig",
    "SimSummary",
    "SimResult",
    "PairedComparison",
    "simulate_paths",
    "paired_compare",
    "summarize",
    "write_paths_csv",
    "write_paired_csv",
    "summary_lines",
]

#: Target scalar count for one chunk of normal draws (memory / call-overhead knob).
_CHUNK_BUDGET = 12_000_000


@dataclass(frozen=True)
class UnconstrainedBarrier:
    """Pay the overshoot above ``beta``; stop at ruin."""

    beta: float


@dataclass(frozen=True)
class SolvencyConstrained:
    """Pay the overshoot above ``beta`` only while staying at or above ``alpha1``.

    Admissibility requires beta >= alpha1, so paying down to the barrier
    never breaches the floor; the engine enforces that invariant up front.
    """

    beta: float
    alpha1: float


@dataclass(frozen=True)
class DoubleBarrier:
    """Pay above ``beta``, inject (at unit cost kappa) up to ``gamma``; no ruin."""

    beta: float
    gamma: float


Policy = Union[UnconstrainedBarrier, SolvencyConstrained, DoubleBarrier]


@dataclass(frozen=True)
class SimConfig:
    """Run geometry: start point, grid, path count, master seed."""

    x1_0: float
    x2_0: float
    dt: float
    horizon_T: float
    n_paths: int
    seed: int
    antithetic: bool = False
    n_workers: int = 1


@dataclass(frozen=True)
class SimSummary:
    """Cross-path statistics; variances are unbiased (ddof = 1)."""

    n_paths: int
    mean_pv_dividends: float
    var_pv_dividends: float
    se_pv_dividends: float
    cv_pv_dividends: float
    cv_pv_dividends_defined: bool
    mean_net_value: float
    var_net_value: float
    se_net_value: float
    cv_net_value: float
    cv_net_value_defined: bool
    ruin_fraction: float
    mean_ruin_time_censored: float


@dataclass(frozen=True)
class SimResult:
    """Per-path outputs plus their summary."""

    config: SimConfig
    policy: Policy
    pv_dividends: np.ndarray
    pv_injections: np.ndarray
    ruin_time: np.ndarray
    censored: np.ndarray
    summary: SimSummary


@dataclass(frozen=True)
class PairedComparison:
    """Two policies on identical Brownian increments (common random numbers)."""

    result_a: SimResult
    result_b: SimResult
    diff_pv_dividends: np.ndarray  # arm A minus arm B, per path
    mean_diff: float
    se_diff: float


def _stat_block(values: np.ndarray) -> tuple[float, float, float, float, bool]:
    mean = float(np.mean(values))
    var = float(np.var(values, ddof=1)) if values.size > 1 else 0.0
    se = math.sqrt(var / values.size)
    if mean > 0.0:
        return mean, var, se, math.sqrt(var) / mean, True
    return mean, var, se, math.nan, False


def summarize(
    pv_dividends: np.ndarray,
    pv_injections: np.ndarray | None = None,
    ruin_time: np.ndarray | None = None,
    censored: np.ndarray | None = None,
    *,
    kappa: float | None = None,
    horizon_T: float | None = None,
) -> SimSummary:
    """Summarise raw per-path arrays.

    Censored paths enter the ruin-time mean at ``horizon_T``.  The
    coefficient of variation of a sample with nonpositive mean is reported
    as NaN with its flag cleared rather than raising.  Net value is
    dividends minus ``kappa`` times injections; ``kappa`` is required only
    when some injection is nonzero.
    """
    pvd = np.asarray(pv_dividends, dtype=float)
    if pvd.size == 0:
        raise EmptyInput("cannot summarise zero paths")
    n = pvd.size
    pvi = np.zeros(n) if pv_injections is None else np.asarray(pv_injections, dtype=float)
    if pvi.shape != pvd.shape:
        raise ConfigError("pv_injections must match pv_dividends in shape")
    if np.any(pvi != 0.0):
        if kappa is None:
            raise ConfigError("kappa is required to net nonzero injections")
        net = pvd - kappa * pvi
    else:
        net = pvd
    if censored is None:
        censored_arr = np.ones(n, dtype=bool)
    else:
        censored_arr = np.asarray(censored, dtype=bool)
    if ruin_time is None:
        if horizon_T is None:
            raise ConfigError("horizon_T is required when ruin times are omitted")
        ruin = np.full(n, float(horizon_T))
    else:
        ruin = np.asarray(ruin_time, dtype=float)
    if np.any(censored_arr):
        if horizon_T is None:
            raise ConfigError("horizon_T is required when any path is censored")
        ruin = np.where(censored_arr, float(horizon_T), ruin)

    mean_d, var_d, se_d, cv_d, cv_d_ok = _stat_block(pvd)
    mean_n, var_n, se_n, cv_n, cv_n_ok = _stat_block(net)
    return SimSummary(
        n_paths=n,
        mean_pv_dividends=mean_d,
        var_pv_dividends=var_d,
        se_pv_dividends=se_d,
        cv_pv_dividends=cv_d,
        cv_pv_dividends_defined=cv_d_ok,
        mean_net_value=mean_n,
        var_net_value=var_n,
        se_net_value=se_n,
        cv_net_value=cv_n,
        cv_net_value_defined=cv_n_ok,
        ruin_fraction=float(np.count_nonzero(~censored_arr)) / n,
        mean_ruin_time_censored=float(np.mean(ruin)),
    )


def _validate_run(cfg: SimConfig, policy: Policy, p: ModelParams) -> int:
    validate(p)
    if not cfg.dt > 0.0:
        raise ConfigError(f"dt = {cfg.dt!r} must be positive")
    if not cfg.horizon_T > 0.0:
        raise ConfigError(f"horizon_T = {cfg.horizon_T!r} must be positive")
    if cfg.n_paths < 1:
        raise ConfigError(f"n_paths = {cfg.n_paths!r} must be at least 1")
    if cfg.antithetic and cfg.n_paths % 2 != 0:
        raise ConfigError("antithetic pairing needs an even n_paths")
    if not (isinstance(cfg.seed, int) and 0 <= cfg.seed < 2**128):
        raise ConfigError(f"seed = {cfg.seed!r} must be an integer in [0, 2**128)")
    if cfg.n_workers < 1:
        raise ConfigError(f"n_workers = {cfg.n_workers!r} must be at least 1")
    if not cfg.x2_0 > 0.0:
        raise ConfigError(f"x2_0 = {cfg.x2_0!r} must be positive")
    if cfg.x1_0 / cfg.x2_0 < p.alpha0:
        raise ConfigError(
            f"start ratio {cfg.x1_0 / cfg.x2_0!r} lies below alpha0 = {p.alpha0!r}"
        )
    if isinstance(policy, UnconstrainedBarrier):
        if not policy.beta >= p.alpha0:
            raise ConfigError(f"policy beta = {policy.beta!r} must be >= alpha0")
    elif isinstance(policy, SolvencyConstrained):
        if not policy.alpha1 > p.alpha0:
            raise ConfigError(f"policy alpha1 = {policy.alpha1!r} must exceed alpha0")
        if not policy.beta >= policy.alpha1:
            raise ConfigError(
                f"policy beta = {policy.beta!r} must be >= its floor alpha1 = {policy.alpha1!r}"
            )
    elif isinstance(policy, DoubleBarrier):
        require_kappa(p, "simulating a DoubleBarrier policy")
        if not policy.gamma >= p.alpha0:
            raise ConfigError(f"policy gamma = {policy.gamma!r} must be >= alpha0")
        if not policy.beta > policy.gamma:
            raise ConfigError(f"policy beta = {policy.beta!r} must exceed gamma")
    else:
        raise ConfigError(f"unknown policy {policy!r}")
    n_steps = int(round(cfg.horizon_T / cfg.dt))
    if n_steps < 1:
        raise ConfigError("horizon_T must cover at least one step of size dt")
    return n_steps


def _path_streams(seed: int, i0: int, i1: int, antithetic: bool):
    """One Generator per path; antithetic odd paths reuse (and negate) stream i//2."""
    base = np.random.Philox(key=seed)
    rngs = []
    for i in range(i0, i1):
        stream = i // 2 if antithetic else i
        rngs.append(np.random.Generator(base.jumped(stream)))
    return rngs


def _run_block(
    p: ModelParams, policy: Policy, cfg: SimConfig, i0: int, i1: int, n_steps: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Simulate paths [i0, i1); pure function of (cfg.seed, path index)."""
    n = i1 - i0
    dt = cfg.dt
    drift_a = (p.mu_A - 0.5 * p.sigma_A**2) * dt
    vol_a = p.sigma_A * math.sqrt(dt)
    drift_l = (p.mu_L - 0.5 * p.sigma_L**2) * dt
    vol_l = p.sigma_L * math.sqrt(dt)
    mix = math.sqrt(1.0 - p.rho * p.rho)

    injecting = isinstance(policy, DoubleBarrier)
    beta = policy.beta
    gamma = policy.gamma if injecting else math.nan
    alpha0 = p.alpha0

    x1 = np.full(n, float(cfg.x1_0))
    x2 = np.full(n, float(cfg.x2_0))
    pvd = np.zeros(n)
    pvi = np.zeros(n)
    ruin_time = np.full(n, float(cfg.horizon_T))
    alive = np.ones(n, dtype=bool)
    scratch = np.empty(n)

    def control(t: float, disc: float) -> None:
        if injecting:
            np.multiply(x2, gamma, out=scratch)
            np.subtract(scratch, x1, out=scratch)
            np.maximum(scratch, 0.0, out=scratch)
            np.add(x1, scratch, out=x1)
            np.multiply(scratch, disc, out=scratch)
            np.add(pvi, scratch, out=pvi)
        else:
            ruined_now = x1 <= alpha0 * x2
            ruined_now &= alive
            if ruined_now.any():
                ruin_time[ruined_now] = t
                alive[ruined_now] = False
        np.multiply(x2, beta, out=scratch)
        np.subtract(x1, scratch, out=scratch)
        np.maximum(scratch, 0.0, out=scratch)
        if not injecting:
            np.multiply(scratch, alive, out=scratch)  # no dividends once ruined
        np.subtract(x1, scratch, out=x1)
        np.multiply(scratch, disc, out=scratch)
        np.add(pvd, scratch, out=pvd)

    control(0.0, 1.0)

    rngs = _path_streams(cfg.seed, i0, i1, cfg.antithetic)
    chunk = max(64, min(4096, _CHUNK_BUDGET // max(2 * n, 1)))
    draws = np.empty((n, chunk, 2))
    k = 0
    while k < n_steps:
        m = min(chunk, n_steps - k)
        block = draws[:, :m, :] if m < chunk else draws
        for j, rng in enumerate(rngs):
            rng.standard_normal(out=block[j])
            if cfg.antithetic and (i0 + j) % 2 == 1:
                np.negative(block[j], out=block[j])
        z1 = block[:, :, 0].T
        z2 = block[:, :, 1].T
        grow_a = np.exp(drift_a + vol_a * z1)
        grow_l = np.exp(drift_l + vol_l * (p.rho * z1 + mix * z2))
        disc = np.exp(-p.delta * dt * np.arange(k + 1, k + m + 1))
        for j in range(m):
            np.multiply(x1, grow_a[j], out=x1, where=alive)
            np.multiply(x2, grow_l[j], out=x2, where=alive)
            control((k + j + 1) * dt, disc[j])
        k += m

    censored = alive if not injecting else np.ones(n, dtype=bool)
    return pvd, pvi, ruin_time, censored.copy()


def simulate_paths(cfg: SimConfig, policy: Policy, p: ModelParams) -> SimResult:
    """Run the engine and summarise.

    Identical (cfg, policy, p) give bit-identical results regardless of
    ``cfg.n_workers``, because every path owns its random stream.
    """
    n_steps = _validate_run(cfg, policy, p)
    n = cfg.n_paths
    if cfg.n_workers == 1 or n == 1:
        blocks = [_run_block(p, policy, cfg, 0, n, n_steps)]
    else:
        workers = min(cfg.n_workers, n)
        bounds = [(n * w) // workers for w in range(workers + 1)]
        jobs = [
            (p, policy, cfg, bounds[w], bounds[w + 1], n_steps)
            for w in range(workers)
            if bounds[w + 1] > bounds[w]
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_run_block_star, jobs))
    pvd = np.concatenate([b[0] for b in blocks])
    pvi = np.concatenate([b[1] for b in blocks])
    ruin_time = np.concatenate([b[2] for b in blocks])
    censored = np.concatenate([b[3] for b in blocks])
    summary = summarize(
        pvd,
        pvi,
        ruin_time,
        censored,
        kappa=p.kappa if isinstance(policy, DoubleBarrier) else None,
        horizon_T=cfg.horizon_T,
    )
    return SimResult(
        config=cfg,
        policy=policy,
        pv_dividends=pvd,
        pv_injections=pvi,
        ruin_time=ruin_time,
        censored=censored,
        summary=summary,
    )


def _run_block_star(job) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    return _run_block(*job)


def paired_compare(
    cfg: SimConfig, policy_a: Policy, policy_b: Policy, p: ModelParams
) -> PairedComparison:
    """Run both policies on the same Brownian increments and pair the outputs.

    Streams depend only on (seed, path index), and draws are consumed at a
    fixed two-per-step rate whatever the policy does, so the two arms see
    identical shocks path by path.
    """
    result_a = simulate_paths(cfg, policy_a, p)
    result_b = simulate_paths(cfg, policy_b, p)
    diff = result_a.pv_dividends - result_b.pv_dividends
    n = diff.size
    var = float(np.var(diff, ddof=1)) if n > 1 else 0.0
    return PairedComparison(
        result_a=result_a,
        result_b=result_b,
        diff_pv_dividends=diff,
        mean_diff=float(np.mean(diff)),
        se_diff=math.sqrt(var / n),
    )


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_paths_csv(result: SimResult, fh: IO[str]) -> None:
    """Stream per-path rows: path_index,pv_dividends,pv_injections,ruin_time,censored."""
    fh.write("path_index,pv_dividends,pv_injections,ruin_time,censored\n")
    censored = result.censored.astype(int)
    for i in range(result.pv_dividends.size):
        fh.write(
            f"{i},{_fmt(result.pv_dividends[i])},{_fmt(result.pv_injections[i])},"
            f"{_fmt(result.ruin_time[i])},{censored[i]}\n"
        )


def write_paired_csv(paired: PairedComparison, fh: IO[str]) -> None:
    """Stream paired per-path rows for the two arms plus their dividend difference."""
    fh.write(
        "path_index,pv_dividends_a,pv_dividends_b,diff_pv_dividends,"
        "ruin_time_a,ruin_time_b,censored_a,censored_b\n"
    )
    a, b = paired.result_a, paired.result_b
    cen_a = a.censored.astype(int)
    cen_b = b.censored.astype(int)
    for i in range(a.pv_dividends.size):
        fh.write(
            f"{i},{_fmt(a.pv_dividends[i])},{_fmt(b.pv_dividends[i])},"
            f"{_fmt(paired.diff_pv_dividends[i])},{_fmt(a.ruin_time[i])},"
            f"{_fmt(b.ruin_time[i])},{cen_a[i]},{cen_b[i]}\n"
        )


def summary_lines(summary: SimSummary) -> list[str]:
    """Flat ``key = value`` rendering of a summary, 17 significant digits."""
    out = []
    for field in (
        "n_paths",
        "mean_pv_dividends",
        "var_pv_dividends",
        "se_pv_dividends",
        "cv_pv_dividends",
        "cv_pv_dividends_defined",
        "mean_net_value",
        "var_net_value",
        "se_net_value",
        "cv_net_value",
        "cv_net_value_defined",
        "ruin_fraction",
        "mean_ruin_time_censored",
    ):
        value = getattr(summary, field)
        if isinstance(value, bool):
            out.append(f"{field} = {str(value).lower()}")
        elif isinstance(value, int):
            out.append(f"{field} = {value}")
        else:
            out.append(f"{field} = {_fmt(value)}")
    return out

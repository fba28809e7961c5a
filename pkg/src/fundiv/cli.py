"""Command-line interface: barriers, values, simulation, sweeps, verification.

Parameters come from a flat ``key = value`` config file (--config) and/or
individual flags named exactly like the model fields; flags override file
values, and the effective parameter set is echoed as ``# key = value``
comment lines at the top of every output for provenance.

Exit codes: 0 success, 1 validation error, 2 domain error (including failed
verification), 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import closed_form, injections, simulate, verify
from .errors import (
    ConfigError,
    DomainError,
    EmptyInput,
    NumericalError,
    ParameterError,
    SeamError,
)
from .params import (
    OPTIONAL_FIELDS,
    REQUIRED_FIELDS,
    ModelParams,
    from_mapping,
    read_params_file,
    validate,
)

_ALL_FIELDS = REQUIRED_FIELDS + OPTIONAL_FIELDS


@dataclass(frozen=True)
class RunSpec:
    """Resolved invocation: what to run, where parameters came from, where output goes."""

    subcommand: str
    param_source: str  # "file", "flags", or "file+flags"
    output_target: str  # "stdout" or a path
    output_format: str  # "csv" or "keyvalue"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _gather_params(args: argparse.Namespace) -> tuple[ModelParams, str]:
    values: dict[str, float] = {}
    sources = []
    if args.config:
        values.update(read_params_file(args.config))
        sources.append("file")
    flagged = {
        name: getattr(args, name) for name in _ALL_FIELDS if getattr(args, name) is not None
    }
    if flagged:
        values.update(flagged)
        sources.append("flags")
    if not sources:
        raise ParameterError(
            "parameters", None, "supply --config and/or individual parameter flags"
        )
    p = validate(from_mapping(values))
    return p, "+".join(sources)


def _echo_params(p: ModelParams, fh) -> None:
    for name in _ALL_FIELDS:
        value = getattr(p, name)
        if value is not None:
            fh.write(f"# {name} = {_fmt(value)}\n")


@contextlib.contextmanager
def _open_output(target: str):
    if target == "stdout":
        yield sys.stdout
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _runspec(args: argparse.Namespace, source: str, fmt: str) -> RunSpec:
    return RunSpec(
        subcommand=args.cmd,
        param_source=source,
        output_target=args.output if args.output else "stdout",
        output_format=fmt,
    )


# --------------------------------------------------------------------------
# subcommands


def cmd_barriers(args: argparse.Namespace) -> int:
    p, source = _gather_params(args)
    rs = _runspec(args, source, "keyvalue")
    e = closed_form.exponents(p)
    beta0 = closed_form.optimal_barrier_beta0(p)
    lines = [
        f"sigma_tilde_sq = {_fmt(e.sigma_tilde_sq)}",
        f"zeta1 = {_fmt(e.zeta1)}",
        f"zeta2 = {_fmt(e.zeta2)}",
        f"beta0_star = {_fmt(beta0)}",
        f"value_at_beta0 = {_fmt(closed_form.closed_form_value(beta0, p).value_at_barrier())}",
    ]
    if p.alpha1 is not None:
        beta1 = closed_form.constrained_barrier_beta1(p)
        lines.append(f"beta1_star = {_fmt(beta1)}")
        lines.append(
            f"value_at_beta1 = {_fmt(closed_form.closed_form_value(beta1, p).value_at_barrier())}"
        )
    if p.kappa is not None:
        beta2 = injections.optimal_barrier_beta2(p)
        lines.append(f"beta2_star = {_fmt(beta2)}")
        lines.append(f"gamma_star = {_fmt(p.alpha0)}")
        lines.append(
            f"value_at_beta2 = {_fmt(injections.value_injections(beta2, 1.0, beta2, p.alpha0, p))}"
        )
    with _open_output(rs.output_target) as fh:
        _echo_params(p, fh)
        fh.write("\n".join(lines) + "\n")
    return 0


def cmd_value(args: argparse.Namespace) -> int:
    p, source = _gather_params(args)
    rs = _runspec(args, source, "keyvalue")
    scale = args.scale if args.scale is not None else 1.0
    if not scale > 0.0:
        raise DomainError(f"--scale {scale!r} must be positive")
    x1, x2 = args.x1 * scale, args.x2 * scale
    gamma = None
    if args.problem == "unconstrained":
        beta = args.beta if args.beta is not None else closed_form.optimal_barrier_beta0(p)
        fn = closed_form.closed_form_value(beta, p)
    elif args.problem == "solvency":
        beta = args.beta if args.beta is not None else closed_form.constrained_barrier_beta1(p)
        fn = closed_form.closed_form_value(beta, p)
    else:  # injection
        gamma = args.gamma if args.gamma is not None else p.alpha0
        beta = args.beta if args.beta is not None else injections.optimal_barrier_beta2(p)
        fn = injections.double_barrier_value(beta, gamma, p)
    value = fn.evaluate(x1, x2)
    d1, d2 = fn.partials(x1, x2)[:2]
    ratio = x1 / x2
    if ratio > beta:
        branch = "above-barrier"
    elif gamma is not None and ratio < gamma:
        branch = "below-injection"
    else:
        branch = "continuation"
    lines = [
        f"problem = {args.problem}",
        f"x1 = {_fmt(x1)}",
        f"x2 = {_fmt(x2)}",
        f"beta = {_fmt(beta)}",
    ]
    if gamma is not None:
        lines.append(f"gamma = {_fmt(gamma)}")
    lines += [
        f"value = {_fmt(value)}",
        f"branch = {branch}",
        f"dvalue_dx1 = {_fmt(d1)}",
        f"dvalue_dx2 = {_fmt(d2)}",
    ]
    with _open_output(rs.output_target) as fh:
        _echo_params(p, fh)
        fh.write("\n".join(lines) + "\n")
    return 0


def _build_policy(args: argparse.Namespace, p: ModelParams, suffix: str = ""):
    kind = getattr(args, "policy" + suffix)
    beta_flag = getattr(args, "beta" + suffix)
    if kind == "unconstrained":
        beta = beta_flag if beta_flag is not None else closed_form.optimal_barrier_beta0(p)
        return simulate.UnconstrainedBarrier(beta=beta), closed_form.value_unconstrained(
            args.x1_0, args.x2_0, beta, p
        )
    if kind == "solvency":
        beta = beta_flag if beta_flag is not None else closed_form.constrained_barrier_beta1(p)
        policy = simulate.SolvencyConstrained(beta=beta, alpha1=p.alpha1)
        return policy, closed_form.value_unconstrained(args.x1_0, args.x2_0, beta, p)
    gamma = args.gamma if args.gamma is not None else p.alpha0
    beta = beta_flag if beta_flag is not None else injections.optimal_barrier_beta2(p)
    policy = simulate.DoubleBarrier(beta=beta, gamma=gamma)
    return policy, injections.value_injections(args.x1_0, args.x2_0, beta, gamma, p)


def cmd_simulate(args: argparse.Namespace) -> int:
    p, source = _gather_params(args)
    rs = _runspec(args, source, "csv")
    cfg = simulate.SimConfig(
        x1_0=args.x1_0,
        x2_0=args.x2_0,
        dt=args.dt,
        horizon_T=args.horizon_T,
        n_paths=args.n_paths,
        seed=args.seed,
        antithetic=args.antithetic,
        n_workers=args.n_workers,
    )
    if args.paired:
        if args.policy_b is None:
            raise ConfigError("--paired needs --policy_b")
        policy_a, cf_a = _build_policy(args, p)
        policy_b, cf_b = _build_policy(args, p, suffix="_b")
        paired = simulate.paired_compare(cfg, policy_a, policy_b, p)
        with _open_output(rs.output_target) as fh:
            _echo_params(p, fh)
            simulate.write_paired_csv(paired, fh)
            fh.write("\n")
            fh.write(f"policy_a = {policy_a!r}\n")
            fh.write(f"policy_b = {policy_b!r}\n")
            fh.write(f"mean_diff = {_fmt(paired.mean_diff)}\n")
            fh.write(f"se_diff = {_fmt(paired.se_diff)}\n")
            for tag, res, cf in (("a", paired.result_a, cf_a), ("b", paired.result_b, cf_b)):
                s = res.summary
                fh.write(f"mean_pv_dividends_{tag} = {_fmt(s.mean_pv_dividends)}\n")
                fh.write(f"cv_pv_dividends_{tag} = {_fmt(s.cv_pv_dividends)}\n")
                fh.write(f"mean_ruin_time_censored_{tag} = {_fmt(s.mean_ruin_time_censored)}\n")
                fh.write(f"closed_form_value_{tag} = {_fmt(cf)}\n")
        return 0
    policy, cf_value = _build_policy(args, p)
    result = simulate.simulate_paths(cfg, policy, p)
    mc_mean = (
        result.summary.mean_net_value
        if isinstance(policy, simulate.DoubleBarrier)
        else result.summary.mean_pv_dividends
    )
    mc_se = (
        result.summary.se_net_value
        if isinstance(policy, simulate.DoubleBarrier)
        else result.summary.se_pv_dividends
    )
    z = (mc_mean - cf_value) / mc_se if mc_se > 0.0 else float("nan")
    with _open_output(rs.output_target) as fh:
        _echo_params(p, fh)
        simulate.write_paths_csv(result, fh)
        fh.write("\n")
        fh.write(f"policy = {policy!r}\n")
        for line in simulate.summary_lines(result.summary):
            fh.write(line + "\n")
        fh.write(f"closed_form_value = {_fmt(cf_value)}\n")
        fh.write(f"z_score_vs_closed_form = {_fmt(z)}\n")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    p, source = _gather_params(args)
    rs = _runspec(args, source, "csv")
    rows: list[str] = []
    if args.kind == "beta2-vs-kappa":
        header = "kappa,beta2_star"
        for kappa in np.linspace(args.kappa_min, args.kappa_max, args.steps):
            pk = replace(p, kappa=float(kappa))
            rows.append(f"{_fmt(kappa)},{_fmt(injections.optimal_barrier_beta2(pk))}")
    elif args.kind == "value-surface":
        header = "gamma,beta,value"
        ratio = args.ratio if args.ratio is not None else p.alpha0
        beta2 = injections.optimal_barrier_beta2(p)
        gamma_lo = args.gamma_min if args.gamma_min is not None else p.alpha0
        gamma_hi = args.gamma_max if args.gamma_max is not None else beta2
        beta_lo = args.beta_min if args.beta_min is not None else p.alpha0
        beta_hi = args.beta_max if args.beta_max is not None else 2.0 * beta2
        gammas = np.linspace(gamma_lo, gamma_hi, args.gamma_steps)
        betas = np.linspace(beta_lo, beta_hi, args.beta_steps)
        for gamma in gammas:
            for beta in betas:
                if beta > gamma >= p.alpha0:
                    value = injections.value_injections(ratio, 1.0, float(beta), float(gamma), p)
                    rows.append(f"{_fmt(gamma)},{_fmt(beta)},{_fmt(value)}")
                else:
                    rows.append(f"{_fmt(gamma)},{_fmt(beta)},")  # infeasible cell
    else:  # breakeven
        header = "sigma_A,kappa_star,beta2_star"
        sig_lo = args.sigma_A_min if args.sigma_A_min is not None else 0.6 * p.sigma_A
        sig_hi = args.sigma_A_max if args.sigma_A_max is not None else 1.4 * p.sigma_A
        for sigma_a in np.linspace(sig_lo, sig_hi, args.steps):
            pk = replace(p, sigma_A=float(sigma_a))
            try:
                kappa_star = injections.breakeven_kappa(pk)
            except NumericalError:
                rows.append(f"{_fmt(sigma_a)},,")  # no breakeven in the searched range
                continue
            rows.append(
                f"{_fmt(sigma_a)},{_fmt(kappa_star)},"
                f"{_fmt(injections.optimal_barrier_beta2(replace(pk, kappa=kappa_star)))}"
            )
    with _open_output(rs.output_target) as fh:
        _echo_params(p, fh)
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    p, source = _gather_params(args)
    rs = _runspec(args, source, "keyvalue")
    problems = ("solvency", "injection") if args.problem == "both" else (args.problem,)
    if args.barrier_override is not None and len(problems) > 1:
        raise ConfigError("--barrier-override needs an explicit --problem")
    reports = []
    for problem in problems:
        if problem == "solvency":
            reports.append(
                verify.check_solvency_lemma(
                    p, barrier=args.barrier_override, mode=args.mode
                )
            )
        else:
            reports.append(
                verify.check_injection_lemma(
                    p, barrier=args.barrier_override, mode=args.mode
                )
            )
    with _open_output(rs.output_target) as fh:
        _echo_params(p, fh)
        fh.write("\n\n".join(r.to_text() for r in reports) + "\n")
    return 0 if all(r.passed for r in reports) else 2


# --------------------------------------------------------------------------
# parser


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model parameters")
    group.add_argument("--config", help="flat 'key = value' parameter file")
    for name in _ALL_FIELDS:
        group.add_argument(f"--{name}", type=float, default=None, help=f"model field {name}")
    parser.add_argument("--output", default=None, help="write output to this file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fundiv",
        description="Optimal dividend barriers on a funding ratio, with Monte Carlo checks.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_bar = sub.add_parser("barriers", help="print exponents, optimal barriers, barrier values")
    _add_param_flags(p_bar)
    p_bar.set_defaults(func=cmd_barriers)

    p_val = sub.add_parser("value", help="evaluate a value function at a point")
    _add_param_flags(p_val)
    p_val.add_argument("--problem", choices=("unconstrained", "solvency", "injection"),
                       required=True)
    p_val.add_argument("--x1", type=float, required=True)
    p_val.add_argument("--x2", type=float, required=True)
    p_val.add_argument("--beta", type=float, default=None, help="barrier override")
    p_val.add_argument("--gamma", type=float, default=None, help="injection ray override")
    p_val.add_argument("--scale", type=float, default=None,
                       help="multiply both coordinates (homogeneity check)")
    p_val.set_defaults(func=cmd_value)

    p_sim = sub.add_parser("simulate", help="Monte Carlo paths under a policy")
    _add_param_flags(p_sim)
    p_sim.add_argument("--policy", choices=("unconstrained", "solvency", "double"),
                       required=True)
    p_sim.add_argument("--beta", type=float, default=None, help="barrier override")
    p_sim.add_argument("--gamma", type=float, default=None, help="injection ray override")
    p_sim.add_argument("--x1_0", type=float, required=True)
    p_sim.add_argument("--x2_0", type=float, required=True)
    p_sim.add_argument("--dt", type=float, required=True)
    p_sim.add_argument("--horizon_T", type=float, required=True)
    p_sim.add_argument("--n_paths", type=int, required=True)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--antithetic", action="store_true")
    p_sim.add_argument("--n_workers", type=int, default=1)
    p_sim.add_argument("--paired", action="store_true",
                       help="run a second policy on the same shocks")
    p_sim.add_argument("--policy_b", choices=("unconstrained", "solvency", "double"),
                       default=None)
    p_sim.add_argument("--beta_b", type=float, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_swp = sub.add_parser("sweep", help="parameter sweeps as CSV")
    _add_param_flags(p_swp)
    p_swp.add_argument("--kind", choices=("beta2-vs-kappa", "value-surface", "breakeven"),
                       required=True)
    p_swp.add_argument("--kappa_min", type=float, default=1.01)
    p_swp.add_argument("--kappa_max", type=float, default=3.0)
    p_swp.add_argument("--steps", type=int, default=21)
    p_swp.add_argument("--gamma_min", type=float, default=None)
    p_swp.add_argument("--gamma_max", type=float, default=None)
    p_swp.add_argument("--gamma_steps", type=int, default=11)
    p_swp.add_argument("--beta_min", type=float, default=None)
    p_swp.add_argument("--beta_max", type=float, default=None)
    p_swp.add_argument("--beta_steps", type=int, default=21)
    p_swp.add_argument("--ratio", type=float, default=None,
                       help="funding ratio at which the surface is evaluated")
    p_swp.add_argument("--sigma_A_min", type=float, default=None)
    p_swp.add_argument("--sigma_A_max", type=float, default=None)
    p_swp.set_defaults(func=cmd_sweep)

    p_ver = sub.add_parser("verify", help="check the verification-lemma conditions")
    _add_param_flags(p_ver)
    p_ver.add_argument("--problem", choices=("solvency", "injection", "both"), default="both")
    p_ver.add_argument("--barrier-override", dest="barrier_override", type=float, default=None)
    p_ver.add_argument("--mode", choices=("analytic", "finite-difference"), default="analytic")
    p_ver.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except (ParameterError, ConfigError, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, SeamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Model parameters, their invariants, and flat key-value config files.

The firm holds assets X1 and liabilities X2, each geometric Brownian motion:

    dX1 = mu_A X1 dt + sigma_A X1 dW1
    dX2 = mu_L X2 dt + sigma_L X2 dW2,      d<W1, W2> = rho dt

Dividends are discounted at ``delta``, the regulator closes the firm when the
funding ratio X1/X2 falls to ``alpha0``, an optional stricter level ``alpha1``
restricts when dividends may be paid, and ``kappa`` is the optional
proportional cost of injecting capital.

Validation rejects boundary values instead of clamping them: the model
degenerates at ``mu_A == mu_L`` (immediate liquidation is optimal) and the
value function diverges as ``delta`` approaches ``mu_A``, so callers who want
limiting behaviour should sweep toward the boundary explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import (
    CorrelationOutOfRange,
    DiscountTooLow,
    InjectionCostTooLow,
    MissingParameter,
    ParameterError,
    ProfitabilityViolated,
    RuinLevelNotPositive,
    SolvencyLevelTooLow,
    VolatilityNotPositive,
)

#: Required field names, in canonical order (also the config-file key names).
REQUIRED_FIELDS = ("mu_A", "mu_L", "sigma_A", "sigma_L", "rho", "delta", "alpha0")

#: Optional field names.
OPTIONAL_FIELDS = ("alpha1", "kappa")


@dataclass(frozen=True)
class ModelParams:
    """Market and control constants, all per unit time.

    ``alpha1`` and ``kappa`` are optional: ``alpha1`` only matters for the
    solvency-constrained dividend problem, ``kappa`` only when forced capital
    injections replace ruin.
    """

    mu_A: float
    mu_L: float
    sigma_A: float
    sigma_L: float
    rho: float
    delta: float
    alpha0: float
    alpha1: float | None = None
    kappa: float | None = None


def validate(raw: ModelParams) -> ModelParams:
    """Check every model invariant and return the parameters unchanged.

    Raises a distinct :class:`~fundiv.errors.ParameterError` subclass per
    violated invariant, naming the offending field and its bound.  NaN values
    fail the comparisons and are rejected the same way.
    """
    if not raw.sigma_A > 0.0:
        raise VolatilityNotPositive("sigma_A", raw.sigma_A, "sigma_A > 0")
    if not raw.sigma_L > 0.0:
        raise VolatilityNotPositive("sigma_L", raw.sigma_L, "sigma_L > 0")
    if not (-1.0 < raw.rho < 1.0):
        raise CorrelationOutOfRange("rho", raw.rho, "-1 < rho < 1")
    if not raw.mu_A > raw.mu_L:
        raise ProfitabilityViolated("mu_A", raw.mu_A, f"mu_A > mu_L = {raw.mu_L!r}")
    if not raw.delta > raw.mu_A:
        raise DiscountTooLow("delta", raw.delta, f"delta > mu_A = {raw.mu_A!r}")
    if not raw.delta > 0.0:
        raise DiscountTooLow("delta", raw.delta, "delta > 0")
    if not raw.alpha0 > 0.0:
        raise RuinLevelNotPositive("alpha0", raw.alpha0, "alpha0 > 0")
    if raw.alpha1 is not None and not raw.alpha1 > raw.alpha0:
        raise SolvencyLevelTooLow("alpha1", raw.alpha1, f"alpha1 > alpha0 = {raw.alpha0!r}")
    if raw.kappa is not None and not raw.kappa > 1.0:
        raise InjectionCostTooLow("kappa", raw.kappa, "kappa > 1")
    return raw


def require_alpha1(p: ModelParams, context: str = "the solvency-constrained problem") -> float:
    """Return ``p.alpha1`` or raise :class:`MissingParameter`."""
    if p.alpha1 is None:
        raise MissingParameter("alpha1", context)
    return p.alpha1


def require_kappa(p: ModelParams, context: str = "the capital-injection problem") -> float:
    """Return ``p.kappa`` or raise :class:`MissingParameter`."""
    if p.kappa is None:
        raise MissingParameter("kappa", context)
    return p.kappa


def from_mapping(values: Mapping[str, float]) -> ModelParams:
    """Build (unvalidated) :class:`ModelParams` from a flat mapping.

    Keys must be exactly the dataclass field names.  Missing required fields
    raise :class:`MissingParameter`; unknown keys raise
    :class:`~fundiv.errors.ParameterError`.
    """
    known = set(REQUIRED_FIELDS) | set(OPTIONAL_FIELDS)
    for key in values:
        if key not in known:
            raise ParameterError(key, values[key], f"unknown parameter; expected one of {sorted(known)}")
    for key in REQUIRED_FIELDS:
        if key not in values:
            raise MissingParameter(key, "the model")
    kwargs = {key: float(values[key]) for key in values}
    return ModelParams(**kwargs)


def read_params_file(path: str | Path) -> dict[str, float]:
    """Parse a flat ``key = value`` parameter file.

    Blank lines and ``#`` comments are ignored.  Values must parse as decimal
    floats; keys are not checked here (see :func:`from_mapping`).
    """
    out: dict[str, float] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParameterError(
                f"{path}:{lineno}", line.strip(), "config lines must look like 'key = value'"
            )
        key, _, value = stripped.partition("=")
        key = key.strip()
        try:
            out[key] = float(value.strip())
        except ValueError:
            raise ParameterError(key, value.strip(), "value must be a decimal number") from None
    return out

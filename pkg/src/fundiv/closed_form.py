"""Closed-form dividend values and optimal barriers for the ruin-stopped firm.

A barrier strategy with level ``beta`` pays out just enough to keep the
funding ratio r = x1/x2 at or below ``beta``; the firm is closed the first
time r reaches ``alpha0``.  Inside the continuation band the expected
discounted dividend stream V solves the generator equation (A - delta)V = 0
and, being homogeneous of degree one in (x1, x2), is a combination of the
power solutions

    x1^zeta * x2^(1 - zeta),

where zeta solves the characteristic quadratic

    (sigma~^2 / 2) zeta^2 + (mu_A - mu_L - sigma~^2 / 2) zeta + (mu_L - delta) = 0,
    sigma~^2 = sigma_A^2 + sigma_L^2 - 2 rho sigma_A sigma_L.

The quadratic has one negative root zeta1 and one root zeta2 > 1 whenever the
parameters validate.  Pinning the value to zero at the ruin ray and its
x1-slope to one at the payout ray gives, with u = r / alpha0,

    V(x1, x2; beta) = alpha0 x2 * (u^zeta1 - u^zeta2) / denom(beta),
    denom(beta)     = zeta1 (beta/alpha0)^(zeta1-1) - zeta2 (beta/alpha0)^(zeta2-1),

on the band, and the linear continuation x1 - beta x2 + V(beta x2, x2; beta)
above it.  The payout level maximising V turns the one-sided second
derivative at the barrier to zero (smooth fit) and is

    beta0* = alpha0 * (zeta1 (zeta1 - 1) / (zeta2 (zeta2 - 1)))^(1 / (zeta2 - zeta1)),

with base and exponent both positive.  A solvency floor alpha1 simply lifts
the barrier to beta1* = max(beta0*, alpha1).

All powers are evaluated in log space, exp(zeta * ln u), so extreme
exponents neither overflow nor lose the exact zero at u = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .params import ModelParams, require_alpha1, validate

__all__ = [
    "Exponents",
    "ClosedFormValue",
    "exponents",
    "closed_form_value",
    "value_unconstrained",
    "partials_unconstrained",
    "optimal_barrier_beta0",
    "constrained_barrier_beta1",
    "value_constrained",
]


def _rpow(base: float, expo: float) -> float:
    """base**expo for base > 0, computed as exp(expo * log(base))."""
    return math.exp(expo * math.log(base))


@dataclass(frozen=True)
class Exponents:
    """Roots of the characteristic quadratic plus the combined variance."""

    sigma_tilde_sq: float
    zeta1: float
    zeta2: float


def exponents(p: ModelParams) -> Exponents:
    """Solve the characteristic quadratic for a validated parameter set.

    Uses the cancellation-free quadratic formula (larger-magnitude root from
    the discriminant, the other from the product of roots) so that both roots
    carry full relative precision; the two roots straddle [0, 1] because the
    quadratic is negative at 0 and at 1.
    """
    validate(p)
    s2 = p.sigma_A * p.sigma_A + p.sigma_L * p.sigma_L - 2.0 * p.rho * p.sigma_A * p.sigma_L
    a = 0.5 * s2
    b = p.mu_A - p.mu_L - 0.5 * s2
    c = p.mu_L - p.delta
    disc = b * b - 4.0 * a * c  # c < 0 and a > 0, so this is strictly positive
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    r1 = q / a
    r2 = c / q
    return Exponents(sigma_tilde_sq=s2, zeta1=min(r1, r2), zeta2=max(r1, r2))


@dataclass(frozen=True)
class ClosedFormValue:
    """Piecewise value of a fixed-barrier dividend strategy.

    ``coeff1``/``coeff2`` are the weights of x1^zeta1 x2^(1-zeta1) and
    x1^zeta2 x2^(1-zeta2) on the continuation band; ``denom`` is the
    barrier-dependent denominator they share.  Evaluation uses the
    u = r/alpha0 form, which is algebraically identical and returns an exact
    zero on the ruin ray.
    """

    beta: float
    alpha0: float
    exponents: Exponents
    coeff1: float
    coeff2: float
    denom: float

    @property
    def seam_ratios(self) -> tuple[float, ...]:
        """Funding ratios where the formula switches branch (kinks)."""
        return (self.beta,)

    def _ratio(self, x1: float, x2: float) -> float:
        if not x2 > 0.0:
            raise DomainError(f"x2 = {x2!r} must be positive")
        r = x1 / x2
        if r < self.alpha0:
            raise DomainError(f"x1/x2 = {r!r} lies below the ruin level alpha0 = {self.alpha0!r}")
        return r

    def value_at_barrier(self, x2: float = 1.0) -> float:
        """Value on the payout ray, V(beta * x2, x2)."""
        u = self.beta / self.alpha0
        return self.alpha0 * x2 * (_rpow(u, self.exponents.zeta1) - _rpow(u, self.exponents.zeta2)) / self.denom

    def evaluate(self, x1: float, x2: float) -> float:
        """Value at (x1, x2); the barrier ray itself uses the band formula."""
        r = self._ratio(x1, x2)
        if r <= self.beta:
            u = r / self.alpha0
            num = _rpow(u, self.exponents.zeta1) - _rpow(u, self.exponents.zeta2)
            return self.alpha0 * x2 * num / self.denom
        return x1 - self.beta * x2 + self.value_at_barrier(x2)

    def partials(self, x1: float, x2: float) -> tuple[float, float, float, float, float]:
        """Exact branch partials (dV/dx1, dV/dx2, d2V/dx1^2, d2V/dx2^2, d2V/dx1dx2)."""
        r = self._ratio(x1, x2)
        z1, z2 = self.exponents.zeta1, self.exponents.zeta2
        if r <= self.beta:
            u = r / self.alpha0
            u1, u2 = _rpow(u, z1), _rpow(u, z2)
            d1 = (z1 * u1 / u - z2 * u2 / u) / self.denom
            d2 = self.alpha0 * ((1.0 - z1) * u1 - (1.0 - z2) * u2) / self.denom
            curv = (z1 * (z1 - 1.0) * u1 - z2 * (z2 - 1.0) * u2) / self.denom
            d11 = curv / (u * u * self.alpha0 * x2)
            d22 = self.alpha0 * curv / x2
            d12 = -curv / (u * x2)
            return (d1, d2, d11, d22, d12)
        return (1.0, self.value_at_barrier(1.0) - self.beta, 0.0, 0.0, 0.0)


def closed_form_value(beta: float, p: ModelParams) -> ClosedFormValue:
    """Build the piecewise value function for an arbitrary admissible barrier."""
    e = exponents(p)
    if not beta >= p.alpha0:
        raise DomainError(f"barrier beta = {beta!r} must be >= alpha0 = {p.alpha0!r}")
    w = beta / p.alpha0
    denom = e.zeta1 * _rpow(w, e.zeta1 - 1.0) - e.zeta2 * _rpow(w, e.zeta2 - 1.0)
    coeff1 = _rpow(p.alpha0, 1.0 - e.zeta1) / denom
    coeff2 = -_rpow(p.alpha0, 1.0 - e.zeta2) / denom
    return ClosedFormValue(
        beta=beta, alpha0=p.alpha0, exponents=e, coeff1=coeff1, coeff2=coeff2, denom=denom
    )


def value_unconstrained(x1: float, x2: float, beta: float, p: ModelParams) -> float:
    """Expected discounted dividends of the barrier-``beta`` strategy at (x1, x2)."""
    return closed_form_value(beta, p).evaluate(x1, x2)


def partials_unconstrained(
    x1: float, x2: float, beta: float, p: ModelParams
) -> tuple[float, float, float, float, float]:
    """First and second partials of :func:`value_unconstrained` on its active branch."""
    return closed_form_value(beta, p).partials(x1, x2)


def optimal_barrier_beta0(p: ModelParams) -> float:
    """Payout level maximising the unconstrained dividend value.

    Written with positive base and positive exponent so the log-space power
    is well defined: zeta1 (zeta1 - 1) > zeta2 (zeta2 - 1) > 0.
    """
    e = exponents(p)
    ratio = (e.zeta1 * (e.zeta1 - 1.0)) / (e.zeta2 * (e.zeta2 - 1.0))
    return p.alpha0 * _rpow(ratio, 1.0 / (e.zeta2 - e.zeta1))


def constrained_barrier_beta1(p: ModelParams) -> float:
    """Optimal barrier when dividends are forbidden below ``alpha1``.

    The floor only binds when it exceeds the free optimum:
    beta1* = max(beta0*, alpha1).
    """
    validate(p)
    alpha1 = require_alpha1(p)
    return max(optimal_barrier_beta0(p), alpha1)


def value_constrained(x1: float, x2: float, p: ModelParams) -> float:
    """Value of the solvency-constrained problem (barrier at beta1*)."""
    return value_unconstrained(x1, x2, constrained_barrier_beta1(p), p)

"""Dividend values when shareholders must recapitalise instead of liquidating.

With forced injections the funding ratio is kept inside a band [gamma, beta]:
overshoot above ``beta`` is paid out, shortfall below ``gamma`` is injected at
proportional cost ``kappa`` > 1, and ruin never happens.  On the band the
value is the two-power combination

    V(x1, x2) = C1 x1^zeta1 x2^(1-zeta1) + C2 x1^zeta2 x2^(1-zeta2),

with the coefficients pinned by the slope conditions dV/dx1 = 1 on the payout
ray and dV/dx1 = kappa on the injection ray.  Below gamma the value continues
linearly with slope kappa (inject immediately up to gamma), above beta with
slope one (pay the overshoot immediately).

Scaling both barriers by the same factor scales the value, so the optimal
injection ray is the lowest admissible one, gamma* = alpha0.  The optimal
payout barrier beta2* is the unique root in beta of the score

    psi(beta) = zeta1 * ( kappa (zeta1 - zeta2) gamma^(1-zeta2) beta^zeta1
                          + (zeta2 - 1) gamma^(zeta1-zeta2) beta
                          + (1 - zeta1) beta^(1+zeta1-zeta2) ),

which is positive at beta = gamma, strictly decreasing, and negative for
large beta; vanishing psi is equivalent to the smooth-fit condition (zero
one-sided second derivative) at beta2*.  Inverting the same relation gives
the injection cost that makes a given barrier pair optimal, which is used
both for round-trip testing and for break-even analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .closed_form import Exponents, _rpow, exponents
from .errors import BracketFailure, DomainError, MonotonicityError, NoBreakeven
from .params import ModelParams, require_kappa, validate

__all__ = [
    "DoubleBarrierValue",
    "coefficients",
    "double_barrier_value",
    "value_injections",
    "partials_injections",
    "psi",
    "optimal_barrier_beta2",
    "kappa_from_barrier",
    "breakeven_kappa",
]

#: Bracket-expansion cap for the psi root: beta <= alpha0 * 2**MAX_DOUBLINGS.
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class DoubleBarrierValue:
    """Piecewise value of a fixed (payout ``beta``, injection ``gamma``) policy."""

    beta: float
    gamma: float
    kappa: float
    alpha0: float
    exponents: Exponents
    C1: float
    C2: float

    @property
    def seam_ratios(self) -> tuple[float, ...]:
        """Funding ratios where the formula switches branch (kinks)."""
        if self.gamma > self.alpha0:
            return (self.gamma, self.beta)
        return (self.beta,)

    def _ratio(self, x1: float, x2: float) -> float:
        if not x2 > 0.0:
            raise DomainError(f"x2 = {x2!r} must be positive")
        r = x1 / x2
        if r < self.alpha0:
            raise DomainError(f"x1/x2 = {r!r} lies below alpha0 = {self.alpha0!r}")
        return r

    def _band(self, r: float) -> float:
        z = self.exponents
        return self.C1 * _rpow(r, z.zeta1) + self.C2 * _rpow(r, z.zeta2)

    def evaluate(self, x1: float, x2: float) -> float:
        """Value at (x1, x2); both barrier rays use the band formula."""
        r = self._ratio(x1, x2)
        if r < self.gamma:
            return self.kappa * (x1 - self.gamma * x2) + x2 * self._band(self.gamma)
        if r <= self.beta:
            return x2 * self._band(r)
        return x1 - self.beta * x2 + x2 * self._band(self.beta)

    def partials(self, x1: float, x2: float) -> tuple[float, float, float, float, float]:
        """Exact branch partials (dV/dx1, dV/dx2, d2V/dx1^2, d2V/dx2^2, d2V/dx1dx2)."""
        r = self._ratio(x1, x2)
        z1, z2 = self.exponents.zeta1, self.exponents.zeta2
        if r < self.gamma:
            return (self.kappa, self._band(self.gamma) - self.kappa * self.gamma, 0.0, 0.0, 0.0)
        if r <= self.beta:
            t1 = self.C1 * _rpow(r, z1)
            t2 = self.C2 * _rpow(r, z2)
            d1 = (z1 * t1 + z2 * t2) / r
            d2 = (1.0 - z1) * t1 + (1.0 - z2) * t2
            curv = z1 * (z1 - 1.0) * t1 + z2 * (z2 - 1.0) * t2
            return (d1, d2, curv / (r * r * x2), curv / x2, -curv / (r * x2))
        return (1.0, self._band(self.beta) - self.beta, 0.0, 0.0, 0.0)


def _check_band(beta: float, gamma: float, p: ModelParams) -> None:
    if not gamma >= p.alpha0:
        raise DomainError(f"gamma = {gamma!r} must be >= alpha0 = {p.alpha0!r}")
    if not beta > gamma:
        raise DomainError(f"beta = {beta!r} must exceed gamma = {gamma!r}")


def coefficients(beta: float, gamma: float, p: ModelParams) -> tuple[float, float]:
    """Band coefficients (C1, C2) fixed by the two slope conditions.

    C1 = (gamma^(zeta2-1) - kappa beta^(zeta2-1))
         / (zeta1 (beta^(zeta1-1) gamma^(zeta2-1) - gamma^(zeta1-1) beta^(zeta2-1))),

    evaluated with the common factor gamma^(zeta2-1) cancelled so only the
    ratio beta/gamma >= 1 is ever raised to a power; C2 then follows from the
    unit-slope condition on the payout ray.
    """
    validate(p)
    kappa = require_kappa(p)
    _check_band(beta, gamma, p)
    e = exponents(p)
    z1, z2 = e.zeta1, e.zeta2
    t = beta / gamma
    c1 = (1.0 - kappa * _rpow(t, z2 - 1.0)) / (
        z1 * _rpow(beta, z1 - 1.0) * (1.0 - _rpow(t, z2 - z1))
    )
    c2 = (kappa * _rpow(gamma, 1.0 - z2) - c1 * z1 * _rpow(gamma, z1 - z2)) / z2
    return c1, c2


def double_barrier_value(beta: float, gamma: float, p: ModelParams) -> DoubleBarrierValue:
    """Build the piecewise value function for a fixed barrier pair."""
    c1, c2 = coefficients(beta, gamma, p)
    return DoubleBarrierValue(
        beta=beta,
        gamma=gamma,
        kappa=float(require_kappa(p)),
        alpha0=p.alpha0,
        exponents=exponents(p),
        C1=c1,
        C2=c2,
    )


def value_injections(x1: float, x2: float, beta: float, gamma: float, p: ModelParams) -> float:
    """Expected discounted dividends net of kappa-weighted injections at (x1, x2)."""
    return double_barrier_value(beta, gamma, p).evaluate(x1, x2)


def partials_injections(
    x1: float, x2: float, beta: float, gamma: float, p: ModelParams
) -> tuple[float, float, float, float, float]:
    """First and second partials of :func:`value_injections` on its active branch."""
    return double_barrier_value(beta, gamma, p).partials(x1, x2)


def psi(beta: float, gamma: float, p: ModelParams) -> float:
    """Optimality score whose unique root in ``beta`` is the best payout barrier.

    Positive at beta = gamma (for kappa > 1), strictly decreasing, negative
    for large beta.  Each power is evaluated in log space.
    """
    validate(p)
    kappa = require_kappa(p)
    if not gamma >= p.alpha0:
        raise DomainError(f"gamma = {gamma!r} must be >= alpha0 = {p.alpha0!r}")
    if not beta >= gamma:
        raise DomainError(f"beta = {beta!r} must be >= gamma = {gamma!r}")
    e = exponents(p)
    z1, z2 = e.zeta1, e.zeta2
    term1 = kappa * (z1 - z2) * _rpow(gamma, 1.0 - z2) * _rpow(beta, z1)
    term2 = (z2 - 1.0) * _rpow(gamma, z1 - z2) * beta
    term3 = (1.0 - z1) * _rpow(beta, 1.0 + z1 - z2)
    return z1 * (term1 + term2 + term3)


def optimal_barrier_beta2(p: ModelParams) -> float:
    """Optimal payout barrier with injections pinned at gamma* = alpha0.

    Bisection on :func:`psi` with initial bracket
    [alpha0 * (1 + 1e-12), 2 * alpha0]; the upper end is doubled until the
    sign changes (at most ``MAX_DOUBLINGS`` times) and the root is located to
    an absolute tolerance of 1e-12 * alpha0.
    """
    validate(p)
    require_kappa(p)
    gamma = p.alpha0
    lo = p.alpha0 * (1.0 + 1e-12)
    hi = 2.0 * p.alpha0
    f_lo = psi(lo, gamma, p)
    if not f_lo > 0.0:
        raise BracketFailure(
            f"psi({lo!r}) = {f_lo!r} is not positive; no root bracket just above alpha0"
        )
    doublings = 0
    while psi(hi, gamma, p) > 0.0:
        hi *= 2.0
        doublings += 1
        if doublings > MAX_DOUBLINGS:
            raise BracketFailure(
                f"psi did not change sign below alpha0 * 2**{MAX_DOUBLINGS}"
            )
    tol = 1e-12 * p.alpha0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if psi(mid, gamma, p) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kappa_from_barrier(beta: float, gamma: float, p: ModelParams) -> float:
    """Injection cost for which the pair (beta, gamma) is the optimal band.

    Inverts the root condition psi(beta; gamma, kappa) = 0 for kappa:

        kappa = ((zeta1 - 1) - (zeta2 - 1) t^(zeta2 - zeta1))
                / ((zeta1 - zeta2) t^(zeta2 - 1)),       t = beta / gamma > 1.

    ``p.kappa`` itself is ignored; only the market parameters enter.
    """
    validate(p)
    _check_band(beta, gamma, p)
    e = exponents(p)
    z1, z2 = e.zeta1, e.zeta2
    t = beta / gamma
    return ((z1 - 1.0) - (z2 - 1.0) * _rpow(t, z2 - z1)) / ((z1 - z2) * _rpow(t, z2 - 1.0))


def _value_at_floor(p: ModelParams, kappa: float) -> float:
    """Net value started on the injection ray, under the optimal barrier for ``kappa``."""
    pk = replace(p, kappa=kappa)
    beta2 = optimal_barrier_beta2(pk)
    return value_injections(p.alpha0, 1.0, beta2, p.alpha0, pk)


def breakeven_kappa(
    p: ModelParams, kappa_lo: float = 1.0 + 1e-8, kappa_cap: float = 1e3
) -> float:
    """Largest injection cost at which recapitalising at the floor still adds value.

    Finds kappa* with V(alpha0, 1; beta2*(kappa*), alpha0) = 0 by bisection
    over [kappa_lo, kappa_cap].  The start value must be positive and the cap
    value negative, otherwise :class:`NoBreakeven` is raised; monotone decay
    of the floor value in kappa is asserted on an 8-point sample first and a
    violation raises :class:`MonotonicityError` rather than guessing at a
    bracket.  ``p.kappa`` is ignored.
    """
    validate(p)
    f_lo = _value_at_floor(p, kappa_lo)
    f_hi = _value_at_floor(p, kappa_cap)
    if not f_lo > 0.0:
        raise NoBreakeven(
            f"floor value {f_lo!r} at kappa = {kappa_lo!r} is already nonpositive"
        )
    if not f_hi < 0.0:
        raise NoBreakeven(f"floor value {f_hi!r} at kappa = {kappa_cap!r} is still positive")
    # Sample on a log grid in (kappa - 1); allow only rounding-level wobble.
    lo_off, hi_off = math.log(kappa_lo - 1.0), math.log(kappa_cap - 1.0)
    sample = [1.0 + math.exp(lo_off + (hi_off - lo_off) * i / 7.0) for i in range(8)]
    values = [_value_at_floor(p, k) for k in sample]
    for (ka, va), (kb, vb) in zip(zip(sample, values), zip(sample[1:], values[1:])):
        if vb > va + 1e-12 * max(1.0, abs(va)):
            raise MonotonicityError(
                f"floor value rose from {va!r} at kappa={ka!r} to {vb!r} at kappa={kb!r}"
            )
    lo, hi = kappa_lo, kappa_cap
    while hi - lo > 1e-10 * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if _value_at_floor(p, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

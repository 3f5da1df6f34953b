"""Rates with uncertainties, power-law fits, axis conversion, distillation."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .noise import NoiseModel
from .sim import NoAcceptedTrialsError, Tally


@dataclass(frozen=True)
class RateEstimate:
    value: float
    sem: float

    def __post_init__(self):
        assert 0.0 <= self.value <= 1.0
        assert self.sem >= 0.0


@dataclass(frozen=True)
class FitResult:
    coefficient: float
    stderr: float
    exponent: int
    points: int
    reduced_chi2: float

    def report(self) -> str:
        return (
            f"fit y = A*p^{self.exponent}: A = {self.coefficient:.9g} "
            f"+- {self.stderr:.9g} ({self.points} points, "
            f"reduced chi2 = {self.reduced_chi2:.9g})"
        )


class DegenerateWeightsError(ValueError):
    pass


def _binomial(successes: int, n: int) -> RateEstimate:
    value = successes / n
    return RateEstimate(value, math.sqrt(value * (1 - value) / n))


def rates(tally: Tally) -> dict:
    """Success and conditioned logical error rates with binomial SEMs."""
    if tally.shots < 1:
        raise ValueError("tally has no shots")
    out = {"success": _binomial(tally.accepted, tally.shots)}
    if tally.accepted == 0:
        raise NoAcceptedTrialsError("no accepted trials: rates undefined")
    acc = tally.accepted
    errors = acc - tally.counts["I"]
    out["eps_total"] = _binomial(errors, acc)
    out["eps_xl"] = _binomial(tally.counts["XL"] + tally.counts["YL"], acc)
    out["eps_zl"] = _binomial(tally.counts["ZL"] + tally.counts["YL"], acc)
    return out


def _power_fit(points, exponent: int) -> FitResult:
    """Weighted least squares for y = A * p^exponent, weights 1/sem^2."""
    usable = [(p, y, s) for p, y, s in points if s > 0]
    if len(usable) < 2:
        raise DegenerateWeightsError("need >= 2 points with positive sem")
    swyx = swxx = 0.0
    for p, y, s in usable:
        w = 1.0 / (s * s)
        xe = p ** exponent
        swyx += w * y * xe
        swxx += w * xe * xe
    if swxx <= 0:
        raise DegenerateWeightsError("degenerate abscissae")
    coeff = swyx / swxx
    stderr = math.sqrt(1.0 / swxx)
    chi2 = sum(
        ((y - coeff * p ** exponent) / s) ** 2 for p, y, s in usable
    )
    dof = max(1, len(usable) - 1)
    return FitResult(coeff, stderr, exponent, len(usable), chi2 / dof)


def fit_quadratic(points) -> FitResult:
    """Fit (p, y, sem) points to y = A p^2."""
    return _power_fit(points, 2)


def fit_linear(points) -> FitResult:
    """Fit (p, y, sem) points to y = A p."""
    return _power_fit(points, 1)


def convert_axis(coefficient: float, exponent: int, model: NoiseModel) -> float:
    """Convert a coefficient in p to the p_CX axis.

    Uses the leading-order map p_CX = a*p with a = 20 (model A) or 2 (B); the
    p/eta correction is dropped so printed conversions come out exact.
    """
    a = 20.0 if model.variant == "A" else 2.0
    return coefficient / a ** exponent


def distill_15to1(eps: float) -> float:
    """Output error rate of one round of 15-to-1 distillation: 35 eps^3."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must be a probability")
    return min(1.0, 35.0 * eps ** 3)


def log_slope(points) -> tuple[float, float]:
    """Least-squares slope of log(y) vs log(p) with SEM-propagated errors."""
    data = [
        (math.log(p), math.log(y), s / y) for p, y, s in points if y > 0 and s > 0
    ]
    if len(data) < 2:
        raise DegenerateWeightsError("need >= 2 positive points")
    sw = swx = swy = swxx = swxy = 0.0
    for lx, ly, sig in data:
        w = 1.0 / (sig * sig)
        sw += w
        swx += w * lx
        swy += w * ly
        swxx += w * lx * lx
        swxy += w * lx * ly
    denom = sw * swxx - swx * swx
    slope = (sw * swxy - swx * swy) / denom
    stderr = math.sqrt(sw / denom)
    return slope, stderr

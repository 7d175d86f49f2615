#!/usr/bin/env python3  src/blowup_solver/core/blowup.py
"""
Blow-up Point Estimation
========================
Extract x* = lim x(p) from the tail of a trajectory of a transformed system,
then fit the singularity form y ~ A * (x* - x)^(-beta).

Two extrapolations are available:

- ``consecutive``: Aitken delta-squared on consecutive samples. Exact on
  geometric tails (non-local transforms with g = f/y or t/y).
- ``log``: samples at parameters p_end / 2^j, extrapolated with the exact
  three-point power model x = x* - C * p^(-q). Exact on algebraic tails
  (differential transforms, arc-length g), where consecutive Aitken only
  removes a fixed fraction of the error.

``auto`` uses the consecutive stride when successive increments contract by a
steady factor and the log stride otherwise: algebraic tails shrink too, but
their increment ratio creeps towards 1.

The uncertainty is a heuristic: |x* - last x| + |last increment|.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from blowup_solver.core.codes import EstimateMethod, translate_code
from blowup_solver.core.errors import (
    ConfigurationError,
    EstimationError,
    NonMonotoneTailError,
    TooFewSamplesError,
)
from blowup_solver.core.odecore import Trajectory
from blowup_solver.logging_config import get_logger

logger = get_logger(__name__)

MIN_SAMPLES = 5
MIN_FIT_SAMPLES = 10
DEFAULT_TAIL = 8
DEFAULT_FIT_FRACTION = 0.25
# a tail counts as geometric when successive increments shrink by at least
# GEOMETRIC_RATIO and their ratio drifts by less than RATIO_DRIFT * (1 - ratio)
GEOMETRIC_RATIO = 0.99
RATIO_DRIFT = 1e-3
STRIDES = ("auto", "consecutive", "log")

_EPS = float(np.finfo(float).eps)
# brentq search range for the power-law exponent q
_Q_MIN = 1e-9
_Q_MAX = 200.0


@dataclass(frozen=True)
class BlowupEstimate:
    """Estimated blow-up point, and the singularity amplitude/exponent once fitted."""

    x_star: float
    uncertainty: float
    method: EstimateMethod
    samples_used: int
    stride: str = "consecutive"
    A: Optional[float] = None
    beta: Optional[float] = None

    def with_fit(self, A: float, beta: float) -> "BlowupEstimate":
        return BlowupEstimate(
            self.x_star, self.uncertainty, self.method, self.samples_used, self.stride, A, beta
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            "x_star": self.x_star,
            "uncertainty": self.uncertainty,
            "A": self.A,
            "beta": self.beta,
            "method": translate_code(self.method),
            "samples_used": self.samples_used,
        }


@dataclass(frozen=True)
class _Extrapolation:
    estimates: Tuple[float, ...]
    method: EstimateMethod
    samples_used: int

    @property
    def value(self) -> float:
        return self.estimates[-1]


# =============================================================================
# EXTRAPOLATION KERNELS
# =============================================================================


def aitken(x1: float, x2: float, x3: float) -> Optional[float]:
    """Aitken delta-squared limit of three consecutive terms.

    Returns None when the second difference is at rounding level.
    """
    den = (x3 - x2) - (x2 - x1)
    if abs(den) <= 64.0 * _EPS * max(abs(x1), abs(x2), abs(x3), 1e-300):
        return None
    return x3 - (x3 - x2) ** 2 / den


def power_limit(
    p: Sequence[float], x: Sequence[float]
) -> Optional[Tuple[float, float]]:
    """Limit of x = x* - C * p^(-q) through three points with 0 < p1 < p2 < p3.

    Returns ``(x_star, q)``, or None when the points admit no such model with q > 0
    (increments not shrinking fast enough, or not increasing).
    """
    u1, u2, u3 = (math.log(v) for v in p)
    x1, x2, x3 = x
    if not (x2 > x1 and x3 >= x2 and u1 < u2 < u3):
        return None
    ratio = (x3 - x2) / (x2 - x1)
    if not ratio < (u3 - u2) / (u2 - u1):
        return None
    d1, d2 = u3 - u1, u3 - u2

    # (e2 - 1) - ratio * (e1 - e2) with e_i = exp(q * d_i), written with expm1 for small q
    def phi(q: float) -> float:
        return math.expm1(q * d2) - ratio * math.exp(q * d2) * math.expm1(q * (u2 - u1))

    q_hi = 1.0
    limit = min(_Q_MAX, 700.0 / d1)
    while phi(q_hi) > 0.0:
        if q_hi >= limit:
            return None
        q_hi = min(2.0 * q_hi, limit)
    q_lo = min(_Q_MIN, 0.5 * q_hi)
    if phi(q_lo) <= 0.0:
        return None
    q = brentq(phi, q_lo, q_hi, xtol=1e-14, rtol=4 * _EPS)
    amplitude = (x2 - x1) / (math.exp(q * d1) - math.exp(q * d2))
    return x3 + amplitude, q


def _consecutive(x: np.ndarray, tail: int) -> Optional[_Extrapolation]:
    window = x[-tail:]
    estimates = []
    for i in range(len(window) - 2):
        value = aitken(float(window[i]), float(window[i + 1]), float(window[i + 2]))
        if value is not None:
            estimates.append(value)
    if not estimates:
        return None
    return _Extrapolation(tuple(estimates), EstimateMethod.AITKEN, len(window))


def log_stride_indices(params: np.ndarray, tail: int) -> List[int]:
    """Indices of the samples nearest p_end / 2^j, j = 0, 1, ..., oldest first.

    At most ``tail`` indices; only samples with p > 0 qualify.
    """
    start, end = float(params[0]), float(params[-1])
    picked: List[int] = []
    target = end
    while target > 0.0 and target >= start and len(picked) < tail:
        index = int(np.abs(params - target).argmin())
        if params[index] > 0.0 and (not picked or index != picked[-1]):
            picked.append(index)
        if index == 0:
            break
        target *= 0.5
    return picked[::-1]


def _log_stride(params: np.ndarray, x: np.ndarray, tail: int) -> Optional[_Extrapolation]:
    indices = log_stride_indices(params, tail)
    if len(indices) < 3:
        return None
    estimates = []
    for a, b, c in zip(indices, indices[1:], indices[2:]):
        found = power_limit(
            (float(params[a]), float(params[b]), float(params[c])),
            (float(x[a]), float(x[b]), float(x[c])),
        )
        if found is not None:
            estimates.append(found[0])
    if not estimates:
        return None
    return _Extrapolation(tuple(estimates), EstimateMethod.AITKEN_LOG, len(indices))


def _is_geometric(x: np.ndarray) -> bool:
    steps = np.diff(x[-4:])
    if np.any(steps <= 0.0):
        return False
    ratios = steps[1:] / steps[:-1]
    if ratios[-1] > GEOMETRIC_RATIO:
        return False
    return len(ratios) < 2 or abs(ratios[-1] - ratios[-2]) <= RATIO_DRIFT * (1.0 - ratios[-1])


# =============================================================================
# PUBLIC API
# =============================================================================


def estimate_x_star(
    traj: Trajectory, tail: int = DEFAULT_TAIL, stride: str = "auto"
) -> BlowupEstimate:
    """Estimate the blow-up point from the x-tail of ``traj`` (A and beta left unset).

    Samples at the end of the run where x no longer changes in floating point are
    ignored. When no extrapolation applies the last value is reported.

    Raises:
        TooFewSamplesError: fewer than 5 samples
        NonMonotoneTailError: x decreases somewhere in the last ``tail`` samples
    """
    if stride not in STRIDES:
        raise ConfigurationError(f"stride must be one of {STRIDES}, got '{stride}'")
    if tail < 3:
        raise ConfigurationError(f"tail must be at least 3, got {tail}")
    if len(traj) < MIN_SAMPLES:
        raise TooFewSamplesError(f"need at least {MIN_SAMPLES} samples, got {len(traj)}")

    x = np.asarray(traj.x, dtype=float)
    params = np.asarray(traj.params, dtype=float)
    if np.any(np.diff(x[-tail:]) < 0.0):
        raise NonMonotoneTailError(f"x decreases within the last {tail} samples")

    end = len(x)
    while end > 1 and x[end - 1] == x[end - 2]:
        end -= 1
    x, params = x[:end], params[:end]
    last = float(x[-1])
    increment = float(x[-1] - x[-2]) if end > 1 else 0.0

    chosen = None
    if end >= 3:
        consecutive = _consecutive(x, tail) if stride in ("auto", "consecutive") else None
        logarithmic = _log_stride(params, x, tail) if stride in ("auto", "log") else None
        if stride == "auto":
            preferred = [consecutive, logarithmic]
            if not _is_geometric(x):
                preferred.reverse()
            chosen = next((c for c in preferred if c is not None), None)
        else:
            chosen = consecutive or logarithmic

    if chosen is None:
        estimate = BlowupEstimate(
            last, abs(increment), EstimateMethod.LAST_VALUE, min(end, tail), stride
        )
    else:
        estimate = BlowupEstimate(
            chosen.value,
            abs(chosen.value - last) + abs(increment),
            chosen.method,
            chosen.samples_used,
            stride,
        )
    logger.info(
        "estimate.x_star",
        x_star=estimate.x_star,
        uncertainty=estimate.uncertainty,
        method=translate_code(estimate.method),
        stride=stride,
        samples=estimate.samples_used,
    )
    return estimate


def fit_window(
    x: np.ndarray,
    x_star: float,
    fraction: float = DEFAULT_FIT_FRACTION,
    width: Optional[float] = None,
) -> np.ndarray:
    """Boolean mask of the samples used by :func:`fit_power_law`."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError(f"fit fraction must be in (0, 1], got {fraction}")
    distance = x_star - x
    mask = distance >= 10.0 * _EPS * abs(x_star)
    if width is not None:
        mask &= distance < width
    else:
        cutoff = int(math.floor(len(x) * (1.0 - fraction)))
        mask[:cutoff] = False
    return mask


def fit_power_law(
    traj: Trajectory,
    x_star: float,
    fraction: float = DEFAULT_FIT_FRACTION,
    width: Optional[float] = None,
) -> Tuple[float, float]:
    """Least-squares fit of ln y = ln A + beta * (-ln(x* - x)) over the tail window.

    The window is the last ``fraction`` of the samples, or every sample with
    x* - x < ``width`` when a width is given.

    Raises:
        EstimationError: x* not beyond every sampled x, non-positive y in the
            window, or a non-positive fitted exponent
        TooFewSamplesError: fewer than 10 samples in the window
    """
    x = np.asarray(traj.x, dtype=float)
    y = np.asarray(traj.y, dtype=float)
    if not x_star > float(x.max()):
        raise EstimationError(f"x* = {x_star!r} does not exceed the largest sampled x {x.max()!r}")

    mask = fit_window(x, x_star, fraction, width)
    count = int(mask.sum())
    if count < MIN_FIT_SAMPLES:
        raise TooFewSamplesError(
            f"power-law window holds {count} samples, need {MIN_FIT_SAMPLES}"
        )
    xw, yw = x[mask], y[mask]
    if np.any(yw <= 0.0):
        raise EstimationError("power-law fit needs y > 0 throughout the window")

    beta, intercept = np.polyfit(-np.log(x_star - xw), np.log(yw), 1)
    beta, amplitude = float(beta), float(np.exp(intercept))
    if not beta > 0.0:
        raise EstimationError(f"fitted exponent beta = {beta:.6g} is not positive")
    logger.info("fit.power_law", A=amplitude, beta=beta, samples=count)
    return amplitude, beta


def characterize(
    traj: Trajectory,
    tail: int = DEFAULT_TAIL,
    stride: str = "auto",
    fraction: float = DEFAULT_FIT_FRACTION,
    width: Optional[float] = None,
) -> BlowupEstimate:
    """:func:`estimate_x_star` followed by :func:`fit_power_law` at the estimated x*."""
    estimate = estimate_x_star(traj, tail=tail, stride=stride)
    amplitude, beta = fit_power_law(traj, estimate.x_star, fraction=fraction, width=width)
    return estimate.with_fit(amplitude, beta)

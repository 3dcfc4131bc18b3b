"""Predictive semantic information of a GPS pointer and how it ages.

A car moves along a single road discretised as integer positions.  Two fixes
``x0`` (at ``t0``) and ``x1`` (at ``t1``) are linearly extrapolated; the
prediction's truth function is a Gaussian that widens with the delay ``dt``.
The actual position is a normal whose mean and spread also drift with ``dt``.
Semantic information decays, crosses zero at the information lifespan and
turns negative afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ParameterError, RangeError
from .measures import semantic_kl, shannon_kl
from .prob_core import Dist, GaussianTruth, Grid, TruthFn, eval_truth_family

VARIANTS = ("inaccurate", "accurate", "fuzzy")


def _road_grid() -> Grid:
    return Grid.arange(0.0, 4200.0, 1.0)


@dataclass(frozen=True)
class GpsScenario:
    """Road grid, prior and the motion/prediction parameters of one variant.

    ``predicted_speed=None`` means the speed is extrapolated from the two
    fixes, ``(x1 - x0) / (t1 - t0)``.
    """

    grid: Grid = field(default_factory=_road_grid)
    prior: Dist | None = None
    sigma_device: float = 60.0
    x0: float = 0.0
    t0: float = 0.0
    x1: float = 100.0
    t1: float = 5.0
    actual_speed: float = 23.0
    actual_sd0: float = 30.0
    actual_sd_rate: float = 1.0
    predicted_speed: float | None = None
    predicted_sd_rate: float = 1.0

    def __post_init__(self):
        if self.prior is None:
            object.__setattr__(self, "prior", Dist.uniform(self.grid))
        elif self.prior.grid != self.grid:
            raise ParameterError("prior lives on a different grid")
        if self.t1 <= self.t0:
            raise ParameterError("t1 must be later than t0")
        if self.sigma_device <= 0 or self.actual_sd0 <= 0:
            raise ParameterError("initial spreads must be positive")
        if self.actual_sd_rate < 0 or self.predicted_sd_rate < 0:
            raise ParameterError("spread growth rates must be nonnegative")

    @classmethod
    def variant(cls, name: str, **overrides) -> "GpsScenario":
        """Build one of the three tabulated predictions.

        ``inaccurate``: extrapolated speed (20 m/s), spread 60 + dt.
        ``accurate``: speed 22 m/s, spread 60 + dt.
        ``fuzzy``: extrapolated speed, spread 60 + 2 dt.
        """
        presets = {
            "inaccurate": {},
            "accurate": {"predicted_speed": 22.0},
            "fuzzy": {"predicted_sd_rate": 2.0},
        }
        if name not in presets:
            raise ParameterError(f"unknown variant {name!r}; expected one of {VARIANTS}")
        return cls(**{**presets[name], **overrides})

    @property
    def speed(self) -> float:
        if self.predicted_speed is not None:
            return self.predicted_speed
        return (self.x1 - self.x0) / (self.t1 - self.t0)

    def predicted_sd(self, dt: float) -> float:
        return self.sigma_device + self.predicted_sd_rate * dt

    def actual_mean(self, dt: float) -> float:
        return self.x1 + self.actual_speed * dt

    def actual_sd(self, dt: float) -> float:
        return self.actual_sd0 + self.actual_sd_rate * dt

    def max_dt(self) -> float:
        """Largest delay for which both means stay on the grid."""
        lo, hi = self.grid.points[0], self.grid.points[-1]
        limits = [np.inf]
        for start, v in ((self.x1, self.actual_speed), (self.x1, self.speed)):
            if v > 0:
                limits.append((hi - start) / v)
            elif v < 0:
                limits.append((lo - start) / v)
        return float(min(limits))


@dataclass(frozen=True)
class FreshnessPoint:
    dt: float
    shannon_bits: float
    semantic_bits: float


def extrapolate_position(scenario: GpsScenario, dt: float) -> float:
    """Linear extrapolation ``x1 + speed * dt``."""
    if dt < 0:
        raise ParameterError("dt must be nonnegative")
    return scenario.x1 + scenario.speed * dt


def scenario_at(scenario: GpsScenario, dt: float) -> tuple[TruthFn, Dist]:
    """Prediction truth function and actual-position distribution after ``dt`` seconds."""
    center = extrapolate_position(scenario, dt)
    mean = scenario.actual_mean(dt)
    lo, hi = scenario.grid.points[0], scenario.grid.points[-1]
    for label, value in (("actual mean", mean), ("predicted position", center)):
        if not lo <= value <= hi:
            raise RangeError(f"{label} {value:g} at dt={dt:g} is outside the grid [{lo:g}, {hi:g}]")
    truth = eval_truth_family(GaussianTruth(center, scenario.predicted_sd(dt)), scenario.grid)
    actual = Dist.normal(scenario.grid, mean, scenario.actual_sd(dt))
    return truth, actual


def semantic_bits_at(scenario: GpsScenario, dt: float) -> float:
    truth, actual = scenario_at(scenario, dt)
    return semantic_kl(actual, truth, scenario.prior)


def freshness_curve(scenario: GpsScenario, dt_values) -> list[FreshnessPoint]:
    """Semantic and Shannon information of the prediction at each delay."""
    dt_values = np.asarray(dt_values, dtype=float)
    if np.any(dt_values < 0) or np.any(np.diff(dt_values) <= 0):
        raise ParameterError("dt values must be nonnegative and increasing")
    out = []
    for dt in dt_values:
        truth, actual = scenario_at(scenario, dt)
        out.append(
            FreshnessPoint(
                dt=float(dt),
                shannon_bits=shannon_kl(actual, scenario.prior),
                semantic_bits=semantic_kl(actual, truth, scenario.prior),
            )
        )
    return out


def lifespan(scenario: GpsScenario, dt_max: float, step: float = 1.0) -> float | None:
    """Delay at which semantic information first reaches zero.

    Scans ``0, step, 2 step, ...`` up to ``dt_max`` and bisects the first
    sign change to 1e-3 s.  Returns None when there is no crossing before
    ``dt_max`` or before the scenario's means leave the grid, whichever
    comes first.
    """
    if step <= 0:
        raise ParameterError("step must be positive")
    prev_dt = 0.0
    if semantic_bits_at(scenario, 0.0) <= 0:
        raise ParameterError("semantic information is not positive at dt = 0")
    horizon = min(dt_max, scenario.max_dt())
    n = int(np.floor(horizon / step + 1e-9))
    for k in range(1, n + 1):
        dt = k * step
        val = semantic_bits_at(scenario, dt)
        if val <= 0:
            if val == 0:
                return dt
            return float(
                optimize.bisect(lambda t: semantic_bits_at(scenario, t), prev_dt, dt, xtol=1e-3)
            )
        prev_dt = dt
    return None


def relative_age(scenario: GpsScenario, dt: float) -> float:
    """Percentage of the initial semantic information lost after ``dt``."""
    fresh = semantic_bits_at(scenario, 0.0)
    if fresh <= 0:
        raise ParameterError("semantic information at dt = 0 must be positive")
    return (1.0 - semantic_bits_at(scenario, dt) / fresh) * 100.0


def update_gain(scenario: GpsScenario, dt: float, new_truth: TruthFn, new_actual: Dist) -> float:
    """Semantic information gained by replacing the stale prediction with a new message."""
    if new_truth.grid != scenario.grid or new_actual.grid != scenario.grid:
        raise ParameterError("new message must live on the scenario grid")
    fresh = semantic_kl(new_actual, new_truth, scenario.prior)
    return fresh - semantic_bits_at(scenario, dt)

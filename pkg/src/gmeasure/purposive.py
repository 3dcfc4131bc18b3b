"""Purposive (goal-related) information and SoftMax constraint control.

A goal is either a likelihood ``P(x|theta_j)`` or a truth function
``T(theta_j|x)`` (a distribution constraint function).  Controlling the
distribution of ``x`` toward a truth-function goal along the family

    P(x|theta_j, s) ∝ P(x) T(theta_j|x)**s

trades Shannon information R (control cost) against purposive semantic
information G; ``s = 1`` gives efficiency G/R = 1 and large ``s`` pushes G
toward its ceiling ``log2(1/T(theta_j))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalError, ParameterError, SupportError
from .measures import semantic_kl, shannon_kl
from .prob_core import (
    LN2,
    TRUTH_EPS,
    Dist,
    Grid,
    LogisticTruth,
    TruthFn,
    _check_same_grid,
    eval_truth_family,
    log_truth_family,
    logical_probability,
    semantic_bayes,
)

CONSERVATION_TOL = 1e-9
RATE_FLOOR = 1e-12


def _age_grid() -> Grid:
    return Grid.arange(0.0, 110.0, 1.0)


@dataclass(frozen=True)
class ControlProblem:
    """Prior over ages and a logistic goal; defaults are the death-age example."""

    grid: Grid = field(default_factory=_age_grid)
    prior_mean: float = 50.0
    prior_sd: float = 10.0
    goal_family: LogisticTruth = field(default_factory=lambda: LogisticTruth(0.8, 60.0))
    prior: Dist = field(init=False)
    goal: TruthFn = field(init=False)
    log_goal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        prior = Dist.normal(self.grid, self.prior_mean, self.prior_sd)
        goal = eval_truth_family(self.goal_family, self.grid)
        if np.any(prior.weights <= 0):
            raise ParameterError("prior must be positive on every grid point")
        lp = float(prior.weights @ goal.values)
        if not 0 < lp < 1:
            raise ParameterError(f"goal logical probability {lp} is not inside (0, 1)")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "goal", goal)
        log_goal = log_truth_family(self.goal_family, self.grid)
        log_goal.setflags(write=False)
        object.__setattr__(self, "log_goal", log_goal)

    @property
    def logical_probability(self) -> float:
        return logical_probability(self.goal, self.prior)

    @property
    def max_info(self) -> float:
        """``I_max = log2(1/T(theta_j))``, the ceiling of G."""
        return -float(np.log2(self.logical_probability))


@dataclass(frozen=True)
class ControlPoint:
    s: float | None
    R: float
    G: float
    dbar: float
    result: Dist = field(repr=False)

    @property
    def efficiency(self) -> float | None:
        if self.R <= 0:
            return None
        return self.G / self.R


@dataclass(frozen=True)
class NormalApproxSpec:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise ParameterError("normal approximation needs a positive sd")


@dataclass(frozen=True)
class PointMassComparison:
    x: float
    semantic: float
    shannon: float

    @property
    def efficiency(self) -> float:
        return self.semantic / self.shannon


def purposive_info_likelihood(goal: Dist, actual: Dist, prior: Dist) -> float:
    """Information of control result ``actual`` w.r.t. a likelihood goal, in bits.

    ``sum_i goal(x_i) log2[actual(x_i)/prior(x_i)]``: the goal supplies the
    weights, the actual result the ratio.  Maximal when ``actual == goal``.
    """
    _check_same_grid(goal, actual, prior)
    g, a, p = goal.weights, actual.weights, prior.weights
    if np.any((a > 0) & (p <= 0)):
        raise SupportError("actual distribution has mass where the prior has none")
    pos = g > 0
    if np.any(p[pos] <= 0):
        raise SupportError("goal has mass where the prior has none")
    ratio = np.maximum(a[pos], TRUTH_EPS) / p[pos]
    return float(g[pos] @ np.log(ratio)) / LN2


def purposive_info_truth(actual: Dist, goal: TruthFn, prior: Dist) -> float:
    """Information of ``actual`` w.r.t. a truth-function goal, in bits."""
    return semantic_kl(actual, goal, prior)


def purposive_increment(actual: Dist, goal: TruthFn, prior: Dist) -> float:
    """``sum_i [actual - prior] log2[P(x_i|theta_j)/P(x_i)]``; zero with no control."""
    _check_same_grid(actual, goal, prior)
    target = semantic_bayes(goal, prior)
    pos = prior.weights > 0
    log_ratio = np.zeros(prior.grid.size)
    log_ratio[pos] = np.log(np.maximum(target.weights[pos], TRUTH_EPS) / prior.weights[pos])
    diff = actual.weights - prior.weights
    if np.any((actual.weights > 0) & ~pos):
        raise SupportError("actual distribution has mass where the prior has none")
    return float(diff @ log_ratio) / LN2


def control_distribution(problem: ControlProblem, s: float) -> Dist:
    """SoftMax control result ``P(x) T^s / sum_k P(x_k) T(x_k)^s`` (log-space)."""
    if not np.isfinite(s):
        raise ParameterError("s must be finite")
    logits = np.log(problem.prior.weights) + s * problem.log_goal
    norm = logsumexp(logits)
    if not np.isfinite(norm):
        raise NumericalError("control distribution normaliser vanished")
    w = np.exp(logits - norm)
    return Dist(problem.grid, w / w.sum())


def _evaluate(problem: ControlProblem, result: Dist, s: float | None) -> ControlPoint:
    R = shannon_kl(result, problem.prior)
    G = purposive_info_truth(result, problem.goal, problem.prior)
    dbar = -float(result.weights @ problem.log_goal) / LN2
    if abs(G + dbar - problem.max_info) > CONSERVATION_TOL:
        raise NumericalError(
            f"G + dbar = {G + dbar!r} differs from log2(1/T) = {problem.max_info!r}"
        )
    # KL of numerically identical distributions comes out at roundoff level
    return ControlPoint(s=s, R=R if R > RATE_FLOOR else 0.0, G=G, dbar=dbar, result=result)


def control_point(problem: ControlProblem, s: float) -> ControlPoint:
    """R, G, average distortion and efficiency of the SoftMax control at slope ``s``."""
    return _evaluate(problem, control_distribution(problem, s), s)


def normal_approx_spec(problem: ControlProblem, s: float) -> NormalApproxSpec:
    """Discrete mean and second central moment of the SoftMax control result."""
    d = control_distribution(problem, s)
    return NormalApproxSpec(d.mean(), float(np.sqrt(d.variance())))


def normal_approx_point(problem: ControlProblem, s: float) -> ControlPoint:
    """Same quantities as :func:`control_point` for the moment-matched normal."""
    spec = normal_approx_spec(problem, s)
    return _evaluate(problem, Dist.normal(problem.grid, spec.mean, spec.sd), s)


def point_mass_comparison(problem: ControlProblem, x_star: float) -> PointMassComparison:
    """Deterministic control ``P(x_star) = 1``: semantic vs Shannon information."""
    i = problem.grid.index_of(x_star)
    semantic = float(np.log2(max(problem.goal.values[i], TRUTH_EPS) / problem.logical_probability))
    shannon = -float(np.log2(problem.prior.weights[i]))
    return PointMassComparison(float(problem.grid.points[i]), semantic, shannon)


def point_mass_point(problem: ControlProblem, x_star: float) -> ControlPoint:
    """Point-mass control expressed as a ControlPoint (``s`` is None)."""
    return _evaluate(problem, Dist.point_mass(problem.grid, x_star), None)

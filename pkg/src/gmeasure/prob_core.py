"""P-T probability framework: grids, distributions, truth functions, channels.

Statistical probabilities (``Dist``, ``ShannonChannel``) and logical
probabilities (``TruthFn``, ``SemanticChannel``) live on the same discrete
``Grid``.  The functions here convert between likelihoods, truth functions and
distortion functions.  All arithmetic is in natural log; callers convert to bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import numpy as np
from scipy import optimize
from scipy.special import expit, log_expit

from .errors import (
    DegenerateTruthError,
    FitError,
    ParameterError,
    SupportError,
    ZeroLabelError,
)

# Truth values below this are clamped before taking logs.
TRUTH_EPS = 1e-300
DIST_TOL = 1e-9
LN2 = float(np.log(2.0))


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered support ``x_1 < x_2 < ...`` of the instance variable."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 1 or pts.size < 2:
            raise ParameterError("grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ParameterError("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise ParameterError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def arange(cls, start: float, stop: float, step: float = 1.0) -> "Grid":
        """Inclusive evenly spaced grid ``start, start+step, ..., stop``."""
        if step <= 0:
            raise ParameterError("grid step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return cls(start + step * np.arange(n))

    @property
    def size(self) -> int:
        return self.points.size

    def __len__(self) -> int:
        return self.points.size

    @property
    def spacing(self) -> float | None:
        """Common gap between points, or None if the grid is not uniform."""
        gaps = np.diff(self.points)
        if np.all(np.abs(gaps - gaps[0]) <= 1e-12):
            return float(gaps[0])
        return None

    def index_of(self, x: float, atol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.points - x)))
        if abs(self.points[i] - x) > atol:
            raise ParameterError(f"x={x} is not a grid point")
        return i

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash(self.points.tobytes())


def _check_same_grid(*objs) -> Grid:
    grid = objs[0].grid
    for o in objs[1:]:
        if o.grid is not grid and o.grid != grid:
            raise ParameterError("arguments live on different grids")
    return grid


@dataclass(frozen=True, eq=False)
class Dist:
    """Probability vector over a grid."""

    grid: Grid
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.shape != (self.grid.size,):
            raise ParameterError(
                f"weights have shape {w.shape}, grid has {self.grid.size} points"
            )
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ParameterError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > DIST_TOL:
            raise ParameterError(f"weights sum to {w.sum():.12g}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_unnormalized(cls, grid: Grid, weights) -> "Dist":
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not np.isfinite(total) or total <= 0:
            raise ParameterError("cannot normalise weights with nonpositive total")
        return cls(grid, w / total)

    @classmethod
    def uniform(cls, grid: Grid) -> "Dist":
        return cls(grid, np.full(grid.size, 1.0 / grid.size))

    @classmethod
    def normal(cls, grid: Grid, mean: float, sd: float) -> "Dist":
        """Normal density evaluated pointwise, then renormalised (truncated)."""
        if not sd > 0:
            raise ParameterError("sd must be positive")
        z = (grid.points - mean) / sd
        logw = -0.5 * z * z
        return cls.from_unnormalized(grid, np.exp(logw - logw.max()))

    @classmethod
    def point_mass(cls, grid: Grid, x: float) -> "Dist":
        w = np.zeros(grid.size)
        w[grid.index_of(x)] = 1.0
        return cls(grid, w)

    def mean(self) -> float:
        return float(self.weights @ self.grid.points)

    def variance(self) -> float:
        d = self.grid.points - self.mean()
        return float(self.weights @ (d * d))


@dataclass(frozen=True, eq=False)
class TruthFn:
    """Truth (membership) function ``T(theta_j|x)`` tabulated on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.size,):
            raise ParameterError(
                f"truth values have shape {v.shape}, grid has {self.grid.size} points"
            )
        if not np.all(np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise ParameterError("truth values must lie in [0, 1]")
        if v.max() <= 0:
            raise ParameterError("truth function is identically zero")
        object.__setattr__(self, "values", v)

    @classmethod
    def tautology(cls, grid: Grid) -> "TruthFn":
        return cls(grid, np.ones(grid.size))


@dataclass(frozen=True)
class GaussianTruth:
    center: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterError(f"gaussian sigma must be > 0, got {self.sigma}")
        if not np.isfinite(self.center):
            raise ParameterError("gaussian center must be finite")


@dataclass(frozen=True)
class LogisticTruth:
    slope: float
    midpoint: float

    def __post_init__(self):
        if not np.isfinite(self.slope) or self.slope == 0:
            raise ParameterError(f"logistic slope must be finite and nonzero, got {self.slope}")
        if not np.isfinite(self.midpoint):
            raise ParameterError("logistic midpoint must be finite")


@dataclass(frozen=True)
class TableTruth:
    truth: TruthFn


TruthFamily = Union[GaussianTruth, LogisticTruth, TableTruth]


def eval_truth_family(family: TruthFamily, grid: Grid) -> TruthFn:
    """Evaluate a parametric or tabulated truth family pointwise on ``grid``."""
    x = grid.points
    if isinstance(family, GaussianTruth):
        values = np.exp(-((x - family.center) ** 2) / (2.0 * family.sigma**2))
    elif isinstance(family, LogisticTruth):
        values = expit(family.slope * (x - family.midpoint))
    elif isinstance(family, TableTruth):
        if family.truth.grid != grid:
            raise ParameterError("tabulated truth function lives on another grid")
        return family.truth
    else:
        raise ParameterError(f"unknown truth family {family!r}")
    return TruthFn(grid, values)


def log_truth_family(family: TruthFamily, grid: Grid) -> np.ndarray:
    """Natural log of a truth family on ``grid`` without rounding near 0 or 1.

    A logistic goal evaluated as a value saturates to exactly 1 well before
    its log does, which matters once it is raised to a large power.
    Tabulated truth is clamped at ``TRUTH_EPS``.
    """
    x = grid.points
    if isinstance(family, GaussianTruth):
        return -((x - family.center) ** 2) / (2.0 * family.sigma**2)
    if isinstance(family, LogisticTruth):
        return log_expit(family.slope * (x - family.midpoint))
    return np.log(np.maximum(eval_truth_family(family, grid).values, TRUTH_EPS))


@dataclass(frozen=True, eq=False)
class ShannonChannel:
    """Row-stochastic matrix ``P(y|x)``; rows indexed by grid points."""

    grid: Grid
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != self.grid.size or m.shape[1] < 1:
            raise ParameterError(
                f"channel matrix must be ({self.grid.size}, n_labels), got {m.shape}"
            )
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ParameterError("channel entries must be finite and nonnegative")
        bad = np.abs(m.sum(axis=1) - 1.0) > DIST_TOL
        if np.any(bad):
            raise ParameterError(f"channel rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        object.__setattr__(self, "matrix", m)

    @property
    def n_labels(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class SemanticChannel:
    """One truth function per label, sharing a grid."""

    truth_fns: tuple

    def __post_init__(self):
        fns = tuple(self.truth_fns)
        if not fns:
            raise ParameterError("semantic channel needs at least one truth function")
        _check_same_grid(*fns)
        object.__setattr__(self, "truth_fns", fns)

    @classmethod
    def from_families(cls, families: Sequence[TruthFamily], grid: Grid) -> "SemanticChannel":
        return cls(tuple(eval_truth_family(f, grid) for f in families))

    @property
    def grid(self) -> Grid:
        return self.truth_fns[0].grid

    @property
    def n_labels(self) -> int:
        return len(self.truth_fns)

    @property
    def matrix(self) -> np.ndarray:
        """Truth values as an ``(n_x, n_labels)`` array."""
        return np.column_stack([t.values for t in self.truth_fns])


def logical_probability(T: TruthFn, P: Dist) -> float:
    """``T(theta_j) = sum_i P(x_i) T(theta_j|x_i)``."""
    _check_same_grid(T, P)
    lp = float(P.weights @ T.values)
    if lp <= 0:
        raise DegenerateTruthError("truth function is zero wherever the prior is positive")
    return lp


def semantic_bayes(T: TruthFn, P: Dist) -> Dist:
    """Semantic Bayes prediction ``P(x|theta_j) = P(x) T(theta_j|x) / T(theta_j)``."""
    lp = logical_probability(T, P)
    w = P.weights * T.values / lp
    # renormalise away roundoff only; the sum is exactly 1 analytically
    return Dist(P.grid, w / w.sum())


def truth_from_likelihood(L: Dist, P: Dist) -> TruthFn:
    """Invert semantic Bayes: truth function proportional to ``L/P`` with max 1."""
    _check_same_grid(L, P)
    lw, pw = L.weights, P.weights
    if np.any((lw > 0) & (pw <= 0)):
        raise SupportError("likelihood is positive where the prior is zero")
    ratio = np.zeros_like(lw)
    pos = pw > 0
    ratio[pos] = lw[pos] / pw[pos]
    values = ratio / ratio.max()
    values[int(np.argmax(ratio))] = 1.0
    return TruthFn(P.grid, values)


def optimize_truth_from_channel(channel: ShannonChannel, P: Dist, j: int) -> TruthFn:
    """Matched truth function of label ``j``: ``P(y_j|x)`` divided by its maximum."""
    _check_same_grid(channel, P)
    if not 0 <= j < channel.n_labels:
        raise ParameterError(f"label index {j} out of range")
    col = channel.matrix[:, j]
    if float(P.weights @ col) <= 0:
        raise ZeroLabelError(f"label {j} is never emitted")
    # the P(y_j) factor cancels in the max-normalisation
    values = col / col.max()
    values[int(np.argmax(col))] = 1.0
    return TruthFn(P.grid, values)


def truth_to_distortion(T: TruthFn | np.ndarray) -> np.ndarray:
    """``d(x) = log(1/T(x))`` in nats, with T clamped at ``TRUTH_EPS``."""
    values = T.values if isinstance(T, TruthFn) else np.asarray(T, dtype=float)
    return -np.log(np.maximum(values, TRUTH_EPS))


def distortion_to_truth(d, grid: Grid | None = None) -> TruthFn | np.ndarray:
    """``T(x) = exp(-d(x))``; returns a TruthFn when a grid is supplied."""
    values = np.exp(-np.asarray(d, dtype=float))
    if grid is None:
        return values
    return TruthFn(grid, values)


def distortion_truth_convert(
    value, direction: Literal["truth_to_distortion", "distortion_to_truth"], grid: Grid | None = None
):
    if direction == "truth_to_distortion":
        return truth_to_distortion(value)
    if direction == "distortion_to_truth":
        return distortion_to_truth(value, grid)
    raise ParameterError(f"unknown direction {direction!r}")


# --- parametric fitting -------------------------------------------------------


def semantic_kl_nats(sample: np.ndarray, truth_values: np.ndarray, prior: np.ndarray) -> float:
    """Sample-weighted log-normalised truth, in nats. Zero-weight terms are dropped."""
    lp = float(prior @ truth_values)
    if lp <= 0:
        return -np.inf
    pos = sample > 0
    logt = np.log(np.maximum(truth_values[pos], TRUTH_EPS))
    return float(sample[pos] @ logt - np.log(lp))


@dataclass
class FitResult:
    family: TruthFamily
    objective_nats: float
    evaluations: int = field(default=0)

    @property
    def objective_bits(self) -> float:
        return self.objective_nats / LN2


def _scan_and_refine(objective, axis0, axis1, bounds1, n_eval=0):
    """Maximise ``objective(a, b)`` by a grid scan then repeated Nelder-Mead."""
    lo1, hi1 = bounds1
    best_val, best_at = -np.inf, None
    for a in axis0:
        for b in axis1:
            val = objective(a, b)
            n_eval += 1
            if val > best_val:
                best_val, best_at = val, (a, b)
    if best_at is None or not np.isfinite(best_val):
        raise FitError("objective is not finite anywhere on the scan")

    def neg(theta):
        return -objective(theta[0], float(np.clip(theta[1], lo1, hi1)))

    theta = np.array(best_at, dtype=float)
    step = np.array([axis0[1] - axis0[0], axis1[1] - axis1[0]])
    current = -best_val
    for _ in range(50):
        simplex = np.array([theta, theta + [step[0], 0.0], theta + [0.0, step[1]]])
        res = optimize.minimize(
            neg,
            theta,
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-10, "maxiter": 20000, "initial_simplex": simplex},
        )
        n_eval += res.nfev
        if not np.isfinite(res.fun):
            raise FitError("refinement left the finite region of the objective")
        gain = current - res.fun
        if res.fun < current:
            theta, current = res.x, res.fun
        if gain < 1e-10:
            break
        step = step / 4.0
    theta[1] = np.clip(theta[1], lo1, hi1)
    return theta, -float(current), n_eval


def fit_truth_parametric(
    sample: Dist,
    P: Dist,
    kind: Literal["gaussian", "logistic"] = "gaussian",
    n_scan: int = 41,
) -> FitResult:
    """Fit a smooth truth function to an (unsmooth) sample distribution ``P(x|y_j)``.

    Maximises ``sum_i sample(x_i) log[T(x_i)/T(theta_j)]`` over the family's two
    parameters: a coarse scan (location linear, scale logarithmic), then
    Nelder-Mead restarts until the objective improves by less than 1e-10 nats.

    Parameters
    ----------
    sample : Dist
        Sampling distribution of x given the label.
    P : Dist
        Prior over the same grid.
    kind : {"gaussian", "logistic"}
        Family to fit. Logistic fits try both slope signs.
    n_scan : int
        Points per axis of the coarse scan.
    """
    _check_same_grid(sample, P)
    x = P.grid.points
    s, p = sample.weights, P.weights
    span = float(x[-1] - x[0])
    min_gap = float(np.diff(x).min())
    locations = np.linspace(x[0], x[-1], n_scan)

    if kind == "gaussian":
        # sharpest member resolves one cell, flattest is nearly the tautology
        bounds = (np.log(min_gap / 4.0), np.log(100.0 * span))

        def objective(c, log_sigma):
            sigma = np.exp(log_sigma)
            return semantic_kl_nats(s, np.exp(-((x - c) ** 2) / (2.0 * sigma * sigma)), p)

        theta, val, n = _scan_and_refine(objective, locations, np.linspace(*bounds, n_scan), bounds)
        return FitResult(GaussianTruth(float(theta[0]), float(np.exp(theta[1]))), val, n)

    if kind == "logistic":
        bounds = (np.log(1e-4 / span), np.log(50.0 / min_gap))
        best = None
        n_total = 0
        for sign in (1.0, -1.0):

            def objective(c, log_k, sign=sign):
                return semantic_kl_nats(s, expit(sign * np.exp(log_k) * (x - c)), p)

            theta, val, n = _scan_and_refine(objective, locations, np.linspace(*bounds, n_scan), bounds)
            n_total += n
            if best is None or val > best[1]:
                best = (LogisticTruth(float(sign * np.exp(theta[1])), float(theta[0])), val)
        return FitResult(best[0], best[1], n_total)

    raise ParameterError(f"unknown family kind {kind!r}")

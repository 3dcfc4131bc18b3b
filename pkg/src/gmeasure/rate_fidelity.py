"""Information rate-fidelity function R(G).

R(G) is the minimum Shannon mutual information over channels ``P(y|x)``
whose semantic mutual information is at least G.  For each slope
``s = dR/dG`` the optimum has the SoftMax form

    P(y_j|x_i) = P(y_j) m_ij**s / lambda_i,   m_ij = T(theta_j|x_i) / T(theta_j)

and the label prior is found by alternating minimisation, in the same way
Blahut-Arimoto does for R(D).  Negative ``s`` traces the left branch of the
bowl-shaped curve.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InfeasibleError, NumericalError, ParameterError
from .prob_core import LN2, TRUTH_EPS, Dist, GaussianTruth, Grid, SemanticChannel, ShannonChannel

logger = logging.getLogger(__name__)

# label-prior mass below which a label whose multiplier says it is leaving is dropped
PRUNE_MASS = 1e-9
# multiplicative steps between attempts at a Newton finish
POLISH_EVERY = 25


@dataclass(frozen=True, eq=False)
class RGPoint:
    s: float
    R: float
    G: float
    channel: ShannonChannel
    label_prior: np.ndarray
    iterations: int
    converged: bool
    # P(x|y_j) per label, columns of an (n_x, n_labels) array
    posteriors: np.ndarray = field(repr=False, default=None)

    @property
    def efficiency(self) -> float | None:
        """G/R, or None at R = 0 where it is undefined."""
        if self.R <= 0:
            return None
        return self.G / self.R


@dataclass(frozen=True)
class RGCurve:
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(sorted(self.points, key=lambda p: p.s)))

    @property
    def s(self) -> np.ndarray:
        return np.array([p.s for p in self.points])

    @property
    def R(self) -> np.ndarray:
        return np.array([p.R for p in self.points])

    @property
    def G(self) -> np.ndarray:
        return np.array([p.G for p in self.points])

    @property
    def all_converged(self) -> bool:
        return all(p.converged for p in self.points)

    def branch(self, sign: int) -> "RGCurve":
        """Points with ``s > 0`` (sign=+1) or ``s < 0`` (sign=-1)."""
        return RGCurve(tuple(p for p in self.points if np.sign(p.s) == sign))

    def second_differences(self) -> np.ndarray:
        """Second divided differences of R as a function of G (per-branch use)."""
        return second_divided_differences(self.G, self.R)

    def shape_violations(self, tol: float = 1e-6) -> list[str]:
        """Describe monotonicity/convexity violations on each branch separately."""
        problems = []
        for sign, name in ((1, "s>0"), (-1, "s<0")):
            br = self.branch(sign)
            if len(br.points) < 2:
                continue
            dG, dR = np.diff(br.G), np.diff(br.R)
            if sign > 0 and (np.any(dG < -1e-9) or np.any(dR < -1e-9)):
                problems.append(f"{name}: R or G decreases with s")
            if len(br.points) >= 3 and np.any(br.second_differences() < -tol):
                problems.append(f"{name}: R(G) not convex")
        return problems


def second_divided_differences(g: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Second divided differences ``2[(r3-r2)/(g3-g2) - (r2-r1)/(g2-g1)]/(g3-g1)``.

    Sorted by ``g``; near-coincident abscissae are skipped.
    """
    order = np.argsort(g)
    g, r = np.asarray(g)[order], np.asarray(r)[order]
    keep = np.concatenate([[True], np.diff(g) > 1e-9])
    g, r = g[keep], r[keep]
    if g.size < 3:
        return np.empty(0)
    slopes = np.diff(r) / np.diff(g)
    return 2.0 * np.diff(slopes) / (g[2:] - g[:-2])


def log_m_matrix(P: Dist, sem: SemanticChannel) -> np.ndarray:
    """``log m_ij = log T(theta_j|x_i) - log T(theta_j)`` with truth clamped at 1e-300."""
    truth = sem.matrix
    logical = P.weights @ truth
    if np.any(logical <= 0):
        raise NumericalError("a label has zero logical probability")
    return np.log(np.maximum(truth, TRUTH_EPS)) - np.log(logical)[None, :]


def channel_step(s: float, label_prior, m) -> tuple[np.ndarray, np.ndarray]:
    """One SoftMax channel update.

    Parameters
    ----------
    s : float
        Slope parameter.
    label_prior : array_like
        ``P(y_j)``, length n_labels.
    m : array_like
        Positive matrix ``m_ij`` of shape ``(n_x, n_labels)``.

    Returns
    -------
    channel : ndarray
        ``P(y_j|x_i) = P(y_j) m_ij^s / lambda_i``, rows summing to 1.
    lambdas : ndarray
        ``lambda_i = sum_j P(y_j) m_ij^s``.
    """
    m = np.asarray(m, dtype=float)
    if np.any(m <= 0):
        raise ParameterError("m_ij must be positive (clamp truth values first)")
    channel, log_lam = _channel_step_log(s, np.asarray(label_prior, dtype=float), np.log(m))
    return channel, np.exp(log_lam)


def _channel_step_log(s, prior, log_m):
    with np.errstate(divide="ignore"):
        log_q = np.log(prior)
    logits = log_q[None, :] + s * log_m
    log_lam = logsumexp(logits, axis=1)
    if not np.all(np.isfinite(log_lam)):
        raise NumericalError("lambda_i vanished for some x_i")
    channel = np.exp(logits - log_lam[:, None])
    channel /= channel.sum(axis=1, keepdims=True)
    return channel, log_lam


def _newton_polish(q, A, px, tol, max_steps=50):
    """Finish the label-prior search with Newton steps on the current support.

    The prior maximises the concave ``f(q) = sum_i P_i log sum_j q_j A_ij`` over
    the simplex, and the multiplicative update is its fixed-point iteration.
    Near a label entering or leaving the support that iteration slows to a
    crawl, while Newton on the active set converges in a handful of steps.
    Labels driven to zero are removed.  Returns the polished prior when the
    KKT gap is within ``tol``; otherwise None, and the caller keeps iterating.
    """
    q = q.copy()
    for _ in range(max_steps):
        lam = A @ q
        if np.any(lam <= 0):
            return None
        c = (px / lam) @ A
        if float(np.log(c.max())) <= tol:
            return q
        act = np.flatnonzero(q > 0)
        if act.size == 1:
            return None
        B = A[:, act] / lam[:, None]
        H = -(B.T * px) @ B
        k = act.size
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = H
        kkt[:k, k] = kkt[k, :k] = 1.0
        rhs = np.concatenate([-c[act], [0.0]])
        try:
            d = np.linalg.solve(kkt, rhs)[:k]
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(d)):
            return None
        f0 = float(px @ np.log(lam))
        qa = q[act]
        neg = d < 0
        t_max = float(np.min(-qa[neg] / d[neg])) if neg.any() else np.inf
        t = min(1.0, t_max)
        while t > 1e-12:
            trial = q.copy()
            trial[act] = np.maximum(qa + t * d, 0.0)
            if t == t_max:
                # the step lands on a face: the blocking label leaves the support
                trial[act[np.argmin(np.where(neg, -qa / np.where(neg, d, 1.0), np.inf))]] = 0.0
            trial /= trial.sum()
            new_lam = A @ trial
            if np.all(new_lam > 0) and float(px @ np.log(new_lam)) >= f0 - 1e-15:
                break
            t *= 0.5
        else:
            return None
        q = trial
    return None


def _single_label_point(s, P, log_m) -> RGPoint:
    # P(y_j)=1: the control posterior P(x) m^s / sum P m^s carries all the information
    logits = np.log(np.maximum(P.weights, TRUTH_EPS)) + s * log_m[:, 0]
    logits[P.weights <= 0] = -np.inf
    post = np.exp(logits - logsumexp(logits))
    pos = post > 0
    R = float(post[pos] @ np.log(post[pos] / P.weights[pos])) / LN2
    G = float(post @ log_m[:, 0]) / LN2
    return RGPoint(
        s=float(s),
        R=R if R > 0 else 0.0,
        G=G,
        channel=ShannonChannel(P.grid, np.ones((P.grid.size, 1))),
        label_prior=np.ones(1),
        iterations=0,
        converged=True,
        posteriors=post[:, None],
    )


def mmi_solve(
    s: float,
    P: Dist,
    sem: SemanticChannel,
    init_prior=None,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> RGPoint:
    """Solve for the R(G) point with slope ``s`` by the MMI iteration.

    Alternates the SoftMax channel step with the label-prior update
    ``P(y_j) <- sum_i P(x_i) P(y_j|x_i)``.  The run stops once
    ``log max_j c_j <= tol``, where ``c_j = sum_i P(x_i) m_ij^s / lambda_i`` is
    the update multiplier; that quantity bounds the remaining gap in
    ``R - sG`` (nats).  Every few sweeps a Newton finish on the current
    support is tried, which rescues the slow approach near slopes where a
    label enters or leaves the optimum.  Non-convergence is reported through ``converged=False``, not raised.

    With a single label the prior update is a no-op; the returned R is the
    KL information of the induced posterior ``P(x) m^s / sum P m^s``.
    """
    if not np.isfinite(s):
        raise ParameterError("s must be finite")
    if P.grid != sem.grid:
        raise ParameterError("prior and semantic channel live on different grids")
    log_m = log_m_matrix(P, sem)
    n_labels = sem.n_labels
    if n_labels == 1:
        return _single_label_point(s, P, log_m)

    if init_prior is None:
        q = np.full(n_labels, 1.0 / n_labels)
    else:
        q = np.asarray(init_prior, dtype=float)
        if q.shape != (n_labels,) or np.any(q <= 0) or abs(q.sum() - 1.0) > 1e-9:
            raise ParameterError("init_prior must be a strictly positive distribution over labels")
        q = q / q.sum()

    px = P.weights
    log_px = np.log(np.maximum(px, TRUTH_EPS))
    log_px[px <= 0] = -np.inf
    # rows of m^s rescaled by their maximum: the optimal prior is unchanged
    logits = s * log_m
    A = np.exp(logits - logits.max(axis=1, keepdims=True))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        channel, log_lam = _channel_step_log(s, q, log_m)
        # c_j = sum_i P(x_i) m_ij^s / lambda_i; the update is q_j <- q_j c_j and at the
        # optimum c_j <= 1 with equality on the support of q
        log_c = logsumexp(log_px[:, None] + s * log_m - log_lam[:, None], axis=0)
        q = px @ channel
        # log max_j c_j bounds how far R - sG is above its minimum (in nats)
        if float(log_c.max()) <= tol:
            converged = True
            break
        # a label that is leaving (c_j < 1) decays only geometrically; drop it
        # once negligible, and bring it back if it turns out to be wanted
        leaving = (q < PRUNE_MASS) & (q > 0) & (log_c < 0)
        wanted = (q == 0) & (log_c > tol)
        if leaving.any() or wanted.any():
            q = np.where(leaving, 0.0, q)
            q = np.where(wanted, PRUNE_MASS, q)
            q = q / q.sum()
        if it % POLISH_EVERY == 0:
            polished = _newton_polish(q, A, px, tol)
            if polished is not None:
                q = polished
                converged = True
                break
    if not converged:
        logger.warning("mmi_solve did not converge at s=%g after %d iterations", s, max_iter)

    # final channel against the settled prior so R, G and the channel agree
    channel, _ = _channel_step_log(s, q, log_m)
    G_nat = float(px @ np.sum(channel * log_m, axis=1))
    q = px @ channel
    # the s*G - sum P log(lambda) form exceeds the channel's own mutual information
    # by KL(q_new || q_old); evaluate the latter directly so it is exact
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(channel) - np.log(q)[None, :]
    pos = channel > 0
    R_nat = float(np.sum((px[:, None] * channel)[pos] * log_ratio[pos]))
    with np.errstate(invalid="ignore", divide="ignore"):
        posteriors = np.where(q > 0, px[:, None] * channel / q[None, :], 0.0)
    return RGPoint(
        s=float(s),
        R=R_nat / LN2 if R_nat > 0 else 0.0,
        G=G_nat / LN2,
        channel=ShannonChannel(P.grid, channel),
        label_prior=q,
        iterations=it,
        converged=converged,
        posteriors=posteriors,
    )


def rg_curve(P: Dist, sem: SemanticChannel, s_values, **solve_kwargs) -> RGCurve:
    """Sweep ``mmi_solve`` over ``s_values`` and check the bowl shape per branch."""
    s_values = [float(s) for s in s_values]
    if not all(np.isfinite(s_values)):
        raise ParameterError("s values must be finite")
    curve = RGCurve(tuple(mmi_solve(s, P, sem, **solve_kwargs) for s in s_values))
    for problem in curve.shape_violations():
        logger.warning("R(G) curve shape: %s", problem)
    return curve


def max_semantic_info(P: Dist, sem: SemanticChannel) -> float:
    """Supremum of SMI over all channels: each x sends its most informative label."""
    log_m = log_m_matrix(P, sem)
    return float(P.weights @ log_m.max(axis=1)) / LN2


def brute_force_rg(
    P: Dist,
    sem: SemanticChannel,
    G_target: float,
    resolution: float = 1e-3,
    max_candidates: int = 50_000_000,
) -> float:
    """Exhaustive-search oracle for R(G) on tiny instances (|U| <= 3, |V| <= 2).

    Every row of the channel ranges over ``{0, r, 2r, ..., 1}``.  Returns the
    smallest Shannon mutual information (bits) among channels whose semantic
    mutual information is at least ``G_target - r/2``.
    """
    n_x, n_y = P.grid.size, sem.n_labels
    if n_x > 3 or n_y > 2:
        raise ParameterError("brute force is limited to |U| <= 3 and |V| <= 2")
    px = P.weights
    log_m = log_m_matrix(P, sem)
    if n_y == 1:
        G = float(px @ log_m[:, 0]) / LN2
        if G < G_target - resolution / 2:
            raise InfeasibleError(f"G_target={G_target} exceeds the achievable {G}")
        return 0.0

    steps = int(round(1.0 / resolution))
    if (steps + 1) ** n_x > max_candidates:
        raise ParameterError("too many candidate channels; use a coarser resolution")
    a = np.linspace(0.0, 1.0, steps + 1)  # P(y_0|x_i)
    slack = G_target - resolution / 2

    def xlogx_over(p, q):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(p > 0, p * np.log(p / q), 0.0)

    best = np.inf
    # loop over all but the last row, vectorise the last
    for head in itertools.product(range(steps + 1), repeat=n_x - 1):
        rows = [a[k] for k in head]
        c0 = np.stack(np.broadcast_arrays(*[np.full_like(a, r) for r in rows], a))  # (n_x, K)
        c1 = 1.0 - c0
        G = (px[:, None] * (c0 * log_m[:, [0]] + c1 * log_m[:, [1]])).sum(axis=0) / LN2
        q0 = px @ c0
        q1 = 1.0 - q0
        R = (px[:, None] * (xlogx_over(c0, q0[None, :]) + xlogx_over(c1, q1[None, :]))).sum(axis=0) / LN2
        feasible = G >= slack
        if np.any(feasible):
            best = min(best, float(R[feasible].min()))
    if not np.isfinite(best):
        raise InfeasibleError(
            f"G_target={G_target} exceeds the achievable {max_semantic_info(P, sem)}"
        )
    return best if best > 0 else 0.0


def binary_demo_instance() -> tuple[Dist, SemanticChannel]:
    """Two-point source (0.6, 0.4) with two overlapping Gaussian truth functions."""
    grid = Grid([0.0, 1.0])
    prior = Dist(grid, [0.6, 0.4])
    sem = SemanticChannel.from_families([GaussianTruth(0.0, 0.8), GaussianTruth(1.0, 0.8)], grid)
    return prior, sem

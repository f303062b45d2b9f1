"""Chance-constrained adjustment of the control sampling distribution.

Given a nominal per-step Gaussian over controls, find the closest
(mean, diagonal std) such that sampled controls satisfy every half-plane
safety constraint and the control bounds with the required probabilities.
With a diagonal covariance and constraints acting on the linear-velocity
coordinate only, every chance constraint is linear in (mean, std), so the
problem is solved exactly as a small LP.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .dynamics import ControlBounds, ControlInput, NoiseModel
from .lp import OPTIMAL, solve_lp
from .orca import HalfPlaneConstraint

EXACT = "exact"
RELAXED_VARIANCE = "relaxed_variance"
INFEASIBLE_FALLBACK = "infeasible_fallback"

_FEAS_TOL = 1e-9
_STD_NORMAL = NormalDist()


def inv_normal_cdf(p: float) -> float:
    """Quantile of the standard normal distribution."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return _STD_NORMAL.inv_cdf(p)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass
class GaussianControl:
    """Diagonal Gaussian over one control: mean plus per-coordinate std."""

    mean: ControlInput
    std: np.ndarray

    def __post_init__(self):
        self.std = np.asarray(self.std, dtype=float)
        if self.std.shape != (2,) or np.any(self.std < 0):
            raise ValueError("std must be two nonnegative deviations")

    @property
    def mean_array(self) -> np.ndarray:
        return self.mean.as_array()


@dataclass
class SafetyLevels:
    delta_u: float = 0.95
    delta_nu: float = 0.95

    def __post_init__(self):
        for name in ("delta_u", "delta_nu"):
            val = getattr(self, name)
            if not 0.5 < val < 1.0:
                raise ValueError(f"{name} must lie in (0.5, 1), got {val}")


@dataclass
class ProjectionResult:
    adjusted: GaussianControl
    status: str
    max_violation: float


def _chance_rows(constraints, bounds, z_u, z_nu, sigma_diag):
    """LHS coefficients over (u_v, u_w, s_v, s_w) and RHS of every chance row.

    Safety rows carry the execution-noise margin on the RHS; the four bound
    rows keep the Gaussian inside the control box at level delta_u.
    """
    rows = []
    rhs = []
    for c in constraints:
        a = c.a
        margin = z_nu * math.sqrt(float(a @ (sigma_diag * a)))
        rows.append([a[0], a[1], z_u * abs(a[0]), 0.0])
        rhs.append(c.b - margin)
    rows.extend([
        [1.0, 0.0, z_u, 0.0],
        [-1.0, 0.0, z_u, 0.0],
        [0.0, 1.0, 0.0, z_u],
        [0.0, -1.0, 0.0, z_u],
    ])
    rhs.extend([bounds.v_max, -bounds.v_min, bounds.w_max, -bounds.w_min])
    return np.asarray(rows), np.asarray(rhs)


def _row_violations(rows, rhs, u, s):
    point = np.concatenate([u, s])
    return rows @ point - rhs


def project(nominal: GaussianControl, exec_noise: NoiseModel,
            constraints: list[HalfPlaneConstraint], bounds: ControlBounds,
            levels: SafetyLevels, std_floor=None) -> ProjectionResult:
    """Smallest L1 adjustment of (mean, std) meeting all chance constraints.

    Never raises: when even the mean alone cannot satisfy the safety rows,
    the std collapses to zero and the mean minimizes the largest violation
    (ties broken by staying closest to the nominal mean).

    `std_floor` (optional, per coordinate, capped at the nominal std) keeps
    the adjusted deviations from collapsing to zero; it is dropped whenever
    honoring it would make the safety rows infeasible. Receding-horizon
    callers use it to preserve sampling diversity: without it the bound rows
    drive the std of a bound-saturated mean to zero, freezing the sampler.
    """
    z_u = inv_normal_cdf(levels.delta_u)
    z_nu = inv_normal_cdf(levels.delta_nu)
    sigma_diag = exec_noise.cov_diag
    u_nom = nominal.mean_array
    s_nom = nominal.std
    floor = np.zeros(2) if std_floor is None else \
        np.minimum(np.asarray(std_floor, dtype=float), s_nom)

    rows, rhs = _chance_rows(constraints, bounds, z_u, z_nu, sigma_diag)
    viol = _row_violations(rows, rhs, u_nom, s_nom)
    if np.all(viol <= _FEAS_TOL):
        return ProjectionResult(nominal, EXACT, float(max(viol.max(), 0.0)))

    n_safety = len(constraints)
    # Drop safety rows that cannot bind anywhere in the search box
    # (mean within bounds, std at most nominal): they never change the optimum.
    keep = []
    for i in range(n_safety):
        worst = (max(rows[i, 0] * bounds.v_min, rows[i, 0] * bounds.v_max)
                 + max(rows[i, 1] * bounds.w_min, rows[i, 1] * bounds.w_max)
                 + rows[i, 2] * s_nom[0] + rows[i, 3] * s_nom[1])
        if worst > rhs[i] - 1e-12:
            keep.append(i)
    active = rows[keep + list(range(n_safety, len(rows)))]
    active_rhs = rhs[keep + list(range(n_safety, len(rhs)))]

    if not keep and z_u > 1.0:
        # Only the bound rows can bind. The L1 optimum then keeps the mean
        # (moving it buys back std at rate 1/z_u < 1 per unit cost) and
        # shrinks each deviation to the largest value the box allows; the
        # floor, when present, pushes the mean inward instead.
        lo, hi = bounds.low, bounds.high
        s_fit = np.minimum(hi - u_nom, u_nom - lo) / z_u
        s_hat = np.clip(np.minimum(np.maximum(s_fit, floor), s_nom), 0.0, None)
        u_hat = np.clip(u_nom, lo + z_u * s_hat, hi - z_u * s_hat)
        viol = _row_violations(rows, rhs, u_hat, s_hat)
        status = EXACT if np.all(s_hat >= s_nom - 1e-9) else RELAXED_VARIANCE
        adjusted = GaussianControl(ControlInput(u_hat[0], u_hat[1]), s_hat)
        return ProjectionResult(adjusted, status, float(max(viol.max(), 0.0)))

    solved = None
    if np.any(floor > 0):
        solved = _solve_projection_lp(active, active_rhs, u_nom, s_nom, floor)
    if solved is None:
        solved = _solve_projection_lp(active, active_rhs, u_nom, s_nom)
    if solved is not None:
        u_hat, s_hat = solved
        viol = _row_violations(rows, rhs, u_hat, s_hat)
        max_violation = float(max(viol.max(), 0.0))
        status = EXACT if np.all(s_hat >= s_nom - 1e-9) else RELAXED_VARIANCE
        adjusted = GaussianControl(ControlInput(u_hat[0], u_hat[1]), s_hat)
        return ProjectionResult(adjusted, status, max_violation)

    u_hat, worst = _least_violation_mean(active, active_rhs, u_nom, bounds)
    adjusted = GaussianControl(ControlInput(u_hat[0], u_hat[1]), np.zeros(2))
    return ProjectionResult(adjusted, INFEASIBLE_FALLBACK, worst)


def _solve_projection_lp(rows, rhs, u_nom, s_nom, floor=None):
    """LP over x = (uv+, uv-, uw+, uw-, sv, sw, ev, ew, fv, fw).

    e/f are epigraph variables for |u - u_nom| and |s - s_nom|; returns
    (u, s) or None when infeasible.
    """
    n = 10
    A = []
    b = []
    for row, r in zip(rows, rhs):
        A.append([row[0], -row[0], row[1], -row[1], row[2], row[3],
                  0.0, 0.0, 0.0, 0.0])
        b.append(r)
    if floor is not None:
        A.append([0, 0, 0, 0, -1, 0, 0, 0, 0, 0]); b.append(-floor[0])
        A.append([0, 0, 0, 0, 0, -1, 0, 0, 0, 0]); b.append(-floor[1])
    # |u - u_nom| <= e
    A.append([1, -1, 0, 0, 0, 0, -1, 0, 0, 0]); b.append(u_nom[0])
    A.append([-1, 1, 0, 0, 0, 0, -1, 0, 0, 0]); b.append(-u_nom[0])
    A.append([0, 0, 1, -1, 0, 0, 0, -1, 0, 0]); b.append(u_nom[1])
    A.append([0, 0, -1, 1, 0, 0, 0, -1, 0, 0]); b.append(-u_nom[1])
    # |s - s_nom| <= f
    A.append([0, 0, 0, 0, 1, 0, 0, 0, -1, 0]); b.append(s_nom[0])
    A.append([0, 0, 0, 0, -1, 0, 0, 0, -1, 0]); b.append(-s_nom[0])
    A.append([0, 0, 0, 0, 0, 1, 0, 0, 0, -1]); b.append(s_nom[1])
    A.append([0, 0, 0, 0, 0, -1, 0, 0, 0, -1]); b.append(-s_nom[1])
    c = np.zeros(n)
    c[6:] = 1.0
    status, x, _ = solve_lp(c, np.asarray(A, dtype=float), np.asarray(b, dtype=float))
    if status != OPTIMAL:
        return None
    u_hat = np.array([x[0] - x[1], x[2] - x[3]])
    s_hat = np.maximum(np.array([x[4], x[5]]), 0.0)
    return u_hat, s_hat


def _least_violation_mean(rows, rhs, u_nom, bounds):
    """Mean-only fallback: minimize the worst safety violation at std = 0,
    then, among minimizers, stay L1-closest to the nominal mean."""
    # Stage 1: x = (uv+, uv-, uw+, uw-, t), minimize t.
    A = []
    b = []
    for row, r in zip(rows, rhs):
        A.append([row[0], -row[0], row[1], -row[1], -1.0])
        b.append(r)
    A.append([1, -1, 0, 0, 0]); b.append(bounds.v_max)
    A.append([-1, 1, 0, 0, 0]); b.append(-bounds.v_min)
    A.append([0, 0, 1, -1, 0]); b.append(bounds.w_max)
    A.append([0, 0, -1, 1, 0]); b.append(-bounds.w_min)
    c = np.array([0.0, 0.0, 0.0, 0.0, 1.0])
    status, x, t_star = solve_lp(c, np.asarray(A, dtype=float), np.asarray(b, dtype=float))
    if status != OPTIMAL:  # cannot happen: box is nonempty, t unbounded above
        mid = np.array([(bounds.v_min + bounds.v_max) / 2,
                        (bounds.w_min + bounds.w_max) / 2])
        worst = float(np.max(_row_violations(rows, rhs, mid, np.zeros(2)), initial=0.0))
        return mid, worst

    # Stage 2: minimize |u - u_nom| subject to violations <= t*.
    A2 = []
    b2 = []
    for row, r in zip(rows, rhs):
        A2.append([row[0], -row[0], row[1], -row[1], 0.0, 0.0])
        b2.append(r + t_star + 1e-9)
    A2.append([1, -1, 0, 0, 0, 0]); b2.append(bounds.v_max)
    A2.append([-1, 1, 0, 0, 0, 0]); b2.append(-bounds.v_min)
    A2.append([0, 0, 1, -1, 0, 0]); b2.append(bounds.w_max)
    A2.append([0, 0, -1, 1, 0, 0]); b2.append(-bounds.w_min)
    A2.append([1, -1, 0, 0, -1, 0]); b2.append(u_nom[0])
    A2.append([-1, 1, 0, 0, -1, 0]); b2.append(-u_nom[0])
    A2.append([0, 0, 1, -1, 0, -1]); b2.append(u_nom[1])
    A2.append([0, 0, -1, 1, 0, -1]); b2.append(-u_nom[1])
    c2 = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0])
    status2, x2, _ = solve_lp(c2, np.asarray(A2, dtype=float), np.asarray(b2, dtype=float))
    if status2 != OPTIMAL:
        u_hat = np.array([x[0] - x[1], x[2] - x[3]])
    else:
        u_hat = np.array([x2[0] - x2[1], x2[2] - x2[3]])
    worst = float(np.max(_row_violations(rows, rhs, u_hat, np.zeros(2)), initial=0.0))
    return u_hat, max(worst, 0.0)


def violation_probability(g: GaussianControl, c: HalfPlaneConstraint) -> float:
    """P(a @ u > b) for u ~ N(mean, diag(std^2)); indicator when degenerate."""
    mu = float(c.a @ g.mean_array)
    denom = math.sqrt(float(c.a @ (g.std ** 2 * c.a)))
    if denom == 0.0:
        return 1.0 if mu > c.b else 0.0
    return normal_cdf((mu - c.b) / denom)

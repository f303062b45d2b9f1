"""Independent oracles shared by the unit and acceptance suites.

Everything here deliberately avoids the implementation paths it checks:
the quantile oracle bisects an erf-based CDF, the projection oracle is a
dense grid search, and the avoidance oracle densely samples constant-velocity
motion in time.
"""
from __future__ import annotations

import math

import numpy as np

from mrnav.dynamics import ControlBounds, NoiseModel
from mrnav.orca import HalfPlaneConstraint


def phi(x: float) -> float:
    """Standard normal CDF via erfc (double-precision accurate)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def inv_phi_bisect(p: float, lo: float = -12.0, hi: float = 12.0) -> float:
    """Quantile by bisection on phi; interval shrinks below double precision."""
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if phi(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def grid_search_objective(u_nom_v, s_nom_v, constraints, bounds, exec_noise,
                          delta_u, delta_nu, n=2001):
    """Brute-force optimum of the projection restricted to the (u_v, s_v)
    plane; the angular coordinate is assumed untouched (its chance
    constraints slack at nominal). Returns None when no grid point is
    feasible."""
    z_u = inv_phi_bisect(delta_u)
    z_nu = inv_phi_bisect(delta_nu)
    sigma2 = exec_noise.cov_diag
    us = np.linspace(bounds.v_min, bounds.v_max, n)
    ss = np.linspace(0.0, s_nom_v, n)
    U = us[:, None]
    S = ss[None, :]
    feasible = np.ones((n, n), dtype=bool)
    for c in constraints:
        a = np.asarray(c.a, dtype=float)
        margin = z_nu * math.sqrt(float(a @ (sigma2 * a)))
        feasible &= a[0] * U + z_u * abs(a[0]) * S <= c.b - margin + 1e-12
    feasible &= U + z_u * S <= bounds.v_max + 1e-12
    feasible &= -U + z_u * S <= -bounds.v_min + 1e-12
    objective = np.abs(U - u_nom_v) + np.abs(S - s_nom_v)
    values = objective[feasible]
    return float(values.min()) if values.size else None


def random_projection_instance(rng, max_constraints=4):
    """Feasible random instance: every constraint leaves a mean-only margin."""
    from mrnav.dynamics import ControlInput
    from mrnav.projection import GaussianControl

    bounds = ControlBounds()
    noise = NoiseModel(0.1, 0.2)
    z_nu = inv_phi_bisect(0.95)
    nominal = GaussianControl(
        ControlInput(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))),
        np.array([rng.uniform(0.02, 0.3), rng.uniform(0.02, 0.3)]),
    )
    v_star = float(rng.uniform(-0.85, 0.85))
    m = int(rng.integers(1, max_constraints + 1))
    constraints = []
    for _ in range(m):
        a0 = float(rng.uniform(0.2, 1.5)) * (1 if rng.random() < 0.5 else -1)
        a = np.array([a0, 0.0])
        margin = z_nu * math.sqrt(float(a @ (noise.cov_diag * a)))
        b = a0 * v_star + margin + float(rng.uniform(0.05, 0.8))
        constraints.append(HalfPlaneConstraint(a, b))
    return nominal, noise, constraints, bounds


def min_pair_distance(p_rel, v_a, v_b, tau, step=1e-3):
    """Minimum center distance under constant velocities, sampled every
    `step` seconds over [0, tau]; p_rel is p_b - p_a."""
    t = np.arange(0.0, tau + step / 2, step)
    rel = np.asarray(p_rel, dtype=float)[None, :] + \
        (np.asarray(v_b, dtype=float) - np.asarray(v_a, dtype=float))[None, :] * t[:, None]
    return float(np.hypot(rel[:, 0], rel[:, 1]).min())

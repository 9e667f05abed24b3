"""Independent reference solvers shared by the test modules."""

import itertools

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp


def brute_force_cover(points, radius):
    """Exact minimum cover over candidate centers ``{p - r, p, p + r}``.

    Exhaustive for up to 6 distinct points, integer programming beyond.
    Every optimal cover can be slid so each center sits at some ``p + r``,
    so the candidate set loses nothing.
    """
    pts = sorted(set(points))
    if not pts:
        return 0
    cands = sorted({c for p in pts for c in (p - radius, p, p + radius)})
    cover = np.array([[abs(p - c) <= radius + 1e-12 for c in cands] for p in pts], dtype=float)
    if len(pts) <= 6:
        for k in range(1, len(pts) + 1):
            for idx in itertools.combinations(range(len(cands)), k):
                if np.all(cover[:, list(idx)].sum(axis=1) >= 1):
                    return k
    res = milp(np.ones(len(cands)), constraints=LinearConstraint(cover, lb=1, ub=np.inf),
               integrality=np.ones(len(cands)), bounds=Bounds(0, 1))
    assert res.success
    return int(round(res.fun))


def linf_cover_oracle(points, radius):
    """Minimum l-infinity cover of an explicit point cloud by integer programming.

    Any optimal center can be slid, one axis at a time, until its lowest
    covered coordinate sits on the ball's lower face, so per-axis candidates
    ``p + r`` are enough.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) == 0:
        return 0
    axes = [sorted(set(pts[:, k] + radius)) for k in range(pts.shape[1])]
    centers = np.array(list(itertools.product(*axes)))
    cover = (np.abs(pts[:, None, :] - centers[None, :, :]) <= radius + 1e-12).all(axis=2).astype(float)
    res = milp(np.ones(len(centers)), constraints=LinearConstraint(cover, lb=1, ub=np.inf),
               integrality=np.ones(len(centers)), bounds=Bounds(0, 1))
    assert res.success
    return int(round(res.fun))

"""scikit-learn style wrappers that place serving drones over a user point cloud.

``fit`` takes user ground positions ``X`` of shape ``(n_users, 2)`` and
optional request counts as ``sample_weight``. Fitted drone positions are
exposed as ``cluster_centers_``; ``predict`` returns the serving drone of
each point (nearest ground position, i.e. its Voronoi zone) and
``transform`` the distances to every drone.
"""
from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import _check_sample_weight, check_is_fitted, validate_data

from .baselines import swarm_run
from .demand import UserPopulation
from .nbrl import nbrl_run
from .scenario import REFERENCE_CONFIG, build_scenario


class DronePlacer(ClusterMixin, TransformerMixin, BaseEstimator):
    """Place ``n_drones`` serving drones to match user demand.

    Parameters
    ----------
    algorithm : {"nbrl", "pso", "vpso"}
    n_drones : int
        Serving drones. Their altitudes and start positions are drawn from
        ``random_state``.
    area_side : float
        Side of the square service area; every point must lie inside it.
    tolerance : float
        Stop once the mapping likelihood reaches ``1 - tolerance``.
    max_iter : int
        Iteration cap (swarm iterations for the particle baselines).
    random_state : int or None

    The score is the mapping likelihood: how well drones are matched to the
    zones their own positions induce. It does not measure user coverage.
    """

    def __init__(self, algorithm="nbrl", n_drones=10, area_side=2500.0, tolerance=0.05, max_iter=100,
                 random_state=None):
        self.algorithm = algorithm
        self.n_drones = n_drones
        self.area_side = area_side
        self.tolerance = tolerance
        self.max_iter = max_iter
        self.random_state = random_state

    def _config(self):
        if self.algorithm not in ("nbrl", "pso", "vpso"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        return REFERENCE_CONFIG.replace(
            area_side=float(self.area_side), max_tier2=int(self.n_drones), users_min=0, users_max=0,
            tolerance=float(self.tolerance), max_iterations=int(self.max_iter), swarm_iterations=int(self.max_iter),
        )

    def fit(self, X, y=None, sample_weight=None):
        cfg = self._config()
        X = validate_data(self, X, dtype=np.float64)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 ground coordinates per point, got {X.shape[1]}")
        if X.min() < 0.0 or X.max() > cfg.area_side:
            raise ValueError(f"points must lie inside [0, {cfg.area_side}]^2")
        w = _check_sample_weight(sample_weight, X, ensure_non_negative=True)
        seed = self.random_state if self.random_state is not None else 0
        if not isinstance(seed, (int, np.integer)):
            raise ValueError("random_state must be an int or None")
        # every drone hears every user, so placement sees the full demand
        reach = float(np.hypot(cfg.area_side, cfg.area_side) + cfg.altitude_band[1])
        cfg = cfg.replace(tier1_range=reach, tier2_range=reach, buffer_capacity=float(w.sum()) + 1.0)
        base = build_scenario(cfg, int(seed))
        users = UserPopulation(X, np.rint(w).astype(np.int64))
        scn = dataclasses.replace(base, users=users)
        if self.algorithm == "nbrl":
            state, series = nbrl_run(scn)
            fleet = state.fleet
        else:
            fleet, series, _ = swarm_run(scn, self.algorithm)
        drones = [d for t in scn.serving_tiers for d in fleet[t]]
        self.cluster_centers_ = np.array([d.position for d in drones], dtype=float)
        self.altitudes_ = np.array([d.altitude for d in drones])
        self.drone_ids_ = np.array([d.id for d in drones])
        self.likelihood_ = series.final.likelihood if series.final else 1.0
        self.n_iter_ = series.iterations_to_converge
        self.converged_ = series.converged
        self.series_ = series
        self.labels_ = self._nearest(X)
        return self

    def _nearest(self, X):
        return np.argmin(self._distances(X), axis=1)

    def _distances(self, X):
        diff = X[:, None, :] - self.cluster_centers_[None, :, :]
        return np.sqrt((diff**2).sum(axis=2))

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return self._nearest(X)

    def transform(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return self._distances(X)

    def score(self, X=None, y=None):
        """Mapping likelihood of the fitted placement."""
        check_is_fitted(self)
        return float(self.likelihood_)

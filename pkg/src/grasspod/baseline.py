"""Tangent-space interpolation of POD bases, the classical baseline.

Training bases are mapped into the shared Euclidean chart and their
coordinates are interpolated at query parameters: piecewise linear over the
sorted parameters for d = 1, inverse-distance weighting (power 2) for d >= 2.
Both schemes reproduce the nodes exactly and, being convex combinations,
normally stay inside the pi/2 ball; a radial clip with a counter guards the
floating-point boundary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .chart import Chart, RADIUS

__all__ = ["InterpModel", "interp_predict", "ExtrapolationWarning"]

CLIP_NORM = RADIUS - 1e-9


class ExtrapolationWarning(UserWarning):
    pass


@dataclass
class InterpModel:
    """Interpolant over embedded training samples sharing the cXGBoost chart."""

    chart: Chart
    thetas: np.ndarray
    targets: np.ndarray
    scheme: str = "auto"
    clip_count: int = field(default=0, compare=False)

    def __post_init__(self):
        thetas = np.atleast_2d(np.array(self.thetas, dtype=float))
        targets = np.atleast_2d(np.array(self.targets, dtype=float))
        if thetas.shape[0] != targets.shape[0]:
            raise ValueError("thetas and targets disagree on sample count")
        if len({tuple(row) for row in thetas}) != thetas.shape[0]:
            raise ValueError("training parameters must be distinct")
        if np.any(np.linalg.norm(targets, axis=1) >= RADIUS):
            raise ValueError("training targets must lie in the open pi/2 ball")
        if self.scheme == "auto":
            self.scheme = "linear" if thetas.shape[1] == 1 else "idw"
        if self.scheme == "linear":
            if thetas.shape[1] != 1:
                raise ValueError("linear scheme requires one-dimensional parameters")
            if thetas.shape[0] < 2:
                raise ValueError("linear interpolation needs at least 2 samples")
            order = np.argsort(thetas[:, 0], kind="stable")
            thetas = thetas[order]
            targets = targets[order]
        elif self.scheme != "idw":
            raise ValueError(f"unknown interpolation scheme {self.scheme!r}")
        self.thetas = thetas
        self.targets = targets

    @property
    def n_samples(self) -> int:
        return self.thetas.shape[0]


def _linear(model: InterpModel, x: float) -> np.ndarray:
    xs = model.thetas[:, 0]
    if x < xs[0] or x > xs[-1]:
        warnings.warn(
            f"query {x} outside training range [{xs[0]}, {xs[-1]}]; "
            "using constant extrapolation",
            ExtrapolationWarning,
            stacklevel=3,
        )
    if x <= xs[0]:
        return model.targets[0].copy()
    if x >= xs[-1]:
        return model.targets[-1].copy()
    i = int(np.searchsorted(xs, x, side="right") - 1)
    t = (x - xs[i]) / (xs[i + 1] - xs[i])
    return (1.0 - t) * model.targets[i] + t * model.targets[i + 1]


def _idw(model: InterpModel, theta: np.ndarray) -> np.ndarray:
    d2 = np.sum((model.thetas - theta) ** 2, axis=1)
    hit = int(np.argmin(d2))
    if d2[hit] < 1e-24:
        return model.targets[hit].copy()
    weights = 1.0 / d2
    return (weights @ model.targets) / weights.sum()


def interp_predict(model: InterpModel, theta: np.ndarray) -> np.ndarray:
    """Interpolated chart coordinates at theta, clipped radially to stay
    strictly inside the ball (clip events counted on the model)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    if theta.shape[0] != model.thetas.shape[1]:
        raise ValueError(
            f"theta has {theta.shape[0]} entries, expected {model.thetas.shape[1]}"
        )
    if model.scheme == "linear":
        y = _linear(model, float(theta[0]))
    else:
        y = _idw(model, theta)
    norm = float(np.linalg.norm(y))
    if norm > CLIP_NORM:
        y = y * (CLIP_NORM / norm)
        model.clip_count += 1
        warnings.warn(
            f"interpolated vector clipped from norm {norm:.6f} onto the ball",
            UserWarning,
            stacklevel=2,
        )
    return y

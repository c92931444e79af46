"""Experiment parameter grids and deterministic split labels.

Burgers: 6 uniform amplitudes in [1.0, 2.2] times 5 uniform viscosities in
[0.003, 0.010] (30 runs).  Wave: amplitudes {80, ..., 100} times frequencies
{3.0, ..., 5.0} (36 runs).  Beam: 16 training pairs on the odd-valued grid
{1, 3, 5, 7}^2 interleaved with 9 test pairs on {2, 4, 6}^2 (25 runs).

Burgers and wave split labels follow the mod-3 rule over the lexicographic
parameter order (index in train iff i mod 3 == 0); the beam split is the
odd/even interleaving itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GridPoint", "burgers_grid", "wave_grid", "beam_grid"]


@dataclass(frozen=True)
class GridPoint:
    theta: tuple[float, ...]
    split: str


def _mod3_labels(thetas: list[tuple[float, ...]]) -> list[GridPoint]:
    ordered = sorted(thetas)
    return [
        GridPoint(theta=t, split="train" if i % 3 == 0 else "test")
        for i, t in enumerate(ordered)
    ]


def burgers_grid(
    amplitudes: list[float] | None = None,
    viscosities: list[float] | None = None,
) -> list[GridPoint]:
    if amplitudes is None:
        amplitudes = np.linspace(1.0, 2.2, 6).tolist()
    if viscosities is None:
        viscosities = np.linspace(0.003, 0.010, 5).tolist()
    thetas = [(float(a), float(nu)) for a in amplitudes for nu in viscosities]
    return _mod3_labels(thetas)


def wave_grid(
    amplitudes: list[float] | None = None,
    frequencies: list[float] | None = None,
) -> list[GridPoint]:
    if amplitudes is None:
        amplitudes = [80.0, 84.0, 88.0, 92.0, 96.0, 100.0]
    if frequencies is None:
        frequencies = [3.0, 3.4, 3.8, 4.2, 4.6, 5.0]
    thetas = [(float(m1), float(m2)) for m1 in amplitudes for m2 in frequencies]
    return _mod3_labels(thetas)


def beam_grid(
    odd_values: list[float] | None = None,
    even_values: list[float] | None = None,
) -> list[GridPoint]:
    if odd_values is None:
        odd_values = [1.0, 3.0, 5.0, 7.0]
    if even_values is None:
        even_values = [2.0, 4.0, 6.0]
    points = [
        GridPoint(theta=(float(m1), float(m2)), split="train")
        for m1 in odd_values
        for m2 in odd_values
    ] + [
        GridPoint(theta=(float(m1), float(m2)), split="test")
        for m1 in even_values
        for m2 in even_values
    ]
    return sorted(points, key=lambda p: p.theta)

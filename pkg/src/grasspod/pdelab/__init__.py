"""Deterministic snapshot generators for the desk-scale benchmarks."""

from .beam import BeamSpec, run_beam
from .burgers import BurgersSpec, run_burgers
from .common import CflViolationError, SolverInstabilityError
from .grids import beam_grid, burgers_grid, wave_grid
from .wave import WaveSpec, run_wave

__all__ = [
    "BurgersSpec",
    "BeamSpec",
    "WaveSpec",
    "run_burgers",
    "run_beam",
    "run_wave",
    "burgers_grid",
    "beam_grid",
    "wave_grid",
    "SolverInstabilityError",
    "CflViolationError",
]

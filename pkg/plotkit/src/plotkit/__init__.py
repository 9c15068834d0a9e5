"""Post-hoc figure generation for linear SSL training-dynamics runs.

Reads only the documented interchange formats (trajectory CSV, equilibria
JSON); no import-level dependency on the simulation package.
"""

from .figures import KINDS, PlotSpec, render
from .io import EquilibriaData, FormatError, TrajectoryData, read_equilibria, read_trajectory

__version__ = "0.1.0"

__all__ = [
    "EquilibriaData",
    "FormatError",
    "KINDS",
    "PlotSpec",
    "TrajectoryData",
    "read_equilibria",
    "read_trajectory",
    "render",
]

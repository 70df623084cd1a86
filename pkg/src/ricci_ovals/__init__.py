"""
Ricci Ovals - a numerical laboratory for rotationally symmetric Ricci flow on S3.

Modules:
    geometry: warped-product profiles, curvatures and fixtures
    bryant: the steady soliton profile and its constants
    barriers: supersolution barriers built from the soliton
    spectral: Hermite projections in the Gaussian-weighted space
    flow: unrescaled and rescaled solvers, tip chart and monitors
    asymptotics: the matched ansatz, residual ladders and predictions
    cli: command-line pipelines
"""

from .bryant import BryantProfile, solve_bryant
from .exceptions import RicciLabError
from .geometry import ProfileGrid, curvatures, fixtures

__version__ = "0.1.0"

__all__ = [
    "BryantProfile",
    "ProfileGrid",
    "RicciLabError",
    "curvatures",
    "fixtures",
    "solve_bryant",
    "__version__",
]

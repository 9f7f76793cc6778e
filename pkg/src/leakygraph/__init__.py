"""Spectra of leaky quantum graphs via point-interaction approximations."""
from . import geometry, oracles, specfun, spectral, sweeps  # noqa: F401
from .geometry import (DiscretizedGraph, GeometryError, NearLoop, Ring, Star, ZLine,
                       bottleneck, calibrate_gap_angle, discretize, omega_loop,
                       transform)
from .sweeps import convergence_fit, gap_report, sweep
from .spectral import (LambdaSystem, Spectrum, assemble_lambda, eval_eigenfunction,
                       find_eigenvalues, inertia, null_vector, scaled_spectrum_check,
                       schur_margin)

__version__ = "0.1.0"

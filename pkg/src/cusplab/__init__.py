"""Steklov eigenvalues of a planar domain with a blunted power cusp."""
from .asymptotics import Prediction, blinking_epsilons, gliding_speed, predict, tau0, threshold, threshold_phase
from .assembly import AssembledSystem, assemble, apply_S, discrete_inner_product
from .eigensolve import Spectrum, near_eigenvalue_check, steklov_spectrum
from .geometry import BodyKind, BodySpec, CuspGeometry, EndCondition, Mesh, make_domain, make_mesh

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "BodyKind", "BodySpec", "CuspGeometry", "EndCondition", "Mesh", "Prediction", "Spectrum",
    "apply_S", "assemble", "blinking_epsilons", "discrete_inner_product", "gliding_speed", "make_domain",
    "make_mesh", "near_eigenvalue_check", "predict", "steklov_spectrum", "tau0", "threshold", "threshold_phase",
]

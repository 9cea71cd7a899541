"""Concentrated vortex patches in bounded planar domains."""
from .domain import DomainSpec, annulus, bem_from_curves, build_green_evaluator, disk, ellipse_curve
from .linstab import analyze
from .patchgeom import PatchShape
from .pointvortex import VortexConfig, find_critical, integrate_pv
from .steady import SteadyState, solve_steady

__version__ = "0.1.0"

__all__ = ["DomainSpec", "annulus", "bem_from_curves", "build_green_evaluator", "disk",
           "ellipse_curve", "analyze", "PatchShape", "VortexConfig", "find_critical",
           "integrate_pv", "SteadyState", "solve_steady"]

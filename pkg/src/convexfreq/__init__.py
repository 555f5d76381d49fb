"""Frequency functions, quantitative strata and covers for harmonic functions on convex domains."""
from .beta import DiscreteMeasure, beta_bruteforce, beta_eigen
from .covering import CoverParams, build_cover, volume_estimate
from .critical import blowup_trace, critical_points, epsilon_regularity_check, minkowski_content
from .fields import GridField, HarmonicPolynomial, OneSidedLinear, WedgeEigenfunction, solve_dirichlet
from .frequency import doubling_check, frequency, frequency_profile, max_frequency
from .geometry import Ball, ConvexDomain, HalfSpace, Membership
from .presets import preset
from .reifenberg import BallFamily, discrete_reifenberg_check, rectifiable_check
from .symmetry import rescale, strata_membership, strata_scan, symmetry_defect

__version__ = "0.1.0"

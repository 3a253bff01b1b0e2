"""Peakon systems with a two-exponential kernel: simulation, Lax pair,
spectral curve, Weyl function and inverse reconstruction through a discrete
string."""
from .collision import CollisionForm, c2_invariant, canonical_form, collision_limit_A
from .exceptions import *  # noqa: F401,F403
from .flow import IntegratorConfig, Termination, Trajectory, integrate, invariant_drift, sign_check
from .inverse import (
    MomentSequence, StringData, hankel_minor, peakons_to_string, reconstruct_string,
    stieltjes_coefficients, string_from_weyl, string_to_peakons,
)
from .lax import MatrixPoly2, build_A, build_B, build_T, lax_residual, trace_coefficients
from .model import ModelParams, PeakonState, hamiltonian, lax_drift, vector_field
from .poly import Poly, PowerSeries
from .spectral import SpectralData, WeylSeries, curve_data, pade_defect, trace_invariants, weyl_series

__version__ = "0.1.0"

"""Littlewood-Paley and Besov analysis tools with a pseudospectral
Camassa-Holm solver and norm-inflation experiments."""

__version__ = "0.1.0"

from .grid import Field, GridSpec, make_grid, apply_multiplier, derivative, helmholtz_inv, helmholtz_inv_dx
from .littlewood_paley import DyadicFilterBank, build_filter_bank, block, low_pass, decompose, paraproduct, remainder, commutator_rj
from .besov import BesovSpec, NormReport, besov_norm, lipschitz_norm, h1_energy
from .dynamics import SolveConfig, SolverState, PeakonState, ch_rhs, step_rk4, solve, multipeakon_rhs, peakon_field
from .counterexample import CounterexampleParams, heaviside_partial_sum, build_u0, build_E0, algebra_failure_experiment

__all__ = [
    "Field",
    "GridSpec",
    "make_grid",
    "apply_multiplier",
    "derivative",
    "helmholtz_inv",
    "helmholtz_inv_dx",
    "DyadicFilterBank",
    "build_filter_bank",
    "block",
    "low_pass",
    "decompose",
    "paraproduct",
    "remainder",
    "commutator_rj",
    "BesovSpec",
    "NormReport",
    "besov_norm",
    "lipschitz_norm",
    "h1_energy",
    "SolveConfig",
    "SolverState",
    "PeakonState",
    "ch_rhs",
    "step_rk4",
    "solve",
    "multipeakon_rhs",
    "peakon_field",
    "CounterexampleParams",
    "heaviside_partial_sum",
    "build_u0",
    "build_E0",
    "algebra_failure_experiment",
]

"""Lemniscate approximation of systems of continua.

Green function and capacity of the complement of K, traced level curves
with their equilibrium measure, zero clusters built from arc moments, and
measurement of the level s_n reached by the resulting polynomials.
"""
from .geometry import CompactSet, Disk, GeometryError, Polygon, SmoothCurve, ellipse, load_spec
from .green_solver import GreenSolution, SolverError, capacity_of_levelset, solve
from .lemniscate_builder import (ConstructionError, LemniscatePolynomial, build, log_abs,
                                 newton_to_roots, split_degrees)
from .level_set import (LevelCurve, LevelPartition, TraceError, lemma21_diagnostics,
                        level_curve, partition_level, trace)
from .analysis import SnReport, envelope_check, measure_sn, sup_norm, sweep

__version__ = "0.1.0"

__all__ = [
    "CompactSet", "Disk", "Polygon", "SmoothCurve", "ellipse", "load_spec", "GeometryError",
    "GreenSolution", "SolverError", "solve", "capacity_of_levelset",
    "LevelCurve", "LevelPartition", "TraceError", "trace", "level_curve", "partition_level",
    "lemma21_diagnostics",
    "ConstructionError", "LemniscatePolynomial", "build", "log_abs", "newton_to_roots",
    "split_degrees",
    "SnReport", "sup_norm", "measure_sn", "envelope_check", "sweep",
]

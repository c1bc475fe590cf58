"""Hyperbolic surfaces glued from right-angled polygons along {p,q} maps.

Builds the surface, finds its short closed geodesics, and checks that the
blue and red curves are its systoles, fill, and have a red-length
differential of full rank after the calibrated twist.
"""
from .assembly import CurveSystem, HolonomyRep, build_block, build_surface, curve_length
from .deform import (
    CalibratedDeformation,
    DifferentialReport,
    RankCertificationError,
    calibrate_twist,
    differential_rank,
    finite_difference_check,
    measure_angle,
    wolpert_differential,
    xi_probe,
)
from .geodesics import (
    GeodesicClass,
    SearchLimitError,
    SystoleReport,
    enumerate_closed_geodesics,
    systole_report,
    verify_block_lemma,
    verify_filling,
)
from .hyptrig import (
    ConvergenceError,
    DomainError,
    PolygonEmbedding,
    PolygonSpec,
    embed_polygon,
    red_side_length,
    side_distance,
    solve_t0,
)
from .maps import SurfaceMap, catalog, cell_dimension, counts, validate

__version__ = "0.1.0"

__all__ = [
    "CalibratedDeformation", "ConvergenceError", "CurveSystem", "DifferentialReport", "DomainError",
    "GeodesicClass", "HolonomyRep", "PolygonEmbedding", "PolygonSpec", "RankCertificationError",
    "SearchLimitError", "SurfaceMap", "SystoleReport", "build_block", "build_surface", "calibrate_twist",
    "catalog", "cell_dimension", "counts", "curve_length", "differential_rank", "embed_polygon",
    "enumerate_closed_geodesics", "finite_difference_check", "measure_angle", "red_side_length",
    "side_distance", "solve_t0", "systole_report", "validate", "verify_block_lemma", "verify_filling",
    "wolpert_differential", "xi_probe",
]

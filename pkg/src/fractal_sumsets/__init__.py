"""Minkowski sums of self-similar planar sets with curves, measured on grids."""

from .angles import AngleClass, Slope, classify_angle, parse_slope, predict_sumset, star
from .curves import CurveSample, CurveSpec, circle, curvature_class, graph, polygon_ntheta, polyline, sample_curve
from .errors import CapacityError, ConstructionError, DomainError, UnsupportedConfigurationError
from .ifs import (
    BoxCover,
    Homothety,
    Homothety2,
    IfsSystem,
    cantor_intervals,
    counterexample_ifs,
    four_corner_cover,
    four_corner_system,
    ifs_cover,
    projected_ifs,
    similarity_dimension,
    verify_ssc,
)
from .projections import IntervalUnion, polygon_sumset_report, project_cover, projection_ladder
from .raster import (
    GridRaster,
    McEstimate,
    area_estimate,
    box_count,
    interior_probe,
    minkowski_raster,
    random_circle_mc,
)
from .scaling import DimFit, ScalingLadder, TrendVerdict, classify_area_trend, fit_box_dimension, riesz_energy_mc

__version__ = "0.1.0"

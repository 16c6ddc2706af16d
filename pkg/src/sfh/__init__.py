"""Sub-Finsler area, its variations and stability for intrinsic graphs in the Heisenberg group H^1."""
from .convex_body import (ConvexBody2D, boundary_curvature, disk, dual_norm, ellipse, gauge_norm,
                          pi_K, sampled, validate_C2_plus)
from .errors import (ConfigError, DomainError, InvalidBodyError, NotStationaryError,
                     NumericalError, SFHError)
from .graph_surface import (IntrinsicGraph, affine_graph, mean_curvature_K, poly_graph,
                            subfinsler_area, surface_frame, xt_graph, zero_graph)
from .heisenberg import HPoint, FrameVector, group_mul, J_op, contact_form
from .quadrature import QuadratureSpec, Rect

__version__ = "0.1.0"

"""Convex symmetrization toolkit.

Gauge calculus with polar duality, cell-exact rearrangements and the
pseudo-rearrangement of a drift coefficient, anisotropic level-set geometry
(total variation, perimeter, coarea, isoperimetric inequality), the explicit
symmetrized radial solution with drift, a desk-scale finite-difference solver
for the original anisotropic problem, and a comparison harness that verifies
the pointwise and gradient estimates between the two.
"""

from .errors import (ConfigError, ConvexSymError, DegeneratePolygon, GridMismatch,
                     NonConvergence, NonSmoothPoint, QuadratureFailure)
from .gauge import (Gauge, ball_measure_quadrature, ellipsoidal_gauge,
                    euclidean_gauge, parse_gauge, pnorm_gauge, polygonal_gauge,
                    unit_ball_volume)
from .geomeasure import (CoareaReport, IsoperimetricResult, LevelSetEnergyProfile,
                         Polygon, anisotropic_energy, anisotropic_tv, coarea_check,
                         gronwall_bound, isoperimetric_check,
                         isoperimetric_energy_product, level_set_energy,
                         level_set_polygons, masked_gradient, perimeter,
                         random_convex_polygon, wulff_polygon)
from .harness import (ExperimentReport, builtin_suite_configs,
                      comparison_matrix_configs, run_comparison, run_suite,
                      write_builtin_suite)
from .pdesolve import (Disk, Ellipse, HypothesisReport, LShape, ProblemInstance,
                       Rectangle, SolverDiagnostics, WulffShape,
                       certify_hypotheses, make_instance, parse_instance, solve)
from .rearrange import (GridFunction, GridSpec, MonotoneProfile,
                        PseudoRearrangement, convex_rearrangement,
                        decreasing_rearrangement, distribution, grid_for_wulff,
                        load_gridfunction, profile_from_csv, profile_to_csv,
                        pseudo_rearrangement, save_gridfunction)
from .symsol import (ConstantDrift, OdeResidualReport, RadialSolution,
                     SymmetrizedProblem, constant_profile, gradient_integral,
                     lift_to_grid, rearranged_values, symmetrized_solution,
                     verify_radial_ode)

__version__ = "0.1.0"

"""Shearfree: slope-transport solvers and null geodesic families on the
compactified split-signature chart.

The package splits into an exact-up-to-tolerance incidence kernel
(:mod:`shearfree.projlin`, :mod:`shearfree.klein`), characteristic solvers
for the flat and forced slope-transport equations (:mod:`shearfree.burgers`),
the end-to-end scattering construction with its integrability diagnostics
(:mod:`shearfree.congruence`), and a batch CLI (:mod:`shearfree.cli`).
"""

from .burgers import (CauchyCurve, Forcing, caustic_detect, characteristic_trace,
                      circle_tangent_lines, dual_ode_extract, eval_flat,
                      eval_forced, solve_burgers, surface_from_caustic,
                      transport_eval, transversality_check)
from .congruence import (Congruence, KappaField, ScatteringData, ShearReport,
                         build_congruence, frobenius_check, shear_report,
                         solve_scattering, verify_foliation)
from .errors import (BlowUp, CausticReached, DegenerateCurve, DimensionMismatch,
                     FoliationFailure, IllConditioned, NoChartIntersection,
                     NotIncident, ScenarioError, ShearfreeError,
                     TangentAtInfinity, TangentDirection,
                     TransversalityViolation, ZeroSubspace)
from .expressions import Expression, parse_expression
from .klein import (ChartPoint, PluckerVector, ScriPoint,
                    alpha_trace_on_beta_plane, beta_trace_on_alpha_plane,
                    flag_from_slopes, geodesic_chart_line, infinity_plane,
                    null_separation, plucker_embed, scri_intersection,
                    scri_point)
from .projlin import (HPoint, PNFlag, Subspace, contains, join, meet, pairing,
                      span_canonical, zero_subspace)

__version__ = "0.1.0"

"""potlab: exact discrete optimal partial transport and a laboratory for
the geometric predicates behind free-boundary regularity — interior cone
and ball conditions, Lipschitz cone envelopes, semiconvexity, c-convexity,
the fourth-order regularity tensor, and the spherical-cap construction.
"""

from .boundary import (ActiveRegionField, ConeEnvelope, EvaluationGrid,
                       FreeBoundarySample, active_region, cone_envelope,
                       extract_boundary, free_normal, graph_match,
                       normal_field_holder)
from .costs import (CostConstants, CostModel, DomainSample, RadialCost,
                    check_nondegeneracy, check_twist, estimate_b0,
                    estimate_b1, estimate_c2, estimate_constants, get_cost,
                    log_cost, quadratic_cost, register_cost,
                    registered_costs, sqrtplus_cost)
from .errors import (CapabilityError, ConfigurationError, CutLocusError,
                     DegenerateInputError, DimensionMismatchError,
                     DomainError, NonDegeneracyError, PotlabError)
from .geometry import (ConeProfile, PredicateReport, check_ball_condition,
                       check_c_convexity, check_cone_condition,
                       check_semiconvexity, cone_profile,
                       curvature_threshold, holder_exponent)
from .mtw import A3Report, MtwTensor, a3_form, a3_infimum, mtw_tensor
from .scenario import (RunRecord, Scenario, load_scenario, parse_scenario,
                       run_pipeline, write_record)
from .solver import (ActivePair, DiscreteMeasure, TransportPlan,
                     brute_force_partial, check_duality,
                     exchange_symmetry_check, extract_map, solve_partial)
from .sphere import (CapExampleReport, SphereCost, SphericalCap,
                     annulus_image_demo, cut_locus_margin, exp_map,
                     fibonacci_cap, fibonacci_sphere, geodesic_cost_value,
                     geodesic_distance, log_map, run_cap_example,
                     sphere_cost, tangent_basis)

__version__ = "0.1.0"

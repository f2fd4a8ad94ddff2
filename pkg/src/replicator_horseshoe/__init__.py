from .map_core import Params, eval_f, eval_f_prime, fixed_points, critical_points, iterate, schwarzian
from .conjugacy import h, h_inv, eval_g, eval_g_prime, g_critical_data
from .horseshoe import certify, cylinder_intervals, point_from_itinerary, code_orbit, min_certified_a
from .orbits import find_periodic_orbits, period2_orbit, attractors_from_critical_orbits, lyapunov_exponent, bifurcation_scan
from .meanclass import MeanMapSpec, make_map_from_H, verify_cohomology, orbit_mean_check, birkhoff_average

__all__ = [
    "Params",
    "eval_f",
    "eval_f_prime",
    "fixed_points",
    "critical_points",
    "iterate",
    "schwarzian",
    "h",
    "h_inv",
    "eval_g",
    "eval_g_prime",
    "g_critical_data",
    "certify",
    "cylinder_intervals",
    "point_from_itinerary",
    "code_orbit",
    "min_certified_a",
    "find_periodic_orbits",
    "period2_orbit",
    "attractors_from_critical_orbits",
    "lyapunov_exponent",
    "bifurcation_scan",
    "MeanMapSpec",
    "make_map_from_H",
    "verify_cohomology",
    "orbit_mean_check",
    "birkhoff_average",
]

from .branches import (build_branch_set, certify_branch, delta_modulus, detect_returns, diameter_profile,
                       quasi_generic_point, seed_points, toral_periodic_points)
from .catalog import (build_map, build_reference, estimate_reference, fixture_rectangle, fixture_reference,
                      fixture_periodic_seeds, fixture_seeds, lebesgue_reference)
from .chart_return import ChartReturn, full_cylinder, pull_stable, push_unstable
from .dynsys import (FactoredCocycle, Splitting, birkhoff_sum, birkhoff_sums, cocycle, finite_time_exponents,
                     iterate, oseledec_splitting_estimate)
from .horseshoe import (build, forward_itinerary, locate, lyndon_words, periodic_point, point_from_word,
                        refine, saturate_orbit)
from .measures import (check_three_rho, check_two_rho, convergence_experiment, decompose, measure_sweep,
                       periodic_measure, reconstruct_sum, saturation_time, split_sums, two_rho_profile)
from .pesin import build_rectangle, cone_preserved, pesin_certificate
from .report import filter_by_stage, limit_dataframe, parse_summaries, report_table, worst_measures

__all__ = [
    "ChartReturn", "FactoredCocycle", "Splitting", "birkhoff_sum", "birkhoff_sums", "build",
    "build_branch_set", "build_map", "build_rectangle", "build_reference", "certify_branch",
    "check_three_rho", "check_two_rho", "cocycle", "cone_preserved", "convergence_experiment",
    "decompose", "delta_modulus", "detect_returns", "diameter_profile", "estimate_reference",
    "filter_by_stage", "finite_time_exponents", "fixture_periodic_seeds", "fixture_rectangle",
    "fixture_reference", "fixture_seeds", "forward_itinerary", "full_cylinder", "iterate", "lebesgue_reference",
    "limit_dataframe", "locate", "lyndon_words", "measure_sweep", "oseledec_splitting_estimate",
    "parse_summaries", "periodic_measure", "periodic_point", "pesin_certificate", "point_from_word",
    "pull_stable", "push_unstable", "quasi_generic_point", "reconstruct_sum", "refine",
    "report_table", "saturate_orbit", "saturation_time", "seed_points", "split_sums",
    "toral_periodic_points", "two_rho_profile", "worst_measures",
]

"""Exact-arithmetic property testing of bounded-derivative function classes.

Everything here works over hypergrids ``[n_1] x ... x [n_d]`` with arbitrary
product distributions, and every probability, distance, and bound is a
:class:`fractions.Fraction` (extended with infinities where derivative bounds
need them).  The package offers:

- per-axis derivative bounds and the induced violation quasimetric
  (:mod:`bdpt.metric`),
- binary-search-tree samplers and testers whose query cost tracks the
  distribution's optimal search depth (:mod:`bdpt.bst`, :mod:`bdpt.testers`),
- exact distance oracles and the dimension-reduction inequalities
  (:mod:`bdpt.distance`),
- the uniform-grid blow-up that removes the distribution (:mod:`bdpt.bloat`),
- hard-function constructions that meet the testers' query bounds from below
  (:mod:`bdpt.hard`),
- a JSON-config command-line harness (:mod:`bdpt.cli`, :mod:`bdpt.serialize`).
"""

from .bloat import (
    BLOAT_POINT_CAP,
    BloatEquivalenceReport,
    BloatMap,
    BloatedMetric,
    build_d_ext,
    build_f_ext,
    rationalize,
    verify_bloat_equivalence,
)
from .bst import (
    SearchTree,
    build_balanced_bst,
    build_median_bst,
    build_optimal_bst,
    depth_report,
)
from .distance import (
    BRUTE_FORCE_POINT_CAP,
    DimensionReductionReport,
    DistanceReport,
    check_dimension_reduction,
    closest_extension,
    directional_distance,
    exact_distance_bruteforce,
    exact_distance_line,
    is_axis_good,
    max_independent_mass,
    noviol_witness_check,
)
from .errors import (
    BdptError,
    DomainError,
    PreconditionError,
    SizeCapError,
    UnsupportedFamilyError,
)
from .grid import (
    DENSE_POINT_CAP,
    GridFunction,
    HypergridShape,
    Point,
    ProductDistribution,
)
from .hard import (
    AxisStability,
    HypercubeHardFamily,
    HypergridProjection,
    LineHardFamily,
    LineLevel,
    StabilityReport,
    UsefulMap,
    aggregate_hard_function,
    are_disjoint,
    build_useful_maps,
    captured_tuples,
    hypercube_hard_family,
    is_useful_map,
    level_truncation,
    line_hard_family,
    mass_concentration,
    median_level_profiles,
    mono_to_bdp,
    project_to_hypercube,
    stability_report,
    truncate_by_sampling,
)
from .metric import (
    ALL_PAIRS_POINT_CAP,
    AXIOM_POINT_CAP,
    BoundingFamily,
    MetricAxiomReport,
    Quasimetric,
    ViolationGraph,
    build_violation_graph,
    is_member,
    is_member_all_pairs,
    is_violation,
    lipschitz_metric,
    monotone_metric,
    verify_metric_axioms,
    violation_weight,
)
from .rational import (
    NEG_INF,
    POS_INF,
    Ext,
    format_ext,
    format_fraction,
    parse_ext,
    parse_fraction,
    sqrt_bounds,
)
from .serialize import (
    ExperimentConfig,
    SweepRow,
    canonical_json,
    dump_report,
    load_config,
    report_envelope,
    zipf_marginal,
)
from .testers import (
    ACCEPT,
    REJECT,
    StepTrace,
    TestRun,
    distribution_free_tester,
    distribution_free_tester_step,
    estimate_rejection_prob,
    exact_rejection_prob_grid,
    exact_rejection_prob_line,
    expected_grid_step_queries,
    expected_line_step_queries,
    hypergrid_tester,
    hypergrid_tester_step,
    line_tester,
    line_tester_step,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

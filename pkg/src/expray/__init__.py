"""Dynamic rays of exponential maps z -> exp(z) + kappa.

Symbolic dynamics of external addresses, numerical ray tracing by
backward iteration, certificates for rays accumulating everywhere on a
limit set without landing, and escape-time renderings.
"""

from .addresses import (
    ExternalAddress,
    GrowthBounds,
    Kind,
    Ordering,
    TERMINATOR,
    circular_order,
    compare_lex,
    first_difference,
    format_address,
    generator_address,
    golden_mean_address,
    growth_bounds,
    infinite_address,
    intermediate_address,
    parse_address,
    prepend,
    shift,
    surrounds,
)
from .itineraries import (
    STAR,
    Boundary,
    ConsequenceReport,
    Itinerary,
    adjacent,
    format_entry,
    itinerary,
    kneading,
    shared_itinerary_consequence,
)
from .rays import (
    AsymptoticReport,
    Parameter,
    RaySample,
    RayTrace,
    ResidualReport,
    TailReport,
    Verdict,
    asymptotic_residual,
    attracting_example,
    big_tee,
    continuity_gap,
    functional_residual,
    growth_map,
    growth_map_inverse,
    known_parameter,
    misiurewicz_example,
    siegel,
    tail_diagnostic,
    trace_point,
    trace_ray,
    trace_to_json,
)

__version__ = "0.1.0"

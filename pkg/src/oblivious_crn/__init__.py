"""Output-oblivious chemical reaction networks: specs, compilation, verification."""

__version__ = "0.1.0"

from .crn import (  # noqa: E402
    Configuration,
    Crn,
    CrnError,
    NotApplicableError,
    Reaction,
    applicable,
    apply,
    concatenate,
    format_config,
    format_crn,
    initial_configuration,
    is_output_monotonic,
    is_output_oblivious,
    monotonic_to_oblivious,
    parse_crn,
)
from .funcspec import (  # noqa: E402
    Eventual1DForm,
    ObliviousSpec,
    QuiltAffine,
    Semilinear1D,
    SpecError,
    extract_eventual_1d,
    quilt_eval,
    quilt_validate,
    scaling_limit,
    spec_eval,
    spec_validate,
)
from .compiler import (  # noqa: E402
    CompileError,
    compile_1d,
    compile_1d_leaderless,
    compile_fanout,
    compile_indicator,
    compile_min,
    compile_quilt,
    compile_spec,
    compile_truncate,
)
from .verifier import (  # noqa: E402
    Caps,
    dickson_search,
    is_stable,
    overproduction_witness,
    reachable,
    stably_computes,
    verify_window,
)
from .simulator import convergence_stats, simulate  # noqa: E402

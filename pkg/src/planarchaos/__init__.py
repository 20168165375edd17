"""planarchaos: the rotating-saddle planar ODE and its chaos mechanism.

A numpy/scipy library that integrates dz/dt = R e^{it}(conj(z)^2 - 1) + f(t,z)
in the coordinate frames attached to its two saddles, certifies the static
boundary inequalities of the construction by interval arithmetic, codes
orbits into a binary shift, shoots connecting orbits for prescribed symbol
words by exit-side bisection, and measures shift entropy and
distributional-chaos statistics.
"""

from .model import (
    ModelParams,
    Perturbation,
    ZERO_PERTURBATION,
    perturbation_by_name,
    field_z,
    field_w,
    field_p,
    field_what,
    field_diff,
    to_frame,
    from_frame,
    get_frame,
)
from .geometry import (
    Membership,
    CorridorProfile,
    corridor_halfwidth,
    member,
    boundary_normal,
    build_regions,
    box_region,
    region_polylines,
    EPS_MEM,
)
from .flow import (
    OrbitSegment,
    EventRecord,
    integrate,
    poincare,
    detect_events,
    find_periodic,
    BlowUp,
)
from .certify import (
    Interval,
    ParamBox,
    Certificate,
    cert_gamma_exit,
    cert_gamma_inward,
    cert_K_faces,
    cert_Ktilde_expansion,
    cert_strip_leftward,
    all_certificates,
    zeta_tilde,
    riccati_rhs,
    riccati_closed_form,
)
from .coding import (
    Itinerary,
    classify_window,
    code_orbit,
    check_semiconjugacy,
)
from .shifts import (
    SymbolSequence,
    VertexGraph,
    shift,
    metric,
    admissible,
    graph_entropy,
    homoclinic_words,
    full_shift_graph,
    golden_mean_graph,
    parity_switch_graph,
    default_graph,
)
from .connect import (
    FiberPoint,
    TrackedInterval,
    unstable_fiber,
    stable_fiber,
    fiber_curve,
    track_curve,
    cascade,
    shoot,
    Box,
    ParamCurve,
)
from .dcstats import (
    DistributionEstimate,
    xi_count,
    estimate_F,
    dc1_pair_report,
)

__version__ = "0.1.0"

"""sketchrelay: switch sketching with telemetry-carried reconstruction.

A deterministic simulator and library for measurement systems that keep
a count-min style sketch on a switch and ship it piecewise to an
end-host inside telemetry packets. Covers the sketchlet wire format,
freshness-tracking bucket-selection policies, a discrete-event replay
loop with register-access accounting, and the analytics used to score
end-host reconstructions against ground truth.
"""

from ._backend import BACKEND, get_kernels
from .analytics import (
    MetricsReport,
    detect_heavy_hitters,
    estimate_cardinality,
    estimate_entropy,
    estimate_fsd,
    evaluate,
    f1_score,
    rae,
    relative_error,
    wmre,
)
from .selection import (
    BitmapPolicy,
    CookiePolicy,
    KChancePolicy,
    SelectorState,
    SoftwarePolicy,
    adapt_threshold,
    adapt_threshold_by_queue,
)
from .simulate import (
    NotApplicableError,
    RegisterAccessCounter,
    SimConfig,
    SimResult,
    SimSnapshot,
    make_policy,
    register_accesses,
    run,
    snapshot_compare,
)
from .sketch import (
    ALL_VALID,
    NO_VALID,
    PARTIAL,
    ReconQuery,
    ReconSketch,
    Sketch,
    SketchParams,
    hash_index,
)
from .sketchlet import (
    ColumnSketchlet,
    EfficiencyParams,
    ScatterSketchlet,
    WireFormat,
    WireFormatError,
    bit_efficiency,
    collision_probability,
    scatter_advantage_bound,
    valid_fraction_oracle,
)
from .traceio import Trace, TraceEvent, TraceParseError, ZipfSpec, gen_zipf, load_csv, write_csv

__version__ = "0.1.0"

__all__ = [
    "ALL_VALID",
    "BACKEND",
    "BitmapPolicy",
    "ColumnSketchlet",
    "CookiePolicy",
    "EfficiencyParams",
    "KChancePolicy",
    "MetricsReport",
    "NO_VALID",
    "NotApplicableError",
    "PARTIAL",
    "ReconQuery",
    "ReconSketch",
    "RegisterAccessCounter",
    "ScatterSketchlet",
    "SelectorState",
    "SimConfig",
    "SimResult",
    "SimSnapshot",
    "Sketch",
    "SketchParams",
    "SoftwarePolicy",
    "Trace",
    "TraceEvent",
    "TraceParseError",
    "WireFormat",
    "WireFormatError",
    "ZipfSpec",
    "adapt_threshold",
    "adapt_threshold_by_queue",
    "bit_efficiency",
    "collision_probability",
    "detect_heavy_hitters",
    "estimate_cardinality",
    "estimate_entropy",
    "estimate_fsd",
    "evaluate",
    "f1_score",
    "gen_zipf",
    "get_kernels",
    "hash_index",
    "load_csv",
    "make_policy",
    "rae",
    "register_accesses",
    "relative_error",
    "run",
    "scatter_advantage_bound",
    "snapshot_compare",
    "valid_fraction_oracle",
    "wmre",
    "write_csv",
]

"""Trajectory selection from token-entropy traces.

Segment each trace into high-entropy phases, score trajectories by the
normalized phase centroid, and pick the best of N sampled candidates;
includes confidence/certainty baselines, an evaluation harness, and a
seeded synthetic-trace generator for verification.
"""

from .errors import (
    CacheParseError,
    DuplicateRecordError,
    EmptyPoolError,
    InfeasibleSampleError,
    MalformedTraceError,
    MissingLabelError,
    NoCentroidError,
    SynthSpecError,
    ToolkitError,
    UnsupportedPayloadError,
)
from .harness import (
    MethodRun,
    Report,
    ScalingPoint,
    SeparationStats,
    SweepPoint,
    emit_report,
    filter_impact,
    gaussian_smooth,
    load_report_json,
    method_accuracy,
    pass_at_1,
    run_method,
    scaling_curve,
    separation_stats,
    sweep_grid,
)
from .phases import Hep, HepConfig, Thresholds, compute_thresholds, detect_heps, detect_phases
from .scoring import CentroidScore, compute_centroid, raw_entropy_centroid, score_trace
from .selection import (
    FilterOutcome,
    SelectionConfig,
    SelectionMethod,
    SelectionResult,
    bottom_window_select,
    filter_outliers,
    lowest_centroid_select,
    majority_vote,
    random_select,
    raw_centroid_select,
    select,
    self_certainty_select,
    tail_confidence_select,
    token_confidence,
)
from .synth import PlantedTrace, SynthSpec, draw_trace, generate_corpus, generate_planted
from .traces import (
    EntropyTrace,
    FinishReason,
    TokenLogprobs,
    TrajectoryCache,
    TrajectoryRecord,
    entropy_from_topk,
    read_cache,
    trace_of,
    write_cache,
)

__version__ = "0.1.0"

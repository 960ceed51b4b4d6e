"""Energy-aware video frame-rate scheduling and streaming toolkit."""

from .errors import (
    BindFailure,
    BlockOutOfRange,
    BlockTooLarge,
    ChunkCountMismatch,
    ChunkTooSmall,
    DegenerateInput,
    DimsMismatch,
    EvsoError,
    FrameTooSmall,
    InvalidRate,
    InvariantViolation,
    MalformedHeader,
    MalformedXml,
    MissingManifest,
    NoVideoSets,
    ScheduleMismatch,
    SizeMismatch,
    TooFewFrames,
    TruncatedFrame,
    UnsupportedColorSpace,
    WindowOutOfRange,
)
from .frame_source import (
    MACROBLOCK_EDGE,
    Frame,
    FrameDims,
    FrameSequence,
    as_fps,
    build_corpus,
    encode_y4m,
    read_raw_yuv,
    read_y4m,
    sniff_y4m,
    standard_corpus,
    synth_moving_block,
    synth_noise,
    synth_static,
)
from .similarity import (
    DEFAULT_THETA,
    DiffSeries,
    PairDiff,
    SimilarityConfig,
    d_y,
    diff_series,
    linear_fit,
    m_diff,
    pearson,
    regression_ssim_estimate,
    sad_y_macroblock,
    ssim,
    y_diff,
)
from .fscheduler import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_DELTA,
    DEFAULT_K_WINDOW,
    DEFAULT_TAUS,
    PROFILE_FACTORS,
    ChunkPlan,
    ChunkRange,
    ChunkScheduleEntry,
    RateProfile,
    RateSchedule,
    ScheduleConfig,
    SplitConfig,
    chunk_sigma,
    default_profiles,
    epf,
    est,
    evf,
    rolling_stats,
    schedule,
    split,
)
from .vprocessor import (
    ProcessedChunk,
    ProcessedVideo,
    QualityReport,
    decimate_uniform,
    hold_sequence,
    hold_stream,
    process,
    quality_report,
    restrict_to_chunks,
    retime_indices,
    segment_streams,
    snap_rate,
)
from .empd import (
    LEVEL_FOR_PROFILE,
    PROFILE_FOR_LEVEL,
    AdaptationSet,
    EmpdManifest,
    EvsoLevel,
    Period,
    Representation,
    build_manifest,
    parse_xml,
    serialize_xml,
)
from .stream_sim import (
    LEVEL_FOR_BATTERY,
    BatteryLevel,
    ClientState,
    ServerHandle,
    SessionLog,
    SessionRow,
    TracePoint,
    load_trace,
    segment_count,
    select_representation,
    serve,
    simulate_session,
)

__version__ = "1.0.0"

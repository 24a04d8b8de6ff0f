"""twinforge: digital-twin runtime with a zero-configuration
segmentation/clustering pipeline for industrial telemetry."""

__version__ = "0.1.0"

from .analytics import (
    KMeansModel,
    PeltConfig,
    Segmentation,
    brute_force_segment,
    kmeans_assign,
    kmeans_fit,
    pelt_segment,
    segment_features,
    silhouette_score,
)
from .archive import (
    Archive,
    ArchiveEntry,
    QualityReport,
    SegmentRecord,
    SegmentStats,
    WindowQuery,
    validate_quality,
)
from .orchestrator import (
    DEFAULT_GRID,
    AnomalyEvent,
    BenchmarkReport,
    HyperParams,
    ReplicaResult,
    Timeline,
    build_timeline,
    emit_augmentation_event,
    flag_anomalies,
    rank_replicas,
    run_replica,
    spawn_replica_grid,
    zeroconf_run,
)
from .readiness import (
    FeatureSeries,
    ReadinessConfig,
    detect_outliers,
    fill_gaps,
    rolling_max,
    run_readiness,
    smooth,
    zscore_normalize,
)
from .simulate import (
    GroundTruth,
    MachineTruth,
    PhaseInterval,
    ScenarioSpec,
    default_scenario,
    simulate_scenario,
)
from .twin import (
    DigitalEvent,
    LifecycleEvent,
    LifecyclePhase,
    MachineState,
    OeeInputs,
    StateDelta,
    TwinInstance,
    TwinRuntime,
    TwinState,
    compute_oee,
)
from .wire import (
    Channel,
    Quality,
    TelemetrySample,
    decode_sample,
    encode_sample,
    replay_trace,
    topic_for,
    write_trace,
)

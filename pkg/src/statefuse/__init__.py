"""statefuse: state-space temporal fusion for multi-camera 3D object queries.

A forward-only numpy/scipy reference implementation: diagonal state-space
scans with an equivalent convolutional form, a gated fusion stack over
channel-concatenated query sequences, pinhole camera geometry with ego-motion
alignment, static-query motion elimination, a deterministic scene simulator,
and a scaling benchmark comparing the scan against cross-attention.
"""

from .bench import (
    BenchConfig,
    BenchRow,
    bench_csv,
    bench_svg,
    cross_peak_bytes,
    fit_loglog_slope,
    run_bench,
    ssm_peak_bytes,
)
from .errors import (
    BehindCameraError,
    NumericOverflowError,
    StatefuseError,
    ValidationError,
)
from .fusion import (
    FusedQuerySequence,
    Gs4Params,
    LayerNormParams,
    QueryMambaLayerParams,
    QueryMambaStack,
    depthwise_causal_conv,
    gs4_layer,
    layer_norm,
    query_mamba_block,
    query_mamba_stack,
    seeded_layer_params,
    seeded_stack,
    zero_layer_params,
    zero_stack,
)
from .geometry import (
    CameraModel,
    EgoPose,
    PosEmbedParams,
    align_centers,
    lift_center,
    pos_embed,
    project_point,
    sinusoid_features,
)
from .motion import (
    INVALID_COST,
    MotionCostMatrix,
    MotionElimConfig,
    MotionMask,
    PaddedQuerySequence,
    apply_motion_mask,
    motion_cost,
    motion_mask,
    pad_frames,
    padding_query,
)
from .pipeline import (
    Detection,
    OpCountReport,
    PipelineDims,
    PipelineResult,
    PipelineWeights,
    channel_concat,
    decode_current_frame,
    load_weights,
    op_count_cross_attention,
    op_count_ssm,
    run_pipeline,
    run_pipeline_detailed,
    run_report_csv,
    save_weights,
)
from .queries import (
    DeformAttnParams,
    FeatureMap,
    Proposal2D,
    Query3D,
    bilinear_sample,
    build_query,
    default_depth_bins,
    deformable_attention,
    expected_depth,
)
from .scene import (
    ObjectTrack,
    Scene,
    SceneConfig,
    SceneFrame,
    build_scene,
    camera_ring,
    feature_blob_bytes,
    generate_scene,
    load_scene,
    oracle_proposals,
    save_scene,
    scene_dumps,
    scene_from_dict,
    synth_features,
)
from .selfcheck import CheckResult, run_all_checks
from .ssm import (
    ContinuousSsm,
    DiscreteSsm,
    DiscreteSsmBank,
    SsmKernel,
    apply_convolution,
    discretize_zoh,
    materialize_kernel,
    scan_bank,
    scan_recurrent,
    seeded_bank,
    seeded_continuous,
)

__version__ = "0.1.0"

__all__ = [
    "BehindCameraError",
    "BenchConfig",
    "BenchRow",
    "CameraModel",
    "CheckResult",
    "ContinuousSsm",
    "DeformAttnParams",
    "Detection",
    "DiscreteSsm",
    "DiscreteSsmBank",
    "EgoPose",
    "FeatureMap",
    "FusedQuerySequence",
    "Gs4Params",
    "INVALID_COST",
    "LayerNormParams",
    "MotionCostMatrix",
    "MotionElimConfig",
    "MotionMask",
    "NumericOverflowError",
    "ObjectTrack",
    "OpCountReport",
    "PaddedQuerySequence",
    "PipelineDims",
    "PipelineResult",
    "PipelineWeights",
    "PosEmbedParams",
    "Proposal2D",
    "Query3D",
    "QueryMambaLayerParams",
    "QueryMambaStack",
    "Scene",
    "SceneConfig",
    "SceneFrame",
    "SsmKernel",
    "StatefuseError",
    "ValidationError",
    "align_centers",
    "apply_convolution",
    "apply_motion_mask",
    "bench_csv",
    "bench_svg",
    "bilinear_sample",
    "build_query",
    "build_scene",
    "camera_ring",
    "channel_concat",
    "cross_peak_bytes",
    "decode_current_frame",
    "default_depth_bins",
    "deformable_attention",
    "depthwise_causal_conv",
    "discretize_zoh",
    "expected_depth",
    "feature_blob_bytes",
    "fit_loglog_slope",
    "generate_scene",
    "gs4_layer",
    "layer_norm",
    "lift_center",
    "load_scene",
    "load_weights",
    "materialize_kernel",
    "motion_cost",
    "motion_mask",
    "op_count_cross_attention",
    "op_count_ssm",
    "oracle_proposals",
    "pad_frames",
    "padding_query",
    "pos_embed",
    "project_point",
    "query_mamba_block",
    "query_mamba_stack",
    "run_all_checks",
    "run_bench",
    "run_pipeline",
    "run_pipeline_detailed",
    "run_report_csv",
    "save_scene",
    "save_weights",
    "scan_bank",
    "scan_recurrent",
    "scene_dumps",
    "scene_from_dict",
    "seeded_bank",
    "seeded_continuous",
    "seeded_layer_params",
    "seeded_stack",
    "sinusoid_features",
    "ssm_peak_bytes",
    "synth_features",
    "zero_layer_params",
    "zero_stack",
]

//! lanetopo — lane-graph topology reasoning and evaluation.
//!
//! The crate covers the numeric core of a lane-topology stack without any
//! learning machinery:
//!
//! - **geometry** — 11-point centerline polylines, arc-length resampling,
//!   degree-4 Bézier conversion, detection-range normalization, discrete
//!   Fréchet distance and directed endpoint gaps.
//! - **query** — hierarchical-query kernels: point-query sum pooling,
//!   instance-query assembly and endpoint augmentation on plain matrices.
//! - **topology** — the relationship head: confidence gating, pairwise
//!   MLP + sigmoid scoring, strict 0.5 thresholding and the 3 m
//!   endpoint-gap override.
//! - **metrics** — greedy matching, interpolated AP, lane / traffic-element
//!   detection scores, edge-level topology scores and the combined OLS.
//! - **scenesim** — seeded synthetic scenes, a perturbation engine and
//!   brute-force oracles for the distance and AP kernels.
//! - **schema** / **config** — the JSON frame format and tool configuration.

pub mod config;
pub mod geometry;
pub mod metrics;
pub mod query;
pub mod scenesim;
pub mod schema;
pub mod topology;

pub use config::{ConfigError, GeneratorConfig, MlpArchitecture, ToolConfig};
pub use geometry::{
    bezier_to_polyline, denormalize_points, discrete_frechet, normalize_points, resample_polyline,
    successor_gap, BezierCurve, DetectionRange, GeometryError, Point3, Polyline3,
};
pub use metrics::{
    average_precision, det_l, det_t, evaluate, f_scale, match_instances, ols, ols_with, top_score,
    EvalConfig, EvalReport, MatchResult, MetricsError, ScaleFunction,
};
pub use query::{
    assemble_lc_queries, augment_with_endpoints, point_pooling, EmbeddingMatrix, QueryConfig,
    QueryError,
};
pub use scenesim::{
    attach_features, generate_scene, oracle_ap, oracle_frechet, perturb_scene, Layout,
    PerturbationConfig, SceneError, SceneFrame,
};
pub use schema::{load_frames, parse_frames, save_frames, FrameDocument, PointPolicy, SchemaError};
pub use topology::{
    apply_threshold, filter_by_prior, geometric_override, infer_lane_graph, mlp_score,
    pairwise_confidences, BBox2, InferenceConfig, LaneCenterline, LaneClass, LaneGraph, MlpLayer,
    MlpParams, TopologyError, TopologyMatrix, TrafficElement,
};

//! Pairwise relationship prediction: confidence gating, feature
//! concatenation, MLP + sigmoid scoring, 0.5 thresholding and the 3 m
//! endpoint-gap override producing the lane-lane and lane-TE matrices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{successor_gap, DetectionRange, Point3, Polyline3};
use crate::query::augment_with_endpoints;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("lane centerline must have exactly 11 points, got {0}")]
    BadPointCount(usize),

    #[error("confidence must lie in [0,1], got {0}")]
    BadConfidence(f64),

    #[error("bounding box must satisfy x1 < x2 and y1 < y2")]
    BadBBox,

    #[error("MLP has no layers")]
    EmptyMlp,

    #[error("MLP layer {layer} is malformed: {reason}")]
    BadLayer { layer: usize, reason: String },

    #[error("MLP output width must be 1, got {0}")]
    BadOutputWidth(usize),

    #[error("input width mismatch: MLP expects {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("edge matrix is {rows}x{cols}, expected {expected}x{expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },

    #[error("instance {index} has no feature vector; topology inference requires features")]
    MissingFeature { index: usize },

    #[error("instance features must share one dimension: saw {a} and {b}")]
    InconsistentFeatureDim { a: usize, b: usize },
}

/// Lane category: painted centerlines vs. virtual connecting lines inside
/// intersections, which the classification head keeps apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LaneClass {
    #[serde(rename = "normal")]
    Normal,
    #[serde(rename = "intersection_virtual")]
    IntersectionVirtual,
}

impl LaneClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            LaneClass::Normal => "normal",
            LaneClass::IntersectionVirtual => "intersection_virtual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(LaneClass::Normal),
            "intersection_virtual" => Some(LaneClass::IntersectionVirtual),
            _ => None,
        }
    }

    pub const ALL: [LaneClass; 2] = [LaneClass::Normal, LaneClass::IntersectionVirtual];
}

/// A directed lane centerline: exactly 11 keypoints, a detection confidence
/// and an optional query feature used by the topology head.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneCenterline {
    pub points: Polyline3,
    pub confidence: f64,
    pub lane_class: LaneClass,
    pub feature: Option<Vec<f64>>,
}

impl LaneCenterline {
    pub const NUM_POINTS: usize = 11;

    pub fn new(
        points: Polyline3,
        confidence: f64,
        lane_class: LaneClass,
    ) -> Result<Self, TopologyError> {
        if points.len() != Self::NUM_POINTS {
            return Err(TopologyError::BadPointCount(points.len()));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(TopologyError::BadConfidence(confidence));
        }
        Ok(Self {
            points,
            confidence,
            lane_class,
            feature: None,
        })
    }

    pub fn with_feature(mut self, feature: Vec<f64>) -> Self {
        self.feature = Some(feature);
        self
    }

    pub fn start(&self) -> Point3 {
        self.points.first()
    }

    pub fn end(&self) -> Point3 {
        self.points.last()
    }
}

/// Directed endpoint gap between two lanes (end of `a` to start of `b`).
pub fn lane_gap(a: &LaneCenterline, b: &LaneCenterline) -> f64 {
    successor_gap(&a.points, &b.points)
}

/// Axis-aligned 2D box in pixels, corners ordered x1 < x2, y1 < y2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox2 {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox2 {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, TopologyError> {
        let b = Self { x1, y1, x2, y2 };
        if !(x1 < x2 && y1 < y2) || [x1, y1, x2, y2].iter().any(|v| !v.is_finite()) {
            return Err(TopologyError::BadBBox);
        }
        Ok(b)
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1) * (self.y2 - self.y1)
    }

    /// Intersection-over-union with another box; disjoint boxes score 0.
    pub fn iou(&self, other: &BBox2) -> f64 {
        let ix = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let iy = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// A 2D traffic-element detection on the front-view image.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficElement {
    pub bbox: BBox2,
    pub category: String,
    pub confidence: f64,
    pub feature: Option<Vec<f64>>,
}

impl TrafficElement {
    pub fn new(bbox: BBox2, category: impl Into<String>, confidence: f64) -> Result<Self, TopologyError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(TopologyError::BadConfidence(confidence));
        }
        Ok(Self {
            bbox,
            category: category.into(),
            confidence,
            feature: None,
        })
    }

    pub fn with_feature(mut self, feature: Vec<f64>) -> Self {
        self.feature = Some(feature);
        self
    }
}

/// Anything carrying a detection confidence, for prior-threshold gating.
pub trait Scored {
    fn score(&self) -> f64;
}

impl Scored for LaneCenterline {
    fn score(&self) -> f64 {
        self.confidence
    }
}

impl Scored for TrafficElement {
    fn score(&self) -> f64 {
        self.confidence
    }
}

/// Keeps instances whose confidence strictly exceeds `tau`, preserving
/// order. Returns the gated items and the map from gated to original index.
pub fn filter_by_prior<T: Scored>(items: &[T], tau: f64) -> (Vec<&T>, Vec<usize>) {
    let mut kept = Vec::new();
    let mut index_map = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if item.score() > tau {
            kept.push(item);
            index_map.push(i);
        }
    }
    (kept, index_map)
}

/// One affine MLP layer; `weights[j]` holds the input weights of output
/// unit j (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpLayer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Weights of the relationship MLP. Hidden layers use ReLU; the final layer
/// is affine with output width 1 and is followed by a logistic sigmoid in
/// [`mlp_score`].
///
/// The JSON form is part of the tool's file-format contract:
/// `{"layers": [{"weights": [[...]], "bias": [...]}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<MlpLayer>,
}

impl MlpParams {
    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.layers.is_empty() {
            return Err(TopologyError::EmptyMlp);
        }
        let mut prev_width: Option<usize> = None;
        for (li, layer) in self.layers.iter().enumerate() {
            if layer.weights.is_empty() || layer.weights.len() != layer.bias.len() {
                return Err(TopologyError::BadLayer {
                    layer: li,
                    reason: format!(
                        "{} weight rows vs {} bias entries",
                        layer.weights.len(),
                        layer.bias.len()
                    ),
                });
            }
            let in_width = layer.weights[0].len();
            if in_width == 0 || layer.weights.iter().any(|row| row.len() != in_width) {
                return Err(TopologyError::BadLayer {
                    layer: li,
                    reason: "ragged or empty weight rows".to_string(),
                });
            }
            let finite = layer
                .weights
                .iter()
                .flatten()
                .chain(layer.bias.iter())
                .all(|v| v.is_finite());
            if !finite {
                return Err(TopologyError::BadLayer {
                    layer: li,
                    reason: "non-finite parameter".to_string(),
                });
            }
            if let Some(w) = prev_width {
                if in_width != w {
                    return Err(TopologyError::BadLayer {
                        layer: li,
                        reason: format!("expects input width {in_width}, previous layer emits {w}"),
                    });
                }
            }
            prev_width = Some(layer.weights.len());
        }
        let out = prev_width.unwrap();
        if out != 1 {
            return Err(TopologyError::BadOutputWidth(out));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layers
            .first()
            .and_then(|l| l.weights.first())
            .map(|r| r.len())
            .unwrap_or(0)
    }

    /// All-zero parameters; every score becomes sigmoid(0) = 0.5.
    pub fn zeros(input_width: usize, hidden_widths: &[usize]) -> Self {
        let mut layers = Vec::new();
        let mut w = input_width;
        for &h in hidden_widths {
            layers.push(MlpLayer {
                weights: vec![vec![0.0; w]; h],
                bias: vec![0.0; h],
            });
            w = h;
        }
        layers.push(MlpLayer {
            weights: vec![vec![0.0; w]],
            bias: vec![0.0],
        });
        Self { layers }
    }

    /// Seeded random parameters, uniform in ±1/sqrt(fan_in), for tests and
    /// synthetic inference runs.
    pub fn seeded(input_width: usize, hidden_widths: &[usize], seed: u64) -> Self {
        use rand::rngs::StdRng;
        use rand::{RngExt, SeedableRng};
        let mut rng = StdRng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut w = input_width;
        let widths: Vec<usize> = hidden_widths.iter().copied().chain([1]).collect();
        for h in widths {
            let scale = 1.0 / (w as f64).sqrt();
            let weights = (0..h)
                .map(|_| {
                    (0..w)
                        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale)
                        .collect()
                })
                .collect();
            let bias = (0..h)
                .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale)
                .collect();
            layers.push(MlpLayer { weights, bias });
            w = h;
        }
        Self { layers }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Forward pass through the MLP followed by a logistic sigmoid, yielding a
/// relationship confidence in (0,1).
pub fn mlp_score(params: &MlpParams, x: &[f64]) -> Result<f64, TopologyError> {
    params.validate()?;
    if x.len() != params.input_width() {
        return Err(TopologyError::WidthMismatch {
            expected: params.input_width(),
            got: x.len(),
        });
    }
    let last = params.layers.len() - 1;
    let mut activ: Vec<f64> = x.to_vec();
    for (li, layer) in params.layers.iter().enumerate() {
        let mut next = Vec::with_capacity(layer.bias.len());
        for (row, b) in layer.weights.iter().zip(&layer.bias) {
            let mut acc = *b;
            for (w, v) in row.iter().zip(&activ) {
                acc += w * v;
            }
            if li < last {
                acc = acc.max(0.0); // ReLU on hidden layers
            }
            next.push(acc);
        }
        activ = next;
    }
    Ok(sigmoid(activ[0]))
}

/// Scores every (source, target) feature pair: entry (i, j) is the MLP
/// confidence of `concat(feats_a[i], feats_b[j])`, source features first.
pub fn pairwise_confidences(
    feats_a: &[Vec<f64>],
    feats_b: &[Vec<f64>],
    params: &MlpParams,
) -> Result<Vec<Vec<f64>>, TopologyError> {
    params.validate()?;
    let mut out = Vec::with_capacity(feats_a.len());
    for fa in feats_a {
        let mut row = Vec::with_capacity(feats_b.len());
        for fb in feats_b {
            let mut x = Vec::with_capacity(fa.len() + fb.len());
            x.extend_from_slice(fa);
            x.extend_from_slice(fb);
            row.push(mlp_score(params, &x)?);
        }
        out.push(row);
    }
    Ok(out)
}

/// An edge exists only when its confidence is strictly greater than 0.5.
pub fn apply_threshold(confidences: &[Vec<f64>]) -> Vec<Vec<bool>> {
    confidences
        .iter()
        .map(|row| row.iter().map(|&c| c > 0.5).collect())
        .collect()
}

/// Forces a lane-lane edge wherever the directed endpoint gap is strictly
/// below `gap_limit`, keeping every edge already present. Self-pairs are
/// exempt from forcing: a short lane's end is often near its own start and
/// a self successor-edge is meaningless.
pub fn geometric_override(
    edges: &[Vec<bool>],
    lanes: &[LaneCenterline],
    gap_limit: f64,
) -> Result<Vec<Vec<bool>>, TopologyError> {
    let n = lanes.len();
    if edges.len() != n || edges.iter().any(|row| row.len() != n) {
        return Err(TopologyError::ShapeMismatch {
            rows: edges.len(),
            cols: edges.first().map(|r| r.len()).unwrap_or(0),
            expected: n,
        });
    }
    let mut out = edges.to_vec();
    for i in 0..n {
        for j in 0..n {
            if i != j && !out[i][j] && lane_gap(&lanes[i], &lanes[j]) < gap_limit {
                out[i][j] = true;
            }
        }
    }
    Ok(out)
}

/// A scored relationship matrix over gated instances.
///
/// Invariant: `edges[i][j]` implies `confidences[i][j] > 0.5` or
/// `forced[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyMatrix {
    pub confidences: Vec<Vec<f64>>,
    pub edges: Vec<Vec<bool>>,
    pub forced: Vec<Vec<bool>>,
}

impl TopologyMatrix {
    pub fn rows(&self) -> usize {
        self.edges.len()
    }

    pub fn cols(&self) -> usize {
        self.edges.first().map(|r| r.len()).unwrap_or(0)
    }

    fn from_confidences(confidences: Vec<Vec<f64>>) -> Self {
        let edges = apply_threshold(&confidences);
        let forced = confidences
            .iter()
            .map(|row| vec![false; row.len()])
            .collect();
        Self {
            confidences,
            edges,
            forced,
        }
    }
}

/// Inference-time knobs for [`infer_lane_graph`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    /// Prior detection-confidence gate applied before pairing.
    pub tau: f64,
    /// Endpoint-gap limit in meters for the geometric override.
    pub gap_limit: f64,
    /// Range used to normalize endpoint coordinates before they join the
    /// lane query; raw meters would dominate the embedding scale.
    pub range: DetectionRange,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            tau: 0.3,
            gap_limit: 3.0,
            range: DetectionRange::default(),
        }
    }
}

/// Result of topology inference over gated instances, with maps back to the
/// original instance indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneGraph {
    pub lane_lane: TopologyMatrix,
    pub lane_te: TopologyMatrix,
    pub lane_indices: Vec<usize>,
    pub te_indices: Vec<usize>,
}

fn required_feature<'a, T>(
    items: &[&'a T],
    get: impl Fn(&'a T) -> Option<&'a Vec<f64>>,
) -> Result<Vec<&'a Vec<f64>>, TopologyError> {
    let mut out = Vec::with_capacity(items.len());
    let mut dim: Option<usize> = None;
    for (i, item) in items.iter().enumerate() {
        let f = get(item).ok_or(TopologyError::MissingFeature { index: i })?;
        if let Some(d) = dim {
            if f.len() != d {
                return Err(TopologyError::InconsistentFeatureDim { a: d, b: f.len() });
            }
        }
        dim = Some(f.len());
        out.push(f);
    }
    Ok(out)
}

/// Runs the full relationship head: gates instances by `tau`, augments each
/// lane query with its normalized endpoints, scores all ordered pairs,
/// thresholds at 0.5 and applies the geometric override to the lane-lane
/// matrix only.
pub fn infer_lane_graph(
    lanes: &[LaneCenterline],
    traffic_elements: &[TrafficElement],
    lane_params: &MlpParams,
    te_params: &MlpParams,
    config: &InferenceConfig,
) -> Result<LaneGraph, TopologyError> {
    let (gated_lanes, lane_indices) = filter_by_prior(lanes, config.tau);
    let (gated_tes, te_indices) = filter_by_prior(traffic_elements, config.tau);

    let lane_feats = required_feature(&gated_lanes, |l| l.feature.as_ref())?;
    let te_feats = required_feature(&gated_tes, |t| t.feature.as_ref())?;

    let aug: Vec<Vec<f64>> = gated_lanes
        .iter()
        .zip(&lane_feats)
        .map(|(lane, feat)| {
            augment_with_endpoints(
                feat,
                config.range.normalize(lane.start()),
                config.range.normalize(lane.end()),
            )
        })
        .collect();

    let ll_conf = if aug.is_empty() {
        Vec::new()
    } else {
        pairwise_confidences(&aug, &aug, lane_params)?
    };
    let mut lane_lane = TopologyMatrix::from_confidences(ll_conf);
    for (i, a) in gated_lanes.iter().enumerate() {
        for (j, b) in gated_lanes.iter().enumerate() {
            if i != j && lane_gap(a, b) < config.gap_limit {
                lane_lane.forced[i][j] = true;
                lane_lane.edges[i][j] = true;
            }
        }
    }

    let lt_conf = if aug.is_empty() || te_feats.is_empty() {
        vec![Vec::new(); aug.len()]
    } else {
        let te_owned: Vec<Vec<f64>> = te_feats.iter().map(|f| (*f).clone()).collect();
        pairwise_confidences(&aug, &te_owned, te_params)?
    };
    let lane_te = TopologyMatrix::from_confidences(lt_conf);

    Ok(LaneGraph {
        lane_lane,
        lane_te,
        lane_indices,
        te_indices,
    })
}

//! Evaluation suite: greedy instance matching, interpolated average
//! precision, the lane / traffic-element detection scores, edge-level
//! topology scores and the combined OLS.
//!
//! Dataset evaluation pools matches across frames before computing AP
//! (dataset-level AP, not per-frame averaging) and is deterministic for any
//! parallel schedule: frames are matched independently and reduced in frame
//! order.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::discrete_frechet;
use crate::scenesim::SceneFrame;
use crate::topology::{LaneCenterline, LaneClass, TrafficElement};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("metric input {0} outside [0,1]")]
    OutOfRange(f64),

    #[error("no Fréchet thresholds configured")]
    NoThresholds,

    #[error("duplicate frame id \"{0}\"")]
    DuplicateFrameId(String),

    #[error("frame ids mismatched: missing in predictions: {missing:?}; unmatched predictions: {unexpected:?}")]
    FrameIdMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },

    #[error("frame \"{frame_id}\": {reason}")]
    BadFrame { frame_id: String, reason: String },
}

/// One ranked prediction after matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// Index of the prediction in its original list.
    pub pred_index: usize,
    pub confidence: f64,
    /// Matched ground-truth index, if any.
    pub gt_index: Option<usize>,
}

/// Result of greedy matching: predictions in descending-confidence order,
/// each ground truth claimed at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub detections: Vec<Detection>,
    pub num_gt: usize,
    pub threshold: f64,
}

/// Greedy matching in descending prediction-confidence order: each
/// prediction claims the nearest unmatched ground truth within `threshold`
/// (inclusive); distance ties go to the lowest ground-truth index.
pub fn match_instances<P, G>(
    preds: &[P],
    gts: &[G],
    confidence: impl Fn(&P) -> f64,
    distance: impl Fn(&P, &G) -> f64,
    threshold: f64,
) -> MatchResult {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        confidence(&preds[b])
            .partial_cmp(&confidence(&preds[a]))
            .unwrap()
    });

    let mut gt_used = vec![false; gts.len()];
    let mut detections = Vec::with_capacity(preds.len());
    for &pi in &order {
        let mut best: Option<(f64, usize)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_used[gi] {
                continue;
            }
            let d = distance(&preds[pi], gt);
            if d <= threshold && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, gi));
            }
        }
        let gt_index = best.map(|(_, gi)| {
            gt_used[gi] = true;
            gi
        });
        detections.push(Detection {
            pred_index: pi,
            confidence: confidence(&preds[pi]),
            gt_index,
        });
    }
    MatchResult {
        detections,
        num_gt: gts.len(),
        threshold,
    }
}

/// Maps each original prediction index to its matched ground-truth index.
pub fn vertex_matching(result: &MatchResult, n_preds: usize) -> Vec<Option<usize>> {
    let mut map = vec![None; n_preds];
    for det in &result.detections {
        map[det.pred_index] = det.gt_index;
    }
    map
}

/// All-point interpolated AP over a ranked (confidence, is-true-positive)
/// list: area under the precision envelope against recall.
///
/// Confidence ties rank false positives first. The pessimistic tie rule
/// makes the score a function of the (confidence, hit) multiset alone,
/// independent of input order and instance labeling.
fn ap_from_ranked(ranked: &mut [(f64, bool)], num_gt: usize) -> f64 {
    if num_gt == 0 {
        return if ranked.is_empty() { 1.0 } else { 0.0 };
    }
    if ranked.is_empty() {
        return 0.0;
    }
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    let mut precisions = Vec::with_capacity(ranked.len());
    let mut tp = 0usize;
    for (rank, &(_, is_tp)) in ranked.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        precisions.push(tp as f64 / (rank + 1) as f64);
    }
    // precision envelope from the right
    let mut envelope = precisions;
    for k in (0..envelope.len() - 1).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    // every true positive advances recall by exactly 1/num_gt
    let mut sum = 0.0;
    for (k, &(_, is_tp)) in ranked.iter().enumerate() {
        if is_tp {
            sum += envelope[k];
        }
    }
    sum / num_gt as f64
}

/// All-point interpolated average precision of a match result.
///
/// With no ground truth the score is vacuously 1.0 when there are no
/// predictions and 0.0 otherwise.
pub fn average_precision(result: &MatchResult) -> f64 {
    let mut ranked: Vec<(f64, bool)> = result
        .detections
        .iter()
        .map(|d| (d.confidence, d.gt_index.is_some()))
        .collect();
    ap_from_ranked(&mut ranked, result.num_gt)
}

/// Matches lanes by discrete Fréchet distance.
pub fn match_lanes(
    preds: &[&LaneCenterline],
    gts: &[&LaneCenterline],
    threshold: f64,
) -> MatchResult {
    match_instances(
        preds,
        gts,
        |l| l.confidence,
        |a, b| discrete_frechet(a.points.points(), b.points.points()).unwrap(),
        threshold,
    )
}

/// Matches traffic elements by IoU within the same category; pairs from
/// different categories never match.
pub fn match_traffic_elements(
    preds: &[&TrafficElement],
    gts: &[&TrafficElement],
    iou_threshold: f64,
) -> MatchResult {
    match_instances(
        preds,
        gts,
        |t| t.confidence,
        |a, b| {
            if a.category == b.category {
                1.0 - a.bbox.iou(&b.bbox)
            } else {
                f64::INFINITY
            }
        },
        1.0 - iou_threshold,
    )
}

fn lanes_of_class(lanes: &[LaneCenterline], class: LaneClass) -> Vec<&LaneCenterline> {
    lanes.iter().filter(|l| l.lane_class == class).collect()
}

fn tes_of_category<'a>(tes: &'a [TrafficElement], category: &str) -> Vec<&'a TrafficElement> {
    tes.iter().filter(|t| t.category == category).collect()
}

/// Lane detection score: AP under Fréchet matching, computed per lane class
/// and threshold, averaged over thresholds and over the classes present in
/// the ground truth.
pub fn det_l(preds: &[LaneCenterline], gts: &[LaneCenterline], thresholds: &[f64]) -> f64 {
    let mut per_class = Vec::new();
    for class in LaneClass::ALL {
        let gt_c = lanes_of_class(gts, class);
        if gt_c.is_empty() {
            continue;
        }
        let pred_c = lanes_of_class(preds, class);
        let mean: f64 = thresholds
            .iter()
            .map(|&t| average_precision(&match_lanes(&pred_c, &gt_c, t)))
            .sum::<f64>()
            / thresholds.len() as f64;
        per_class.push(mean);
    }
    if per_class.is_empty() {
        return if preds.is_empty() { 1.0 } else { 0.0 };
    }
    per_class.iter().sum::<f64>() / per_class.len() as f64
}

/// Traffic-element detection score: AP at the IoU threshold per category,
/// averaged over the categories present in the ground truth.
pub fn det_t(preds: &[TrafficElement], gts: &[TrafficElement], iou_threshold: f64) -> f64 {
    let categories: BTreeSet<&str> = gts.iter().map(|t| t.category.as_str()).collect();
    if categories.is_empty() {
        return if preds.is_empty() { 1.0 } else { 0.0 };
    }
    let mut sum = 0.0;
    for cat in &categories {
        let gt_c = tes_of_category(gts, cat);
        let pred_c = tes_of_category(preds, cat);
        sum += average_precision(&match_traffic_elements(&pred_c, &gt_c, iou_threshold));
    }
    sum / categories.len() as f64
}

/// Collects the ranked edge detections of one scene for edge-level AP.
///
/// Predicted edges whose endpoints both matched a ground-truth vertex enter
/// the ranking; such an edge is a true positive exactly when the
/// corresponding ground-truth edge exists. Ground-truth edges with unmatched
/// endpoints stay in `num_gt` as unrecoverable false negatives.
fn edge_detections(
    pred_edges: &[Vec<bool>],
    pred_confidences: Option<&[Vec<f64>]>,
    gt_edges: &[Vec<bool>],
    row_matching: &[Option<usize>],
    col_matching: &[Option<usize>],
) -> (Vec<(f64, bool)>, usize) {
    let num_gt = gt_edges
        .iter()
        .map(|row| row.iter().filter(|&&e| e).count())
        .sum();
    let mut ranked = Vec::new();
    for (i, row) in pred_edges.iter().enumerate() {
        for (j, &edge) in row.iter().enumerate() {
            if !edge {
                continue;
            }
            let (Some(mi), Some(mj)) = (row_matching[i], col_matching[j]) else {
                continue;
            };
            let conf = pred_confidences.map(|c| c[i][j]).unwrap_or(1.0);
            ranked.push((conf, gt_edges[mi][mj]));
        }
    }
    (ranked, num_gt)
}

/// Edge-level AP of a predicted relationship matrix against the ground
/// truth, under a fixed vertex matching. `row_matching[i]` / `col_matching[j]`
/// give the ground-truth index matched to predicted row/column instances.
pub fn top_score(
    pred_edges: &[Vec<bool>],
    pred_confidences: Option<&[Vec<f64>]>,
    gt_edges: &[Vec<bool>],
    row_matching: &[Option<usize>],
    col_matching: &[Option<usize>],
) -> f64 {
    let (mut ranked, num_gt) = edge_detections(
        pred_edges,
        pred_confidences,
        gt_edges,
        row_matching,
        col_matching,
    );
    ap_from_ranked(&mut ranked, num_gt)
}

/// Metric rebalancing function applied to the topology scores inside OLS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleFunction {
    #[default]
    Sqrt,
    Identity,
}

impl ScaleFunction {
    pub fn apply(&self, x: f64) -> Result<f64, MetricsError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(MetricsError::OutOfRange(x));
        }
        Ok(match self {
            ScaleFunction::Sqrt => x.sqrt(),
            ScaleFunction::Identity => x,
        })
    }
}

/// Default scale function: the square root. Monotone with f(0)=0, f(1)=1.
pub fn f_scale(x: f64) -> Result<f64, MetricsError> {
    ScaleFunction::Sqrt.apply(x)
}

/// Combined score with a configurable scale function on the topology terms.
pub fn ols_with(
    scale: ScaleFunction,
    det_l: f64,
    det_t: f64,
    top_ll: f64,
    top_lt: f64,
) -> Result<f64, MetricsError> {
    for v in [det_l, det_t] {
        if !(0.0..=1.0).contains(&v) {
            return Err(MetricsError::OutOfRange(v));
        }
    }
    Ok(0.25 * (det_l + det_t + scale.apply(top_ll)? + scale.apply(top_lt)?))
}

/// OLS = ¼ · (DET_l + DET_t + f(TOP_ll) + f(TOP_lt)) with f = √.
pub fn ols(det_l: f64, det_t: f64, top_ll: f64, top_lt: f64) -> Result<f64, MetricsError> {
    ols_with(ScaleFunction::Sqrt, det_l, det_t, top_ll, top_lt)
}

/// Thresholds and options for dataset evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Fréchet matching thresholds in meters for the lane detection score.
    pub frechet_thresholds: Vec<f64>,
    /// IoU threshold for the traffic-element detection score.
    pub iou_threshold: f64,
    /// Fréchet threshold in meters for lane vertex matching in the topology
    /// scores.
    pub lane_match_threshold: f64,
    pub scale: ScaleFunction,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            frechet_thresholds: vec![1.0, 2.0, 3.0],
            iou_threshold: 0.75,
            lane_match_threshold: 1.5,
            scale: ScaleFunction::Sqrt,
        }
    }
}

/// Full evaluation output. `ols` always equals the combination of the four
/// scores under the configured scale function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub det_l: f64,
    pub det_t: f64,
    pub top_ll: f64,
    pub top_lt: f64,
    pub ols: f64,
    pub breakdowns: EvalBreakdowns,
}

/// Per-threshold and per-category detail behind the headline scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalBreakdowns {
    /// Lane class → threshold → pooled AP.
    pub det_l: BTreeMap<String, BTreeMap<String, f64>>,
    /// Traffic-element category → pooled AP.
    pub det_t: BTreeMap<String, f64>,
}

/// Ranked detections plus the ground-truth count they compete for; the unit
/// of cross-frame pooling.
#[derive(Debug, Clone, Default)]
struct RankedPool {
    ranked: Vec<(f64, bool)>,
    num_gt: usize,
}

impl RankedPool {
    fn absorb(&mut self, other: RankedPool) {
        self.ranked.extend(other.ranked);
        self.num_gt += other.num_gt;
    }

    fn ap(mut self) -> f64 {
        ap_from_ranked(&mut self.ranked, self.num_gt)
    }
}

/// Per-frame match fragments, pooled later in frame order.
struct FrameFragment {
    det_l: Vec<((LaneClass, usize), RankedPool)>,
    det_t: Vec<(String, RankedPool)>,
    top_ll: RankedPool,
    top_lt: RankedPool,
    pred_lanes: usize,
    pred_tes: usize,
}

fn ranked_of(result: &MatchResult) -> RankedPool {
    RankedPool {
        ranked: result
            .detections
            .iter()
            .map(|d| (d.confidence, d.gt_index.is_some()))
            .collect(),
        num_gt: result.num_gt,
    }
}

fn frame_fragment(pred: &SceneFrame, gt: &SceneFrame, config: &EvalConfig) -> FrameFragment {
    let mut det_l_frags = Vec::new();
    for class in LaneClass::ALL {
        let gt_c = lanes_of_class(&gt.lanes, class);
        let pred_c = lanes_of_class(&pred.lanes, class);
        for (ti, &t) in config.frechet_thresholds.iter().enumerate() {
            det_l_frags.push(((class, ti), ranked_of(&match_lanes(&pred_c, &gt_c, t))));
        }
    }

    let categories: BTreeSet<String> = gt
        .traffic_elements
        .iter()
        .chain(&pred.traffic_elements)
        .map(|t| t.category.clone())
        .collect();
    let mut det_t_frags = Vec::new();
    for cat in &categories {
        let gt_c = tes_of_category(&gt.traffic_elements, cat);
        let pred_c = tes_of_category(&pred.traffic_elements, cat);
        let m = match_traffic_elements(&pred_c, &gt_c, config.iou_threshold);
        det_t_frags.push((cat.clone(), ranked_of(&m)));
    }

    // vertex matchings for the topology scores
    let pred_lane_refs: Vec<&LaneCenterline> = pred.lanes.iter().collect();
    let gt_lane_refs: Vec<&LaneCenterline> = gt.lanes.iter().collect();
    let lane_match = vertex_matching(
        &match_lanes(&pred_lane_refs, &gt_lane_refs, config.lane_match_threshold),
        pred.lanes.len(),
    );
    let pred_te_refs: Vec<&TrafficElement> = pred.traffic_elements.iter().collect();
    let gt_te_refs: Vec<&TrafficElement> = gt.traffic_elements.iter().collect();
    let te_match = vertex_matching(
        &match_traffic_elements(&pred_te_refs, &gt_te_refs, config.iou_threshold),
        pred.traffic_elements.len(),
    );

    let (ll_ranked, ll_gt) =
        edge_detections(&pred.lane_lane, None, &gt.lane_lane, &lane_match, &lane_match);
    let (lt_ranked, lt_gt) = edge_detections(&pred.lane_te, None, &gt.lane_te, &lane_match, &te_match);
    let top_ll = RankedPool {
        ranked: ll_ranked,
        num_gt: ll_gt,
    };
    let top_lt = RankedPool {
        ranked: lt_ranked,
        num_gt: lt_gt,
    };

    FrameFragment {
        det_l: det_l_frags,
        det_t: det_t_frags,
        top_ll,
        top_lt,
        pred_lanes: pred.lanes.len(),
        pred_tes: pred.traffic_elements.len(),
    }
}

fn align_frames<'a>(
    pred_frames: &'a [SceneFrame],
    gt_frames: &'a [SceneFrame],
) -> Result<Vec<(&'a SceneFrame, &'a SceneFrame)>, MetricsError> {
    let mut pred_by_id: HashMap<&str, &SceneFrame> = HashMap::new();
    for frame in pred_frames {
        if pred_by_id.insert(frame.frame_id.as_str(), frame).is_some() {
            return Err(MetricsError::DuplicateFrameId(frame.frame_id.clone()));
        }
    }
    let mut seen_gt = std::collections::HashSet::new();
    for frame in gt_frames {
        if !seen_gt.insert(frame.frame_id.as_str()) {
            return Err(MetricsError::DuplicateFrameId(frame.frame_id.clone()));
        }
    }

    let missing: Vec<String> = gt_frames
        .iter()
        .filter(|g| !pred_by_id.contains_key(g.frame_id.as_str()))
        .map(|g| g.frame_id.clone())
        .collect();
    let unexpected: Vec<String> = pred_frames
        .iter()
        .filter(|p| !seen_gt.contains(p.frame_id.as_str()))
        .map(|p| p.frame_id.clone())
        .collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(MetricsError::FrameIdMismatch {
            missing,
            unexpected,
        });
    }

    Ok(gt_frames
        .iter()
        .map(|g| (pred_by_id[g.frame_id.as_str()], g))
        .collect())
}

/// Evaluates prediction frames against ground-truth frames aligned by
/// frame id. Matching runs per frame (in parallel); all AP values are
/// computed on matches pooled across the dataset. The report is identical
/// for any worker count.
pub fn evaluate(
    pred_frames: &[SceneFrame],
    gt_frames: &[SceneFrame],
    config: &EvalConfig,
) -> Result<EvalReport, MetricsError> {
    if config.frechet_thresholds.is_empty() {
        return Err(MetricsError::NoThresholds);
    }
    for frame in pred_frames.iter().chain(gt_frames) {
        frame
            .validate_shapes()
            .map_err(|reason| MetricsError::BadFrame {
                frame_id: frame.frame_id.clone(),
                reason,
            })?;
    }

    let pairs = align_frames(pred_frames, gt_frames)?;
    let fragments: Vec<FrameFragment> = pairs
        .par_iter()
        .map(|(pred, gt)| frame_fragment(pred, gt, config))
        .collect();

    // pool per (class, threshold)
    let mut det_l_pool: BTreeMap<(LaneClass, usize), RankedPool> = BTreeMap::new();
    let mut det_t_pool: BTreeMap<String, RankedPool> = BTreeMap::new();
    let mut top_ll_pool = RankedPool::default();
    let mut top_lt_pool = RankedPool::default();
    let mut pred_lanes_total = 0usize;
    let mut pred_tes_total = 0usize;

    for frag in fragments {
        for (key, pool) in frag.det_l {
            det_l_pool.entry(key).or_default().absorb(pool);
        }
        for (cat, pool) in frag.det_t {
            det_t_pool.entry(cat).or_default().absorb(pool);
        }
        top_ll_pool.absorb(frag.top_ll);
        top_lt_pool.absorb(frag.top_lt);
        pred_lanes_total += frag.pred_lanes;
        pred_tes_total += frag.pred_tes;
    }

    // lane score: classes with ground truth present, averaged over thresholds
    let n_thresholds = config.frechet_thresholds.len();
    let mut det_l_breakdown: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut class_means = Vec::new();
    for class in LaneClass::ALL {
        let has_gt = (0..n_thresholds)
            .any(|ti| det_l_pool.get(&(class, ti)).map(|s| s.num_gt).unwrap_or(0) > 0);
        if !has_gt {
            continue;
        }
        let mut sum = 0.0;
        let entry = det_l_breakdown.entry(class.as_str().to_string()).or_default();
        for (ti, &t) in config.frechet_thresholds.iter().enumerate() {
            let pool = det_l_pool.get(&(class, ti)).cloned().unwrap_or_default();
            let ap = pool.ap();
            entry.insert(format!("{t}"), ap);
            sum += ap;
        }
        class_means.push(sum / n_thresholds as f64);
    }
    let det_l_score = if class_means.is_empty() {
        if pred_lanes_total == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        class_means.iter().sum::<f64>() / class_means.len() as f64
    };

    // traffic-element score: categories with ground truth present
    let mut det_t_breakdown = BTreeMap::new();
    let mut cat_aps = Vec::new();
    for (cat, pool) in &det_t_pool {
        if pool.num_gt == 0 {
            continue;
        }
        let ap = pool.clone().ap();
        det_t_breakdown.insert(cat.clone(), ap);
        cat_aps.push(ap);
    }
    let det_t_score = if cat_aps.is_empty() {
        if pred_tes_total == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        cat_aps.iter().sum::<f64>() / cat_aps.len() as f64
    };

    let top_ll_score = top_ll_pool.ap();
    let top_lt_score = top_lt_pool.ap();

    let ols_score = ols_with(
        config.scale,
        det_l_score,
        det_t_score,
        top_ll_score,
        top_lt_score,
    )?;

    Ok(EvalReport {
        det_l: det_l_score,
        det_t: det_t_score,
        top_ll: top_ll_score,
        top_lt: top_lt_score,
        ols: ols_score,
        breakdowns: EvalBreakdowns {
            det_l: det_l_breakdown,
            det_t: det_t_breakdown,
        },
    })
}

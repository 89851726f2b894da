//! Synthetic lane-graph scenes: seeded generators for chain, grid and
//! intersection layouts, a perturbation engine producing prediction frames
//! from ground truth, and small brute-force oracles kept physically apart
//! from the kernels they check.

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{successor_gap, DetectionRange, Point3, Polyline3};
use crate::metrics::MatchResult;
use crate::topology::{BBox2, LaneCenterline, LaneClass, TrafficElement};

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("perturbation rate {0} outside [0,1]")]
    InvalidRate(f64),

    #[error("noise sigma {0} must be finite and non-negative")]
    InvalidSigma(f64),

    #[error("oracle input too large: {got} items, limit {limit}")]
    OracleTooLarge { limit: usize, got: usize },
}

/// Scene layout families produced by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Grid,
    Chain,
    Intersection,
}

impl Layout {
    pub fn as_str(&self) -> &'static str {
        match self {
            Layout::Grid => "grid",
            Layout::Chain => "chain",
            Layout::Intersection => "intersection",
        }
    }
}

/// One annotated frame: instances plus the two relationship matrices.
///
/// `lane_lane` is L×L and `lane_te` is L×T over the instance lists; in
/// generated ground truth a lane-lane edge exists exactly where the directed
/// endpoint gap is below 0.1 m, and the diagonal is always false.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFrame {
    pub frame_id: String,
    pub lanes: Vec<LaneCenterline>,
    pub traffic_elements: Vec<TrafficElement>,
    pub lane_lane: Vec<Vec<bool>>,
    pub lane_te: Vec<Vec<bool>>,
}

impl SceneFrame {
    /// Checks that the matrix dimensions agree with the instance counts.
    pub fn validate_shapes(&self) -> Result<(), String> {
        let l = self.lanes.len();
        let t = self.traffic_elements.len();
        if self.lane_lane.len() != l || self.lane_lane.iter().any(|row| row.len() != l) {
            return Err(format!(
                "lane_lane must be {l}x{l}, got {}x{}",
                self.lane_lane.len(),
                self.lane_lane.first().map(|r| r.len()).unwrap_or(0)
            ));
        }
        if self.lane_te.len() != l || self.lane_te.iter().any(|row| row.len() != t) {
            return Err(format!(
                "lane_te must be {l}x{t}, got {}x{}",
                self.lane_te.len(),
                self.lane_te.first().map(|r| r.len()).unwrap_or(0)
            ));
        }
        Ok(())
    }
}

/// Gap below which generated lanes are considered connected.
pub const GENERATOR_EDGE_GAP: f64 = 0.1;

// Smooth scene-wide lateral and vertical fields. Shared endpoints are
// computed from identical (x, y) inputs so touching lanes agree bitwise.
struct Fields {
    amp: f64,
    freq: f64,
    phase: f64,
    z_amp: f64,
    z_freq: f64,
    z_phase: f64,
}

impl Fields {
    fn from_rng(rng: &mut StdRng, amp_max: f64) -> Self {
        Self {
            amp: 1.0 + rng.random::<f64>() * (amp_max - 1.0),
            freq: 0.02 + rng.random::<f64>() * 0.04,
            phase: rng.random::<f64>() * std::f64::consts::TAU,
            z_amp: 0.2 + rng.random::<f64>() * 0.3, // mild z relief, <= 0.5 m
            z_freq: 0.03 + rng.random::<f64>() * 0.05,
            z_phase: rng.random::<f64>() * std::f64::consts::TAU,
        }
    }

    fn y(&self, x: f64) -> f64 {
        self.amp * (self.freq * x + self.phase).sin()
    }

    fn z(&self, x: f64, y: f64) -> f64 {
        self.z_amp * (self.z_freq * (x + 0.7 * y) + self.z_phase).sin()
    }
}

fn lane_from_points(points: Vec<Point3>, class: LaneClass) -> LaneCenterline {
    LaneCenterline::new(Polyline3::new(points).unwrap(), 1.0, class).unwrap()
}

/// Samples 11 points of a curve between two prepared endpoints. The
/// endpoints are used verbatim so chained lanes touch exactly.
fn lane_between(
    start: Point3,
    end: Point3,
    interior: impl Fn(f64) -> Point3,
    class: LaneClass,
) -> LaneCenterline {
    let mut pts = Vec::with_capacity(11);
    pts.push(start);
    for m in 1..10 {
        pts.push(interior(m as f64 / 10.0));
    }
    pts.push(end);
    lane_from_points(pts, class)
}

fn chain_lanes(rng: &mut StdRng, n_lanes: usize, base_y: f64, amp_max: f64) -> Vec<LaneCenterline> {
    let fields = Fields::from_rng(rng, amp_max);
    let x0 = -44.0;
    let step = 88.0 / n_lanes.max(1) as f64;
    let waypoint = |k: usize| {
        let x = x0 + step * k as f64;
        let y = base_y + fields.y(x);
        Point3::new(x, y, fields.z(x, y))
    };
    (0..n_lanes)
        .map(|k| {
            let start = waypoint(k);
            let end = waypoint(k + 1);
            lane_between(
                start,
                end,
                |t| {
                    let x = x0 + step * (k as f64 + t);
                    let y = base_y + fields.y(x);
                    Point3::new(x, y, fields.z(x, y))
                },
                LaneClass::Normal,
            )
        })
        .collect()
}

fn grid_lanes(rng: &mut StdRng, n_lanes: usize) -> Vec<LaneCenterline> {
    const PER_ROW: usize = 5;
    let rows = n_lanes.div_ceil(PER_ROW).max(1);
    let spacing = if rows > 1 {
        (40.0 / (rows - 1) as f64).min(9.0)
    } else {
        0.0
    };
    let mut lanes = Vec::with_capacity(n_lanes);
    let mut remaining = n_lanes;
    for r in 0..rows {
        let in_row = remaining.min(PER_ROW);
        remaining -= in_row;
        let base_y = (r as f64 - (rows - 1) as f64 / 2.0) * spacing;
        lanes.extend(chain_lanes(rng, in_row, base_y, 1.5));
    }
    lanes
}

fn intersection_lanes(rng: &mut StdRng, n_lanes: usize) -> Vec<LaneCenterline> {
    let fields = Fields::from_rng(rng, 1.0);
    let point = |x: f64, y: f64| Point3::new(x, y, fields.z(x, y));
    let straight = |a: Point3, b: Point3, class: LaneClass| {
        lane_between(
            a,
            b,
            |t| {
                let x = a.x + t * (b.x - a.x);
                let y = a.y + t * (b.y - a.y);
                point(x, y)
            },
            class,
        )
    };

    // four-arm crossing with right-hand entry/exit offsets; connectors and
    // turn lanes inside the junction square are virtual
    let o = 2.0;
    let g = 10.0;
    let normal = LaneClass::Normal;
    let virt = LaneClass::IntersectionVirtual;
    let mut canonical: Vec<LaneCenterline> = Vec::new();
    let mut road = |a_out: Point3, a_in: Point3, b_in: Point3, b_out: Point3, turn_to: Point3| {
        canonical.push(straight(a_in, b_in, virt)); // connector first: a
                                                    // virtual lane survives any truncation
        canonical.push(straight(a_out, a_in, normal));
        canonical.push(straight(b_in, b_out, normal));
        canonical.push(straight(a_in, turn_to, virt));
    };
    // west -> east at y = -o; right turn feeds the southbound exit
    road(
        point(-44.0, -o),
        point(-g, -o),
        point(g, -o),
        point(44.0, -o),
        point(-o, -g),
    );
    // east -> west at y = +o; right turn feeds the northbound exit
    road(
        point(44.0, o),
        point(g, o),
        point(-g, o),
        point(-44.0, o),
        point(o, g),
    );
    // south -> north at x = +o; right turn feeds the eastbound exit
    road(
        point(o, -22.0),
        point(o, -g),
        point(o, g),
        point(o, 22.0),
        point(g, -o),
    );
    // north -> south at x = -o; right turn feeds the westbound exit
    road(
        point(-o, 22.0),
        point(-o, g),
        point(-o, -g),
        point(-o, -22.0),
        point(-g, o),
    );

    let mut lanes = canonical;
    lanes.truncate(n_lanes);
    // extra lanes beyond the canonical junction become disconnected fillers
    // in the quadrant corners
    let mut extra = 0usize;
    while lanes.len() < n_lanes {
        let quadrant = extra % 4;
        let layer = (extra / 4) as f64;
        let (sx, sy) = match quadrant {
            0 => (1.0, 1.0),
            1 => (-1.0, 1.0),
            2 => (-1.0, -1.0),
            _ => (1.0, -1.0),
        };
        let y = sy * (8.0 + 3.0 * layer).min(24.0);
        let a = point(sx * 14.0, y);
        let b = point(sx * 34.0, y);
        lanes.push(straight(a, b, normal));
        extra += 1;
    }
    lanes
}

fn traffic_elements(n_tes: usize) -> Vec<TrafficElement> {
    const CATEGORIES: [&str; 2] = ["traffic_light", "road_sign"];
    (0..n_tes)
        .map(|t| {
            let col = t % 8;
            let row = (t / 8) % 8;
            let jitter = ((t / 64) % 5) as f64 * 13.0;
            let x1 = 60.0 + 240.0 * col as f64 + jitter;
            let y1 = 80.0 + 170.0 * row as f64 + jitter;
            let w = 120.0 + 40.0 * ((t * 7) % 3) as f64;
            let h = 100.0 + 30.0 * ((t * 5) % 4) as f64;
            TrafficElement::new(
                BBox2::new(x1, y1, x1 + w, y1 + h).unwrap(),
                CATEGORIES[t % CATEGORIES.len()],
                1.0,
            )
            .unwrap()
        })
        .collect()
}

/// Generates one ground-truth frame; a pure function of its arguments.
///
/// All lanes are 11-point polylines inside the default detection range with
/// confidence 1.0. Lane-lane edges are derived from the generated geometry:
/// an edge exists exactly where the directed endpoint gap is below
/// [`GENERATOR_EDGE_GAP`]. Traffic elements are assigned round-robin to the
/// lanes they control.
pub fn generate_scene(seed: u64, n_lanes: usize, n_tes: usize, layout: Layout) -> SceneFrame {
    let mut rng = StdRng::seed_from_u64(seed);
    let lanes = match layout {
        Layout::Chain => chain_lanes(&mut rng, n_lanes, 0.0, 8.0),
        Layout::Grid => grid_lanes(&mut rng, n_lanes),
        Layout::Intersection => intersection_lanes(&mut rng, n_lanes),
    };
    let tes = traffic_elements(n_tes);

    let l = lanes.len();
    let lane_lane: Vec<Vec<bool>> = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| {
                    i != j
                        && successor_gap(&lanes[i].points, &lanes[j].points) < GENERATOR_EDGE_GAP
                })
                .collect()
        })
        .collect();
    let lane_te: Vec<Vec<bool>> = (0..l)
        .map(|i| (0..n_tes).map(|t| l > 0 && t % l == i).collect())
        .collect();

    SceneFrame {
        frame_id: format!("{}_{seed:08x}", layout.as_str()),
        lanes,
        traffic_elements: tes,
        lane_lane,
        lane_te,
    }
}

/// Attaches seeded random feature vectors of width `dim` to every instance,
/// for topology-inference runs on synthetic data.
pub fn attach_features(frame: &SceneFrame, dim: usize, seed: u64) -> SceneFrame {
    let mut rng = StdRng::seed_from_u64(seed ^ fnv1a(frame.frame_id.as_bytes()));
    let mut out = frame.clone();
    for lane in &mut out.lanes {
        lane.feature = Some((0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect());
    }
    for te in &mut out.traffic_elements {
        te.feature = Some((0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect());
    }
    out
}

/// Noise and corruption applied when deriving a prediction frame from
/// ground truth. All rates are probabilities; the all-zero config is the
/// identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    /// Gaussian noise applied to every lane keypoint coordinate, meters.
    pub point_noise_sigma: f64,
    /// Gaussian noise applied to instance confidences (clamped to \[0,1\]).
    pub confidence_noise_sigma: f64,
    /// Probability of dropping each instance.
    pub drop_rate: f64,
    /// Probability, per original instance, of injecting one spurious
    /// instance with confidence drawn from [0, 0.5).
    pub spurious_rate: f64,
    /// Probability of flipping each off-diagonal relationship entry.
    pub edge_flip_rate: f64,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            point_noise_sigma: 0.0,
            confidence_noise_sigma: 0.0,
            drop_rate: 0.0,
            spurious_rate: 0.0,
            edge_flip_rate: 0.0,
            seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        for rate in [self.drop_rate, self.spurious_rate, self.edge_flip_rate] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(SceneError::InvalidRate(rate));
            }
        }
        for sigma in [self.point_noise_sigma, self.confidence_noise_sigma] {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(SceneError::InvalidSigma(sigma));
            }
        }
        Ok(())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Derives a perturbed prediction frame from a ground-truth frame; seeded
/// and deterministic per (frame, config). With the all-zero config the
/// output equals the input bitwise.
pub fn perturb_scene(frame: &SceneFrame, config: &PerturbationConfig) -> SceneFrame {
    let mut rng = StdRng::seed_from_u64(config.seed ^ fnv1a(frame.frame_id.as_bytes()));
    let range = DetectionRange::default();

    // lane survival, noise, confidence
    let mut kept_lane_idx = Vec::new();
    let mut lanes = Vec::new();
    for (i, lane) in frame.lanes.iter().enumerate() {
        if config.drop_rate > 0.0 && rng.random::<f64>() < config.drop_rate {
            continue;
        }
        let mut lane = lane.clone();
        if config.point_noise_sigma > 0.0 {
            let normal = Normal::new(0.0, config.point_noise_sigma).unwrap();
            let pts = lane
                .points
                .points()
                .iter()
                .map(|p| {
                    Point3::new(
                        p.x + normal.sample(&mut rng),
                        p.y + normal.sample(&mut rng),
                        p.z + normal.sample(&mut rng),
                    )
                })
                .collect();
            lane.points = Polyline3::new(pts).unwrap();
        }
        if config.confidence_noise_sigma > 0.0 {
            let normal = Normal::new(0.0, config.confidence_noise_sigma).unwrap();
            lane.confidence = clamp01(lane.confidence + normal.sample(&mut rng));
        }
        kept_lane_idx.push(i);
        lanes.push(lane);
    }

    let mut kept_te_idx = Vec::new();
    let mut tes = Vec::new();
    for (i, te) in frame.traffic_elements.iter().enumerate() {
        if config.drop_rate > 0.0 && rng.random::<f64>() < config.drop_rate {
            continue;
        }
        let mut te = te.clone();
        if config.confidence_noise_sigma > 0.0 {
            let normal = Normal::new(0.0, config.confidence_noise_sigma).unwrap();
            te.confidence = clamp01(te.confidence + normal.sample(&mut rng));
        }
        kept_te_idx.push(i);
        tes.push(te);
    }

    let mut lane_lane: Vec<Vec<bool>> = kept_lane_idx
        .iter()
        .map(|&i| kept_lane_idx.iter().map(|&j| frame.lane_lane[i][j]).collect())
        .collect();
    let mut lane_te: Vec<Vec<bool>> = kept_lane_idx
        .iter()
        .map(|&i| kept_te_idx.iter().map(|&t| frame.lane_te[i][t]).collect())
        .collect();

    // spurious injections, appended after the surviving instances
    if config.spurious_rate > 0.0 {
        let feature_dim = frame.lanes.iter().find_map(|l| l.feature.as_ref().map(|f| f.len()));
        let mut n_new_lanes = 0;
        for _ in 0..frame.lanes.len() {
            if rng.random::<f64>() >= config.spurious_rate {
                continue;
            }
            let x0 = range.x_min + rng.random::<f64>() * (range.x_max - range.x_min - 10.0);
            let y = range.y_min + 2.0 + rng.random::<f64>() * (range.y_max - range.y_min - 4.0);
            let len = 6.0 + rng.random::<f64>() * 8.0;
            let pts = (0..11)
                .map(|k| Point3::new(x0 + len * k as f64 / 10.0, y, 0.0))
                .collect();
            let mut lane = LaneCenterline::new(
                Polyline3::new(pts).unwrap(),
                rng.random::<f64>() * 0.5,
                LaneClass::Normal,
            )
            .unwrap();
            if let Some(d) = feature_dim {
                lane.feature = Some((0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect());
            }
            lanes.push(lane);
            n_new_lanes += 1;
        }
        let te_feature_dim = frame
            .traffic_elements
            .iter()
            .find_map(|t| t.feature.as_ref().map(|f| f.len()));
        let mut n_new_tes = 0;
        for _ in 0..frame.traffic_elements.len() {
            if rng.random::<f64>() >= config.spurious_rate {
                continue;
            }
            let x1 = rng.random::<f64>() * 1800.0;
            let y1 = rng.random::<f64>() * 1300.0;
            let mut te = TrafficElement::new(
                BBox2::new(x1, y1, x1 + 60.0 + rng.random::<f64>() * 100.0, y1 + 50.0 + rng.random::<f64>() * 80.0)
                    .unwrap(),
                "traffic_light",
                rng.random::<f64>() * 0.5,
            )
            .unwrap();
            if let Some(d) = te_feature_dim {
                te.feature = Some((0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect());
            }
            tes.push(te);
            n_new_tes += 1;
        }
        let l_now = lane_lane.len();
        for row in lane_lane.iter_mut() {
            row.extend(std::iter::repeat_n(false, n_new_lanes));
        }
        for _ in 0..n_new_lanes {
            lane_lane.push(vec![false; l_now + n_new_lanes]);
        }
        let t_prev = kept_te_idx.len();
        for row in lane_te.iter_mut() {
            row.extend(std::iter::repeat_n(false, n_new_tes));
        }
        for _ in 0..n_new_lanes {
            lane_te.push(vec![false; t_prev + n_new_tes]);
        }
    }

    if config.edge_flip_rate > 0.0 {
        for (i, row) in lane_lane.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                if i != j && rng.random::<f64>() < config.edge_flip_rate {
                    *entry = !*entry;
                }
            }
        }
        for row in lane_te.iter_mut() {
            for entry in row.iter_mut() {
                if rng.random::<f64>() < config.edge_flip_rate {
                    *entry = !*entry;
                }
            }
        }
    }

    SceneFrame {
        frame_id: frame.frame_id.clone(),
        lanes,
        traffic_elements: tes,
        lane_lane,
        lane_te,
    }
}

const ORACLE_LIMIT: usize = 8;

/// Memoized recursive discrete Fréchet distance for small inputs; the
/// reference implementation for the dynamic-programming kernel.
pub fn oracle_frechet(a: &[Point3], b: &[Point3]) -> Result<f64, SceneError> {
    if a.len() > ORACLE_LIMIT || b.len() > ORACLE_LIMIT {
        return Err(SceneError::OracleTooLarge {
            limit: ORACLE_LIMIT,
            got: a.len().max(b.len()),
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(SceneError::OracleTooLarge {
            limit: ORACLE_LIMIT,
            got: 0,
        });
    }
    fn rec(
        i: usize,
        j: usize,
        a: &[Point3],
        b: &[Point3],
        memo: &mut HashMap<(usize, usize), f64>,
    ) -> f64 {
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let d = a[i].distance(&b[j]);
        let v = match (i, j) {
            (0, 0) => d,
            (_, 0) => rec(i - 1, 0, a, b, memo).max(d),
            (0, _) => rec(0, j - 1, a, b, memo).max(d),
            (_, _) => rec(i - 1, j, a, b, memo)
                .min(rec(i - 1, j - 1, a, b, memo))
                .min(rec(i, j - 1, a, b, memo))
                .max(d),
        };
        memo.insert((i, j), v);
        v
    }
    let mut memo = HashMap::new();
    Ok(rec(a.len() - 1, b.len() - 1, a, b, &mut memo))
}

/// Exhaustive interpolated-AP reference for small match sets: for every
/// true positive it recomputes the best precision over all later cutoffs
/// from scratch. Shares the metric's tie rule (false positives rank first
/// within equal confidence).
pub fn oracle_ap(result: &MatchResult) -> Result<f64, SceneError> {
    if result.detections.len() > ORACLE_LIMIT {
        return Err(SceneError::OracleTooLarge {
            limit: ORACLE_LIMIT,
            got: result.detections.len(),
        });
    }
    if result.num_gt == 0 {
        return Ok(if result.detections.is_empty() { 1.0 } else { 0.0 });
    }
    let mut ranked: Vec<(f64, bool)> = result
        .detections
        .iter()
        .map(|d| (d.confidence, d.gt_index.is_some()))
        .collect();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    let precision_at = |cutoff: usize| -> f64 {
        let tp = ranked[..=cutoff].iter().filter(|&&(_, t)| t).count();
        tp as f64 / (cutoff + 1) as f64
    };
    let mut sum = 0.0;
    for k in 0..ranked.len() {
        if !ranked[k].1 {
            continue;
        }
        let mut best = 0.0f64;
        for j in k..ranked.len() {
            best = best.max(precision_at(j));
        }
        sum += best;
    }
    Ok(sum / result.num_gt as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::discrete_frechet;
    use crate::metrics::{average_precision, match_instances};

    #[test]
    fn empty_scene_has_empty_matrices() {
        let frame = generate_scene(1, 0, 3, Layout::Chain);
        assert!(frame.lanes.is_empty());
        assert!(frame.lane_lane.is_empty());
        assert!(frame.lane_te.is_empty());
        assert_eq!(frame.traffic_elements.len(), 3);
        frame.validate_shapes().unwrap();
    }

    #[test]
    fn chain_four_lanes_is_a_path() {
        let frame = generate_scene(7, 4, 2, Layout::Chain);
        let mut true_entries = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                // re-derive edges from the geometry, independent of the
                // generator's own bookkeeping
                let gap = successor_gap(&frame.lanes[i].points, &frame.lanes[j].points);
                assert_eq!(frame.lane_lane[i][j], i != j && gap < GENERATOR_EDGE_GAP);
                if frame.lane_lane[i][j] {
                    true_entries.push((i, j));
                }
            }
        }
        assert_eq!(true_entries, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn generated_lanes_stay_in_range_and_have_eleven_points() {
        let range = DetectionRange::default();
        for layout in [Layout::Chain, Layout::Grid, Layout::Intersection] {
            for seed in 0..20 {
                let frame = generate_scene(seed, 10, 4, layout);
                frame.validate_shapes().unwrap();
                for lane in &frame.lanes {
                    assert_eq!(lane.points.len(), 11);
                    for p in lane.points.points() {
                        assert!(p.x >= range.x_min && p.x <= range.x_max);
                        assert!(p.y >= range.y_min && p.y <= range.y_max);
                        assert!(p.z >= range.z_min && p.z <= range.z_max);
                    }
                }
                // no self-loops in generated ground truth
                for (i, row) in frame.lane_lane.iter().enumerate() {
                    assert!(!row[i]);
                }
            }
        }
    }

    #[test]
    fn grid_and_intersection_edges_match_gap_rule() {
        for layout in [Layout::Grid, Layout::Intersection] {
            let frame = generate_scene(33, 12, 4, layout);
            let l = frame.lanes.len();
            assert_eq!(l, 12);
            for i in 0..l {
                for j in 0..l {
                    let gap = successor_gap(&frame.lanes[i].points, &frame.lanes[j].points);
                    assert_eq!(
                        frame.lane_lane[i][j],
                        i != j && gap < GENERATOR_EDGE_GAP,
                        "{layout:?} edge {i}->{j}"
                    );
                }
            }
        }
    }

    #[test]
    fn intersection_contains_virtual_lanes_and_edges() {
        let frame = generate_scene(4, 16, 4, Layout::Intersection);
        assert!(frame
            .lanes
            .iter()
            .any(|l| l.lane_class == LaneClass::IntersectionVirtual));
        let edge_count: usize = frame
            .lane_lane
            .iter()
            .map(|row| row.iter().filter(|&&e| e).count())
            .sum();
        assert_eq!(edge_count, 16); // 4 per arm: in->connector, in->turn, and the two exits
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_scene(99, 8, 5, Layout::Intersection);
        let b = generate_scene(99, 8, 5, Layout::Intersection);
        assert_eq!(a, b);
        let c = generate_scene(100, 8, 5, Layout::Intersection);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_config_perturbation_is_identity() {
        let frame = generate_scene(3, 6, 4, Layout::Grid);
        let out = perturb_scene(&frame, &PerturbationConfig::default());
        assert_eq!(out, frame);
    }

    #[test]
    fn full_drop_rate_empties_the_frame() {
        let frame = generate_scene(3, 6, 4, Layout::Chain);
        let config = PerturbationConfig {
            drop_rate: 1.0,
            ..Default::default()
        };
        let out = perturb_scene(&frame, &config);
        assert!(out.lanes.is_empty());
        assert!(out.traffic_elements.is_empty());
        assert!(out.lane_lane.is_empty());
        out.validate_shapes().unwrap();
    }

    #[test]
    fn perturbation_is_deterministic() {
        let frame = generate_scene(5, 6, 4, Layout::Chain);
        let config = PerturbationConfig {
            point_noise_sigma: 0.5,
            confidence_noise_sigma: 0.1,
            drop_rate: 0.2,
            spurious_rate: 0.3,
            edge_flip_rate: 0.1,
            seed: 1234,
        };
        let a = perturb_scene(&frame, &config);
        let b = perturb_scene(&frame, &config);
        assert_eq!(a, b);
        a.validate_shapes().unwrap();
    }

    #[test]
    fn spurious_instances_have_low_confidence() {
        let frame = generate_scene(8, 10, 6, Layout::Chain);
        let config = PerturbationConfig {
            spurious_rate: 1.0,
            seed: 9,
            ..Default::default()
        };
        let out = perturb_scene(&frame, &config);
        assert_eq!(out.lanes.len(), 20);
        for lane in &out.lanes[10..] {
            assert!(lane.confidence < 0.5);
        }
        out.validate_shapes().unwrap();
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let bad_rate = PerturbationConfig {
            drop_rate: 1.5,
            ..Default::default()
        };
        assert!(matches!(bad_rate.validate(), Err(SceneError::InvalidRate(_))));
        let bad_sigma = PerturbationConfig {
            point_noise_sigma: -1.0,
            ..Default::default()
        };
        assert!(matches!(bad_sigma.validate(), Err(SceneError::InvalidSigma(_))));
    }

    #[test]
    fn oracle_frechet_trivials_and_limit() {
        let a = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        assert_eq!(oracle_frechet(&a, &a).unwrap(), 0.0);
        let too_big = vec![Point3::new(0.0, 0.0, 0.0); 9];
        assert!(matches!(
            oracle_frechet(&too_big, &a),
            Err(SceneError::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_frechet_agrees_with_kernel() {
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..500 {
            let na = rng.random_range(2..=8);
            let nb = rng.random_range(2..=8);
            let mk = |n: usize, rng: &mut StdRng| -> Vec<Point3> {
                (0..n)
                    .map(|_| {
                        Point3::new(
                            rng.random::<f64>() * 20.0,
                            rng.random::<f64>() * 20.0,
                            rng.random::<f64>() * 2.0,
                        )
                    })
                    .collect()
            };
            let a = mk(na, &mut rng);
            let b = mk(nb, &mut rng);
            assert_eq!(
                oracle_frechet(&a, &b).unwrap(),
                discrete_frechet(&a, &b).unwrap()
            );
        }
    }

    #[test]
    fn oracle_ap_trivials_and_agreement() {
        let mut rng = StdRng::seed_from_u64(78);
        // all-true-positive ranking scores 1.0
        let preds: Vec<(f64, f64)> = vec![(0.0, 0.9), (1.0, 0.8)];
        let gts = vec![0.0, 1.0];
        let perfect = match_instances(&preds, &gts, |p| p.1, |p, g| (p.0 - g).abs(), 0.1);
        assert_eq!(oracle_ap(&perfect).unwrap(), 1.0);

        for _ in 0..500 {
            let np = rng.random_range(0..=8);
            let ng = rng.random_range(0..=6);
            let preds: Vec<(f64, f64)> = (0..np)
                .map(|_| (rng.random::<f64>() * 8.0, rng.random::<f64>()))
                .collect();
            let gts: Vec<f64> = (0..ng).map(|_| rng.random::<f64>() * 8.0).collect();
            let m = match_instances(&preds, &gts, |p| p.1, |p, g| (p.0 - g).abs(), 1.0);
            let expect = oracle_ap(&m).unwrap();
            let got = average_precision(&m);
            assert!((got - expect).abs() <= 1e-12, "{got} vs {expect}");
        }
    }
}

//! Lane-centerline geometry: polylines, arc-length resampling, Bézier
//! conversion, detection-range normalization and distance kernels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by geometry operations.
#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// Total arc length is zero, so arc-length parameterization is undefined.
    #[error("degenerate polyline: total arc length is zero")]
    DegeneratePolyline,

    #[error("polyline must have at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error("resampling requires at least 2 samples, got {0}")]
    InvalidSampleCount(usize),

    #[error("point coordinates must be finite")]
    NonFinitePoint,

    #[error("empty polyline")]
    EmptyPolyline,

    #[error("detection range must satisfy min < max on every axis")]
    InvalidRange,

    #[error("Bezier curve requires exactly 5 control points, got {0}")]
    BadControlPointCount(usize),
}

/// A point in 3D space, coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn lerp(&self, other: &Point3, t: f64) -> Point3 {
        Point3 {
            x: self.x + t * (other.x - self.x),
            y: self.y + t * (other.y - self.y),
            z: self.z + t * (other.z - self.z),
        }
    }
}

/// An ordered 3D polyline with at least two points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline3 {
    points: Vec<Point3>,
}

impl Polyline3 {
    /// Builds a polyline, rejecting fewer than two points or non-finite
    /// coordinates. Consecutive duplicate points are permitted; they only
    /// become an error when an operation needs a positive arc length.
    pub fn new(points: Vec<Point3>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints {
                min: 2,
                got: points.len(),
            });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinitePoint);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least two points
    }

    pub fn first(&self) -> Point3 {
        self.points[0]
    }

    pub fn last(&self) -> Point3 {
        *self.points.last().unwrap()
    }

    /// Lengths of the consecutive segments.
    pub fn segment_lengths(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| w[0].distance(&w[1]))
            .collect()
    }

    /// Cumulative arc length at each vertex, starting at 0.
    pub fn cumulative_lengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.points.len());
        out.push(0.0);
        let mut acc = 0.0;
        for w in self.points.windows(2) {
            acc += w[0].distance(&w[1]);
            out.push(acc);
        }
        out
    }

    /// Total chord arc length.
    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }
}

/// Axis-aligned BEV detection range in meters, min < max on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRange {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl DetectionRange {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        z_min: f64,
        z_max: f64,
    ) -> Result<Self, GeometryError> {
        let r = Self {
            x_min,
            x_max,
            y_min,
            y_max,
            z_min,
            z_max,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = self.x_min < self.x_max && self.y_min < self.y_max && self.z_min < self.z_max;
        let finite = [
            self.x_min, self.x_max, self.y_min, self.y_max, self.z_min, self.z_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(GeometryError::InvalidRange)
        }
    }

    /// Maps a point into unitless range coordinates; in-range points land in
    /// the unit cube; out-of-range points map outside and are not clipped.
    pub fn normalize(&self, p: Point3) -> Point3 {
        Point3 {
            x: (p.x - self.x_min) / (self.x_max - self.x_min),
            y: (p.y - self.y_min) / (self.y_max - self.y_min),
            z: (p.z - self.z_min) / (self.z_max - self.z_min),
        }
    }

    /// Inverse of [`DetectionRange::normalize`].
    pub fn denormalize(&self, p: Point3) -> Point3 {
        Point3 {
            x: self.x_min + p.x * (self.x_max - self.x_min),
            y: self.y_min + p.y * (self.y_max - self.y_min),
            z: self.z_min + p.z * (self.z_max - self.z_min),
        }
    }
}

impl Default for DetectionRange {
    /// BEV extents: x ∈ [-50, 50], y ∈ [-25, 25], z ∈ [-3, 3] meters.
    fn default() -> Self {
        Self {
            x_min: -50.0,
            x_max: 50.0,
            y_min: -25.0,
            y_max: 25.0,
            z_min: -3.0,
            z_max: 3.0,
        }
    }
}

/// A degree-4 Bézier curve given by exactly 5 control points.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierCurve {
    control_points: [Point3; 5],
}

impl BezierCurve {
    pub fn new(control_points: [Point3; 5]) -> Result<Self, GeometryError> {
        if control_points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinitePoint);
        }
        Ok(Self { control_points })
    }

    pub fn from_slice(points: &[Point3]) -> Result<Self, GeometryError> {
        let arr: [Point3; 5] = points
            .try_into()
            .map_err(|_| GeometryError::BadControlPointCount(points.len()))?;
        Self::new(arr)
    }

    pub fn control_points(&self) -> &[Point3; 5] {
        &self.control_points
    }

    /// Evaluates the degree-4 Bernstein polynomial at parameter t.
    pub fn eval(&self, t: f64) -> Point3 {
        const BINOM: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
        let s = 1.0 - t;
        let mut x = 0.0;
        let mut y = 0.0;
        let mut z = 0.0;
        for (k, p) in self.control_points.iter().enumerate() {
            let basis = BINOM[k] * t.powi(k as i32) * s.powi(4 - k as i32);
            x += basis * p.x;
            y += basis * p.y;
            z += basis * p.z;
        }
        Point3 { x, y, z }
    }
}

/// Resamples a polyline to `n` points equally spaced in chord arc length.
///
/// The first and last output points equal the input endpoints exactly.
pub fn resample_polyline(line: &Polyline3, n: usize) -> Result<Polyline3, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidSampleCount(n));
    }
    let cumulative = line.cumulative_lengths();
    let total = *cumulative.last().unwrap();
    if total <= 0.0 {
        return Err(GeometryError::DegeneratePolyline);
    }

    let pts = line.points();
    let mut out = Vec::with_capacity(n);
    out.push(line.first());
    let mut seg = 0usize;
    for k in 1..n - 1 {
        let target = total * (k as f64) / ((n - 1) as f64);
        // targets are monotone, so the segment cursor only moves forward
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < target {
            seg += 1;
        }
        let seg_len = cumulative[seg + 1] - cumulative[seg];
        let t = if seg_len > 0.0 {
            (target - cumulative[seg]) / seg_len
        } else {
            0.0
        };
        out.push(pts[seg].lerp(&pts[seg + 1], t));
    }
    out.push(line.last());
    Polyline3::new(out)
}

/// Samples a 5-control-point Bézier curve at `n` uniform parameter values.
pub fn bezier_to_polyline(curve: &BezierCurve, n: usize) -> Result<Polyline3, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidSampleCount(n));
    }
    let pts = (0..n)
        .map(|k| curve.eval(k as f64 / (n - 1) as f64))
        .collect();
    Polyline3::new(pts)
}

/// Maps every vertex into unitless detection-range coordinates.
pub fn normalize_points(line: &Polyline3, range: &DetectionRange) -> Polyline3 {
    let pts = line.points().iter().map(|p| range.normalize(*p)).collect();
    Polyline3 { points: pts }
}

/// Inverse of [`normalize_points`].
pub fn denormalize_points(line: &Polyline3, range: &DetectionRange) -> Polyline3 {
    let pts = line
        .points()
        .iter()
        .map(|p| range.denormalize(*p))
        .collect();
    Polyline3 { points: pts }
}

/// Discrete Fréchet distance between two point sequences, computed with a
/// bottom-up dynamic program over the full coupling table.
pub fn discrete_frechet(a: &[Point3], b: &[Point3]) -> Result<f64, GeometryError> {
    if a.is_empty() || b.is_empty() {
        return Err(GeometryError::EmptyPolyline);
    }
    let (la, lb) = (a.len(), b.len());
    let mut table = vec![0.0f64; la * lb];
    for i in 0..la {
        for j in 0..lb {
            let d = a[i].distance(&b[j]);
            let best_prev = match (i, j) {
                (0, 0) => d,
                (_, 0) => table[(i - 1) * lb],
                (0, _) => table[j - 1],
                (_, _) => {
                    let up = table[(i - 1) * lb + j];
                    let diag = table[(i - 1) * lb + j - 1];
                    let left = table[i * lb + j - 1];
                    up.min(diag).min(left)
                }
            };
            table[i * lb + j] = best_prev.max(d);
        }
    }
    Ok(table[la * lb - 1])
}

/// Directed endpoint gap: distance from the end of `a` to the start of `b`.
///
/// Lane topology is a directed graph, so the gap is deliberately asymmetric:
/// `successor_gap(a, b)` measures whether `b` can continue `a`.
pub fn successor_gap(a: &Polyline3, b: &Polyline3) -> f64 {
    a.last().distance(&b.first())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    fn line(pts: &[(f64, f64, f64)]) -> Polyline3 {
        Polyline3::new(pts.iter().map(|&(x, y, z)| p(x, y, z)).collect()).unwrap()
    }

    fn random_point(rng: &mut StdRng, scale: f64) -> Point3 {
        p(
            (rng.random::<f64>() - 0.5) * scale,
            (rng.random::<f64>() - 0.5) * scale,
            (rng.random::<f64>() - 0.5) * scale,
        )
    }

    /// Arc-length walk oracle: accumulates segment lengths and interpolates
    /// at the target arc position with an explicit scan. Independent of the
    /// cursor-based implementation in `resample_polyline`.
    fn walk_to_arc(pts: &[Point3], target: f64) -> Point3 {
        let mut acc = 0.0;
        for w in pts.windows(2) {
            let seg = w[0].distance(&w[1]);
            if acc + seg >= target && seg > 0.0 {
                let t = (target - acc) / seg;
                return Point3::new(
                    w[0].x + t * (w[1].x - w[0].x),
                    w[0].y + t * (w[1].y - w[0].y),
                    w[0].z + t * (w[1].z - w[0].z),
                );
            }
            acc += seg;
        }
        *pts.last().unwrap()
    }

    /// De Casteljau evaluation oracle, structurally independent of the
    /// Bernstein-basis implementation.
    fn de_casteljau(ctrl: &[Point3; 5], t: f64) -> Point3 {
        let mut level: Vec<Point3> = ctrl.to_vec();
        while level.len() > 1 {
            level = level.windows(2).map(|w| w[0].lerp(&w[1], t)).collect();
        }
        level[0]
    }

    #[test]
    fn resample_straight_segment_is_uniform() {
        let l = line(&[(0.0, 0.0, 0.0), (10.0, 0.0, 0.0)]);
        let out = resample_polyline(&l, 11).unwrap();
        assert_eq!(out.len(), 11);
        for (k, pt) in out.points().iter().enumerate() {
            assert!((pt.x - k as f64).abs() < 1e-12);
            assert_eq!(pt.y, 0.0);
            assert_eq!(pt.z, 0.0);
        }
    }

    #[test]
    fn resample_l_shape_crosses_the_corner() {
        let l = line(&[(0.0, 0.0, 0.0), (0.0, 5.0, 0.0), (5.0, 5.0, 0.0)]);
        let out = resample_polyline(&l, 11).unwrap();
        // total arc 10; 6th point sits at arc 5.0 (the corner), 7th at arc 6.0
        let sixth = out.points()[5];
        let seventh = out.points()[6];
        assert!((sixth.x - 0.0).abs() < 1e-12 && (sixth.y - 5.0).abs() < 1e-12);
        assert!((seventh.x - 1.0).abs() < 1e-12 && (seventh.y - 5.0).abs() < 1e-12);
        // cross-check every sample against the walk oracle
        for (k, pt) in out.points().iter().enumerate() {
            let expect = walk_to_arc(l.points(), 10.0 * k as f64 / 10.0);
            assert!(pt.distance(&expect) < 1e-9);
        }
    }

    #[test]
    fn resample_preserves_endpoints_exactly() {
        let l = line(&[(0.3, -1.7, 0.2), (4.1, 2.2, -0.4), (9.9, 2.0, 0.1)]);
        let out = resample_polyline(&l, 7).unwrap();
        assert_eq!(out.first(), l.first());
        assert_eq!(out.last(), l.last());
    }

    #[test]
    fn resample_is_idempotent_on_equally_spaced_input() {
        // unit steps in random directions: all 10 segments have length 1,
        // so the vertices already sit at the uniform arc positions
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let mut pts = vec![p(0.0, 0.0, 0.0)];
            for _ in 0..10 {
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                let phi = (rng.random::<f64>() - 0.5) * 0.6;
                let prev = *pts.last().unwrap();
                pts.push(p(
                    prev.x + theta.cos() * phi.cos(),
                    prev.y + theta.sin() * phi.cos(),
                    prev.z + phi.sin(),
                ));
            }
            let l = Polyline3::new(pts).unwrap();
            let again = resample_polyline(&l, 11).unwrap();
            for (a, b) in l.points().iter().zip(again.points()) {
                assert!(a.distance(b) < 1e-9);
            }
            // equal-arc spacing shows up directly as equal chord gaps here
            let gaps = again.segment_lengths();
            for w in gaps.windows(2) {
                assert!((w[0] - w[1]).abs() < 1e-6 * again.arc_length());
            }
        }
    }

    #[test]
    fn resample_places_samples_at_uniform_arc_positions() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..50 {
            let l =
                Polyline3::new((0..6).map(|_| random_point(&mut rng, 30.0)).collect()).unwrap();
            let out = resample_polyline(&l, 11).unwrap();
            assert_eq!(out.len(), 11);
            let total = l.arc_length();
            for (k, pt) in out.points().iter().enumerate() {
                let expect = walk_to_arc(l.points(), total * k as f64 / 10.0);
                assert!(pt.distance(&expect) < 1e-9);
            }
        }
    }

    #[test]
    fn resample_tolerates_duplicate_interior_points() {
        // consecutive duplicates are allowed as long as total length is > 0
        let l = line(&[
            (0.0, 0.0, 0.0),
            (5.0, 0.0, 0.0),
            (5.0, 0.0, 0.0),
            (10.0, 0.0, 0.0),
        ]);
        let out = resample_polyline(&l, 11).unwrap();
        for (k, pt) in out.points().iter().enumerate() {
            assert!((pt.x - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_rejects_degenerate_and_bad_n() {
        let degenerate = line(&[(1.0, 1.0, 1.0), (1.0, 1.0, 1.0)]);
        let err = resample_polyline(&degenerate, 11).unwrap_err();
        assert_eq!(err, GeometryError::DegeneratePolyline);
        assert!(err.to_string().contains("degenerate polyline"));

        let l = line(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        assert!(matches!(
            resample_polyline(&l, 1),
            Err(GeometryError::InvalidSampleCount(1))
        ));
    }

    #[test]
    fn polyline_needs_two_points() {
        assert!(matches!(
            Polyline3::new(vec![p(0.0, 0.0, 0.0)]),
            Err(GeometryError::TooFewPoints { min: 2, got: 1 })
        ));
        assert!(matches!(
            Polyline3::new(vec![p(0.0, 0.0, 0.0), p(f64::NAN, 0.0, 0.0)]),
            Err(GeometryError::NonFinitePoint)
        ));
    }

    #[test]
    fn bezier_collinear_uniform_controls_is_linear() {
        // controls at fractions 0, 1/4, 1/2, 3/4, 1 of a 4 m segment reduce
        // the quartic to B(t) = t * L
        let ctrl = [
            p(0.0, 0.0, 0.0),
            p(1.0, 0.0, 0.0),
            p(2.0, 0.0, 0.0),
            p(3.0, 0.0, 0.0),
            p(4.0, 0.0, 0.0),
        ];
        let curve = BezierCurve::new(ctrl).unwrap();
        let out = bezier_to_polyline(&curve, 11).unwrap();
        for (k, pt) in out.points().iter().enumerate() {
            assert!((pt.x - 0.4 * k as f64).abs() < 1e-12);
            assert!(pt.y.abs() < 1e-12 && pt.z.abs() < 1e-12);
        }
    }

    #[test]
    fn bezier_constant_controls_collapse() {
        let q = p(2.5, -1.0, 0.25);
        let curve = BezierCurve::new([q; 5]).unwrap();
        let out = bezier_to_polyline(&curve, 7).unwrap();
        for pt in out.points() {
            assert!(pt.distance(&q) < 1e-12);
        }
    }

    #[test]
    fn bezier_matches_de_casteljau_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let ctrl = [
                random_point(&mut rng, 20.0),
                random_point(&mut rng, 20.0),
                random_point(&mut rng, 20.0),
                random_point(&mut rng, 20.0),
                random_point(&mut rng, 20.0),
            ];
            let curve = BezierCurve::new(ctrl).unwrap();
            let out = bezier_to_polyline(&curve, 11).unwrap();
            for (k, pt) in out.points().iter().enumerate() {
                let expect = de_casteljau(&ctrl, k as f64 / 10.0);
                assert!(pt.distance(&expect) < 1e-12);
            }
        }
    }

    #[test]
    fn bezier_needs_five_controls() {
        assert!(matches!(
            BezierCurve::from_slice(&[p(0.0, 0.0, 0.0); 4]),
            Err(GeometryError::BadControlPointCount(4))
        ));
    }

    #[test]
    fn normalize_midpoint_and_corner() {
        let range = DetectionRange::new(-50.0, 50.0, -50.0, 50.0, -50.0, 50.0).unwrap();
        let mid = range.normalize(p(0.0, 0.0, 0.0));
        assert_eq!(mid, p(0.5, 0.5, 0.5));
        let corner = range.normalize(p(-50.0, -50.0, -50.0));
        assert_eq!(corner, p(0.0, 0.0, 0.0));
    }

    #[test]
    fn normalize_roundtrip_is_identity() {
        let range = DetectionRange::default();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let l = Polyline3::new(vec![
                random_point(&mut rng, 120.0), // includes out-of-range points
                random_point(&mut rng, 120.0),
            ])
            .unwrap();
            let back = denormalize_points(&normalize_points(&l, &range), &range);
            for (a, b) in l.points().iter().zip(back.points()) {
                assert!((a.x - b.x).abs() < 1e-9);
                assert!((a.y - b.y).abs() < 1e-9);
                assert!((a.z - b.z).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn range_rejects_inverted_axes() {
        assert!(DetectionRange::new(1.0, -1.0, 0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn frechet_identical_is_zero() {
        let l = line(&[(0.0, 0.0, 0.0), (3.0, 1.0, 0.5), (6.0, 0.0, 0.0)]);
        assert_eq!(discrete_frechet(l.points(), l.points()).unwrap(), 0.0);
    }

    #[test]
    fn frechet_parallel_translation() {
        let a = line(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        let b = line(&[(0.0, 1.0, 0.0), (1.0, 1.0, 0.0)]);
        assert!((discrete_frechet(a.points(), b.points()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frechet_rejects_empty() {
        let a = line(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        assert!(matches!(
            discrete_frechet(a.points(), &[]),
            Err(GeometryError::EmptyPolyline)
        ));
    }

    #[test]
    fn frechet_is_symmetric_and_bounded_below() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..200 {
            let na = rng.random_range(2..=6);
            let nb = rng.random_range(2..=6);
            let a: Vec<Point3> = (0..na).map(|_| random_point(&mut rng, 20.0)).collect();
            let b: Vec<Point3> = (0..nb).map(|_| random_point(&mut rng, 20.0)).collect();
            let dab = discrete_frechet(&a, &b).unwrap();
            let dba = discrete_frechet(&b, &a).unwrap();
            assert_eq!(dab, dba);
            let endpoint_bound = a[0]
                .distance(&b[0])
                .max(a.last().unwrap().distance(b.last().unwrap()));
            assert!(dab >= endpoint_bound - 1e-12);
        }
    }

    #[test]
    fn frechet_detects_a_single_moved_point() {
        // on duplicate-free polylines, distance zero implies identical
        // sequences; moving one interior point must be visible
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let a: Vec<Point3> = (0..6)
                .map(|k| p(k as f64 * 3.0, rng.random::<f64>(), 0.0))
                .collect();
            let mut b = a.clone();
            b[3].y += 0.5;
            let d = discrete_frechet(&a, &b).unwrap();
            assert!(d > 0.0);
        }
    }

    #[test]
    fn frechet_is_translation_invariant() {
        let mut rng = StdRng::seed_from_u64(22);
        for _ in 0..100 {
            let a: Vec<Point3> = (0..5).map(|_| random_point(&mut rng, 20.0)).collect();
            let b: Vec<Point3> = (0..4).map(|_| random_point(&mut rng, 20.0)).collect();
            let shift = random_point(&mut rng, 10.0);
            let move_all = |pts: &[Point3]| -> Vec<Point3> {
                pts.iter()
                    .map(|q| p(q.x + shift.x, q.y + shift.y, q.z + shift.z))
                    .collect()
            };
            let d0 = discrete_frechet(&a, &b).unwrap();
            let d1 = discrete_frechet(&move_all(&a), &move_all(&b)).unwrap();
            assert!((d0 - d1).abs() < 1e-9);
        }
    }

    #[test]
    fn successor_gap_is_directed() {
        let a = line(&[(0.0, 0.0, 0.0), (5.0, 0.0, 0.0)]);
        let b = line(&[(5.0, 0.0, 0.0), (9.0, 0.0, 0.0)]);
        assert_eq!(successor_gap(&a, &b), 0.0);

        let c = line(&[(7.9, 0.0, 0.0), (12.0, 0.0, 0.0)]);
        assert!((successor_gap(&a, &c) - 2.9).abs() < 1e-12);

        // asymmetric in general
        let mut rng = StdRng::seed_from_u64(5);
        let mut saw_asymmetry = false;
        for _ in 0..50 {
            let u = Polyline3::new(vec![
                random_point(&mut rng, 20.0),
                random_point(&mut rng, 20.0),
            ])
            .unwrap();
            let v = Polyline3::new(vec![
                random_point(&mut rng, 20.0),
                random_point(&mut rng, 20.0),
            ])
            .unwrap();
            if (successor_gap(&u, &v) - successor_gap(&v, &u)).abs() > 1e-9 {
                saw_asymmetry = true;
            }
        }
        assert!(saw_asymmetry);
    }
}

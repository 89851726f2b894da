//! JSON frame documents: parsing, validation and serialization.
//!
//! One self-describing format serves ground truth and predictions alike
//! (predictions simply carry non-binary confidences). Validation errors name
//! the offending frame id and field path.

use std::path::Path;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::geometry::{Point3, Polyline3};
use crate::scenesim::SceneFrame;
use crate::topology::{BBox2, LaneCenterline, LaneClass, TrafficElement};

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(String),

    #[error("{context}: {message}")]
    Invalid { context: String, message: String },
}

fn invalid(frame: Option<&str>, path: &str, message: impl Into<String>) -> SchemaError {
    let context = match frame {
        Some(id) => format!("frame \"{id}\": {path}"),
        None => path.to_string(),
    };
    SchemaError::Invalid {
        context,
        message: message.into(),
    }
}

/// How many points a lane document must carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointPolicy {
    /// The standard frame contract: exactly 11 keypoints.
    ExactlyEleven,
    /// Bézier input for conversion: exactly 5 control points.
    ExactlyFive,
    /// Resampling input: any polyline with at least 2 points.
    AtLeastTwo,
}

impl PointPolicy {
    fn check(&self, got: usize) -> Result<(), String> {
        match self {
            PointPolicy::ExactlyEleven if got != 11 => {
                Err(format!("lane must have exactly 11 points (got {got})"))
            }
            PointPolicy::ExactlyFive if got != 5 => {
                Err(format!("lane must have exactly 5 control points (got {got})"))
            }
            PointPolicy::AtLeastTwo if got < 2 => {
                Err(format!("lane must have at least 2 points (got {got})"))
            }
            _ => Ok(()),
        }
    }
}

/// A validated lane record whose point count satisfied the parse policy but
/// may not yet be the 11-point runtime representation.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneDocument {
    pub points: Vec<Point3>,
    pub confidence: f64,
    pub lane_class: LaneClass,
    pub feature: Option<Vec<f64>>,
}

/// A fully validated frame document.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDocument {
    pub frame_id: String,
    pub lanes: Vec<LaneDocument>,
    pub traffic_elements: Vec<TrafficElement>,
    pub lane_lane: Vec<Vec<bool>>,
    pub lane_te: Vec<Vec<bool>>,
}

fn as_object<'a>(
    v: &'a Value,
    frame: Option<&str>,
    path: &str,
) -> Result<&'a Map<String, Value>, SchemaError> {
    v.as_object()
        .ok_or_else(|| invalid(frame, path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, frame: Option<&str>, path: &str) -> Result<&'a [Value], SchemaError> {
    v.as_array()
        .map(|a| a.as_slice())
        .ok_or_else(|| invalid(frame, path, "expected an array"))
}

fn as_finite_f64(v: &Value, frame: Option<&str>, path: &str) -> Result<f64, SchemaError> {
    let x = v
        .as_f64()
        .ok_or_else(|| invalid(frame, path, "expected a number"))?;
    if !x.is_finite() {
        return Err(invalid(frame, path, "number must be finite"));
    }
    Ok(x)
}

fn as_bool(v: &Value, frame: Option<&str>, path: &str) -> Result<bool, SchemaError> {
    v.as_bool()
        .ok_or_else(|| invalid(frame, path, "expected a boolean"))
}

fn get<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    frame: Option<&str>,
    path: &str,
) -> Result<&'a Value, SchemaError> {
    obj.get(key)
        .ok_or_else(|| invalid(frame, path, format!("missing required field \"{key}\"")))
}

fn parse_point(v: &Value, frame: Option<&str>, path: &str) -> Result<Point3, SchemaError> {
    let arr = as_array(v, frame, path)?;
    if arr.len() != 3 {
        return Err(invalid(
            frame,
            path,
            format!("point must be [x, y, z], got {} entries", arr.len()),
        ));
    }
    Ok(Point3::new(
        as_finite_f64(&arr[0], frame, path)?,
        as_finite_f64(&arr[1], frame, path)?,
        as_finite_f64(&arr[2], frame, path)?,
    ))
}

fn parse_confidence(
    obj: &Map<String, Value>,
    frame: Option<&str>,
    path: &str,
) -> Result<f64, SchemaError> {
    let field = format!("{path}.confidence");
    let c = as_finite_f64(get(obj, "confidence", frame, path)?, frame, &field)?;
    if !(0.0..=1.0).contains(&c) {
        return Err(invalid(frame, &field, "confidence must lie in [0,1]"));
    }
    Ok(c)
}

fn parse_feature(
    obj: &Map<String, Value>,
    frame: Option<&str>,
    path: &str,
) -> Result<Option<Vec<f64>>, SchemaError> {
    let Some(v) = obj.get("feature") else {
        return Ok(None);
    };
    if v.is_null() {
        return Ok(None);
    }
    let field = format!("{path}.feature");
    let arr = as_array(v, frame, &field)?;
    if arr.is_empty() {
        return Err(invalid(frame, &field, "feature vector must be non-empty"));
    }
    let values = arr
        .iter()
        .map(|x| as_finite_f64(x, frame, &field))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(Some(values))
}

fn parse_lane(
    v: &Value,
    frame: &str,
    index: usize,
    policy: PointPolicy,
) -> Result<LaneDocument, SchemaError> {
    let path = format!("lanes[{index}]");
    let obj = as_object(v, Some(frame), &path)?;

    let points_path = format!("{path}.points");
    let points_v = as_array(get(obj, "points", Some(frame), &path)?, Some(frame), &points_path)?;
    policy
        .check(points_v.len())
        .map_err(|m| invalid(Some(frame), &points_path, m))?;
    let points = points_v
        .iter()
        .enumerate()
        .map(|(k, pv)| parse_point(pv, Some(frame), &format!("{points_path}[{k}]")))
        .collect::<Result<Vec<Point3>, _>>()?;

    let confidence = parse_confidence(obj, Some(frame), &path)?;

    let class_path = format!("{path}.lane_class");
    let class_v = get(obj, "lane_class", Some(frame), &path)?;
    let class_str = class_v
        .as_str()
        .ok_or_else(|| invalid(Some(frame), &class_path, "expected a string"))?;
    let lane_class = LaneClass::parse(class_str).ok_or_else(|| {
        invalid(
            Some(frame),
            &class_path,
            format!("unknown lane_class \"{class_str}\" (expected \"normal\" or \"intersection_virtual\")"),
        )
    })?;

    let feature = parse_feature(obj, Some(frame), &path)?;

    Ok(LaneDocument {
        points,
        confidence,
        lane_class,
        feature,
    })
}

fn parse_traffic_element(
    v: &Value,
    frame: &str,
    index: usize,
) -> Result<TrafficElement, SchemaError> {
    let path = format!("traffic_elements[{index}]");
    let obj = as_object(v, Some(frame), &path)?;

    let bbox_path = format!("{path}.bbox");
    let bbox_v = as_array(get(obj, "bbox", Some(frame), &path)?, Some(frame), &bbox_path)?;
    if bbox_v.len() != 4 {
        return Err(invalid(
            Some(frame),
            &bbox_path,
            format!("bbox must be [x1, y1, x2, y2], got {} entries", bbox_v.len()),
        ));
    }
    let coords = bbox_v
        .iter()
        .map(|x| as_finite_f64(x, Some(frame), &bbox_path))
        .collect::<Result<Vec<f64>, _>>()?;
    let bbox = BBox2::new(coords[0], coords[1], coords[2], coords[3])
        .map_err(|_| invalid(Some(frame), &bbox_path, "bbox must satisfy x1 < x2 and y1 < y2"))?;

    let category_path = format!("{path}.category");
    let category = get(obj, "category", Some(frame), &path)?
        .as_str()
        .ok_or_else(|| invalid(Some(frame), &category_path, "expected a string"))?
        .to_string();
    if category.is_empty() {
        return Err(invalid(Some(frame), &category_path, "category must be non-empty"));
    }

    let confidence = parse_confidence(obj, Some(frame), &path)?;
    let feature = parse_feature(obj, Some(frame), &path)?;

    let mut te = TrafficElement::new(bbox, category, confidence)
        .map_err(|e| invalid(Some(frame), &path, e.to_string()))?;
    te.feature = feature;
    Ok(te)
}

fn parse_bool_matrix(
    v: &Value,
    frame: &str,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Vec<Vec<bool>>, SchemaError> {
    let arr = as_array(v, Some(frame), name)?;
    if arr.len() != rows {
        return Err(invalid(
            Some(frame),
            name,
            format!("expected {rows} rows to match the instance count, got {}", arr.len()),
        ));
    }
    let mut out = Vec::with_capacity(rows);
    for (i, row_v) in arr.iter().enumerate() {
        let row_path = format!("{name}[{i}]");
        let row = as_array(row_v, Some(frame), &row_path)?;
        if row.len() != cols {
            return Err(invalid(
                Some(frame),
                &row_path,
                format!("expected {cols} columns to match the instance count, got {}", row.len()),
            ));
        }
        out.push(
            row.iter()
                .enumerate()
                .map(|(j, b)| as_bool(b, Some(frame), &format!("{row_path}[{j}]")))
                .collect::<Result<Vec<bool>, _>>()?,
        );
    }
    Ok(out)
}

fn parse_frame(v: &Value, index: usize, policy: PointPolicy) -> Result<FrameDocument, SchemaError> {
    let outer = format!("frames[{index}]");
    let obj = as_object(v, None, &outer)?;
    let frame_id = get(obj, "frame_id", None, &outer)?
        .as_str()
        .ok_or_else(|| invalid(None, &format!("{outer}.frame_id"), "expected a string"))?
        .to_string();
    if frame_id.is_empty() {
        return Err(invalid(None, &format!("{outer}.frame_id"), "frame_id must be non-empty"));
    }
    let id = frame_id.as_str();

    let lanes_v = as_array(get(obj, "lanes", Some(id), "$")?, Some(id), "lanes")?;
    let lanes = lanes_v
        .iter()
        .enumerate()
        .map(|(i, lv)| parse_lane(lv, id, i, policy))
        .collect::<Result<Vec<LaneDocument>, _>>()?;

    let tes_v = as_array(
        get(obj, "traffic_elements", Some(id), "$")?,
        Some(id),
        "traffic_elements",
    )?;
    let traffic_elements = tes_v
        .iter()
        .enumerate()
        .map(|(i, tv)| parse_traffic_element(tv, id, i))
        .collect::<Result<Vec<TrafficElement>, _>>()?;

    let l = lanes.len();
    let t = traffic_elements.len();
    let lane_lane = parse_bool_matrix(get(obj, "lane_lane", Some(id), "$")?, id, "lane_lane", l, l)?;
    let lane_te = parse_bool_matrix(get(obj, "lane_te", Some(id), "$")?, id, "lane_te", l, t)?;

    Ok(FrameDocument {
        frame_id,
        lanes,
        traffic_elements,
        lane_lane,
        lane_te,
    })
}

/// Parses and validates a frame file under the given point policy.
pub fn parse_documents(text: &str, policy: PointPolicy) -> Result<Vec<FrameDocument>, SchemaError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SchemaError::Json(e.to_string()))?;
    let root = as_object(&value, None, "$")?;
    let frames_v = as_array(get(root, "frames", None, "$")?, None, "frames")?;
    let mut docs = Vec::with_capacity(frames_v.len());
    let mut seen = std::collections::HashSet::new();
    for (i, fv) in frames_v.iter().enumerate() {
        let doc = parse_frame(fv, i, policy)?;
        if !seen.insert(doc.frame_id.clone()) {
            return Err(invalid(
                Some(&doc.frame_id),
                "frame_id",
                "duplicate frame_id in file",
            ));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Converts an 11-point document into the runtime frame representation.
pub fn document_to_frame(doc: FrameDocument) -> Result<SceneFrame, SchemaError> {
    let id = doc.frame_id.clone();
    let lanes = doc
        .lanes
        .into_iter()
        .enumerate()
        .map(|(i, lane)| {
            let polyline = Polyline3::new(lane.points)
                .map_err(|e| invalid(Some(&id), &format!("lanes[{i}].points"), e.to_string()))?;
            let mut lc = LaneCenterline::new(polyline, lane.confidence, lane.lane_class)
                .map_err(|e| invalid(Some(&id), &format!("lanes[{i}]"), e.to_string()))?;
            lc.feature = lane.feature;
            Ok(lc)
        })
        .collect::<Result<Vec<LaneCenterline>, SchemaError>>()?;
    Ok(SceneFrame {
        frame_id: doc.frame_id,
        lanes,
        traffic_elements: doc.traffic_elements,
        lane_lane: doc.lane_lane,
        lane_te: doc.lane_te,
    })
}

/// Parses a standard 11-point frame file into runtime frames.
pub fn parse_frames(text: &str) -> Result<Vec<SceneFrame>, SchemaError> {
    parse_documents(text, PointPolicy::ExactlyEleven)?
        .into_iter()
        .map(document_to_frame)
        .collect()
}

/// Loads and validates a frame file from disk.
pub fn load_frames(path: &Path) -> Result<Vec<SceneFrame>, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_frames(&text)
}

fn point_to_value(p: &Point3) -> Value {
    json!([p.x, p.y, p.z])
}

fn frame_to_value(frame: &SceneFrame) -> Value {
    let lanes: Vec<Value> = frame
        .lanes
        .iter()
        .map(|lane| {
            let mut obj = Map::new();
            obj.insert(
                "points".to_string(),
                Value::Array(lane.points.points().iter().map(point_to_value).collect()),
            );
            obj.insert("confidence".to_string(), json!(lane.confidence));
            obj.insert("lane_class".to_string(), json!(lane.lane_class.as_str()));
            if let Some(f) = &lane.feature {
                obj.insert("feature".to_string(), json!(f));
            }
            Value::Object(obj)
        })
        .collect();
    let tes: Vec<Value> = frame
        .traffic_elements
        .iter()
        .map(|te| {
            let mut obj = Map::new();
            obj.insert(
                "bbox".to_string(),
                json!([te.bbox.x1, te.bbox.y1, te.bbox.x2, te.bbox.y2]),
            );
            obj.insert("category".to_string(), json!(te.category));
            obj.insert("confidence".to_string(), json!(te.confidence));
            if let Some(f) = &te.feature {
                obj.insert("feature".to_string(), json!(f));
            }
            Value::Object(obj)
        })
        .collect();
    json!({
        "frame_id": frame.frame_id,
        "lanes": lanes,
        "traffic_elements": tes,
        "lane_lane": frame.lane_lane,
        "lane_te": frame.lane_te,
    })
}

/// Serializes frames to the canonical JSON document.
pub fn frames_to_json(frames: &[SceneFrame]) -> String {
    let doc = json!({ "frames": frames.iter().map(frame_to_value).collect::<Vec<Value>>() });
    serde_json::to_string_pretty(&doc).expect("frame serialization cannot fail")
}

/// Writes frames to disk in the canonical JSON document format.
pub fn save_frames(path: &Path, frames: &[SceneFrame]) -> Result<(), SchemaError> {
    let mut text = frames_to_json(frames);
    text.push('\n');
    std::fs::write(path, text).map_err(|source| SchemaError::Io {
        path: path.display().to_string(),
        source,
    })
}

//! The drawing document: strokes, placed helper objects and a revision
//! counter, with a canonical text encoding and PNG export.
//!
//! Coordinates are normalized to `[0, 1]` on both axes. All floats are
//! snapped to six decimal places when they enter a document so that the
//! canonical encoding round-trips exactly.

mod raster;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scaffold::sanitize;
use crate::text::{is_hex_color, is_label};

pub use raster::{encode_png, export_raster, render, Jitter, RenderOptions, HELPER_EXTENT};

/// Widest stroke accepted, in normalized units.
pub const MAX_STROKE_WIDTH: f64 = 0.1;
/// Current canonical document version.
pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanvasError {
    #[error("invalid stroke: {0}")]
    InvalidStroke(String),
    #[error("invalid helper: {0}")]
    InvalidHelper(String),
    #[error("unknown helper `{0}`")]
    UnknownHelper(String),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("raster dimensions {width}x{height} outside 64..=4096")]
    BadDimensions { width: u32, height: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }

    fn snapped(self) -> Self {
        Point { x: snap(self.x), y: snap(self.y) }
    }
}

/// Rounds to six decimals, the precision of the canonical encoding.
pub fn snap(v: f64) -> f64 {
    let s: f64 = format!("{v:.6}").parse().unwrap_or(v);
    // fold -0.0 into 0.0
    s + 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub stroke_id: String,
    pub points: Vec<Point>,
    /// `#rrggbb`
    pub color: String,
    pub width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_tag: Option<String>,
}

impl Stroke {
    pub fn validate(&self) -> Result<(), CanvasError> {
        let bad = |m: String| Err(CanvasError::InvalidStroke(m));
        if self.stroke_id.is_empty() {
            return bad("empty stroke id".into());
        }
        if self.points.is_empty() {
            return bad("stroke has no points".into());
        }
        if let Some(p) = self.points.iter().find(|p| !p.in_unit_square()) {
            return bad(format!("point ({}, {}) outside the unit square", p.x, p.y));
        }
        if !(self.width > 0.0 && self.width <= MAX_STROKE_WIDTH) {
            return bad(format!("width {} outside (0, {MAX_STROKE_WIDTH}]", self.width));
        }
        if !is_hex_color(&self.color) {
            return bad(format!("color `{}` is not #rrggbb", self.color));
        }
        if let Some(tag) = &self.element_tag {
            if !is_label(tag) {
                return bad(format!("element tag `{tag}` is not a lowercase label"));
            }
        }
        Ok(())
    }

    fn normalized(mut self) -> Self {
        for p in &mut self.points {
            *p = p.snapped();
        }
        self.width = snap(self.width);
        self.color = self.color.to_ascii_lowercase();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelperObject {
    pub helper_id: String,
    pub label: String,
    pub svg_body: String,
    pub position: Point,
    pub scale: f64,
}

impl HelperObject {
    pub fn validate(&self) -> Result<(), CanvasError> {
        let bad = |m: String| Err(CanvasError::InvalidHelper(m));
        if self.helper_id.is_empty() {
            return bad("empty helper id".into());
        }
        if !is_label(&self.label) {
            return bad(format!("label `{}` is not a lowercase label", self.label));
        }
        if !self.position.in_unit_square() {
            return bad("position outside the unit square".into());
        }
        if !(self.scale > 0.0 && self.scale.is_finite() && self.scale <= 10.0) {
            return bad(format!("scale {} outside (0, 10]", self.scale));
        }
        match sanitize::sanitize_svg(&self.svg_body) {
            Ok(clean) if clean == self.svg_body => Ok(()),
            Ok(_) => bad("markup is not in canonical sanitized form".into()),
            Err(rejection) => bad(format!("markup rejected: {rejection}")),
        }
    }

    fn normalized(mut self) -> Self {
        self.position = self.position.snapped();
        self.scale = snap(self.scale);
        self
    }
}

/// Strokes and helpers in z-order, plus the number of mutations applied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CanvasDocument {
    pub strokes: Vec<Stroke>,
    pub helpers: Vec<HelperObject>,
    pub revision: u64,
}

impl CanvasDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply_stroke(&self, stroke: Stroke) -> Result<Self, CanvasError> {
        let mut doc = self.clone();
        doc.push_stroke(stroke)?;
        Ok(doc)
    }

    pub fn place_helper(&self, helper: HelperObject) -> Result<Self, CanvasError> {
        let mut doc = self.clone();
        doc.push_helper(helper)?;
        Ok(doc)
    }

    pub fn move_helper(&self, helper_id: &str, position: Point) -> Result<Self, CanvasError> {
        let mut doc = self.clone();
        doc.reposition_helper(helper_id, position)?;
        Ok(doc)
    }

    pub(crate) fn push_stroke(&mut self, stroke: Stroke) -> Result<(), CanvasError> {
        stroke.validate()?;
        self.strokes.push(stroke.normalized());
        self.revision += 1;
        Ok(())
    }

    pub(crate) fn push_helper(&mut self, helper: HelperObject) -> Result<(), CanvasError> {
        helper.validate()?;
        if self.helper(&helper.helper_id).is_some() {
            return Err(CanvasError::InvalidHelper(format!(
                "helper `{}` is already placed",
                helper.helper_id
            )));
        }
        self.helpers.push(helper.normalized());
        self.revision += 1;
        Ok(())
    }

    pub(crate) fn reposition_helper(
        &mut self,
        helper_id: &str,
        position: Point,
    ) -> Result<(), CanvasError> {
        if !position.in_unit_square() {
            return Err(CanvasError::InvalidHelper("position outside the unit square".into()));
        }
        let helper = self
            .helpers
            .iter_mut()
            .find(|h| h.helper_id == helper_id)
            .ok_or_else(|| CanvasError::UnknownHelper(helper_id.to_owned()))?;
        helper.position = position.snapped();
        self.revision += 1;
        Ok(())
    }

    pub fn helper(&self, helper_id: &str) -> Option<&HelperObject> {
        self.helpers.iter().find(|h| h.helper_id == helper_id)
    }

    /// Counts of labelled elements: helper labels plus stroke tags.
    /// Untagged strokes are not counted.
    pub fn element_census(&self) -> BTreeMap<String, u32> {
        let mut census = BTreeMap::new();
        let labels = self
            .helpers
            .iter()
            .map(|h| h.label.as_str())
            .chain(self.strokes.iter().filter_map(|s| s.element_tag.as_deref()));
        for label in labels {
            *census.entry(label.to_owned()).or_insert(0) += 1;
        }
        census
    }

    /// Canonical encoding: fixed field order, floats with six decimals.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = String::with_capacity(64 + 96 * (self.strokes.len() + self.helpers.len()));
        out.push_str(&format!("{{\"version\":{DOCUMENT_VERSION},\"strokes\":["));
        for (i, s) in self.strokes.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("{\"stroke_id\":");
            out.push_str(&json_str(&s.stroke_id));
            out.push_str(",\"points\":[");
            for (j, p) in s.points.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("[{:.6},{:.6}]", p.x, p.y));
            }
            out.push_str("],\"color\":");
            out.push_str(&json_str(&s.color));
            out.push_str(&format!(",\"width\":{:.6},\"element_tag\":", s.width));
            match &s.element_tag {
                Some(tag) => out.push_str(&json_str(tag)),
                None => out.push_str("null"),
            }
            out.push('}');
        }
        out.push_str("],\"helpers\":[");
        for (i, h) in self.helpers.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("{\"helper_id\":");
            out.push_str(&json_str(&h.helper_id));
            out.push_str(",\"label\":");
            out.push_str(&json_str(&h.label));
            out.push_str(",\"svg_body\":");
            out.push_str(&json_str(&h.svg_body));
            out.push_str(&format!(
                ",\"position\":[{:.6},{:.6}],\"scale\":{:.6}}}",
                h.position.x, h.position.y, h.scale
            ));
        }
        out.push_str(&format!("],\"revision\":{}}}", self.revision));
        out.into_bytes()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self, CanvasError> {
        let malformed = |m: String| CanvasError::MalformedDocument(m);
        let raw: RawDocument =
            serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;
        if raw.version != DOCUMENT_VERSION {
            return Err(malformed(format!("unsupported version {}", raw.version)));
        }
        let mut doc = CanvasDocument::new();
        for s in raw.strokes {
            let stroke = Stroke {
                stroke_id: s.stroke_id,
                points: s.points.into_iter().map(|[x, y]| Point { x, y }).collect(),
                color: s.color,
                width: s.width,
                element_tag: s.element_tag,
            };
            stroke.validate().map_err(|e| malformed(e.to_string()))?;
            doc.strokes.push(stroke.normalized());
        }
        for h in raw.helpers {
            let helper = HelperObject {
                helper_id: h.helper_id,
                label: h.label,
                svg_body: h.svg_body,
                position: Point { x: h.position[0], y: h.position[1] },
                scale: h.scale,
            };
            helper.validate().map_err(|e| malformed(e.to_string()))?;
            if doc.helper(&helper.helper_id).is_some() {
                return Err(malformed(format!("duplicate helper id `{}`", helper.helper_id)));
            }
            doc.helpers.push(helper.normalized());
        }
        let items = (doc.strokes.len() + doc.helpers.len()) as u64;
        if raw.revision < items {
            return Err(malformed(format!(
                "revision {} is below the {items} mutations implied by the content",
                raw.revision
            )));
        }
        doc.revision = raw.revision;
        Ok(doc)
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    version: u32,
    strokes: Vec<RawStroke>,
    helpers: Vec<RawHelper>,
    revision: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStroke {
    stroke_id: String,
    points: Vec<[f64; 2]>,
    color: String,
    width: f64,
    element_tag: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHelper {
    helper_id: String,
    label: String,
    svg_body: String,
    position: [f64; 2],
    scale: f64,
}

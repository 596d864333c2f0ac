//! Deterministic rasterizer: white background, strokes as round-capped
//! polylines in document order, helpers on top. Coverage is binary (a pixel
//! is inside when its center is), so output depends only on the document.

use std::io::Cursor;

use image::{ImageFormat, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CanvasDocument, CanvasError, HelperObject};
use crate::scaffold::vector::{parse_art, parse_color, Paint, Subpath};

/// Side of a helper at scale 1, as a fraction of the shorter canvas side.
pub const HELPER_EXTENT: f64 = 0.2;

const MIN_DIMENSION: u32 = 64;
const MAX_DIMENSION: u32 = 4096;
const WHITE: [u8; 3] = [255, 255, 255];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub seed: u64,
    /// Maximum offset per axis, normalized units.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Multiplier on every stroke width.
    pub width_scale: f64,
    /// Opacity of each stroke, composited once per stroke.
    pub stroke_alpha: f64,
    pub jitter: Option<Jitter>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { width_scale: 1.0, stroke_alpha: 1.0, jitter: None }
    }
}

/// Renders `doc` and encodes it as PNG.
pub fn export_raster(doc: &CanvasDocument, width: u32, height: u32) -> Result<Vec<u8>, CanvasError> {
    let img = render(doc, width, height, &RenderOptions::default())?;
    Ok(encode_png(&img))
}

pub fn encode_png(img: &RgbImage) -> Vec<u8> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .expect("PNG encoding into memory does not fail");
    buf.into_inner()
}

pub fn render(
    doc: &CanvasDocument,
    width: u32,
    height: u32,
    opts: &RenderOptions,
) -> Result<RgbImage, CanvasError> {
    let valid = MIN_DIMENSION..=MAX_DIMENSION;
    if !valid.contains(&width) || !valid.contains(&height) {
        return Err(CanvasError::BadDimensions { width, height });
    }
    let mut img = RgbImage::from_pixel(width, height, Rgb(WHITE));
    let mut mask = Mask::new(width, height);
    let (w, h) = (width as f64, height as f64);
    let short_side = w.min(h);
    let mut rng = opts.jitter.map(|j| (ChaCha8Rng::seed_from_u64(j.seed), j.amplitude));

    for stroke in &doc.strokes {
        let points: Vec<(f64, f64)> = stroke
            .points
            .iter()
            .map(|p| {
                let (mut x, mut y) = (p.x, p.y);
                if let Some((rng, amp)) = rng.as_mut() {
                    x = (x + rng.random_range(-*amp..=*amp)).clamp(0.0, 1.0);
                    y = (y + rng.random_range(-*amp..=*amp)).clamp(0.0, 1.0);
                }
                (x * w, y * h)
            })
            .collect();
        let radius = (stroke.width * opts.width_scale * short_side / 2.0).max(0.5);
        mask.stroke_polyline(&points, false, radius);
        let rgb = parse_color(&stroke.color).unwrap_or([0, 0, 0]);
        mask.composite(&mut img, rgb, opts.stroke_alpha);
    }

    for helper in &doc.helpers {
        draw_helper(&mut img, &mut mask, helper, w, h);
    }
    Ok(img)
}

fn draw_helper(img: &mut RgbImage, mask: &mut Mask, helper: &HelperObject, w: f64, h: f64) {
    let Ok(art) = parse_art(&helper.svg_body) else {
        return;
    };
    let (vx, vy, vw, vh) = art.view_box;
    let side = HELPER_EXTENT * helper.scale * w.min(h);
    let s = side / vw.max(vh);
    let (cx, cy) = (helper.position.x * w, helper.position.y * h);
    let (ux, uy) = (vx + vw / 2.0, vy + vh / 2.0);
    let map = |sub: &Subpath| -> Vec<(f64, f64)> {
        sub.points.iter().map(|&(x, y)| (cx + (x - ux) * s, cy + (y - uy) * s)).collect()
    };
    for shape in &art.shapes {
        let mapped: Vec<(Vec<(f64, f64)>, bool)> =
            shape.subpaths.iter().map(|sub| (map(sub), sub.closed)).collect();
        if let Some(Paint { rgb, alpha }) = shape.fill {
            let rings: Vec<&[(f64, f64)]> = mapped.iter().map(|(p, _)| p.as_slice()).collect();
            mask.fill_even_odd(&rings);
            mask.composite(img, rgb, alpha);
        }
        if let Some(Paint { rgb, alpha }) = shape.stroke {
            let radius = (shape.stroke_width * s / 2.0).max(0.5);
            for (points, closed) in &mapped {
                mask.stroke_polyline(points, *closed, radius);
            }
            mask.composite(img, rgb, alpha);
        }
    }
}

/// Coverage mask with a dirty rectangle so compositing touches only what
/// was drawn.
struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
    dirty: Option<(u32, u32, u32, u32)>,
}

impl Mask {
    fn new(width: u32, height: u32) -> Self {
        Mask { width, height, bits: vec![false; (width * height) as usize], dirty: None }
    }

    fn clamp_range(&self, lo: f64, hi: f64, limit: u32) -> Option<(u32, u32)> {
        let lo = lo.floor().max(0.0);
        let hi = hi.ceil().min(limit as f64 - 1.0);
        (lo <= hi).then_some((lo as u32, hi as u32))
    }

    fn mark(&mut self, x: u32, y: u32) {
        self.bits[(y * self.width + x) as usize] = true;
        self.dirty = Some(match self.dirty {
            None => (x, y, x, y),
            Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
        });
    }

    fn stroke_polyline(&mut self, points: &[(f64, f64)], closed: bool, radius: f64) {
        let mut segments: Vec<((f64, f64), (f64, f64))> =
            points.windows(2).map(|p| (p[0], p[1])).collect();
        if closed && points.len() > 2 {
            segments.push((points[points.len() - 1], points[0]));
        }
        if segments.is_empty() {
            if let Some(&p) = points.first() {
                segments.push((p, p));
            }
        }
        let r2 = radius * radius;
        for (a, b) in segments {
            let Some((x0, x1)) = self.clamp_range(a.0.min(b.0) - radius, a.0.max(b.0) + radius, self.width) else {
                continue;
            };
            let Some((y0, y1)) = self.clamp_range(a.1.min(b.1) - radius, a.1.max(b.1) + radius, self.height) else {
                continue;
            };
            for py in y0..=y1 {
                for px in x0..=x1 {
                    let c = (px as f64 + 0.5, py as f64 + 0.5);
                    if dist2_to_segment(c, a, b) <= r2 {
                        self.mark(px, py);
                    }
                }
            }
        }
    }

    fn fill_even_odd(&mut self, rings: &[&[(f64, f64)]]) {
        let edges: Vec<((f64, f64), (f64, f64))> = rings
            .iter()
            .filter(|r| r.len() >= 3)
            .flat_map(|r| (0..r.len()).map(move |i| (r[i], r[(i + 1) % r.len()])))
            .collect();
        if edges.is_empty() {
            return;
        }
        let ymin = edges.iter().map(|e| e.0 .1.min(e.1 .1)).fold(f64::INFINITY, f64::min);
        let ymax = edges.iter().map(|e| e.0 .1.max(e.1 .1)).fold(f64::NEG_INFINITY, f64::max);
        let Some((y0, y1)) = self.clamp_range(ymin, ymax, self.height) else {
            return;
        };
        let mut xs = Vec::new();
        for py in y0..=y1 {
            let yc = py as f64 + 0.5;
            xs.clear();
            for &((ax, ay), (bx, by)) in &edges {
                if (ay <= yc && yc < by) || (by <= yc && yc < ay) {
                    xs.push(ax + (yc - ay) / (by - ay) * (bx - ax));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                // pixel centers in [left, right)
                let first = (pair[0] - 0.5).ceil().max(0.0);
                let last = ((pair[1] - 0.5).ceil() - 1.0).min(self.width as f64 - 1.0);
                let mut px = first;
                while px <= last {
                    self.mark(px as u32, py);
                    px += 1.0;
                }
            }
        }
    }

    /// Blends `rgb` at `alpha` into every covered pixel, then clears.
    fn composite(&mut self, img: &mut RgbImage, rgb: [u8; 3], alpha: f64) {
        let Some((x0, y0, x1, y1)) = self.dirty.take() else {
            return;
        };
        let alpha = alpha.clamp(0.0, 1.0);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let idx = (y * self.width + x) as usize;
                if !self.bits[idx] {
                    continue;
                }
                self.bits[idx] = false;
                let px = img.get_pixel_mut(x, y);
                for (dst, src) in px.0.iter_mut().zip(rgb) {
                    let blended = src as f64 * alpha + *dst as f64 * (1.0 - alpha);
                    *dst = blended.round().clamp(0.0, 255.0) as u8;
                }
            }
        }
    }
}

fn dist2_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    (p.0 - qx) * (p.0 - qx) + (p.1 - qy) * (p.1 - qy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canvas::{Point, Stroke};

    fn line(y: f64) -> Stroke {
        Stroke {
            stroke_id: "s".into(),
            points: vec![Point::new(0.0, y), Point::new(1.0, y)],
            color: "#000000".into(),
            width: 0.005,
            element_tag: None,
        }
    }

    #[test]
    fn empty_doc_is_white() {
        let img = render(&CanvasDocument::new(), 64, 64, &RenderOptions::default()).unwrap();
        assert!(img.pixels().all(|p| p.0 == WHITE));
    }

    #[test]
    fn bad_dimensions() {
        let doc = CanvasDocument::new();
        assert_eq!(
            export_raster(&doc, 63, 100).unwrap_err(),
            CanvasError::BadDimensions { width: 63, height: 100 }
        );
        assert!(export_raster(&doc, 64, 4097).is_err());
        assert!(export_raster(&doc, 4096, 64).is_ok());
    }

    #[test]
    fn horizontal_stroke_darkens_its_row() {
        let doc = CanvasDocument::new().apply_stroke(line(0.3)).unwrap();
        let img = render(&doc, 100, 100, &RenderOptions::default()).unwrap();
        let row = (0.3f64 * 100.0).floor() as u32;
        assert!((0..100).all(|x| img.get_pixel(x, row).0 != WHITE));
        assert!((0..100).all(|x| img.get_pixel(x, 60).0 == WHITE));
    }

    #[test]
    fn helper_is_drawn_on_top() {
        let doc = CanvasDocument::new()
            .apply_stroke(line(0.5))
            .unwrap()
            .place_helper(HelperObject {
                helper_id: "h".into(),
                label: "sun".into(),
                svg_body: r##"<svg viewBox="0 0 10 10"><rect x="0" y="0" width="10" height="10" fill="#ff0000"/></svg>"##.into(),
                position: Point::new(0.5, 0.5),
                scale: 1.0,
            })
            .unwrap();
        let img = render(&doc, 100, 100, &RenderOptions::default()).unwrap();
        assert_eq!(img.get_pixel(50, 50).0, [255, 0, 0]);
        assert_eq!(img.get_pixel(10, 50).0, [0, 0, 0]);
        assert_eq!(img.get_pixel(50, 10).0, WHITE);
    }

    #[test]
    fn translucent_stroke_blends_once() {
        let mut s = line(0.5);
        // doubles back over itself; coverage must still be composited once
        s.points.push(Point::new(0.0, 0.5));
        let doc = CanvasDocument::new().apply_stroke(s).unwrap();
        let opts = RenderOptions { stroke_alpha: 0.5, ..Default::default() };
        let img = render(&doc, 64, 64, &opts).unwrap();
        assert_eq!(img.get_pixel(10, 32).0, [128, 128, 128]);
    }
}

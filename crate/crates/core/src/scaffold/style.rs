//! Offline style filters. These are deterministic image pipelines over the
//! canvas raster, not generative style transfer.

use std::collections::BTreeMap;

use image::{Rgb, RgbImage};

use super::{ScaffoldError, StyleKind};
use crate::canvas::{encode_png, render, CanvasDocument, CanvasError, Jitter, RenderOptions};
use crate::domain::{Session, SessionPhase};
use crate::provider::Provider;

/// Side length of styled images, in pixels.
pub const STYLE_SIZE: u32 = 512;

const OIL_COLORS: usize = 12;
const OIL_WIDTH_SCALE: f64 = 1.5;
const WATERCOLOR_ALPHA: f64 = 0.55;
const WATERCOLOR_JITTER: f64 = 0.004;
const ANIME_COLORS: usize = 6;

/// Result of median-cut quantization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    pub colors: Vec<[u8; 3]>,
    /// Palette index of every distinct input color.
    index: BTreeMap<[u8; 3], usize>,
}

impl Palette {
    pub fn index_of(&self, rgb: [u8; 3]) -> usize {
        self.index[&rgb]
    }
}

/// Median-cut palette of at most `k` colors for `img`.
///
/// Boxes of distinct colors are split until there are `k` of them: the box
/// with the widest channel range splits on that channel at the pixel-count
/// median. Each palette entry is the count-weighted mean of its box. Ties
/// resolve to the earlier box and to channel order r, g, b.
pub fn median_cut(img: &RgbImage, k: usize) -> Palette {
    let mut histogram: BTreeMap<[u8; 3], u64> = BTreeMap::new();
    for p in img.pixels() {
        *histogram.entry(p.0).or_default() += 1;
    }
    let mut boxes: Vec<Vec<([u8; 3], u64)>> = vec![histogram.into_iter().collect()];
    while boxes.len() < k.max(1) {
        let widest = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.len() > 1)
            .map(|(i, b)| {
                let (channel, range) = widest_channel(b);
                (i, channel, range)
            })
            .fold(None, |best: Option<(usize, usize, u8)>, cand| match best {
                Some(b) if b.2 >= cand.2 => Some(b),
                _ => Some(cand),
            });
        let Some((i, channel, _)) = widest else { break };
        let mut colors = std::mem::take(&mut boxes[i]);
        colors.sort_by_key(|(rgb, _)| (rgb[channel], *rgb));
        let total: u64 = colors.iter().map(|(_, n)| n).sum();
        let mut running = 0;
        let mut split = colors.len() - 1;
        for (j, (_, n)) in colors.iter().enumerate() {
            running += n;
            if 2 * running >= total {
                split = j + 1;
                break;
            }
        }
        let split = split.clamp(1, colors.len() - 1);
        let upper = colors.split_off(split);
        boxes[i] = colors;
        boxes.insert(i + 1, upper);
    }
    let mut index = BTreeMap::new();
    let colors = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let total: u64 = b.iter().map(|(_, n)| n).sum();
            let mut mean = [0u8; 3];
            for (c, m) in mean.iter_mut().enumerate() {
                let sum: u64 = b.iter().map(|(rgb, n)| u64::from(rgb[c]) * n).sum();
                *m = ((sum + total / 2) / total) as u8;
            }
            for (rgb, _) in b {
                index.insert(*rgb, i);
            }
            mean
        })
        .collect();
    Palette { colors, index }
}

fn widest_channel(colors: &[([u8; 3], u64)]) -> (usize, u8) {
    (0..3)
        .map(|c| {
            let lo = colors.iter().map(|(rgb, _)| rgb[c]).min().unwrap_or(0);
            let hi = colors.iter().map(|(rgb, _)| rgb[c]).max().unwrap_or(0);
            (c, hi - lo)
        })
        .fold((0, 0), |best, cand| if cand.1 > best.1 { cand } else { best })
}

fn quantize(img: &RgbImage, palette: &Palette) -> RgbImage {
    let mut out = img.clone();
    for p in out.pixels_mut() {
        *p = Rgb(palette.colors[palette.index_of(p.0)]);
    }
    out
}

/// Blackens pixels whose palette index differs from the right or lower
/// neighbour.
fn outline(img: &RgbImage, palette: &Palette) -> RgbImage {
    let (w, h) = img.dimensions();
    let idx = |x, y| palette.index_of(img.get_pixel(x, y).0);
    let mut out = quantize(img, palette);
    for y in 0..h {
        for x in 0..w {
            let here = idx(x, y);
            let edge = (x + 1 < w && idx(x + 1, y) != here) || (y + 1 < h && idx(x, y + 1) != here);
            if edge {
                out.put_pixel(x, y, Rgb([0, 0, 0]));
            }
        }
    }
    out
}

/// Offline filter pipeline; returns PNG bytes. Equal inputs give equal bytes.
pub fn stylize(doc: &CanvasDocument, style: StyleKind, seed: u64) -> Result<Vec<u8>, CanvasError> {
    let img = match style {
        StyleKind::OilPainting => {
            let base = render(
                doc,
                STYLE_SIZE,
                STYLE_SIZE,
                &RenderOptions { width_scale: OIL_WIDTH_SCALE, ..RenderOptions::default() },
            )?;
            quantize(&base, &median_cut(&base, OIL_COLORS))
        }
        StyleKind::Watercolor => render(
            doc,
            STYLE_SIZE,
            STYLE_SIZE,
            &RenderOptions {
                stroke_alpha: WATERCOLOR_ALPHA,
                jitter: Some(Jitter { seed, amplitude: WATERCOLOR_JITTER }),
                ..RenderOptions::default()
            },
        )?,
        StyleKind::Anime => {
            let base = render(doc, STYLE_SIZE, STYLE_SIZE, &RenderOptions::default())?;
            outline(&base, &median_cut(&base, ANIME_COLORS))
        }
    };
    Ok(encode_png(&img))
}

/// Styles the session canvas once every task is complete.
pub fn apply_style(
    session: &Session,
    style: StyleKind,
    seed: u64,
    provider: &dyn Provider,
) -> Result<Vec<u8>, ScaffoldError> {
    if !matches!(session.phase, SessionPhase::AllComplete | SessionPhase::StyleApplied) {
        return Err(ScaffoldError::PhaseViolation(session.phase));
    }
    Ok(provider.transfer_style(&session.canvas, style, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canvas::{Point, Stroke};

    fn decode(png: &[u8]) -> RgbImage {
        image::load_from_memory(png).unwrap().to_rgb8()
    }

    #[test]
    fn empty_canvas_stays_white() {
        for style in StyleKind::ALL {
            let img = decode(&stylize(&CanvasDocument::new(), style, 7).unwrap());
            assert!(img.pixels().all(|p| p.0 == [255, 255, 255]), "{style}");
        }
    }

    #[test]
    fn median_cut_limits_colors() {
        let mut img = RgbImage::new(16, 16);
        for (x, y, p) in img.enumerate_pixels_mut() {
            *p = Rgb([(x * 16) as u8, (y * 16) as u8, ((x + y) * 8) as u8]);
        }
        for k in [1, 6, 12] {
            let palette = median_cut(&img, k);
            assert_eq!(palette.colors.len(), k);
            let out = quantize(&img, &palette);
            let distinct: std::collections::BTreeSet<_> = out.pixels().map(|p| p.0).collect();
            assert!(distinct.len() <= k);
        }
        let two = RgbImage::from_fn(4, 1, |x, _| if x < 2 { Rgb([0, 0, 0]) } else { Rgb([255, 0, 0]) });
        assert_eq!(median_cut(&two, 12).colors, vec![[0, 0, 0], [255, 0, 0]]);
    }

    #[test]
    fn anime_outlines_edges() {
        let doc = CanvasDocument::new()
            .apply_stroke(Stroke {
                stroke_id: "s".into(),
                points: vec![Point::new(0.5, 0.5)],
                color: "#ff0000".into(),
                width: 0.1,
                element_tag: None,
            })
            .unwrap();
        let img = decode(&stylize(&doc, StyleKind::Anime, 0).unwrap());
        assert!(img.pixels().any(|p| p.0 == [0, 0, 0]));
        assert!(img.pixels().any(|p| p.0 == [255, 0, 0]));
        assert_eq!(img.get_pixel(0, 0).0, [255, 255, 255]);
    }

    #[test]
    fn watercolor_seed_changes_output() {
        let doc = CanvasDocument::new()
            .apply_stroke(Stroke {
                stroke_id: "s".into(),
                points: vec![Point::new(0.1, 0.1), Point::new(0.9, 0.8)],
                color: "#0000ff".into(),
                width: 0.01,
                element_tag: None,
            })
            .unwrap();
        let a = stylize(&doc, StyleKind::Watercolor, 1).unwrap();
        assert_eq!(a, stylize(&doc, StyleKind::Watercolor, 1).unwrap());
        assert_ne!(a, stylize(&doc, StyleKind::Watercolor, 2).unwrap());
    }
}

//! Geometry extraction from profile markup, for rasterizing helpers.
//!
//! Every shape is flattened to polylines in viewBox units. Curves are
//! subdivided into fixed segment counts so the result is deterministic.

use quick_xml::events::Event;
use quick_xml::Reader;

const CURVE_SEGMENTS: usize = 16;
const ELLIPSE_SEGMENTS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Paint {
    pub rgb: [u8; 3],
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subpath {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub subpaths: Vec<Subpath>,
    pub fill: Option<Paint>,
    pub stroke: Option<Paint>,
    pub stroke_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorArt {
    /// (min_x, min_y, width, height)
    pub view_box: (f64, f64, f64, f64),
    pub shapes: Vec<Shape>,
}

#[derive(Debug, Clone)]
struct Style {
    fill: Option<[u8; 3]>,
    stroke: Option<[u8; 3]>,
    stroke_width: f64,
    opacity: f64,
    fill_opacity: f64,
    stroke_opacity: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            fill: Some([0, 0, 0]),
            stroke: None,
            stroke_width: 1.0,
            opacity: 1.0,
            fill_opacity: 1.0,
            stroke_opacity: 1.0,
        }
    }
}

pub fn parse_art(markup: &str) -> Result<VectorArt, String> {
    let mut reader = Reader::from_str(markup);
    let mut styles: Vec<Style> = vec![Style::default()];
    let mut view_box = None;
    let mut shapes = Vec::new();
    loop {
        let event = reader.read_event().map_err(|e| e.to_string())?;
        let (e, empty) = match &event {
            Event::Start(e) => (e, false),
            Event::Empty(e) => (e, true),
            Event::End(_) => {
                styles.pop();
                continue;
            }
            Event::Eof => break,
            _ => continue,
        };
        let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
        let mut attrs = Vec::new();
        for attr in e.attributes() {
            let attr = attr.map_err(|err| err.to_string())?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr.unescape_value().map_err(|err| err.to_string())?.into_owned();
            attrs.push((key, value));
        }
        let get = |k: &str| attrs.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let num = |k: &str| get(k).and_then(parse_length).unwrap_or(0.0);

        let mut style = styles.last().cloned().unwrap_or_default();
        if let Some(v) = get("fill") {
            style.fill = parse_color(v);
        }
        if let Some(v) = get("stroke") {
            style.stroke = parse_color(v);
        }
        if let Some(w) = get("stroke-width").and_then(parse_length) {
            style.stroke_width = w.max(0.0);
        }
        if let Some(o) = get("opacity").and_then(parse_length) {
            style.opacity *= o.clamp(0.0, 1.0);
        }
        if let Some(o) = get("fill-opacity").and_then(parse_length) {
            style.fill_opacity = o.clamp(0.0, 1.0);
        }
        if let Some(o) = get("stroke-opacity").and_then(parse_length) {
            style.stroke_opacity = o.clamp(0.0, 1.0);
        }

        let subpaths = match name.as_str() {
            "svg" => {
                if view_box.is_none() {
                    view_box = get("viewBox").and_then(parse_view_box).or_else(|| {
                        let w = get("width").and_then(parse_length)?;
                        let h = get("height").and_then(parse_length)?;
                        (w > 0.0 && h > 0.0).then_some((0.0, 0.0, w, h))
                    });
                }
                None
            }
            "rect" => {
                let (x, y, w, h) = (num("x"), num("y"), num("width"), num("height"));
                (w > 0.0 && h > 0.0).then(|| {
                    vec![Subpath {
                        points: vec![(x, y), (x + w, y), (x + w, y + h), (x, y + h)],
                        closed: true,
                    }]
                })
            }
            "circle" => {
                let r = num("r");
                (r > 0.0).then(|| vec![ellipse(num("cx"), num("cy"), r, r)])
            }
            "ellipse" => {
                let (rx, ry) = (num("rx"), num("ry"));
                (rx > 0.0 && ry > 0.0).then(|| vec![ellipse(num("cx"), num("cy"), rx, ry)])
            }
            "line" => Some(vec![Subpath {
                points: vec![(num("x1"), num("y1")), (num("x2"), num("y2"))],
                closed: false,
            }]),
            "polyline" | "polygon" => {
                let nums = numbers(get("points").unwrap_or(""));
                let points: Vec<_> = nums.chunks_exact(2).map(|c| (c[0], c[1])).collect();
                (!points.is_empty())
                    .then(|| vec![Subpath { points, closed: name == "polygon" }])
            }
            "path" => Some(parse_path(get("d").unwrap_or(""))),
            _ => None,
        };

        if let Some(subpaths) = subpaths {
            let subpaths: Vec<_> = subpaths.into_iter().filter(|s| !s.points.is_empty()).collect();
            if !subpaths.is_empty() {
                // lines and open polylines have no interior
                let fillable = !matches!(name.as_str(), "line" | "polyline");
                shapes.push(Shape {
                    subpaths,
                    fill: style.fill.filter(|_| fillable).map(|rgb| Paint {
                        rgb,
                        alpha: style.opacity * style.fill_opacity,
                    }),
                    stroke: style.stroke.filter(|_| style.stroke_width > 0.0).map(|rgb| Paint {
                        rgb,
                        alpha: style.opacity * style.stroke_opacity,
                    }),
                    stroke_width: style.stroke_width,
                });
            }
        }
        if !empty {
            styles.push(style);
        }
    }
    Ok(VectorArt { view_box: view_box.unwrap_or((0.0, 0.0, 100.0, 100.0)), shapes })
}

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64) -> Subpath {
    let points = (0..ELLIPSE_SEGMENTS)
        .map(|i| {
            let t = i as f64 / ELLIPSE_SEGMENTS as f64 * std::f64::consts::TAU;
            (cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect();
    Subpath { points, closed: true }
}

fn parse_length(s: &str) -> Option<f64> {
    let s = s.trim().trim_end_matches("px");
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_view_box(s: &str) -> Option<(f64, f64, f64, f64)> {
    match numbers(s).as_slice() {
        &[x, y, w, h] if w > 0.0 && h > 0.0 => Some((x, y, w, h)),
        _ => None,
    }
}

pub fn parse_color(s: &str) -> Option<[u8; 3]> {
    let s = s.trim().to_ascii_lowercase();
    if let Some(hex) = s.strip_prefix('#') {
        let digits: Vec<u8> = hex
            .chars()
            .map(|c| c.to_digit(16).map(|d| d as u8))
            .collect::<Option<_>>()?;
        return match digits.as_slice() {
            [r, g, b] => Some([r * 17, g * 17, b * 17]),
            [r1, r2, g1, g2, b1, b2] => Some([r1 * 16 + r2, g1 * 16 + g2, b1 * 16 + b2]),
            _ => Some([0, 0, 0]),
        };
    }
    let rgb = match s.as_str() {
        "none" | "transparent" => return None,
        "white" => [255, 255, 255],
        "red" => [255, 0, 0],
        "green" => [0, 128, 0],
        "blue" => [0, 0, 255],
        "yellow" => [255, 255, 0],
        "orange" => [255, 165, 0],
        "gold" => [255, 215, 0],
        "brown" => [165, 42, 42],
        "gray" | "grey" => [128, 128, 128],
        "purple" => [128, 0, 128],
        "pink" => [255, 192, 203],
        "cyan" => [0, 255, 255],
        "skyblue" => [135, 206, 235],
        "lightblue" => [173, 216, 230],
        "navy" => [0, 0, 128],
        "darkgreen" => [0, 100, 0],
        "lime" => [0, 255, 0],
        _ => [0, 0, 0],
    };
    Some(rgb)
}

/// All numbers in `s`, accepting SVG's compact forms (`10-5`, `.5.5`, `1e-3`).
fn numbers(s: &str) -> Vec<f64> {
    let mut tokens = PathTokens { s: s.as_bytes(), pos: 0 };
    let mut out = Vec::new();
    while let Some(tok) = tokens.next_token() {
        if let Token::Number(n) = tok {
            out.push(n);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Command(u8),
    Number(f64),
}

struct PathTokens<'a> {
    s: &'a [u8],
    pos: usize,
}

impl PathTokens<'_> {
    fn next_token(&mut self) -> Option<Token> {
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_whitespace() || self.s[self.pos] == b',') {
            self.pos += 1;
        }
        let c = *self.s.get(self.pos)?;
        if c.is_ascii_alphabetic() && c != b'e' && c != b'E' {
            self.pos += 1;
            return Some(Token::Command(c));
        }
        let start = self.pos;
        let mut seen_dot = false;
        let mut seen_exp = false;
        if matches!(c, b'+' | b'-') {
            self.pos += 1;
        }
        while let Some(&d) = self.s.get(self.pos) {
            match d {
                b'0'..=b'9' => self.pos += 1,
                b'.' if !seen_dot && !seen_exp => {
                    seen_dot = true;
                    self.pos += 1;
                }
                b'e' | b'E' if !seen_exp => {
                    seen_exp = true;
                    self.pos += 1;
                    if matches!(self.s.get(self.pos), Some(b'+' | b'-')) {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
        if self.pos == start {
            // unknown byte, skip it
            self.pos += 1;
            return self.next_token();
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .map(Token::Number)
            .or_else(|| self.next_token())
    }
}

fn parse_path(d: &str) -> Vec<Subpath> {
    let mut tokens = PathTokens { s: d.as_bytes(), pos: 0 };
    let mut all: Vec<Token> = Vec::new();
    while let Some(t) = tokens.next_token() {
        all.push(t);
    }

    let mut subpaths: Vec<Subpath> = Vec::new();
    let mut current = Subpath { points: Vec::new(), closed: false };
    let mut pos = (0.0, 0.0);
    let mut start = (0.0, 0.0);
    let mut last_ctrl: Option<(f64, f64)> = None;
    let mut last_cmd = b'M';
    let mut i = 0;
    let mut cmd: Option<u8> = None;

    let take = |i: &mut usize, n: usize| -> Option<Vec<f64>> {
        let mut v = Vec::with_capacity(n);
        for k in 0..n {
            match all.get(*i + k) {
                Some(Token::Number(x)) => v.push(*x),
                _ => return None,
            }
        }
        *i += n;
        Some(v)
    };

    while i < all.len() {
        if let Token::Command(c) = all[i] {
            cmd = Some(c);
            i += 1;
            if c == b'Z' || c == b'z' {
                if !current.points.is_empty() {
                    current.closed = true;
                    subpaths.push(std::mem::replace(
                        &mut current,
                        Subpath { points: Vec::new(), closed: false },
                    ));
                }
                pos = start;
                last_ctrl = None;
                last_cmd = c.to_ascii_uppercase();
                continue;
            }
        }
        let Some(c) = cmd else {
            i += 1;
            continue;
        };
        let rel = c.is_ascii_lowercase();
        let base = if rel { pos } else { (0.0, 0.0) };
        let upper = c.to_ascii_uppercase();
        let arity = match upper {
            b'M' | b'L' | b'T' => 2,
            b'H' | b'V' => 1,
            b'C' => 6,
            b'S' | b'Q' => 4,
            b'A' => 7,
            _ => {
                i += 1;
                continue;
            }
        };
        let Some(args) = take(&mut i, arity) else {
            break;
        };
        let pt = |x: f64, y: f64| (base.0 + x, base.1 + y);
        match upper {
            b'M' => {
                if !current.points.is_empty() {
                    subpaths.push(std::mem::replace(
                        &mut current,
                        Subpath { points: Vec::new(), closed: false },
                    ));
                }
                pos = pt(args[0], args[1]);
                start = pos;
                current.points.push(pos);
                // implicit lineto for following pairs
                cmd = Some(if rel { b'l' } else { b'L' });
                last_ctrl = None;
            }
            b'L' => {
                pos = pt(args[0], args[1]);
                current.points.push(pos);
                last_ctrl = None;
            }
            b'H' => {
                pos = (if rel { pos.0 + args[0] } else { args[0] }, pos.1);
                current.points.push(pos);
                last_ctrl = None;
            }
            b'V' => {
                pos = (pos.0, if rel { pos.1 + args[0] } else { args[0] });
                current.points.push(pos);
                last_ctrl = None;
            }
            b'C' | b'S' => {
                let (c1, c2, end) = if upper == b'C' {
                    (pt(args[0], args[1]), pt(args[2], args[3]), pt(args[4], args[5]))
                } else {
                    let c1 = match last_ctrl {
                        Some(lc) if matches!(last_cmd, b'C' | b'S') => (2.0 * pos.0 - lc.0, 2.0 * pos.1 - lc.1),
                        _ => pos,
                    };
                    (c1, pt(args[0], args[1]), pt(args[2], args[3]))
                };
                if current.points.is_empty() {
                    current.points.push(pos);
                }
                for k in 1..=CURVE_SEGMENTS {
                    let t = k as f64 / CURVE_SEGMENTS as f64;
                    let mt = 1.0 - t;
                    let x = mt * mt * mt * pos.0 + 3.0 * mt * mt * t * c1.0 + 3.0 * mt * t * t * c2.0 + t * t * t * end.0;
                    let y = mt * mt * mt * pos.1 + 3.0 * mt * mt * t * c1.1 + 3.0 * mt * t * t * c2.1 + t * t * t * end.1;
                    current.points.push((x, y));
                }
                last_ctrl = Some(c2);
                pos = end;
            }
            b'Q' | b'T' => {
                let (ctrl, end) = if upper == b'Q' {
                    (pt(args[0], args[1]), pt(args[2], args[3]))
                } else {
                    let ctrl = match last_ctrl {
                        Some(lc) if matches!(last_cmd, b'Q' | b'T') => (2.0 * pos.0 - lc.0, 2.0 * pos.1 - lc.1),
                        _ => pos,
                    };
                    (ctrl, pt(args[0], args[1]))
                };
                if current.points.is_empty() {
                    current.points.push(pos);
                }
                for k in 1..=CURVE_SEGMENTS {
                    let t = k as f64 / CURVE_SEGMENTS as f64;
                    let mt = 1.0 - t;
                    let x = mt * mt * pos.0 + 2.0 * mt * t * ctrl.0 + t * t * end.0;
                    let y = mt * mt * pos.1 + 2.0 * mt * t * ctrl.1 + t * t * end.1;
                    current.points.push((x, y));
                }
                last_ctrl = Some(ctrl);
                pos = end;
            }
            b'A' => {
                // arcs are approximated by their chord
                pos = pt(args[5], args[6]);
                if current.points.is_empty() {
                    current.points.push(start);
                }
                current.points.push(pos);
                last_ctrl = None;
            }
            _ => unreachable!(),
        }
        last_cmd = upper;
    }
    if !current.points.is_empty() {
        subpaths.push(current);
    }
    subpaths
}

//! Whitelist sanitizer for helper-object markup.
//!
//! Accepted profile: a single `<svg>` root containing paths, basic shapes and
//! groups. Scripts, event-handler attributes and references to anything
//! outside the document cause rejection; everything else that is not on the
//! whitelist is dropped. The output is a canonical re-serialization, so
//! sanitizing twice gives the same string.

use std::borrow::Cow;
use std::fmt;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

pub const SVG_NAMESPACE: &str = "http://www.w3.org/2000/svg";
pub const MAX_MARKUP_BYTES: usize = 64 * 1024;

/// Elements kept in sanitized output.
pub const ALLOWED_ELEMENTS: &[&str] = &[
    "svg", "g", "path", "rect", "circle", "ellipse", "line", "polyline", "polygon",
];

/// Attributes kept in sanitized output.
pub const ALLOWED_ATTRIBUTES: &[&str] = &[
    "xmlns",
    "viewBox",
    "width",
    "height",
    "id",
    "d",
    "x",
    "y",
    "x1",
    "y1",
    "x2",
    "y2",
    "cx",
    "cy",
    "r",
    "rx",
    "ry",
    "points",
    "fill",
    "fill-opacity",
    "fill-rule",
    "stroke",
    "stroke-width",
    "stroke-opacity",
    "stroke-linecap",
    "stroke-linejoin",
    "opacity",
];

/// Elements whose mere presence rejects the markup (compared lowercase).
const EXECUTABLE_ELEMENTS: &[&str] = &["script", "foreignobject", "iframe", "object", "embed", "handler"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    Script { element: String },
    EventAttribute { attribute: String },
    ExternalReference { attribute: String, value: String },
    NotSvgRoot { root: String },
    NotWellFormed(String),
    TooLarge(usize),
    Empty,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Script { element } => write!(f, "executable element `{element}`"),
            Rejection::EventAttribute { attribute } => write!(f, "event attribute `{attribute}`"),
            Rejection::ExternalReference { attribute, value } => {
                write!(f, "external reference in `{attribute}`: {value}")
            }
            Rejection::NotSvgRoot { root } => write!(f, "root element `{root}` is not svg"),
            Rejection::NotWellFormed(m) => write!(f, "not well-formed: {m}"),
            Rejection::TooLarge(n) => write!(f, "markup is {n} bytes, limit {MAX_MARKUP_BYTES}"),
            Rejection::Empty => write!(f, "no svg element found"),
        }
    }
}

impl std::error::Error for Rejection {}

struct Frame {
    name: String,
    kept: bool,
}

pub fn sanitize_svg(markup: &str) -> Result<String, Rejection> {
    if markup.len() > MAX_MARKUP_BYTES {
        return Err(Rejection::TooLarge(markup.len()));
    }
    let mut reader = Reader::from_str(markup);
    reader.config_mut().check_end_names = true;
    let mut out = String::with_capacity(markup.len());
    let mut stack: Vec<Frame> = Vec::new();
    let mut root_seen = false;
    let mut root_closed = false;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| Rejection::NotWellFormed(e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                if root_closed {
                    return Err(Rejection::NotWellFormed("content after the root element".into()));
                }
                let name = utf8(e.name().as_ref())?.to_owned();
                if EXECUTABLE_ELEMENTS.contains(&name.to_ascii_lowercase().as_str()) {
                    return Err(Rejection::Script { element: name });
                }
                let attrs = checked_attributes(e)?;
                if stack.is_empty() {
                    if name != "svg" {
                        return Err(Rejection::NotSvgRoot { root: name });
                    }
                    root_seen = true;
                }
                let kept = stack.last().is_none_or(|f| f.kept) && ALLOWED_ELEMENTS.contains(&name.as_str());
                if kept {
                    out.push('<');
                    out.push_str(&name);
                    for (key, value) in &attrs {
                        if keep_attribute(key, value) {
                            out.push(' ');
                            out.push_str(key);
                            out.push_str("=\"");
                            out.push_str(&escape(value));
                            out.push('"');
                        }
                    }
                    out.push_str(if is_empty { "/>" } else { ">" });
                }
                if is_empty {
                    if stack.is_empty() {
                        root_closed = true;
                    }
                } else {
                    stack.push(Frame { name, kept });
                }
            }
            Event::End(_) => {
                let frame = stack
                    .pop()
                    .ok_or_else(|| Rejection::NotWellFormed("unbalanced end tag".into()))?;
                if frame.kept {
                    out.push_str("</");
                    out.push_str(&frame.name);
                    out.push('>');
                }
                if stack.is_empty() {
                    root_closed = true;
                }
            }
            Event::Text(t) => {
                let text = t
                    .unescape()
                    .map_err(|e| Rejection::NotWellFormed(e.to_string()))?;
                if stack.last().is_some_and(|f| f.name.eq_ignore_ascii_case("style")) {
                    check_css(&text)?;
                }
                if stack.is_empty() && !text.trim().is_empty() {
                    return Err(Rejection::NotWellFormed("text outside the root element".into()));
                }
            }
            Event::CData(t) => {
                if stack.last().is_some_and(|f| f.name.eq_ignore_ascii_case("style")) {
                    check_css(&String::from_utf8_lossy(&t))?;
                }
            }
            Event::DocType(t) => {
                let decl = String::from_utf8_lossy(&t).to_ascii_uppercase();
                if ["SYSTEM", "PUBLIC", "ENTITY"].iter().any(|k| decl.contains(k)) {
                    return Err(Rejection::ExternalReference {
                        attribute: "DOCTYPE".into(),
                        value: String::from_utf8_lossy(&t).trim().to_owned(),
                    });
                }
            }
            Event::Comment(_) | Event::Decl(_) | Event::PI(_) => {}
            Event::Eof => break,
        }
    }
    if !stack.is_empty() {
        return Err(Rejection::NotWellFormed(format!(
            "element `{}` is never closed",
            stack.last().map(|f| f.name.as_str()).unwrap_or_default()
        )));
    }
    if !root_seen {
        return Err(Rejection::Empty);
    }
    Ok(out)
}

fn utf8(bytes: &[u8]) -> Result<&str, Rejection> {
    std::str::from_utf8(bytes).map_err(|_| Rejection::NotWellFormed("invalid UTF-8".into()))
}

/// Decodes every attribute and applies the rejection rules to all of them,
/// whitelisted or not.
fn checked_attributes(e: &BytesStart<'_>) -> Result<Vec<(String, String)>, Rejection> {
    let mut attrs = Vec::new();
    for attr in e.attributes().with_checks(true) {
        let attr = attr.map_err(|err| Rejection::NotWellFormed(err.to_string()))?;
        let key = utf8(attr.key.as_ref())?.to_owned();
        let value: Cow<'_, str> = attr
            .unescape_value()
            .map_err(|err| Rejection::NotWellFormed(err.to_string()))?;
        let value = value.into_owned();
        let lkey = key.to_ascii_lowercase();
        let local = lkey.rsplit(':').next().unwrap_or(&lkey);
        if local.starts_with("on") {
            return Err(Rejection::EventAttribute { attribute: key });
        }
        let external = |attribute: &str, value: &str| Rejection::ExternalReference {
            attribute: attribute.to_owned(),
            value: value.to_owned(),
        };
        if (local == "href" || local == "src") && !value.trim_start().starts_with('#') {
            return Err(external(&key, &value));
        }
        let lvalue = value.to_ascii_lowercase();
        if lvalue.contains("javascript:") || lvalue.contains("vbscript:") {
            return Err(external(&key, &value));
        }
        if lvalue.contains("@import") || has_external_url(&lvalue) {
            return Err(external(&key, &value));
        }
        attrs.push((key, value));
    }
    Ok(attrs)
}

fn check_css(text: &str) -> Result<(), Rejection> {
    let lower = text.to_ascii_lowercase();
    if lower.contains("@import") || has_external_url(&lower) {
        return Err(Rejection::ExternalReference {
            attribute: "style".into(),
            value: text.trim().to_owned(),
        });
    }
    Ok(())
}

/// `true` if any `url(...)` target does not point inside the document.
fn has_external_url(lower: &str) -> bool {
    let mut rest = lower;
    while let Some(pos) = rest.find("url(") {
        rest = &rest[pos + 4..];
        let target = rest.trim_start().trim_start_matches(['"', '\'']);
        if !target.starts_with('#') {
            return true;
        }
    }
    false
}

fn keep_attribute(key: &str, value: &str) -> bool {
    if key == "xmlns" {
        return value == SVG_NAMESPACE;
    }
    ALLOWED_ATTRIBUTES.contains(&key)
}

fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_path_is_unchanged() {
        let svg = r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100"><path d="M10 10 L90 90" stroke="#000000" stroke-width="4"/></svg>"##;
        assert_eq!(sanitize_svg(svg).unwrap(), svg);
    }

    #[test]
    fn event_attribute_is_named() {
        let svg = r#"<svg><circle cx="1" cy="1" r="1" onclick="steal()"/></svg>"#;
        assert_eq!(
            sanitize_svg(svg).unwrap_err(),
            Rejection::EventAttribute { attribute: "onclick".into() }
        );
        let svg = r#"<svg onLoad="x()"></svg>"#;
        assert_eq!(
            sanitize_svg(svg).unwrap_err(),
            Rejection::EventAttribute { attribute: "onLoad".into() }
        );
    }

    #[test]
    fn scripts_are_rejected() {
        let svg = r#"<svg><g><script>alert(1)</script></g></svg>"#;
        assert_eq!(sanitize_svg(svg).unwrap_err(), Rejection::Script { element: "script".into() });
        let svg = r#"<svg><foreignObject><div/></foreignObject></svg>"#;
        assert!(matches!(sanitize_svg(svg), Err(Rejection::Script { .. })));
    }

    #[test]
    fn external_references_are_rejected() {
        for svg in [
            r#"<svg><image href="http://evil.example/x.png"/></svg>"#,
            r#"<svg xmlns:xlink="http://www.w3.org/1999/xlink"><use xlink:href="other.svg#a"/></svg>"#,
            r#"<svg><rect width="1" height="1" fill="url(http://x/y#p)"/></svg>"#,
            r#"<svg><rect style="background:url('https://x')"/></svg>"#,
            r#"<svg><style>@import url(https://x/y.css);</style></svg>"#,
            r#"<!DOCTYPE svg SYSTEM "http://x/evil.dtd"><svg/>"#,
        ] {
            assert!(
                matches!(sanitize_svg(svg), Err(Rejection::ExternalReference { .. })),
                "{svg}"
            );
        }
    }

    #[test]
    fn internal_references_are_fine_but_dropped() {
        let svg = r##"<svg><defs><circle id="c" r="2"/></defs><use href="#c"/><rect width="2" height="2" fill="url(#g)"/></svg>"##;
        assert_eq!(
            sanitize_svg(svg).unwrap(),
            r#"<svg><rect width="2" height="2" fill="url(#g)"/></svg>"#
        );
    }

    #[test]
    fn unknown_elements_and_attributes_are_stripped() {
        let svg = "<?xml version=\"1.0\"?>\n<!-- hi -->\n<svg viewBox=\"0 0 4 4\" class=\"x\" xmlns:xlink=\"http://www.w3.org/1999/xlink\">\n  <title>Sun</title>\n  <circle cx=\"2\" cy=\"2\" r=\"1\" style=\"fill:red\"/>\n</svg>\n";
        assert_eq!(
            sanitize_svg(svg).unwrap(),
            r#"<svg viewBox="0 0 4 4"><circle cx="2" cy="2" r="1"/></svg>"#
        );
    }

    #[test]
    fn structure_errors() {
        assert!(matches!(sanitize_svg("<div/>"), Err(Rejection::NotSvgRoot { .. })));
        assert!(matches!(sanitize_svg("<svg><g></svg>"), Err(Rejection::NotWellFormed(_))));
        assert!(matches!(sanitize_svg("<svg><g>"), Err(Rejection::NotWellFormed(_))));
        assert!(matches!(sanitize_svg("<svg/><svg/>"), Err(Rejection::NotWellFormed(_))));
        assert_eq!(sanitize_svg("  "), Err(Rejection::Empty));
        assert!(matches!(
            sanitize_svg(&"x".repeat(MAX_MARKUP_BYTES + 1)),
            Err(Rejection::TooLarge(_))
        ));
    }

    #[test]
    fn escaping_is_stable() {
        let svg = r#"<svg id="a&amp;b&quot;c"></svg>"#;
        let once = sanitize_svg(svg).unwrap();
        assert_eq!(once, svg);
        assert_eq!(sanitize_svg(&once).unwrap(), once);
    }
}

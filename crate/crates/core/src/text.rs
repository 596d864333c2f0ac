//! Small text utilities shared by matching, framing and id derivation.

use sha2::{Digest, Sha256};

/// Lowercase alphanumeric words of `s`, in order.
pub fn words(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

/// `true` for labels of the form `[a-z][a-z0-9_-]*`.
pub fn is_label(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

/// Words of a label, splitting on `-` and `_`.
pub fn label_words(label: &str) -> Vec<String> {
    label
        .split(['-', '_'])
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Hex SHA-256 of the concatenated parts, each terminated by a NUL byte.
pub fn content_hash(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
        hasher.update([0u8]);
    }
    hex::encode(hasher.finalize())
}

/// `true` for `#rrggbb` (either case).
pub fn is_hex_color(s: &str) -> bool {
    s.len() == 7 && s.starts_with('#') && s[1..].chars().all(|c| c.is_ascii_hexdigit())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_split_and_lowercase() {
        assert_eq!(words("The Water-Cycle!"), vec!["the", "water", "cycle"]);
        assert!(words("  ").is_empty());
    }

    #[test]
    fn labels() {
        assert!(is_label("cell-wall"));
        assert!(is_label("co2"));
        assert!(!is_label("Cell"));
        assert!(!is_label("2cell"));
        assert!(!is_label(""));
        assert_eq!(label_words("carbon-dioxide"), vec!["carbon", "dioxide"]);
    }
}

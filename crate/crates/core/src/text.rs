//! Small text-normalization helpers shared by ingestion and id derivation.

use unicode_normalization::UnicodeNormalization;

/// NFC-normalize and collapse runs of whitespace to single spaces, trimming
/// the ends. Case is preserved.
pub fn normalize_ws(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Canonical form used for exact entity-name matching: NFC, whitespace
/// collapsed, lowercased.
pub fn normalize_name(name: &str) -> String {
    normalize_ws(name).to_lowercase()
}

/// Truncate to at most `max` Unicode scalar values after NFC normalization.
pub fn truncate_chars(text: &str, max: usize) -> String {
    text.nfc().take(max).collect()
}

/// Lowercased alphanumeric tokens, splitting on everything else.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_collapses() {
        assert_eq!(normalize_ws("  a\t b\n\nc "), "a b c");
    }

    #[test]
    fn name_matching_is_case_insensitive() {
        assert_eq!(normalize_name("Melanie "), normalize_name("melanie"));
    }

    #[test]
    fn truncation_counts_scalars_after_nfc() {
        // "e" + combining acute composes to a single scalar under NFC.
        let s = "e\u{0301}abc";
        assert_eq!(truncate_chars(s, 2), "\u{00e9}a");
    }
}

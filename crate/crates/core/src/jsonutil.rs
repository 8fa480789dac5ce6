//! Tolerant extraction of JSON values out of LLM replies that may carry
//! surrounding prose.

/// End byte (exclusive) of the balanced JSON value whose opening bracket
/// sits at byte `open`. String literals and escapes are respected.
pub(crate) fn balanced_end(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0i64;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[open..].char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' | '[' => depth += 1,
            '}' | ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i + c.len_utf8());
                }
            }
            _ => {}
        }
    }
    None
}

/// The first balanced `{...}` span in `text`.
pub(crate) fn first_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let end = balanced_end(text, start)?;
    Some(&text[start..end])
}

/// Byte offsets of every `[` outside the reach of any earlier candidate;
/// callers try each span in order until one parses.
pub(crate) fn array_candidates(text: &str) -> impl Iterator<Item = &str> {
    let mut offset = 0usize;
    std::iter::from_fn(move || {
        while offset < text.len() {
            let rel = text[offset..].find('[')?;
            let open = offset + rel;
            offset = open + 1;
            if let Some(end) = balanced_end(text, open) {
                return Some(&text[open..end]);
            }
        }
        None
    })
}

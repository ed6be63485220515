use alloc::string::String;

/// Collapses every whitespace run to a single space and trims the ends.
pub(crate) fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Key used for option equality: collapsed whitespace plus case folding.
pub(crate) fn option_key(s: &str) -> String {
    collapse_whitespace(s).to_lowercase()
}

/// Removes all whitespace; used when matching quoted code against source lines.
pub(crate) fn strip_whitespace(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

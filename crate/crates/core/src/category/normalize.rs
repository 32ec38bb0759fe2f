//! Candidate spellings of a keyword for matching.

const STOP_TOKENS: &[&str] = &["DB", "TBL", "COL"];

/// Split on non-alphanumerics and camel-case humps.
fn tokens(keyword: &str, camel: bool) -> Vec<String> {
    let chars: Vec<char> = keyword.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        if camel && !cur.is_empty() && c.is_uppercase() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                out.push(std::mem::take(&mut cur));
            }
        }
        cur.push(c);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out.into_iter().map(|t| t.to_uppercase()).collect()
}

/// Upper-cased forms, most specific first: camel-split, plain, and with
/// `DB`/`TBL`/`COL` tokens removed. A bare `ID` yields nothing.
pub fn normalize_keyword(keyword: &str) -> Vec<String> {
    let split = tokens(keyword, true);
    if split.is_empty() || split == ["ID"] {
        return Vec::new();
    }
    let mut forms = vec![split.join("_")];
    let plain = tokens(keyword, false).join("_");
    if !forms.contains(&plain) {
        forms.push(plain);
    }
    let stripped: Vec<&str> = split.iter().map(String::as_str).filter(|t| !STOP_TOKENS.contains(t)).collect();
    if !stripped.is_empty() && stripped.len() != split.len() {
        let s = stripped.join("_");
        if !forms.contains(&s) {
            forms.push(s);
        }
    }
    forms
}

/// Parse a raw numeric cell. Plain numerals parse as-is, a range `A-B` with
/// `A < B` becomes its midpoint, and anything else is missing.
pub fn parse_cell(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    if let Some(v) = numeral(t) {
        return Some(v);
    }
    // The first character may be a sign, so a range separator starts at 1.
    for (pos, _) in t.char_indices().filter(|&(i, c)| c == '-' && i > 0) {
        if let (Some(a), Some(b)) = (numeral(&t[..pos]), numeral(&t[pos + 1..])) {
            return (a < b).then_some(0.5 * (a + b));
        }
    }
    None
}

fn numeral(s: &str) -> Option<f64> {
    let s = s.trim();
    // Reject words such as "inf" or "NaN" that f64::from_str would accept.
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b)) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(parse_cell("42.5"), Some(42.5));
        assert_eq!(parse_cell("1000-2000"), Some(1500.0));
        assert_eq!(parse_cell("n/a"), None);
        assert_eq!(parse_cell(""), None);
    }

    #[test]
    fn signs_and_degenerate_ranges() {
        assert_eq!(parse_cell("-5"), Some(-5.0));
        assert_eq!(parse_cell("-5--3"), Some(-4.0));
        assert_eq!(parse_cell("1e3"), Some(1000.0));
        assert_eq!(parse_cell("2000-1000"), None);
        assert_eq!(parse_cell("5-5"), None);
        assert_eq!(parse_cell("inf"), None);
        assert_eq!(parse_cell("NaN"), None);
        assert_eq!(parse_cell(" 7 "), Some(7.0));
        assert_eq!(parse_cell("12 t"), None);
    }
}

//! Small CSV formatting helpers shared by the bench experiments.

/// Formats with 12 significant digits, positional where that stays short
/// and scientific otherwise, trailing zeros trimmed. Keeps CSV cells both
/// compact and reparseable without drift at solver tolerances.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..=11).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let text = format!("{x:.decimals$}");
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// Quotes a field if it contains a comma, quote, or newline.
pub fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

//! Text formatting shared by the JSON and CSV writers.

/// Formats a float with 17 significant digits so that parsing it back
/// yields the identical `f64`.
pub fn f64_17(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn point_list(points: impl IntoIterator<Item = (f64, f64)>) -> String {
    let items: Vec<String> = points
        .into_iter()
        .map(|(x, y)| format!("[{},{}]", f64_17(x), f64_17(y)))
        .collect();
    format!("[{}]", items.join(","))
}

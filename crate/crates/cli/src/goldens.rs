//! Published convergence tables for the manufactured-solution example, in
//! the same CSV layout as `ll_convergence.csv` (without the rate columns).

use crate::csv::CsvTable;

/// Damping 1.
pub const TABLE1: &str = include_str!("../goldens/table1.csv");
/// Damping 1e-2.
pub const TABLE2: &str = include_str!("../goldens/table2.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenTable {
    /// `(coarse_n, l2, h1)` per row.
    pub rows: Vec<(usize, f64, f64)>,
    pub order_l2: f64,
    pub order_h1: f64,
}

pub fn parse_golden(text: &str) -> Result<GoldenTable, String> {
    let t = CsvTable::parse(text)?;
    if t.header() != ["H", "l2_error", "h1_error"] {
        return Err(format!("unexpected header {:?}", t.header()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    let mut rows = Vec::new();
    let mut order = None;
    for r in t.rows() {
        if r[0] == "order" {
            order = Some((num(&r[1])?, num(&r[2])?));
            continue;
        }
        let n = r[0]
            .strip_prefix("1/")
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(|| format!("bad mesh size `{}`", r[0]))?;
        rows.push((n, num(&r[1])?, num(&r[2])?));
    }
    let (order_l2, order_h1) = order.ok_or("missing order row")?;
    Ok(GoldenTable { rows, order_l2, order_h1 })
}

//! CSV trace output with a fixed schema and byte-stable rendering.
//!
//! Schema: `round,expert,revenue,cum_revenue,best_cum,regret`, LF line
//! endings, 17-significant-digit scientific rendering for every float so a
//! rerun with the same config and seed is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::experts::RegretTrace;

pub const TRACE_HEADER: &str = "round,expert,revenue,cum_revenue,best_cum,regret";

/// 17 significant digits: 1 before the point, 16 after.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_trace(trace: &RegretTrace) -> String {
    let mut out = String::with_capacity(80 * (trace.rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in &trace.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.round,
            row.expert,
            fmt_f64(row.revenue),
            fmt_f64(row.cum_revenue),
            fmt_f64(row.best_cum),
            fmt_f64(row.regret)
        );
    }
    out
}

pub fn write_trace(path: &Path, trace: &RegretTrace) -> Result<()> {
    std::fs::write(path, render_trace(trace))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::TraceRow;
    use crate::mechanisms::Choice;

    #[test]
    fn rendering_is_fixed_width_and_lossless() {
        let s = fmt_f64(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn trace_rows_match_schema() {
        let trace = RegretTrace {
            rows: vec![TraceRow {
                round: 1,
                expert: 3,
                choice: Choice::NoPurchase,
                revenue: 0.5,
                cum_revenue: 0.5,
                best_cum: 0.75,
                regret: 0.25,
            }],
            best_expert: 0,
            best_cum_revenue: 0.75,
            realized_cum_revenue: 0.5,
        };
        let text = render_trace(&trace);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        let row = lines.next().unwrap();
        assert!(row.starts_with("1,3,"));
        assert_eq!(row.split(',').count(), 6);
        assert!(text.ends_with('\n'));
    }
}

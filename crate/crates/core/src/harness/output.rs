use std::io::Write;

use super::{RowRecord, Scenario, Series};
use crate::error::Result;
use crate::fmt::format_sig;

pub const ROWS_HEADER: &str =
    "scenario,n,replication,achievedRisk,oracleRisk,slackExact,slackNonexact,budget,satisfied";
pub const SUMMARY_HEADER: &str = "scenario,series,n,mean,stderr,count,floored,slope,intercept,rSquared,fitFloored";

const DIGITS: usize = 17;

fn num(v: f64) -> String {
    format_sig(v, DIGITS)
}

/// Per-replication table, one line per `(n, replication)`.
pub fn write_rows_csv(out: &mut impl Write, rows: &[RowRecord]) -> Result<()> {
    writeln!(out, "{ROWS_HEADER}")?;
    for row in rows {
        let r = &row.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.scenario.name(),
            r.n,
            row.replication,
            num(r.achieved_risk),
            num(r.oracle_risk),
            num(r.slack_exact),
            num(r.slack_nonexact),
            num(r.residual_budget),
            r.satisfied
        )?;
    }
    Ok(())
}

/// Per-`n` means and standard errors; fit columns are repeated on every
/// point of a fitted series and left empty otherwise.
pub fn write_summary_csv(out: &mut impl Write, scenario: Scenario, series: &[Series]) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in series {
        let fit = match &s.fit {
            Some(f) => format!("{},{},{},{}", num(f.slope), num(f.intercept), num(f.r_squared), f.floored),
            None => ",,,".to_string(),
        };
        for p in &s.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                scenario.name(),
                s.name,
                p.n,
                num(p.mean),
                num(p.stderr),
                p.count,
                p.floored,
                fit
            )?;
        }
    }
    Ok(())
}

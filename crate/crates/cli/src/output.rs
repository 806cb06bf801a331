//! CSV and manifest rendering. Everything here is a pure function of its
//! inputs so that repeated invocations produce byte-identical files.

use std::fmt::Write as _;

use ilm_core::ilm::BatchResult;
use ilm_core::metrics::Baselines;
use ilm_core::MetricReport;

/// Threshold on final `a`/`b` counted as reconstructing a parent.
pub const MATCH_THRESHOLD: f64 = 0.9;

pub const TRAJECTORY_HEADER: &str = "run,p,generation,x,c,s,a,b,x_raw,c_raw,s_raw,a_raw,b_raw";
pub const FINALS_HEADER: &str = "p,run,sub_seed,x,c,s,a,b";
pub const SUMMARY_HEADER: &str = "p,frac_a_gt_0.9,frac_b_gt_0.9,mean_a,mean_b";
pub const COMPARE_HEADER: &str = "architecture,p,run,a,b,mean_a";

/// Fixed six-decimal formatting, locale independent.
pub fn fmt_value(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_value).unwrap_or_default()
}

pub fn fmt_p(p: f64) -> String {
    format!("{p:?}")
}

fn metric_columns(m: &MetricReport, out: &mut String) {
    let raw = &m.raw;
    let _ = write!(
        out,
        "{},{},{},{},{},{},{},{},{},{}",
        fmt_value(m.x),
        fmt_value(m.c),
        fmt_opt(m.s),
        fmt_value(m.a),
        fmt_value(m.b),
        fmt_value(raw.x),
        fmt_value(raw.c),
        fmt_opt(raw.s),
        fmt_value(raw.a),
        fmt_value(raw.b),
    );
}

/// Rows for one run, generation ascending, without header.
pub fn trajectory_rows(result: &BatchResult) -> String {
    let mut out = String::new();
    for record in &result.trajectory.records {
        let _ = write!(
            out,
            "{},{},{},",
            result.run,
            fmt_p(result.p),
            record.generation
        );
        metric_columns(&record.metrics, &mut out);
        out.push('\n');
    }
    out
}

pub fn trajectories_csv(results: &[BatchResult]) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for r in results {
        out.push_str(&trajectory_rows(r));
    }
    out
}

pub fn finals_csv(results: &[BatchResult]) -> String {
    let mut out = format!("{FINALS_HEADER}\n");
    for r in results {
        let m = r.trajectory.last();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_p(r.p),
            r.run,
            r.sub_seed,
            fmt_value(m.x),
            fmt_value(m.c),
            fmt_opt(m.s),
            fmt_value(m.a),
            fmt_value(m.b)
        );
    }
    out
}

/// Final-generation statistics for one p value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub p: f64,
    pub runs: usize,
    pub frac_a: f64,
    pub frac_b: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

/// Groups consecutive results by p (results arrive in `(p, run)` order).
pub fn summarize(results: &[BatchResult]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for group in results.chunk_by(|x, y| x.p == y.p) {
        let n = group.len() as f64;
        let finals: Vec<&MetricReport> = group.iter().map(|r| r.trajectory.last()).collect();
        rows.push(SummaryRow {
            p: group[0].p,
            runs: group.len(),
            frac_a: finals.iter().filter(|m| m.a > MATCH_THRESHOLD).count() as f64 / n,
            frac_b: finals.iter().filter(|m| m.b > MATCH_THRESHOLD).count() as f64 / n,
            mean_a: finals.iter().map(|m| m.a).sum::<f64>() / n,
            mean_b: finals.iter().map(|m| m.b).sum::<f64>() / n,
        });
    }
    rows
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_p(r.p),
            fmt_value(r.frac_a),
            fmt_value(r.frac_b),
            fmt_value(r.mean_a),
            fmt_value(r.mean_b)
        );
    }
    out
}

/// Per-run final similarities for every architecture, with the per-(architecture, p) mean of `a`.
pub fn compare_csv(per_arch: &[(String, Vec<BatchResult>)]) -> String {
    let mut out = format!("{COMPARE_HEADER}\n");
    for (label, results) in per_arch {
        let summary = summarize(results);
        for r in results {
            let mean_a = summary
                .iter()
                .find(|s| s.p == r.p)
                .map(|s| s.mean_a)
                .unwrap_or(f64::NAN);
            let m = r.trajectory.last();
            let _ = writeln!(
                out,
                "{label},{},{},{},{},{}",
                fmt_p(r.p),
                r.run,
                fmt_value(m.a),
                fmt_value(m.b),
                fmt_value(mean_a)
            );
        }
    }
    out
}

/// `baseline.<name> = ...` lines.
pub fn baseline_lines(b: &Baselines) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "baseline.n1 = {}", b.n1);
    let _ = writeln!(out, "baseline.n3 = {}", b.n3);
    for (name, entry) in b.entries() {
        let analytic = entry
            .analytic
            .map(|a| format!("{a:e}"))
            .unwrap_or_else(|| "NA".into());
        let (mc, se, samples, seed) = match entry.monte_carlo {
            Some(mc) => (
                format!("{:e}", mc.mean),
                format!("{:e}", mc.se),
                mc.samples.to_string(),
                mc.seed.to_string(),
            ),
            None => ("NA".into(), "NA".into(), "0".into(), "NA".into()),
        };
        let status = if entry.consistent() { "ok" } else { "mismatch" };
        let _ = writeln!(
            out,
            "baseline.{name} = value={:e} analytic={analytic} mc={mc} se={se} samples={samples} seed={seed} status={status}",
            entry.value
        );
    }
    out
}

/// Reads `baseline.<name>` values back out of a manifest.
pub fn parse_baseline_value(manifest: &str, name: &str) -> Option<f64> {
    let prefix = format!("baseline.{name} = ");
    let line = manifest.lines().find(|l| l.starts_with(&prefix))?;
    line[prefix.len()..]
        .split_whitespace()
        .find_map(|f| f.strip_prefix("value="))
        .and_then(|v| v.parse().ok())
}

pub struct ManifestInput<'a> {
    pub command: &'a str,
    pub label: Option<&'a str>,
    pub echo: &'a [(String, String)],
    pub baselines: &'a Baselines,
    pub results: &'a [BatchResult],
}

pub fn manifest(input: &ManifestInput<'_>) -> String {
    let mut out = String::from("# iterated learning contact simulation manifest\n");
    let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "command = {}", input.command);
    if let Some(label) = input.label {
        let _ = writeln!(out, "architecture = {label}");
    }
    for (k, v) in input.echo {
        let _ = writeln!(out, "config.{k} = {v}");
    }
    out.push_str(&baseline_lines(input.baselines));
    for r in input.results {
        let _ = writeln!(
            out,
            "run.p={}.run={} = sub_seed={} parent_a={:016x} parent_b={:016x}",
            fmt_p(r.p),
            r.run,
            r.sub_seed,
            r.trajectory.parent_a,
            r.trajectory.parent_b
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_decimals() {
        assert_eq!(fmt_value(1.0), "1.000000");
        assert_eq!(fmt_value(1.0 / 1024.0), "0.000977");
        assert_eq!(fmt_value(-1e-9), "0.000000");
        assert_eq!(fmt_value(-0.0012), "-0.001200");
        assert_eq!(fmt_opt(None), "");
        assert_eq!(fmt_p(0.75), "0.75");
        assert_eq!(fmt_p(1.0), "1.0");
    }

    #[test]
    fn baseline_value_round_trips_through_manifest() {
        let b = Baselines::analytic(10, 10, 0.0123);
        let text = baseline_lines(&b);
        assert_eq!(parse_baseline_value(&text, "f0"), Some(1.0 / 1024.0));
        assert_eq!(parse_baseline_value(&text, "c0"), Some(0.0123));
        assert!(text.contains("analytic=NA"));
    }
}

//! Long help text, generated from the table definitions so the documented
//! columns cannot drift from the written headers.

use std::fmt::Write;

use crate::io::{tables, Table};

const COMMON: &str = "\
Every run writes config.toml (the canonical config), summary.toml, manifest.toml
(sha256 of every file) and a <file>.meta.toml sidecar per CSV carrying the config
hash and column units. Scaled time t_s = sigma_t_sq * seconds; columns ending in
_s are scaled time, columns ending in _seconds are seconds.";

fn render(tables: &[&Table]) -> String {
    let mut s = String::from("Output files:\n");
    for t in tables {
        let _ = writeln!(s, "\n  {}: {}", t.file, t.description);
        for c in t.columns {
            let _ = writeln!(s, "    {:<18} [{}] {}", c.name, c.unit, c.meaning);
        }
    }
    s.push('\n');
    s.push_str(COMMON);
    s
}

pub fn simulate() -> String {
    render(&[&tables::PATH, &tables::BURSTS])
}

pub fn analyze() -> String {
    let input = "\
Input files (analysis.inputs) are CSV with header `t_s,x` or `t,x` (scaled time)
or `t_seconds,x` (seconds, converted with sigma_t_sq before analysis).\n\n";
    format!(
        "{input}{}",
        render(&[
            &tables::BURSTS,
            &tables::DURATION_PDF,
            &tables::PEAK_VS_DURATION,
            &tables::SIZE_VS_DURATION,
            &tables::SIZE_VS_PEAK,
            &tables::PSD,
        ])
    )
}

pub fn fpt() -> String {
    render(&[&tables::BURST_PDF])
}

pub fn returns() -> String {
    render(&[&tables::RETURNS, &tables::SMOOTHED, &tables::RETURN_BURSTS, &tables::RETURN_DURATION_PDF])
}

pub fn exit_codes() -> &'static str {
    "Exit codes: 0 success, 2 invalid configuration or input, 3 I/O error, 4 numerical failure or verification mismatch."
}

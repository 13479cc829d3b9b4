//! Per-stage wall-clock seconds and the timing report table.

use std::fmt::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub membrane: f64,
    /// `None` when bending is disabled.
    pub bending: Option<f64>,
    pub statics: f64,
    pub stress: f64,
    pub diffusion: f64,
    pub modes: f64,
    /// Whole call, including mesh preparation.
    pub total: f64,
}

impl TimingRecord {
    pub fn stage_sum(&self) -> f64 {
        self.membrane + self.bending.unwrap_or(0.0) + self.statics + self.stress + self.diffusion + self.modes
    }

    pub fn is_valid(&self) -> bool {
        let stages =
            [self.membrane, self.bending.unwrap_or(0.0), self.statics, self.stress, self.diffusion, self.modes];
        stages.iter().all(|&t| t >= 0.0 && t.is_finite()) && self.stage_sum() <= self.total + 1e-9
    }
}

/// Runs `f` and returns its result with elapsed seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

pub const REPORT_COLUMNS: [&str; 8] = ["|V|", "|T|", "Membrane", "Bending", "Statics", "Stress", "Diffusion", "Modes"];

/// Header plus one row per `(name, |V|, |T|, timings)`.
pub fn report_table(rows: &[(String, usize, usize, TimingRecord)]) -> String {
    let secs = |t: f64| format!("{t:.3}");
    let mut cells: Vec<Vec<String>> =
        vec![std::iter::once("Model").chain(REPORT_COLUMNS).map(str::to_string).collect()];
    for (name, v, t, rec) in rows {
        cells.push(vec![
            name.clone(),
            v.to_string(),
            t.to_string(),
            secs(rec.membrane),
            rec.bending.map_or_else(|| "N/A".to_string(), secs),
            secs(rec.statics),
            secs(rec.stress),
            secs(rec.diffusion),
            secs(rec.modes),
        ]);
    }
    let widths: Vec<usize> = (0..cells[0].len()).map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
    }
    out
}

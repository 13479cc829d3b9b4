#![allow(dead_code)]

use std::path::PathBuf;

use diffstruct_pipeline::SessionConfig;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn config(name: &str) -> SessionConfig {
    SessionConfig::load(&data(&format!("configs/{name}.json"))).unwrap()
}

/// Max over modes of `min(‖a − b‖, ‖a + b‖) / ‖a‖`.
pub fn mode_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let d = x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let s = x.iter().zip(y).map(|(p, q)| (p + q).powi(2)).sum::<f64>().sqrt();
            d.min(s) / n
        })
        .fold(0.0, f64::max)
}

//! Level values where a wave family changes sign.

use crate::stripes::Family;

/// Identifies the level `t = k + sign·(1 − m)/4` of one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelId {
    pub family: u8,
    pub k: i64,
    pub sign: i8,
}

/// Snap tolerance in wave-argument units.
pub fn tolerance(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

/// Levels `p(t) = m` strictly inside `(t_min, t_max)`, ascending.
///
/// Empty when `|m| ≥ 1`: the wave then touches the threshold without
/// changing sign.
pub fn levels_between(t_min: f64, t_max: f64, threshold: f64, family: u8) -> Vec<(LevelId, f64)> {
    if !(threshold.abs() < 1.0) || !(t_max > t_min) {
        return Vec::new();
    }
    let d = 0.25 * (1.0 - threshold);
    let lo = (t_min - d).floor() as i64;
    let hi = (t_max + d).ceil() as i64;
    let mut out = Vec::new();
    for k in lo..=hi {
        for sign in [-1i8, 1] {
            let t = level_value(k, sign, d);
            if t > t_min + tolerance(t_min) && t < t_max - tolerance(t_max) {
                out.push((LevelId { family, k, sign }, t));
            }
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

pub fn level_value(k: i64, sign: i8, d: f64) -> f64 {
    k as f64 + sign as f64 * d
}

/// Wave-argument range over a face with per-vertex mode values `v`.
pub fn argument_range(family: &Family, v: [f64; 3]) -> (f64, f64) {
    let t = v.map(|x| family.argument(x));
    (t[0].min(t[1]).min(t[2]), t[0].max(t[1]).max(t[2]))
}

/// Number of isolines of `s = 0` for `family` crossing a face.
pub fn count_crossings(family: &Family, v: [f64; 3]) -> usize {
    let (lo, hi) = argument_range(family, v);
    levels_between(lo, hi, family.threshold, 0).len()
}

/// Crossing counts of the major and minor families for every face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingReport {
    pub major: Vec<usize>,
    pub minor: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stripes::triangle_wave;

    fn scan(lo: f64, hi: f64, m: f64) -> usize {
        let n = 1_000_000;
        let mut count = 0;
        let mut prev = triangle_wave(lo) - m > 0.0;
        for i in 1..=n {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            let cur = triangle_wave(t) - m > 0.0;
            if cur != prev {
                count += 1;
            }
            prev = cur;
        }
        count
    }

    #[test]
    fn matches_dense_scan() {
        let fam = Family { alpha: 1.0, beta: 0.0, threshold: 0.0 };
        assert_eq!(count_crossings(&fam, [0.0, 0.3, 2.6]), scan(0.0, 2.6, 0.0));
        assert_eq!(count_crossings(&fam, [0.0, 0.3, 2.6]), 5);
        for (lo, hi, m) in [(-1.37, 0.41, 0.3), (0.1, 3.9, -0.6), (2.0, 2.2, 0.9)] {
            let fam = Family { alpha: 1.0, beta: 0.0, threshold: m };
            assert_eq!(count_crossings(&fam, [lo, hi, lo]), scan(lo, hi, m), "{lo} {hi} {m}");
        }
    }

    #[test]
    fn degenerate_cases() {
        let fam = Family { alpha: 3.0, beta: 0.2, threshold: 0.0 };
        assert_eq!(count_crossings(&fam, [0.4; 3]), 0);
        let peak = Family { threshold: 1.0, ..fam };
        assert_eq!(count_crossings(&peak, [0.0, 1.0, 9.0]), 0);
        let trough = Family { threshold: -1.0, ..fam };
        assert_eq!(count_crossings(&trough, [0.0, 1.0, 9.0]), 0);
    }

    #[test]
    fn endpoint_levels_are_excluded() {
        // t = 0.25 is a level for m = 0
        assert!(levels_between(0.25, 0.5, 0.0, 0).is_empty());
        assert_eq!(levels_between(0.2, 0.3, 0.0, 0).len(), 1);
    }
}

//! Stripe fields `s1`, `s2` built from one U mode and one W mode, and the
//! union indicator `max(s1, s2) > 0`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::ModeSet;
use crate::mesh::TriangleMesh;

#[derive(Debug, Error, PartialEq)]
pub enum StripeError {
    #[error("mode index {index} for {family} outside 1..={available}")]
    ModeIndex { family: &'static str, index: usize, available: usize },
    #[error("frequency {0} must be positive and finite")]
    Frequency(f64),
    #[error("parameter {0} must be finite")]
    NotFinite(&'static str),
    #[error("per-vertex values have length {got}, mesh has {expected} vertices")]
    Length { got: usize, expected: usize },
}

/// Structure parameters. JSON keys are camelCase (`mU`, `alphaU`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub a: usize,
    pub b: usize,
    #[serde(rename = "mU")]
    pub m_u: f64,
    #[serde(rename = "mW")]
    pub m_w: f64,
    #[serde(rename = "alphaU")]
    pub alpha_u: f64,
    #[serde(rename = "alphaW")]
    pub alpha_w: f64,
    #[serde(rename = "betaU")]
    pub beta_u: f64,
    #[serde(rename = "betaW")]
    pub beta_w: f64,
}

impl Default for StripeParams {
    fn default() -> Self {
        Self {
            gamma: None,
            r: None,
            a: 1,
            b: 1,
            m_u: 0.0,
            m_w: 0.0,
            alpha_u: 8.0,
            alpha_w: 8.0,
            beta_u: 0.0,
            beta_w: 0.0,
        }
    }
}

impl StripeParams {
    pub fn validate(&self) -> Result<(), StripeError> {
        for alpha in [self.alpha_u, self.alpha_w] {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(StripeError::Frequency(alpha));
            }
        }
        for (name, v) in [("betaU", self.beta_u), ("betaW", self.beta_w), ("mU", self.m_u), ("mW", self.m_w)] {
            if !v.is_finite() {
                return Err(StripeError::NotFinite(name));
            }
        }
        Ok(())
    }
}

/// `p(x) = 1 − 4|x − round(x)|`: period 1, peak 1 at integers, trough −1 at half-integers.
pub fn triangle_wave(x: f64) -> f64 {
    1.0 - 4.0 * (x - x.round()).abs()
}

/// Strict union.
pub fn inside(s1: f64, s2: f64) -> bool {
    s1.max(s2) > 0.0
}

/// One wave family: `s = p(α v + β) − m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Family {
    pub alpha: f64,
    pub beta: f64,
    pub threshold: f64,
}

impl Family {
    /// Wave argument for a mode value.
    pub fn argument(&self, v: f64) -> f64 {
        self.alpha * v + self.beta
    }

    pub fn eval(&self, v: f64) -> f64 {
        triangle_wave(self.argument(v)) - self.threshold
    }
}

/// Per-vertex mode values `υ`, `ω` and the parameters that turn them into stripes.
#[derive(Debug, Clone, PartialEq)]
pub struct StripeField {
    pub upsilon: Vec<f64>,
    pub omega: Vec<f64>,
    pub params: StripeParams,
}

impl StripeField {
    pub fn new(upsilon: Vec<f64>, omega: Vec<f64>, params: StripeParams) -> Result<Self, StripeError> {
        params.validate()?;
        if upsilon.len() != omega.len() {
            return Err(StripeError::Length { got: omega.len(), expected: upsilon.len() });
        }
        Ok(Self { upsilon, omega, params })
    }

    /// Selects `U_a` and `W_b` (1-based).
    pub fn from_modes(modes_u: &ModeSet, modes_w: &ModeSet, params: StripeParams) -> Result<Self, StripeError> {
        let pick = |set: &ModeSet, index: usize, family| {
            set.mode(index).map(<[f64]>::to_vec).ok_or(StripeError::ModeIndex { family, index, available: set.len() })
        };
        Self::new(pick(modes_u, params.a, "U")?, pick(modes_w, params.b, "W")?, params)
    }

    pub fn check_mesh(&self, mesh: &TriangleMesh) -> Result<(), StripeError> {
        if self.upsilon.len() != mesh.vertex_count() {
            return Err(StripeError::Length { got: self.upsilon.len(), expected: mesh.vertex_count() });
        }
        Ok(())
    }

    pub fn major(&self) -> Family {
        Family { alpha: self.params.alpha_u, beta: self.params.beta_u, threshold: self.params.m_u }
    }

    pub fn minor(&self) -> Family {
        Family { alpha: self.params.alpha_w, beta: self.params.beta_w, threshold: self.params.m_w }
    }

    /// `(s1, s2)` for interpolated mode values.
    pub fn eval_values(&self, upsilon: f64, omega: f64) -> (f64, f64) {
        (self.major().eval(upsilon), self.minor().eval(omega))
    }

    /// `(s1, s2)` at barycentric point `bary` of `face`.
    pub fn eval(&self, mesh: &TriangleMesh, face: usize, bary: [f64; 3]) -> (f64, f64) {
        let f = mesh.faces()[face];
        let lerp = |v: &[f64]| bary[0] * v[f[0]] + bary[1] * v[f[1]] + bary[2] * v[f[2]];
        self.eval_values(lerp(&self.upsilon), lerp(&self.omega))
    }

    pub fn indicator(&self, mesh: &TriangleMesh, face: usize, bary: [f64; 3]) -> bool {
        let (s1, s2) = self.eval(mesh, face, bary);
        inside(s1, s2)
    }
}

/// Uniform random barycentric coordinates.
pub fn random_barycentric<R: Rng>(rng: &mut R) -> [f64; 3] {
    let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    [1.0 - u - v, u, v]
}

/// Area-weighted Monte Carlo estimate of the covered fraction.
pub fn coverage(mesh: &TriangleMesh, field: &StripeField, samples: usize, seed: u64) -> f64 {
    assert!(samples >= 1);
    let areas: Vec<f64> = (0..mesh.face_count()).map(|f| mesh.face_area(f)).collect();
    let pick = WeightedIndex::new(&areas).expect("mesh has positive area");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let f = pick.sample(&mut rng);
        if field.indicator(mesh, f, random_barycentric(&mut rng)) {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn wave_values() {
        assert_eq!(triangle_wave(0.0), 1.0);
        assert_eq!(triangle_wave(0.5), -1.0);
        assert_eq!(triangle_wave(0.25), 0.0);
        assert_eq!(triangle_wave(-0.25), 0.0);
        for i in 0..100 {
            let x = -3.0 + 0.0731 * i as f64;
            assert!((triangle_wave(x + 1.0) - triangle_wave(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn wave_superlevel_fraction() {
        // dense 1D quadrature over one period
        let n = 200_000;
        for m in [-0.9, -0.16, 0.0, 0.3, 0.95] {
            let above = (0..n).filter(|&i| triangle_wave((i as f64 + 0.5) / n as f64) > m).count();
            assert!((above as f64 / n as f64 - (1.0 - m) / 2.0).abs() < 1e-4);
        }
    }

    #[test]
    fn union_boundary_is_strict() {
        assert!(inside(-0.2, 0.3));
        assert!(!inside(0.0, 0.0));
    }

    #[test]
    fn params_json_uses_table_names() {
        let text = r#"{"gamma":1000.0,"r":10.0,"a":3,"b":3,"mU":-0.16,"mW":-0.13,"alphaU":4.0,"alphaW":7.0,"betaU":1.0,"betaW":0.57}"#;
        let p: StripeParams = serde_json::from_str(text).unwrap();
        assert_eq!(p.m_u, -0.16);
        assert_eq!(serde_json::to_string(&p).unwrap(), text);
    }

    #[test]
    fn vertex_value_on_wave_zero() {
        let mesh = primitives::grid(1, 1, 1.0, 1.0);
        let params = StripeParams { alpha_u: 1.0, ..Default::default() };
        let field = StripeField::new(vec![0.25; 4], vec![0.0; 4], params).unwrap();
        let (s1, _) = field.eval(&mesh, 0, [1.0, 0.0, 0.0]);
        assert_eq!(s1, 0.0);
    }

    #[test]
    fn coverage_limits_and_union() {
        let mesh = primitives::grid(40, 40, 1.0, 1.0);
        let x: Vec<f64> = mesh.positions().iter().map(|p| p.x).collect();
        let y: Vec<f64> = mesh.positions().iter().map(|p| p.y).collect();
        let base = StripeParams { alpha_u: 7.0, alpha_w: 5.0, beta_u: 0.13, beta_w: 0.71, ..Default::default() };
        let empty = StripeField::new(x.clone(), y.clone(), StripeParams { m_u: 1.0, m_w: 1.0, ..base }).unwrap();
        assert_eq!(coverage(&mesh, &empty, 10_000, 1), 0.0);
        let full = StripeField::new(x.clone(), y.clone(), StripeParams { m_u: -1.0, ..base }).unwrap();
        assert_eq!(coverage(&mesh, &full, 10_000, 1), 1.0);
        let half = StripeField::new(x, y, base).unwrap();
        let c = coverage(&mesh, &half, 200_000, 2);
        assert!((c - 0.75).abs() < 0.02, "{c}");
    }
}

//! Result records shared by the two expansions.

use serde::Serialize;

use crate::scalar::Scalar;

/// Convergence data of the low-density expansion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubCertificate {
    pub epsilon_p: f64,
    pub epsilon_star_p: f64,
    /// ln(1 + 1/√2)
    pub a_value: f64,
    /// (3+2√2) ε_p ≤ 1
    pub connectivity_ok: bool,
    /// 2e² ε*_p < 1
    pub pressure_ok: bool,
}

/// Convergence data of the high-density expansion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KpCertificate {
    pub a_value: f64,
    pub big_a: f64,
    pub delta_p: f64,
    pub cutset_r: usize,
    pub cutset_c: f64,
    pub degree: usize,
    /// e A (1 + Δ^{R+1}) δ_p
    pub product: f64,
    pub threshold_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Certificate {
    Sub(SubCertificate),
    Sup(KpCertificate),
}

impl Certificate {
    pub fn valid(&self) -> bool {
        match self {
            Certificate::Sub(c) => c.connectivity_ok,
            Certificate::Sup(c) => c.threshold_ok,
        }
    }
}

/// A truncated series with its rigorous remainder estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionResult {
    pub value: Scalar,
    /// Largest total polymer size included.
    pub k: usize,
    /// Bound on |full series − value|; `None` when no bound is available.
    pub tail_bound: Option<f64>,
    pub certificate: Certificate,
    /// Contribution of each total size 0..=k.
    pub by_size: Vec<Scalar>,
    /// Closed-form upper bound on the full quantity, when one applies.
    pub closed_bound: Option<f64>,
}

impl ExpansionResult {
    /// Whether `x` lies within the tail bound of the value.
    pub fn brackets(&self, x: f64) -> Option<bool> {
        self.tail_bound.map(|t| (self.value.to_f64() - x).abs() <= t)
    }
}

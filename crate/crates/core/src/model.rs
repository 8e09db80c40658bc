//! Parameter and model descriptions shared across modules.

use serde::{Deserialize, Serialize};

use crate::arma_poly::ArmaParams;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// θ = (d, φ′)′ with φ = (AR coefficients, MA coefficients).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams<S> {
    pub d: S,
    pub ar: Vec<S>,
    pub ma: Vec<S>,
}

impl<S: Real> ThetaParams<S> {
    pub fn new(d: S, ar: Vec<S>, ma: Vec<S>) -> Self {
        Self { d, ar, ma }
    }

    pub fn fractional(d: S) -> Self {
        Self { d, ar: Vec::new(), ma: Vec::new() }
    }

    pub fn p(&self) -> usize {
        self.ar.len() + self.ma.len()
    }

    pub fn arma(&self) -> Result<ArmaParams<S>> {
        ArmaParams::new(self.ar.clone(), self.ma.clone())
    }

    /// Flat vector (d, ar..., ma...).
    pub fn to_vec(&self) -> Vec<S> {
        let mut v = Vec::with_capacity(1 + self.p());
        v.push(self.d);
        v.extend_from_slice(&self.ar);
        v.extend_from_slice(&self.ma);
        v
    }

    pub fn from_slice(v: &[S], p1: usize, p2: usize) -> Result<Self> {
        if v.len() != 1 + p1 + p2 {
            return Err(Error::Shape(format!("expected {} parameters, got {}", 1 + p1 + p2, v.len())));
        }
        Ok(Self { d: v[0], ar: v[1..1 + p1].to_vec(), ma: v[1 + p1..].to_vec() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deterministic {
    None,
    Constant,
    ConstantTrend,
}

impl Deterministic {
    pub fn columns(self) -> usize {
        match self {
            Deterministic::None => 0,
            Deterministic::Constant => 1,
            Deterministic::ConstantTrend => 2,
        }
    }
}

/// Orders, parameter box and deterministic terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p1: usize,
    pub p2: usize,
    pub d_box: (f64, f64),
    /// Each ARMA coefficient lies in [−arma_bound, arma_bound].
    pub arma_bound: f64,
    pub deterministic: Deterministic,
    /// Hold d at this value and estimate only the ARMA part.
    pub fixed_d: Option<f64>,
}

impl ModelSpec {
    pub fn new(p1: usize, p2: usize) -> Self {
        Self {
            p1,
            p2,
            d_box: (-5.0, 5.0),
            arma_bound: 0.9999,
            deterministic: Deterministic::Constant,
            fixed_d: None,
        }
    }

    /// Box for d centered at `center` with half-width 5.
    pub fn centered_at(mut self, center: f64) -> Self {
        self.d_box = (center - 5.0, center + 5.0);
        self
    }

    pub fn with_d_box(mut self, lo: f64, hi: f64) -> Self {
        self.d_box = (lo, hi);
        self
    }

    pub fn with_fixed_d(mut self, d: f64) -> Self {
        self.fixed_d = Some(d);
        self
    }

    pub fn with_deterministic(mut self, det: Deterministic) -> Self {
        self.deterministic = det;
        self
    }

    pub fn p(&self) -> usize {
        self.p1 + self.p2
    }

    /// Number of free parameters.
    pub fn n_free(&self) -> usize {
        self.p() + usize::from(self.fixed_d.is_none())
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.d_box;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("empty d box [{lo}, {hi}]")));
        }
        if !(self.arma_bound > 0.0 && self.arma_bound < 1.0) {
            return Err(Error::Config(format!("ARMA bound must lie in (0,1), got {}", self.arma_bound)));
        }
        if let Some(d) = self.fixed_d {
            if !d.is_finite() {
                return Err(Error::Config("fixed d must be finite".into()));
            }
        }
        Ok(())
    }

    /// Lower and upper bounds of the free parameters.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        if self.fixed_d.is_none() {
            lo.push(self.d_box.0);
            hi.push(self.d_box.1);
        }
        for _ in 0..self.p() {
            lo.push(-self.arma_bound);
            hi.push(self.arma_bound);
        }
        (lo, hi)
    }

    pub fn theta_from_free(&self, free: &[f64]) -> ThetaParams<f64> {
        let (d, rest) = match self.fixed_d {
            Some(d) => (d, free),
            None => (free[0], &free[1..]),
        };
        ThetaParams { d, ar: rest[..self.p1].to_vec(), ma: rest[self.p1..].to_vec() }
    }

    pub fn free_from_theta(&self, theta: &ThetaParams<f64>) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_free());
        if self.fixed_d.is_none() {
            v.push(theta.d);
        }
        v.extend_from_slice(&theta.ar);
        v.extend_from_slice(&theta.ma);
        v
    }
}

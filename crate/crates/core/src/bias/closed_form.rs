//! Closed-form bias expressions for special cases, used to cross-check the
//! general engine.

use serde::{Deserialize, Serialize};

use crate::arma_poly::{bh_coeffs, expand_weights};
use crate::error::{Error, Result};
use crate::model::ThetaParams;
use crate::special_fn::{digamma, dilog, gen_binom, ZETA2, ZETA3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormCase {
    /// Pure fractional noise with a constant.
    Arfima0d0,
    /// Fractional noise with AR(1) short-run dynamics.
    Arfima1d0,
    /// ARMA with d held at 0.
    ArmaShort,
    /// AR(1) with d held at 0.
    Ar1,
}

/// T·S (score bias of the CSS estimator) and T·B (intrinsic bias).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub t_score: Vec<f64>,
    pub t_intrinsic: Vec<f64>,
}

type M2 = [[f64; 2]; 2];

fn inv2(a: &M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn hadamard_sum(a: &M2, b: &M2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

fn matvec2(a: &M2, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Matrices of the ARFIMA(1,d,0) intrinsic bias: (A, [F1,F2], [G1,G2], [C01,C02]).
pub fn arfima1d0_matrices(phi: f64) -> Result<(M2, [M2; 2], [M2; 2], [M2; 2])> {
    if phi == 0.0 || phi.abs() >= 1.0 {
        return Err(Error::Shape(format!("closed form needs 0 < |phi| < 1, got {phi}")));
    }
    let l = (1.0 - phi).ln();
    let li = dilog(-phi / (1.0 - phi))?;
    let g = 1.0 / (1.0 - phi * phi);
    let off = -l / phi;
    let a = [[ZETA2, off], [off, g]];
    let x = 2.0 * li / phi - l * l / phi;
    let c1 = [[-6.0 * ZETA3, x], [x, 2.0 * l * g]];
    let c2 = [[x, 2.0 * l * g], [2.0 * l * g, 0.0]];
    let f1 = [[-2.0 * ZETA3, -l * l / phi], [li / phi, l * g]];
    let f2 = [[li / phi, l * g], [0.0, 0.0]];
    let y = l * g - (phi / (1.0 - phi) + l) / (phi * phi);
    let g1 = [[-4.0 * ZETA3, 2.0 * li / phi], [-l * l / phi + li / phi, y]];
    let g2 = [[-l * l / phi + li / phi, y], [2.0 * l * g, -2.0 * phi * g * g]];
    Ok((a, [f1, f2], [g1, g2], [c1, c2]))
}

fn assemble2(a: &M2, f: &[M2; 2], g: &[M2; 2], c: &[M2; 2]) -> [f64; 2] {
    let ai = inv2(a);
    let mut v = [0.0; 2];
    for k in 0..2 {
        let mut gf = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                gf[i][j] = g[k][i][j] + f[k][i][j];
            }
        }
        let sandwich = mul2(&mul2(&ai, &c[k]), &ai);
        v[k] = hadamard_sum(&ai, &gf) - 0.5 * hadamard_sum(&sandwich, a);
    }
    matvec2(&ai, v)
}

fn score_pure(d: f64, t: usize) -> Result<f64> {
    if d > 0.5 {
        Ok(-(digamma(d)? - digamma(2.0 * d - 1.0)?) / ZETA2)
    } else {
        Ok(-((t as f64).ln() - digamma(1.0 - d)? - 1.0 / (1.0 - 2.0 * d)) / ZETA2)
    }
}

pub fn closed_form(case: ClosedFormCase, theta0: &ThetaParams<f64>, t: usize) -> Result<ClosedForm> {
    let shape = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!("{case:?} needs {what}")))
        }
    };
    match case {
        ClosedFormCase::Arfima0d0 => {
            shape(theta0.p() == 0, "no ARMA coefficients")?;
            Ok(ClosedForm {
                t_score: vec![score_pure(theta0.d, t)?],
                t_intrinsic: vec![-3.0 * ZETA3 / (ZETA2 * ZETA2)],
            })
        }
        ClosedFormCase::Arfima1d0 => {
            shape(theta0.ar.len() == 1 && theta0.ma.is_empty(), "exactly one AR coefficient")?;
            let phi = theta0.ar[0];
            let d = theta0.d;
            let (a, f, g, c) = arfima1d0_matrices(phi)?;
            let tb = assemble2(&a, &f, &g, &c);
            let ai = inv2(&a);
            let v = if d > 0.5 {
                let c0 = gen_binom(2.0 * d - 2.0, d - 1.0)?;
                let c1 = gen_binom(2.0 * d, d)?;
                let w0 = (1.0 - phi) * (1.0 - phi) * c0;
                let denom = w0 + phi * c1;
                let top = w0 * (digamma(2.0 * d - 1.0)? - digamma(d)?)
                    + phi * c1 * (digamma(2.0 * d + 1.0)? - digamma(d + 1.0)?);
                let bottom = (phi - 1.0) * c0 + 0.5 * c1;
                [top / denom, bottom / denom]
            } else {
                [
                    -(t as f64).ln() + digamma(1.0 - d)? + 1.0 / (1.0 - 2.0 * d),
                    -1.0 / (1.0 - phi),
                ]
            };
            Ok(ClosedForm { t_score: matvec2(&ai, v).to_vec(), t_intrinsic: tb.to_vec() })
        }
        ClosedFormCase::Ar1 => {
            shape(theta0.ar.len() == 1 && theta0.ma.is_empty(), "exactly one AR coefficient")?;
            let phi = theta0.ar[0];
            Ok(ClosedForm { t_score: vec![-phi - 1.0], t_intrinsic: vec![-2.0 * phi] })
        }
        ClosedFormCase::ArmaShort => arma_short(theta0),
    }
}

/// Short-memory ARMA with d held at zero, summing the b-sequences directly.
fn arma_short(theta0: &ThetaParams<f64>) -> Result<ClosedForm> {
    let arma = theta0.arma()?;
    let p = arma.p();
    if p == 0 {
        return Err(Error::Shape("ArmaShort needs at least one ARMA coefficient".into()));
    }
    let mut n = 256;
    let bh = loop {
        let bh = bh_coeffs(&expand_weights(&arma, n)?);
        let peak = bh.b1.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let tail = bh.b1.iter().map(|b| b[n - 50..].iter().fold(0.0f64, |m, v| m.max(v.abs()))).fold(0.0, f64::max);
        if tail <= 1e-16 * peak || n >= 1 << 15 {
            break bh;
        }
        n *= 2;
    };
    let b = &bh.b1;
    let b2 = &bh.b2;
    let sum = |x: &[f64], y: &[f64]| -> f64 { (1..n).map(|i| x[i] * y[i]).sum() };
    let a = nalgebra::DMatrix::from_fn(p, p, |j, l| sum(&b[j], &b[l]));
    let ai = a.clone().try_inverse().ok_or_else(|| Error::Domain("singular A".into()))?;
    let mut v = nalgebra::DVector::zeros(p);
    for m in 0..p {
        let f = nalgebra::DMatrix::from_fn(p, p, |j, l| sum(&b2[j][m], &b[l]));
        let g = nalgebra::DMatrix::from_fn(p, p, |j, l| {
            let mut acc = 0.0;
            for k in 1..n {
                let mut inner = 0.0;
                for s in 1..n - k {
                    inner += b[m][s] * b[j][s + k] + b[m][s + k] * b[j][s];
                }
                acc += inner * b[l][k];
            }
            acc
        });
        let c = nalgebra::DMatrix::from_fn(p, p, |j, l| {
            sum(&b[l], &b2[j][m]) + sum(&b[j], &b2[l][m]) + sum(&b[m], &b2[j][l])
        });
        let sandwich = &ai * c * &ai;
        v[m] = ai.component_mul(&(g + f)).sum() - 0.5 * sandwich.component_mul(&a).sum();
    }
    let tb = &ai * v;
    let ts = &ai * nalgebra::DVector::from_vec(arma.dlog_phi_at_one());
    Ok(ClosedForm { t_score: ts.iter().copied().collect(), t_intrinsic: tb.iter().copied().collect() })
}

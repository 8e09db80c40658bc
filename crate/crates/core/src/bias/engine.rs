//! Moment sums behind the bias expansions.
//!
//! Every derivative of the filtered residual at θ0 is a one-sided lag filter of
//! ε with coefficients a_i (σ = 1):
//!
//! - d: −1/i; dd: 2H_{i−1}/i
//! - φ_k: b_{k,i}; dφ_k: −h_{k,i}; φ_kφ_m: b2_{km,i}
//!
//! With these, A(j,l) = Σ a^j a^l, F_k(j,l) = Σ a^{kj} a^l,
//! C_k(j,l) = F_l(j,k) + F_j(k,l) + F_k(j,l) and
//! G_k(j,l) = P(a^k,a^j,a^l) + P(a^j,a^k,a^l), P(x,y,z) = Σ_{q,u≥1} x_q y_{u+q} z_u.
//! Infinite sums that involve the slowly decaying d-filters are re-indexed into
//! sums over b only, which converge geometrically.

use nalgebra::{DMatrix, DVector};

use crate::arma_poly::{bh_coeffs, expand_weights, ArmaParams, BhCoeffs};
use crate::error::{Error, Result};
use crate::frac_ops::FftConvolver;
use crate::special_fn::{ZETA2, ZETA3};

/// Block size of the tail check used by the adaptive truncation.
const TAIL_WINDOW: usize = 50;
const DIRECT_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    D,
    B(usize),
}

/// Parameter layout: d first when it is free, then the ARMA coefficients.
pub fn layout(p: usize, free_d: bool) -> Vec<Param> {
    let mut v = Vec::with_capacity(p + 1);
    if free_d {
        v.push(Param::D);
    }
    v.extend((0..p).map(Param::B));
    v
}

/// H_0..H_{n−1}.
pub fn harmonic(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n.max(1)];
    for k in 1..n {
        h[k] = h[k - 1] + 1.0 / k as f64;
    }
    h
}

/// Σ_{q≥1} x_q y_{q+u} for u = 0..n−1.
pub fn xcorr(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len().min(y.len());
    if n <= DIRECT_LIMIT {
        return (0..n)
            .map(|u| (1..n - u).map(|q| x[q] * y[q + u]).sum())
            .collect();
    }
    let mut xs = x[..n].to_vec();
    xs[0] = 0.0;
    let yr: Vec<f64> = (0..n).map(|i| y[n - 1 - i]).collect();
    let conv = FftConvolver::new(n).convolve(&xs, &yr);
    (0..n).map(|u| conv[n - 1 - u]).collect()
}

/// Full linear convolution over indices ≥ 1: r_m = Σ_{q+u=m, q,u≥1} x_q z_u.
pub fn full_conv(x: &[f64], z: &[f64]) -> Vec<f64> {
    let n = x.len().min(z.len());
    let m = 2 * n;
    if n <= DIRECT_LIMIT {
        let mut r = vec![0.0; m];
        for q in 1..n {
            if x[q] == 0.0 {
                continue;
            }
            for u in 1..n {
                r[q + u] += x[q] * z[u];
            }
        }
        return r;
    }
    let mut xs = vec![0.0; m];
    let mut zs = vec![0.0; m];
    xs[1..n].copy_from_slice(&x[1..n]);
    zs[1..n].copy_from_slice(&z[1..n]);
    FftConvolver::new(m).convolve(&xs, &zs)
}

/// b, b2 and h sequences at a fixed truncation.
#[derive(Debug, Clone)]
pub struct Sequences {
    pub n: usize,
    pub p: usize,
    pub bh: BhCoeffs<f64>,
    /// Largest |b| in the last `TAIL_WINDOW` retained indices relative to the largest |b|.
    pub tail: f64,
}

impl Sequences {
    pub fn at(arma: &ArmaParams<f64>, n: usize) -> Result<Self> {
        let table = expand_weights(arma, n)?;
        let bh = bh_coeffs(&table);
        let tail = relative_tail(&bh.b1);
        Ok(Self { n, p: arma.p(), bh, tail })
    }

    /// Doubles the truncation until the b-sequences are negligible.
    pub fn adaptive(arma: &ArmaParams<f64>, min_n: usize, max_n: usize, tol: f64) -> Result<Self> {
        let mut n = min_n.max(2 * TAIL_WINDOW);
        loop {
            let s = Self::at(arma, n)?;
            if s.tail < tol || n >= max_n {
                return Ok(s);
            }
            n = (2 * n).min(max_n);
        }
    }

    pub fn b(&self, k: usize) -> &[f64] {
        &self.bh.b1[k]
    }
}

fn relative_tail(b: &[Vec<f64>]) -> f64 {
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    for row in b {
        let n = row.len();
        for (i, v) in row.iter().enumerate() {
            peak = peak.max(v.abs());
            if i + TAIL_WINDOW >= n {
                tail = tail.max(v.abs());
            }
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        tail / peak
    }
}

/// Limiting matrices A, F_k, G_k, C_k.
#[derive(Debug, Clone)]
pub struct Moments {
    pub a: DMatrix<f64>,
    pub f: Vec<DMatrix<f64>>,
    pub g: Vec<DMatrix<f64>>,
    pub c: Vec<DMatrix<f64>>,
}

/// Sum engine over the limiting (infinite) sums.
pub struct Limiting<'a> {
    s: &'a Sequences,
    hs: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Second {
    DD,
    DB(usize),
    BB(usize, usize),
}

fn pair(x: Param, y: Param) -> Second {
    match (x, y) {
        (Param::D, Param::D) => Second::DD,
        (Param::D, Param::B(k)) | (Param::B(k), Param::D) => Second::DB(k),
        (Param::B(k), Param::B(m)) => Second::BB(k, m),
    }
}

impl<'a> Limiting<'a> {
    pub fn new(s: &'a Sequences) -> Self {
        Self { s, hs: harmonic(2 * s.n + 1) }
    }

    fn b(&self, k: usize) -> &[f64] {
        self.s.b(k)
    }

    /// Σ_i b_i w_i over the retained indices.
    fn weighted(&self, b: &[f64], w: impl Fn(usize) -> f64) -> f64 {
        b.iter().enumerate().skip(1).map(|(i, &v)| v * w(i)).sum()
    }

    pub fn a_entry(&self, j: Param, l: Param) -> f64 {
        match (j, l) {
            (Param::D, Param::D) => ZETA2,
            (Param::D, Param::B(k)) | (Param::B(k), Param::D) => -self.weighted(self.b(k), |i| 1.0 / i as f64),
            (Param::B(k), Param::B(m)) => dot1(self.b(k), self.b(m)),
        }
    }

    /// Σ_i a^{xy}_i a^z_i.
    fn s2(&self, xy: Second, z: Param) -> f64 {
        let hs = &self.hs;
        match (xy, z) {
            (Second::DD, Param::D) => -2.0 * ZETA3,
            (Second::DD, Param::B(l)) => self.weighted(self.b(l), |i| 2.0 * hs[i - 1] / i as f64),
            // Σ_i h_i / i = Σ_s b_s H_s / s
            (Second::DB(k), Param::D) => self.weighted(self.b(k), |s| hs[s] / s as f64),
            (Second::DB(k), Param::B(l)) => -dot1(&self.s.bh.hd[k], self.b(l)),
            (Second::BB(k, m), Param::D) => -self.weighted(&self.s.bh.b2[k][m], |i| 1.0 / i as f64),
            (Second::BB(k, m), Param::B(l)) => dot1(&self.s.bh.b2[k][m], self.b(l)),
        }
    }

    /// P(x,y,z) = Σ_{q,u≥1} x_q y_{u+q} z_u.
    fn p3(&self, x: Param, y: Param, z: Param) -> f64 {
        use Param::{B, D};
        let hs = &self.hs;
        match (x, y, z) {
            (D, D, D) => -2.0 * ZETA3,
            (D, D, B(l)) => self.weighted(self.b(l), |u| hs[u] / u as f64),
            (D, B(m), D) => self.weighted(self.b(m), |n| 2.0 * hs[n - 1] / n as f64),
            (B(k), D, D) => self.weighted(self.b(k), |q| hs[q] / q as f64),
            (D, B(m), B(l)) => {
                let r = xcorr(self.b(l), self.b(m));
                -r.iter().enumerate().skip(1).map(|(q, v)| v / q as f64).sum::<f64>()
            }
            (B(k), D, B(l)) => {
                let r = full_conv(self.b(k), self.b(l));
                -r.iter().enumerate().skip(2).map(|(n, v)| v / n as f64).sum::<f64>()
            }
            (B(k), B(m), D) => {
                let r = xcorr(self.b(k), self.b(m));
                -r.iter().enumerate().skip(1).map(|(u, v)| v / u as f64).sum::<f64>()
            }
            (B(k), B(m), B(l)) => {
                let r = xcorr(self.b(k), self.b(m));
                r.iter().zip(self.b(l)).skip(1).map(|(v, z)| v * z).sum()
            }
        }
    }

    pub fn moments(&self, params: &[Param]) -> Moments {
        build_moments(params, |j, l| self.a_entry(j, l), |xy, z| self.s2(xy, z), |x, y, z| self.p3(x, y, z))
    }
}

fn dot1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).skip(1).map(|(x, y)| x * y).sum()
}

fn build_moments(
    params: &[Param],
    a_entry: impl Fn(Param, Param) -> f64,
    s2: impl Fn(Second, Param) -> f64,
    p3: impl Fn(Param, Param, Param) -> f64,
) -> Moments {
    let n = params.len();
    let a = DMatrix::from_fn(n, n, |j, l| a_entry(params[j], params[l]));
    let mut f = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    for &k in params {
        f.push(DMatrix::from_fn(n, n, |j, l| s2(pair(k, params[j]), params[l])));
        g.push(DMatrix::from_fn(n, n, |j, l| {
            p3(k, params[j], params[l]) + p3(params[j], k, params[l])
        }));
        c.push(DMatrix::from_fn(n, n, |j, l| {
            let (pj, pl) = (params[j], params[l]);
            s2(pair(pj, pl), k) + s2(pair(k, pl), pj) + s2(pair(k, pj), pl)
        }));
    }
    Moments { a, f, g, c }
}

/// Finite-T analogues A_T, F_T, G_T, C_T with the exact (T−i)/T weights.
pub struct FiniteT {
    t: usize,
    ad: Vec<f64>,
    add: Vec<f64>,
    b: Vec<Vec<f64>>,
    mh: Vec<Vec<f64>>,
    b2: Vec<Vec<Vec<f64>>>,
}

impl FiniteT {
    pub fn new(arma: &ArmaParams<f64>, t: usize) -> Result<Self> {
        if t < 3 {
            return Err(Error::Domain(format!("finite-T bias sums need T >= 3, got {t}")));
        }
        let table = expand_weights(arma, t)?;
        let bh = bh_coeffs(&table);
        let hs = harmonic(t);
        let mut ad = vec![0.0; t];
        let mut add = vec![0.0; t];
        for i in 1..t {
            ad[i] = -1.0 / i as f64;
            add[i] = 2.0 * hs[i - 1] / i as f64;
        }
        let mh = bh.hd.iter().map(|h| h.iter().map(|v| -v).collect()).collect();
        Ok(Self { t, ad, add, b: bh.b1, mh, b2: bh.b2 })
    }

    fn first(&self, x: Param) -> &[f64] {
        match x {
            Param::D => &self.ad,
            Param::B(k) => &self.b[k],
        }
    }

    fn second(&self, xy: Second) -> &[f64] {
        match xy {
            Second::DD => &self.add,
            Second::DB(k) => &self.mh[k],
            Second::BB(k, m) => &self.b2[k][m],
        }
    }

    fn weighted_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        let t = self.t as f64;
        (1..self.t).map(|i| (t - i as f64) / t * x[i] * y[i]).sum()
    }

    /// T^{-1} Σ_{q,u≥1, q+u≤T−1} (T−q−u) x_q y_{u+q} z_u.
    pub fn p3_seq(t: usize, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let tf = t as f64;
        let mut acc = 0.0;
        for q in 1..t.saturating_sub(1) {
            if x[q] == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for u in 1..t - q {
                inner += (tf - (q + u) as f64) * y[u + q] * z[u];
            }
            acc += x[q] * inner;
        }
        acc / tf
    }

    pub fn moments(&self, params: &[Param]) -> Moments {
        build_moments(
            params,
            |j, l| self.weighted_dot(self.first(j), self.first(l)),
            |xy, z| self.weighted_dot(self.second(xy), self.first(z)),
            |x, y, z| Self::p3_seq(self.t, self.first(x), self.first(y), self.first(z)),
        )
    }
}

/// T·B = A^{-1}[ι′(A^{-1} ⊙ (G_k+F_k))ι]_k − ½ A^{-1}[ι′((A^{-1}C_kA^{-1}) ⊙ W)ι]_k,
/// with `a_inv` the inverse used throughout and `w` the matrix in the last Hadamard product.
pub fn assemble(a_inv: &DMatrix<f64>, w: &DMatrix<f64>, m: &Moments) -> DVector<f64> {
    let n = a_inv.nrows();
    let mut v = DVector::zeros(n);
    for k in 0..n {
        let gf = &m.g[k] + &m.f[k];
        let first = a_inv.component_mul(&gf).sum();
        let sandwich = a_inv * &m.c[k] * a_inv;
        let second = sandwich.component_mul(w).sum();
        v[k] = first - 0.5 * second;
    }
    a_inv * v
}

pub fn invert(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Domain("asymptotic variance matrix is singular".into()))
}

//! Nelder–Mead on a box, through a per-coordinate scaled logistic map onto R^n.

use std::cell::Cell;

/// Box-to-unconstrained transform θ = lo + (hi − lo) / (1 + e^{−y}).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxMap {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxMap {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn to_box(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&l, &h))| l + (h - l) / (1.0 + (-v).exp()))
            .collect()
    }

    /// Inverse map; points on or outside the box are pulled in by `1e-12` of the width.
    pub fn from_box(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&l, &h))| {
                let u = ((v - l) / (h - l)).clamp(1e-12, 1.0 - 1e-12);
                (u / (1.0 - u)).ln()
            })
            .collect()
    }

    /// Whether a coordinate sits within `rel` of the box width from an edge.
    pub fn at_boundary(&self, x: &[f64], rel: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .any(|(&v, (&l, &h))| v - l <= rel * (h - l) || h - v <= rel * (h - l))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmOptions {
    /// Initial simplex edge in the unconstrained coordinates.
    pub step: f64,
    /// Stop once the simplex diameter in box coordinates is below this...
    pub x_tol: f64,
    /// ...and the objective spread is below `f_tol · max(1, |f_best|)`.
    pub f_tol: f64,
    pub max_evals: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self { step: 0.5, x_tol: 1e-8, f_tol: 1e-12, max_evals: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    /// Minimizer in box coordinates.
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evals: usize,
    pub converged: bool,
}

/// Minimizes `f` over the box starting from `x0` (box coordinates). `f` may
/// return `f64::INFINITY` for infeasible points.
pub fn nelder_mead<F>(f: F, map: &BoxMap, x0: &[f64], opts: &NmOptions) -> NmResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = map.dim();
    let evals = Cell::new(0usize);
    let eval = |y: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(&map.to_box(y));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let y0 = map.from_box(x0);
    let mut simplex: Vec<Vec<f64>> = vec![y0.clone()];
    for i in 0..n {
        let mut y = y0.clone();
        y[i] += opts.step;
        simplex.push(y);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|y| eval(y)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();

        let spread = fv[n] - fv[0];
        let pts: Vec<Vec<f64>> = simplex.iter().map(|y| map.to_box(y)).collect();
        let diam = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if fv[0].is_finite() && diam < opts.x_tol && spread <= opts.f_tol * fv[0].abs().max(1.0) {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for y in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(y) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
        };
        let yr = along(alpha);
        let fr = eval(&yr);
        if fr < fv[0] {
            let ye = along(gamma);
            let fe = eval(&ye);
            if fe < fr {
                simplex[n] = ye;
                fv[n] = fe;
            } else {
                simplex[n] = yr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = yr;
            fv[n] = fr;
            continue;
        }
        let (yc, fc) = if fr < fv[n] {
            let yc = along(rho * alpha);
            let fc = eval(&yc);
            (yc, fc)
        } else {
            let yc = along(-rho);
            let fc = eval(&yc);
            (yc, fc)
        };
        if fc < fv[n].min(fr) {
            simplex[n] = yc;
            fv[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            let y: Vec<f64> = best.iter().zip(&simplex[i]).map(|(b, v)| b + sigma * (v - b)).collect();
            fv[i] = eval(&y);
            simplex[i] = y;
        }
    }
    NmResult { x: map.to_box(&simplex[0]), f: fv[0], n_evals: evals.get(), converged }
}

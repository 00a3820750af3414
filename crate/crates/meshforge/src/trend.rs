//! Least-squares polynomial trend fitting with coefficient statistics.
//!
//! Fits are reported in a caller-chosen centered basis `(x - center)^k`.
//! Internally the regressor is centered on the data mean and rescaled to
//! unit range, solved by Householder QR, and only the reported
//! coefficients are shifted into the requested basis; evaluation and
//! confidence bands always use the well-conditioned internal form.

#![allow(clippy::needless_range_loop)]

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PolyFit {
    pub degree: usize,
    pub center: f64,
    /// Coefficients of `(x - center)^k`, k = 0..=degree.
    pub coefficients: Vec<f64>,
    /// Residual variance SSR / (n - p); 0 for an exact interpolation.
    pub residual_variance: f64,
    pub n: usize,
    // internal representation: u = (x - mid) / scale
    mid: f64,
    scale: f64,
    scaled_coeffs: Vec<f64>,
    /// (X'X)^-1 in the scaled basis.
    xtx_inv: Vec<Vec<f64>>,
}

impl PolyFit {
    /// Fit `y = sum_k c_k (x - center)^k` by ordinary least squares.
    pub fn fit(points: &[(f64, f64)], degree: usize, center: f64) -> Result<PolyFit> {
        let p = degree + 1;
        let n = points.len();
        if n < p {
            return Err(Error::TooFewPoints { needed: p, got: n });
        }

        let mid = points.iter().map(|&(x, _)| x).sum::<f64>() / n as f64;
        let spread = points
            .iter()
            .map(|&(x, _)| (x - mid).abs())
            .fold(0.0_f64, f64::max);
        let scale = if spread > 0.0 { spread } else { 1.0 };

        // design matrix in the scaled basis u^k
        let mut a: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut y: Vec<f64> = Vec::with_capacity(n);
        for &(x, yi) in points {
            let u = (x - mid) / scale;
            let mut row = Vec::with_capacity(p);
            let mut pow = 1.0;
            for _ in 0..p {
                row.push(pow);
                pow *= u;
            }
            a.push(row);
            y.push(yi);
        }

        let (scaled_coeffs, r) = qr_solve(&mut a, &mut y, p)?;

        let mut ssr = 0.0;
        for &(x, yi) in points {
            let e = yi - eval_scaled(&scaled_coeffs, (x - mid) / scale);
            ssr += e * e;
        }
        let dof = n - p;
        let residual_variance = if dof > 0 { ssr / dof as f64 } else { 0.0 };

        let r_inv = invert_upper(&r);
        // (X'X)^-1 = R^-1 R^-T
        let mut xtx_inv = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..p {
                let mut s = 0.0;
                for k in 0..p {
                    s += r_inv[i][k] * r_inv[j][k];
                }
                xtx_inv[i][j] = s;
            }
        }

        // coefficients in (x - mid)^k, then shifted to (x - center)^k
        let mut internal = Vec::with_capacity(p);
        let mut sk = 1.0;
        for c in &scaled_coeffs {
            internal.push(c / sk);
            sk *= scale;
        }
        let coefficients = shift_basis(&internal, center - mid);

        Ok(PolyFit {
            degree,
            center,
            coefficients,
            residual_variance,
            n,
            mid,
            scale,
            scaled_coeffs,
            xtx_inv,
        })
    }

    /// Fitted value at `x`, evaluated in the internal basis.
    pub fn value(&self, x: f64) -> f64 {
        eval_scaled(&self.scaled_coeffs, (x - self.mid) / self.scale)
    }

    fn dof(&self) -> usize {
        self.n - (self.degree + 1)
    }

    /// Covariance matrix of the reported (center-basis) coefficients.
    fn coefficient_covariance(&self) -> Vec<Vec<f64>> {
        let p = self.degree + 1;
        // jacobian of the scaled -> reported transform:
        // c_internal_k = scaled_k / scale^k, b_j = sum_k C(k,j) d^{k-j} c_k
        let d = self.center - self.mid;
        let mut jac = vec![vec![0.0; p]; p];
        for j in 0..p {
            for k in j..p {
                jac[j][k] = binomial(k, j) * d.powi((k - j) as i32) / self.scale.powi(k as i32);
            }
        }
        let mut cov = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..p {
                let mut s = 0.0;
                for a in 0..p {
                    for b in 0..p {
                        s += jac[i][a] * self.xtx_inv[a][b] * jac[j][b];
                    }
                }
                cov[i][j] = self.residual_variance * s;
            }
        }
        cov
    }

    /// Standard error of reported coefficient `k`.
    pub fn coefficient_stderr(&self, k: usize) -> f64 {
        self.coefficient_covariance()[k][k].max(0.0).sqrt()
    }

    /// Two-sided p-value for coefficient `k` being zero (t-test, n-p dof).
    pub fn coefficient_p_value(&self, k: usize) -> f64 {
        let c = self.coefficients[k];
        let se = self.coefficient_stderr(k);
        let dof = self.dof();
        if dof == 0 || se == 0.0 {
            // an exact fit: any non-zero coefficient is unambiguous
            return if c.abs() > 0.0 { 0.0 } else { 1.0 };
        }
        let t = (c / se).abs();
        if !t.is_finite() {
            return 0.0;
        }
        let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("valid dof");
        2.0 * (1.0 - dist.cdf(t))
    }

    /// Slope statistics for a degree-1 fit: (slope, p-value).
    pub fn slope(&self) -> (f64, f64) {
        (self.coefficients[1], self.coefficient_p_value(1))
    }

    /// Mean-response confidence interval at `x` for the given coverage
    /// level (e.g. 0.99). Degenerate when there are no residual dof.
    pub fn confidence_band(&self, x: f64, level: f64) -> (f64, f64) {
        let fitted = self.value(x);
        let dof = self.dof();
        if dof == 0 || self.residual_variance == 0.0 {
            return (fitted, fitted);
        }
        let u = (x - self.mid) / self.scale;
        let p = self.degree + 1;
        let mut basis = Vec::with_capacity(p);
        let mut pow = 1.0;
        for _ in 0..p {
            basis.push(pow);
            pow *= u;
        }
        let mut quad = 0.0;
        for i in 0..p {
            for j in 0..p {
                quad += basis[i] * self.xtx_inv[i][j] * basis[j];
            }
        }
        let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("valid dof");
        let q = dist.inverse_cdf(0.5 + level / 2.0);
        let half = q * (self.residual_variance * quad.max(0.0)).sqrt();
        (fitted - half, fitted + half)
    }

    /// Sum of squared residuals.
    pub fn ssr(&self) -> f64 {
        self.residual_variance * self.dof() as f64
    }
}

fn eval_scaled(coeffs: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Rewrite `sum_k a_k t^k` as a polynomial in `(t + d)`: coefficients of
/// `p(s - d)` where `s = t + d`.
fn shift_basis(coeffs: &[f64], d: f64) -> Vec<f64> {
    let p = coeffs.len();
    let mut out = vec![0.0; p];
    for (j, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in j..p {
            s += coeffs[k] * binomial(k, j) * d.powi((k - j) as i32);
        }
        *o = s;
    }
    out
}

/// Householder QR: overwrites `a` (n x p) and `y`, returns the solution of
/// the least-squares system and the upper-triangular factor R (p x p).
fn qr_solve(a: &mut [Vec<f64>], y: &mut [f64], p: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    for k in 0..p {
        let mut norm = 0.0;
        for row in a.iter().take(n).skip(k) {
            norm += row[k] * row[k];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Err(Error::Config(
                "singular design matrix in polynomial fit (duplicate x values?)".to_string(),
            ));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k];
        v[0] = a[k][k] - alpha;
        for i in k + 1..n {
            v[i - k] = a[i][k];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv > 0.0 {
            for j in k..p {
                let mut dot = 0.0;
                for i in k..n {
                    dot += v[i - k] * a[i][j];
                }
                let f = 2.0 * dot / vtv;
                for i in k..n {
                    a[i][j] -= f * v[i - k];
                }
            }
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i - k] * y[i];
            }
            let f = 2.0 * dot / vtv;
            for i in k..n {
                y[i] -= f * v[i - k];
            }
        }
        a[k][k] = alpha;
        for row in a.iter_mut().take(n).skip(k + 1) {
            row[k] = 0.0;
        }
    }

    let mut r = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in i..p {
            r[i][j] = a[i][j];
        }
    }
    let mut coeffs = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for j in i + 1..p {
            s -= r[i][j] * coeffs[j];
        }
        coeffs[i] = s / r[i][i];
    }
    Ok((coeffs, r))
}

/// Invert an upper-triangular matrix by back substitution.
fn invert_upper(r: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = r.len();
    let mut inv = vec![vec![0.0; p]; p];
    for col in 0..p {
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for j in i + 1..=col {
                s -= r[i][j] * inv[j][col];
            }
            inv[i][col] = s / r[i][i];
        }
    }
    inv
}

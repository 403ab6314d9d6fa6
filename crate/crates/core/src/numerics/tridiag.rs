//! Symmetric tridiagonal eigenproblems.
//!
//! Selected eigenvalues come from Sturm-sequence bisection, eigenvectors from
//! inverse iteration with a pivoted tridiagonal solve, and the full spectrum
//! from the implicit QL algorithm (eigenvalues only).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("QL iteration did not converge for eigenvalue {index} after {iterations} sweeps")]
    Nonconvergence { index: usize, iterations: usize },
    #[error("requested {requested} eigenvalues from a matrix of order {order}")]
    OutOfRange { requested: usize, order: usize },
    #[error("inverse iteration failed to converge near {shift}")]
    InverseIteration { shift: f64 },
}

#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    /// `off[i]` couples rows `i` and `i + 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty matrix");
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length");
        SymTridiagonal { diag, off }
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.order();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * self.norm_bound()) * 1e-3;
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.order() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (zero based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> Result<f64, EigenError> {
        let n = self.order();
        if k >= n {
            return Err(EigenError::OutOfRange {
                requested: k + 1,
                order: n,
            });
        }
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * self.norm_bound() * n as f64 + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn lowest_eigenvalues(&self, m: usize) -> Result<Vec<f64>, EigenError> {
        if m > self.order() {
            return Err(EigenError::OutOfRange {
                requested: m,
                order: self.order(),
            });
        }
        (0..m).map(|k| self.eigenvalue(k)).collect()
    }

    /// Solves `(A - shift) x = rhs` by Gaussian elimination with partial
    /// pivoting (the `gtsv` scheme). Exactly singular pivots are nudged.
    fn shifted_solve(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.order();
        let tiny = f64::EPSILON * self.norm_bound().max(f64::MIN_POSITIVE);
        let mut d: Vec<f64> = self.diag.iter().map(|x| x - shift).collect();
        let mut dl = self.off.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du2[i];
                }
                du[i] = temp;
                let bi = b[i];
                b[i] = b[i + 1];
                b[i + 1] = bi - fact * b[i + 1];
            }
            dl[i] = 0.0;
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= du[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= du2[i] * x[i + 2];
            }
            x[i] = s / d[i];
        }
        x
    }

    /// Unit-norm eigenvector for an eigenvalue obtained from
    /// [`eigenvalue`](Self::eigenvalue), by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>, EigenError> {
        let n = self.order();
        let shift = lambda + 8.0 * f64::EPSILON * self.norm_bound();
        // deterministic start vector with no special symmetry
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 0.754_877_666).sin())
            .collect();
        normalize(&mut x);
        for _ in 0..8 {
            let mut y = self.shifted_solve(shift, &x);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(EigenError::InverseIteration { shift });
            }
            normalize(&mut y);
            let overlap: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            x = y;
            if (overlap.abs() - 1.0).abs() < 1e-14 {
                break;
            }
        }
        let residual = self.residual(lambda, &x);
        if residual > 1e-6 * self.norm_bound().max(1.0) {
            return Err(EigenError::InverseIteration { shift });
        }
        Ok(x)
    }

    /// `‖A x - λ x‖₂`.
    pub fn residual(&self, lambda: f64, x: &[f64]) -> f64 {
        let n = self.order();
        let mut sum = 0.0;
        for i in 0..n {
            let mut r = (self.diag[i] - lambda) * x[i];
            if i > 0 {
                r += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                r += self.off[i] * x[i + 1];
            }
            sum += r * r;
        }
        sum.sqrt()
    }

    /// All eigenvalues in ascending order, by implicit QL with Wilkinson
    /// shifts.
    pub fn all_eigenvalues(&self) -> Result<Vec<f64>, EigenError> {
        let n = self.order();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        for l in 0..n {
            let mut iterations = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iterations += 1;
                if iterations > 60 {
                    return Err(EigenError::Nonconvergence {
                        index: l,
                        iterations,
                    });
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let mut s = 1.0;
                let mut c = 1.0;
                let mut p = 0.0;
                let mut i = m;
                let mut deflated_early = false;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated_early = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if deflated_early {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok(d)
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
}

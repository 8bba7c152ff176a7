//! Covariance-aware binning of homodyne values and per-face flip probabilities.

use nalgebra::DMatrix;

use crate::error::{QecError, Result};

pub const MAX_BLOCK: usize = 12;
pub const RIDGE: f64 = 1e-9;
/// Shifts `|k| <= SERIES_K` are summed in the flip-probability series.
pub const SERIES_K: i64 = 6;

/// Inverse of a block covariance, regularised with a ridge if Cholesky fails.
#[derive(Debug, Clone)]
pub struct Precision {
    pub matrix: DMatrix<f64>,
    pub regularized: bool,
}

pub fn precision(sigma: &DMatrix<f64>) -> Result<Precision> {
    if !sigma.is_square() || sigma.nrows() == 0 {
        return Err(QecError::InvalidParameter("covariance must be square and nonempty".into()));
    }
    if let Some(ch) = sigma.clone().cholesky() {
        let inv = ch.inverse();
        if inv.iter().all(|v| v.is_finite()) {
            return Ok(Precision {
                matrix: inv,
                regularized: false,
            });
        }
    }
    let n = sigma.nrows();
    let ridged = sigma + DMatrix::identity(n, n) * RIDGE;
    let ch = ridged
        .cholesky()
        .ok_or_else(|| QecError::Model("covariance not positive semidefinite".into()))?;
    Ok(Precision {
        matrix: ch.inverse(),
        regularized: true,
    })
}

fn quad_form(p: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += p[(i, j)] * v[j];
        }
        acc += v[i] * row;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedBlock {
    pub q: Vec<i64>,
    pub regularized: bool,
}

/// Minimises `(q - x) Sigma^{-1} (q - x)^T` over `q_i in {floor x_i, ceil x_i}`.
///
/// Candidates are enumerated with bit `i` set meaning `ceil`; the first minimum
/// wins, so exact ties resolve toward the floor.
pub fn correlated_bin(x: &[f64], sigma: &DMatrix<f64>) -> Result<BinnedBlock> {
    let n = x.len();
    if n == 0 || n > MAX_BLOCK || sigma.nrows() != n {
        return Err(QecError::InvalidParameter(format!(
            "block of {n} values with {}x{} covariance",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(QecError::InvalidParameter("non-finite homodyne value".into()));
    }
    let prec = precision(sigma)?;
    Ok(BinnedBlock {
        q: bin_with(x, &prec.matrix),
        regularized: prec.regularized,
    })
}

pub(crate) fn bin_with(x: &[f64], prec: &DMatrix<f64>) -> Vec<i64> {
    let n = x.len();
    let floor: Vec<f64> = x.iter().map(|v| v.floor()).collect();
    let mut best = (f64::INFINITY, 0usize);
    let mut diff = vec![0.0; n];
    for mask in 0..(1usize << n) {
        for i in 0..n {
            let q = if mask >> i & 1 == 1 { x[i].ceil() } else { floor[i] };
            diff[i] = q - x[i];
        }
        let v = quad_form(prec, &diff);
        if v < best.0 {
            best = (v, mask);
        }
    }
    (0..n)
        .map(|i| {
            if best.1 >> i & 1 == 1 {
                x[i].ceil() as i64
            } else {
                floor[i] as i64
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipProbability {
    /// Odd-shift fraction capped at 1/2.
    pub p: f64,
    /// The uncapped series ratio. Correlations can push it above 1/2 when the
    /// conditional optimum of coordinate `i` lies one step outside the binning corner.
    pub raw: f64,
    /// Set when the series underflowed and `p = 1/2` was returned.
    pub underflow: bool,
}

/// Odd-shift mass over total mass for coordinate `i`, shifting `q_i` by `k` for `|k| <= K`.
pub fn flip_probability(i: usize, x: &[f64], q: &[i64], prec: &DMatrix<f64>) -> FlipProbability {
    let n = x.len();
    let mut diff: Vec<f64> = (0..n).map(|j| q[j] as f64 - x[j]).collect();
    let base = diff[i];
    // exponents relative to the k = 0 term keep the ratio finite
    let e0 = quad_form(prec, &diff);
    let (mut odd, mut total) = (0.0, 0.0);
    for k in -SERIES_K..=SERIES_K {
        diff[i] = base + k as f64;
        let w = (-0.5 * (quad_form(prec, &diff) - e0)).exp();
        total += w;
        if k.rem_euclid(2) == 1 {
            odd += w;
        }
    }
    if !(total > 0.0) || !total.is_finite() {
        return FlipProbability {
            p: 0.5,
            raw: 0.5,
            underflow: true,
        };
    }
    let raw = odd / total;
    FlipProbability {
        p: raw.min(0.5),
        raw,
        underflow: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_rounding() {
        let x = [0.2, 1.7, -0.4, 2.5, -1.5];
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4, 0.5]));
        let b = correlated_bin(&x, &s).unwrap();
        assert_eq!(b.q, vec![0, 2, 0, 2, -2]);
        assert!(!b.regularized);
    }

    #[test]
    fn singular_block_is_ridged() {
        let s = DMatrix::from_element(2, 2, 1.0);
        let b = correlated_bin(&[0.1, 0.2], &s).unwrap();
        assert!(b.regularized);
        assert!(correlated_bin(&[0.1; 13], &DMatrix::identity(13, 13)).is_err());
    }

    #[test]
    fn half_integer_is_maximally_uncertain() {
        let prec = DMatrix::from_element(1, 1, 1.0 / 0.3);
        let f = flip_probability(0, &[0.5], &[0], &prec);
        assert!((f.p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn on_grid_single_mode() {
        // x on an integer with sigma = 0.2: odd mass is dominated by k = +-1
        let sigma2: f64 = 0.04;
        let prec = DMatrix::from_element(1, 1, 1.0 / sigma2);
        let f = flip_probability(0, &[0.0], &[0], &prec);
        let lead = 2.0 * (-1.0 / (2.0 * sigma2)).exp();
        assert!(f.p < 1e-5);
        assert!((f.p - lead).abs() < 1e-3 * lead);
    }
}

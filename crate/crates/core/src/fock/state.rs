use nalgebra::DMatrix;
use num_complex::Complex64;

use super::operator::OperatorMatrix;
use crate::error::{Error, Result};

/// Photon indices at or above `cutoff - LEAKAGE_MARGIN` count as truncation leakage.
pub const LEAKAGE_MARGIN: usize = 5;
/// Leakage mass above which an operation flags its result.
pub const LEAKAGE_TOLERANCE: f64 = 1e-6;

/// Pure state over a truncated photon-number basis, one or two modes.
///
/// Two-mode amplitudes are stored row-major: index `n1 * cutoff + n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    amps: Vec<Complex64>,
    cutoff: usize,
    modes: usize,
}

impl FockState {
    pub fn new(amps: Vec<Complex64>, cutoff: usize, modes: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::InvalidDimension(format!("cutoff {cutoff} < 2")));
        }
        let expected = match modes {
            1 => cutoff,
            2 => cutoff * cutoff,
            m => return Err(Error::InvalidDimension(format!("{m} modes unsupported"))),
        };
        if amps.len() != expected {
            return Err(Error::InvalidDimension(format!(
                "{} amplitudes for {modes} mode(s) at cutoff {cutoff}",
                amps.len()
            )));
        }
        Ok(Self {
            amps,
            cutoff,
            modes,
        })
    }

    pub fn single(amps: Vec<Complex64>) -> Result<Self> {
        let cutoff = amps.len();
        Self::new(amps, cutoff, 1)
    }

    pub fn fock(n: usize, cutoff: usize) -> Result<Self> {
        if n >= cutoff {
            return Err(Error::InvalidDimension(format!(
                "photon number {n} outside cutoff {cutoff}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); cutoff];
        amps[n] = Complex64::new(1.0, 0.0);
        Self::new(amps, cutoff, 1)
    }

    pub fn vacuum(cutoff: usize) -> Result<Self> {
        Self::fock(0, cutoff)
    }

    pub fn product(a: &FockState, b: &FockState) -> Result<Self> {
        if a.modes != 1 || b.modes != 1 || a.cutoff != b.cutoff {
            return Err(Error::InvalidDimension(
                "product needs two single-mode states at equal cutoff".into(),
            ));
        }
        let d = a.cutoff;
        let mut amps = Vec::with_capacity(d * d);
        for x in &a.amps {
            for y in &b.amps {
                amps.push(x * y);
            }
        }
        Self::new(amps, d, 2)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm and returns the norm before rescaling.
    pub fn normalize(&mut self) -> Result<f64> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::ZeroProbability(norm));
        }
        let inv = 1.0 / norm;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(norm)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockState) -> Result<Complex64> {
        self.check_same_shape(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub(crate) fn check_same_shape(&self, other: &FockState) -> Result<()> {
        if self.cutoff != other.cutoff || self.modes != other.modes {
            return Err(Error::InvalidDimension(format!(
                "({} modes, cutoff {}) vs ({} modes, cutoff {})",
                self.modes, self.cutoff, other.modes, other.cutoff
            )));
        }
        Ok(())
    }

    pub(crate) fn require_single(&self) -> Result<()> {
        if self.modes != 1 {
            return Err(Error::InvalidDimension("single-mode state required".into()));
        }
        Ok(())
    }

    /// Probability mass on photon indices `>= cutoff - margin` in any mode.
    pub fn tail_mass(&self, margin: usize) -> f64 {
        let start = self.cutoff.saturating_sub(margin);
        match self.modes {
            1 => self.amps[start..].iter().map(|a| a.norm_sqr()).sum(),
            _ => {
                let d = self.cutoff;
                let mut mass = 0.0;
                for n1 in 0..d {
                    for n2 in 0..d {
                        if n1 >= start || n2 >= start {
                            mass += self.amps[n1 * d + n2].norm_sqr();
                        }
                    }
                }
                mass
            }
        }
    }

    /// True when the leakage mass exceeds [`LEAKAGE_TOLERANCE`].
    pub fn leaks(&self) -> bool {
        self.tail_mass(LEAKAGE_MARGIN) > LEAKAGE_TOLERANCE * self.norm_sqr()
    }

    /// Embeds a single-mode state into a larger cutoff (or truncates to a smaller one).
    pub fn resized(&self, cutoff: usize) -> Result<Self> {
        self.require_single()?;
        let mut amps = vec![Complex64::new(0.0, 0.0); cutoff];
        let n = cutoff.min(self.cutoff);
        amps[..n].copy_from_slice(&self.amps[..n]);
        Self::new(amps, cutoff, 1)
    }

    pub fn apply(&self, op: &OperatorMatrix) -> Result<Self> {
        self.require_single()?;
        if op.dimension() != self.cutoff {
            return Err(Error::InvalidDimension(format!(
                "operator dimension {} vs cutoff {}",
                op.dimension(),
                self.cutoff
            )));
        }
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        let out = op.matrix() * v;
        Self::new(out.as_slice().to_vec(), self.cutoff, 1)
    }

    pub fn mean_photon(&self) -> f64 {
        let total = match self.modes {
            1 => self
                .amps
                .iter()
                .enumerate()
                .map(|(n, a)| n as f64 * a.norm_sqr())
                .sum::<f64>(),
            _ => {
                let d = self.cutoff;
                let mut total = 0.0;
                for n1 in 0..d {
                    for n2 in 0..d {
                        total += (n1 + n2) as f64 * self.amps[n1 * d + n2].norm_sqr();
                    }
                }
                total
            }
        };
        total / self.norm_sqr()
    }

    /// `<(-1)^N>` over all modes.
    pub fn parity(&self) -> f64 {
        let d = self.cutoff;
        let sign = |idx: usize| -> f64 {
            let n = if self.modes == 1 { idx } else { idx / d + idx % d };
            if n % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| sign(i) * a.norm_sqr())
            .sum::<f64>()
            / self.norm_sqr()
    }

    /// Two-mode amplitudes as a `cutoff x cutoff` matrix (rows: mode 1).
    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.modes != 2 {
            return Err(Error::InvalidDimension("two-mode state required".into()));
        }
        Ok(DMatrix::from_row_slice(self.cutoff, self.cutoff, &self.amps))
    }

    pub fn from_matrix(m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidDimension("square amplitude matrix required".into()));
        }
        let d = m.nrows();
        let mut amps = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                amps.push(m[(i, j)]);
            }
        }
        Self::new(amps, d, 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(FockState::new(vec![Complex64::new(1.0, 0.0)], 1, 1).is_err());
        assert!(FockState::new(vec![Complex64::new(1.0, 0.0); 3], 2, 2).is_err());
        assert!(FockState::fock(4, 4).is_err());
    }

    #[test]
    fn normalize_and_zero() {
        let mut s = FockState::single(vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)])
            .unwrap();
        assert!((s.normalize().unwrap() - 5.0).abs() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let mut z = FockState::single(vec![Complex64::new(0.0, 0.0); 3]).unwrap();
        assert!(matches!(z.normalize(), Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn parity_of_fock_states() {
        assert_eq!(FockState::fock(1, 4).unwrap().parity(), -1.0);
        assert_eq!(FockState::vacuum(4).unwrap().parity(), 1.0);
        let p = FockState::product(
            &FockState::fock(1, 3).unwrap(),
            &FockState::fock(1, 3).unwrap(),
        )
        .unwrap();
        assert_eq!(p.parity(), 1.0);
        assert_eq!(p.mean_photon(), 2.0);
    }

    #[test]
    fn matrix_roundtrip() {
        let a = FockState::fock(1, 3).unwrap();
        let b = FockState::fock(2, 3).unwrap();
        let p = FockState::product(&a, &b).unwrap();
        let m = p.to_matrix().unwrap();
        assert_eq!(m[(1, 2)], Complex64::new(1.0, 0.0));
        assert_eq!(FockState::from_matrix(&m).unwrap(), p);
    }
}

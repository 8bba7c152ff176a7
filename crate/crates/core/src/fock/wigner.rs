use num_complex::Complex64;

use super::state::FockState;
use crate::error::Result;

/// Rectangular phase-space lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseGrid {
    pub fn square(half_width: f64, points: usize) -> Self {
        let axis: Vec<f64> = (0..points)
            .map(|i| -half_width + 2.0 * half_width * i as f64 / (points - 1) as f64)
            .collect();
        Self {
            q: axis.clone(),
            p: axis,
        }
    }

    fn cell_area(&self) -> f64 {
        let step = |v: &[f64]| {
            if v.len() > 1 {
                (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
            } else {
                1.0
            }
        };
        step(&self.q) * step(&self.p)
    }
}

#[derive(Debug, Clone)]
pub struct WignerMap {
    /// `values[i * p.len() + j] = W(q_i, p_j)`.
    pub values: Vec<f64>,
    pub integral: f64,
    /// Set when the state visibly extends past the grid edges.
    pub coverage_warning: bool,
}

/// Wigner function of a single-mode pure state, `W(0,0) = 1/pi` for vacuum.
///
/// Uses the Laguerre-polynomial recursion over the matrix elements
/// `W_{mn}(q, p)`, summed against `rho_mn = c_m c_n^*`.
pub fn wigner_map(state: &FockState, grid: &PhaseGrid) -> Result<WignerMap> {
    state.require_single()?;
    let c = state.amplitudes();
    let d = c.len();
    let norm = state.norm_sqr();
    let mut values = Vec::with_capacity(grid.q.len() * grid.p.len());
    let mut wlist = vec![Complex64::new(0.0, 0.0); d];
    for &q in &grid.q {
        for &p in &grid.p {
            let a = Complex64::new(q, p) * std::f64::consts::FRAC_1_SQRT_2;
            let rho = |m: usize, n: usize| c[m] * c[n].conj();
            wlist[0] = Complex64::new((-(q * q + p * p)).exp() / std::f64::consts::PI, 0.0);
            let mut w = rho(0, 0).re * wlist[0].re;
            for n in 1..d {
                wlist[n] = a * 2.0 * wlist[n - 1] / (n as f64).sqrt();
                w += 2.0 * (rho(0, n) * wlist[n]).re;
            }
            for m in 1..d {
                let sm = (m as f64).sqrt();
                let mut temp = wlist[m];
                wlist[m] = (a.conj() * 2.0 * temp - wlist[m - 1] * sm) / sm;
                w += (rho(m, m) * wlist[m]).re;
                for n in (m + 1)..d {
                    let next = (a * 2.0 * wlist[n - 1] - temp * sm) / (n as f64).sqrt();
                    temp = wlist[n];
                    wlist[n] = next;
                    w += 2.0 * (rho(m, n) * wlist[n]).re;
                }
            }
            values.push(w / norm);
        }
    }
    let integral = values.iter().sum::<f64>() * grid.cell_area();
    let coverage_warning = edge_mass(&values, grid) > 1e-4 || (integral - 1.0).abs() > 1e-3;
    Ok(WignerMap {
        values,
        integral,
        coverage_warning,
    })
}

fn edge_mass(values: &[f64], grid: &PhaseGrid) -> f64 {
    let (nq, np) = (grid.q.len(), grid.p.len());
    let mut edge = 0.0;
    for i in 0..nq {
        for j in 0..np {
            if i == 0 || j == 0 || i + 1 == nq || j + 1 == np {
                edge += values[i * np + j].abs();
            }
        }
    }
    edge * grid.cell_area()
}

use num_complex::Complex64;

/// `psi_0(x) .. psi_{count-1}(x)`: normalized Hermite functions in the `q` representation.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if count > 1 {
        out.push(std::f64::consts::SQRT_2 * x * out[0]);
    }
    for n in 2..count {
        let nf = n as f64;
        let v = (2.0 / nf).sqrt() * x * out[n - 1] - ((nf - 1.0) / nf).sqrt() * out[n - 2];
        out.push(v);
    }
    out
}

/// `psi_n(x)` for a single index.
pub fn quadrature_wavefunction(n: usize, x: f64) -> f64 {
    hermite_functions(x, n + 1)[n]
}

/// Uniform position grid with the Fock basis functions tabulated on it.
///
/// Integrals are plain Riemann sums; the integrands used here are smooth and
/// decay like Gaussians, so the sum converges much faster than its nominal order.
#[derive(Debug, Clone)]
pub struct PositionGrid {
    xs: Vec<f64>,
    dx: f64,
    cutoff: usize,
    // basis[n * len + i] = psi_n(xs[i])
    basis: Vec<f64>,
}

pub const DEFAULT_GRID_STEP: f64 = 0.05;

impl PositionGrid {
    /// Grid wide enough for every basis function below `cutoff`.
    pub fn for_cutoff(cutoff: usize) -> Self {
        let half = (2.0 * cutoff as f64 + 1.0).sqrt() + 10.0;
        Self::new(cutoff, half, DEFAULT_GRID_STEP)
    }

    pub fn new(cutoff: usize, half_width: f64, dx: f64) -> Self {
        let steps = (half_width / dx).ceil() as i64;
        let xs: Vec<f64> = (-steps..=steps).map(|i| i as f64 * dx).collect();
        let len = xs.len();
        let mut basis = vec![0.0; cutoff * len];
        for (i, &x) in xs.iter().enumerate() {
            for (n, v) in hermite_functions(x, cutoff).into_iter().enumerate() {
                basis[n * len + i] = v;
            }
        }
        Self {
            xs,
            dx,
            cutoff,
            basis,
        }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn basis_row(&self, n: usize) -> &[f64] {
        let len = self.xs.len();
        &self.basis[n * len..(n + 1) * len]
    }

    /// Fock coefficients `<n|f>` of a real wavefunction sampled on the grid.
    pub fn project(&self, samples: &[f64]) -> Vec<f64> {
        (0..self.cutoff)
            .map(|n| {
                self.basis_row(n)
                    .iter()
                    .zip(samples)
                    .map(|(b, f)| b * f)
                    .sum::<f64>()
                    * self.dx
            })
            .collect()
    }

    /// `q`-representation wavefunction of single-mode amplitudes.
    pub fn wavefunction(&self, amps: &[Complex64]) -> Vec<Complex64> {
        self.synthesize(amps, |_| Complex64::new(1.0, 0.0))
    }

    /// `p`-representation wavefunction: `sum_n c_n (-i)^n psi_n(p)`.
    pub fn momentum_wavefunction(&self, amps: &[Complex64]) -> Vec<Complex64> {
        const PHASES: [Complex64; 4] = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        self.synthesize(amps, |n| PHASES[n % 4])
    }

    fn synthesize(&self, amps: &[Complex64], phase: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
        let len = self.xs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (n, c) in amps.iter().enumerate().take(self.cutoff) {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let w = c * phase(n);
            for (o, b) in out.iter_mut().zip(self.basis_row(n)) {
                *o += w * b;
            }
        }
        out
    }

    /// `int |phi(x)|^2 e^{iux} dx`.
    pub fn characteristic(&self, density: &[f64], u: f64) -> Complex64 {
        self.xs
            .iter()
            .zip(density)
            .map(|(&x, &d)| Complex64::from_polar(d, u * x))
            .sum::<Complex64>()
            * self.dx
    }
}

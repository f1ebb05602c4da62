use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to 1e-12 and eigenvalues ≥ −1e-10.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Shape(format!(
                "density matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let d = entries.nrows();
        for i in 0..d {
            for j in 0..d {
                let gap = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if gap > 1e-12 {
                    return Err(Error::Precondition(format!("density matrix is not Hermitian at ({i}, {j}): {gap:e}")));
                }
            }
        }
        let tr = entries.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::Precondition(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = entries.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::Precondition(format!("density matrix has negative eigenvalue {min:e}")));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().cloned().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Text export: dimension, row-major real and imaginary parts, fidelity and target label.
    pub fn to_text(&self, fidelity: f64, target_label: &str) -> String {
        let d = self.dim();
        let mut out = format!("dim = {d}\n");
        for (name, part) in [("real", 0), ("imag", 1)] {
            let _ = writeln!(out, "{name} =");
            for i in 0..d {
                let row: Vec<String> = (0..d)
                    .map(|j| {
                        let z = self.entries[(i, j)];
                        format!("{:.17e}", if part == 0 { z.re } else { z.im })
                    })
                    .collect();
                let _ = writeln!(out, "  {}", row.join(" "));
            }
        }
        let _ = writeln!(out, "fidelity = {fidelity:.17e}");
        let _ = writeln!(out, "target = {target_label}");
        out
    }
}

/// `ρ = (1−p)|ψ⟩⟨ψ| + p I/4` on the basis `{|a a⟩, |a b⟩, |b a⟩, |b b⟩}`
/// with `|ψ⟩ ∝ c1|a b⟩ + c2|b a⟩`.
pub fn bell_density_matrix(c1: Complex64, c2: Complex64, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Precondition(format!("noise fraction must lie in [0, 1], got {p}")));
    }
    let norm = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateState("both amplitudes vanish".into()));
    }
    let psi = [Complex64::new(0.0, 0.0), c1 / norm, c2 / norm, Complex64::new(0.0, 0.0)];
    let m = DMatrix::from_fn(4, 4, |i, j| {
        let pure = psi[i] * psi[j].conj() * (1.0 - p);
        if i == j {
            pure + Complex64::new(0.25 * p, 0.0)
        } else {
            pure
        }
    });
    DensityMatrix::new(m)
}

/// `(|a b⟩ + |b a⟩)/√2` on the basis of [`bell_density_matrix`].
pub fn bell_target() -> Vec<Complex64> {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    vec![z, h, h, z]
}

/// `⟨ψ|ρ|ψ⟩ / ⟨ψ|ψ⟩`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, target: &[Complex64]) -> Result<f64> {
    let d = rho.dim();
    if target.len() != d {
        return Err(Error::Shape(format!("target has {} components, density matrix has dimension {d}", target.len())));
    }
    let nn: f64 = target.iter().map(|z| z.norm_sqr()).sum();
    if (nn - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("target state has squared norm {nn}, expected 1")));
    }
    let mut f = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            f += target[i].conj() * rho.entries[(i, j)] * target[j];
        }
    }
    if f.im.abs() > 1e-12 {
        return Err(Error::Precondition(format!("fidelity has imaginary part {:e}", f.im)));
    }
    Ok((f.re / nn).clamp(0.0, 1.0))
}

//! Complex fields sampled on centered square grids, thin optical elements,
//! lens Fourier transforms and radial intensity analysis.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::modes::ModeSpec;

/// Square sampling grid with `n` points per side and pitch `dx`.
/// Index `(n/2, n/2)` sits at the origin; rows run along y, columns along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    dx: f64,
}

impl GridSpec {
    pub fn new(n: usize, dx: f64) -> Result<Self> {
        if n < 64 || !n.is_power_of_two() {
            return Err(Error::Geometry(format!("grid size must be a power of two >= 64, got {n}")));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::Geometry(format!("grid pitch must be positive, got {dx}")));
        }
        Ok(Self { n, dx })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Coordinate of index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.dx
    }

    /// Distance from the origin to the nearest grid edge, `n dx / 2`.
    pub fn half_width(&self) -> f64 {
        (self.n / 2) as f64 * self.dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    RealSpace,
    KSpace,
}

impl Plane {
    pub fn name(self) -> &'static str {
        match self {
            Plane::RealSpace => "real-space",
            Plane::KSpace => "k-space",
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Complex amplitudes on a [`GridSpec`]; `Σ|E|² pitch²` is the power.
///
/// In k-space the grid pitch is the wavenumber step in rad/m.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: GridSpec,
    values: Array2<Complex64>,
    plane: Plane,
    wavelength: Option<f64>,
}

impl SampledField {
    pub fn new(grid: GridSpec, values: Array2<Complex64>, plane: Plane) -> Result<Self> {
        if values.dim() != (grid.n, grid.n) {
            return Err(Error::Shape(format!(
                "values are {:?}, grid expects {}x{}",
                values.dim(),
                grid.n,
                grid.n
            )));
        }
        Ok(Self { grid, values, plane, wavelength: None })
    }

    /// Samples `f(x, y)` on the grid.
    pub fn from_fn<F>(grid: GridSpec, plane: Plane, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let mut values = Array2::zeros((grid.n, grid.n));
        Zip::indexed(&mut values).par_for_each(|(i, j), v| *v = f(grid.coord(j), grid.coord(i)));
        Self { grid, values, plane, wavelength: None }
    }

    pub fn with_wavelength(mut self, wavelength: f64) -> Self {
        self.wavelength = Some(wavelength);
        self
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn plane(&self) -> Plane {
        self.plane
    }

    pub fn wavelength(&self) -> Option<f64> {
        self.wavelength
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    /// Wavenumber step in rad/m, for k-space fields.
    pub fn pitch_k(&self) -> Option<f64> {
        (self.plane == Plane::KSpace).then_some(self.grid.dx)
    }

    pub fn power(&self) -> f64 {
        let rows: Vec<f64> = self
            .values
            .axis_iter(Axis(0))
            .into_par_iter()
            .map(|row| row.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .collect();
        rows.iter().sum::<f64>() * self.grid.dx * self.grid.dx
    }

    pub fn intensity(&self) -> Array2<f64> {
        self.values.mapv(|v| v.norm_sqr())
    }

    /// Bilinear interpolation at `(x, y)`; `None` outside the sampled square.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<Complex64> {
        let n = self.grid.n;
        let h = (n / 2) as f64;
        let u = x / self.grid.dx + h;
        let v = y / self.grid.dx + h;
        let top = (n - 1) as f64;
        if !(u >= 0.0 && v >= 0.0 && u <= top && v <= top) {
            return None;
        }
        let j = (u.floor() as usize).min(n - 2);
        let i = (v.floor() as usize).min(n - 2);
        let fu = u - j as f64;
        let fv = v - i as f64;
        let a = &self.values;
        Some(
            a[[i, j]] * ((1.0 - fu) * (1.0 - fv))
                + a[[i, j + 1]] * (fu * (1.0 - fv))
                + a[[i + 1, j]] * ((1.0 - fu) * fv)
                + a[[i + 1, j + 1]] * (fu * fv),
        )
    }

    fn require(&self, plane: Plane) -> Result<()> {
        if self.plane != plane {
            return Err(Error::PlaneMismatch { expected: plane.name(), found: self.plane.name() });
        }
        Ok(())
    }

    fn map_phase<F: Fn(f64, f64) -> f64 + Sync>(&self, phase: F) -> Self {
        let g = self.grid;
        let mut values = self.values.clone();
        Zip::indexed(&mut values)
            .par_for_each(|(i, j), v| *v *= Complex64::from_polar(1.0, phase(g.coord(j), g.coord(i))));
        Self { values, ..self.clone() }
    }
}

/// Renders `spec` on `grid` in real space.
pub fn sample(spec: &ModeSpec, grid: GridSpec) -> Result<SampledField> {
    let ring = spec.characteristic_radius();
    let limit = grid.n as f64 * grid.dx / 4.0;
    if ring > limit {
        let dx_needed = 4.0 * ring / grid.n as f64;
        let n_needed = (4.0 * ring / grid.dx).ceil().max(64.0) as usize;
        return Err(Error::Geometry(format!(
            "mode radius {ring:.4e} m exceeds n*dx/4 = {limit:.4e} m; use dx >= {dx_needed:.4e} m or n >= {}",
            n_needed.next_power_of_two()
        )));
    }
    // Radii repeat under x ↔ y and sign flips, so each is evaluated once.
    let h = grid.n / 2;
    let radial: Vec<Vec<Complex64>> = (0..=h)
        .into_par_iter()
        .map(|a| (0..=a).map(|b| spec.radial((a as f64 * grid.dx).hypot(b as f64 * grid.dx))).collect())
        .collect();
    let ell = spec.ell();
    let mut values = Array2::zeros((grid.n, grid.n));
    Zip::indexed(&mut values).par_for_each(|(i, j), v| {
        let (a, b) = (i.abs_diff(h), j.abs_diff(h));
        let r = radial[a.max(b)][a.min(b)];
        *v = if ell == 0 {
            r
        } else {
            r * Complex64::from_polar(1.0, ell as f64 * grid.coord(i).atan2(grid.coord(j)))
        };
    });
    Ok(SampledField { grid, values, plane: Plane::RealSpace, wavelength: None })
}

/// Shared FFT plan for an n-point transform.
fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft(n, dir)
}

/// Centered 2-D DFT `Σ a[m] e^{∓2πi (j-n/2)(m-n/2)/n}` (sign per `dir`), unscaled.
fn centered_dft2(values: &Array2<Complex64>, dir: FftDirection) -> Array2<Complex64> {
    let n = values.nrows();
    let h = n / 2;
    let fft = plan(n, dir);
    let mut work = Array2::zeros((n, n));
    // ifftshift: move the origin sample to index 0.
    for i in 0..n {
        for j in 0..n {
            work[[i, j]] = values[[(i + h) % n, (j + h) % n]];
        }
    }
    let rows_pass = |a: &mut Array2<Complex64>| {
        a.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
            let slice = row.as_slice_mut().expect("standard layout");
            fft.process(slice);
        });
    };
    rows_pass(&mut work);
    let mut t = work.t().as_standard_layout().into_owned();
    rows_pass(&mut t);
    let work = t.t().as_standard_layout().into_owned();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[(i + h) % n, (j + h) % n]] = work[[i, j]];
        }
    }
    out
}

/// Field in the back focal plane of a thin lens of focal length `f`.
///
/// `E_f(X) = 1/(iλf) ∫ E(x) e^{+i k X·x / f} d²x`, sampled with pitch
/// `λf/(n dx)`. The transform is unitary; applying it twice returns
/// `-E(-x, -y)`.
pub fn lens_fourier(field: &SampledField, f: f64, wavelength: f64) -> Result<SampledField> {
    field.require(Plane::RealSpace)?;
    if !(f > 0.0 && wavelength > 0.0) {
        return Err(Error::Domain("focal length and wavelength must be positive".into()));
    }
    let g = field.grid;
    let scale = Complex64::new(0.0, -g.dx * g.dx / (wavelength * f));
    let mut values = centered_dft2(&field.values, FftDirection::Inverse);
    values.par_mapv_inplace(|v| v * scale);
    let out_grid = GridSpec::new(g.n, wavelength * f / (g.n as f64 * g.dx))?;
    Ok(SampledField { grid: out_grid, values, plane: Plane::RealSpace, wavelength: Some(wavelength) })
}

/// Transverse angular spectrum `E(k) = (1/2π) ∫ E(x) e^{-i k·x} d²x`,
/// sampled with pitch `2π/(n dx)` rad/m. Unitary.
pub fn angular_spectrum(field: &SampledField) -> Result<SampledField> {
    field.require(Plane::RealSpace)?;
    let g = field.grid;
    let scale = g.dx * g.dx / (2.0 * PI);
    let mut values = centered_dft2(&field.values, FftDirection::Forward);
    values.par_mapv_inplace(|v| v * scale);
    let out_grid = GridSpec::new(g.n, 2.0 * PI / (g.n as f64 * g.dx))?;
    Ok(SampledField { grid: out_grid, values, plane: Plane::KSpace, wavelength: field.wavelength })
}

/// Multiplies by `e^{iℓθ}` (spiral phase plate).
pub fn apply_spiral_phase(field: &SampledField, ell: i32) -> Result<SampledField> {
    field.require(Plane::RealSpace)?;
    if ell == 0 {
        return Ok(field.clone());
    }
    Ok(field.map_phase(|x, y| ell as f64 * y.atan2(x)))
}

/// Multiplies by `e^{-i k_r r}` (axicon).
pub fn apply_axicon(field: &SampledField, k_r: f64) -> Result<SampledField> {
    field.require(Plane::RealSpace)?;
    if !(k_r >= 0.0 && k_r.is_finite()) {
        return Err(Error::Domain(format!("k_r must be non-negative, got {k_r}")));
    }
    if k_r * field.grid.dx >= PI {
        return Err(Error::Aliasing(format!(
            "axicon phase step k_r*dx = {:.3} rad exceeds pi; reduce dx below {:.4e} m",
            k_r * field.grid.dx,
            PI / k_r
        )));
    }
    if k_r == 0.0 {
        return Ok(field.clone());
    }
    Ok(field.map_phase(|x, y| -k_r * x.hypot(y)))
}

/// Multiplies by `e^{iφ(x,y)}` for a phase map on the same grid.
pub fn apply_phase_mask(field: &SampledField, phase: &Array2<f64>) -> Result<SampledField> {
    field.require(Plane::RealSpace)?;
    if phase.dim() != field.values.dim() {
        return Err(Error::Shape(format!(
            "phase mask is {:?}, field is {:?}",
            phase.dim(),
            field.values.dim()
        )));
    }
    let mut values = field.values.clone();
    Zip::from(&mut values).and(phase).par_for_each(|v, &p| *v *= Complex64::from_polar(1.0, p));
    Ok(SampledField { values, ..field.clone() })
}

/// Azimuthally averaged intensity. Only bins that received samples are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl RadialProfile {
    /// Index of the largest value.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.intensity.iter().enumerate() {
            if *v > self.intensity[best] {
                best = i;
            }
        }
        best
    }

    /// Full width at half maximum around the global peak, by linear interpolation.
    pub fn fwhm(&self) -> Result<f64> {
        let k = self.argmax();
        let half = 0.5 * self.intensity[k];
        let cross = |a: usize, b: usize| {
            let (ra, rb) = (self.radii[a], self.radii[b]);
            let (ia, ib) = (self.intensity[a], self.intensity[b]);
            ra + (half - ia) * (rb - ra) / (ib - ia)
        };
        let inner = (0..k).rev().find(|&i| self.intensity[i] < half).map(|i| cross(i, i + 1));
        let outer = (k + 1..self.radii.len()).find(|&i| self.intensity[i] < half).map(|i| cross(i - 1, i));
        match (inner, outer) {
            (Some(a), Some(b)) => Ok(b - a),
            (None, Some(b)) => Ok(b),
            _ => Err(Error::Shape("profile does not fall to half maximum inside the grid".into())),
        }
    }

    /// Peak radius refined by a parabola through the argmax bin and its neighbours.
    pub fn peak_radius(&self) -> Result<f64> {
        let k = self.argmax();
        if k == 0 {
            return Err(Error::Shape("intensity peaks on axis; the profile is not annular".into()));
        }
        if k + 1 >= self.radii.len() {
            return Ok(self.radii[k]);
        }
        let (x0, x1, x2) = (self.radii[k - 1], self.radii[k], self.radii[k + 1]);
        let (y0, y1, y2) = (self.intensity[k - 1], self.intensity[k], self.intensity[k + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let curv = (d12 - d01) / (x2 - x0);
        if curv >= 0.0 {
            return Ok(x1);
        }
        // Vertex of the interpolating parabola.
        let r = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
        Ok(r.clamp(x0, x2))
    }

    /// RMS difference after scaling each profile to unit peak, over bins where
    /// either profile exceeds 1% of its peak. Both profiles must share radii.
    pub fn rms_difference(&self, other: &RadialProfile) -> Result<f64> {
        if self.radii != other.radii {
            return Err(Error::Shape("profiles are binned differently".into()));
        }
        let pa = self.intensity.iter().cloned().fold(0.0, f64::max);
        let pb = other.intensity.iter().cloned().fold(0.0, f64::max);
        if !(pa > 0.0 && pb > 0.0) {
            return Err(Error::Shape("cannot compare an empty profile".into()));
        }
        let mut acc = 0.0;
        let mut count = 0usize;
        for (a, b) in self.intensity.iter().zip(&other.intensity) {
            let (a, b) = (a / pa, b / pb);
            if a > 0.01 || b > 0.01 {
                acc += (a - b) * (a - b);
                count += 1;
            }
        }
        Ok((acc / count as f64).sqrt())
    }
}

/// Radial profile of a real intensity map on `grid`, with `n_bins` bins over
/// the inscribed disc of radius `n dx / 2`.
pub fn radial_profile_of(intensity: &Array2<f64>, grid: GridSpec, n_bins: usize) -> Result<RadialProfile> {
    if n_bins < 64 {
        return Err(Error::Precondition(format!("need at least 64 radial bins, got {n_bins}")));
    }
    if intensity.dim() != (grid.n, grid.n) {
        return Err(Error::Shape("intensity map does not match grid".into()));
    }
    let r_max = grid.half_width();
    let width = r_max / n_bins as f64;
    let mut sum = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for ((i, j), v) in intensity.indexed_iter() {
        let r = grid.coord(j).hypot(grid.coord(i));
        let b = (r / width) as usize;
        if b < n_bins {
            sum[b] += v;
            count[b] += 1;
        }
    }
    let mut radii = Vec::with_capacity(n_bins);
    let mut mean = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        if count[b] > 0 {
            radii.push((b as f64 + 0.5) * width);
            mean.push(sum[b] / count[b] as f64);
        }
    }
    Ok(RadialProfile { radii, intensity: mean })
}

/// Azimuthally averaged `|E|²` of `field`.
pub fn radial_profile(field: &SampledField, n_bins: usize) -> Result<RadialProfile> {
    radial_profile_of(&field.intensity(), field.grid, n_bins)
}

/// Radius of the intensity ring, refined to sub-bin accuracy from a 512-bin profile.
pub fn ring_radius(field: &SampledField) -> Result<f64> {
    radial_profile(field, 512)?.peak_radius()
}

/// Binary 16-bit graymap, intensity scaled linearly from 0 to its maximum.
pub fn encode_pgm16(intensity: &Array2<f64>) -> Vec<u8> {
    let (rows, cols) = intensity.dim();
    let max = intensity.iter().cloned().fold(0.0, f64::max);
    let mut out = format!("P5\n{cols} {rows}\n65535\n").into_bytes();
    out.reserve(rows * cols * 2);
    for v in intensity.iter() {
        let q = if max > 0.0 { (v / max * 65535.0).round().clamp(0.0, 65535.0) as u16 } else { 0 };
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

/// Plain-text grid description accompanying an exported image.
pub fn sidecar_text(field: &SampledField) -> String {
    let mut s = format!("n = {}\ndx = {}\nplane = {}\n", field.grid.n, field.grid.dx, field.plane);
    if let Some(l) = field.wavelength {
        s.push_str(&format!("lambda = {l}\n"));
    }
    s
}

/// Writes `<stem>.pgm` and `<stem>.txt` for the intensity of `field`.
pub fn write_intensity(field: &SampledField, pgm_path: &Path) -> Result<()> {
    std::fs::File::create(pgm_path)?.write_all(&encode_pgm16(&field.intensity()))?;
    std::fs::write(pgm_path.with_extension("txt"), sidecar_text(field))?;
    Ok(())
}

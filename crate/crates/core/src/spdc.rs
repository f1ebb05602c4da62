//! Biphoton mode function `Φ(k_s⊥, k_i⊥) = E_p(k_s⊥ + k_i⊥) L sinc(ΔkL/2) e^{iΔkL/2}`
//! and the traced single-photon angular spectrum.

use std::f64::consts::{FRAC_1_PI, PI};
use std::ops::{Add, Mul, Neg, Sub};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fieldgrid::{angular_spectrum, radial_profile_of, sample, GridSpec, Plane, RadialProfile, SampledField};
use crate::modes::ModeSpec;
use crate::specialfn::sinc;

/// Transverse wavevector in rad/m.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KPerp {
    pub x: f64,
    pub y: f64,
}

impl KPerp {
    pub const ZERO: KPerp = KPerp { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Self { x: r * theta.cos(), y: r * theta.sin() }
    }

    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for KPerp {
    type Output = KPerp;
    fn add(self, o: KPerp) -> KPerp {
        KPerp::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for KPerp {
    type Output = KPerp;
    fn sub(self, o: KPerp) -> KPerp {
        KPerp::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for KPerp {
    type Output = KPerp;
    fn neg(self) -> KPerp {
        KPerp::new(-self.x, -self.y)
    }
}

impl Mul<f64> for KPerp {
    type Output = KPerp;
    fn mul(self, s: f64) -> KPerp {
        KPerp::new(self.x * s, self.y * s)
    }
}

/// Longitudinal wavenumber `√(k² − |k⊥|²)` of a propagating wave.
pub fn kz(k: f64, k_perp: KPerp) -> Result<f64> {
    let t = k_perp.norm_sqr();
    if !(t < k * k) {
        return Err(Error::Domain(format!(
            "transverse wavenumber {:.4e} rad/m is evanescent for k = {k:.4e} rad/m",
            t.sqrt()
        )));
    }
    Ok((k * k - t).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MismatchModel {
    /// `kz_p(k_s+k_i) − kz_s(k_s) − kz_i(k_i) − 2π/Λ`.
    Exact,
    /// `(k_p − k_s − k_i) + |k_s − k_i|²/(2k_p) − 2π/Λ`.
    Paraxial,
}

/// Nonlinear crystal. Indices are plain inputs; no dispersion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalSpec {
    pub length: f64,
    pub n_p: f64,
    pub n_s: f64,
    pub n_i: f64,
    pub poling_period: Option<f64>,
    pub mismatch: MismatchModel,
}

impl CrystalSpec {
    pub fn new(
        length: f64,
        n_p: f64,
        n_s: f64,
        n_i: f64,
        poling_period: Option<f64>,
        mismatch: MismatchModel,
    ) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidSpec(format!("crystal length must be positive, got {length}")));
        }
        for (name, n) in [("n_p", n_p), ("n_s", n_s), ("n_i", n_i)] {
            if !(n.is_finite() && n >= 1.0) {
                return Err(Error::InvalidSpec(format!("{name} must be at least 1, got {n}")));
            }
        }
        if let Some(p) = poling_period {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidSpec(format!("poling period must be positive, got {p}")));
            }
        }
        Ok(Self { length, n_p, n_s, n_i, poling_period, mismatch })
    }

    /// Grating wavenumber `2π/Λ`, zero for an unpoled crystal.
    pub fn grating_wavenumber(&self) -> f64 {
        self.poling_period.map_or(0.0, |p| 2.0 * PI / p)
    }

    /// Copy with the poling period that cancels the collinear mismatch.
    pub fn with_solved_poling(mut self, wl: &WavelengthTriple) -> Result<Self> {
        self.poling_period = Some(solve_poling_period(&self, wl)?);
        Ok(self)
    }

    pub fn with_mismatch(mut self, model: MismatchModel) -> Self {
        self.mismatch = model;
        self
    }
}

/// Poling period `Λ = 2π/(k_p − k_s − k_i)`.
pub fn solve_poling_period(crystal: &CrystalSpec, wl: &WavelengthTriple) -> Result<f64> {
    let (kp, ks, ki) = wavenumbers(crystal, wl);
    let d = kp - ks - ki;
    if !(d > 0.0) {
        return Err(Error::Domain(format!(
            "collinear mismatch {d:.4e} rad/m is not positive; no first-order poling period exists"
        )));
    }
    Ok(2.0 * PI / d)
}

/// Pump, signal and idler vacuum wavelengths obeying `1/λ_p = 1/λ_s + 1/λ_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthTriple {
    pub pump: f64,
    pub signal: f64,
    pub idler: f64,
}

impl WavelengthTriple {
    pub fn new(pump: f64, signal: f64, idler: f64) -> Result<Self> {
        for (name, l) in [("pump", pump), ("signal", signal), ("idler", idler)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidSpec(format!("{name} wavelength must be positive, got {l}")));
            }
        }
        let lhs = 1.0 / pump;
        let rhs = 1.0 / signal + 1.0 / idler;
        if ((lhs - rhs) / lhs).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "wavelengths {pump:e}, {signal:e}, {idler:e} violate energy conservation"
            )));
        }
        Ok(Self { pump, signal, idler })
    }

    /// Frequency-degenerate pair from a pump wavelength.
    pub fn degenerate(pump: f64) -> Result<Self> {
        Self::new(pump, 2.0 * pump, 2.0 * pump)
    }
}

fn wavenumbers(c: &CrystalSpec, wl: &WavelengthTriple) -> (f64, f64, f64) {
    (2.0 * PI * c.n_p / wl.pump, 2.0 * PI * c.n_s / wl.signal, 2.0 * PI * c.n_i / wl.idler)
}

/// Sign convention for the `e^{iΔkL/2}` factor in [`BiphotonKernel::amplitude`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseFactor {
    Included,
    Omitted,
}

/// Evaluator of the two-photon amplitude for one pump spectrum and crystal.
#[derive(Debug, Clone)]
pub struct BiphotonKernel {
    pump: SampledField,
    crystal: CrystalSpec,
    wavelengths: WavelengthTriple,
    k_p: f64,
    k_s: f64,
    k_i: f64,
    zero_extend: bool,
    phase: PhaseFactor,
}

impl BiphotonKernel {
    /// `pump` is the pump's transverse angular spectrum.
    pub fn new(pump: SampledField, crystal: CrystalSpec, wavelengths: WavelengthTriple) -> Result<Self> {
        if pump.plane() != Plane::KSpace {
            return Err(Error::PlaneMismatch { expected: Plane::KSpace.name(), found: pump.plane().name() });
        }
        let (k_p, k_s, k_i) = wavenumbers(&crystal, &wavelengths);
        let kernel = Self {
            pump,
            crystal,
            wavelengths,
            k_p,
            k_s,
            k_i,
            zero_extend: false,
            phase: PhaseFactor::Included,
        };
        let ring = kernel.phase_matching_ring_radius();
        let extent = kernel.pump.grid().half_width();
        if extent < 1.25 * ring {
            return Err(Error::Extent(format!(
                "pump spectrum reaches {extent:.4e} rad/m but must cover 1.25x the phase-matching ring \
                 ({:.4e} rad/m); use a finer real-space pump pitch",
                1.25 * ring
            )));
        }
        Ok(kernel)
    }

    /// Samples `pump` on `grid`, transforms it to k-space and builds the kernel.
    pub fn from_mode(
        pump: &ModeSpec,
        grid: GridSpec,
        crystal: CrystalSpec,
        wavelengths: WavelengthTriple,
    ) -> Result<Self> {
        let field = sample(pump, grid)?.with_wavelength(wavelengths.pump);
        Self::new(angular_spectrum(&field)?, crystal, wavelengths)
    }

    /// Treat the pump spectrum as zero outside its grid instead of failing.
    pub fn with_zero_extension(mut self, on: bool) -> Self {
        self.zero_extend = on;
        self
    }

    pub fn with_phase_factor(mut self, phase: PhaseFactor) -> Self {
        self.phase = phase;
        self
    }

    pub fn pump(&self) -> &SampledField {
        &self.pump
    }

    pub fn crystal(&self) -> &CrystalSpec {
        &self.crystal
    }

    pub fn wavelengths(&self) -> &WavelengthTriple {
        &self.wavelengths
    }

    pub fn k_p(&self) -> f64 {
        self.k_p
    }

    pub fn k_s(&self) -> f64 {
        self.k_s
    }

    pub fn k_i(&self) -> f64 {
        self.k_i
    }

    /// `k_p − k_s − k_i`.
    pub fn collinear_mismatch(&self) -> f64 {
        self.k_p - self.k_s - self.k_i
    }

    pub fn phase_mismatch(&self, ks: KPerp, ki: KPerp) -> Result<f64> {
        let kg = self.crystal.grating_wavenumber();
        match self.crystal.mismatch {
            MismatchModel::Exact => {
                Ok(kz(self.k_p, ks + ki)? - kz(self.k_s, ks)? - kz(self.k_i, ki)? - kg)
            }
            MismatchModel::Paraxial => {
                kz(self.k_s, ks)?;
                kz(self.k_i, ki)?;
                Ok(self.collinear_mismatch() + (ks - ki).norm_sqr() / (2.0 * self.k_p) - kg)
            }
        }
    }

    /// Pump angular spectrum at `q`, bilinearly interpolated.
    pub fn pump_at(&self, q: KPerp) -> Result<Complex64> {
        match self.pump.interpolate(q.x, q.y) {
            Some(v) => Ok(v),
            None if self.zero_extend => Ok(Complex64::new(0.0, 0.0)),
            None => Err(Error::Extent(format!(
                "pump wavevector ({:.4e}, {:.4e}) rad/m lies outside the sampled spectrum",
                q.x, q.y
            ))),
        }
    }

    pub fn amplitude(&self, ks: KPerp, ki: KPerp) -> Result<Complex64> {
        let ep = self.pump_at(ks + ki)?;
        let dk = self.phase_mismatch(ks, ki)?;
        let half = 0.5 * dk * self.crystal.length;
        let mag = ep * (self.crystal.length * sinc(half));
        Ok(match self.phase {
            PhaseFactor::Included => mag * Complex64::from_polar(1.0, half),
            PhaseFactor::Omitted => mag,
        })
    }

    /// Radius `K` of the emission ring, solving `Δk(K x̂, −K (k_i/k_s) x̂) = 0`.
    /// Zero when the collinear configuration is already phase matched or beyond.
    pub fn phase_matching_ring_radius(&self) -> f64 {
        let ratio = self.k_i / self.k_s;
        let g = |k: f64| self.phase_mismatch(KPerp::new(k, 0.0), KPerp::new(-k * ratio, 0.0));
        let mut lo = 0.0;
        match g(lo) {
            Ok(v) if v < 0.0 => {}
            _ => return 0.0,
        }
        let mut hi = 0.999 * self.k_s.min(self.k_s / ratio);
        match g(hi) {
            Ok(v) if v > 0.0 => {}
            _ => return 0.0,
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match g(mid) {
                Ok(v) if v < 0.0 => lo = mid,
                _ => hi = mid,
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Free-function form of [`BiphotonKernel::phase_mismatch`].
pub fn phase_mismatch(ks: KPerp, ki: KPerp, kernel: &BiphotonKernel) -> Result<f64> {
    kernel.phase_mismatch(ks, ki)
}

/// Free-function form of [`BiphotonKernel::amplitude`].
pub fn biphoton_amplitude(ks: KPerp, ki: KPerp, kernel: &BiphotonKernel) -> Result<Complex64> {
    kernel.amplitude(ks, ki)
}

/// Square grid of pump wavevectors `q = k_s + k_i` used to trace out the partner photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdlerQuadrature {
    pub n: usize,
    pub half_width: f64,
}

impl IdlerQuadrature {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 2 || !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Precondition(format!(
                "idler quadrature needs n >= 2 and a positive half width, got {n}, {half_width}"
            )));
        }
        Ok(Self { n, half_width })
    }

    /// Covers the region where `|E_p|²` exceeds 1e-12 of its peak.
    pub fn covering(kernel: &BiphotonKernel, n: usize) -> Result<Self> {
        let pump = kernel.pump();
        let g = pump.grid();
        let inten = pump.intensity();
        let peak = inten.iter().cloned().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(Error::Precondition("pump spectrum is identically zero".into()));
        }
        let mut reach: f64 = 0.0;
        for ((i, j), v) in inten.indexed_iter() {
            if *v > 1e-12 * peak {
                reach = reach.max(g.coord(i).abs()).max(g.coord(j).abs());
            }
        }
        Self::new(n, (reach + g.dx()).min(g.coord(g.n() - 1)))
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        -self.half_width + m as f64 * self.step()
    }
}

/// Which photon is kept when the other is traced out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Signal,
    Idler,
}

/// Real map `R(k⊥)` on a k-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectrum {
    pub grid: GridSpec,
    pub values: Array2<f64>,
}

impl AngularSpectrum {
    /// `Σ R dk²`.
    pub fn total(&self) -> f64 {
        let rows: Vec<f64> = self.values.rows().into_iter().map(|r| r.sum()).collect();
        rows.iter().sum::<f64>() * self.grid.dx() * self.grid.dx()
    }

    pub fn radial_profile(&self, n_bins: usize) -> Result<RadialProfile> {
        radial_profile_of(&self.values, self.grid, n_bins)
    }

    /// View as a k-space field with amplitude `√R`, for image export.
    pub fn as_field(&self) -> SampledField {
        let vals = self.values.mapv(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
        SampledField::new(self.grid, vals, Plane::KSpace).expect("grid and values agree")
    }
}

/// `R_s(k_s) = Σ_{k_i} |Φ(k_s, k_i)|² dk_i²`.
pub fn signal_angular_spectrum(
    kernel: &BiphotonKernel,
    grid: GridSpec,
    quad: &IdlerQuadrature,
) -> Result<AngularSpectrum> {
    traced_spectrum(kernel, grid, quad, Arm::Signal)
}

/// `R_i(k_i) = Σ_{k_s} |Φ(k_s, k_i)|² dk_s²`.
pub fn idler_angular_spectrum(
    kernel: &BiphotonKernel,
    grid: GridSpec,
    quad: &IdlerQuadrature,
) -> Result<AngularSpectrum> {
    traced_spectrum(kernel, grid, quad, Arm::Idler)
}

struct PumpNodes {
    qx: Vec<f64>,
    qy: Vec<f64>,
    /// `kz_p(q) − 2π/Λ` (exact) or `k_p − k_s − k_i − 2π/Λ` (paraxial).
    offset: Vec<f64>,
    weight: Vec<f64>,
}

fn pump_nodes(kernel: &BiphotonKernel, quad: &IdlerQuadrature) -> Result<PumpNodes> {
    let l = kernel.crystal.length;
    let h = quad.step();
    let kg = kernel.crystal.grating_wavenumber();
    let mut raw = Vec::with_capacity(quad.n * quad.n);
    for a in 0..quad.n {
        for b in 0..quad.n {
            let q = KPerp::new(quad.node(b), quad.node(a));
            let e = kernel.pump_at(q)?;
            let off = match kernel.crystal.mismatch {
                MismatchModel::Exact => kz(kernel.k_p, q)? - kg,
                MismatchModel::Paraxial => kernel.collinear_mismatch() - kg,
            };
            raw.push((q, off, e.norm_sqr() * l * l * h * h));
        }
    }
    let wmax = raw.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut nodes = PumpNodes { qx: vec![], qy: vec![], offset: vec![], weight: vec![] };
    for (q, off, w) in raw {
        if w > 1e-16 * wmax {
            nodes.qx.push(q.x);
            nodes.qy.push(q.y);
            nodes.offset.push(off);
            nodes.weight.push(w);
        }
    }
    Ok(nodes)
}

fn traced_spectrum(
    kernel: &BiphotonKernel,
    grid: GridSpec,
    quad: &IdlerQuadrature,
    arm: Arm,
) -> Result<AngularSpectrum> {
    let (k_det, k_par) = match arm {
        Arm::Signal => (kernel.k_s, kernel.k_i),
        Arm::Idler => (kernel.k_i, kernel.k_s),
    };
    let kmax = std::f64::consts::SQRT_2 * grid.half_width();
    let qmax = std::f64::consts::SQRT_2 * quad.half_width;
    let pmax = kmax + qmax;
    if kmax >= k_det || pmax >= k_par || qmax >= kernel.k_p {
        return Err(Error::Domain("angular-spectrum grid reaches evanescent wavevectors".into()));
    }
    let l = kernel.crystal.length;
    let h = quad.step();
    let slope = match kernel.crystal.mismatch {
        MismatchModel::Exact => qmax / (kernel.k_p * kernel.k_p - qmax * qmax).sqrt() + pmax / (k_par * k_par - pmax * pmax).sqrt(),
        MismatchModel::Paraxial => (2.0 * kmax + qmax) / kernel.k_p,
    };
    let step_phase = slope * h * 0.5 * l;
    let limit = PI / 4.0;
    if step_phase >= limit {
        let need = ((quad.n - 1) as f64 * step_phase / limit).ceil() as usize + 2;
        return Err(Error::Resolution(format!(
            "idler quadrature step changes ΔkL/2 by {step_phase:.3} rad (limit π/4); use at least {need} points per side"
        )));
    }

    let nodes = pump_nodes(kernel, quad)?;
    let n = grid.n();
    let params = RowParams {
        model: kernel.crystal.mismatch,
        kd2: k_det * k_det,
        kp2: k_par * k_par,
        two_kp: 2.0 * kernel.k_p,
        half_l: 0.5 * l,
    };
    let xs: Vec<f64> = (0..n).map(|j| grid.coord(j)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![0.0; n];
            spectrum_row(&nodes, grid.coord(i), &xs, &params, &mut out);
            out
        })
        .collect();
    let mut values = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    Ok(AngularSpectrum { grid, values })
}

struct RowParams {
    model: MismatchModel,
    kd2: f64,
    kp2: f64,
    two_kp: f64,
    half_l: f64,
}

/// Fills one row of a traced spectrum, using the widest vector unit available.
/// Every path performs the same floating-point operations in the same order.
fn spectrum_row(nodes: &PumpNodes, ky: f64, xs: &[f64], p: &RowParams, out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the required CPU feature was detected at runtime.
            return unsafe { spectrum_row_avx512(nodes, ky, xs, p, out) };
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: as above.
            return unsafe { spectrum_row_avx2(nodes, ky, xs, p, out) };
        }
    }
    spectrum_row_generic(nodes, ky, xs, p, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn spectrum_row_avx512(nodes: &PumpNodes, ky: f64, xs: &[f64], p: &RowParams, out: &mut [f64]) {
    spectrum_row_generic(nodes, ky, xs, p, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn spectrum_row_avx2(nodes: &PumpNodes, ky: f64, xs: &[f64], p: &RowParams, out: &mut [f64]) {
    spectrum_row_generic(nodes, ky, xs, p, out)
}

#[inline(always)]
fn spectrum_row_generic(nodes: &PumpNodes, ky: f64, xs: &[f64], p: &RowParams, out: &mut [f64]) {
    let half_l = p.half_l;
    for (o, &kx) in out.iter_mut().zip(xs) {
        *o = match p.model {
            MismatchModel::Exact => {
                let kzd = (p.kd2 - kx * kx - ky * ky).sqrt();
                let kp2 = p.kp2;
                accumulate(nodes, |qx, qy, off| {
                    let dx = qx - kx;
                    let dy = qy - ky;
                    (off - kzd - (kp2 - dx * dx - dy * dy).sqrt()) * half_l
                })
            }
            MismatchModel::Paraxial => {
                let two_kp = p.two_kp;
                accumulate(nodes, |qx, qy, off| {
                    let dx = 2.0 * kx - qx;
                    let dy = 2.0 * ky - qy;
                    (off + (dx * dx + dy * dy) / two_kp) * half_l
                })
            }
        };
    }
}

const BLOCK: usize = 256;

/// `Σ_m w_m sinc²(x_m)`: terms are evaluated blockwise into a buffer, then
/// summed in four fixed lanes.
#[inline(always)]
fn accumulate<F: Fn(f64, f64, f64) -> f64>(nodes: &PumpNodes, arg: F) -> f64 {
    let mut buf = [0.0f64; BLOCK];
    let mut acc = [0.0f64; 4];
    let blocks = nodes
        .qx
        .chunks(BLOCK)
        .zip(nodes.qy.chunks(BLOCK))
        .zip(nodes.offset.chunks(BLOCK))
        .zip(nodes.weight.chunks(BLOCK));
    for (((qx, qy), off), w) in blocks {
        let m = w.len();
        let (qx, qy, off, out) = (&qx[..m], &qy[..m], &off[..m], &mut buf[..m]);
        for i in 0..m {
            out[i] = w[i] * sinc_sq(arg(qx[i], qy[i], off[i]));
        }
        let lanes = out.chunks_exact(4);
        let rest = lanes.remainder();
        for c in lanes {
            for k in 0..4 {
                acc[k] += c[k];
            }
        }
        for (k, v) in rest.iter().enumerate() {
            acc[k] += v;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// `(sin x / x)²` via reduction modulo π and an odd Taylor polynomial; branch-free.
#[inline(always)]
pub(crate) fn sinc_sq(x: f64) -> f64 {
    const ROUND: f64 = 6755399441055744.0;
    const PI_HI: f64 = PI;
    const PI_LO: f64 = 1.2246467991473532e-16;
    let n = (x * FRAC_1_PI + ROUND) - ROUND;
    let y = (x - n * PI_HI) - n * PI_LO;
    let y2 = y * y;
    let mut p = -1.0 / 121645100408832000.0;
    p = p * y2 + 1.0 / 355687428096000.0;
    p = p * y2 - 1.0 / 1307674368000.0;
    p = p * y2 + 1.0 / 6227020800.0;
    p = p * y2 - 1.0 / 39916800.0;
    p = p * y2 + 1.0 / 362880.0;
    p = p * y2 - 1.0 / 5040.0;
    p = p * y2 + 1.0 / 120.0;
    p = p * y2 - 1.0 / 6.0;
    p = p * y2 + 1.0;
    let s = y * p;
    let x2 = x * x;
    let small = 1.0 - x2 * (1.0 / 3.0);
    if x2 < 1e-12 {
        small
    } else {
        s * s / x2
    }
}

/// Crystal and wavelength presets. Indices are chosen to reproduce emission
/// geometry, not taken from dispersion data.
pub mod presets {
    use super::*;

    pub const PUMP_WAVELENGTH: f64 = 405e-9;

    /// Non-collinear, unpoled crystal emitting a degenerate ring at 3° external half angle.
    pub fn bbo_like() -> (CrystalSpec, WavelengthTriple) {
        let wl = WavelengthTriple::degenerate(PUMP_WAVELENGTH).expect("valid wavelengths");
        let n_s: f64 = 1.6606;
        let theta = 3.0f64.to_radians();
        // Exact collinear-pump ring condition k_p = 2 kz_s at the target angle.
        let n_p = (n_s * n_s - theta.sin().powi(2)).sqrt();
        let c = CrystalSpec::new(5e-3, n_p, n_s, n_s, None, MismatchModel::Exact).expect("valid crystal");
        (c, wl)
    }

    /// External half angle of the [`bbo_like`] ring, in radians.
    pub fn bbo_like_ring_angle() -> f64 {
        3.0f64.to_radians()
    }

    /// Collinear quasi-phase-matched crystal, 30 mm long, poling period solved.
    pub fn ppktp_like() -> (CrystalSpec, WavelengthTriple) {
        let wl = WavelengthTriple::degenerate(PUMP_WAVELENGTH).expect("valid wavelengths");
        let c = CrystalSpec::new(30e-3, 1.9555, 1.8420, 1.8420, None, MismatchModel::Exact)
            .and_then(|c| c.with_solved_poling(&wl))
            .expect("valid crystal");
        (c, wl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::ModeSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const UM: f64 = 1e-6;

    fn gaussian_kernel(crystal: CrystalSpec, wl: WavelengthTriple, w: f64) -> BiphotonKernel {
        let grid = GridSpec::new(256, 5.0 * UM).unwrap();
        BiphotonKernel::from_mode(&ModeSpec::gaussian(w).unwrap(), grid, crystal, wl).unwrap()
    }

    #[test]
    fn kz_examples() {
        let k = 1e7;
        assert_eq!(kz(k, KPerp::ZERO).unwrap(), k);
        assert_abs_diff_eq!(kz(k, KPerp::new(0.6 * k, 0.0)).unwrap(), 0.8 * k, epsilon = 1e-6);
        assert!(matches!(kz(k, KPerp::new(k, 0.0)), Err(Error::Domain(_))));
        for f in [1e-4, 1e-3, 5e-3, 1e-2] {
            let t = KPerp::polar(f * k, 0.7);
            let exact = kz(k, t).unwrap();
            let par = k - t.norm_sqr() / (2.0 * k);
            assert!(((exact - par) / exact).abs() < 1e-6);
        }
    }

    #[test]
    fn wavelength_triple_checks_energy() {
        assert!(WavelengthTriple::new(405e-9, 810e-9, 810e-9).is_ok());
        assert!(WavelengthTriple::new(405e-9, 800e-9, 810e-9).is_err());
        let wl = WavelengthTriple::new(405e-9, 700e-9, 1.0 / (1.0 / 405e-9 - 1.0 / 700e-9)).unwrap();
        assert!(wl.idler > 810e-9);
    }

    #[test]
    fn mismatch_examples() {
        let wl = WavelengthTriple::degenerate(405e-9).unwrap();
        let matched = CrystalSpec::new(1e-3, 1.6, 1.6, 1.6, None, MismatchModel::Exact).unwrap();
        let k = gaussian_kernel(matched, wl, 300.0 * UM);
        assert_abs_diff_eq!(k.phase_mismatch(KPerp::ZERO, KPerp::ZERO).unwrap(), 0.0, epsilon = 1e-8);
        let par = k.clone();
        let par = BiphotonKernel { crystal: par.crystal.with_mismatch(MismatchModel::Paraxial), ..par };
        let v = KPerp::new(3e4, -1e4);
        assert_eq!(par.phase_mismatch(v, v).unwrap(), 0.0);

        let (c, wl) = presets::ppktp_like();
        let want = 2.0 * PI / (2.0 * PI * (c.n_p / wl.pump - c.n_s / wl.signal - c.n_i / wl.idler));
        assert!((c.poling_period.unwrap() / want - 1.0).abs() < 1e-12);
        let k = gaussian_kernel(c, wl, 300.0 * UM);
        assert!(k.phase_mismatch(KPerp::ZERO, KPerp::ZERO).unwrap().abs() < 1e-12 * k.k_p());
    }

    #[test]
    fn amplitude_examples() {
        let (c, wl) = presets::ppktp_like();
        let k = gaussian_kernel(c, wl, 300.0 * UM);
        let a = k.amplitude(KPerp::ZERO, KPerp::ZERO).unwrap();
        let ep = k.pump_at(KPerp::ZERO).unwrap();
        assert!((a.norm() - ep.norm() * c.length).abs() < 1e-9 * a.norm());

        // Opposite transverse wavevectors with ΔkL/2 = π sit on the first sinc zero.
        let dk = |kk: f64| k.phase_mismatch(KPerp::new(kk, 0.0), KPerp::new(-kk, 0.0)).unwrap();
        let target = 2.0 * PI / c.length;
        let (mut lo, mut hi) = (0.0, 2e5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dk(mid).abs() < target {
                lo = mid
            } else {
                hi = mid
            }
        }
        let z = k.amplitude(KPerp::new(lo, 0.0), KPerp::new(-lo, 0.0)).unwrap();
        assert!(z.norm() < 1e-9 * a.norm());
    }

    #[test]
    fn paraxial_amplitude_peaks_on_the_diagonal() {
        let (c, wl) = presets::ppktp_like();
        let k = gaussian_kernel(c.with_mismatch(MismatchModel::Paraxial), wl, 300.0 * UM);
        let q0 = KPerp::new(2e3, -1e3);
        let at = |t: f64| {
            let ks = q0 * 0.5 + KPerp::new(t, 0.3 * t);
            k.amplitude(ks, q0 - ks).unwrap().norm()
        };
        let best = at(0.0);
        for s in 1..200 {
            let t = s as f64 * 500.0;
            assert!(at(t) <= best && at(-t) <= best);
        }
    }

    #[test]
    fn extent_and_zero_extension() {
        let (c, wl) = presets::ppktp_like();
        let k = gaussian_kernel(c, wl, 300.0 * UM);
        let far = KPerp::new(1e6, 0.0);
        assert!(matches!(k.amplitude(far, KPerp::ZERO), Err(Error::Extent(_))));
        let z = k.with_zero_extension(true).amplitude(far, KPerp::ZERO).unwrap();
        assert_eq!(z, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn kernel_requires_k_space_and_ring_margin() {
        let (c, wl) = presets::bbo_like();
        let g = GridSpec::new(64, 5.0 * UM).unwrap();
        let real = sample(&ModeSpec::gaussian(50.0 * UM).unwrap(), g).unwrap();
        assert!(matches!(BiphotonKernel::new(real.clone(), c, wl), Err(Error::PlaneMismatch { .. })));
        // Pitch too coarse: spectrum half width π/dx below 1.25x the ring.
        let coarse = GridSpec::new(64, 20.0 * UM).unwrap();
        let r = BiphotonKernel::from_mode(&ModeSpec::gaussian(200.0 * UM).unwrap(), coarse, c, wl);
        assert!(matches!(r, Err(Error::Extent(_))));
    }

    #[test]
    fn bbo_ring_matches_design_angle() {
        let (c, wl) = presets::bbo_like();
        let k = gaussian_kernel(c, wl, 300.0 * UM);
        let k0 = 2.0 * PI / wl.signal;
        let want = k0 * presets::bbo_like_ring_angle().sin();
        assert!((k.phase_matching_ring_radius() / want - 1.0).abs() < 1e-9);
        let (c, wl) = presets::ppktp_like();
        assert_eq!(gaussian_kernel(c, wl, 300.0 * UM).phase_matching_ring_radius(), 0.0);
    }

    #[test]
    fn paraxial_tracks_exact_near_collinear() {
        let wl = WavelengthTriple::degenerate(405e-9).unwrap();
        let c = CrystalSpec::new(10e-3, 1.8420 * 1.0002, 1.8420, 1.8420, None, MismatchModel::Exact)
            .unwrap()
            .with_solved_poling(&wl)
            .unwrap();
        let ex = gaussian_kernel(c, wl, 300.0 * UM);
        let par = BiphotonKernel { crystal: c.with_mismatch(MismatchModel::Paraxial), ..ex.clone() };
        let kmax = 0.01 * ex.k_s();
        for a in 0..12 {
            for b in 0..12 {
                let ks = KPerp::polar(kmax * a as f64 / 11.0, 0.5 * a as f64);
                let ki = KPerp::polar(kmax * b as f64 / 11.0, 1.3 * b as f64 + 0.2);
                let e = ex.phase_mismatch(ks, ki).unwrap();
                let p = par.phase_mismatch(ks, ki).unwrap();
                let scale = (ks.norm_sqr() + ki.norm_sqr()) / (2.0 * ex.k_s()) + 1e-9;
                assert!((e - p).abs() <= 1e-3 * scale, "{e} vs {p}");
            }
        }
    }

    #[test]
    fn fast_sinc_squared_matches_reference() {
        let mut x = -2000.0;
        while x < 2000.0 {
            let want = sinc(x) * sinc(x);
            assert!((sinc_sq(x) - want).abs() < 1e-14, "x={x}");
            x += 0.0371;
        }
        for x in [0.0, 1e-9, -1e-7, 1e-5, PI, 2.0 * PI, 1e5 + 0.3] {
            assert!((sinc_sq(x) - sinc(x) * sinc(x)).abs() < 1e-14);
        }
    }

    fn small_spectrum(pump: &ModeSpec, arm: Arm, phase: PhaseFactor) -> AngularSpectrum {
        let (c, wl) = presets::ppktp_like();
        let g = GridSpec::new(128, 10.0 * UM).unwrap();
        let k = BiphotonKernel::from_mode(pump, g, c, wl).unwrap().with_phase_factor(phase);
        let quad = IdlerQuadrature::covering(&k, 48).unwrap();
        let sg = GridSpec::new(64, 1.2e3).unwrap();
        traced_spectrum(&k, sg, &quad, arm).unwrap()
    }

    #[test]
    fn spectrum_is_nonnegative_and_symmetric_under_exchange() {
        let pump = ModeSpec::nov(2, 150.0 * UM).unwrap();
        let s = small_spectrum(&pump, Arm::Signal, PhaseFactor::Included);
        let i = small_spectrum(&pump, Arm::Idler, PhaseFactor::Included);
        assert!(s.values.iter().all(|&v| v >= 0.0));
        assert!((s.total() / i.total() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn phase_factor_never_enters_the_spectrum() {
        let pump = ModeSpec::nov(1, 150.0 * UM).unwrap();
        let a = small_spectrum(&pump, Arm::Signal, PhaseFactor::Included);
        let b = small_spectrum(&pump, Arm::Signal, PhaseFactor::Omitted);
        assert_eq!(a, b);
    }

    #[test]
    fn coarse_quadrature_is_a_resolution_error() {
        let (c, wl) = presets::bbo_like();
        let k = gaussian_kernel(c, wl, 50.0 * UM);
        let quad = IdlerQuadrature::new(8, 5e5).unwrap();
        let sg = GridSpec::new(64, 1e4).unwrap();
        match signal_angular_spectrum(&k, sg, &quad) {
            Err(Error::Resolution(m)) => assert!(m.contains("points per side")),
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sinc_sq_bounded(x in -1e6f64..1e6) {
            let v = sinc_sq(x);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn amplitude_modulus_independent_of_phase_factor(
            ax in -4e4f64..4e4, ay in -4e4f64..4e4, bx in -4e4f64..4e4, by in -4e4f64..4e4,
        ) {
            let (c, wl) = presets::ppktp_like();
            let k = gaussian_kernel(c, wl, 100.0 * UM);
            let (ks, ki) = (KPerp::new(ax, ay), KPerp::new(bx, by));
            let a = k.amplitude(ks, ki).unwrap();
            let b = k.clone().with_phase_factor(PhaseFactor::Omitted).amplitude(ks, ki).unwrap();
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-12 * b.norm().max(1e-300));
        }
    }
}

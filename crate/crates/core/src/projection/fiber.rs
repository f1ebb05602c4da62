use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;
use crate::spdc::{BiphotonKernel, IdlerQuadrature, KPerp};

/// How a fiber collects light.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberKind {
    /// Projects the photon onto the fiber's Gaussian mode.
    SingleMode,
    /// Collects intensity with the Gaussian weight `|ξ(k)/ξ(0)|²`.
    MultiMode,
}

/// Gaussian fiber mode of field radius `a` (mode-field diameter `2a`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    a: f64,
    kind: FiberKind,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidSpec(format!("{name} must be positive and finite, got {v}")))
    }
}

impl FiberSpec {
    pub fn single_mode(a: f64) -> Result<Self> {
        Ok(Self { a: positive("fiber radius a", a)?, kind: FiberKind::SingleMode })
    }

    pub fn multi_mode(a: f64) -> Result<Self> {
        Ok(Self { a: positive("fiber radius a", a)?, kind: FiberKind::MultiMode })
    }

    /// Single-mode fiber from its mode-field diameter.
    pub fn from_mfd(mfd: f64) -> Result<Self> {
        Self::single_mode(0.5 * positive("mode-field diameter", mfd)?)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn kind(&self) -> FiberKind {
        self.kind
    }

    /// Same fiber referred through a collimator of focal length `focal`:
    /// the mode radius becomes `λ f/(π a)`.
    pub fn through_coupler(&self, wavelength: f64, focal: f64) -> Result<Self> {
        let a = positive("wavelength", wavelength)? * positive("coupler focal length", focal)? / (PI * self.a);
        Ok(Self { a, kind: self.kind })
    }
}

/// `ξ(k) = √(a²/2π) exp(−a²|k|²/4)`.
pub fn fiber_mode(spec: &FiberSpec, k: KPerp) -> f64 {
    let a2 = spec.a * spec.a;
    (a2 / (2.0 * PI)).sqrt() * (-0.25 * a2 * k.norm_sqr()).exp()
}

fn bucket_weight(spec: &FiberSpec, k: KPerp) -> f64 {
    (-0.5 * spec.a * spec.a * k.norm_sqr()).exp()
}

/// Two-photon amplitude `Φ(k_s, k_i)`.
pub trait TwoPhotonAmplitude: Sync {
    fn amplitude(&self, ks: KPerp, ki: KPerp) -> Result<Complex64>;

    /// Transverse reach of the pump spectrum, used to size quadratures.
    fn pump_reach(&self) -> Option<f64> {
        None
    }
}

impl TwoPhotonAmplitude for BiphotonKernel {
    fn amplitude(&self, ks: KPerp, ki: KPerp) -> Result<Complex64> {
        BiphotonKernel::amplitude(self, ks, ki)
    }

    fn pump_reach(&self) -> Option<f64> {
        IdlerQuadrature::covering(self, 2).ok().map(|q| q.half_width)
    }
}

/// Wraps a closure as a [`TwoPhotonAmplitude`].
pub struct AmplitudeFn<F>(pub F);

impl<F> TwoPhotonAmplitude for AmplitudeFn<F>
where
    F: Fn(KPerp, KPerp) -> Complex64 + Sync,
{
    fn amplitude(&self, ks: KPerp, ki: KPerp) -> Result<Complex64> {
        Ok((self.0)(ks, ki))
    }
}

/// Transverse wavevectors at which the two fibers are centred.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmCenters {
    pub signal: KPerp,
    pub idler: KPerp,
}

impl ArmCenters {
    pub fn collinear() -> Self {
        Self::default()
    }

    /// Diametrically opposite points of an emission ring of signal radius `k_ring`.
    pub fn opposite(k_ring: f64, k_s: f64, k_i: f64) -> Self {
        Self { signal: KPerp::new(k_ring, 0.0), idler: KPerp::new(-k_ring * k_i / k_s, 0.0) }
    }
}

/// Midpoint grids of `n × n` nodes around each arm centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumQuadrature {
    pub n: usize,
    pub signal_half_width: f64,
    pub idler_half_width: f64,
}

/// Reach beyond each centre, in units of `1/a`.
const COVER: f64 = 4.0;

impl MomentumQuadrature {
    pub const DEFAULT_N: usize = 64;

    pub fn new(n: usize, signal_half_width: f64, idler_half_width: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!("momentum quadrature needs n >= 2, got {n}")));
        }
        positive("signal half width", signal_half_width)?;
        positive("idler half width", idler_half_width)?;
        Ok(Self { n, signal_half_width, idler_half_width })
    }

    /// Idler grid spans `4/a_i`. A single-mode signal grid spans `4/a_s`; a
    /// multimode one also covers every signal direction the pump can feed.
    pub fn auto(amp: &dyn TwoPhotonAmplitude, xi_s: &FiberSpec, xi_i: &FiberSpec, n: usize) -> Result<Self> {
        let hw_i = COVER / xi_i.a;
        let mut hw_s = COVER / xi_s.a;
        if xi_s.kind == FiberKind::MultiMode {
            let reach = amp.pump_reach().ok_or_else(|| {
                Error::Precondition("a multimode signal arm needs an explicit quadrature for this amplitude".into())
            })?;
            hw_s = hw_s.max(reach + hw_i);
        }
        Self::new(n, hw_s, hw_i)
    }

    fn step(half_width: f64, n: usize) -> f64 {
        2.0 * half_width / n as f64
    }

    fn nodes(center: f64, half_width: f64, n: usize) -> Vec<f64> {
        let h = Self::step(half_width, n);
        (0..n).map(|m| center - half_width + (m as f64 + 0.5) * h).collect()
    }

    fn check_coverage(&self, xi_s: &FiberSpec, xi_i: &FiberSpec) -> Result<()> {
        for (arm, hw, f) in [("signal", self.signal_half_width, xi_s), ("idler", self.idler_half_width, xi_i)] {
            let need = COVER / f.a;
            if hw < need * (1.0 - 1e-12) {
                return Err(Error::Extent(format!(
                    "{arm} quadrature reaches {hw:.4e} rad/m beyond its centre but must cover 4/a = {need:.4e} rad/m"
                )));
            }
        }
        Ok(())
    }
}

/// Idler-projected amplitude `A(k_s) = ∫ Φ(k_s, k_i) ξ_i(k_i − c_i) d²k_i`
/// on the signal grid, rows along y.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedAmplitude {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Complex64>,
    pub step: f64,
}

/// Evaluates [`HeraldedAmplitude`] with signal rows distributed across workers.
pub fn heralded_amplitude(
    amp: &dyn TwoPhotonAmplitude,
    xi_i: &FiberSpec,
    centers: ArmCenters,
    quad: &MomentumQuadrature,
) -> Result<HeraldedAmplitude> {
    let n = quad.n;
    let xs = MomentumQuadrature::nodes(centers.signal.x, quad.signal_half_width, n);
    let ys = MomentumQuadrature::nodes(centers.signal.y, quad.signal_half_width, n);
    let ix = MomentumQuadrature::nodes(centers.idler.x, quad.idler_half_width, n);
    let iy = MomentumQuadrature::nodes(centers.idler.y, quad.idler_half_width, n);
    let hi = MomentumQuadrature::step(quad.idler_half_width, n);
    let idler: Vec<(KPerp, f64)> = iy
        .iter()
        .flat_map(|&y| ix.iter().map(move |&x| KPerp::new(x, y)))
        .map(|k| (k, fiber_mode(xi_i, k - centers.idler) * hi * hi))
        .collect();
    let rows: Vec<Result<Vec<Complex64>>> = ys
        .par_iter()
        .map(|&sy| {
            xs.iter()
                .map(|&sx| {
                    let ks = KPerp::new(sx, sy);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(ki, w) in &idler {
                        acc += amp.amplitude(ks, ki)? * w;
                    }
                    Ok(acc)
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(n * n);
    for row in rows {
        values.extend(row?);
    }
    let step = MomentumQuadrature::step(quad.signal_half_width, n);
    Ok(HeraldedAmplitude { xs, ys, values, step })
}

/// Coincidence and idler-singles rates in arbitrary units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberRates {
    pub coincidence: f64,
    pub singles: f64,
}

impl FiberRates {
    /// Coincidences per idler single, in `[0, 1]`.
    pub fn heralding_efficiency(&self) -> Result<f64> {
        if !(self.singles > 0.0) {
            return Err(Error::UndefinedRatio(format!(
                "idler singles rate is {:e}; heralding efficiency is undefined",
                self.singles
            )));
        }
        let eta = self.coincidence / self.singles;
        if !(-1e-9..=1.0 + 1e-9).contains(&eta) {
            return Err(Error::Resolution(format!(
                "heralding efficiency {eta} lies outside [0, 1]; refine the momentum quadrature"
            )));
        }
        Ok(eta.clamp(0.0, 1.0))
    }
}

/// Both rates from one evaluation of the heralded amplitude.
///
/// The coincidence rate is the squared modulus of the projected amplitude for
/// a single-mode signal fiber, or the weighted intensity for a multimode one.
/// The singles rate traces the signal over the whole signal grid.
pub fn fiber_rates(
    amp: &dyn TwoPhotonAmplitude,
    xi_s: &FiberSpec,
    xi_i: &FiberSpec,
    centers: ArmCenters,
    quad: &MomentumQuadrature,
) -> Result<FiberRates> {
    quad.check_coverage(xi_s, xi_i)?;
    let h = heralded_amplitude(amp, xi_i, centers, quad)?;
    let n = quad.n;
    let dk2 = h.step * h.step;
    let mut inten = Vec::with_capacity(n * n);
    let mut weighted = Vec::with_capacity(n * n);
    let mut re = Vec::with_capacity(n * n);
    let mut im = Vec::with_capacity(n * n);
    for (i, &y) in h.ys.iter().enumerate() {
        for (j, &x) in h.xs.iter().enumerate() {
            let a = h.values[i * n + j];
            let d = KPerp::new(x, y) - centers.signal;
            inten.push(a.norm_sqr());
            match xi_s.kind {
                FiberKind::SingleMode => {
                    let p = a * fiber_mode(xi_s, d);
                    re.push(p.re);
                    im.push(p.im);
                }
                FiberKind::MultiMode => weighted.push(a.norm_sqr() * bucket_weight(xi_s, d)),
            }
        }
    }
    let singles = pairwise_sum(&inten) * dk2;
    let coincidence = match xi_s.kind {
        FiberKind::SingleMode => Complex64::new(pairwise_sum(&re), pairwise_sum(&im)).norm_sqr() * dk2 * dk2,
        FiberKind::MultiMode => pairwise_sum(&weighted) * dk2,
    };
    Ok(FiberRates { coincidence, singles })
}

/// Fiber-coupled coincidence rate, see [`fiber_rates`].
pub fn coincidence_rate(
    amp: &dyn TwoPhotonAmplitude,
    xi_s: &FiberSpec,
    xi_i: &FiberSpec,
    centers: ArmCenters,
    quad: &MomentumQuadrature,
) -> Result<f64> {
    Ok(fiber_rates(amp, xi_s, xi_i, centers, quad)?.coincidence)
}

/// `∫ d²k_s |∫ Φ ξ_i d²k_i|²`: idler projected, signal traced.
pub fn singles_rate(
    amp: &dyn TwoPhotonAmplitude,
    xi_i: &FiberSpec,
    centers: ArmCenters,
    quad: &MomentumQuadrature,
) -> Result<f64> {
    let bucket = FiberSpec::multi_mode(COVER / quad.signal_half_width)?;
    Ok(fiber_rates(amp, &bucket, xi_i, centers, quad)?.singles)
}

pub fn heralding_efficiency(
    amp: &dyn TwoPhotonAmplitude,
    xi_s: &FiberSpec,
    xi_i: &FiberSpec,
    centers: ArmCenters,
    quad: &MomentumQuadrature,
) -> Result<f64> {
    fiber_rates(amp, xi_s, xi_i, centers, quad)?.heralding_efficiency()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::ModeSpec;
    use crate::spdc::presets;
    use crate::GridSpec;
    use approx::assert_relative_eq;

    const UM: f64 = 1e-6;

    #[test]
    fn fiber_mode_examples() {
        let f = FiberSpec::single_mode(2.5 * UM).unwrap();
        let peak = fiber_mode(&f, KPerp::ZERO);
        assert_relative_eq!(peak, (f.a() * f.a() / (2.0 * PI)).sqrt(), max_relative = 1e-15);
        let at = fiber_mode(&f, KPerp::new(0.0, 2.0 / f.a()));
        assert_relative_eq!(at / peak, (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(2.0 / f.a(), 8e5, max_relative = 1e-12);
        assert!(FiberSpec::single_mode(0.0).is_err());
        assert!(FiberSpec::multi_mode(-1.0).is_err());
    }

    #[test]
    fn fiber_mode_has_unit_power() {
        let f = FiberSpec::single_mode(100.0 * UM).unwrap();
        let hw = 9.0 / f.a();
        let n = 200;
        let h = 2.0 * hw / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let k = KPerp::new(-hw + (j as f64 + 0.5) * h, -hw + (i as f64 + 0.5) * h);
                s += fiber_mode(&f, k).powi(2) * h * h;
            }
        }
        assert_relative_eq!(s, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn coupler_back_projection() {
        let f = FiberSpec::from_mfd(5.0 * UM).unwrap().through_coupler(810e-9, 2e-3).unwrap();
        assert_relative_eq!(f.a(), 810e-9 * 2e-3 / (PI * 2.5e-6), max_relative = 1e-15);
        assert_eq!(f.kind(), FiberKind::SingleMode);
    }

    fn gaussian(a: f64) -> impl Fn(KPerp) -> f64 {
        move |k: KPerp| (-0.25 * a * a * k.norm_sqr()).exp()
    }

    #[test]
    fn zero_amplitude_gives_zero_rates() {
        let zero = AmplitudeFn(|_: KPerp, _: KPerp| Complex64::new(0.0, 0.0));
        let f = FiberSpec::single_mode(100.0 * UM).unwrap();
        let q = MomentumQuadrature::new(16, 4e4, 4e4).unwrap();
        let r = fiber_rates(&zero, &f, &f, ArmCenters::collinear(), &q).unwrap();
        assert_eq!(r.coincidence, 0.0);
        assert_eq!(r.singles, 0.0);
        assert!(matches!(r.heralding_efficiency(), Err(Error::UndefinedRatio(_))));
    }

    #[test]
    fn coverage_is_enforced() {
        let f = FiberSpec::single_mode(100.0 * UM).unwrap();
        let one = AmplitudeFn(|_: KPerp, _: KPerp| Complex64::new(1.0, 0.0));
        let q = MomentumQuadrature::new(16, 4e4, 3.9e4).unwrap();
        assert!(matches!(
            coincidence_rate(&one, &f, &f, ArmCenters::collinear(), &q),
            Err(Error::Extent(_))
        ));
    }

    #[test]
    fn separable_state_efficiency_is_signal_capture_fraction() {
        // Φ = g_s(k_s) g_i(k_i) with Gaussian factors of width parameter b.
        let b_s = 150.0 * UM;
        let b_i = 120.0 * UM;
        let (gs, gi) = (gaussian(b_s), gaussian(b_i));
        let phi = AmplitudeFn(move |ks: KPerp, ki: KPerp| Complex64::new(gs(ks) * gi(ki), 0.0));
        let a_s = 90.0 * UM;
        let xi_s = FiberSpec::multi_mode(a_s).unwrap();
        let xi_i = FiberSpec::single_mode(200.0 * UM).unwrap();
        let q = MomentumQuadrature::new(96, 8.0 / b_s.min(a_s), 4.0 / xi_i.a()).unwrap();
        let eta = heralding_efficiency(&phi, &xi_s, &xi_i, ArmCenters::collinear(), &q).unwrap();
        // ∫ e^{-b²k²/2} e^{-a²k²/2} d²k / ∫ e^{-b²k²/2} d²k = b²/(a²+b²).
        let expected = b_s * b_s / (a_s * a_s + b_s * b_s);
        assert_relative_eq!(eta, expected, max_relative = 1e-8);
    }

    #[test]
    fn singles_match_gaussian_oracle_and_vanish_with_fiber_radius() {
        let beta = 1e-8;
        let phi = AmplitudeFn(move |ks: KPerp, ki: KPerp| {
            Complex64::new((-beta * (ks.norm_sqr() + ki.norm_sqr())).exp(), 0.0)
        });
        let mut prev = f64::INFINITY;
        for a in [2e-4, 1e-4, 5e-5, 2.5e-5] {
            let xi = FiberSpec::single_mode(a).unwrap();
            let q = MomentumQuadrature::new(64, 6e4, (4.0 / a).max(6e4)).unwrap();
            let s = singles_rate(&phi, &xi, ArmCenters::collinear(), &q).unwrap();
            let g = beta + 0.25 * a * a;
            let expected = a * a / (2.0 * PI) * (PI / g).powi(2) * PI / (2.0 * beta);
            assert_relative_eq!(s, expected, max_relative = 1e-9);
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn collinear_centres_maximise_gaussian_coincidences() {
        let (c, wl) = presets::ppktp_like();
        let pump = ModeSpec::gaussian(300.0 * UM).unwrap();
        let k = BiphotonKernel::from_mode(&pump, GridSpec::new(256, 20.0 * UM).unwrap(), c, wl).unwrap();
        let xi = FiberSpec::single_mode(300.0 * UM).unwrap();
        let q = MomentumQuadrature::new(24, 4.0 / xi.a(), 4.0 / xi.a()).unwrap();
        let at = |d: f64| {
            let centers = ArmCenters { signal: KPerp::new(d, 0.0), idler: KPerp::new(-d, 0.0) };
            coincidence_rate(&k, &xi, &xi, centers, &q).unwrap()
        };
        let c0 = at(0.0);
        assert!(c0 > 0.0);
        for d in [-4e3, -2e3, 2e3, 4e3] {
            assert!(at(d) < c0, "offset {d} beats the collinear centre");
        }
    }

    #[test]
    fn efficiency_bounded_for_single_mode_signal() {
        let (c, wl) = presets::ppktp_like();
        let pump = ModeSpec::nov(2, 200.0 * UM).unwrap();
        let k = BiphotonKernel::from_mode(&pump, GridSpec::new(256, 20.0 * UM).unwrap(), c, wl).unwrap();
        let xi = FiberSpec::single_mode(200.0 * UM).unwrap();
        let q = MomentumQuadrature::auto(&k, &xi, &xi, 24).unwrap();
        let r = fiber_rates(&k, &xi, &xi, ArmCenters::collinear(), &q).unwrap();
        let eta = r.heralding_efficiency().unwrap();
        assert!((0.0..=1.0).contains(&eta));
        // Projecting both photons on Gaussians forbids a charge-2 pump.
        assert!(r.coincidence < 1e-6 * r.singles, "{r:?}");
    }
}

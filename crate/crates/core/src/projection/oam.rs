use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modes::ModeSpec;
use crate::quadrature::{pairwise_sum, CompositeGaussLegendre};

/// Mode family used to project a down-converted photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjectionFamily {
    /// Laguerre-Gauss in the normal-vortex form.
    Lg,
    Bg,
}

impl ProjectionFamily {
    pub fn name(self) -> &'static str {
        match self {
            ProjectionFamily::Lg => "lg",
            ProjectionFamily::Bg => "bg",
        }
    }
}

impl fmt::Display for ProjectionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProjectionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lg" | "nov" => Ok(ProjectionFamily::Lg),
            "bg" | "bessel-gauss" | "bessel_gauss" => Ok(ProjectionFamily::Bg),
            other => Err(Error::InvalidSpec(format!("unknown projection family '{other}' (expected lg or bg)"))),
        }
    }
}

/// Projection mode referred to the crystal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSpec {
    pub family: ProjectionFamily,
    pub ell: i32,
    pub w: f64,
    /// Radial wavenumber, BG only.
    pub k_r: f64,
}

impl ProjectionSpec {
    pub fn lg(ell: i32, w: f64) -> Result<Self> {
        let s = Self { family: ProjectionFamily::Lg, ell, w, k_r: 0.0 };
        s.mode()?;
        Ok(s)
    }

    pub fn bg(ell: i32, w: f64, k_r: f64) -> Result<Self> {
        let s = Self { family: ProjectionFamily::Bg, ell, w, k_r };
        s.mode()?;
        Ok(s)
    }

    pub fn with_ell(&self, ell: i32) -> Self {
        Self { ell, ..*self }
    }

    /// Unit-power mode.
    pub fn mode(&self) -> Result<ModeSpec> {
        match self.family {
            ProjectionFamily::Lg => ModeSpec::nov(self.ell, self.w),
            ProjectionFamily::Bg => ModeSpec::bessel_gauss(self.ell, self.w, self.k_r)?.normalized(),
        }
    }
}

/// Composite Gauss-Legendre rule on `[0, R_max]`, with `R_max` a multiple of
/// the largest characteristic radius among the modes involved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialQuadrature {
    pub nodes: usize,
    pub extent_factor: f64,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self { nodes: 2048, extent_factor: 5.0 }
    }
}

const PANEL_ORDER: usize = 32;

impl RadialQuadrature {
    pub fn new(nodes: usize, extent_factor: f64) -> Result<Self> {
        if nodes < 2048 {
            return Err(Error::Precondition(format!("radial quadrature needs at least 2048 nodes, got {nodes}")));
        }
        if !(extent_factor >= 5.0 && extent_factor.is_finite()) {
            return Err(Error::Precondition(format!(
                "radial truncation must be at least 5x the mode extent, got {extent_factor}"
            )));
        }
        Ok(Self { nodes, extent_factor })
    }

    fn rule(&self) -> CompositeGaussLegendre {
        CompositeGaussLegendre::new(self.nodes.div_ceil(PANEL_ORDER), PANEL_ORDER)
    }
}

fn require_normalized(specs: &[&ModeSpec]) -> Result<()> {
    for s in specs {
        if !s.is_normalized() {
            return Err(Error::Precondition(format!(
                "{} mode with ell = {} is not normalized; call normalized() first",
                s.family(),
                s.ell()
            )));
        }
    }
    Ok(())
}

/// `C = ∫dθ ∫ r E_p E_s* E_i* dr`.
///
/// The angular integral is taken analytically, so `C` is exactly zero unless
/// `ℓ_p = ℓ_s + ℓ_i`.
pub fn oam_overlap_amplitude(
    pump: &ModeSpec,
    signal: &ModeSpec,
    idler: &ModeSpec,
    quad: &RadialQuadrature,
) -> Result<Complex64> {
    require_normalized(&[pump, signal, idler])?;
    if pump.ell() != signal.ell() + idler.ell() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let extent = pump.characteristic_radius().max(signal.characteristic_radius()).max(idler.characteristic_radius());
    let r_max = quad.extent_factor * extent;
    let c = quad
        .rule()
        .integrate_complex(0.0, r_max, |r| pump.radial(r) * (signal.radial(r) * idler.radial(r)).conj() * r);
    Ok(c * (2.0 * PI))
}

/// Midpoint grid of `n × n` points on `[-h, h]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianQuadrature {
    pub n: usize,
    pub half_width: f64,
}

/// Overlap integral evaluated on a Cartesian grid, without separating the
/// angular factor.
pub fn oam_overlap_cartesian(
    pump: &ModeSpec,
    signal: &ModeSpec,
    idler: &ModeSpec,
    quad: &CartesianQuadrature,
) -> Result<Complex64> {
    require_normalized(&[pump, signal, idler])?;
    if quad.n < 2 || !(quad.half_width > 0.0) {
        return Err(Error::Precondition("cartesian quadrature needs n >= 2 and a positive half width".into()));
    }
    let h = 2.0 * quad.half_width / quad.n as f64;
    let coord = |m: usize| -quad.half_width + (m as f64 + 0.5) * h;
    let rows: Vec<(f64, f64)> = (0..quad.n)
        .into_par_iter()
        .map(|i| {
            let y = coord(i);
            let (mut re, mut im) = (Vec::with_capacity(quad.n), Vec::with_capacity(quad.n));
            for j in 0..quad.n {
                let x = coord(j);
                let v = pump.eval_xy(x, y) * (signal.eval_xy(x, y) * idler.eval_xy(x, y)).conj();
                re.push(v.re);
                im.push(v.im);
            }
            (pairwise_sum(&re), pairwise_sum(&im))
        })
        .collect();
    let re: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let im: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) * (h * h))
}

/// Idler OAM probabilities `p_{ℓ_i}`, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct OamSpectrum {
    pub ells: Vec<i32>,
    pub probs: Vec<f64>,
}

impl OamSpectrum {
    /// Normalizes non-negative weights to unit sum.
    pub fn from_weights(ells: Vec<i32>, weights: Vec<f64>) -> Result<Self> {
        if ells.len() != weights.len() || ells.is_empty() {
            return Err(Error::Shape(format!("{} ells but {} weights", ells.len(), weights.len())));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Precondition("OAM weights must be finite and non-negative".into()));
        }
        let total = pairwise_sum(&weights);
        if !(total > 0.0) {
            return Err(Error::DegenerateState("every OAM weight is zero".into()));
        }
        Ok(Self { ells, probs: weights.iter().map(|w| w / total).collect() })
    }

    /// Spectrum `|C_ℓ|²` from amplitudes.
    pub fn from_amplitudes(ells: Vec<i32>, amps: &[Complex64]) -> Result<Self> {
        Self::from_weights(ells, amps.iter().map(|c| c.norm_sqr()).collect())
    }

    pub fn prob(&self, ell: i32) -> Option<f64> {
        self.ells.iter().position(|&l| l == ell).map(|i| self.probs[i])
    }

    pub fn schmidt_number(&self) -> f64 {
        schmidt_number(self)
    }
}

/// `p_{ℓ_i} = |C_{ℓ_p − ℓ_i, ℓ_i}|²` for `ℓ_i ∈ [−ℓ_max, ℓ_max]`, both photons
/// projected with the family and parameters of `proj`.
pub fn oam_spectrum(
    pump: &ModeSpec,
    proj: &ProjectionSpec,
    ell_max: i32,
    quad: &RadialQuadrature,
) -> Result<OamSpectrum> {
    if ell_max < 10 {
        return Err(Error::Precondition(format!("the OAM window needs ell_max >= 10, got {ell_max}")));
    }
    let lp = pump.ell();
    let ells: Vec<i32> = (-ell_max..=ell_max).collect();
    let mut modes = BTreeMap::new();
    for &li in &ells {
        for l in [li, lp - li] {
            if let std::collections::btree_map::Entry::Vacant(e) = modes.entry(l) {
                e.insert(proj.with_ell(l).mode()?);
            }
        }
    }
    let amps = ells
        .iter()
        .map(|&li| oam_overlap_amplitude(pump, &modes[&(lp - li)], &modes[&li], quad))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = amps.iter().map(|c| c.norm_sqr()).collect();
    let max = weights.iter().cloned().fold(0.0, f64::max);
    let edge = weights[0].max(weights[weights.len() - 1]);
    if edge >= 1e-3 * max {
        return Err(Error::Truncation(format!(
            "OAM window [-{ell_max}, {ell_max}] ends at {:.3e} of the peak (needs < 1e-3); widen ell_max",
            edge / max
        )));
    }
    OamSpectrum::from_weights(ells, weights)
}

/// `K = 1/Σ p²`.
pub fn schmidt_number(spectrum: &OamSpectrum) -> f64 {
    let sq: Vec<f64> = spectrum.probs.iter().map(|p| p * p).collect();
    1.0 / pairwise_sum(&sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const UM: f64 = 1e-6;

    fn pov(ell: i32) -> ModeSpec {
        ModeSpec::pov(ell, 100.0 * UM, 60.0 * UM, 1e-3).unwrap().normalized().unwrap()
    }

    #[test]
    fn selection_rule_is_exact() {
        let q = RadialQuadrature::default();
        let p = ModeSpec::nov(1, 200.0 * UM).unwrap();
        let m = ModeSpec::nov(1, 200.0 * UM).unwrap();
        assert_eq!(oam_overlap_amplitude(&p, &m, &m, &q).unwrap(), Complex64::new(0.0, 0.0));
        let z = ModeSpec::nov(0, 200.0 * UM).unwrap();
        assert!(oam_overlap_amplitude(&p, &m, &z, &q).unwrap().norm() > 0.0);
    }

    #[test]
    fn unnormalized_specs_are_rejected() {
        let q = RadialQuadrature::default();
        let p = ModeSpec::pov(0, 100.0 * UM, 60.0 * UM, 1e-3).unwrap();
        let z = ModeSpec::nov(0, 200.0 * UM).unwrap();
        assert!(matches!(oam_overlap_amplitude(&p, &z, &z, &q), Err(Error::Precondition(_))));
        assert!(RadialQuadrature::new(1024, 5.0).is_err());
        assert!(RadialQuadrature::new(2048, 4.0).is_err());
    }

    #[test]
    fn gaussian_pump_conjugation_symmetry() {
        let q = RadialQuadrature::default();
        let p = ModeSpec::gaussian(300.0 * UM).unwrap();
        for l in 1..6 {
            let a = ModeSpec::nov(l, 250.0 * UM).unwrap();
            let b = ModeSpec::nov(-l, 250.0 * UM).unwrap();
            let c1 = oam_overlap_amplitude(&p, &a, &b, &q).unwrap();
            let c2 = oam_overlap_amplitude(&p, &b, &a, &q).unwrap();
            assert_relative_eq!(c1.norm(), c2.norm(), max_relative = 1e-13);
        }
    }

    #[test]
    fn gaussian_overlap_matches_closed_form() {
        // Three Gaussians: C = 2π N_p N_s N_i ∫ r e^{-r²(1/wp² + 2/w²)} dr.
        let (wp, w) = (300.0 * UM, 200.0 * UM);
        let n = |w: f64| (2.0 / (PI * w * w)).sqrt();
        let expected = 2.0 * PI * n(wp) * n(w) * n(w) / (2.0 * (1.0 / (wp * wp) + 2.0 / (w * w)));
        let g = ModeSpec::nov(0, w).unwrap();
        let c = oam_overlap_amplitude(&ModeSpec::gaussian(wp).unwrap(), &g, &g, &RadialQuadrature::default()).unwrap();
        assert_relative_eq!(c.re, expected, max_relative = 1e-12);
        assert!(c.im.abs() < 1e-12 * expected);
    }

    #[test]
    fn cartesian_route_agrees_with_radial_route() {
        let p = pov(1);
        let proj = ProjectionSpec::bg(0, 150.0 * UM, 2.0e4).unwrap();
        let cq = CartesianQuadrature { n: 256, half_width: 5.0 * 160.0 * UM };
        let rq = RadialQuadrature::default();
        for li in -1..=2 {
            let s = proj.with_ell(1 - li).mode().unwrap();
            let i = proj.with_ell(li).mode().unwrap();
            let fast = oam_overlap_amplitude(&p, &s, &i, &rq).unwrap();
            let slow = oam_overlap_cartesian(&p, &s, &i, &cq).unwrap();
            assert!((fast - slow).norm() < 1e-6 * fast.norm().max(1e-30), "{li}: {fast} vs {slow}");
        }
        let off = oam_overlap_cartesian(&p, &proj.with_ell(1).mode().unwrap(), &proj.with_ell(1).mode().unwrap(), &cq)
            .unwrap();
        assert!(off.norm() < 1e-10);
    }

    #[test]
    fn spectrum_symmetries() {
        let proj = ProjectionSpec::lg(0, 150.0 * UM).unwrap();
        let q = RadialQuadrature::default();
        let s0 = oam_spectrum(&pov(0), &proj, 12, &q).unwrap();
        assert_relative_eq!(s0.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for l in 1..=12 {
            assert!((s0.prob(l).unwrap() - s0.prob(-l).unwrap()).abs() < 1e-9);
        }
        let s1 = oam_spectrum(&pov(1), &proj, 12, &q).unwrap();
        for l in -11..=12 {
            assert!((s1.prob(l).unwrap() - s1.prob(1 - l).unwrap()).abs() < 1e-9);
        }
        let peak = s1.ells[s1.probs.iter().enumerate().fold(0, |b, (i, p)| if *p > s1.probs[b] { i } else { b })];
        assert!(peak == 0 || peak == 1);
    }

    #[test]
    fn narrow_window_is_a_truncation_error() {
        let proj = ProjectionSpec::bg(0, 200.0 * UM, 4.0 / (200.0 * UM)).unwrap();
        let pump = ModeSpec::pov(0, 400.0 * UM, 20.0 * UM, 1e-3).unwrap().normalized().unwrap();
        assert!(matches!(oam_spectrum(&pump, &proj, 10, &RadialQuadrature::default()), Err(Error::Truncation(_))));
        assert!(matches!(oam_spectrum(&pov(0), &proj, 9, &RadialQuadrature::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn schmidt_number_examples() {
        let one = OamSpectrum::from_weights(vec![-1, 0, 1], vec![0.0, 3.0, 0.0]).unwrap();
        assert_eq!(schmidt_number(&one), 1.0);
        let flat = OamSpectrum::from_weights((0..7).collect(), vec![2.0; 7]).unwrap();
        assert_relative_eq!(schmidt_number(&flat), 7.0, max_relative = 1e-14);
        assert!(OamSpectrum::from_weights(vec![0], vec![0.0]).is_err());
    }

    proptest! {
        #[test]
        fn schmidt_number_is_scale_free(w in prop::collection::vec(0.0f64..1.0, 1..20), s in 1e-6f64..1e6) {
            prop_assume!(w.iter().any(|&x| x > 1e-3));
            let ells: Vec<i32> = (0..w.len() as i32).collect();
            let a = OamSpectrum::from_weights(ells.clone(), w.clone()).unwrap();
            let b = OamSpectrum::from_weights(ells, w.iter().map(|x| x * s).collect()).unwrap();
            prop_assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let (ka, kb) = (schmidt_number(&a), schmidt_number(&b));
            prop_assert!(ka >= 1.0 - 1e-12);
            prop_assert!((ka - kb).abs() < 1e-9 * ka);
        }

        #[test]
        fn exchange_symmetry(ls in -4i32..5, lp in 0i32..3) {
            let q = RadialQuadrature::default();
            let pump = pov(lp);
            let proj = ProjectionSpec::bg(0, 150.0 * UM, 2.5e4).unwrap();
            let a = proj.with_ell(ls).mode().unwrap();
            let b = proj.with_ell(lp - ls).mode().unwrap();
            let c1 = oam_overlap_amplitude(&pump, &a, &b, &q).unwrap();
            let c2 = oam_overlap_amplitude(&pump, &b, &a, &q).unwrap();
            prop_assert!((c1 - c2).norm() <= 1e-10 * c1.norm().max(1e-300));
        }
    }
}

//! Helical mode families: Gaussian, normal vortex (NOV), Bessel-Gauss (BG)
//! and perfect optical vortex (POV).

mod hologram;

pub use hologram::{synthesize_hologram, Hologram};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::CompositeGaussLegendre;
use crate::specialfn::{bessel_i, ive, jn, log_factorial};

/// Largest supported |ℓ|.
pub const MAX_ELL: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeFamily {
    Gaussian,
    Nov,
    BesselGauss,
    Pov,
}

impl ModeFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModeFamily::Gaussian => "gaussian",
            ModeFamily::Nov => "nov",
            ModeFamily::BesselGauss => "bg",
            ModeFamily::Pov => "pov",
        }
    }
}

impl fmt::Display for ModeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(ModeFamily::Gaussian),
            "nov" | "lg" => Ok(ModeFamily::Nov),
            "bg" | "bessel-gauss" | "bessel_gauss" => Ok(ModeFamily::BesselGauss),
            "pov" => Ok(ModeFamily::Pov),
            other => Err(Error::InvalidSpec(format!(
                "unknown mode family '{other}' (expected gaussian, nov, bg or pov)"
            ))),
        }
    }
}

/// Optional geometric parameters, validated against a family by [`ModeSpec::from_parts`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModeParams {
    pub w: Option<f64>,
    pub k_r: Option<f64>,
    pub r_r: Option<f64>,
    pub w_o: Option<f64>,
    pub w_g: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Profile {
    Gaussian { w: f64 },
    Nov { w: f64 },
    BesselGauss { w: f64, k_r: f64 },
    Pov { r_r: f64, w_o: f64, w_g: f64 },
}

/// Analytic description of one helical mode. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    profile: Profile,
    ell: i32,
    scale: f64,
    normalized: bool,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidSpec(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_ell(ell: i32) -> Result<i32> {
    if ell.abs() > MAX_ELL {
        return Err(Error::InvalidSpec(format!("|ell| must not exceed {MAX_ELL}, got {ell}")));
    }
    Ok(ell)
}

impl ModeSpec {
    /// Fundamental Gaussian of waist `w`, unit power.
    pub fn gaussian(w: f64) -> Result<Self> {
        Ok(Self {
            profile: Profile::Gaussian { w: positive("w", w)? },
            ell: 0,
            scale: 1.0,
            normalized: true,
        })
    }

    /// Normal vortex `r^|ℓ| e^{-r²/w²} e^{iℓθ}`, unit power.
    pub fn nov(ell: i32, w: f64) -> Result<Self> {
        Ok(Self {
            profile: Profile::Nov { w: positive("w", w)? },
            ell: check_ell(ell)?,
            scale: 1.0,
            normalized: true,
        })
    }

    /// Bessel-Gauss mode `J_ℓ(k_r r) e^{-r²/w²} e^{iℓθ}` carrying the closed-form
    /// prefactor `√(2e^{1/4}/(πw² I_ℓ(1/4)))`. Not normalized until [`ModeSpec::normalized`].
    pub fn bessel_gauss(ell: i32, w: f64, k_r: f64) -> Result<Self> {
        Ok(Self {
            profile: Profile::BesselGauss { w: positive("w", w)?, k_r: positive("k_r", k_r)? },
            ell: check_ell(ell)?,
            scale: 1.0,
            normalized: false,
        })
    }

    /// Perfect optical vortex of ring radius `r_r`, half ring width `w_o`,
    /// generated from a Gaussian of waist `w_g`.
    pub fn pov(ell: i32, r_r: f64, w_o: f64, w_g: f64) -> Result<Self> {
        Ok(Self {
            profile: Profile::Pov {
                r_r: positive("r_r", r_r)?,
                w_o: positive("w_o", w_o)?,
                w_g: positive("w_g", w_g)?,
            },
            ell: check_ell(ell)?,
            scale: 1.0,
            normalized: false,
        })
    }

    /// POV produced by focusing a BG beam through the lens described by `optics`.
    pub fn pov_from_optics(ell: i32, optics: &PovOptics) -> Result<Self> {
        let (w_o, r_r) = pov_params_from_optics(optics);
        Self::pov(ell, r_r, w_o, optics.w_g)
    }

    /// Builds a spec from loose parameters, rejecting any that do not belong to `family`.
    pub fn from_parts(family: ModeFamily, ell: i32, p: ModeParams) -> Result<Self> {
        let allowed: &[&str] = match family {
            ModeFamily::Gaussian | ModeFamily::Nov => &["w"],
            ModeFamily::BesselGauss => &["w", "k_r"],
            ModeFamily::Pov => &["r_r", "w_o", "w_g"],
        };
        let present = [("w", p.w), ("k_r", p.k_r), ("r_r", p.r_r), ("w_o", p.w_o), ("w_g", p.w_g)];
        for (name, v) in present {
            if v.is_some() && !allowed.contains(&name) {
                return Err(Error::InvalidSpec(format!("{name} is not a parameter of the {family} family")));
            }
        }
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::InvalidSpec(format!("{family} mode requires {name}")))
        };
        match family {
            ModeFamily::Gaussian => {
                if ell != 0 {
                    return Err(Error::InvalidSpec(format!("gaussian mode must have ell = 0, got {ell}")));
                }
                Self::gaussian(need("w", p.w)?)
            }
            ModeFamily::Nov => Self::nov(ell, need("w", p.w)?),
            ModeFamily::BesselGauss => Self::bessel_gauss(ell, need("w", p.w)?, need("k_r", p.k_r)?),
            ModeFamily::Pov => {
                Self::pov(ell, need("r_r", p.r_r)?, need("w_o", p.w_o)?, need("w_g", p.w_g)?)
            }
        }
    }

    pub fn family(&self) -> ModeFamily {
        match self.profile {
            Profile::Gaussian { .. } => ModeFamily::Gaussian,
            Profile::Nov { .. } => ModeFamily::Nov,
            Profile::BesselGauss { .. } => ModeFamily::BesselGauss,
            Profile::Pov { .. } => ModeFamily::Pov,
        }
    }

    pub fn ell(&self) -> i32 {
        self.ell
    }

    pub fn w(&self) -> Option<f64> {
        match self.profile {
            Profile::Gaussian { w } | Profile::Nov { w } | Profile::BesselGauss { w, .. } => Some(w),
            Profile::Pov { .. } => None,
        }
    }

    pub fn k_r(&self) -> Option<f64> {
        match self.profile {
            Profile::BesselGauss { k_r, .. } => Some(k_r),
            _ => None,
        }
    }

    pub fn r_r(&self) -> Option<f64> {
        match self.profile {
            Profile::Pov { r_r, .. } => Some(r_r),
            _ => None,
        }
    }

    pub fn w_o(&self) -> Option<f64> {
        match self.profile {
            Profile::Pov { w_o, .. } => Some(w_o),
            _ => None,
        }
    }

    pub fn w_g(&self) -> Option<f64> {
        match self.profile {
            Profile::Pov { w_g, .. } => Some(w_g),
            _ => None,
        }
    }

    /// Multiplier applied on top of the closed-form expression.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// True when the mode carries unit power `2π∫|E|²r dr = 1`.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Same mode with charge `ell`.
    pub fn with_ell(&self, ell: i32) -> Result<Self> {
        let mut s = *self;
        if matches!(self.profile, Profile::Gaussian { .. }) && ell != 0 {
            return Err(Error::InvalidSpec("gaussian mode must have ell = 0".into()));
        }
        s.ell = check_ell(ell)?;
        if !matches!(self.profile, Profile::Gaussian { .. } | Profile::Nov { .. }) {
            s.scale = 1.0;
            s.normalized = false;
        }
        Ok(s)
    }

    /// Radius of the outermost intensity maximum, or the envelope width where
    /// the intensity peaks on axis.
    pub fn characteristic_radius(&self) -> f64 {
        match self.profile {
            Profile::Gaussian { w } | Profile::BesselGauss { w, .. } => w,
            Profile::Nov { w } => w * (self.ell.unsigned_abs() as f64 / 2.0).sqrt().max(1.0),
            Profile::Pov { r_r, w_o, .. } => r_r + w_o,
        }
    }

    /// Field on the θ = 0 half-line, `E(r, 0)`.
    pub fn radial(&self, r: f64) -> Complex64 {
        let l = self.ell.unsigned_abs();
        let v = match self.profile {
            Profile::Gaussian { w } => (2.0 / (PI * w * w)).sqrt() * (-(r * r) / (w * w)).exp(),
            Profile::Nov { w } => {
                if r == 0.0 {
                    if l == 0 {
                        (2.0 / (PI * w * w)).sqrt()
                    } else {
                        0.0
                    }
                } else {
                    let ln_c = 0.5 * ((l + 1) as f64 * 2f64.ln() - (PI * w * w).ln() - log_factorial(l));
                    (ln_c + l as f64 * (r / w).ln() - (r * r) / (w * w)).exp()
                }
            }
            Profile::BesselGauss { w, k_r } => {
                bg_prefactor(l, w) * jn(l as i32, k_r * r) * (-(r * r) / (w * w)).exp()
            }
            Profile::Pov { r_r, w_o, w_g } => {
                let d = r - r_r;
                let env = (w_g / w_o) * (-(d * d) / (w_o * w_o)).exp() * ive(l, 2.0 * r_r * r / (w_o * w_o));
                return pov_phase(self.ell) * (self.scale * env);
            }
        };
        Complex64::new(self.scale * v, 0.0)
    }

    /// Field at polar coordinates `(r, θ)`.
    pub fn eval(&self, r: f64, theta: f64) -> Complex64 {
        self.radial(r) * Complex64::from_polar(1.0, self.ell as f64 * theta)
    }

    /// Field at Cartesian coordinates.
    pub fn eval_xy(&self, x: f64, y: f64) -> Complex64 {
        let r = x.hypot(y);
        if self.ell == 0 {
            return self.radial(r);
        }
        self.eval(r, y.atan2(x))
    }

    /// Copy rescaled to unit power by [`normalize_numeric`].
    pub fn normalized(&self) -> Result<Self> {
        if self.normalized {
            return Ok(*self);
        }
        let s = normalize_numeric(self, 8.0 * self.characteristic_radius())?;
        Ok(Self { scale: self.scale * s, normalized: true, ..*self })
    }
}

fn bg_prefactor(l: u32, w: f64) -> f64 {
    let i = bessel_i(l as i32, 0.25).expect("I_l(1/4) is finite");
    (2.0 * 0.25f64.exp() / (PI * w * w * i)).sqrt()
}

/// `i^{ℓ-1}`.
fn pov_phase(ell: i32) -> Complex64 {
    match (ell - 1).rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Evaluates `spec` at `(r, θ)`.
pub fn eval_mode(spec: &ModeSpec, r: f64, theta: f64) -> Complex64 {
    spec.eval(r, theta)
}

/// Ring radius `w√(|ℓ|/2)` of a normal vortex.
pub fn nov_peak_radius(spec: &ModeSpec) -> Result<f64> {
    match spec.profile {
        Profile::Nov { w } if spec.ell != 0 => Ok(w * (spec.ell.unsigned_abs() as f64 / 2.0).sqrt()),
        Profile::Nov { .. } => Err(Error::Shape("an ell = 0 vortex has no ring".into())),
        _ => Err(Error::InvalidSpec(format!("expected a nov mode, got {}", spec.family()))),
    }
}

/// Fourier lens that turns a BG beam into a POV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PovOptics {
    pub f: f64,
    pub k: f64,
    pub w_g: f64,
    pub k_r: f64,
}

impl PovOptics {
    pub fn new(f: f64, k: f64, w_g: f64, k_r: f64) -> Result<Self> {
        positive("f", f)?;
        positive("k", k)?;
        positive("w_g", w_g)?;
        if !(k_r.is_finite() && k_r >= 0.0) {
            return Err(Error::InvalidSpec(format!("k_r must be non-negative, got {k_r}")));
        }
        Ok(Self { f, k, w_g, k_r })
    }

    /// Same as [`PovOptics::new`] with `k = 2π/λ`.
    pub fn from_wavelength(f: f64, wavelength: f64, w_g: f64, k_r: f64) -> Result<Self> {
        Self::new(f, 2.0 * PI / positive("wavelength", wavelength)?, w_g, k_r)
    }
}

/// `(w_o, r_r) = (2f/(k w_g), k_r f/k)`.
pub fn pov_params_from_optics(optics: &PovOptics) -> (f64, f64) {
    (2.0 * optics.f / (optics.k * optics.w_g), optics.k_r * optics.f / optics.k)
}

/// Factor `s` such that `2π∫₀^{r_max}|s E(r,0)|² r dr = 1`.
///
/// Uses composite Gauss-Legendre with at least 2048 nodes, doubling the
/// panel count until two successive estimates agree to 1e-12.
pub fn normalize_numeric(spec: &ModeSpec, r_max: f64) -> Result<f64> {
    let peak = spec.characteristic_radius();
    if !(r_max >= 5.0 * peak) {
        return Err(Error::Precondition(format!(
            "r_max = {r_max} must be at least 5x the mode radius {peak}"
        )));
    }
    let integrand = |r: f64| spec.radial(r).norm_sqr() * r;
    let mut panels = 32;
    let mut prev = CompositeGaussLegendre::new(panels, 64).integrate(0.0, r_max, integrand);
    loop {
        panels *= 2;
        let cur = CompositeGaussLegendre::new(panels, 64).integrate(0.0, r_max, integrand);
        if (cur - prev).abs() <= 1e-12 * cur.abs() {
            if !(cur > 0.0 && cur.is_finite()) {
                return Err(Error::Resolution("mode carries no power within r_max".into()));
            }
            return Ok(1.0 / (2.0 * PI * cur).sqrt());
        }
        if panels >= 4096 {
            return Err(Error::Resolution(format!(
                "radial quadrature did not converge ({prev} vs {cur}); the profile oscillates too fast"
            )));
        }
        prev = cur;
    }
}

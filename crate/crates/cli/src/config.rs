//! Flat `key = value` run configuration with per-scenario schemas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use twistlab::fieldgrid::GridSpec;
use twistlab::modes::{ModeFamily, ModeSpec};
use twistlab::projection::{FiberSpec, ProjectionFamily, ProjectionSpec, RadialQuadrature};
use twistlab::spdc::{presets, CrystalSpec, MismatchModel, WavelengthTriple};

/// The seven front-end scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Scenario {
    ModesRender,
    Hologram,
    SpdcSpectrum,
    CoincidenceSweep,
    OamSpectrum,
    Bell,
    Validate,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::ModesRender,
        Scenario::Hologram,
        Scenario::SpdcSpectrum,
        Scenario::CoincidenceSweep,
        Scenario::OamSpectrum,
        Scenario::Bell,
        Scenario::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ModesRender => "modes-render",
            Scenario::Hologram => "hologram",
            Scenario::SpdcSpectrum => "spdc-spectrum",
            Scenario::CoincidenceSweep => "coincidence-sweep",
            Scenario::OamSpectrum => "oam-spectrum",
            Scenario::Bell => "bell",
            Scenario::Validate => "validate",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or(())
    }
}

/// One configuration problem, tied to the key (or line) that caused it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Unvalidated `key -> value` text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, Vec<ConfigIssue>> {
        let mut entries = BTreeMap::new();
        let mut issues = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                issues.push(ConfigIssue::new(format!("line {}", n + 1), format!("expected `key = value`, got '{body}'")));
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                issues.push(ConfigIssue::new(format!("line {}", n + 1), format!("expected `key = value`, got '{body}'")));
            } else if entries.insert(k.to_string(), v.to_string()).is_some() {
                issues.push(ConfigIssue::new(k, format!("set twice (line {})", n + 1)));
            }
        }
        if issues.is_empty() {
            Ok(Self { entries })
        } else {
            Err(issues)
        }
    }

    pub fn load(path: &Path) -> Result<Self, Vec<ConfigIssue>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![ConfigIssue::new("config", format!("cannot read {}: {e}", path.display()))])?;
        Self::parse(&text)
    }

    /// Sets `key`, replacing any value from the file.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.trim().to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// A pump beam as configured, before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpSet {
    pub specs: Vec<ModeSpec>,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSetup {
    pub crystal: CrystalSpec,
    pub wavelengths: WavelengthTriple,
}

/// Validated, scenario-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    ModesRender {
        pumps: PumpSet,
        grid: GridSpec,
    },
    Hologram {
        ells: Vec<i32>,
        grating_period: f64,
        k_r: f64,
        grid: GridSpec,
    },
    SpdcSpectrum {
        pumps: PumpSet,
        setup: CrystalSetup,
        pump_grid: GridSpec,
        quad_n: usize,
        signal_n: usize,
        signal_half_width: Option<f64>,
        radial_bins: usize,
    },
    CoincidenceSweep {
        pumps: PumpSet,
        setup: CrystalSetup,
        pump_grid: GridSpec,
        idler_fiber: FiberSpec,
        signal_fiber: FiberSpec,
        quad_n: usize,
    },
    OamSpectrum {
        pumps: PumpSet,
        projections: Vec<ProjectionSpec>,
        ell_max: i32,
        radial: RadialQuadrature,
    },
    Bell {
        pump: PumpSet,
        projection: ProjectionSpec,
        ell_s: i32,
        ell_i: i32,
        asymmetry: f64,
        noise: f64,
        radial: RadialQuadrature,
    },
    Validate,
}

/// Fully validated configuration together with its resolved key set.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub plan: Plan,
    resolved: BTreeMap<String, String>,
}

impl RunConfig {
    /// Validates `raw` against the schema of `scenario`, reporting every problem at once.
    pub fn from_raw(scenario: Scenario, raw: &RawConfig) -> Result<Self, Vec<ConfigIssue>> {
        let mut r = Reader::new(raw);
        if let Some(s) = r.take("scenario") {
            if s != scenario.name() {
                r.issue("scenario", format!("file declares '{s}' but '{scenario}' was requested"));
            }
        }
        let plan = match scenario {
            Scenario::ModesRender => modes_render(&mut r),
            Scenario::Hologram => hologram(&mut r),
            Scenario::SpdcSpectrum => spdc_spectrum(&mut r),
            Scenario::CoincidenceSweep => coincidence_sweep(&mut r),
            Scenario::OamSpectrum => oam_spectrum(&mut r),
            Scenario::Bell => bell(&mut r),
            Scenario::Validate => Some(Plan::Validate),
        };
        let resolved = r.finish(scenario)?;
        let plan = plan.expect("a plan exists whenever no issue was raised");
        Ok(Self { scenario, plan, resolved })
    }

    /// Resolved configuration, defaults included, one `key = value` per line in key order.
    pub fn canonical_text(&self) -> String {
        let mut s = format!("scenario = {}\n", self.scenario);
        for (k, v) in &self.resolved {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// SHA-256 of [`RunConfig::canonical_text`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn resolved(&self, key: &str) -> Option<&str> {
        self.resolved.get(key).map(String::as_str)
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
    issues: Vec<ConfigIssue>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Self { raw, used: BTreeSet::new(), resolved: BTreeMap::new(), issues: Vec::new() }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.raw.get(key).map(str::to_string)
    }

    fn present(&self, key: &str) -> bool {
        self.raw.get(key).is_some()
    }

    fn issue(&mut self, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue::new(key, message));
    }

    fn clean(&self) -> bool {
        self.issues.is_empty()
    }

    fn value<T>(&mut self, key: &str, default: Option<&str>, expected: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let text = match (self.take(key), default) {
            (Some(t), _) => t,
            (None, Some(d)) => d.to_string(),
            (None, None) => {
                self.issue(key, format!("missing; expected {expected}"));
                return None;
            }
        };
        match parse(&text) {
            Some(v) => {
                self.resolved.insert(key.to_string(), text);
                Some(v)
            }
            None => {
                self.issue(key, format!("got '{text}', expected {expected}"));
                None
            }
        }
    }

    fn positive(&mut self, key: &str, default: Option<&str>) -> Option<f64> {
        self.value(key, default, "a positive number in SI units", |s| parse_f64(s).filter(|v| *v > 0.0))
    }

    fn non_negative(&mut self, key: &str, default: Option<&str>) -> Option<f64> {
        self.value(key, default, "a non-negative number in SI units", |s| parse_f64(s).filter(|v| *v >= 0.0))
    }

    fn count(&mut self, key: &str, default: &str, min: usize) -> Option<usize> {
        self.value(key, Some(default), &format!("an integer >= {min}"), |s| s.parse::<usize>().ok().filter(|v| *v >= min))
    }

    fn int(&mut self, key: &str, default: Option<&str>) -> Option<i32> {
        self.value(key, default, "an integer", |s| s.parse::<i32>().ok())
    }

    fn ints(&mut self, key: &str, default: Option<&str>) -> Option<Vec<i32>> {
        self.value(key, default, "a list of integers such as `1, 5, 10` or `1..25`", parse_int_list)
    }

    fn words<T: FromStr>(&mut self, key: &str, default: Option<&str>, expected: &str) -> Option<Vec<T>> {
        self.value(key, default, expected, |s| {
            let items: Option<Vec<T>> = s.split(',').map(|w| w.trim().parse::<T>().ok()).collect();
            items.filter(|v| !v.is_empty())
        })
    }

    fn word<T: FromStr>(&mut self, key: &str, default: Option<&str>, expected: &str) -> Option<T> {
        self.value(key, default, expected, |s| s.parse::<T>().ok())
    }

    fn forbid(&mut self, key: &str, reason: &str) {
        if self.take(key).is_some() {
            self.issue(key, reason.to_string());
        }
    }

    fn finish(mut self, scenario: Scenario) -> Result<BTreeMap<String, String>, Vec<ConfigIssue>> {
        let unknown: Vec<String> =
            self.raw.entries.keys().filter(|k| !self.used.contains(*k)).cloned().collect();
        for k in unknown {
            self.issue(&k, format!("unknown key for scenario {scenario}"));
        }
        if self.issues.is_empty() {
            Ok(self.resolved)
        } else {
            Err(self.issues)
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_int_list(s: &str) -> Option<Vec<i32>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if let Some((a, b)) = item.split_once("..") {
            let (a, b) = (a.trim().parse::<i32>().ok()?, b.trim().parse::<i32>().ok()?);
            if a > b {
                return None;
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse::<i32>().ok()?);
        }
    }
    Some(out)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "on" => Some(true),
        "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

const FAMILY_FORM: &str = "a comma-separated list of gaussian, nov, bg, pov";

/// Reads pump keys and builds one spec per (family, ℓ), checking that each fits `grid`.
fn pumps(r: &mut Reader, default_family: Option<&str>, grid: Option<(GridSpec, &str)>) -> Option<PumpSet> {
    let families: Option<Vec<ModeFamily>> = r.words("family", default_family, FAMILY_FORM);
    let ells = r.ints("ell", Some("1"));
    let normalize = r.value("normalize", Some("true"), "true or false", parse_bool);
    let fs = families.clone().unwrap_or_default();
    let needs_w = fs.iter().any(|f| *f != ModeFamily::Pov);
    let needs_bg = fs.contains(&ModeFamily::BesselGauss);
    let needs_pov = fs.contains(&ModeFamily::Pov);
    let pick = |r: &mut Reader, key: &str, default: &str, need: bool| {
        if need || r.present(key) {
            r.positive(key, Some(default))
        } else {
            None
        }
    };
    let w = pick(r, "w", "50e-6", needs_w);
    let k_r = pick(r, "k_r", "4e4", needs_bg);
    let r_r = pick(r, "r_r", "200e-6", needs_pov);
    let w_o = pick(r, "w_o", "20e-6", needs_pov);
    let w_g = pick(r, "w_g", "1e-3", needs_pov);
    if !r.clean() {
        return None;
    }
    let (families, ells, normalize) = (families?, ells?, normalize?);
    let mut specs = Vec::new();
    for &family in &families {
        let family_ells: Vec<i32> = if family == ModeFamily::Gaussian { vec![0] } else { ells.clone() };
        for ell in family_ells {
            let spec = match family {
                ModeFamily::Gaussian => ModeSpec::gaussian(w?),
                ModeFamily::Nov => ModeSpec::nov(ell, w?),
                ModeFamily::BesselGauss => ModeSpec::bessel_gauss(ell, w?, k_r?),
                ModeFamily::Pov => ModeSpec::pov(ell, r_r?, w_o?, w_g?),
            };
            match spec {
                Ok(s) => {
                    if let Some((g, key)) = grid {
                        let limit = g.n() as f64 * g.dx() / 4.0;
                        if s.characteristic_radius() > limit {
                            r.issue(
                                key,
                                format!(
                                    "{family} ell = {ell} has radius {:.4e} m but the grid only fits n*dx/4 = {limit:.4e} m",
                                    s.characteristic_radius()
                                ),
                            );
                        }
                    }
                    if !specs.contains(&s) {
                        specs.push(s);
                    }
                }
                Err(e) => r.issue("ell", format!("{family} ell = {ell}: {e}")),
            }
        }
    }
    r.clean().then_some(PumpSet { specs, normalize })
}

fn grid(r: &mut Reader, n_key: &str, dx_key: &str, n_default: &str, dx_default: &str) -> Option<GridSpec> {
    let n = r.count(n_key, n_default, 16);
    let dx = r.positive(dx_key, Some(dx_default));
    let (n, dx) = (n?, dx?);
    match GridSpec::new(n, dx) {
        Ok(g) => Some(g),
        Err(e) => {
            r.issue(n_key, e.to_string());
            None
        }
    }
}

fn modes_render(r: &mut Reader) -> Option<Plan> {
    let g = grid(r, "grid_n", "grid_dx", "1024", "2e-6");
    let pumps = pumps(r, Some("nov"), g.map(|g| (g, "grid_dx")))?;
    Some(Plan::ModesRender { pumps, grid: g? })
}

fn hologram(r: &mut Reader) -> Option<Plan> {
    let g = grid(r, "grid_n", "grid_dx", "1024", "8e-6");
    let ells = r.ints("ell", Some("1"));
    let period = r.positive("grating_period", Some("64e-6"));
    let k_r = r.non_negative("k_r", Some("0"));
    let (g, period, k_r) = (g?, period?, k_r?);
    if period <= 2.0 * g.dx() {
        r.issue("grating_period", format!("must exceed two pixels ({:.4e} m)", 2.0 * g.dx()));
    }
    if k_r * g.dx() >= std::f64::consts::PI {
        r.issue("k_r", format!("k_r * grid_dx must stay below pi, got {:.3}", k_r * g.dx()));
    }
    let ells = ells?;
    r.clean().then_some(Plan::Hologram { ells, grating_period: period, k_r, grid: g })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CrystalKind {
    BboLike,
    PpktpLike,
    Custom,
}

impl FromStr for CrystalKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "bbo_like" => Ok(CrystalKind::BboLike),
            "ppktp_like" => Ok(CrystalKind::PpktpLike),
            "custom" => Ok(CrystalKind::Custom),
            _ => Err(()),
        }
    }
}

enum Poling {
    None,
    Solve,
    Period(f64),
}

fn crystal(r: &mut Reader) -> Option<CrystalSetup> {
    let kind: Option<CrystalKind> = r.word("crystal", Some("bbo_like"), "bbo_like, ppktp_like or custom");
    let pump_wl = r.positive("pump_wavelength", Some("405e-9"));
    let signal_wl = r.value("signal_wavelength", Some("degenerate"), "a positive number or `degenerate`", |s| {
        if s == "degenerate" {
            Some(None)
        } else {
            parse_f64(s).filter(|v| *v > 0.0).map(Some)
        }
    });
    let length = if r.present("crystal_length") { r.positive("crystal_length", None) } else { None };
    let mismatch = r.value("mismatch", Some("exact"), "exact or paraxial", |s| match s {
        "exact" => Some(MismatchModel::Exact),
        "paraxial" => Some(MismatchModel::Paraxial),
        _ => None,
    });
    let custom = kind == Some(CrystalKind::Custom);
    let (mut n_p, mut n_s, mut n_i, mut poling) = (None, None, None, None);
    if custom {
        let index = |r: &mut Reader, key: &str| r.value(key, None, "a refractive index >= 1", |s| parse_f64(s).filter(|v| *v >= 1.0));
        n_p = index(r, "n_p");
        n_s = index(r, "n_s");
        n_i = index(r, "n_i");
        poling = r.value("poling_period", Some("none"), "a positive length, `none` or `solve`", |s| match s {
            "none" => Some(Poling::None),
            "solve" => Some(Poling::Solve),
            _ => parse_f64(s).filter(|v| *v > 0.0).map(Poling::Period),
        });
    } else {
        for key in ["n_p", "n_s", "n_i", "poling_period"] {
            r.forbid(key, "only valid with crystal = custom");
        }
    }
    if !r.clean() {
        return None;
    }
    let (kind, pump_wl, signal_wl, mismatch) = (kind?, pump_wl?, signal_wl?, mismatch?);
    let wavelengths = match signal_wl {
        None => WavelengthTriple::degenerate(pump_wl),
        Some(s) if s > pump_wl => WavelengthTriple::new(pump_wl, s, 1.0 / (1.0 / pump_wl - 1.0 / s)),
        Some(_) => {
            r.issue("signal_wavelength", "must be longer than pump_wavelength");
            return None;
        }
    };
    let wavelengths = match wavelengths {
        Ok(w) => w,
        Err(e) => {
            r.issue("signal_wavelength", e.to_string());
            return None;
        }
    };
    let built = match kind {
        CrystalKind::BboLike => {
            let (c, _) = presets::bbo_like();
            CrystalSpec::new(length.unwrap_or(c.length), c.n_p, c.n_s, c.n_i, None, mismatch)
        }
        CrystalKind::PpktpLike => {
            let (c, _) = presets::ppktp_like();
            CrystalSpec::new(length.unwrap_or(c.length), c.n_p, c.n_s, c.n_i, None, mismatch)
                .and_then(|c| c.with_solved_poling(&wavelengths))
        }
        CrystalKind::Custom => {
            let base = CrystalSpec::new(length.unwrap_or(1e-3), n_p?, n_s?, n_i?, None, mismatch);
            match poling? {
                Poling::None => base,
                Poling::Solve => base.and_then(|c| c.with_solved_poling(&wavelengths)),
                Poling::Period(p) => base.map(|c| CrystalSpec { poling_period: Some(p), ..c }),
            }
        }
    };
    match built {
        Ok(crystal) => Some(CrystalSetup { crystal, wavelengths }),
        Err(e) => {
            r.issue("crystal", e.to_string());
            None
        }
    }
}

fn spdc_spectrum(r: &mut Reader) -> Option<Plan> {
    let setup = crystal(r);
    let pump_grid = grid(r, "pump_grid_n", "pump_grid_dx", "1024", "5e-6");
    let pumps = pumps(r, Some("gaussian"), pump_grid.map(|g| (g, "pump_grid_dx")));
    let quad_n = r.count("quad_n", "256", 8);
    let signal_n = r.count("signal_grid_n", "256", 16);
    let half_width = r.value("signal_half_width", Some("auto"), "a positive wavenumber in rad/m or `auto`", |s| {
        if s == "auto" {
            Some(None)
        } else {
            parse_f64(s).filter(|v| *v > 0.0).map(Some)
        }
    });
    let bins = r.count("radial_bins", "128", 64);
    if let (Some(n), Some(b)) = (signal_n, bins) {
        if b > n / 2 {
            r.issue("radial_bins", format!("at most signal_grid_n / 2 = {} bins fit the grid", n / 2));
        }
    }
    if !r.clean() {
        return None;
    }
    Some(Plan::SpdcSpectrum {
        pumps: pumps?,
        setup: setup?,
        pump_grid: pump_grid?,
        quad_n: quad_n?,
        signal_n: signal_n?,
        signal_half_width: half_width?,
        radial_bins: bins?,
    })
}

fn coincidence_sweep(r: &mut Reader) -> Option<Plan> {
    let setup = crystal(r);
    let pump_grid = grid(r, "pump_grid_n", "pump_grid_dx", "512", "10e-6");
    let pumps = pumps(r, Some("nov, pov"), pump_grid.map(|g| (g, "pump_grid_dx")));
    let mfd = r.positive("idler_mfd", Some("5e-6"));
    let focal = r.value("idler_coupler_focal", Some("2e-3"), "a positive focal length or `none`", |s| {
        if s == "none" {
            Some(None)
        } else {
            parse_f64(s).filter(|v| *v > 0.0).map(Some)
        }
    });
    let signal_kind = r.value("signal_fiber", Some("multimode"), "multimode or singlemode", |s| match s {
        "multimode" => Some(true),
        "singlemode" => Some(false),
        _ => None,
    });
    let signal_a = r.positive("signal_fiber_radius", Some("100e-6"));
    let quad_n = r.count("quad_n", "64", 8);
    if !r.clean() {
        return None;
    }
    let (setup, focal) = (setup?, focal?);
    let idler = FiberSpec::from_mfd(mfd?).and_then(|f| match focal {
        Some(fc) => f.through_coupler(setup.wavelengths.idler, fc),
        None => Ok(f),
    });
    let signal = if signal_kind? { FiberSpec::multi_mode(signal_a?) } else { FiberSpec::single_mode(signal_a?) };
    match (idler, signal) {
        (Ok(idler_fiber), Ok(signal_fiber)) => Some(Plan::CoincidenceSweep {
            pumps: pumps?,
            setup,
            pump_grid: pump_grid?,
            idler_fiber,
            signal_fiber,
            quad_n: quad_n?,
        }),
        (Err(e), _) => {
            r.issue("idler_mfd", e.to_string());
            None
        }
        (_, Err(e)) => {
            r.issue("signal_fiber_radius", e.to_string());
            None
        }
    }
}

fn projection_keys(r: &mut Reader, families: &[ProjectionFamily]) -> Option<(f64, f64)> {
    let w = r.positive("projection_w", Some("200e-6"));
    let k_r = if families.contains(&ProjectionFamily::Bg) || r.present("projection_k_r") {
        r.positive("projection_k_r", Some("1.75e4"))
    } else {
        Some(1.0)
    };
    Some((w?, k_r?))
}

fn make_projection(r: &mut Reader, family: ProjectionFamily, w: f64, k_r: f64) -> Option<ProjectionSpec> {
    let spec = match family {
        ProjectionFamily::Lg => ProjectionSpec::lg(0, w),
        ProjectionFamily::Bg => ProjectionSpec::bg(0, w, k_r),
    };
    match spec {
        Ok(s) => Some(s),
        Err(e) => {
            r.issue("projection", e.to_string());
            None
        }
    }
}

fn radial(r: &mut Reader) -> Option<RadialQuadrature> {
    let d = RadialQuadrature::default();
    let nodes = r.count("radial_nodes", &d.nodes.to_string(), d.nodes);
    let extent = r.value("radial_extent", Some("5"), "a number >= 5", |s| parse_f64(s).filter(|v| *v >= 5.0));
    match RadialQuadrature::new(nodes?, extent?) {
        Ok(q) => Some(q),
        Err(e) => {
            r.issue("radial_nodes", e.to_string());
            None
        }
    }
}

fn oam_spectrum(r: &mut Reader) -> Option<Plan> {
    let pumps = pumps(r, Some("pov"), None);
    let families: Option<Vec<ProjectionFamily>> = r.words("projection", Some("lg, bg"), "a comma-separated list of lg, bg");
    let keys = projection_keys(r, families.as_deref().unwrap_or(&[]));
    let ell_max = r.value("ell_max", Some("20"), "an integer >= 10", |s| s.parse::<i32>().ok().filter(|v| *v >= 10));
    let radial = radial(r);
    let (families, (w, k_r)) = (families?, keys?);
    let projections: Option<Vec<ProjectionSpec>> = families.iter().map(|f| make_projection(r, *f, w, k_r)).collect();
    if !r.clean() {
        return None;
    }
    Some(Plan::OamSpectrum { pumps: pumps?, projections: projections?, ell_max: ell_max?, radial: radial? })
}

fn bell(r: &mut Reader) -> Option<Plan> {
    let pump = pumps(r, Some("pov"), None);
    let family: Option<ProjectionFamily> = r.word("projection", Some("bg"), "lg or bg");
    let keys = projection_keys(r, family.as_slice());
    let ell_s = r.int("ell_s", None);
    let ell_i = r.int("ell_i", None);
    let asymmetry = r.positive("asymmetry", Some("1"));
    let noise = r.value("noise", Some("0"), "a number in [0, 1]", |s| parse_f64(s).filter(|v| (0.0..=1.0).contains(v)));
    let radial = radial(r);
    if let Some(p) = &pump {
        if p.specs.len() != 1 {
            r.issue("ell", "bell needs exactly one pump family and one ell");
        }
    }
    if let (Some(p), Some(a), Some(b)) = (&pump, ell_s, ell_i) {
        if a == b {
            r.issue("ell_i", "ell_s and ell_i must differ to span a two-qubit space");
        }
        if p.specs.len() == 1 && a + b != p.specs[0].ell() {
            r.issue("ell_i", format!("ell_s + ell_i must equal the pump ell {}", p.specs[0].ell()));
        }
    }
    let (family, (w, k_r)) = (family?, keys?);
    let projection = make_projection(r, family, w, k_r);
    if !r.clean() {
        return None;
    }
    Some(Plan::Bell {
        pump: pump?,
        projection: projection?,
        ell_s: ell_s?,
        ell_i: ell_i?,
        asymmetry: asymmetry?,
        noise: noise?,
        radial: radial?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(scenario: Scenario, text: &str) -> Result<RunConfig, Vec<ConfigIssue>> {
        RunConfig::from_raw(scenario, &RawConfig::parse(text)?)
    }

    fn keys(issues: &[ConfigIssue]) -> Vec<&str> {
        issues.iter().map(|i| i.key.as_str()).collect()
    }

    #[test]
    fn minimal_modes_render() {
        let c = parse(Scenario::ModesRender, "scenario = modes-render\nfamily = pov # ring\nell = 5\n").unwrap();
        let Plan::ModesRender { pumps, grid } = &c.plan else { panic!("wrong plan") };
        assert_eq!(pumps.specs.len(), 1);
        assert_eq!(pumps.specs[0].ell(), 5);
        assert_eq!(grid.n(), 1024);
        assert_eq!(c.resolved("r_r"), Some("200e-6"));
    }

    #[test]
    fn fractional_ell_names_the_key() {
        let e = parse(Scenario::ModesRender, "family = pov\nell = 5.5\n").unwrap_err();
        assert_eq!(keys(&e), ["ell"]);
        assert!(e[0].message.contains("integer"));
    }

    #[test]
    fn all_problems_are_reported_together() {
        let e = parse(Scenario::ModesRender, "family = nov\nell = x\nw = -1\nbogus = 3\n").unwrap_err();
        let k = keys(&e);
        assert!(k.contains(&"ell") && k.contains(&"w") && k.contains(&"bogus"), "{k:?}");
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        let e = RawConfig::parse("a = 1\njunk\na = 2\n").unwrap_err();
        assert_eq!(keys(&e), ["line 2", "a"]);
    }

    #[test]
    fn scenario_mismatch_is_an_error() {
        let e = parse(Scenario::Hologram, "scenario = bell\n").unwrap_err();
        assert_eq!(keys(&e), ["scenario"]);
    }

    #[test]
    fn flags_override_file() {
        let mut raw = RawConfig::parse("family = nov\nell = 1, 2\n").unwrap();
        raw.set("ell", "3..5");
        let c = RunConfig::from_raw(Scenario::ModesRender, &raw).unwrap();
        let Plan::ModesRender { pumps, .. } = &c.plan else { panic!("wrong plan") };
        let ells: Vec<i32> = pumps.specs.iter().map(|s| s.ell()).collect();
        assert_eq!(ells, [3, 4, 5]);
    }

    #[test]
    fn oversized_mode_is_a_grid_error() {
        let e = parse(Scenario::ModesRender, "family = pov\nr_r = 1e-3\ngrid_n = 256\n").unwrap_err();
        assert_eq!(keys(&e), ["grid_dx"]);
    }

    #[test]
    fn custom_crystal_keys_need_custom() {
        let e = parse(Scenario::SpdcSpectrum, "crystal = bbo_like\nn_p = 1.6\n").unwrap_err();
        assert_eq!(keys(&e), ["n_p"]);
        let c = parse(Scenario::SpdcSpectrum, "crystal = custom\nn_p = 1.7\nn_s = 1.66\nn_i = 1.66\n").unwrap();
        let Plan::SpdcSpectrum { setup, .. } = &c.plan else { panic!("wrong plan") };
        assert_eq!(setup.crystal.n_p, 1.7);
    }

    #[test]
    fn bell_checks_conservation() {
        let e = parse(Scenario::Bell, "ell = 1\nell_s = 2\nell_i = 1\n").unwrap_err();
        assert_eq!(keys(&e), ["ell_i"]);
        assert!(parse(Scenario::Bell, "ell = 1\nell_s = 2\nell_i = -1\n").is_ok());
    }

    #[test]
    fn canonical_text_is_order_independent() {
        let a = parse(Scenario::Hologram, "ell = 3\nk_r = 1e4\n").unwrap();
        let b = parse(Scenario::Hologram, "k_r = 1e4\n# note\nell = 3\n").unwrap();
        assert_eq!(a.canonical_text(), b.canonical_text());
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn int_lists() {
        assert_eq!(parse_int_list("1..3, 10"), Some(vec![1, 2, 3, 10]));
        assert_eq!(parse_int_list("-2..-1"), Some(vec![-2, -1]));
        assert_eq!(parse_int_list("3..1"), None);
        assert_eq!(parse_int_list("1.5"), None);
    }
}

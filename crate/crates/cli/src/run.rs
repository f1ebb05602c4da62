//! Scenario execution.

use std::fmt::Write as _;
use std::path::Path;

use twistlab::fieldgrid::{encode_pgm16, ring_radius, sample, sidecar_text, GridSpec};
use twistlab::modes::{synthesize_hologram, ModeFamily, ModeSpec};
use twistlab::projection::{
    bell_density_matrix, bell_target, fiber_rates, fidelity, oam_overlap_amplitude, oam_spectrum, schmidt_number,
    ArmCenters, MomentumQuadrature,
};
use twistlab::spdc::{signal_angular_spectrum, BiphotonKernel, IdlerQuadrature};
use twistlab::validate;

use crate::artifacts::{num, Artifacts};
use crate::config::{Plan, PumpSet, RunConfig};
use crate::error::CliError;

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<String>,
    pub report: String,
}

/// Executes `config`, writing artifacts and `manifest.csv` into `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let scenario = config.scenario.name();
    let numeric = |source: twistlab::Error| CliError::Numeric { scenario, source };
    let mut files = Artifacts::create(out)?;
    let mut report = String::new();
    let mut failed = None;
    match &config.plan {
        Plan::ModesRender { pumps, grid } => modes_render(pumps, *grid, &mut files, &mut report, &numeric)?,
        Plan::Hologram { ells, grating_period, k_r, grid } => {
            for &ell in ells {
                let h = synthesize_hologram(ell, *grating_period, *k_r, *grid).map_err(numeric)?;
                let stem = format!("hologram_l{ell}");
                files.write(&format!("{stem}.pgm"), &h.to_pgm8())?;
                let side = format!("n = {}\ndx = {}\ngrating_period = {grating_period}\nk_r = {k_r}\n", grid.n(), grid.dx());
                files.write(&format!("{stem}.txt"), side.as_bytes())?;
                let _ = writeln!(report, "hologram ell = {ell}: {stem}.pgm");
            }
        }
        Plan::SpdcSpectrum { pumps, setup, pump_grid, quad_n, signal_n, signal_half_width, radial_bins } => {
            let mut summary = Vec::new();
            for spec in prepared(pumps).map_err(numeric)? {
                let kernel = BiphotonKernel::from_mode(&spec, *pump_grid, setup.crystal, setup.wavelengths).map_err(numeric)?;
                let oracle = kernel.phase_matching_ring_radius();
                let hw = match signal_half_width {
                    Some(h) => *h,
                    None if oracle > 0.0 => 1.5 * oracle,
                    None => {
                        return Err(numeric(twistlab::Error::Precondition(
                            "no emission ring for this crystal; set signal_half_width explicitly".into(),
                        )))
                    }
                };
                let grid = GridSpec::new(*signal_n, hw / (*signal_n / 2) as f64).map_err(numeric)?;
                let quad = IdlerQuadrature::covering(&kernel, *quad_n).map_err(numeric)?;
                let spectrum = signal_angular_spectrum(&kernel, grid, &quad).map_err(numeric)?;
                let profile = spectrum.radial_profile(*radial_bins).map_err(numeric)?;
                let tag = tag(&spec);
                let field = spectrum.as_field();
                files.write(&format!("spectrum_{tag}.pgm"), &encode_pgm16(&spectrum.values))?;
                files.write(&format!("spectrum_{tag}.txt"), sidecar_text(&field).as_bytes())?;
                let rows: Vec<Vec<String>> =
                    profile.radii.iter().zip(&profile.intensity).map(|(r, v)| vec![num(*r), num(*v)]).collect();
                files.csv(&format!("radial_{tag}.csv"), &["r_k[rad/m]", "intensity[arb]"], &rows)?;
                let peak = profile.peak_radius().ok();
                let fwhm = profile.fwhm().ok();
                let _ = writeln!(
                    report,
                    "{tag}: ring oracle {} rad/m, peak {} rad/m, fwhm {} rad/m",
                    num(oracle),
                    opt(peak),
                    opt(fwhm)
                );
                summary.push(vec![
                    spec.family().to_string(),
                    spec.ell().to_string(),
                    num(oracle),
                    opt(peak),
                    opt(fwhm),
                    num(spectrum.total()),
                ]);
                eprintln!("spdc-spectrum: {tag} done");
            }
            files.csv(
                "spectrum_summary.csv",
                &["pump_family", "ell", "oracle_ring_radius[rad/m]", "peak_radius[rad/m]", "fwhm[rad/m]", "total[arb]"],
                &summary,
            )?;
        }
        Plan::CoincidenceSweep { pumps, setup, pump_grid, idler_fiber, signal_fiber, quad_n } => {
            let mut specs = prepared(pumps).map_err(numeric)?;
            specs.sort_by_key(|s| s.ell());
            let mut rows = Vec::new();
            for spec in specs {
                let kernel = BiphotonKernel::from_mode(&spec, *pump_grid, setup.crystal, setup.wavelengths).map_err(numeric)?;
                let quad = MomentumQuadrature::auto(&kernel, signal_fiber, idler_fiber, *quad_n).map_err(numeric)?;
                let rates = fiber_rates(&kernel, signal_fiber, idler_fiber, ArmCenters::collinear(), &quad).map_err(numeric)?;
                let eta = rates.heralding_efficiency().map_err(numeric)?;
                let _ = writeln!(
                    report,
                    "{} ell = {}: C = {}, S_i = {}, eta = {eta:.4}",
                    spec.family(),
                    spec.ell(),
                    num(rates.coincidence),
                    num(rates.singles)
                );
                rows.push(vec![
                    spec.ell().to_string(),
                    spec.family().to_string(),
                    num(rates.coincidence),
                    num(rates.singles),
                    num(eta),
                ]);
                eprintln!("coincidence-sweep: {} done", tag(&spec));
            }
            files.csv(
                "coincidence.csv",
                &["ell", "pump_family", "coincidence_arb", "singles_idler_arb", "heralding_efficiency"],
                &rows,
            )?;
        }
        Plan::OamSpectrum { pumps, projections, ell_max, radial } => {
            let mut summary = Vec::new();
            let specs = prepared(pumps).map_err(numeric)?;
            for proj in projections {
                for spec in &specs {
                    let s = oam_spectrum(spec, proj, *ell_max, radial).map_err(numeric)?;
                    let k = schmidt_number(&s);
                    let rows: Vec<Vec<String>> =
                        s.ells.iter().zip(&s.probs).map(|(l, p)| vec![l.to_string(), num(*p)]).collect();
                    files.csv(&format!("oam_{}_{}.csv", proj.family, tag(spec)), &["ell_i", "prob"], &rows)?;
                    let _ = writeln!(report, "{} projection, {} pump: K = {k:.4}", proj.family, tag(spec));
                    summary.push(vec![proj.family.to_string(), spec.family().to_string(), spec.ell().to_string(), num(k)]);
                }
            }
            files.csv("schmidt.csv", &["projection", "pump_family", "ell_p", "schmidt_number"], &summary)?;
        }
        Plan::Bell { pump, projection, ell_s, ell_i, asymmetry, noise, radial } => {
            let spec = &prepared(pump).map_err(numeric)?[0];
            let mode = |l: i32| projection.with_ell(l).mode();
            let (a, b) = (mode(*ell_s).map_err(numeric)?, mode(*ell_i).map_err(numeric)?);
            let c1 = oam_overlap_amplitude(spec, &a, &b, radial).map_err(numeric)?;
            let c2 = oam_overlap_amplitude(spec, &b, &a, radial).map_err(numeric)? * *asymmetry;
            let rho = bell_density_matrix(c1, c2, *noise).map_err(numeric)?;
            let f = fidelity(&rho, &bell_target()).map_err(numeric)?;
            let label = format!("bell({ell_s},{ell_i})");
            files.write("density_matrix.txt", rho.to_text(f, &label).as_bytes())?;
            let ev = rho.eigenvalues();
            files.csv(
                "bell.csv",
                &["ell_s", "ell_i", "asymmetry", "noise", "c1_re", "c1_im", "c2_re", "c2_im", "min_eigenvalue", "fidelity"],
                &[vec![
                    ell_s.to_string(),
                    ell_i.to_string(),
                    num(*asymmetry),
                    num(*noise),
                    num(c1.re),
                    num(c1.im),
                    num(c2.re),
                    num(c2.im),
                    num(ev[0]),
                    num(f),
                ]],
            )?;
            let _ = writeln!(report, "{label}: fidelity {f:.12}");
        }
        Plan::Validate => {
            let results = validate::run_all();
            report.push_str(&validate::format_table(&results));
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| {
                    let status = if r.passed { "pass" } else { "fail" };
                    vec![r.module.to_string(), r.name.to_string(), status.to_string(), r.detail.clone()]
                })
                .collect();
            files.csv("validate.csv", &["module", "check", "status", "detail"], &rows)?;
            let n_failed = results.iter().filter(|r| !r.passed).count();
            if n_failed > 0 {
                failed = Some(CliError::Validation { failed: n_failed, total: results.len() });
            }
        }
    }
    files.write("config.cfg", config.canonical_text().as_bytes())?;
    let artifacts = files.finish(&config.hash())?;
    match failed {
        Some(e) => {
            print!("{report}");
            Err(e)
        }
        None => Ok(Outcome { artifacts, report }),
    }
}

fn prepared(pumps: &PumpSet) -> twistlab::Result<Vec<ModeSpec>> {
    pumps
        .specs
        .iter()
        .map(|s| if pumps.normalize && !s.is_normalized() { s.normalized() } else { Ok(*s) })
        .collect()
}

fn tag(spec: &ModeSpec) -> String {
    match spec.family() {
        ModeFamily::Gaussian => "gaussian".into(),
        f => format!("{f}_l{}", spec.ell()),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn modes_render(
    pumps: &PumpSet,
    grid: GridSpec,
    files: &mut Artifacts,
    report: &mut String,
    numeric: &dyn Fn(twistlab::Error) -> CliError,
) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut first: Vec<(ModeFamily, i32, f64)> = Vec::new();
    for spec in prepared(pumps).map_err(numeric)? {
        let field = sample(&spec, grid).map_err(numeric)?;
        let stem = tag(&spec);
        files.write(&format!("{stem}.pgm"), &encode_pgm16(&field.intensity()))?;
        files.write(&format!("{stem}.txt"), sidecar_text(&field).as_bytes())?;
        let ring = ring_radius(&field).ok();
        let (ratio, sqrt_ratio) = match (ring, first.iter().find(|(f, _, _)| *f == spec.family())) {
            (Some(r), Some(&(_, l0, r0))) => {
                (Some(r / r0), Some((spec.ell().unsigned_abs() as f64 / l0.unsigned_abs() as f64).sqrt()))
            }
            (Some(r), None) => {
                first.push((spec.family(), spec.ell(), r));
                (Some(1.0), Some(1.0))
            }
            (None, _) => (None, None),
        };
        let _ = writeln!(report, "{stem}: ring radius {} m, ratio {}", opt(ring), opt(ratio));
        rows.push(vec![spec.family().to_string(), spec.ell().to_string(), opt(ring), opt(ratio), opt(sqrt_ratio)]);
    }
    files.csv("ring_radius.csv", &["family", "ell", "ring_radius[m]", "ratio_to_first", "sqrt_ell_ratio"], &rows)
}

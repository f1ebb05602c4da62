use std::f64::consts::PI;
use std::path::Path;

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};
use crate::fieldgrid::GridSpec;

/// Blazed phase-only hologram sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Hologram {
    grid: GridSpec,
    phase: Array2<f64>,
}

impl Hologram {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Phase in `[0, 2π)`, rows along y.
    pub fn phase(&self) -> &Array2<f64> {
        &self.phase
    }

    /// 8-bit graymap, phase mapped linearly from `[0, 2π)` onto `[0, 255]`.
    pub fn to_pgm8(&self) -> Vec<u8> {
        let (rows, cols) = self.phase.dim();
        let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
        out.extend(self.phase.iter().map(|p| ((p / (2.0 * PI)) * 256.0).floor().clamp(0.0, 255.0) as u8));
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm8())?;
        Ok(())
    }
}

/// Fork grating `mod(ℓ atan2(y,x) + 2πx/Λ − k_r r, 2π)`.
///
/// With `k_r > 0` the first diffraction order is a Bessel-Gauss beam.
pub fn synthesize_hologram(ell: i32, grating_period: f64, k_r: f64, grid: GridSpec) -> Result<Hologram> {
    if !(grating_period > 2.0 * grid.dx()) {
        return Err(Error::Aliasing(format!(
            "grating period {grating_period:.4e} m must exceed two pixels ({:.4e} m)",
            2.0 * grid.dx()
        )));
    }
    if !(k_r >= 0.0 && k_r.is_finite()) {
        return Err(Error::Domain(format!("k_r must be non-negative, got {k_r}")));
    }
    if k_r * grid.dx() >= PI {
        return Err(Error::Aliasing(format!(
            "radial phase step k_r*dx = {:.3} rad exceeds pi",
            k_r * grid.dx()
        )));
    }
    let two_pi = 2.0 * PI;
    let mut phase = Array2::zeros((grid.n(), grid.n()));
    Zip::indexed(&mut phase).par_for_each(|(i, j), p| {
        let (x, y) = (grid.coord(j), grid.coord(i));
        let raw = ell as f64 * y.atan2(x) + two_pi * x / grating_period - k_r * x.hypot(y);
        let wrapped = raw.rem_euclid(two_pi);
        *p = if wrapped >= two_pi { 0.0 } else { wrapped };
    });
    Ok(Hologram { grid, phase })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgrid::{
        angular_spectrum, apply_phase_mask, radial_profile_of, sample, Plane, SampledField,
    };
    use crate::modes::ModeSpec;
    use num_complex::Complex64;

    const UM: f64 = 1e-6;

    #[test]
    fn plain_grating_is_constant_along_y() {
        let g = GridSpec::new(64, 8.0 * UM).unwrap();
        let h = synthesize_hologram(0, 80.0 * UM, 0.0, g).unwrap();
        for j in 0..64 {
            let col = h.phase().column(j);
            assert!(col.iter().all(|&p| p == col[0]));
        }
        assert!(h.phase().iter().all(|&p| (0.0..2.0 * PI).contains(&p)));
    }

    #[test]
    fn nyquist_is_enforced() {
        let g = GridSpec::new(64, 8.0 * UM).unwrap();
        assert!(matches!(synthesize_hologram(1, 16.0 * UM, 0.0, g), Err(Error::Aliasing(_))));
        assert!(synthesize_hologram(1, 16.1 * UM, 0.0, g).is_ok());
    }

    fn wraps_along_row(h: &Hologram, i: usize) -> usize {
        let row = h.phase().row(i);
        row.windows(2).into_iter().filter(|w| w[0] - w[1] > PI).count()
    }

    #[test]
    fn fork_adds_one_fringe() {
        let g = GridSpec::new(256, 4.0 * UM).unwrap();
        let h = synthesize_hologram(1, 40.0 * UM, 0.0, g).unwrap();
        let above = wraps_along_row(&h, 128 + 40);
        let below = wraps_along_row(&h, 128 - 40);
        assert_eq!((above as i64 - below as i64).abs(), 1);
        let plain = synthesize_hologram(0, 40.0 * UM, 0.0, g).unwrap();
        assert_eq!(wraps_along_row(&plain, 168), wraps_along_row(&plain, 88));
    }

    #[test]
    fn pgm_header_and_levels() {
        let g = GridSpec::new(64, 8.0 * UM).unwrap();
        let h = synthesize_hologram(2, 64.0 * UM, 0.0, g).unwrap();
        let b = h.to_pgm8();
        assert!(b.starts_with(b"P5\n64 64\n255\n"));
        assert_eq!(b.len(), 13 + 64 * 64);
    }

    #[test]
    fn first_order_far_field_is_a_vortex_ring() {
        let n = 512;
        let dx = 4.0 * UM;
        let g = GridSpec::new(n, dx).unwrap();
        let period = 8.0 * dx;
        let k_r = 20.0 * 2.0 * PI / (n as f64 * dx);
        let ell = 3;
        let h = synthesize_hologram(ell, period, k_r, g).unwrap();
        let beam = sample(&ModeSpec::gaussian(0.4 * g.half_width()).unwrap(), g).unwrap();
        let far = angular_spectrum(&apply_phase_mask(&beam, h.phase()).unwrap()).unwrap();
        // Recentre on the first order at k_x = 2π/Λ.
        let gk = far.grid();
        let shift = ((2.0 * PI / period) / gk.dx()).round() as usize;
        let half = n / 2;
        let window = 128;
        let sub = GridSpec::new(window, gk.dx()).unwrap();
        let vals = Array2::from_shape_fn((window, window), |(i, j)| {
            far.values()[[half - window / 2 + i, half + shift - window / 2 + j]]
        });
        let order = SampledField::new(sub, vals, Plane::KSpace).unwrap();
        let profile = radial_profile_of(&order.intensity(), sub, 64).unwrap();
        let r = profile.peak_radius().unwrap();
        assert!((r / k_r - 1.0).abs() < 0.1, "ring at {r}, expected {k_r}");
        // Winding number on a circle through the ring.
        let steps = 360;
        let mut total = 0.0;
        let mut prev: Option<Complex64> = None;
        for s in 0..=steps {
            let t = 2.0 * PI * s as f64 / steps as f64;
            let v = order.interpolate(r * t.cos(), r * t.sin()).unwrap();
            if let Some(p) = prev {
                total += (v / p).arg();
            }
            prev = Some(v);
        }
        assert_eq!((total / (2.0 * PI)).round() as i32, ell);
    }
}

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::geom::Vec3;

/// Ranges used to map `(r, theta, height)` into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylindricalParams {
    pub r_max: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for CylindricalParams {
    /// Covers the normalized cube `[-1, 1]^3`.
    fn default() -> Self {
        CylindricalParams { r_max: std::f64::consts::SQRT_2, h_min: -1.0, h_max: 1.0 }
    }
}

impl CylindricalParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(format!("r_max must be positive, got {}", self.r_max));
        }
        if !(self.h_min.is_finite() && self.h_max.is_finite() && self.h_max > self.h_min) {
            return Err(format!("empty height range [{}, {}]", self.h_min, self.h_max));
        }
        Ok(())
    }
}

/// Maps a normalized position to `[r/r_max, theta/2pi, height]` in `[0, 1]`,
/// with theta measured from `theta_offset`.
pub fn to_cylindrical(p: Vec3, params: &CylindricalParams, theta_offset: f64) -> [f64; 3] {
    let r = p[0].hypot(p[2]);
    let theta = (p[2].atan2(p[0]) - theta_offset).rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    let t = if theta >= TAU { 0.0 } else { theta / TAU };
    [r / params.r_max, t, (p[1] - params.h_min) / (params.h_max - params.h_min)]
}

pub fn from_cylindrical(c: [f64; 3], params: &CylindricalParams, theta_offset: f64) -> Vec3 {
    let r = c[0] * params.r_max;
    let theta = c[1] * TAU + theta_offset;
    [r * theta.cos(), params.h_min + c[2] * (params.h_max - params.h_min), r * theta.sin()]
}

/// Weighted circular mean of angles in radians, in `(-pi, pi]`; zero when
/// the weights cancel.
pub fn circular_mean(angles: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (a, w) in angles {
        s += w * a.sin();
        c += w * a.cos();
    }
    if s.hypot(c) < 1e-12 {
        0.0
    } else {
        let m = s.atan2(c);
        if m <= -PI { PI } else { m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_points() {
        let p = CylindricalParams { r_max: 1.0, h_min: -1.0, h_max: 1.0 };
        let c = to_cylindrical([1.0, 0.0, 0.0], &p, 0.0);
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12 && (c[2] - 0.5).abs() < 1e-12);
        let c = to_cylindrical([0.0, 0.0, 1.0], &p, 0.0);
        assert!((c[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = CylindricalParams::default();
        for _ in 0..100_000 {
            let x: Vec3 = [
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
            ];
            let off = rng.random_range(-PI..PI);
            let c = to_cylindrical(x, &p, off);
            assert!(c.iter().all(|v| (0.0..=1.0).contains(v)), "{c:?}");
            let y = from_cylindrical(c, &p, off);
            for k in 0..3 {
                assert!((x[k] - y[k]).abs() < 1e-6, "{x:?} {y:?}");
            }
        }
    }

    #[test]
    fn circular_mean_across_the_cut() {
        let m = circular_mean([(PI - 0.1, 1.0), (-PI + 0.1, 1.0)]);
        assert!((m.abs() - PI).abs() < 1e-12);
        assert_eq!(circular_mean([(0.3, 1.0)]), 0.3);
        assert_eq!(circular_mean(Vec::<(f64, f64)>::new()), 0.0);
    }
}

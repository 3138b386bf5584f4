//! Head-centered microphone array geometry.
//!
//! Coordinates: x points forward, y to the left, z up. Azimuth is measured
//! counter-clockwise from the front, so +90° is the left side.

use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::{mic, SPEED_OF_SOUND};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    /// Positions in meters, in canonical channel order (FL, FR, BL, BR).
    pub mic_positions: [Vec3; 4],
    pub speed_of_sound: f64,
}

impl ArrayGeometry {
    pub const DEFAULT_MIC_SPACING: f64 = 0.011;
    pub const DEFAULT_HEAD_WIDTH: f64 = 0.15;

    /// Two devices `head_width` apart, each with a front and a back
    /// microphone `mic_spacing` apart along the x axis.
    pub fn behind_the_ear(mic_spacing: f64, head_width: f64) -> Result<Self> {
        if !(mic_spacing > 0.0 && head_width > 0.0) {
            return Err(Error::InvalidConfig("microphone spacing and head width must be positive".into()));
        }
        let (dx, dy) = (mic_spacing / 2.0, head_width / 2.0);
        let mut p = [[0.0; 3]; 4];
        p[mic::FRONT_LEFT] = [dx, dy, 0.0];
        p[mic::FRONT_RIGHT] = [dx, -dy, 0.0];
        p[mic::BACK_LEFT] = [-dx, dy, 0.0];
        p[mic::BACK_RIGHT] = [-dx, -dy, 0.0];
        Ok(Self { mic_positions: p, speed_of_sound: SPEED_OF_SOUND })
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        norm(sub(self.mic_positions[a], self.mic_positions[b]))
    }

    /// Largest deviation from left/right mirror symmetry about the median plane.
    pub fn mirror_asymmetry(&self) -> f64 {
        let pairs = [(mic::FRONT_LEFT, mic::FRONT_RIGHT), (mic::BACK_LEFT, mic::BACK_RIGHT)];
        pairs
            .iter()
            .map(|&(l, r)| {
                let (pl, pr) = (self.mic_positions[l], self.mic_positions[r]);
                (pl[0] - pr[0]).abs().max((pl[1] + pr[1]).abs()).max((pl[2] - pr[2]).abs())
            })
            .fold(0.0, f64::max)
    }
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self::behind_the_ear(Self::DEFAULT_MIC_SPACING, Self::DEFAULT_HEAD_WIDTH).unwrap()
    }
}

/// Unit vector pointing from the head towards a source at `azimuth_deg`.
pub fn direction(azimuth_deg: f64) -> Vec3 {
    let a = azimuth_deg * PI / 180.0;
    [a.cos(), a.sin(), 0.0]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_mirror_symmetric() {
        let g = ArrayGeometry::default();
        assert!(g.mirror_asymmetry() < 1e-9);
        assert!((g.distance(mic::FRONT_LEFT, mic::BACK_LEFT) - 0.011).abs() < 1e-15);
        assert!((g.distance(mic::FRONT_LEFT, mic::FRONT_RIGHT) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_dimensions() {
        assert!(ArrayGeometry::behind_the_ear(0.0, 0.15).is_err());
    }

    #[test]
    fn left_is_positive_azimuth() {
        let d = direction(90.0);
        assert!(d[0].abs() < 1e-15 && (d[1] - 1.0).abs() < 1e-15);
    }
}

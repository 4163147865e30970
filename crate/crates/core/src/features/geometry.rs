//! Half-disk shapes.
//!
//! A pixel offset `(dx, dy)` (x to the right, y down) lies in the disk of
//! radius r when `dx^2 + dy^2 <= r^2`. With the diameter at angle `theta`,
//! the U half is the side of the unit normal `(-sin theta, cos theta)`,
//! including offsets on the diameter itself; V is the strict other side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed distances to the diameter below this magnitude count as on it.
pub const DIAMETER_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    U,
    V,
}

/// Which half of the disk an offset falls into, or `None` outside the disk.
pub fn half_disk_side(dx: i32, dy: i32, radius: u32, theta: f64) -> Option<Side> {
    let r = radius as i64;
    if (dx as i64).pow(2) + (dy as i64).pow(2) > r * r {
        return None;
    }
    let (sin, cos) = theta.sin_cos();
    let s = -sin * dx as f64 + cos * dy as f64;
    if s >= -DIAMETER_EPS {
        Some(Side::U)
    } else {
        Some(Side::V)
    }
}

/// Orientations, evenly spaced over `[0, pi)`, and per-scale disk radii.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleConfig {
    pub radii: Vec<u32>,
    pub n_orient: usize,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        ScaleConfig {
            radii: vec![3, 5, 10, 20],
            n_orient: 8,
        }
    }
}

impl ScaleConfig {
    pub fn new(radii: Vec<u32>, n_orient: usize) -> Result<Self> {
        let cfg = ScaleConfig { radii, n_orient };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_orient == 0 {
            return Err(Error::InvalidParameter("n_orient must be >= 1".into()));
        }
        if self.radii.is_empty() {
            return Err(Error::InvalidParameter("at least one scale is required".into()));
        }
        if self.radii.iter().any(|&r| r < 2) {
            return Err(Error::InvalidParameter(format!(
                "radii {:?} must all be >= 2",
                self.radii
            )));
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "radii {:?} must be strictly increasing",
                self.radii
            )));
        }
        Ok(())
    }

    pub fn n_scales(&self) -> usize {
        self.radii.len()
    }

    pub fn max_radius(&self) -> u32 {
        self.radii.iter().copied().max().unwrap_or(0)
    }

    pub fn orientation(&self, index: usize) -> f64 {
        index as f64 * std::f64::consts::PI / self.n_orient as f64
    }
}

/// Inclusive run of x offsets `lo..=hi` on row `dy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowSpan {
    pub dy: i32,
    pub lo: i32,
    pub hi: i32,
}

impl RowSpan {
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

/// One half-disk pair as row spans (each half meets a row in a single run
/// because both the disk and a half-plane are convex).
#[derive(Clone, Debug, PartialEq)]
pub struct HalfDiskShape {
    pub radius: u32,
    pub theta: f64,
    pub u: Vec<RowSpan>,
    pub v: Vec<RowSpan>,
}

impl HalfDiskShape {
    pub fn new(radius: u32, theta: f64) -> Self {
        let r = radius as i32;
        let mut u = Vec::new();
        let mut v = Vec::new();
        for dy in -r..=r {
            let mut span_u: Option<(i32, i32)> = None;
            let mut span_v: Option<(i32, i32)> = None;
            for dx in -r..=r {
                let slot = match half_disk_side(dx, dy, radius, theta) {
                    Some(Side::U) => &mut span_u,
                    Some(Side::V) => &mut span_v,
                    None => continue,
                };
                *slot = Some(match *slot {
                    None => (dx, dx),
                    Some((lo, hi)) => {
                        debug_assert_eq!(hi + 1, dx, "half-disk row must be contiguous");
                        (lo, dx)
                    }
                });
            }
            if let Some((lo, hi)) = span_u {
                u.push(RowSpan { dy, lo, hi });
            }
            if let Some((lo, hi)) = span_v {
                v.push(RowSpan { dy, lo, hi });
            }
        }
        HalfDiskShape { radius, theta, u, v }
    }

    pub fn spans(&self, side: Side) -> &[RowSpan] {
        match side {
            Side::U => &self.u,
            Side::V => &self.v,
        }
    }
}

/// Shapes for every `(orientation, scale)` of a config, indexed `[o][s]`.
pub fn shapes_for(cfg: &ScaleConfig) -> Vec<Vec<HalfDiskShape>> {
    (0..cfg.n_orient)
        .map(|o| {
            cfg.radii
                .iter()
                .map(|&r| HalfDiskShape::new(r, cfg.orientation(o)))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_cover_disk_exactly_once() {
        let cfg = ScaleConfig::default();
        for (o, row) in shapes_for(&cfg).iter().enumerate() {
            for shape in row {
                let r = shape.radius as i32;
                let mut n = 0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx * dx + dy * dy <= r * r {
                            n += 1;
                        }
                    }
                }
                let total: usize = shape.u.iter().chain(&shape.v).map(RowSpan::len).sum();
                assert_eq!(total, n, "o={o} r={r}");
            }
        }
    }

    #[test]
    fn vertical_diameter_puts_left_in_u() {
        let theta = std::f64::consts::FRAC_PI_2;
        assert_eq!(half_disk_side(-1, 0, 3, theta), Some(Side::U));
        assert_eq!(half_disk_side(0, 2, 3, theta), Some(Side::U));
        assert_eq!(half_disk_side(1, 0, 3, theta), Some(Side::V));
        assert_eq!(half_disk_side(3, 1, 3, theta), None);
    }

    #[test]
    fn horizontal_diameter_puts_below_in_u() {
        assert_eq!(half_disk_side(2, 0, 3, 0.0), Some(Side::U));
        assert_eq!(half_disk_side(0, 1, 3, 0.0), Some(Side::U));
        assert_eq!(half_disk_side(0, -1, 3, 0.0), Some(Side::V));
    }

    #[test]
    fn config_validation() {
        assert!(ScaleConfig::new(vec![3, 5, 10, 20], 8).is_ok());
        assert!(ScaleConfig::new(vec![1, 5], 8).is_err());
        assert!(ScaleConfig::new(vec![5, 5], 8).is_err());
        assert!(ScaleConfig::new(vec![5, 3], 8).is_err());
        assert!(ScaleConfig::new(vec![], 8).is_err());
        assert!(ScaleConfig::new(vec![3], 0).is_err());
    }
}

//! Deterministic sampling of cone points `(x, y)` with `x1 y2 - x2 y1 > 0`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{scalar_triple, Direction2, Point2, ScalarTriple};

/// Radii in `[r_min, r_max]`, directions with `w >= margin * r`, and `|y|` in
/// `[u_min, u_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRegion {
    pub r_min: f64,
    pub r_max: f64,
    pub margin: f64,
    pub count: usize,
    pub seed: u64,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for SampleRegion {
    fn default() -> Self {
        Self {
            r_min: 0.5,
            r_max: 2.0,
            margin: 0.2,
            count: 100,
            seed: 42,
            u_min: 0.5,
            u_max: 2.0,
        }
    }
}

impl SampleRegion {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return bad(format!("r_min must be positive, got {}", self.r_min));
        }
        if !(self.r_max >= self.r_min && self.r_max.is_finite()) {
            return bad(format!(
                "r_max ({}) must be at least r_min ({})",
                self.r_max, self.r_min
            ));
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return bad(format!("margin must lie in (0, 1), got {}", self.margin));
        }
        if self.count == 0 {
            return bad("count must be positive".into());
        }
        if !(self.u_min > 0.0 && self.u_max >= self.u_min && self.u_max.is_finite()) {
            return bad(format!("invalid |y| range [{}, {}]", self.u_min, self.u_max));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub index: usize,
    pub x: Point2,
    pub y: Direction2,
    pub triple: ScalarTriple,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub region: SampleRegion,
    pub points: Vec<SamplePoint>,
}

/// `y` makes an angle `α` with `x` where `sin α >= margin`, so `w/r = sin α`.
pub fn sample_points(region: &SampleRegion) -> Result<Vec<SamplePoint>> {
    region.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(region.seed);
    let lo = region.margin.asin();
    let hi = PI - lo;
    let mut out = Vec::with_capacity(region.count);
    for index in 0..region.count {
        let r = if region.r_max > region.r_min {
            rng.gen_range(region.r_min..=region.r_max)
        } else {
            region.r_min
        };
        let theta = rng.gen_range(0.0..2.0 * PI);
        let alpha = rng.gen_range(lo..=hi);
        let u = if region.u_max > region.u_min {
            rng.gen_range(region.u_min..=region.u_max)
        } else {
            region.u_min
        };
        let x = Point2::new(r * theta.cos(), r * theta.sin());
        let y = Direction2::new(u * (theta + alpha).cos(), u * (theta + alpha).sin());
        let triple = scalar_triple(x, y)?;
        out.push(SamplePoint { index, x, y, triple });
    }
    Ok(out)
}

pub fn sample_manifest(region: &SampleRegion) -> Result<SampleManifest> {
    Ok(SampleManifest {
        region: *region,
        points: sample_points(region)?,
    })
}

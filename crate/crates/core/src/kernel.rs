//! Base invariants of a spherically symmetric structure on a surface:
//! `r = |x|`, `u = |y|`, `s = <x, y>/u`, `w = sqrt(r^2 - s^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction2 {
    pub y1: f64,
    pub y2: f64,
}

impl Direction2 {
    pub const fn new(y1: f64, y2: f64) -> Self {
        Self { y1, y2 }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.y1, self.y2]
    }

    pub fn norm(self) -> f64 {
        self.y1.hypot(self.y2)
    }

    pub fn scaled(self, k: f64) -> Self {
        Self::new(self.y1 * k, self.y2 * k)
    }
}

/// Which branch of `u*w = ±(x1*y2 - x2*y1)` applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cone {
    #[default]
    Positive,
    Negative,
}

impl Cone {
    pub fn sign(self) -> f64 {
        match self {
            Cone::Positive => 1.0,
            Cone::Negative => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarTriple {
    pub r: f64,
    pub u: f64,
    pub s: f64,
    pub w: f64,
    pub cross: f64,
}

pub fn dot(x: Point2, y: Direction2) -> f64 {
    x.x1 * y.y1 + x.x2 * y.y2
}

pub fn cross(x: Point2, y: Direction2) -> f64 {
    x.x1 * y.y2 - x.x2 * y.y1
}

pub fn scalar_triple(x: Point2, y: Direction2) -> Result<ScalarTriple> {
    let u = y.norm();
    if u == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let cross = cross(x, y);
    Ok(ScalarTriple {
        r: x.norm(),
        u,
        s: dot(x, y) / u,
        // |cross|/u, not sqrt(r^2 - s^2): no cancellation near s = ±r
        w: cross.abs() / u,
        cross,
    })
}

/// Fails unless `x1*y2 - x2*y1 > 0`.
pub fn require_positive_cone(x: Point2, y: Direction2) -> Result<()> {
    let c = cross(x, y);
    if c > 0.0 {
        Ok(())
    } else {
        Err(Error::OrientationViolation { cross: c })
    }
}

/// Left-minus-right residuals of the three scalar identities
/// `u s = x1 y1 + x2 y2`, `u w = x1 y2 - x2 y1` and
/// `u^2 s w = x1^2 y1 y2 - x1 x2 y1^2 + x1 x2 y2^2 - x2^2 y1 y2`.
///
/// `s` and `w` are formed from their definitions (`w = sqrt(r^2 - s^2)`), so the
/// residuals actually test the identities instead of restating them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub res4: f64,
    pub res5: f64,
    pub res6: f64,
    pub us: f64,
    pub uw: f64,
    pub u2sw: f64,
}

pub fn identity_residuals(x: Point2, y: Direction2) -> Result<IdentityResiduals> {
    require_positive_cone(x, y)?;
    let (x1, x2, y1, y2) = (x.x1, x.x2, y.y1, y.y2);
    let u = y.norm();
    let r2 = x1 * x1 + x2 * x2;
    let s = (x1 * y1 + x2 * y2) / u;
    let w = (r2 - s * s).max(0.0).sqrt();
    let us = u * s;
    let uw = u * w;
    let u2sw = u * u * s * w;
    Ok(IdentityResiduals {
        res4: us - (x1 * y1 + x2 * y2),
        res5: uw - (x1 * y2 - x2 * y1),
        res6: u2sw - (x1 * x1 * y1 * y2 - x1 * x2 * y1 * y1 + x1 * x2 * y2 * y2 - x2 * x2 * y1 * y2),
        us,
        uw,
        u2sw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn orthonormal_case() {
        let t = scalar_triple(Point2::new(1.0, 0.0), Direction2::new(0.0, 1.0)).unwrap();
        assert_eq!((t.r, t.u, t.s, t.w, t.cross), (1.0, 1.0, 0.0, 1.0, 1.0));
    }

    #[test]
    fn three_four_five() {
        let t = scalar_triple(Point2::new(3.0, 4.0), Direction2::new(0.0, 2.0)).unwrap();
        assert_eq!((t.r, t.u, t.s, t.w, t.cross), (5.0, 2.0, 4.0, 3.0, 6.0));
    }

    #[test]
    fn parallel_direction() {
        let t = scalar_triple(Point2::new(1.0, 0.0), Direction2::new(2.0, 0.0)).unwrap();
        assert_eq!((t.r, t.u, t.s, t.w, t.cross), (1.0, 2.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn zero_direction_rejected() {
        assert_eq!(
            scalar_triple(Point2::new(1.0, 0.0), Direction2::new(0.0, 0.0)),
            Err(Error::ZeroDirection)
        );
    }

    #[test]
    fn residuals_at_hand_points() {
        let r = identity_residuals(Point2::new(3.0, 4.0), Direction2::new(0.0, 2.0)).unwrap();
        assert_eq!((r.res4, r.res5, r.res6), (0.0, 0.0, 0.0));
        assert_eq!((r.us, r.uw, r.u2sw), (8.0, 6.0, 48.0));
        let r = identity_residuals(Point2::new(1.0, 0.0), Direction2::new(0.0, 1.0)).unwrap();
        assert_eq!((r.res4, r.res5, r.res6), (0.0, 0.0, 0.0));
    }

    #[test]
    fn residuals_need_positive_cone() {
        let err = identity_residuals(Point2::new(1.0, 0.0), Direction2::new(0.0, -1.0));
        assert!(matches!(err, Err(Error::OrientationViolation { .. })));
        let err = identity_residuals(Point2::new(1.0, 0.0), Direction2::new(1.0, 0.0));
        assert!(matches!(err, Err(Error::OrientationViolation { .. })));
    }

    proptest! {
        #[test]
        fn pythagorean_split(x1 in -5.0..5.0f64, x2 in -5.0..5.0f64, y1 in -5.0..5.0f64, y2 in -5.0..5.0f64) {
            prop_assume!(y1.hypot(y2) > 1e-3);
            let t = scalar_triple(Point2::new(x1, x2), Direction2::new(y1, y2)).unwrap();
            let lhs = (t.u * t.s).powi(2) + (t.u * t.w).powi(2);
            let rhs = t.u * t.u * t.r * t.r;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn scale_covariance(x1 in -5.0..5.0f64, x2 in -5.0..5.0f64, y1 in -5.0..5.0f64, y2 in -5.0..5.0f64, k in 0.01..100.0f64) {
            prop_assume!(y1.hypot(y2) > 1e-3);
            let x = Point2::new(x1, x2);
            let y = Direction2::new(y1, y2);
            let a = scalar_triple(x, y).unwrap();
            let b = scalar_triple(x, y.scaled(k)).unwrap();
            let tol = 1e-12 * (1.0 + a.r);
            prop_assert!((a.r - b.r).abs() <= tol);
            prop_assert!((a.s - b.s).abs() <= tol);
            prop_assert!((a.w - b.w).abs() <= tol);
            prop_assert!((k * a.u - b.u).abs() <= 1e-12 * b.u);
            prop_assert!((k * a.cross - b.cross).abs() <= 1e-12 * (1.0 + b.cross.abs()));
        }

        #[test]
        fn residuals_vanish_in_cone(r in 0.1..10.0f64, th in 0.0..std::f64::consts::TAU, alpha in 0.05..3.09f64, u in 0.1..10.0f64) {
            let x = Point2::new(r * th.cos(), r * th.sin());
            let y = Direction2::new(u * (th + alpha).cos(), u * (th + alpha).sin());
            let res = identity_residuals(x, y).unwrap();
            let scale = r * u;
            prop_assert!(res.res4.abs() <= 1e-12 * scale);
            prop_assert!(res.res5.abs() <= 1e-12 * scale);
            prop_assert!(res.res6.abs() <= 1e-12 * scale * scale);
        }
    }
}

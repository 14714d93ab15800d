//! Family parameters and the radial factor `a(r)` of the metric.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::RadialExpr;
use crate::jet::{Caps, Jet, Scalar, X1};
use crate::quad::{check_path_singularities, integrate, QuadOptions};

fn default_n() -> f64 {
    2.0
}

/// The constant `c` and the radial functions `c0, f1, f2, c1, c2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    pub c: f64,
    pub c0: RadialExpr,
    pub f1: RadialExpr,
    pub f2: RadialExpr,
    pub c1: RadialExpr,
    pub c2: RadialExpr,
    #[serde(default = "default_n")]
    pub n: f64,
}

impl Default for ParamSet {
    /// `c = 0, c0 = 1, f1 = 1, f2 = 1, c1 = 0, c2 = 1`.
    fn default() -> Self {
        ParamSet::from_strs(0.0, "1", "1", "1", "0", "1").expect("default parameters parse")
    }
}

impl ParamSet {
    pub fn from_strs(c: f64, c0: &str, f1: &str, f2: &str, c1: &str, c2: &str) -> Result<ParamSet> {
        let p = ParamSet {
            c,
            c0: c0.parse()?,
            f1: f1.parse()?,
            f2: f2.parse()?,
            c1: c1.parse()?,
            c2: c2.parse()?,
            n: 2.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.c.is_finite() {
            return Err(Error::Config(format!("c must be finite, got {}", self.c)));
        }
        if !self.n.is_finite() {
            return Err(Error::Config(format!("n must be finite, got {}", self.n)));
        }
        for (name, e) in self.named() {
            if e.uses_s() {
                return Err(Error::Config(format!("{name} may only depend on r: `{e}`")));
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, &RadialExpr); 5] {
        [
            ("c0", &self.c0),
            ("f1", &self.f1),
            ("f2", &self.f2),
            ("c1", &self.c1),
            ("c2", &self.c2),
        ]
    }

    pub fn from_json(text: &str) -> Result<ParamSet> {
        let p: ParamSet = serde_json::from_str(text).map_err(|e| Error::Config(format!("parameter file: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<ParamSet> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ParamSet::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter sets serialize")
    }

    /// Evaluates a radial function on reals or jets (`s` is never read).
    pub fn eval_radial<T: Scalar>(e: &RadialExpr, r: &T) -> Result<T> {
        e.eval(r, r)
    }
}

/// Integrand of `ln a`: `-(2 c0 t^2 - 1 + 2c^2 - 2c) / (t (2 c0 t^2 - 1))`.
pub fn log_a_integrand<T: Scalar>(p: &ParamSet, t: &T) -> Result<T> {
    let c0 = ParamSet::eval_radial(&p.c0, t)?;
    let k = c0.mul(t).mul(t).scale(2.0).sub(&t.constant_like(1.0));
    let num = k.add(&t.constant_like(2.0 * p.c * p.c - 2.0 * p.c));
    let den = t.mul(&k);
    num.try_div(&den).map(|v| v.neg())
}

// (value, term magnitude) of the integrand's denominator and numerator
fn log_a_den(p: &ParamSet, t: f64) -> Result<(f64, f64)> {
    let k = 2.0 * p.c0.eval_r(t)? * t * t;
    Ok((t * (k - 1.0), t.abs() * (k.abs() + 1.0)))
}

fn log_a_num(p: &ParamSet, t: f64) -> Result<(f64, f64)> {
    let k = 2.0 * p.c0.eval_r(t)? * t * t;
    let extra = 2.0 * p.c * p.c - 2.0 * p.c;
    Ok((k - 1.0 + extra, k.abs() + 1.0 + extra.abs()))
}

const SCAN_SAMPLES: usize = 256;

/// `a(r) = exp(∫_{r0}^{r} integrand)`, anchored so that `a(r0) = 1`.
pub fn a_of_r(p: &ParamSet, r: f64, r0: f64) -> Result<f64> {
    a_of_r_with(p, r, r0, QuadOptions::default())
}

pub fn a_of_r_with(p: &ParamSet, r: f64, r0: f64, opts: QuadOptions) -> Result<f64> {
    if r == r0 {
        return Ok(1.0);
    }
    check_path_singularities(|t| log_a_den(p, t), |t| log_a_num(p, t), r0, r, SCAN_SAMPLES)?;
    let integral = integrate(|t| log_a_integrand(p, &t), r0, r, opts).map_err(|e| match e {
        Error::Domain(_) => Error::SingularIntegrand { at: r },
        other => other,
    })?;
    Ok(integral.exp())
}

/// `a` composed with a jet of `r` (the jet may depend on `x` only).
pub fn a_of_r_jet(p: &ParamSet, r: &Jet, r0: f64, opts: QuadOptions) -> Result<Jet> {
    let rv = r.value();
    let log_a = a_of_r_with(p, rv, r0, opts)?.ln();
    let order = r.caps().x as usize;
    // derivatives of ln a are derivatives of the integrand, read from a one-variable jet
    let aux = Jet::variable(Caps::new(0, order.saturating_sub(1) as u8), X1, rv);
    let g = log_a_integrand(p, &aux)?;
    let mut taylor = vec![log_a];
    for k in 1..=order {
        let gk = g.taylor_coeff(crate::jet::Multi::x((k - 1) as u8, 0));
        taylor.push(gk / k as f64);
    }
    Ok(r.compose(&taylor).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_c0(c: f64, c0: &str) -> ParamSet {
        ParamSet::from_strs(c, c0, "0", "0", "0", "0").unwrap()
    }

    #[test]
    fn empty_integral_is_one() {
        let p = ParamSet::default();
        assert_eq!(a_of_r(&p, 1.7, 1.7).unwrap(), 1.0);
    }

    #[test]
    fn reciprocal_radius_closed_form() {
        let p = with_c0(0.0, "1/r^2");
        for r in [0.3, 0.5, 2.0, 3.7] {
            let a = a_of_r(&p, r, 1.0).unwrap();
            assert!((a - 1.0 / r).abs() < 1e-9, "r = {r}: {a}");
        }
        assert!((a_of_r(&p, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn identically_singular_denominator() {
        let p = with_c0(0.0, "1/(2*r^2)");
        assert!(matches!(a_of_r(&p, 2.0, 1.0), Err(Error::SingularIntegrand { .. })));
        assert!(matches!(a_of_r(&p, 0.5, 1.0), Err(Error::SingularIntegrand { .. })));
    }

    #[test]
    fn singular_radius_on_path() {
        // 2 r^2 - 1 = 0 at r = 1/sqrt(2)
        let p = with_c0(0.3, "1");
        assert!(matches!(a_of_r(&p, 0.5, 1.0), Err(Error::SingularIntegrand { .. })));
        assert!(a_of_r(&p, 1.5, 1.0).is_ok());
        // for c = 0 the numerator shares the root and the integrand reduces to -1/t
        let p = with_c0(0.0, "1");
        assert!((a_of_r(&p, 0.5, 1.0).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn path_additivity() {
        let p = with_c0(0.4, "1 + r/3");
        let (r0, r1, r) = (1.0, 1.6, 2.3);
        let direct = a_of_r(&p, r, r0).unwrap();
        let split = a_of_r(&p, r, r1).unwrap() * a_of_r(&p, r1, r0).unwrap();
        assert!((direct - split).abs() <= 1e-9 * direct.abs());
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = with_c0(0.4, "1 + r/3");
        let caps = Caps::new(0, 2);
        let r = Jet::variable(caps, X1, 1.8);
        let a = a_of_r_jet(&p, &r, 1.0, QuadOptions::default()).unwrap();
        let f = |t: f64| a_of_r(&p, t, 1.0).unwrap();
        let h = 1e-4;
        let d1 = (f(1.8 + h) - f(1.8 - h)) / (2.0 * h);
        let d2 = (f(1.8 + h) - 2.0 * f(1.8) + f(1.8 - h)) / (h * h);
        let m = crate::jet::Multi::x;
        assert!((a.extract(m(1, 0)).unwrap() - d1).abs() < 1e-7);
        assert!((a.extract(m(2, 0)).unwrap() - d2).abs() < 1e-5);
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let text = r#"{"c": 0.5, "c0": "1/r^2", "f1": "1", "f2": "r", "c1": "0", "c2": "exp(r)"}"#;
        let p = ParamSet::from_json(text).unwrap();
        assert_eq!(p.n, 2.0);
        assert_eq!(ParamSet::from_json(&p.to_json()).unwrap(), p);

        let bad = r#"{"c": 0.5, "c0": "s", "f1": "1", "f2": "r", "c1": "0", "c2": "1"}"#;
        assert!(matches!(ParamSet::from_json(bad), Err(Error::Config(_))));
        let bad = r#"{"c": 0.5, "c0": "q", "f1": "1", "f2": "r", "c1": "0", "c2": "1"}"#;
        assert!(matches!(ParamSet::from_json(bad), Err(Error::Config(_))));
    }
}

//! Single-point evaluation behind `finsler eval`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::curvature::{
    berwald, e_closed_general, e_closed_h, e_family_dim2, flag_curvature, h_derived_closed, h_printed_closed,
    h_scalars, landsberg, mean_berwald_from, vanishes, BerwaldTensor, Dim2Family, FlagCurvature, HScalars, Landsberg,
    MeanBerwald, TOL_JET,
};
use crate::error::{Error, Result};
use crate::kernel::{scalar_triple, Direction2, Point2, ScalarTriple};
use crate::metric::{fundamental_tensor, Metric};
use crate::spray::{eval_pq, Spray};
use crate::verify::Setup;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    F,
    G,
    Spray,
    Pq,
    B,
    E,
    H,
    K,
    L,
    J,
    All,
}

impl Quantity {
    pub const NAMES: [&'static str; 11] = ["F", "g", "spray", "PQ", "B", "E", "H", "K", "L", "J", "all"];
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "F" => Quantity::F,
            "g" => Quantity::G,
            "spray" => Quantity::Spray,
            "PQ" => Quantity::Pq,
            "B" => Quantity::B,
            "E" => Quantity::E,
            "H" => Quantity::H,
            "K" => Quantity::K,
            "L" => Quantity::L,
            "J" => Quantity::J,
            "all" => Quantity::All,
            other => {
                return Err(Error::Config(format!(
                    "unknown quantity `{other}` (expected one of {})",
                    Quantity::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = match self {
            Quantity::F => 0,
            Quantity::G => 1,
            Quantity::Spray => 2,
            Quantity::Pq => 3,
            Quantity::B => 4,
            Quantity::E => 5,
            Quantity::H => 6,
            Quantity::K => 7,
            Quantity::L => 8,
            Quantity::J => 9,
            Quantity::All => 10,
        };
        f.write_str(Quantity::NAMES[i])
    }
}

/// `H` by definition and by the two closed forms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HReport {
    pub definitional: HScalars,
    pub derived_closed: f64,
    pub printed_closed: f64,
}

/// Mean Berwald tensors by every route that applies at the point.
#[derive(Clone, Debug, Serialize)]
pub struct ERoutes {
    pub trace: MeanBerwald,
    pub general_formula: MeanBerwald,
    /// `Err` text when the point is too close to `s = 0`.
    pub h_form: std::result::Result<MeanBerwald, String>,
    pub dim2_family: Dim2Family,
}

/// All curvature quantities at one point, with residuals between routes and
/// verdicts against the stored tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub x: Point2,
    pub y: Direction2,
    pub triple: ScalarTriple,
    pub berwald: BerwaldTensor,
    pub max_b: f64,
    pub e: ERoutes,
    pub h: HReport,
    pub landsberg: std::result::Result<Landsberg, String>,
    pub flag_curvature: std::result::Result<FlagCurvature, String>,
    pub general_vs_h_form: Option<f64>,
    pub tol: f64,
    pub quadratic: bool,
    pub mean_berwald_zero: bool,
    pub h_nonzero: bool,
}

fn e_routes(setup: &Setup, spray: &dyn Spray, x: Point2, y: Direction2) -> Result<(BerwaldTensor, ERoutes, HScalars)> {
    let t = scalar_triple(x, y)?;
    let source = setup.source();
    let n = setup.params.n;
    let b = berwald(spray, x, y)?;
    let pq = eval_pq(source.as_ref(), t.r, t.s)?;
    let h = h_scalars(source.as_ref(), n, t.r, t.s)?;
    let routes = ERoutes {
        trace: mean_berwald_from(&b),
        general_formula: e_closed_general(&pq, n, x, y),
        h_form: e_closed_h(&h, x, y).map_err(|e| e.to_string()),
        dim2_family: e_family_dim2(&setup.params, x, y)?,
    };
    Ok((b, routes, h))
}

fn h_report(setup: &Setup, h: HScalars) -> Result<HReport> {
    Ok(HReport {
        definitional: h,
        derived_closed: h_derived_closed(&setup.params, h.r, h.s)?,
        printed_closed: h_printed_closed(&setup.params, h.r, h.s)?,
    })
}

pub fn curvature_report(setup: &Setup, x: Point2, y: Direction2, tol: f64) -> Result<CurvatureReport> {
    let spray = setup.spray();
    let metric = setup.metric();
    let triple = scalar_triple(x, y)?;
    let (b, e, h) = e_routes(setup, &spray, x, y)?;
    let general_vs_h_form = e
        .h_form
        .as_ref()
        .ok()
        .map(|hf| hf.distance(&e.general_formula) / (1.0 + e.general_formula.max_abs()));
    let max_b = b.max_abs();
    let quadratic = vanishes(max_b, b.scale, tol);
    let mean_berwald_zero = [Some(&e.trace), Some(&e.general_formula), e.h_form.as_ref().ok()]
        .into_iter()
        .flatten()
        .all(|m| vanishes(m.max_abs(), b.scale, tol));
    let h_nonzero = h.h.abs() > tol * h.scale;
    Ok(CurvatureReport {
        x,
        y,
        triple,
        berwald: b,
        max_b,
        e,
        h: h_report(setup, h)?,
        landsberg: landsberg(&metric, &spray, x, y).map_err(|e| e.to_string()),
        flag_curvature: flag_curvature(&metric, &spray, x, y).map_err(|e| e.to_string()),
        general_vs_h_form,
        tol,
        quadratic,
        mean_berwald_zero,
        h_nonzero,
    })
}

/// Evaluates one quantity at `(x, y)` as a JSON record tagged with its route.
pub fn eval_quantity(setup: &Setup, x: Point2, y: Direction2, what: Quantity) -> Result<Value> {
    let spray = setup.spray();
    let metric = setup.metric();
    let base = json!({ "what": what.to_string(), "x": x, "y": y });
    let body = match what {
        Quantity::F => json!({ "F": metric.value(x, y)?, "r0": setup.r0 }),
        Quantity::G => json!({ "g": fundamental_tensor(&metric, x, y)? }),
        Quantity::Spray => {
            let [g1, g2] = spray.value(x, y)?;
            json!({ "G": [g1, g2], "route": "closed-form" })
        }
        Quantity::Pq => {
            let t = scalar_triple(x, y)?;
            json!({ "PQ": eval_pq(setup.source().as_ref(), t.r, t.s)? })
        }
        Quantity::B => {
            let b = berwald(&spray, x, y)?;
            json!({ "B": b, "max_abs": b.max_abs(), "symmetry_defect": b.symmetry_defect(), "route": "jet" })
        }
        Quantity::E => {
            let (b, routes, _) = e_routes(setup, &spray, x, y)?;
            json!({ "E": routes, "scale": b.scale })
        }
        Quantity::H => {
            let t = scalar_triple(x, y)?;
            let h = h_scalars(setup.source().as_ref(), setup.params.n, t.r, t.s)?;
            json!({ "H": h_report(setup, h)? })
        }
        Quantity::K => json!({ "K": flag_curvature(&metric, &spray, x, y)?, "route": "jet" }),
        Quantity::L => {
            let l = landsberg(&metric, &spray, x, y)?;
            json!({ "L": l.l, "max_abs": l.max_abs_l() })
        }
        Quantity::J => {
            let l = landsberg(&metric, &spray, x, y)?;
            json!({ "J": l.j, "max_abs": l.max_abs_j() })
        }
        Quantity::All => {
            serde_json::to_value(curvature_report(setup, x, y, TOL_JET)?).expect("curvature reports serialize")
        }
    };
    let mut out = base;
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamSet;

    #[test]
    fn spray_at_reference_point() {
        let p = ParamSet::from_strs(0.0, "1", "1", "1", "0", "0").unwrap();
        let v = eval_quantity(
            &Setup::new(p),
            Point2::new(1.0, 0.0),
            Direction2::new(0.0, 1.0),
            Quantity::Spray,
        )
        .unwrap();
        let g = &v["G"];
        assert!((g[0].as_f64().unwrap() - 1.0).abs() < 1e-14);
        assert!((g[1].as_f64().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn metric_closed_form() {
        let p = ParamSet::from_strs(0.0, "1/r^2", "0", "0", "0", "0").unwrap();
        let v = eval_quantity(
            &Setup::new(p),
            Point2::new(3.0, 4.0),
            Direction2::new(0.0, 2.0),
            Quantity::F,
        )
        .unwrap();
        assert!((v["F"].as_f64().unwrap() - 0.24).abs() < 1e-8);
    }

    #[test]
    fn full_report_for_family() {
        let setup = Setup::new(ParamSet::default());
        let rep = curvature_report(&setup, Point2::new(0.9, -0.4), Direction2::new(0.7, 1.1), TOL_JET).unwrap();
        assert!(rep.quadratic && rep.mean_berwald_zero && rep.h_nonzero);
        assert!(rep.general_vs_h_form.unwrap() < 1e-9);
        let v = eval_quantity(&setup, Point2::new(0.9, -0.4), Direction2::new(0.7, 1.1), Quantity::All).unwrap();
        assert!(v["h"]["definitional"]["h"].as_f64().unwrap() > 1.0);
    }

    #[test]
    fn quantity_names() {
        for name in Quantity::NAMES {
            assert_eq!(name.parse::<Quantity>().unwrap().to_string(), name);
        }
        assert!(matches!("Z".parse::<Quantity>(), Err(Error::Config(_))));
    }

    #[test]
    fn outside_cone_is_named() {
        let setup = Setup::new(ParamSet::default());
        let err = eval_quantity(&setup, Point2::new(1.0, 0.0), Direction2::new(0.0, -1.0), Quantity::B).unwrap_err();
        assert!(matches!(err, Error::OrientationViolation { .. }));
    }
}

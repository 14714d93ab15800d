//! The sweep behind `finsler verify`: evaluates every route at sampled cone
//! points and reduces the numbers to a verdict.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{
    berwald, e_closed_general, e_closed_h, e_family_dim2, fit_kappa, h_derived_closed, h_printed_closed, h_scalars,
    mean_berwald_from, trace_and_general, vanishes, KappaFit, MeanBerwald, KAPPA_PROBE, TOL_FD, TOL_JET,
};
use crate::error::{Error, Result};
use crate::fd::{default_step, fd_oracle};
use crate::jet::Multi;
use crate::kernel::{Direction2, Point2};
use crate::metric::FamilyMetric;
use crate::params::ParamSet;
use crate::sample::{sample_points, SamplePoint, SampleRegion};
use crate::spray::{eval_pq, AnsatzSpray, ExprPq, FamilyPq, Perturbed, PqSource, Spray};

/// Points with `w < W_EXCLUDE * r` are left out of sweeps.
pub const W_EXCLUDE: f64 = 0.05;
/// Points with `|s| < S_EXCLUDE` are left out of the `H`-form route.
pub const S_EXCLUDE: f64 = 1e-3;

/// Parses a spray perturbation `"dP,dQ"` of two expressions in `r` and `s`.
pub fn parse_override(text: &str) -> Result<ExprPq> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!(
            "spray override must be two expressions `dP,dQ`, got `{text}`"
        )));
    }
    ExprPq::parse(parts[0].trim(), parts[1].trim())
}

/// Parameters plus everything needed to build the spray and metric.
#[derive(Clone, Debug)]
pub struct Setup {
    pub params: ParamSet,
    pub r0: f64,
    pub spray_override: Option<ExprPq>,
}

impl Setup {
    pub fn new(params: ParamSet) -> Self {
        Self {
            params,
            r0: 1.0,
            spray_override: None,
        }
    }

    pub fn source(&self) -> Box<dyn PqSource> {
        let base = FamilyPq::new(self.params.clone());
        match &self.spray_override {
            None => Box::new(base),
            Some(delta) => Box::new(Perturbed {
                base,
                delta: delta.clone(),
            }),
        }
    }

    pub fn spray(&self) -> AnsatzSpray<Box<dyn PqSource>> {
        AnsatzSpray::new(self.source())
    }

    pub fn metric(&self) -> FamilyMetric {
        FamilyMetric::new(self.params.clone(), self.r0)
    }
}

/// Which verdict decides the exit status.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predicate {
    #[default]
    Counterexample,
    Quadratic,
    MeanBerwaldZero,
    HNonzero,
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counterexample" => Ok(Predicate::Counterexample),
            "quadratic" => Ok(Predicate::Quadratic),
            "mean-berwald-zero" => Ok(Predicate::MeanBerwaldZero),
            "h-nonzero" => Ok(Predicate::HNonzero),
            other => Err(Error::Config(format!(
                "unknown predicate `{other}` (expected counterexample, quadratic, mean-berwald-zero or h-nonzero)"
            ))),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Predicate::Counterexample => "counterexample",
            Predicate::Quadratic => "quadratic",
            Predicate::MeanBerwaldZero => "mean-berwald-zero",
            Predicate::HNonzero => "h-nonzero",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub params: ParamSet,
    pub region: SampleRegion,
    pub tol_jet: f64,
    pub tol_fd: f64,
    pub r0: f64,
    pub spray_override: Option<String>,
    /// Largest tolerated fraction of points lost to numerical errors.
    pub skip_fraction: f64,
    pub predicate: Predicate,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            params: ParamSet::default(),
            region: SampleRegion::default(),
            tol_jet: TOL_JET,
            tol_fd: TOL_FD,
            r0: 1.0,
            spray_override: None,
            skip_fraction: 0.01,
            predicate: Predicate::Counterexample,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.region.validate()?;
        for (name, v) in [("tol-jet", self.tol_jet), ("tol-fd", self.tol_fd)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::Config(format!("r0 must be positive, got {}", self.r0)));
        }
        if !(0.0..=1.0).contains(&self.skip_fraction) {
            return Err(Error::Config(format!(
                "skip fraction must lie in [0, 1], got {}",
                self.skip_fraction
            )));
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<Setup> {
        Ok(Setup {
            params: self.params.clone(),
            r0: self.r0,
            spray_override: self.spray_override.as_deref().map(parse_override).transpose()?,
        })
    }
}

/// Everything computed at one sample point.
#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub x: Point2,
    pub y: Direction2,
    pub r: f64,
    pub s: f64,
    pub w: f64,
    pub max_b: f64,
    /// `1 + max |∂²G/∂y²|`; every mean Berwald route is judged against it too.
    pub scale: f64,
    pub b_symmetry_defect: f64,
    pub e_trace: f64,
    pub e_general: f64,
    pub e_h_form: Option<f64>,
    pub e_dim2_derived: f64,
    pub e_dim2_printed: f64,
    pub bracket_relative: f64,
    pub general_vs_h_form: Option<f64>,
    pub h: f64,
    pub h_s: f64,
    pub h_scale: f64,
    pub h_derived_closed: f64,
    pub h_printed_closed: f64,
    /// Mean Berwald tensors of the calibration pair by the trace and general routes.
    pub probe_trace: MeanBerwald,
    pub probe_general: MeanBerwald,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkippedPoint {
    pub index: usize,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcludedPoint {
    pub index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TensorsSummary {
    pub points_evaluated: usize,
    pub max_b_abs: f64,
    pub max_b_relative: f64,
    pub max_symmetry_defect_relative: f64,
    pub max_b_index: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RouteSummary {
    pub points: usize,
    pub max_abs: f64,
    pub max_relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Routes {
    pub trace: RouteSummary,
    pub general_formula: RouteSummary,
    pub h_form: RouteSummary,
    pub dim2_family_derived: RouteSummary,
    pub dim2_family_printed: RouteSummary,
    pub general_vs_h_form_max_relative: f64,
    pub bracket_max_relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HSummary {
    pub min_abs: f64,
    pub max_abs: f64,
    pub min_relative: f64,
    /// Largest `|H - derived closed form| / scale`.
    pub derived_residual_max: f64,
    /// Largest `|H - printed closed form| / scale`.
    pub printed_discrepancy_max: f64,
}

/// Finite-difference third `y`-derivative of the spray at the point with the
/// largest Berwald tensor.
#[derive(Clone, Debug, Serialize)]
pub struct FdWitness {
    pub index: usize,
    pub x: Point2,
    pub y: Direction2,
    pub component: usize,
    pub derivative: String,
    pub fd: f64,
    pub jet: f64,
    pub scale: f64,
    pub fd_vanishes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub quadratic: bool,
    pub mean_berwald_zero: bool,
    pub h_nonzero: bool,
    pub condition7_necessary_counterexample: bool,
    pub predicate: Predicate,
    pub predicate_holds: bool,
}

impl Verdict {
    pub fn holds(&self, p: Predicate) -> bool {
        match p {
            Predicate::Counterexample => self.condition7_necessary_counterexample,
            Predicate::Quadratic => self.quadratic,
            Predicate::MeanBerwaldZero => self.mean_berwald_zero,
            Predicate::HNonzero => self.h_nonzero,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub samples: Vec<PointRecord>,
    pub tensors_summary: TensorsSummary,
    pub routes: Routes,
    pub h: HSummary,
    pub kappa: Option<KappaFit>,
    pub fd_witness: Option<FdWitness>,
    pub verdict: Verdict,
    pub skipped_points: Vec<SkippedPoint>,
    pub excluded_points: Vec<ExcludedPoint>,
    /// More points were lost to numerical errors than the configuration allows.
    pub numerical_failure: bool,
}

enum Outcome {
    Done(Box<PointRecord>, Option<ExcludedPoint>),
    Excluded(ExcludedPoint),
    Skipped(SkippedPoint),
}

fn evaluate_point(
    setup: &Setup,
    spray: &dyn Spray,
    probe: &(ExprPq, AnsatzSpray<ExprPq>),
    pt: &SamplePoint,
) -> Result<(PointRecord, Option<ExcludedPoint>)> {
    let (x, y) = (pt.x, pt.y);
    let t = pt.triple;
    let p = &setup.params;
    let source = setup.source();

    let b = berwald(spray, x, y)?;
    let e_trace = mean_berwald_from(&b);
    let pq = eval_pq(source.as_ref(), t.r, t.s)?;
    let e_general = e_closed_general(&pq, p.n, x, y);
    let h = h_scalars(source.as_ref(), p.n, t.r, t.s)?;
    let (e_h_form, excluded) = if t.s.abs() < S_EXCLUDE {
        let reason = format!("h-form route: |s| = {:e} < {S_EXCLUDE:e}", t.s.abs());
        (
            None,
            Some(ExcludedPoint {
                index: pt.index,
                reason,
            }),
        )
    } else {
        (Some(e_closed_h(&h, x, y)?), None)
    };
    let dim2 = e_family_dim2(p, x, y)?;
    let (probe_trace, probe_general) = trace_and_general(&probe.0, &probe.1, p.n, x, y)?;

    Ok((
        PointRecord {
            index: pt.index,
            x,
            y,
            r: t.r,
            s: t.s,
            w: t.w,
            max_b: b.max_abs(),
            scale: b.scale,
            b_symmetry_defect: b.symmetry_defect(),
            e_trace: e_trace.max_abs(),
            e_general: e_general.max_abs(),
            e_h_form: e_h_form.map(|e| e.max_abs()),
            e_dim2_derived: dim2.e_derived.max_abs(),
            e_dim2_printed: dim2.e_printed.max_abs(),
            bracket_relative: dim2.bracket_relative,
            general_vs_h_form: e_h_form.map(|e| e.distance(&e_general) / (1.0 + e_general.max_abs())),
            h: h.h,
            h_s: h.h_s,
            h_scale: h.scale,
            h_derived_closed: h_derived_closed(p, t.r, t.s)?,
            h_printed_closed: h_printed_closed(p, t.r, t.s)?,
            probe_trace,
            probe_general,
        },
        excluded,
    ))
}

fn route(records: &[PointRecord], get: impl Fn(&PointRecord) -> Option<f64>) -> RouteSummary {
    let mut out = RouteSummary {
        points: 0,
        max_abs: 0.0,
        max_relative: 0.0,
    };
    for rec in records {
        if let Some(v) = get(rec) {
            out.points += 1;
            out.max_abs = out.max_abs.max(v);
            out.max_relative = out.max_relative.max(v / rec.scale);
        }
    }
    out
}

fn fd_witness(spray: &dyn Spray, rec: &PointRecord, tol_fd: f64) -> Result<FdWitness> {
    let g = spray.jet(rec.x, rec.y, crate::jet::Caps::new(3, 0))?;
    let mut best: Option<FdWitness> = None;
    for component in 0..2 {
        for k in 0..=3u8 {
            let m = Multi::y(3 - k, k);
            let fd = fd_oracle(
                |xp, yp| Ok(spray.value(xp, yp)?[component]),
                rec.x,
                rec.y,
                m,
                default_step(3),
            )?;
            if best.as_ref().is_none_or(|b| fd.abs() > b.fd.abs()) {
                best = Some(FdWitness {
                    index: rec.index,
                    x: rec.x,
                    y: rec.y,
                    component: component + 1,
                    derivative: m.to_string(),
                    fd,
                    jet: g[component].extract(m)?,
                    scale: rec.scale,
                    fd_vanishes: vanishes(fd.abs(), rec.scale, tol_fd),
                });
            }
        }
    }
    Ok(best.expect("at least one derivative is probed"))
}

/// Runs the sweep. Configuration errors are returned; numerical errors at
/// individual points are logged in the report.
pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport> {
    config.validate()?;
    let setup = config.setup()?;
    let spray = setup.spray();
    let probe_pq = ExprPq::parse(KAPPA_PROBE.0, KAPPA_PROBE.1)?;
    let probe = (probe_pq.clone(), AnsatzSpray::new(probe_pq));
    let points = sample_points(&config.region)?;

    let outcomes: Vec<Outcome> = points
        .par_iter()
        .map(|pt| {
            if pt.triple.w < W_EXCLUDE * pt.triple.r {
                return Outcome::Excluded(ExcludedPoint {
                    index: pt.index,
                    reason: format!("w/r = {:e} < {W_EXCLUDE}", pt.triple.w / pt.triple.r),
                });
            }
            match evaluate_point(&setup, &spray, &probe, pt) {
                Ok((rec, ex)) => Outcome::Done(Box::new(rec), ex),
                Err(e) => Outcome::Skipped(SkippedPoint {
                    index: pt.index,
                    error: e.to_string(),
                }),
            }
        })
        .collect();

    let mut samples = Vec::new();
    let mut skipped_points = Vec::new();
    let mut excluded_points = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Done(rec, ex) => {
                samples.push(*rec);
                excluded_points.extend(ex);
            }
            Outcome::Excluded(ex) => excluded_points.push(ex),
            Outcome::Skipped(sk) => skipped_points.push(sk),
        }
    }

    let mut tensors = TensorsSummary {
        points_evaluated: samples.len(),
        max_b_abs: 0.0,
        max_b_relative: 0.0,
        max_symmetry_defect_relative: 0.0,
        max_b_index: None,
    };
    let mut witness_rec = None;
    for rec in &samples {
        let rel = rec.max_b / rec.scale;
        tensors.max_b_abs = tensors.max_b_abs.max(rec.max_b);
        tensors.max_symmetry_defect_relative = tensors
            .max_symmetry_defect_relative
            .max(rec.b_symmetry_defect / rec.scale);
        if witness_rec.is_none() || rel > tensors.max_b_relative {
            tensors.max_b_relative = rel;
            tensors.max_b_index = Some(rec.index);
            witness_rec = Some(rec);
        }
    }

    let routes = Routes {
        trace: route(&samples, |r| Some(r.e_trace)),
        general_formula: route(&samples, |r| Some(r.e_general)),
        h_form: route(&samples, |r| r.e_h_form),
        dim2_family_derived: route(&samples, |r| Some(r.e_dim2_derived)),
        dim2_family_printed: route(&samples, |r| Some(r.e_dim2_printed)),
        general_vs_h_form_max_relative: samples.iter().filter_map(|r| r.general_vs_h_form).fold(0.0, f64::max),
        bracket_max_relative: samples.iter().map(|r| r.bracket_relative).fold(0.0, f64::max),
    };

    let mut h = HSummary {
        min_abs: f64::INFINITY,
        max_abs: 0.0,
        min_relative: f64::INFINITY,
        derived_residual_max: 0.0,
        printed_discrepancy_max: 0.0,
    };
    for rec in &samples {
        h.min_abs = h.min_abs.min(rec.h.abs());
        h.max_abs = h.max_abs.max(rec.h.abs());
        h.min_relative = h.min_relative.min(rec.h.abs() / rec.h_scale);
        h.derived_residual_max = h
            .derived_residual_max
            .max((rec.h - rec.h_derived_closed).abs() / rec.h_scale);
        h.printed_discrepancy_max = h
            .printed_discrepancy_max
            .max((rec.h - rec.h_printed_closed).abs() / rec.h_scale);
    }

    let pairs: Vec<_> = samples.iter().map(|r| (r.probe_trace, r.probe_general)).collect();
    let kappa = fit_kappa(&pairs);

    let fd_witness = match witness_rec {
        Some(rec) => match fd_witness(&spray, rec, config.tol_fd) {
            Ok(w) => Some(w),
            Err(e) => {
                skipped_points.push(SkippedPoint {
                    index: rec.index,
                    error: format!("fd witness: {e}"),
                });
                None
            }
        },
        None => None,
    };

    let evaluated = !samples.is_empty();
    let quadratic = evaluated && vanishes(tensors.max_b_relative, 1.0, config.tol_jet);
    let mean_berwald_zero = evaluated
        && [&routes.trace, &routes.general_formula, &routes.h_form]
            .iter()
            .all(|r| vanishes(r.max_relative, 1.0, config.tol_jet));
    let h_nonzero = evaluated && h.min_relative > config.tol_jet;
    let counterexample = quadratic && mean_berwald_zero && h_nonzero;
    let mut verdict = Verdict {
        quadratic,
        mean_berwald_zero,
        h_nonzero,
        condition7_necessary_counterexample: counterexample,
        predicate: config.predicate,
        predicate_holds: false,
    };
    verdict.predicate_holds = verdict.holds(config.predicate);

    let numerical_failure =
        !evaluated || skipped_points.len() as f64 > config.skip_fraction * config.region.count as f64;

    Ok(VerifyReport {
        config: config.clone(),
        samples,
        tensors_summary: tensors,
        routes,
        h,
        kappa,
        fd_witness,
        verdict,
        skipped_points,
        excluded_points,
        numerical_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(params: ParamSet, count: usize) -> VerifyConfig {
        VerifyConfig {
            params,
            region: SampleRegion {
                count,
                ..SampleRegion::default()
            },
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn default_params_give_counterexample() {
        let rep = run_verify(&config(ParamSet::default(), 40)).unwrap();
        assert!(rep.verdict.condition7_necessary_counterexample, "{:?}", rep.verdict);
        assert!(rep.h.min_abs >= 1.0);
        assert!((rep.kappa.unwrap().kappa - 0.5).abs() < 1e-9);
        assert!(!rep.numerical_failure);
        assert!(rep.verdict.predicate_holds);
    }

    #[test]
    fn boundary_case_has_zero_h() {
        let p = ParamSet::from_strs(0.0, "1", "1", "-(r^2)/3", "1", "1").unwrap();
        let rep = run_verify(&config(p, 30)).unwrap();
        assert!(!rep.verdict.h_nonzero);
        assert!(rep.verdict.quadratic && rep.verdict.mean_berwald_zero);
        assert!(!rep.verdict.predicate_holds);
    }

    #[test]
    fn cubic_override_is_not_quadratic() {
        let mut c = config(ParamSet::default(), 20);
        c.spray_override = Some("s^3/r^2, 0".into());
        let rep = run_verify(&c).unwrap();
        assert!(!rep.verdict.quadratic);
        let w = rep.fd_witness.unwrap();
        assert!(w.fd.abs() >= 1e-3 && !w.fd_vanishes);
        assert!((w.fd - w.jet).abs() <= 1e-4 * (1.0 + w.jet.abs()));
    }

    #[test]
    fn override_syntax() {
        assert!(matches!(parse_override("s"), Err(Error::Config(_))));
        assert!(matches!(parse_override("s^,0"), Err(Error::Syntax { .. })));
        assert!(parse_override("s^3/r^2,0").is_ok());
    }

    #[test]
    fn report_is_reproducible() {
        let c = config(ParamSet::default(), 10);
        let a = serde_json::to_string(&run_verify(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&run_verify(&c).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predicate_names_roundtrip() {
        for p in [
            Predicate::Counterexample,
            Predicate::Quadratic,
            Predicate::MeanBerwaldZero,
            Predicate::HNonzero,
        ] {
            assert_eq!(p.to_string().parse::<Predicate>().unwrap(), p);
        }
        assert!("nope".parse::<Predicate>().is_err());
    }
}

//! Finsler functions: the spherically symmetric family metric, its fundamental
//! tensor, and the geodesic spray of an arbitrary metric.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{lift, Caps, Jet, Multi, Scalar, X1, X2, Y1, Y2};
use crate::kernel::{require_positive_cone, Direction2, Point2};
use crate::params::{a_of_r_jet, ParamSet};
use crate::quad::{check_path_singularities, integrate_vec, QuadOptions};
use crate::spray::Spray;

/// A Finsler function evaluated as a Taylor jet at a point.
pub trait Metric: Send + Sync {
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<Jet>;

    fn value(&self, x: Point2, y: Direction2) -> Result<f64> {
        Ok(self.jet(x, y, Caps::VALUE)?.value())
    }
}

impl<M: Metric + ?Sized> Metric for &M {
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<Jet> {
        (**self).jet(x, y, caps)
    }
}

impl<M: Metric + ?Sized> Metric for Box<M> {
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<Jet> {
        (**self).jet(x, y, caps)
    }
}

/// A metric given by a closure over the lifted coordinate jets `(x, y)`.
pub struct FnMetric<F>(pub F);

impl<F> Metric for FnMetric<F>
where
    F: Fn(&[Jet; 2], &[Jet; 2]) -> Result<Jet> + Send + Sync,
{
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<Jet> {
        let (xj, yj) = lift(x.to_array(), y.to_array(), caps);
        (self.0)(&xj, &yj)
    }
}

fn norm(v: &[Jet; 2]) -> Result<Jet> {
    (&v[0] * &v[0] + &v[1] * &v[1]).try_sqrt()
}

/// `F = |y|`.
pub fn euclidean() -> FnMetric<impl Fn(&[Jet; 2], &[Jet; 2]) -> Result<Jet> + Send + Sync> {
    FnMetric(|_: &[Jet; 2], y: &[Jet; 2]| norm(y))
}

/// `F = |y| e^{x1}`, a flat conformal metric.
pub fn conformal_exp_x1() -> FnMetric<impl Fn(&[Jet; 2], &[Jet; 2]) -> Result<Jet> + Send + Sync> {
    FnMetric(|x: &[Jet; 2], y: &[Jet; 2]| Ok(&norm(y)? * &x[0].exp()))
}

/// `F = 2|y| / (1 + |x|^2)`, the round sphere of curvature 1 in stereographic coordinates.
pub fn round_sphere() -> FnMetric<impl Fn(&[Jet; 2], &[Jet; 2]) -> Result<Jet> + Send + Sync> {
    FnMetric(|x: &[Jet; 2], y: &[Jet; 2]| {
        let den = &(&x[0] * &x[0] + &x[1] * &x[1]) + 1.0;
        (&norm(y)? * 2.0).try_div(&den)
    })
}

// (value, term magnitude) of the integrand's radical factor
// `(2 c0 r^2 - 1) sqrt(r^2 - t^2) - (c + 1) t` and of its numerator
fn phi_den(p: &ParamSet, t: f64, r: f64) -> Result<(f64, f64)> {
    let k = 2.0 * p.c0.eval_r(r)? * r * r - 1.0;
    let w = (r * r - t * t).max(0.0).sqrt();
    let b = (p.c + 1.0) * t;
    Ok((k * w - b, (k * w).abs() + b.abs()))
}

fn phi_num(p: &ParamSet, t: f64, r: f64) -> Result<(f64, f64)> {
    let k = 2.0 * p.c0.eval_r(r)? * r * r - 1.0;
    let w = (r * r - t * t).max(0.0).sqrt();
    let terms = [(p.c + 1.0) * t * t, -k * t * w, -2.0 * r * r * p.c];
    Ok((terms.iter().sum(), terms.iter().map(|v| v.abs()).sum()))
}

/// The integrand of the metric's exponent, with the integration variable `t`:
///
/// `((c+1) t^2 - (2 r^2 c0 - 1) t sqrt(r^2 - t^2) - 2 r^2 c)
///   / ((r^2 - t^2) ((2 c0 r^2 - 1) sqrt(r^2 - t^2) - (c+1) t))`.
pub fn phi_integrand<T: Scalar>(p: &ParamSet, t: &T, r: &T) -> Result<T> {
    let r2 = r.mul(r);
    let w2 = r2.sub(&t.mul(t));
    if !(w2.value() > 0.0) {
        return Err(Error::Domain(format!(
            "t^2 >= r^2 in metric integrand (t = {}, r = {})",
            t.value(),
            r.value()
        )));
    }
    let c0 = ParamSet::eval_radial(&p.c0, r)?;
    let w = w2.try_sqrt()?;
    let k = c0.mul(&r2).scale(2.0).sub(&r.constant_like(1.0));
    let num = t
        .mul(t)
        .scale(p.c + 1.0)
        .sub(&k.mul(t).mul(&w))
        .sub(&r2.scale(2.0 * p.c));
    let factor = k.mul(&w).sub(&t.scale(p.c + 1.0));
    if factor.value() == 0.0 {
        return Err(Error::SingularIntegrand { at: t.value() });
    }
    num.try_div(&w2.mul(&factor))
}

/// The family metric `F = u exp(∫_0^s φ(t, r) dt) a(r)`.
#[derive(Clone, Debug)]
pub struct FamilyMetric {
    pub params: ParamSet,
    /// Base point of the integral defining `a(r)`.
    pub r0: f64,
    /// Options for the integral over `[0, s]`.
    pub quad: QuadOptions,
    /// Options for the integral defining `a(r)`.
    pub quad_a: QuadOptions,
}

impl FamilyMetric {
    pub fn new(params: ParamSet, r0: f64) -> Self {
        Self {
            params,
            r0,
            quad: QuadOptions {
                abs_tol: 1e-13,
                rel_tol: 1e-13,
                ..QuadOptions::default()
            },
            quad_a: QuadOptions::default(),
        }
    }

    /// Bivariate Taylor coefficients `c[a][b]` of `Φ(s, r) = ∫_0^s φ(t, r) dt`
    /// about `(s, r)`, for `a <= s_order`, `b <= r_order`.
    fn exponent_taylor(&self, r: f64, s: f64, s_order: usize, r_order: usize) -> Result<Vec<Vec<f64>>> {
        let p = &self.params;
        let mut table = vec![vec![0.0; r_order + 1]; s_order + 1];

        // a = 0: ∫_0^s of the r-Taylor coefficients of φ
        let aux = Caps::new(0, r_order as u8);
        let integral = integrate_vec(
            |t| {
                let rj = Jet::variable(aux, X1, r);
                let phi = phi_integrand(p, &rj.constant_like(t), &rj)?;
                Ok((0..=r_order).map(|b| phi.taylor_coeff(Multi::x(b as u8, 0))).collect())
            },
            0.0,
            s,
            self.quad,
        )?;
        table[0].copy_from_slice(&integral.value);

        // a >= 1: ∂_s Φ = φ(s, r)
        if s_order >= 1 {
            let aux = Caps::new((s_order - 1) as u8, r_order as u8);
            let tj = Jet::variable(aux, Y1, s);
            let rj = Jet::variable(aux, X1, r);
            let phi = phi_integrand(p, &tj, &rj)?;
            for (a, row) in table.iter_mut().enumerate().skip(1) {
                for (b, slot) in row.iter_mut().enumerate() {
                    *slot = phi.taylor_coeff(Multi::new((a - 1) as u8, 0, b as u8, 0)) / a as f64;
                }
            }
        }
        Ok(table)
    }
}

impl Metric for FamilyMetric {
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<Jet> {
        require_positive_cone(x, y)?;
        let (xj, yj) = lift(x.to_array(), y.to_array(), caps);
        let r = norm(&xj)?;
        let u = norm(&yj)?;
        let s = (&xj[0] * &yj[0] + &xj[1] * &yj[1]).try_div(&u)?;
        let (rv, sv) = (r.value(), s.value());
        let p = &self.params;
        check_path_singularities(|t| phi_den(p, t, rv), |t| phi_num(p, t, rv), 0.0, sv, 128)?;
        let s_order = caps.y as usize + caps.x as usize;
        let r_order = caps.x as usize;
        let table = self.exponent_taylor(rv, sv, s_order, r_order)?;

        let ds = &s - sv;
        let dr = &r - rv;
        let mut dr_pows = vec![r.constant_like(1.0)];
        for b in 1..=r_order {
            dr_pows.push(&dr_pows[b - 1] * &dr);
        }
        let mut exponent = r.constant_like(0.0);
        let mut ds_pow = r.constant_like(1.0);
        for (a, row) in table.iter().enumerate() {
            if a > 0 {
                ds_pow = &ds_pow * &ds;
            }
            for (b, coeff) in row.iter().enumerate() {
                if *coeff != 0.0 {
                    exponent = exponent + &(&ds_pow * &dr_pows[b]) * *coeff;
                }
            }
        }
        let a = a_of_r_jet(p, &r, self.r0, self.quad_a)?;
        Ok(&(&u * &exponent.exp()) * &a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FundamentalTensor {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub det: f64,
    pub positive_definite: bool,
}

impl FundamentalTensor {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.g11, self.g12], [self.g12, self.g22]]
    }

    pub fn trace(&self) -> f64 {
        self.g11 + self.g22
    }

    /// Whether `|det| < 1e-12 (trace)^2`.
    pub fn is_degenerate(&self) -> bool {
        is_degenerate(self.det, self.trace())
    }

    pub fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        if self.is_degenerate() {
            return Err(Error::DegenerateMetric { det: self.det });
        }
        let d = self.det;
        Ok([[self.g22 / d, -self.g12 / d], [-self.g12 / d, self.g11 / d]])
    }

    /// `g_ij y^i y^j`.
    pub fn quadratic_form(&self, y: Direction2) -> f64 {
        self.g11 * y.y1 * y.y1 + 2.0 * self.g12 * y.y1 * y.y2 + self.g22 * y.y2 * y.y2
    }
}

const DEGENERACY: f64 = 1e-12;

fn is_degenerate(det: f64, trace: f64) -> bool {
    !(det.abs() >= DEGENERACY * trace * trace) || det == 0.0
}

/// `g_ij = ½ ∂²F²/∂y^i∂y^j`.
pub fn fundamental_tensor(metric: &dyn Metric, x: Point2, y: Direction2) -> Result<FundamentalTensor> {
    let f = metric.jet(x, y, Caps::new(2, 0))?;
    let l = &f * &f;
    let g11 = 0.5 * l.extract(Multi::y(2, 0))?;
    let g12 = 0.5 * l.extract(Multi::y(1, 1))?;
    let g22 = 0.5 * l.extract(Multi::y(0, 2))?;
    let det = g11 * g22 - g12 * g12;
    Ok(FundamentalTensor {
        g11,
        g12,
        g22,
        det,
        positive_definite: g11 > 0.0 && det > 0.0,
    })
}

/// Geodesic spray of a metric:
/// `G^i = ¼ g^{il} (∂²F²/∂x^k∂y^l y^k - ∂F²/∂x^l)`.
pub struct MetricSpray<M> {
    pub metric: M,
}

impl<M: Metric> MetricSpray<M> {
    pub fn new(metric: M) -> Self {
        Self { metric }
    }
}

impl<M: Metric> Spray for MetricSpray<M> {
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<[Jet; 2]> {
        let big = Caps::new(caps.y + 2, caps.x + 1);
        let f = self.metric.jet(x, y, big)?;
        let l = &f * &f;
        let ys = [Y1, Y2];
        let xs = [X1, X2];
        let ly: Vec<Jet> = ys.iter().map(|&v| l.partial(v)).collect::<Result<_>>()?;
        let mut g = [
            [l.constant_like(0.0), l.constant_like(0.0)],
            [l.constant_like(0.0), l.constant_like(0.0)],
        ];
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] = ly[i].partial(ys[j])?.truncate(caps)? * 0.5;
            }
        }
        let (_, yj) = lift(x.to_array(), y.to_array(), caps);
        let mut v = Vec::with_capacity(2);
        for l_idx in 0..2 {
            let mut acc = -l.partial(xs[l_idx])?.truncate(caps)?;
            for k in 0..2 {
                let lxy = ly[l_idx].partial(xs[k])?.truncate(caps)?;
                acc = acc + &lxy * &yj[k];
            }
            v.push(acc);
        }
        let det = &g[0][0] * &g[1][1] - &g[0][1] * &g[0][1];
        let trace = g[0][0].value() + g[1][1].value();
        if is_degenerate(det.value(), trace) {
            return Err(Error::DegenerateMetric { det: det.value() });
        }
        let inv_det = det.try_recip()?;
        let ginv = [
            [&g[1][1] * &inv_det, -(&g[0][1] * &inv_det)],
            [-(&g[0][1] * &inv_det), &g[0][0] * &inv_det],
        ];
        Ok([0, 1].map(|i| (&(&ginv[i][0] * &v[0]) + &(&ginv[i][1] * &v[1])) * 0.25))
    }
}

pub fn spray_from_metric(metric: &dyn Metric, x: Point2, y: Direction2) -> Result<[f64; 2]> {
    MetricSpray::new(metric).value(x, y)
}

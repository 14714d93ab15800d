//! Berwald, mean Berwald, Landsberg and flag curvature of a spray, together with
//! the closed forms of the mean Berwald curvature for sprays of the form
//! `G^i = u P y^i + u^2 Q x^i`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{default_step, fd_oracle};
use crate::jet::{Caps, Jet, Multi, X1, X2, Y1, Y2};
use crate::kernel::{dot, Direction2, Point2};
use crate::metric::{fundamental_tensor, Metric};
use crate::params::ParamSet;
use crate::spray::{eval_pq, pq_jets, PqSource, PqValue, Spray};

const YS: [usize; 2] = [Y1, Y2];
const XS: [usize; 2] = [X1, X2];

/// Default relative tolerance for quantities computed from jets.
pub const TOL_JET: f64 = 1e-10;
/// Default relative tolerance for quantities computed by finite differences.
pub const TOL_FD: f64 = 1e-4;

/// Whether a tensor with largest entry `max_entry` counts as zero.
pub fn vanishes(max_entry: f64, scale: f64, tol: f64) -> bool {
    max_entry <= tol * scale
}

/// `B^i_{jkl} = ∂³G^i/∂y^j∂y^k∂y^l`, stored as `b[i][j][k][l]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BerwaldTensor {
    pub b: [[[[f64; 2]; 2]; 2]; 2],
    /// `1 + max |∂²G^i/∂y^j∂y^k|`, the yardstick for "vanishes".
    pub scale: f64,
}

impl BerwaldTensor {
    pub fn max_abs(&self) -> f64 {
        self.b
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest difference between entries related by a permutation of the lower indices.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let v = self.b[i][j][k][l];
                        for p in [
                            self.b[i][j][l][k],
                            self.b[i][k][j][l],
                            self.b[i][k][l][j],
                            self.b[i][l][j][k],
                            self.b[i][l][k][j],
                        ] {
                            worst = worst.max((v - p).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Third `y`-derivatives of the spray, taken as successive partials in the
/// index order `j, k, l`.
pub fn berwald(spray: &dyn Spray, x: Point2, y: Direction2) -> Result<BerwaldTensor> {
    let g = spray.jet(x, y, Caps::new(3, 0))?;
    let mut b = [[[[0.0; 2]; 2]; 2]; 2];
    let mut second: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let gj = g[i].partial(YS[j])?;
            for k in 0..2 {
                let gjk = gj.partial(YS[k])?;
                second = second.max(gjk.value().abs());
                for l in 0..2 {
                    b[i][j][k][l] = gjk.partial(YS[l])?.value();
                }
            }
        }
    }
    Ok(BerwaldTensor { b, scale: 1.0 + second })
}

/// How a mean Berwald tensor was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Half the trace of the Berwald tensor.
    Trace,
    /// The four-term formula in `P`, `Q` and their `s`-derivatives.
    GeneralFormula,
    /// The same formula rewritten through `H`, `H_s`.
    HForm,
    /// The closed form for the family in dimension two.
    Dim2Family,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanBerwald {
    pub e11: f64,
    pub e12: f64,
    pub e22: f64,
    pub route: Route,
}

impl MeanBerwald {
    pub fn from_matrix(m: [[f64; 2]; 2], route: Route) -> Self {
        Self {
            e11: m[0][0],
            e12: 0.5 * (m[0][1] + m[1][0]),
            e22: m[1][1],
            route,
        }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.e11, self.e12], [self.e12, self.e22]]
    }

    pub fn max_abs(&self) -> f64 {
        self.e11.abs().max(self.e12.abs()).max(self.e22.abs())
    }

    /// Largest entrywise difference from `other`.
    pub fn distance(&self, other: &MeanBerwald) -> f64 {
        (self.e11 - other.e11)
            .abs()
            .max((self.e12 - other.e12).abs())
            .max((self.e22 - other.e22).abs())
    }
}

/// `E_ij = ½ B^m_{mij}`.
pub fn mean_berwald_from(b: &BerwaldTensor) -> MeanBerwald {
    let mut e = [[0.0; 2]; 2];
    for (i, row) in e.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = 0.5 * (b.b[0][0][i][j] + b.b[1][1][i][j]);
        }
    }
    MeanBerwald::from_matrix(e, Route::Trace)
}

pub fn mean_berwald_trace(spray: &dyn Spray, x: Point2, y: Direction2) -> Result<MeanBerwald> {
    Ok(mean_berwald_from(&berwald(spray, x, y)?))
}

/// `H = (n+1)(P - s P_s) + (r^2 - s^2)(Q_s - s Q_ss)` and its `s`-derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HScalars {
    pub r: f64,
    pub s: f64,
    pub n: f64,
    pub h: f64,
    pub h_s: f64,
    pub s_hs_plus_h: f64,
    /// `1 + |(n+1)(P - s P_s)| + |(r^2 - s^2)(Q_s - s Q_ss)|`.
    pub scale: f64,
}

pub fn h_scalars(source: &dyn PqSource, n: f64, r: f64, s: f64) -> Result<HScalars> {
    if s * s >= r * r {
        return Err(Error::Domain(format!("s^2 >= r^2 (r = {r}, s = {s})")));
    }
    let (p, q) = pq_jets(source, r, s)?;
    let keep = Caps::new(1, 0);
    let p0 = p.truncate(keep)?;
    let p1 = p.partial(Y1)?.truncate(keep)?;
    let q1 = q.partial(Y1)?;
    let q2 = q1.partial(Y1)?.truncate(keep)?;
    let q1 = q1.truncate(keep)?;
    let sj = Jet::variable(keep, Y1, s);
    let w2 = &(&sj * &sj) * -1.0 + r * r;
    let first = (&p0 - &(&sj * &p1)) * (n + 1.0);
    let second = &w2 * &(&q1 - &(&sj * &q2));
    let h = &first + &second;
    let h_s = h.extract(Multi::y(1, 0))?;
    Ok(HScalars {
        r,
        s,
        n,
        h: h.value(),
        h_s,
        s_hs_plus_h: s * h_s + h.value(),
        scale: 1.0 + first.value().abs() + second.value().abs(),
    })
}

/// `H` for the family from its hand-derived closed form
/// `((n+1) f2 + c1 r^2) r^2 / sqrt(r^2 - s^2)`.
pub fn h_derived_closed(p: &ParamSet, r: f64, s: f64) -> Result<f64> {
    let w = family_w(r, s)?;
    Ok(((p.n + 1.0) * p.f2.eval_r(r)? + p.c1.eval_r(r)? * r * r) * r * r / w)
}

/// The commonly quoted closed form `(3 f2 + c1) r^2 / sqrt(r^2 - s^2)`; it agrees
/// with the definition only at `r = 1`.
pub fn h_printed_closed(p: &ParamSet, r: f64, s: f64) -> Result<f64> {
    let w = family_w(r, s)?;
    Ok((3.0 * p.f2.eval_r(r)? + p.c1.eval_r(r)?) * r * r / w)
}

fn family_w(r: f64, s: f64) -> Result<f64> {
    let w2 = r * r - s * s;
    if !(w2 > 0.0) {
        return Err(Error::Domain(format!("s^2 >= r^2 (r = {r}, s = {s})")));
    }
    Ok(w2.sqrt())
}

fn xs_ys(x: Point2, y: Direction2) -> ([f64; 2], [f64; 2], f64, f64, f64) {
    let xv = x.to_array();
    let yv = y.to_array();
    let u = y.norm();
    let r = x.norm();
    (xv, yv, u, r, dot(x, y) / u)
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// The four-term mean Berwald formula, evaluated term by term from `P`, `Q` and
/// their `s`-derivatives at `(r, s)` of the point.
pub fn e_closed_general(pq: &PqValue, n: f64, x: Point2, y: Direction2) -> MeanBerwald {
    let (xv, yv, u, r, s) = xs_ys(x, y);
    let [p, p1, p2, ..] = pq.p;
    let [_, q1, q2, q3, _] = pq.q;
    let m = n + 1.0;
    let r2 = r * r;
    let w2 = r2 - s * s;
    let a_delta = m * (p - s * p1) + w2 * (q1 - s * q2);
    let a_yy = m * (s * s * p2 + s * p1 - p) + r2 * (s * s * q3 + s * q2 - q1) + 3.0 * s * s * q1
        - 3.0 * s * s * s * q2
        - s.powi(4) * q3;
    let a_xx = m * p2 + 2.0 * (q1 - s * q2) + w2 * q3;
    let mut e = [[0.0; 2]; 2];
    for (i, row) in e.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = delta(i, j) / u * a_delta + yv[i] * yv[j] / u.powi(3) * a_yy + xv[i] * xv[j] / u * a_xx
                - s * (xv[i] * yv[j] + xv[j] * yv[i]) / (u * u) * a_xx;
        }
    }
    MeanBerwald::from_matrix(e, Route::GeneralFormula)
}

/// Below this `|s|` the `H`-form is not evaluated.
pub const S_AXIS_GUARD: f64 = 1e-9;

/// `E_ij = δ_ij H/u - y_i y_j (s H_s + H)/u^3 + (s (x_i y_j + x_j y_i) - u x_i x_j) H_s / (s u^2)`.
pub fn e_closed_h(h: &HScalars, x: Point2, y: Direction2) -> Result<MeanBerwald> {
    let (xv, yv, u, _, s) = xs_ys(x, y);
    if s.abs() < S_AXIS_GUARD {
        return Err(Error::SAxisSingular { s });
    }
    let mut e = [[0.0; 2]; 2];
    for (i, row) in e.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = delta(i, j) / u * h.h - yv[i] * yv[j] / u.powi(3) * h.s_hs_plus_h
                + (s * (xv[i] * yv[j] + xv[j] * yv[i]) - u * xv[i] * xv[j]) / (s * u * u) * h.h_s;
        }
    }
    Ok(MeanBerwald::from_matrix(e, Route::HForm))
}

/// The dimension-two family closed form: a radial prefactor times the tensor
/// `δ_ij u^2 (r^2 - s^2) - r^2 y_i y_j + s u (x_i y_j + x_j y_i) - u^2 x_i x_j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dim2Family {
    pub bracket: [[f64; 2]; 2],
    /// `max |bracket| / (u^2 r^2)`.
    pub bracket_relative: f64,
    /// `(3 f2 + c1) r^2 / (u^3 w^3)`, the commonly quoted prefactor.
    pub prefactor_printed: f64,
    /// `(3 f2 + c1 r^2) r^2 / (u^3 w^3)` from direct differentiation.
    pub prefactor_derived: f64,
    pub e_printed: MeanBerwald,
    pub e_derived: MeanBerwald,
}

pub fn bracket_tensor(x: Point2, y: Direction2) -> [[f64; 2]; 2] {
    let (xv, yv, u, r, s) = xs_ys(x, y);
    let mut m = [[0.0; 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = delta(i, j) * u * u * (r * r - s * s) - r * r * yv[i] * yv[j]
                + s * u * (xv[i] * yv[j] + xv[j] * yv[i])
                - u * u * xv[i] * xv[j];
        }
    }
    m
}

pub fn e_family_dim2(p: &ParamSet, x: Point2, y: Direction2) -> Result<Dim2Family> {
    let (_, _, u, r, s) = xs_ys(x, y);
    let w = family_w(r, s)?;
    let (f2, c1) = (p.f2.eval_r(r)?, p.c1.eval_r(r)?);
    let denom = u.powi(3) * w.powi(3);
    let prefactor_printed = (3.0 * f2 + c1) * r * r / denom;
    let prefactor_derived = (3.0 * f2 + c1 * r * r) * r * r / denom;
    let bracket = bracket_tensor(x, y);
    let scaled = |k: f64| MeanBerwald::from_matrix(bracket.map(|row| row.map(|v| k * v)), Route::Dim2Family);
    let max_bracket = bracket.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(Dim2Family {
        bracket,
        bracket_relative: max_bracket / (u * u * r * r),
        prefactor_printed,
        prefactor_derived,
        e_printed: scaled(prefactor_printed),
        e_derived: scaled(prefactor_derived),
    })
}

/// Landsberg tensor `L_ijk = -½ y_m B^m_ijk` with `y_m = g_ml y^l`, and its
/// trace `J_k = g^ij L_ijk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Landsberg {
    pub l: [[[f64; 2]; 2]; 2],
    pub j: [f64; 2],
}

impl Landsberg {
    pub fn max_abs_l(&self) -> f64 {
        self.l.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_j(&self) -> f64 {
        self.j[0].abs().max(self.j[1].abs())
    }
}

pub fn landsberg(metric: &dyn Metric, spray: &dyn Spray, x: Point2, y: Direction2) -> Result<Landsberg> {
    let g = fundamental_tensor(metric, x, y)?;
    let ginv = g.inverse()?;
    let gm = g.matrix();
    let yv = y.to_array();
    let lowered = [0, 1].map(|m| gm[m][0] * yv[0] + gm[m][1] * yv[1]);
    let b = berwald(spray, x, y)?;
    let mut l = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                l[i][j][k] = -0.5 * (lowered[0] * b.b[0][i][j][k] + lowered[1] * b.b[1][i][j][k]);
            }
        }
    }
    let mut jv = [0.0; 2];
    for (k, slot) in jv.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                *slot += ginv[i][j] * l[i][j][k];
            }
        }
    }
    Ok(Landsberg { l, j: jv })
}

/// Riemann curvature `R^i_k` of a spray and the flag curvature `K = R^m_m / F^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlagCurvature {
    pub riemann: [[f64; 2]; 2],
    pub f: f64,
    pub k: f64,
}

// Derivatives of a spray needed for R^i_k: value, y-gradient, y-Hessian,
// x-gradient and mixed x-y derivatives.
struct SprayDerivs {
    g: [f64; 2],
    gy: [[f64; 2]; 2],
    gyy: [[[f64; 2]; 2]; 2],
    gx: [[f64; 2]; 2],
    gxy: [[[f64; 2]; 2]; 2],
}

fn riemann(d: &SprayDerivs, y: Direction2) -> [[f64; 2]; 2] {
    let yv = y.to_array();
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            let mut v = 2.0 * d.gx[i][k];
            for j in 0..2 {
                v -= yv[j] * d.gxy[i][j][k];
                v += 2.0 * d.g[j] * d.gyy[i][j][k];
                v -= d.gy[i][j] * d.gy[j][k];
            }
            r[i][k] = v;
        }
    }
    r
}

fn assemble_k(metric: &dyn Metric, x: Point2, y: Direction2, riemann: [[f64; 2]; 2]) -> Result<FlagCurvature> {
    let f = metric.value(x, y)?;
    if !(f > 0.0) {
        return Err(Error::Domain(format!("Finsler function must be positive, got {f}")));
    }
    Ok(FlagCurvature {
        riemann,
        f,
        k: (riemann[0][0] + riemann[1][1]) / (f * f),
    })
}

pub fn flag_curvature(metric: &dyn Metric, spray: &dyn Spray, x: Point2, y: Direction2) -> Result<FlagCurvature> {
    let g = spray.jet(x, y, Caps::new(2, 1))?;
    let mut d = SprayDerivs {
        g: [g[0].value(), g[1].value()],
        gy: [[0.0; 2]; 2],
        gyy: [[[0.0; 2]; 2]; 2],
        gx: [[0.0; 2]; 2],
        gxy: [[[0.0; 2]; 2]; 2],
    };
    for i in 0..2 {
        for a in 0..2 {
            d.gy[i][a] = g[i].extract(Multi::unit(YS[a]))?;
            d.gx[i][a] = g[i].extract(Multi::unit(XS[a]))?;
            for b in 0..2 {
                d.gyy[i][a][b] = g[i].extract(Multi::from_y_indices(&[a, b]))?;
                let mut m = Multi::unit(XS[a]);
                m.0[YS[b]] += 1;
                d.gxy[i][a][b] = g[i].extract(m)?;
            }
        }
    }
    assemble_k(metric, x, y, riemann(&d, y))
}

/// [`flag_curvature`] with every spray derivative taken by central differences.
pub fn flag_curvature_fd(metric: &dyn Metric, spray: &dyn Spray, x: Point2, y: Direction2) -> Result<FlagCurvature> {
    let deriv = |i: usize, m: Multi| fd_oracle(|xp, yp| Ok(spray.value(xp, yp)?[i]), x, y, m, default_step(m.order()));
    let g = spray.value(x, y)?;
    let mut d = SprayDerivs {
        g,
        gy: [[0.0; 2]; 2],
        gyy: [[[0.0; 2]; 2]; 2],
        gx: [[0.0; 2]; 2],
        gxy: [[[0.0; 2]; 2]; 2],
    };
    for i in 0..2 {
        for a in 0..2 {
            d.gy[i][a] = deriv(i, Multi::unit(YS[a]))?;
            d.gx[i][a] = deriv(i, Multi::unit(XS[a]))?;
            for b in 0..2 {
                d.gyy[i][a][b] = deriv(i, Multi::from_y_indices(&[a, b]))?;
                let mut m = Multi::unit(XS[a]);
                m.0[YS[b]] += 1;
                d.gxy[i][a][b] = deriv(i, m)?;
            }
        }
    }
    assemble_k(metric, x, y, riemann(&d, y))
}

/// Least-squares fit of `trace = κ · general` over sample pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaFit {
    pub kappa: f64,
    /// Largest `|trace - κ general|` relative to `1 + |general|` entrywise.
    pub max_deviation: f64,
    pub samples: usize,
}

pub fn fit_kappa(pairs: &[(MeanBerwald, MeanBerwald)]) -> Option<KappaFit> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, g) in pairs {
        for (a, b) in t.matrix().iter().flatten().zip(g.matrix().iter().flatten()) {
            num += a * b;
            den += b * b;
        }
    }
    if !(den > 0.0) {
        return None;
    }
    let kappa = num / den;
    let mut max_deviation: f64 = 0.0;
    for (t, g) in pairs {
        for (a, b) in t.matrix().iter().flatten().zip(g.matrix().iter().flatten()) {
            max_deviation = max_deviation.max((a - kappa * b).abs() / (1.0 + b.abs()));
        }
    }
    Some(KappaFit {
        kappa,
        max_deviation,
        samples: pairs.len(),
    })
}

/// The `P`, `Q` pair used to calibrate κ: generic enough that no route vanishes.
pub const KAPPA_PROBE: (&str, &str) = ("s^2/r", "s^3/r^2");

/// Mean Berwald tensors by the trace and general-formula routes for one spray.
pub fn trace_and_general(
    source: &dyn PqSource,
    spray: &dyn Spray,
    n: f64,
    x: Point2,
    y: Direction2,
) -> Result<(MeanBerwald, MeanBerwald)> {
    let (_, _, _, r, s) = xs_ys(x, y);
    let pq = eval_pq(source, r, s)?;
    Ok((mean_berwald_trace(spray, x, y)?, e_closed_general(&pq, n, x, y)))
}

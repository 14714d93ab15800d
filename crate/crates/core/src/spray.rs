//! Sprays of the form `G^i = u P(r, s) y^i + u^2 Q(r, s) x^i`, their exact
//! quadratic expansion, and the inverse problem of reading `(P, Q)` back off a
//! spray.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::RadialExpr;
use crate::jet::{lift, Caps, Jet, Multi, Y1};
use crate::kernel::{cross, require_positive_cone, Cone, Direction2, Point2};
use crate::params::ParamSet;

/// Anything that yields spray coefficients `(G1, G2)` as Taylor jets at a point.
pub trait Spray: Send + Sync {
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<[Jet; 2]>;

    fn value(&self, x: Point2, y: Direction2) -> Result<[f64; 2]> {
        let g = self.jet(x, y, Caps::VALUE)?;
        Ok([g[0].value(), g[1].value()])
    }
}

impl<S: Spray + ?Sized> Spray for &S {
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<[Jet; 2]> {
        (**self).jet(x, y, caps)
    }
}

impl<S: Spray + ?Sized> Spray for Box<S> {
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<[Jet; 2]> {
        (**self).jet(x, y, caps)
    }
}

/// A spray given by a closure over the lifted coordinate jets `(x, y)`.
pub struct FnSpray<F>(pub F);

impl<F> Spray for FnSpray<F>
where
    F: Fn(&[Jet; 2], &[Jet; 2]) -> Result<[Jet; 2]> + Send + Sync,
{
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<[Jet; 2]> {
        let (xj, yj) = lift(x.to_array(), y.to_array(), caps);
        (self.0)(&xj, &yj)
    }
}

/// The zero spray.
pub fn zero_spray() -> FnSpray<impl Fn(&[Jet; 2], &[Jet; 2]) -> Result<[Jet; 2]> + Send + Sync> {
    FnSpray(|x: &[Jet; 2], _: &[Jet; 2]| Ok([x[0].constant_like(0.0), x[0].constant_like(0.0)]))
}

/// The pair `(P, Q)` as functions of the jets `r` and `s`.
pub trait PqSource: Send + Sync {
    fn pq(&self, r: &Jet, s: &Jet) -> Result<(Jet, Jet)>;
}

/// `P = f1 s + f2 sqrt(r^2 - s^2)`, `Q = c0 + c2 s^2 + c1 s sqrt(r^2 - s^2)`.
#[derive(Clone, Debug)]
pub struct FamilyPq {
    pub params: ParamSet,
}

impl FamilyPq {
    pub fn new(params: ParamSet) -> Self {
        Self { params }
    }
}

impl PqSource for FamilyPq {
    fn pq(&self, r: &Jet, s: &Jet) -> Result<(Jet, Jet)> {
        let p = &self.params;
        let radial = |e: &RadialExpr| ParamSet::eval_radial(e, r);
        let w2 = r * r - s * s;
        if w2.value() <= 0.0 {
            return Err(Error::Domain(format!(
                "s^2 >= r^2 (r = {}, s = {})",
                r.value(),
                s.value()
            )));
        }
        let w = w2.try_sqrt()?;
        let big_p = &radial(&p.f1)? * s + &radial(&p.f2)? * &w;
        let big_q = radial(&p.c0)? + &radial(&p.c2)? * &(s * s) + &radial(&p.c1)? * &(s * &w);
        Ok((big_p, big_q))
    }
}

/// `P` and `Q` given as expressions in `r` and `s`.
#[derive(Clone, Debug)]
pub struct ExprPq {
    pub p: RadialExpr,
    pub q: RadialExpr,
}

impl ExprPq {
    pub fn parse(p: &str, q: &str) -> Result<Self> {
        Ok(Self {
            p: p.parse()?,
            q: q.parse()?,
        })
    }
}

impl PqSource for ExprPq {
    fn pq(&self, r: &Jet, s: &Jet) -> Result<(Jet, Jet)> {
        Ok((self.p.eval(r, s)?, self.q.eval(r, s)?))
    }
}

/// `base + (dP, dQ)`.
#[derive(Clone, Debug)]
pub struct Perturbed<S> {
    pub base: S,
    pub delta: ExprPq,
}

impl<S: PqSource> PqSource for Perturbed<S> {
    fn pq(&self, r: &Jet, s: &Jet) -> Result<(Jet, Jet)> {
        let (p, q) = self.base.pq(r, s)?;
        let (dp, dq) = self.delta.pq(r, s)?;
        Ok((p + dp, q + dq))
    }
}

impl<S: PqSource + ?Sized> PqSource for &S {
    fn pq(&self, r: &Jet, s: &Jet) -> Result<(Jet, Jet)> {
        (**self).pq(r, s)
    }
}

impl<S: PqSource + ?Sized> PqSource for Box<S> {
    fn pq(&self, r: &Jet, s: &Jet) -> Result<(Jet, Jet)> {
        (**self).pq(r, s)
    }
}

/// The spray `G^i = u P y^i + u^2 Q x^i` on the positive cone.
#[derive(Clone, Debug)]
pub struct AnsatzSpray<S> {
    pub source: S,
}

impl<S: PqSource> AnsatzSpray<S> {
    pub fn new(source: S) -> Self {
        Self { source }
    }
}

impl<S: PqSource> Spray for AnsatzSpray<S> {
    fn jet(&self, x: Point2, y: Direction2, caps: Caps) -> Result<[Jet; 2]> {
        require_positive_cone(x, y)?;
        let (xj, yj) = lift(x.to_array(), y.to_array(), caps);
        let r = (&xj[0] * &xj[0] + &xj[1] * &xj[1]).try_sqrt()?;
        let u = (&yj[0] * &yj[0] + &yj[1] * &yj[1]).try_sqrt()?;
        let s = (&xj[0] * &yj[0] + &xj[1] * &yj[1]).try_div(&u)?;
        let (p, q) = self.source.pq(&r, &s)?;
        let up = &u * &p;
        let uuq = &(&u * &u) * &q;
        Ok([&up * &yj[0] + &uuq * &xj[0], &up * &yj[1] + &uuq * &xj[1]])
    }
}

/// The family spray for a parameter set.
pub fn family_spray(params: &ParamSet) -> AnsatzSpray<FamilyPq> {
    AnsatzSpray::new(FamilyPq::new(params.clone()))
}

/// `P`, `Q` and their `s`-derivatives up to fourth order at `(r, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PqValue {
    pub r: f64,
    pub s: f64,
    /// `[P, P_s, P_ss, P_sss, P_ssss]`
    pub p: [f64; 5],
    /// `[Q, Q_s, Q_ss, Q_sss, Q_ssss]`
    pub q: [f64; 5],
}

/// Evaluates `(P, Q)` with `s` lifted to a jet and returns the jets as well.
pub fn pq_jets(source: &dyn PqSource, r: f64, s: f64) -> Result<(Jet, Jet)> {
    let caps = Caps::new(4, 0);
    let sj = Jet::variable(caps, Y1, s);
    let rj = sj.constant_like(r);
    source.pq(&rj, &sj)
}

pub fn eval_pq(source: &dyn PqSource, r: f64, s: f64) -> Result<PqValue> {
    if s * s >= r * r {
        return Err(Error::Domain(format!("s^2 >= r^2 (r = {r}, s = {s})")));
    }
    let (pj, qj) = pq_jets(source, r, s)?;
    let mut p = [0.0; 5];
    let mut q = [0.0; 5];
    for k in 0..5 {
        p[k] = pj.extract(Multi::y(k as u8, 0))?;
        q[k] = qj.extract(Multi::y(k as u8, 0))?;
    }
    Ok(PqValue { r, s, p, q })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SprayValue {
    pub g1: f64,
    pub g2: f64,
}

pub fn spray_closed(params: &ParamSet, x: Point2, y: Direction2) -> Result<SprayValue> {
    let [g1, g2] = family_spray(params).value(x, y)?;
    Ok(SprayValue { g1, g2 })
}

/// `G^i = A_i y1^2 + 2 B_i y1 y2 + C_i y2^2` at a fixed `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticSpray {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
}

impl QuadraticSpray {
    pub fn eval(&self, y: Direction2) -> [f64; 2] {
        let (y1, y2) = (y.y1, y.y2);
        [0, 1].map(|i| self.a[i] * y1 * y1 + 2.0 * self.b[i] * y1 * y2 + self.c[i] * y2 * y2)
    }

    /// Coefficients of the monomials `(y1^2, y1 y2, y2^2)` in `G^i`.
    pub fn monomial_coeffs(&self, i: usize) -> [f64; 3] {
        [self.a[i], 2.0 * self.b[i], self.c[i]]
    }

    /// The connection coefficients `Γ^i_{jk} = ∂²G^i/∂y^j∂y^k`.
    pub fn hessian(&self, i: usize) -> [[f64; 2]; 2] {
        [[2.0 * self.a[i], 2.0 * self.b[i]], [2.0 * self.b[i], 2.0 * self.c[i]]]
    }
}

/// Polynomial coefficients of the family spray, read off from
/// `u P = f1 <x,y> ± f2 (x1 y2 - x2 y1)` and
/// `u^2 Q = c0 |y|^2 + c2 <x,y>^2 ± c1 (x1^2 y1 y2 - x1 x2 y1^2 + x1 x2 y2^2 - x2^2 y1 y2)`,
/// where the sign is that of the cone.
pub fn quadratic_coeffs(params: &ParamSet, x: Point2, cone: Cone) -> Result<QuadraticSpray> {
    let r = x.norm();
    let at = |e: &RadialExpr| e.eval_r(r);
    let (f1, f2, c0, c1, c2) = (
        at(&params.f1)?,
        cone.sign() * at(&params.f2)?,
        at(&params.c0)?,
        cone.sign() * at(&params.c1)?,
        at(&params.c2)?,
    );
    let (x1, x2) = (x.x1, x.x2);
    // u^2 Q as a quadratic form: [y1^2, y1 y2, y2^2]
    let q = [
        c0 + c2 * x1 * x1 - c1 * x1 * x2,
        2.0 * c2 * x1 * x2 + c1 * (x1 * x1 - x2 * x2),
        c0 + c2 * x2 * x2 + c1 * x1 * x2,
    ];
    // u P as a linear form: [y1, y2]
    let lin = [f1 * x1 - f2 * x2, f1 * x2 + f2 * x1];
    // uP y^1 contributes lin[0] y1^2 + lin[1] y1 y2; uP y^2 gives lin[0] y1 y2 + lin[1] y2^2
    let g1 = [lin[0] + x1 * q[0], lin[1] + x1 * q[1], x1 * q[2]];
    let g2 = [x2 * q[0], lin[0] + x2 * q[1], lin[1] + x2 * q[2]];
    Ok(QuadraticSpray {
        a: [g1[0], g2[0]],
        b: [g1[1] / 2.0, g2[1] / 2.0],
        c: [g1[2], g2[2]],
    })
}

/// Solves `G = (u P) y + (u^2 Q) x` for `(P, Q)` at a point.
pub fn extract_pq(spray: &dyn Spray, x: Point2, y: Direction2) -> Result<(f64, f64)> {
    let c = cross(x, y);
    if c.abs() < 1e-12 * x.norm() * y.norm() || c == 0.0 {
        return Err(Error::CollinearInputs { cross: c });
    }
    let [g1, g2] = spray.value(x, y)?;
    // columns y and x; determinant y1 x2 - y2 x1 = -cross
    let det = -c;
    let up = (g1 * x.x2 - g2 * x.x1) / det;
    let uuq = (y.y1 * g2 - y.y2 * g1) / det;
    let u = y.norm();
    Ok((up / u, uuq / (u * u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::scalar_triple;

    fn params(f1: &str, f2: &str, c0: &str, c1: &str, c2: &str) -> ParamSet {
        ParamSet::from_strs(0.0, c0, f1, f2, c1, c2).unwrap()
    }

    #[test]
    fn pq_at_hand_points() {
        let fam = FamilyPq::new(params("1", "1", "1", "0", "0"));
        let v = eval_pq(&fam, 1.0, 0.0).unwrap();
        assert_eq!((v.p[0], v.q[0]), (1.0, 1.0));

        let zero = FamilyPq::new(params("0", "0", "0", "0", "0"));
        let v = eval_pq(&zero, 1.3, 0.2).unwrap();
        assert_eq!((v.p[0], v.q[0]), (0.0, 0.0));

        let lin = FamilyPq::new(params("1", "0", "0", "0", "0"));
        let v = eval_pq(&lin, 2.0, 1.0).unwrap();
        assert!((v.p[0] - 1.0).abs() < 1e-15);
        assert!((v.p[1] - 1.0).abs() < 1e-15);
        assert!(v.p[2].abs() < 1e-15);
    }

    #[test]
    fn pq_outside_disc_is_domain_error() {
        let fam = FamilyPq::new(ParamSet::default());
        assert!(matches!(eval_pq(&fam, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(eval_pq(&fam, 1.0, -1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn spray_at_hand_points() {
        let p = params("1", "1", "1", "0", "0");
        let g = spray_closed(&p, Point2::new(1.0, 0.0), Direction2::new(0.0, 1.0)).unwrap();
        assert!((g.g1 - 1.0).abs() < 1e-15 && (g.g2 - 1.0).abs() < 1e-15, "{g:?}");

        let z = params("0", "0", "0", "0", "0");
        let g = spray_closed(&z, Point2::new(0.3, 1.0), Direction2::new(-1.0, 0.2)).unwrap();
        assert_eq!((g.g1, g.g2), (0.0, 0.0));
    }

    #[test]
    fn spray_is_two_homogeneous() {
        let p = params("r", "1 + r^2", "2", "-r", "1/r");
        let x = Point2::new(0.6, 0.9);
        let y = Direction2::new(-0.8, 0.5);
        let a = spray_closed(&p, x, y).unwrap();
        let b = spray_closed(&p, x, y.scaled(2.0)).unwrap();
        assert!((b.g1 - 4.0 * a.g1).abs() < 1e-13 * (1.0 + b.g1.abs()));
        assert!((b.g2 - 4.0 * a.g2).abs() < 1e-13 * (1.0 + b.g2.abs()));
    }

    #[test]
    fn spray_requires_positive_cone() {
        let p = ParamSet::default();
        let err = spray_closed(&p, Point2::new(1.0, 0.0), Direction2::new(0.0, -1.0));
        assert!(matches!(err, Err(Error::OrientationViolation { .. })));
    }

    #[test]
    fn hand_expanded_coefficients() {
        let p = params("1", "2", "3", "4", "5");
        let q = quadratic_coeffs(&p, Point2::new(1.0, 0.0), Cone::Positive).unwrap();
        assert_eq!(q.monomial_coeffs(0), [9.0, 6.0, 3.0]);
        assert_eq!(q.monomial_coeffs(1), [0.0, 1.0, 2.0]);
        let z = params("0", "0", "0", "0", "0");
        let q = quadratic_coeffs(&z, Point2::new(0.4, -2.0), Cone::Positive).unwrap();
        assert_eq!(q.monomial_coeffs(0), [0.0; 3]);
        assert_eq!(q.monomial_coeffs(1), [0.0; 3]);
    }

    #[test]
    fn negative_cone_flips_radical_blocks() {
        // on cross < 0 the closed form with sqrt(r^2 - s^2) equals the expansion with -f2, -c1
        let p = params("0.5", "1.5", "-1", "2", "0.25");
        let x = Point2::new(0.7, -1.1);
        let y = Direction2::new(-0.9, -0.1);
        assert!(cross(x, y) < 0.0);
        let t = scalar_triple(x, y).unwrap();
        let (pp, qq) = {
            let fam = FamilyPq::new(p.clone());
            let v = eval_pq(&fam, t.r, t.s).unwrap();
            (v.p[0], v.q[0])
        };
        let direct = [
            t.u * pp * y.y1 + t.u * t.u * qq * x.x1,
            t.u * pp * y.y2 + t.u * t.u * qq * x.x2,
        ];
        let neg = quadratic_coeffs(&p, x, Cone::Negative).unwrap().eval(y);
        for i in 0..2 {
            assert!((direct[i] - neg[i]).abs() < 1e-12 * (1.0 + direct[i].abs()));
        }
    }

    #[test]
    fn expansion_reproduces_closed_form() {
        let p = params("r - 1", "exp(-r)", "1/(1+r^2)", "r^2", "-2");
        let x = Point2::new(-0.4, 1.2);
        for k in 0..100 {
            let ang = 0.05 + 3.0 * k as f64 / 100.0;
            let th = x.x2.atan2(x.x1) + ang;
            let y = Direction2::new(1.3 * th.cos(), 1.3 * th.sin());
            let closed = spray_closed(&p, x, y).unwrap();
            let quad = quadratic_coeffs(&p, x, Cone::Positive).unwrap().eval(y);
            let scale = 1.0 + closed.g1.abs().max(closed.g2.abs());
            assert!((closed.g1 - quad[0]).abs() <= 1e-12 * scale);
            assert!((closed.g2 - quad[1]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn extract_inverts_the_ansatz() {
        let p = params("r", "2 - r", "0.5", "r^2", "1/r");
        let spray = family_spray(&p);
        let x = Point2::new(1.1, 0.3);
        let y = Direction2::new(-0.2, 0.9);
        let (pp, qq) = extract_pq(&spray, x, y).unwrap();
        let t = scalar_triple(x, y).unwrap();
        let v = eval_pq(&spray.source, t.r, t.s).unwrap();
        assert!((pp - v.p[0]).abs() < 1e-10 * (1.0 + v.p[0].abs()));
        assert!((qq - v.q[0]).abs() < 1e-10 * (1.0 + v.q[0].abs()));

        assert_eq!(extract_pq(&zero_spray(), x, y).unwrap(), (0.0, 0.0));
        assert!(matches!(
            extract_pq(&spray, Point2::new(1.0, 0.0), Direction2::new(2.0, 0.0)),
            Err(Error::CollinearInputs { .. })
        ));
    }

    #[test]
    fn extracted_pq_depends_only_on_r_and_s() {
        let p = params("r", "2 - r", "0.5", "r^2", "1/r");
        let spray = family_spray(&p);
        let x = Point2::new(1.1, 0.3);
        let y = Direction2::new(-0.2, 0.9);
        // rotate both x and y by the same angle: r, s unchanged
        let rot = |a: f64, v: [f64; 2]| [v[0] * a.cos() - v[1] * a.sin(), v[0] * a.sin() + v[1] * a.cos()];
        let xr = rot(2.1, x.to_array());
        let yr = rot(2.1, y.to_array());
        let a = extract_pq(&spray, x, y).unwrap();
        let b = extract_pq(&spray, Point2::new(xr[0], xr[1]), Direction2::new(yr[0], yr[1])).unwrap();
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    }
}

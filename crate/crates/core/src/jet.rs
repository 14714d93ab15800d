//! Truncated multivariate Taylor arithmetic over the four tangent-bundle
//! coordinates `(y1, y2, x1, x2)`.
//!
//! A [`Jet`] stores Taylor coefficients (partials divided by the multinomial
//! factorial) for every monomial whose total degree in the `y` group is at most
//! `caps.y` and whose total degree in the `x` group is at most `caps.x`. The
//! monomials outside that box form an ideal, so truncated products are exact.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Variable slots, in storage order.
pub const Y1: usize = 0;
pub const Y2: usize = 1;
pub const X1: usize = 2;
pub const X2: usize = 3;

/// Order caps of a jet: total degree in `y` and total degree in `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Caps {
    pub y: u8,
    pub x: u8,
}

impl Caps {
    pub const fn new(y: u8, x: u8) -> Self {
        Self { y, x }
    }

    /// Caps used throughout for spray and curvature work.
    pub const DEFAULT: Caps = Caps::new(4, 2);

    /// Plain values, no derivatives.
    pub const VALUE: Caps = Caps::new(0, 0);

    pub fn contains(&self, d: Multi) -> bool {
        d.y_order() <= self.y as u32 && d.x_order() <= self.x as u32
    }

    fn covers(&self, other: Caps) -> bool {
        self.y >= other.y && self.x >= other.x
    }
}

impl fmt::Display for Caps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(y <= {}, x <= {})", self.y, self.x)
    }
}

/// Multi-index of differentiation over `(y1, y2, x1, x2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multi(pub [u8; 4]);

impl Multi {
    pub const ZERO: Multi = Multi([0; 4]);

    pub const fn new(y1: u8, y2: u8, x1: u8, x2: u8) -> Self {
        Multi([y1, y2, x1, x2])
    }

    pub const fn y(y1: u8, y2: u8) -> Self {
        Multi([y1, y2, 0, 0])
    }

    pub const fn x(x1: u8, x2: u8) -> Self {
        Multi([0, 0, x1, x2])
    }

    /// Unit multi-index along one variable slot.
    pub fn unit(var: usize) -> Self {
        let mut m = [0; 4];
        m[var] = 1;
        Multi(m)
    }

    /// Multi-index of `∂/∂y^{i_1} ... ∂/∂y^{i_k}` for indices in `{0, 1}`.
    pub fn from_y_indices(indices: &[usize]) -> Self {
        let mut m = [0u8; 4];
        for &i in indices {
            m[i] += 1;
        }
        Multi(m)
    }

    pub fn y_order(&self) -> u32 {
        self.0[0] as u32 + self.0[1] as u32
    }

    pub fn x_order(&self) -> u32 {
        self.0[2] as u32 + self.0[3] as u32
    }

    pub fn order(&self) -> u32 {
        self.y_order() + self.x_order()
    }

    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k as u32)).product()
    }

    fn checked_add(&self, other: &Multi) -> [u8; 4] {
        let mut m = [0; 4];
        for k in 0..4 {
            m[k] = self.0[k] + other.0[k];
        }
        m
    }
}

impl fmt::Display for Multi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["y1", "y2", "x1", "x2"];
        if self.order() == 0 {
            return write!(f, "value");
        }
        write!(f, "d")?;
        for (k, name) in names.iter().enumerate() {
            match self.0[k] {
                0 => {}
                1 => write!(f, "/d{name}")?,
                e => write!(f, "/d{name}^{e}")?,
            }
        }
        Ok(())
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

struct Layout {
    caps: Caps,
    monos: Vec<Multi>,
    // dense lookup over [0..=y]^2 x [0..=x]^2, -1 for monomials outside the caps
    table: Vec<i32>,
    // (lhs, rhs, out) index triples of the truncated product
    products: Vec<(u16, u16, u16)>,
}

impl Layout {
    fn build(caps: Caps) -> Layout {
        let (ny, nx) = (caps.y as usize + 1, caps.x as usize + 1);
        let mut monos = Vec::new();
        let mut table = vec![-1i32; ny * ny * nx * nx];
        // graded order so that index 0 is the constant term
        for total in 0..=(caps.y as u32 + caps.x as u32) {
            for a in 0..ny {
                for b in 0..ny {
                    for c in 0..nx {
                        for d in 0..nx {
                            let m = Multi([a as u8, b as u8, c as u8, d as u8]);
                            if m.order() == total && caps.contains(m) {
                                let slot = ((a * ny + b) * nx + c) * nx + d;
                                table[slot] = monos.len() as i32;
                                monos.push(m);
                            }
                        }
                    }
                }
            }
        }
        let mut layout = Layout {
            caps,
            monos,
            table,
            products: Vec::new(),
        };
        let mut products = Vec::new();
        for (i, mi) in layout.monos.iter().enumerate() {
            for (j, mj) in layout.monos.iter().enumerate() {
                if let Some(k) = layout.index_raw(mi.checked_add(mj)) {
                    products.push((i as u16, j as u16, k as u16));
                }
            }
        }
        layout.products = products;
        layout
    }

    fn index_raw(&self, m: [u8; 4]) -> Option<usize> {
        let (ny, nx) = (self.caps.y as usize + 1, self.caps.x as usize + 1);
        let [a, b, c, d] = m.map(|v| v as usize);
        if a >= ny || b >= ny || c >= nx || d >= nx {
            return None;
        }
        let v = self.table[((a * ny + b) * nx + c) * nx + d];
        (v >= 0).then_some(v as usize)
    }

    fn index(&self, m: Multi) -> Option<usize> {
        self.index_raw(m.0)
    }
}

fn layout(caps: Caps) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<Caps, Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet layout cache poisoned");
    guard
        .entry(caps)
        .or_insert_with(|| Arc::new(Layout::build(caps)))
        .clone()
}

/// A truncated Taylor expansion about a fixed point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (mono, c) in self.layout.monos.iter().zip(&self.coeffs) {
            if *c != 0.0 {
                m.entry(&mono.to_string(), c);
            }
        }
        m.finish()
    }
}

impl Jet {
    pub fn constant(caps: Caps, value: f64) -> Jet {
        let layout = layout(caps);
        let mut coeffs = vec![0.0; layout.monos.len()];
        coeffs[0] = value;
        Jet { layout, coeffs }
    }

    /// The coordinate function of slot `var`, valued `value` at the expansion point.
    /// When the group cap of `var` is zero the result is a constant.
    pub fn variable(caps: Caps, var: usize, value: f64) -> Jet {
        let mut j = Jet::constant(caps, value);
        if let Some(k) = j.layout.index(Multi::unit(var)) {
            j.coeffs[k] = 1.0;
        }
        j
    }

    /// Constant with the same caps as `self`.
    pub fn constant_like(&self, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    pub fn caps(&self) -> Caps {
        self.layout.caps
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw Taylor coefficient of a monomial (zero outside the caps).
    pub fn taylor_coeff(&self, m: Multi) -> f64 {
        self.layout.index(m).map_or(0.0, |k| self.coeffs[k])
    }

    /// The true partial derivative for the multi-index `d`.
    pub fn extract(&self, d: Multi) -> Result<f64> {
        let k = self.layout.index(d).ok_or(Error::CapTooSmall {
            request: d,
            caps: self.caps(),
        })?;
        Ok(self.coeffs[k] * d.factorial())
    }

    /// Iterator over `(multi-index, Taylor coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (Multi, f64)> + '_ {
        self.layout.monos.iter().copied().zip(self.coeffs.iter().copied())
    }

    pub fn max_abs_derivative(&self) -> f64 {
        self.terms()
            .skip(1)
            .map(|(m, c)| (c * m.factorial()).abs())
            .fold(0.0, f64::max)
    }

    /// Jet of `∂self/∂(var)`; the group cap of `var` drops by one.
    pub fn partial(&self, var: usize) -> Result<Jet> {
        let caps = self.caps();
        let new_caps = if var < X1 {
            if caps.y == 0 {
                return Err(Error::CapTooSmall {
                    request: Multi::unit(var),
                    caps,
                });
            }
            Caps::new(caps.y - 1, caps.x)
        } else {
            if caps.x == 0 {
                return Err(Error::CapTooSmall {
                    request: Multi::unit(var),
                    caps,
                });
            }
            Caps::new(caps.y, caps.x - 1)
        };
        let out_layout = layout(new_caps);
        let mut coeffs = vec![0.0; out_layout.monos.len()];
        for (k, m) in out_layout.monos.iter().enumerate() {
            let mut up = m.0;
            up[var] += 1;
            if let Some(src) = self.layout.index_raw(up) {
                coeffs[k] = self.coeffs[src] * up[var] as f64;
            }
        }
        Ok(Jet {
            layout: out_layout,
            coeffs,
        })
    }

    /// Drops all monomials outside `caps`.
    pub fn truncate(&self, caps: Caps) -> Result<Jet> {
        if !self.caps().covers(caps) {
            return Err(Error::CapTooSmall {
                request: Multi::new(caps.y, 0, caps.x, 0),
                caps: self.caps(),
            });
        }
        if caps == self.caps() {
            return Ok(self.clone());
        }
        let out_layout = layout(caps);
        let coeffs = out_layout.monos.iter().map(|m| self.taylor_coeff(*m)).collect();
        Ok(Jet {
            layout: out_layout,
            coeffs,
        })
    }

    /// `f(self)` for a univariate `f` given by its Taylor coefficients
    /// `taylor[k] = f^(k)(v0) / k!` at `v0 = self.value()`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = self.constant_like(taylor.first().copied().unwrap_or(0.0));
        let max_power = self.caps().y as usize + self.caps().x as usize;
        let mut power = self.constant_like(1.0);
        for coeff in taylor.iter().take(max_power + 1).skip(1) {
            power = &power * &delta;
            if power.coeffs.iter().all(|c| *c == 0.0) {
                break;
            }
            out.axpy(*coeff, &power);
        }
        out
    }

    fn axpy(&mut self, a: f64, other: &Jet) {
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
    }

    fn order_bound(&self) -> usize {
        self.caps().y as usize + self.caps().x as usize
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let taylor: Vec<f64> = (0..=self.order_bound()).map(|k| e / factorial(k as u32)).collect();
        self.compose(&taylor)
    }

    pub fn try_sqrt(&self) -> Result<Jet> {
        let v = self.value();
        if !(v > 0.0) {
            return Err(Error::Domain(format!("sqrt of nonpositive value {v}")));
        }
        // binomial(1/2, k) v^(1/2 - k)
        let mut taylor = Vec::with_capacity(self.order_bound() + 1);
        let mut binom = 1.0;
        let mut pow = v.sqrt();
        for k in 0..=self.order_bound() {
            taylor.push(binom * pow);
            binom *= (0.5 - k as f64) / (k as f64 + 1.0);
            pow /= v;
        }
        Ok(self.compose(&taylor))
    }

    pub fn try_recip(&self) -> Result<Jet> {
        let v = self.value();
        if v == 0.0 || !v.is_finite() {
            return Err(Error::Domain(format!("division by {v}")));
        }
        let mut taylor = Vec::with_capacity(self.order_bound() + 1);
        let mut term = 1.0 / v;
        for _ in 0..=self.order_bound() {
            taylor.push(term);
            term *= -1.0 / v;
        }
        Ok(self.compose(&taylor))
    }

    pub fn try_ln(&self) -> Result<Jet> {
        let v = self.value();
        if !(v > 0.0) {
            return Err(Error::Domain(format!("log of nonpositive value {v}")));
        }
        let mut taylor = vec![v.ln()];
        for k in 1..=self.order_bound() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            taylor.push(sign / (k as f64 * v.powi(k as i32)));
        }
        Ok(self.compose(&taylor))
    }

    pub fn try_div(&self, rhs: &Jet) -> Result<Jet> {
        Ok(self * &rhs.try_recip()?)
    }

    /// Integer power; negative exponents need a nonzero value.
    pub fn try_powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.try_recip()?.try_powi(-n);
        }
        let mut out = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(out)
    }

    fn assert_same(&self, other: &Jet) {
        assert!(
            Arc::ptr_eq(&self.layout, &other.layout),
            "jet caps mismatch: {} vs {}",
            self.caps(),
            other.caps()
        );
    }
}

/// The coordinate jets `([x1, x2], [y1, y2])` seeded at a point.
pub fn lift(x: [f64; 2], y: [f64; 2], caps: Caps) -> ([Jet; 2], [Jet; 2]) {
    (
        [Jet::variable(caps, X1, x[0]), Jet::variable(caps, X2, x[1])],
        [Jet::variable(caps, Y1, y[0]), Jet::variable(caps, Y2, y[1])],
    )
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.assert_same(rhs);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.layout.products {
            coeffs[k as usize] += self.coeffs[i as usize] * rhs.coeffs[j as usize];
        }
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.assert_same(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.assert_same(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * rhs).collect(),
        }
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self + (-rhs)
    }
}

impl Div<f64> for &Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { <&Jet as $tr<&Jet>>::$m(&self, &rhs) }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet { <&Jet as $tr<&Jet>>::$m(&self, rhs) }
        }
        impl<'a> $tr<Jet> for &'a Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { <&Jet as $tr<&Jet>>::$m(self, &rhs) }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet { <&Jet as $tr<f64>>::$m(&self, rhs) }
        }
    )*};
}

forward_owned!(Add add, Sub sub, Mul mul);

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        <&Jet as Div<f64>>::div(&self, rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

/// Numbers that expressions and closed-form formulas can be evaluated on:
/// plain reals or jets.
pub trait Scalar: Clone + Sized {
    fn constant_like(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, k: f64) -> Self;
    fn try_div(&self, rhs: &Self) -> Result<Self>;
    fn try_sqrt(&self) -> Result<Self>;
    fn exp(&self) -> Self;
    fn try_powi(&self, n: i32) -> Result<Self>;
}

impl Scalar for f64 {
    fn constant_like(&self, v: f64) -> f64 {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, rhs: &f64) -> f64 {
        self + rhs
    }
    fn sub(&self, rhs: &f64) -> f64 {
        self - rhs
    }
    fn mul(&self, rhs: &f64) -> f64 {
        self * rhs
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn scale(&self, k: f64) -> f64 {
        self * k
    }
    fn try_div(&self, rhs: &f64) -> Result<f64> {
        if *rhs == 0.0 || !rhs.is_finite() {
            return Err(Error::Domain(format!("division by {rhs}")));
        }
        Ok(self / rhs)
    }
    fn try_sqrt(&self) -> Result<f64> {
        if !(*self > 0.0) {
            return Err(Error::Domain(format!("sqrt of nonpositive value {self}")));
        }
        Ok(self.sqrt())
    }
    fn exp(&self) -> f64 {
        f64::exp(*self)
    }
    fn try_powi(&self, n: i32) -> Result<f64> {
        if n < 0 && *self == 0.0 {
            return Err(Error::Domain("negative power of zero".into()));
        }
        Ok(self.powi(n))
    }
}

impl Scalar for Jet {
    fn constant_like(&self, v: f64) -> Jet {
        Jet::constant_like(self, v)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add(&self, rhs: &Jet) -> Jet {
        self + rhs
    }
    fn sub(&self, rhs: &Jet) -> Jet {
        self - rhs
    }
    fn mul(&self, rhs: &Jet) -> Jet {
        self * rhs
    }
    fn neg(&self) -> Jet {
        -self
    }
    fn scale(&self, k: f64) -> Jet {
        self * k
    }
    fn try_div(&self, rhs: &Jet) -> Result<Jet> {
        Jet::try_div(self, rhs)
    }
    fn try_sqrt(&self) -> Result<Jet> {
        Jet::try_sqrt(self)
    }
    fn exp(&self) -> Jet {
        Jet::exp(self)
    }
    fn try_powi(&self, n: i32) -> Result<Jet> {
        Jet::try_powi(self, n)
    }
}

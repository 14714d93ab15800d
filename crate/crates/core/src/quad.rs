//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature for vector-valued
//! integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 21-point Kronrod abscissae on [0, 1); odd entries are the 10-point Gauss nodes
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F>(f: &F, a: f64, b: f64) -> Result<Segment>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let dim = fc.len();
    let mut kronrod: Vec<f64> = fc.iter().map(|v| v * WGK[10]).collect();
    let mut gauss = vec![0.0; dim];
    for j in 0..10 {
        let dx = half * XGK[j];
        let lo = f(center - dx)?;
        let hi = f(center + dx)?;
        for k in 0..dim {
            let pair = lo[k] + hi[k];
            kronrod[k] += WGK[j] * pair;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * pair;
            }
        }
    }
    let mut error: f64 = 0.0;
    for k in 0..dim {
        kronrod[k] *= half;
        gauss[k] *= half;
        error = error.max((kronrod[k] - gauss[k]).abs());
    }
    if kronrod.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularIntegrand { at: center });
    }
    Ok(Segment {
        a,
        b,
        value: kronrod,
        error,
    })
}

/// Integrates a vector-valued `f` over `[a, b]` (either orientation).
/// The error norm is the maximum over components.
pub fn integrate_vec<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    if a == b {
        let dim = f(a)?.len();
        return Ok(QuadResult {
            value: vec![0.0; dim],
            error: 0.0,
            intervals: 0,
            evaluations: 1,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let first = gk21(&f, lo, hi)?;
    let mut total = first.value.clone();
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut evaluations = 21;
    let target = |total: &[f64]| {
        let mag = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        opts.abs_tol.max(opts.rel_tol * mag)
    };
    while total_err > target(&total) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure {
                error: total_err,
                tol: target(&total),
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureFailure {
                error: total_err,
                tol: target(&total),
                intervals: heap.len() + 1,
            });
        }
        let left = gk21(&f, worst.a, mid)?;
        let right = gk21(&f, mid, worst.b)?;
        evaluations += 42;
        for k in 0..total.len() {
            total[k] += left.value[k] + right.value[k] - worst.value[k];
        }
        heap.push(left);
        heap.push(right);
        // re-sum instead of updating incrementally so cancellation cannot drift
        total_err = heap.iter().map(|s| s.error).sum();
    }
    let intervals = heap.len();
    // final value summed from the segments for the same reason
    let mut value = vec![0.0; total.len()];
    for seg in heap.iter() {
        for k in 0..value.len() {
            value[k] += seg.value[k];
        }
    }
    Ok(QuadResult {
        value: value.into_iter().map(|v| sign * v).collect(),
        error: total_err,
        intervals,
        evaluations,
    })
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    integrate_vec(|t| Ok(vec![f(t)?]), a, b, opts).map(|r| r.value[0])
}

/// Screens `[a, b]` for poles of `num/den` before integrating.
///
/// Both closures return `(value, scale)` where `scale` is the magnitude of the
/// terms summed into `value`. A sign change of `den` is bisected; the root is a
/// pole unless `num` vanishes there as well (a removable singularity, which the
/// open Gauss–Kronrod nodes step around). A `den` that is numerically zero at two
/// consecutive grid points is treated as identically zero.
pub fn check_path_singularities<D, N>(den: D, num: N, a: f64, b: f64, samples: usize) -> Result<()>
where
    D: Fn(f64) -> Result<(f64, f64)>,
    N: Fn(f64) -> Result<(f64, f64)>,
{
    const ZERO: f64 = 1e-12;
    const REMOVABLE: f64 = 1e-8;
    let at = |k: usize| a + (b - a) * k as f64 / samples as f64;
    let is_zero = |(v, scale): (f64, f64)| v.abs() <= ZERO * scale.max(f64::MIN_POSITIVE);
    let check_root = |t: f64| -> Result<()> {
        let (nv, ns) = num(t)?;
        if nv.abs() > REMOVABLE * (1.0 + ns) {
            return Err(Error::SingularIntegrand { at: t });
        }
        Ok(())
    };
    let mut prev: Option<(f64, (f64, f64))> = None;
    let mut prev_zero = false;
    for k in 0..=samples {
        let t = at(k);
        let d = den(t)?;
        if !d.0.is_finite() {
            return Err(Error::SingularIntegrand { at: t });
        }
        let zero = is_zero(d);
        if zero {
            if prev_zero {
                return Err(Error::SingularIntegrand { at: t });
            }
            check_root(t)?;
        } else if let Some((tp, dp)) = prev {
            if !is_zero(dp) && dp.0.signum() != d.0.signum() {
                // bisect the bracket [tp, t]
                let (mut lo, mut hi, sign_lo) = (tp, t, dp.0.signum());
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo.min(hi) || mid >= lo.max(hi) {
                        break;
                    }
                    let dm = den(mid)?.0;
                    if dm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if dm.signum() == sign_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                check_root(0.5 * (lo + hi))?;
            }
        }
        prev_zero = zero;
        prev = Some((t, d));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|t| Ok(3.0 * t * t - 2.0 * t + 1.0), -1.0, 2.0, QuadOptions::default()).unwrap();
        // [t^3 - t^2 + t] from -1 to 2 = 6 - (-3)
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_interval_negates() {
        let f = |t: f64| Ok(t.exp());
        let fwd = integrate(f, 0.0, 1.0, QuadOptions::default()).unwrap();
        let back = integrate(f, 1.0, 0.0, QuadOptions::default()).unwrap();
        assert!((fwd - (1f64.exp() - 1.0)).abs() < 1e-13);
        assert_eq!(fwd, -back);
    }

    #[test]
    fn peaked_integrand_adapts() {
        // integral of 1/(1e-4 + t^2) over [-1, 1] = 2/sqrt(1e-4) * atan(1/sqrt(1e-4))
        let eps: f64 = 1e-4;
        let exact = 2.0 / eps.sqrt() * (1.0 / eps.sqrt()).atan();
        let res = integrate_vec(|t| Ok(vec![1.0 / (eps + t * t)]), -1.0, 1.0, QuadOptions::default()).unwrap();
        assert!(res.intervals > 1);
        assert!((res.value[0] - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn vector_components_integrate_independently() {
        let res = integrate_vec(|t| Ok(vec![1.0, t, t.sin()]), 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((res.value[0] - 2.0).abs() < 1e-14);
        assert!((res.value[1] - 2.0).abs() < 1e-14);
        assert!((res.value[2] - (1.0 - 2f64.cos())).abs() < 1e-13);
    }

    #[test]
    fn unmet_tolerance_is_an_error() {
        let opts = QuadOptions {
            max_intervals: 4,
            ..QuadOptions::default()
        };
        let err = integrate(|t| Ok(1.0 / (1e-8 + t * t)), -1.0, 1.0, opts).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure { .. }));
    }

    #[test]
    fn path_screening() {
        let lin = |t: f64| Ok((t - 0.3, t.abs() + 0.3));
        // pole: numerator 1 at the root
        assert!(matches!(
            check_path_singularities(lin, |_| Ok((1.0, 1.0)), 0.0, 1.0, 64),
            Err(Error::SingularIntegrand { at }) if (at - 0.3).abs() < 1e-12
        ));
        // removable: numerator has the same root
        assert!(check_path_singularities(lin, lin, 0.0, 1.0, 64).is_ok());
        // no root
        assert!(check_path_singularities(|t| Ok((t + 0.3, 1.0)), |_| Ok((1.0, 1.0)), 0.0, 1.0, 64).is_ok());
        // identically zero
        assert!(check_path_singularities(|_| Ok((1e-17, 1.0)), |_| Ok((0.0, 1.0)), 0.0, 1.0, 64).is_err());
    }
}

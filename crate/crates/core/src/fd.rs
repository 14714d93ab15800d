//! Central finite differences over `(y1, y2, x1, x2)`: the independent oracle
//! the jet arithmetic is checked against.

use crate::error::Result;
use crate::jet::Multi;
use crate::kernel::{Direction2, Point2};

/// Default step for a derivative of the given total order.
///
/// Steps balance the O(h^2) truncation error of the stencils against the
/// O(eps/h^k) rounding error.
pub fn default_step(order: u32) -> f64 {
    match order {
        0 | 1 => 1e-5,
        2 => 1e-4,
        3 => 1e-3,
        _ => 2e-3,
    }
}

// offsets (in units of h) and weights of second-order central stencils
fn stencil(order: u8) -> (&'static [f64], &'static [f64]) {
    match order {
        0 => (&[0.0], &[1.0]),
        1 => (&[-1.0, 1.0], &[-0.5, 0.5]),
        2 => (&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0]),
        3 => (&[-2.0, -1.0, 1.0, 2.0], &[-0.5, 1.0, -1.0, 0.5]),
        4 => (&[-2.0, -1.0, 0.0, 1.0, 2.0], &[1.0, -4.0, 6.0, -4.0, 1.0]),
        _ => panic!("finite-difference stencils only go to order 4 per variable"),
    }
}

/// Central finite-difference estimate of the partial `d` of `f` at `(x, y)`.
pub fn fd_oracle<F>(f: F, x: Point2, y: Direction2, d: Multi, h: f64) -> Result<f64>
where
    F: Fn(Point2, Direction2) -> Result<f64>,
{
    let base = [y.y1, y.y2, x.x1, x.x2];
    let stencils: Vec<_> = d.0.iter().map(|&k| stencil(k)).collect();
    let mut total = 0.0;
    let mut idx = [0usize; 4];
    loop {
        let mut p = base;
        let mut weight = 1.0;
        for v in 0..4 {
            let (off, wts) = stencils[v];
            p[v] += off[idx[v]] * h;
            weight *= wts[idx[v]];
        }
        if weight != 0.0 {
            total += weight * f(Point2::new(p[2], p[3]), Direction2::new(p[0], p[1]))?;
        }
        // odometer over the stencil grid
        let mut v = 0;
        loop {
            if v == 4 {
                return Ok(total / h.powi(d.order() as i32));
            }
            idx[v] += 1;
            if idx[v] < stencils[v].0.len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}

/// One Richardson step on [`fd_oracle`]: `(4 D(h/2) - D(h)) / 3`.
///
/// The central stencils have error expansions in even powers of `h`, so this
/// cancels the `h^2` term. Useful near singular sets, where `h^2` times a high
/// derivative of the field dominates the plain estimate.
pub fn fd_richardson<F>(f: F, x: Point2, y: Direction2, d: Multi, h: f64) -> Result<f64>
where
    F: Fn(Point2, Direction2) -> Result<f64>,
{
    let coarse = fd_oracle(&f, x, y, d, h)?;
    let fine = fd_oracle(&f, x, y, d, 0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

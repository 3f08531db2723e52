//! Integer-order Bessel functions of the first kind, `J_n(x)`.
//!
//! Orders at or below the argument use upward recurrence seeded by `j0`/`j1`
//! from libm. Orders above the argument use Miller's backward recurrence,
//! normalized with `J_0 + 2 sum_k J_2k = 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub const MAX_ORDER: i64 = 200;
pub const MAX_ARG: f64 = 1e4;
/// Largest order accepted by [`bessel_table`].
pub const TABLE_MAX_ORDER: usize = 1000;

const BIG: f64 = 1e100;
const BIG_INV: f64 = 1e-100;

fn check(order: i64, x: f64) -> Result<()> {
    if order.abs() > MAX_ORDER || !(x.abs() <= MAX_ARG) {
        return Err(Error::BesselBounds { order, x });
    }
    Ok(())
}

/// `J_order(x)` for `|order| <= 200`, `|x| <= 1e4`.
pub fn bessel_j(order: i64, x: f64) -> Result<f64> {
    check(order, x)?;
    let n = order.unsigned_abs() as usize;
    let mut sign = 1.0;
    if n % 2 == 1 && (order < 0) != (x < 0.0) {
        sign = -1.0;
    }
    Ok(sign * j_nonneg(n, x.abs()))
}

/// `[J_0(x), ..., J_max(x)]`.
pub fn bessel_table(max_order: usize, x: f64) -> Result<Vec<f64>> {
    if max_order > TABLE_MAX_ORDER || !(x.abs() <= MAX_ARG) {
        return Err(Error::BesselBounds { order: max_order as i64, x });
    }
    let ax = x.abs();
    let mut out = vec![0.0; max_order + 1];
    if ax == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    let forward_top = if (max_order as f64) <= ax { max_order } else { libm::floor(ax) as usize };
    let mut prev = libm::j0(ax);
    out[0] = prev;
    if max_order >= 1 && forward_top >= 1 {
        let mut cur = libm::j1(ax);
        out[1] = cur;
        for k in 1..forward_top {
            let next = 2.0 * k as f64 / ax * cur - prev;
            prev = cur;
            cur = next;
            out[k + 1] = cur;
        }
    }
    if forward_top < max_order {
        let all = miller_all(max_order, ax);
        out[forward_top + 1..].copy_from_slice(&all[forward_top + 1..=max_order]);
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    Ok(out)
}

fn j_nonneg(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if (n as f64) <= x {
        forward(n, x)
    } else {
        miller(n, x)
    }
}

fn forward(n: usize, x: f64) -> f64 {
    let mut prev = libm::j0(x);
    if n == 0 {
        return prev;
    }
    let mut cur = libm::j1(x);
    for k in 1..n {
        let next = 2.0 * k as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn start_order(n: usize, x: f64) -> usize {
    let base = n.max(libm::ceil(x) as usize);
    let m = base + 40 + libm::sqrt(400.0 * base as f64) as usize;
    m + (m % 2)
}

fn miller(n: usize, x: f64) -> f64 {
    let m = start_order(n, x);
    let two_over_x = 2.0 / x;
    let (mut above, mut cur) = (0.0f64, 1e-30f64);
    let (mut sum, mut ans) = (0.0f64, 0.0f64);
    for j in (1..=m).rev() {
        let below = j as f64 * two_over_x * cur - above;
        above = cur;
        cur = below;
        if cur.abs() > BIG {
            cur *= BIG_INV;
            above *= BIG_INV;
            ans *= BIG_INV;
            sum *= BIG_INV;
        }
        // cur now holds J_{j-1}
        if (j - 1) % 2 == 0 && j - 1 > 0 {
            sum += cur;
        }
        if j - 1 == n {
            ans = cur;
        }
    }
    ans / (2.0 * sum + cur)
}

fn miller_all(max_order: usize, x: f64) -> Vec<f64> {
    let m = start_order(max_order, x);
    let two_over_x = 2.0 / x;
    let mut vals = vec![0.0f64; m + 2];
    vals[m] = 1e-30;
    let mut sum = 0.0;
    for j in (1..=m).rev() {
        vals[j - 1] = j as f64 * two_over_x * vals[j] - vals[j + 1];
        if vals[j - 1].abs() > BIG {
            for v in &mut vals[j - 1..] {
                *v *= BIG_INV;
            }
            sum *= BIG_INV;
        }
        if (j - 1) % 2 == 0 && j > 1 {
            sum += vals[j - 1];
        }
    }
    let norm = 2.0 * sum + vals[0];
    vals.truncate(max_order + 1);
    for v in &mut vals {
        *v /= norm;
    }
    vals
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series, accurate for moderate x.
    fn series(n: usize, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = 1.0;
        for k in 1..=n {
            term *= half / k as f64;
        }
        let mut sum = term;
        for k in 1..200 {
            term *= -half * half / (k as f64 * (k + n) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    }

    /// Trapezoid rule on the periodic Bessel integral, exponentially accurate.
    fn quadrature(n: usize, x: f64) -> f64 {
        let pts = 2048;
        let mut s = 0.0;
        for i in 0..pts {
            let tau = 2.0 * core::f64::consts::PI * i as f64 / pts as f64;
            s += (n as f64 * tau - x * tau.sin()).cos();
        }
        s / pts as f64
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
        assert!(bessel_j(0, 2.404825557695773).unwrap().abs() < 1e-10);
    }

    #[test]
    fn bounds_are_enforced() {
        assert!(bessel_j(201, 1.0).is_err());
        assert!(bessel_j(-201, 1.0).is_err());
        assert!(bessel_j(2, 1e5).is_err());
        assert!(bessel_j(2, f64::NAN).is_err());
        assert!(bessel_j(200, 1e4).is_ok());
    }

    #[test]
    fn series_oracle_small_arguments() {
        for &x in &[0.1, 0.5, 1.0, 2.5, 5.0, 10.0] {
            for n in 0..=25 {
                let got = bessel_j(n as i64, x).unwrap();
                let want = series(n, x);
                assert!(rel(got, want) < 1e-10, "n={n} x={x} got={got} want={want}");
            }
        }
    }

    #[test]
    fn quadrature_oracle_large_arguments() {
        for &x in &[47.0, 100.0, 198.0] {
            for n in 0..=40 {
                let got = bessel_j(n as i64, x).unwrap();
                let want = quadrature(n, x);
                assert!((got - want).abs() < 1e-10 * want.abs() + 1e-15, "n={n} x={x} got={got} want={want}");
            }
        }
    }

    #[test]
    fn high_orders_beyond_argument() {
        for &x in &[20.0, 47.0, 120.0] {
            for n in [60usize, 90, 150, 200] {
                let want = quadrature(n, x);
                let got = bessel_j(n as i64, x).unwrap();
                // the quadrature oracle carries ~1e-15 absolute error
                assert!((got - want).abs() < 1e-10 * want.abs() + 1e-15, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn symmetry_in_order_and_argument() {
        for &x in &[0.3, 4.0, 47.0, 198.0] {
            for m in 0..=30i64 {
                let p = bessel_j(m, x).unwrap();
                let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
                assert!((bessel_j(-m, x).unwrap() - sgn * p).abs() <= 1e-14 * p.abs().max(1e-300));
                assert!((bessel_j(m, -x).unwrap() - sgn * p).abs() <= 1e-14 * p.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn normalization_sum() {
        for &z in &[1.0, 10.0, 100.0, 198.0] {
            let m = libm::ceil(z) as usize + 40;
            let t = bessel_table(m, z).unwrap();
            let s = t[0] * t[0] + 2.0 * t[1..].iter().map(|v| v * v).sum::<f64>();
            assert!(s >= 1.0 - 1e-10 && s <= 1.0 + 1e-10, "z={z} s={s}");
        }
    }

    #[test]
    fn table_matches_pointwise() {
        for &x in &[0.0, 0.2, 3.7, 19.5, 47.0, 198.0, -6.0] {
            let t = bessel_table(60, x).unwrap();
            for (n, v) in t.iter().enumerate() {
                let p = bessel_j(n as i64, x).unwrap();
                assert!((v - p).abs() <= 1e-12 * p.abs() + 1e-300, "n={n} x={x} {v} {p}");
            }
        }
    }

    #[test]
    fn tiny_values_underflow_gracefully() {
        let v = bessel_j(200, 0.1).unwrap();
        assert!(v >= 0.0 && v < 1e-300);
        let v = bessel_j(25, 0.1).unwrap();
        assert!(rel(v, series(25, 0.1)) < 1e-10);
    }
}

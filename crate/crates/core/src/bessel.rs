//! Bessel functions of the first kind of order 0 and 1, and the positive
//! zeros of `J1`.
//!
//! Small arguments use the ascending power series summed in double-double
//! arithmetic, large arguments use the Hankel asymptotic expansion. The two
//! branches meet at [`SERIES_CUTOFF`].

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Arguments up to this value are evaluated with the ascending series.
pub const SERIES_CUTOFF: f64 = 12.0;

/// Order of a Bessel function of the first kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Zero,
    One,
}

impl Order {
    fn as_f64(self) -> f64 {
        match self {
            Order::Zero => 0.0,
            Order::One => 1.0,
        }
    }
}

impl TryFrom<u32> for Order {
    type Error = Error;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            0 => Ok(Order::Zero),
            1 => Ok(Order::One),
            _ => Err(Error::Domain(format!("unsupported Bessel order {n}"))),
        }
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }

    fn mul(self, other: Self) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + (self.hi * other.lo + self.lo * other.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let (p, pe) = two_prod(q1, d);
        let (s, se) = two_sum(self.hi, -p);
        let r = s + (se - pe + self.lo);
        let q2 = r / d;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }
    }

    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `J_n(x) = sum_m (-1)^m (x/2)^(2m+n) / (m! (m+n)!)`, accumulated in
/// double-double so the cancellation near `x = 12` stays below 1e-13.
fn series(order: Order, x: f64) -> f64 {
    let n = order.as_f64();
    let half = x * 0.5;
    let (y_hi, y_lo) = two_prod(half, half);
    let y = DoubleDouble { hi: y_hi, lo: y_lo };

    let mut term = match order {
        Order::Zero => DoubleDouble::from_f64(1.0),
        Order::One => DoubleDouble::from_f64(half),
    };
    let mut sum = DoubleDouble::ZERO;
    let mut m = 0.0_f64;
    loop {
        sum = sum.add(term);
        m += 1.0;
        term = term.mul(y).div_f64(m * (m + n)).neg();
        if m > half && term.hi.abs() < 1e-34 + 1e-20 * sum.hi.abs() {
            break;
        }
        if m > 200.0 {
            break;
        }
    }
    sum.to_f64()
}

/// Hankel expansion `J_n(x) = sqrt(2/(pi x)) (P cos w - Q sin w)` with
/// `w = x - (n/2 + 1/4) pi`, truncated at its smallest term.
fn hankel(order: Order, x: f64) -> f64 {
    let n = order.as_f64();
    let mu = 4.0 * n * n;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a *= (mu - odd * odd) / (kf * 8.0 * x);
        if a.abs() >= last || a == 0.0 {
            break;
        }
        last = a.abs();
        // P collects even k with sign (-1)^(k/2); Q odd k with sign (-1)^((k-1)/2).
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let (s, c) = x.sin_cos();
    let (cos_w, sin_w) = match order {
        Order::Zero => ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2),
        Order::One => ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2),
    };
    (2.0 / (PI * x)).sqrt() * (p * cos_w - q * sin_w)
}

/// Bessel function of the first kind `J_order(x)` for `x >= 0`.
pub fn bessel_j(order: Order, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "Bessel argument must be finite and nonnegative, got {x}"
        )));
    }
    Ok(bessel_j_unchecked(order, x))
}

#[inline]
pub(crate) fn bessel_j_unchecked(order: Order, x: f64) -> f64 {
    if x <= SERIES_CUTOFF {
        series(order, x)
    } else {
        hankel(order, x)
    }
}

pub fn j0(x: f64) -> Result<f64> {
    bessel_j(Order::Zero, x)
}

pub fn j1(x: f64) -> Result<f64> {
    bessel_j(Order::One, x)
}

/// `J1'(x) = J0(x) - J1(x)/x`, with the limit `1/2` at the origin.
pub(crate) fn j1_prime_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let j0 = bessel_j_unchecked(Order::Zero, x);
    let j1 = bessel_j_unchecked(Order::One, x);
    j0 - j1 / x
}

/// `J1(x)/x`, with the limit `1/2` at the origin.
pub(crate) fn j1_over_x_unchecked(x: f64) -> f64 {
    if x < 1e-8 {
        return 0.5 - x * x / 16.0;
    }
    bessel_j_unchecked(Order::One, x) / x
}

const SCAN_START: f64 = 0.5;
const SCAN_STEP: f64 = 0.1;
const ZERO_TOLERANCE: f64 = 1e-12;

/// First `count` positive zeros of `J1`, strictly increasing.
///
/// Sign changes are located by a fixed scan (step well below the zero
/// spacing of about pi) and refined by bisection down to adjacent floats.
pub fn find_bessel_zeros(count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "need at least one Bessel zero".into(),
        ));
    }
    let mut zeros = Vec::with_capacity(count);
    let limit = (count as f64 + 2.0) * PI + 10.0;
    let mut a = SCAN_START;
    let mut fa = bessel_j_unchecked(Order::One, a);
    while zeros.len() < count {
        let b = a + SCAN_STEP;
        if b > limit {
            return Err(Error::Bracket {
                index: zeros.len() + 1,
                reached: b,
            });
        }
        let fb = bessel_j_unchecked(Order::One, b);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            let root = bisect_j1(a, b, fa)?;
            zeros.push(root);
        }
        a = b;
        fa = fb;
    }
    Ok(zeros)
}

fn bisect_j1(mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = bessel_j_unchecked(Order::One, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let f_hi = bessel_j_unchecked(Order::One, hi);
    let (root, value) = if f_lo.abs() <= f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    if value.abs() > ZERO_TOLERANCE {
        return Err(Error::Bracket {
            index: 0,
            reached: root,
        });
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    // J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt; the integrand is smooth
    // and periodic, so the composite trapezoid rule converges spectrally.
    fn integral_oracle(n: f64, x: f64) -> f64 {
        let nodes = 10_000;
        let h = PI / nodes as f64;
        let mut sum = 0.5 * (1.0 + (n * PI - x * PI.sin()).cos());
        for i in 1..nodes {
            let t = i as f64 * h;
            sum += (n * t - x * t.sin()).cos();
        }
        sum * h / PI
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(j1(0.0).unwrap(), 0.0);
        assert_eq!(j0(0.0).unwrap(), 1.0);
    }

    #[test]
    fn j1_at_one() {
        let oracle = integral_oracle(1.0, 1.0);
        assert!((oracle - 0.4400505857).abs() < 1e-10);
        assert!((j1(1.0).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_integral_representation() {
        for i in 0..=240 {
            let x = i as f64 * 0.05;
            for (order, n) in [(Order::Zero, 0.0), (Order::One, 1.0)] {
                let got = bessel_j(order, x).unwrap();
                let want = integral_oracle(n, x);
                assert!((got - want).abs() < 1e-12, "J{n}({x}): {got} vs {want}");
            }
        }
        for i in 0..400 {
            let x = 12.0 + i as f64 * 0.7391;
            for (order, n) in [(Order::Zero, 0.0), (Order::One, 1.0)] {
                let got = bessel_j(order, x).unwrap();
                let want = integral_oracle(n, x);
                assert!((got - want).abs() < 1e-10, "J{n}({x}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn continuous_across_switch() {
        for order in [Order::Zero, Order::One] {
            for dx in [0.0, 1e-9, 1e-3] {
                let s = series(order, SERIES_CUTOFF + dx);
                let h = hankel(order, SERIES_CUTOFF + dx);
                assert!((s - h).abs() < 1e-10, "{order:?}: {s} vs {h}");
            }
        }
    }

    #[test]
    fn negative_argument_is_domain_error() {
        assert!(matches!(j1(-1.0), Err(Error::Domain(_))));
        assert!(matches!(j0(f64::NAN), Err(Error::Domain(_))));
    }

    fn bisection_oracle(mut lo: f64, mut hi: f64) -> f64 {
        let f = |x: f64| integral_oracle(1.0, x);
        let f_lo = f(lo);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn first_zeros_match_bisection_oracle() {
        let zeros = find_bessel_zeros(2).unwrap();
        let z1 = bisection_oracle(3.0, 4.5);
        let z2 = bisection_oracle(6.5, 7.5);
        assert!((zeros[0] - z1).abs() < 1e-10);
        assert!((zeros[1] - z2).abs() < 1e-10);
        assert!((zeros[0] - 3.8317059702).abs() < 1e-10);
        assert!((zeros[1] - 7.0155866698).abs() < 1e-10);
        assert_eq!(find_bessel_zeros(1).unwrap(), vec![zeros[0]]);
    }

    #[test]
    fn zeros_approach_mcmahon_asymptote() {
        let zeros = find_bessel_zeros(64).unwrap();
        assert!(zeros[0] > 3.8 && zeros[0] < 3.9);
        let gaps: Vec<f64> = zeros
            .iter()
            .enumerate()
            .map(|(i, z)| ((i as f64 + 1.25) * PI - z).abs())
            .collect();
        for w in zeros.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in gaps.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(gaps[19] < 1e-2);
        for (k, z) in zeros.iter().enumerate() {
            assert!(j1(*z).unwrap().abs() <= 1e-12, "zero {k}");
        }
    }

    #[test]
    fn zero_count_must_be_positive() {
        assert!(find_bessel_zeros(0).is_err());
    }
}

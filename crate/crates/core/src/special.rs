//! Special functions: Γ, modified Bessel functions of the second kind of
//! orders 0 and ±1/2, and normalized Hermite functions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) by the Lanczos approximation (g = 7, n = 9) with reflection for x < 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEFFS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// I₀(x) from its power series; intended for |x| ≤ 2 where it converges fast.
fn bessel_i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// K₀(x) for x ≤ 2: `-(ln(x/2) + γ) I₀(x) + Σ (x²/4)^k / (k!)² H_k`.
fn bessel_k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        let add = term * harmonic;
        sum += add;
        if add < 1e-17 * sum.abs() {
            break;
        }
    }
    -((0.5 * x).ln() + EULER_GAMMA) * bessel_i0_series(x) + sum
}

/// K₀(x) for x > 2 by Steed's continued fraction (order μ = 0).
fn bessel_k0_steed(x: f64) -> f64 {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() * (-x).exp() / s
}

/// Modified Bessel function of the second kind K₀(x), x > 0.
pub fn bessel_k0(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NonPositive { name: "x", value: x });
    }
    Ok(if x <= 2.0 {
        bessel_k0_series(x)
    } else {
        bessel_k0_steed(x)
    })
}

/// K_p(x) for p ∈ {0, ±1/2}.
pub fn bessel_k(p: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NonPositive { name: "x", value: x });
    }
    if p == 0.0 {
        bessel_k0(x)
    } else if p.abs() == 0.5 {
        Ok((PI / (2.0 * x)).sqrt() * (-x).exp())
    } else {
        Err(Error::UnsupportedOrder(p))
    }
}

const RESCALE: f64 = 1e150;

/// Normalized Hermite functions `h_0(x), …, h_nmax(x)` with
/// `h_n(x) = e^{-x²/2} H_n(x) / (π^{1/4} 2^{n/2} √n!)`.
///
/// Uses the three-term recurrence for the functions themselves,
/// `h_{n+1} = x √(2/(n+1)) h_n − √(n/(n+1)) h_{n−1}`, with the Gaussian
/// factor kept in a separate log-scale so neither factor over- or underflows
/// before the product is formed.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    out.push(cur * log_scale.exp());
    for n in 0..nmax {
        let nf = n as f64;
        let next = x * (2.0 / (nf + 1.0)).sqrt() * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out.push(cur * log_scale.exp());
    }
    out
}

/// `(h_n(x), h_{n-1}(x))`, with `h_{-1} = 0`.
pub fn hermite_function_pair(n: usize, x: f64) -> (f64, f64) {
    let v = hermite_functions(n, x);
    let prev = if n == 0 { 0.0 } else { v[n - 1] };
    (v[n], prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-13);
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(1.5), 0.5 * PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(2.5), 0.75 * PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn k0_regimes_join_continuously() {
        let below = bessel_k0_series(2.0);
        let above = bessel_k0_steed(2.0);
        assert_relative_eq!(below, above, max_relative = 1e-13);
        // tabulated K0(1), K0(5)
        assert_relative_eq!(bessel_k0(1.0).unwrap(), 0.421_024_438_240_708_3, max_relative = 1e-13);
        assert_relative_eq!(bessel_k0(5.0).unwrap(), 3.691_098_334_042_594_3e-3, max_relative = 1e-12);
    }

    #[test]
    fn bessel_k_rejects_bad_input() {
        assert!(matches!(bessel_k(0.0, 0.0), Err(Error::NonPositive { .. })));
        assert!(matches!(bessel_k(1.0, 1.0), Err(Error::UnsupportedOrder(_))));
        assert_eq!(bessel_k(0.5, 1.0).unwrap(), bessel_k(-0.5, 1.0).unwrap());
    }

    #[test]
    fn hermite_low_orders() {
        let x = 0.7;
        let v = hermite_functions(3, x);
        let g = PI.powf(-0.25) * (-0.5 * x * x).exp();
        assert_relative_eq!(v[0], g, max_relative = 1e-15);
        assert_relative_eq!(v[1], 2f64.sqrt() * x * g, max_relative = 1e-14);
        assert_relative_eq!(v[2], (2.0 * x * x - 1.0) / 2f64.sqrt() * g, max_relative = 1e-14);
    }

    #[test]
    fn hermite_far_tail_does_not_overflow() {
        let v = hermite_functions(2000, 50.0);
        assert!(v.iter().all(|h| h.is_finite()));
        // |h_n| ≤ π^{-1/4} (Cramér's bound)
        assert!(v.iter().all(|h| h.abs() <= PI.powf(-0.25) + 1e-12));
        assert!(v[2000].abs() > 1e-6);
    }
}

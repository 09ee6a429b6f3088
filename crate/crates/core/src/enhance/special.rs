//! Exponentially scaled modified Bessel functions and the exponential
//! integral, as needed by the Ephraim–Malah gain rules.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Power series below this argument, asymptotic expansion above.
const BESSEL_SWITCH: f64 = 20.0;

/// `exp(-x) * I0(x)` for `x >= 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= BESSEL_SWITCH {
        bessel_series(x, 0) * (-x).exp()
    } else {
        bessel_asymptotic(x, 0)
    }
}

/// `exp(-x) * I1(x)` for `x >= 0`.
pub fn bessel_i1e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= BESSEL_SWITCH {
        bessel_series(x, 1) * (-x).exp()
    } else {
        bessel_asymptotic(x, 1)
    }
}

/// `I_n(x) = sum_k (x/2)^(2k+n) / (k! (k+n)!)`.
fn bessel_series(x: f64, order: u32) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + order as f64));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// `exp(-x) I_n(x) ~ 1/sqrt(2 pi x) * sum_k (-1)^k a_k(n) / x^k`, truncated
/// at the smallest term.
fn bessel_asymptotic(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Exponential integral `E1(x) = ∫_x^∞ e^-t / t dt` for `x > 0`.
///
/// Power series up to 1, modified Lentz continued fraction beyond.
pub fn expint_e1(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..100 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

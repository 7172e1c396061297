//! Integer-order Bessel functions of the first kind.
//!
//! Values for all orders `0..=n` are produced together by Miller's backward
//! recurrence normalised with `J_0 + 2 sum J_2k = 1`, which is accurate to a few
//! ulps of unity for every order and argument used here.

/// `J_0(x) ..= J_nmax(x)` for `x >= 0`.
pub fn bessel_j_upto(nmax: usize, x: f64) -> Vec<f64> {
    let x = x.abs();
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = nmax.max(x.ceil() as usize) + 1;
    let start = 2 * ((top + 16 + (40.0 * top as f64).sqrt() as usize) / 2);

    let mut j_next = 0.0_f64;
    let mut j_cur = 1e-30_f64;
    let mut even_sum = 0.0_f64;
    for k in (1..=start).rev() {
        let j_prev = (2.0 * k as f64 / x) * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = j_cur;
        }
        if idx % 2 == 0 && idx > 0 {
            even_sum += j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            even_sum *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j_cur + 2.0 * even_sum;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `J_n(x)` for a single integer order (negative orders use `J_-n = (-1)^n J_n`).
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_j_upto(m, x)[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Value, first and second derivative of `J_n` together with `J_n(x)/x`.
///
/// The derivatives come from the three-term recurrences, not from Bessel's
/// equation, so that substituting them back into the equation is a real check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    /// `J_n(x) / x`, finite on the axis.
    pub over_x: f64,
}

pub fn bessel_jet(n: u32, x: f64) -> BesselJet {
    let n = n as i64;
    let vals = bessel_j_upto(n as usize + 2, x);
    let get = |k: i64| -> f64 {
        let m = k.unsigned_abs() as usize;
        let v = vals[m];
        if k < 0 && m % 2 == 1 {
            -v
        } else {
            v
        }
    };
    let value = get(n);
    let d1 = 0.5 * (get(n - 1) - get(n + 1));
    let d2 = 0.25 * (get(n - 2) - 2.0 * value + get(n + 2));
    let over_x = if n == 0 {
        if x == 0.0 {
            f64::INFINITY
        } else {
            value / x
        }
    } else {
        (get(n - 1) + get(n + 1)) / (2.0 * n as f64)
    };
    BesselJet {
        value,
        d1,
        d2,
        over_x,
    }
}

/// Position of the first maximum of `|J_n|` (the first zero of `J_n'`); `0` for `n = 0`.
pub fn first_maximum(n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut x = nf + 0.8086165 * nf.cbrt() + 0.072490 / nf.cbrt();
    for _ in 0..50 {
        let jet = bessel_jet(n, x);
        let step = jet.d1 / jet.d2;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

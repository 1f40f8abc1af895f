//! Dormand-Prince 5(4) embedded Runge-Kutta pair with the standard
//! fourth-order continuous extension for output between steps.

#![allow(clippy::needless_range_loop)]

use crate::{Error, Result};

/// Error-control settings for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: 1e-8, rel: 1e-8, max_steps: 1_000_000 }
    }
}

impl Tolerances {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, ..Self::default() }
    }

    /// Both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { abs: self.abs * factor, rel: self.rel * factor, max_steps: self.max_steps }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct Work {
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    cont: [Vec<f64>; 5],
}

impl Work {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
            y_new: vec![0.0; n],
            cont: std::array::from_fn(|_| vec![0.0; n]),
        }
    }
}

/// Local error target as a fraction of the requested tolerance, so the
/// accumulated global error stays within it.
const LOCAL_FRACTION: f64 = 0.1;

fn err_norm(err: &[f64], y0: &[f64], y1: &[f64], tol: &Tolerances) -> f64 {
    let n = err.len() as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = LOCAL_FRACTION * (tol.abs + tol.rel * a.abs().max(b.abs()));
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], span: f64, tol: &Tolerances) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let scale = |v: f64| tol.abs + tol.rel * v.abs();
    let d0 = (y.iter().map(|v| (v / scale(*v)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d1 = (f0.iter().zip(y).map(|(d, v)| (d / scale(*v)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(v, d)| v + h0 * d).collect();
    let mut f1 = vec![0.0; n];
    f(t + h0, &y1, &mut f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((a, b), v)| ((a - b) / scale(*v)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `dy/dt = f(t, y)` from `(t0, y0)` and returns the state at each
/// of `t_out` (non-decreasing, all `>= t0`) as one row-major block of
/// `t_out.len() * y0.len()` values.
///
/// `breakpoints` mark discontinuities of `f`; the integrator lands exactly on
/// each one and restarts there.
pub fn solve<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_out: &[f64],
    breakpoints: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut out = vec![0.0; t_out.len() * n];
    if t_out.is_empty() {
        return Ok(out);
    }
    if t_out.windows(2).any(|w| w[1] < w[0]) || t_out[0] < t0 {
        return Err(Error::InvalidArgument("output times must be sorted and >= t0".into()));
    }
    let t_final = *t_out.last().unwrap();
    let mut bounds: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > t0 && b < t_final).collect();
    bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bounds.dedup();
    bounds.push(t_final);

    let mut w = Work::new(n);
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut next_out = 0;
    while next_out < t_out.len() && t_out[next_out] <= t0 {
        out[next_out * n..(next_out + 1) * n].copy_from_slice(&y);
        next_out += 1;
    }
    let mut h = f64::NAN;
    let mut steps = 0usize;

    for &seg_end in &bounds {
        if next_out >= t_out.len() {
            break;
        }
        if seg_end <= t {
            continue;
        }
        // stages landing on the segment end see the left limit of f
        let t_left = seg_end - 1e-12 * seg_end.abs().max(1.0);
        let mut f = |tt: f64, y: &[f64], d: &mut [f64]| f(tt.min(t_left), y, d);
        f(t, &y, &mut w.k[0]);
        if w.k[0].iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { time: t, reason: "non-finite derivative".into() });
        }
        if !h.is_finite() {
            let k0 = w.k[0].clone();
            let mut f = &mut f;
            h = initial_step(&mut f, t, &y, &k0, seg_end - t, tol);
        }
        let mut rejected_last = false;
        while t < seg_end {
            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::Integration { time: t, reason: "maximum step count exceeded".into() });
            }
            let last = t + h >= seg_end - 1e-14 * seg_end.abs().max(1.0);
            let hh = if last { seg_end - t } else { h };
            if hh <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration { time: t, reason: "step size underflow".into() });
            }
            let err = stage(&mut f, t, &y, hh, &mut w, tol);
            if !err.is_finite() || w.y_new.iter().any(|v| !v.is_finite()) {
                h = hh * FAC_MIN;
                rejected_last = true;
                if h <= 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Integration { time: t, reason: "non-finite state".into() });
                }
                continue;
            }
            let mut fac = if err == 0.0 { FAC_MAX } else { SAFETY * err.powf(-0.2) };
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if err <= 1.0 {
                let t_new = if last { seg_end } else { t + hh };
                // dense output
                for i in 0..n {
                    let ydiff = w.y_new[i] - y[i];
                    let bspl = hh * w.k[0][i] - ydiff;
                    w.cont[0][i] = y[i];
                    w.cont[1][i] = ydiff;
                    w.cont[2][i] = bspl;
                    w.cont[3][i] = ydiff - hh * w.k[6][i] - bspl;
                    w.cont[4][i] = hh
                        * (D1 * w.k[0][i]
                            + D3 * w.k[2][i]
                            + D4 * w.k[3][i]
                            + D5 * w.k[4][i]
                            + D6 * w.k[5][i]
                            + D7 * w.k[6][i]);
                }
                while next_out < t_out.len() && t_out[next_out] <= t_new {
                    let to = t_out[next_out];
                    let row = &mut out[next_out * n..(next_out + 1) * n];
                    if to == t_new {
                        row.copy_from_slice(&w.y_new);
                    } else {
                        let s = (to - t) / hh;
                        let s1 = 1.0 - s;
                        for i in 0..n {
                            row[i] = w.cont[0][i]
                                + s * (w.cont[1][i]
                                    + s1 * (w.cont[2][i] + s * (w.cont[3][i] + s1 * w.cont[4][i])));
                        }
                    }
                    next_out += 1;
                }
                y.copy_from_slice(&w.y_new);
                t = t_new;
                let (k0, rest) = w.k.split_at_mut(1);
                k0[0].copy_from_slice(&rest[5]);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                rejected_last = false;
                if !last {
                    h = hh * fac;
                }
                if next_out >= t_out.len() {
                    break;
                }
            } else {
                h = hh * fac.min(1.0);
                rejected_last = true;
            }
        }
    }
    Ok(out)
}

/// One trial step of size `h`; fills `w.k[1..]`, `w.y_new` and returns the
/// scaled error norm.
fn stage<F>(f: &mut F, t: f64, y: &[f64], h: f64, w: &mut Work, tol: &Tolerances) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    macro_rules! combo {
        ($($a:expr => $k:expr),+) => {
            for i in 0..n {
                w.y_stage[i] = y[i] + h * (0.0 $(+ $a * w.k[$k][i])+);
            }
        };
    }
    combo!(A21 => 0);
    f(t + C2 * h, &w.y_stage, &mut w.k[1]);
    combo!(A31 => 0, A32 => 1);
    f(t + C3 * h, &w.y_stage, &mut w.k[2]);
    combo!(A41 => 0, A42 => 1, A43 => 2);
    f(t + C4 * h, &w.y_stage, &mut w.k[3]);
    combo!(A51 => 0, A52 => 1, A53 => 2, A54 => 3);
    f(t + C5 * h, &w.y_stage, &mut w.k[4]);
    combo!(A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
    f(t + h, &w.y_stage, &mut w.k[5]);
    for i in 0..n {
        w.y_new[i] = y[i]
            + h * (A71 * w.k[0][i] + A73 * w.k[2][i] + A74 * w.k[3][i] + A75 * w.k[4][i] + A76 * w.k[5][i]);
    }
    f(t + h, &w.y_new, &mut w.k[6]);
    let err: Vec<f64> = (0..n)
        .map(|i| {
            h * (E1 * w.k[0][i]
                + E3 * w.k[2][i]
                + E4 * w.k[3][i]
                + E5 * w.k[4][i]
                + E6 * w.k[5][i]
                + E7 * w.k[6][i])
        })
        .collect();
    err_norm(&err, y, &w.y_new, tol)
}

//! Adaptive Gauss–Kronrod quadrature on the half line.

use super::MathError;
use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { relative_tolerance: 1e-8, absolute_tolerance: 1e-14, max_subdivisions: 200 }
    }
}

impl QuadratureSpec {
    pub fn new(relative_tolerance: f64, absolute_tolerance: f64, max_subdivisions: usize) -> Result<Self, MathError> {
        let spec = QuadratureSpec { relative_tolerance, absolute_tolerance, max_subdivisions };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), MathError> {
        if !(self.relative_tolerance > 0.0) || !(self.absolute_tolerance > 0.0) {
            return Err(MathError::Domain("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions < 1 {
            return Err(MathError::Domain("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_64, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Largest tolerated excess of a node's log-integrand over the running offset
/// before the integration restarts with a larger offset.
const OFFSET_SLACK: f64 = 300.0;

/// Range of `x = ln u` covered: below `X_MIN` the variable `u` is subnormal and
/// above `X_MAX` it overflows.
const X_MIN: f64 = -745.0;
const X_MAX: f64 = 709.0;

#[derive(Clone, Copy)]
struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

enum Eval {
    Done(f64, f64),
    Raise(f64),
}

/// `ln ∫₀^∞ e^{ln_f(u)} du` for a positive integrand given in log scale.
///
/// Integrates `e^{ln_f(e^x) + x - offset}` over `x = ln u` with G7–K15 rules,
/// always bisecting the interval with the largest error estimate. In `x`, power
/// laws at either end of the half line become exponential decays, so slowly
/// decaying tails such as `u^{-1-a}` with small `a` need no special handling.
/// The offset is taken from a pilot scan and raised if a node exceeds it.
pub fn integrate_halfline<F>(ln_f: F, spec: &QuadratureSpec) -> Result<f64, MathError>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let g = |x: f64| -> f64 {
        let v = ln_f(x.exp());
        if v == f64::NEG_INFINITY {
            v
        } else {
            v + x
        }
    };

    let mut offset = f64::NEG_INFINITY;
    let mut peak = 0.0;
    let mut x = X_MIN;
    while x <= X_MAX {
        let v = g(x);
        if v.is_nan() {
            return Err(MathError::Domain(format!("integrand is NaN at u = {}", x.exp())));
        }
        if v > offset {
            offset = v;
            peak = x;
        }
        x += 0.25;
    }
    if offset == f64::INFINITY {
        return Err(MathError::Domain("integrand is infinite".into()));
    }
    if offset == f64::NEG_INFINITY {
        offset = 0.0;
    }

    let mut breaks: Vec<f64> = vec![X_MIN, X_MAX];
    let mut b = 1.0;
    while b < X_MAX {
        breaks.push(b);
        if -b > X_MIN {
            breaks.push(-b);
        }
        b *= 2.0;
    }
    breaks.push(0.0);
    for d in [-0.5, 0.5] {
        let p = peak + d;
        if p > X_MIN && p < X_MAX {
            breaks.push(p);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    loop {
        match integrate_scaled(&g, &breaks, offset, spec)? {
            Eval::Raise(new_offset) => offset = new_offset,
            Eval::Done(value, error) => {
                let ok = error <= spec.absolute_tolerance.max(spec.relative_tolerance * value.abs());
                if !ok {
                    return Err(MathError::Quadrature {
                        estimate: value.ln() + offset,
                        error_bound: if value > 0.0 { error / value } else { f64::INFINITY },
                    });
                }
                if value <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                return Ok(value.ln() + offset);
            }
        }
    }
}

fn integrate_scaled<G>(g: &G, breaks: &[f64], offset: f64, spec: &QuadratureSpec) -> Result<Eval, MathError>
where
    G: Fn(f64) -> f64,
{
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        let iv = match rule(g, w[0], w[1], offset)? {
            Ok(iv) => iv,
            Err(raise) => return Ok(Eval::Raise(raise)),
        };
        total += iv.value;
        total_err += iv.error;
        heap.push(iv);
    }
    let max_intervals = spec.max_subdivisions.max(heap.len());
    loop {
        let tol = spec.absolute_tolerance.max(spec.relative_tolerance * total.abs());
        if total_err <= tol || heap.len() >= max_intervals {
            break;
        }
        let worst = heap.pop().expect("nonempty interval heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval cannot be split further in floating point
            heap.push(Interval { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let left = match rule(g, worst.a, mid, offset)? {
            Ok(iv) => iv,
            Err(raise) => return Ok(Eval::Raise(raise)),
        };
        let right = match rule(g, mid, worst.b, offset)? {
            Ok(iv) => iv,
            Err(raise) => return Ok(Eval::Raise(raise)),
        };
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // recompute sums to shed accumulated rounding from the running updates
    let value: f64 = heap.iter().map(|iv| iv.value).sum();
    let error: f64 = heap.iter().map(|iv| iv.error).sum();
    Ok(Eval::Done(value, error))
}

/// One G7–K15 application on `[a, b]`. The inner `Err` asks for a larger offset.
fn rule<G>(g: &G, a: f64, b: f64, offset: f64) -> Result<Result<Interval, f64>, MathError>
where
    G: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = [0.0f64; 15];
    let mut max_seen = f64::NEG_INFINITY;
    let mut eval = |x: f64| -> Result<f64, MathError> {
        let v = g(x);
        if v.is_nan() {
            return Err(MathError::Domain(format!("integrand is NaN at u = {}", x.exp())));
        }
        if v == f64::INFINITY {
            return Err(MathError::Domain(format!("integrand is infinite at u = {}", x.exp())));
        }
        max_seen = max_seen.max(v);
        Ok((v - offset).exp())
    };
    fv[7] = eval(center)?;
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = eval(center - dx)?;
        fv[14 - j] = eval(center + dx)?;
    }
    if max_seen > offset + OFFSET_SLACK {
        return Ok(Err(max_seen));
    }
    let mut resk = WGK[7] * fv[7];
    let mut resg = WG[3] * fv[7];
    let mut resabs = resk.abs();
    for j in 0..7 {
        let pair = fv[j] + fv[14 - j];
        resk += WGK[j] * pair;
        resabs += WGK[j] * (fv[j].abs() + fv[14 - j].abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * pair;
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fv[7] - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - reskh).abs() + (fv[14 - j] - reskh).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Ok(Interval { a, b, value, error }))
}

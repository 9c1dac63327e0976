//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{MqeError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-13, rel_tol: 1e-10, max_intervals: 2000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment { a, b, value: kron * half, error: ((kron - gauss) * half).abs() }
}

/// Integrates `f` over `[a, b]`, pre-splitting at the interior `breaks`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(MqeError::invalid(format!("bad integration bounds [{a}, {b}]")));
    }
    let mut knots = vec![a];
    knots.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut segs: Vec<Segment> = knots.windows(2).map(|w| kronrod(&f, w[0], w[1])).collect();
    loop {
        let value: f64 = segs.iter().map(|s| s.value).sum();
        let error: f64 = segs.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(MqeError::NumericFailure("non-finite integrand value".into()));
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult { value, abs_error: error, intervals: segs.len() });
        }
        if segs.len() >= opts.max_intervals {
            return Err(MqeError::NumericFailure(format!(
                "quadrature did not converge: estimate {value:e}, error {error:e} after {} intervals",
                segs.len()
            )));
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(MqeError::NumericFailure("interval underflow in quadrature".into()));
        }
        segs.push(kronrod(&f, s.a, mid));
        segs.push(kronrod(&f, mid, s.b));
    }
}

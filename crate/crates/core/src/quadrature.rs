//! One-dimensional adaptive quadrature.
//!
//! The exact oracles in this crate (box and ball free energies, truncated
//! moments, total-variation integrals) all reduce to 1D integrals. They are
//! computed here with an adaptive 7–15 Gauss–Kronrod rule refined until the
//! error estimate is orders of magnitude below Monte Carlo noise, plus a
//! log-domain variant for integrands whose peak value under- or overflows.

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Weights of the 15-point Kronrod rule (matching `XGK`).
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Weights of the embedded 7-point Gauss rule (even-index Kronrod nodes).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    // Standard conservative rescaling of the raw Gauss/Kronrod gap.
    let scaled = if res_abs > 0.0 && err > 0.0 {
        let e = (200.0 * err / (res_abs * half.abs())).powf(1.5);
        if e < 1.0 {
            res_abs * half.abs() * e
        } else {
            err
        }
    } else {
        err
    };
    (value, scaled.max(err))
}

/// Integrate `f` over `[a, b]` to roughly `rel_tol` relative accuracy.
///
/// Globally adaptive: the segment with the worst error estimate is bisected
/// until the total error is below `rel_tol * |integral|` (with an absolute
/// floor near machine precision) or the segment budget runs out.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        };
    }
    let (v, e) = gk15(&f, a, b);
    let mut segs = vec![Segment {
        a,
        b,
        value: v,
        error: e,
    }];
    let mut evals = 15usize;
    const MAX_SEGMENTS: usize = 4096;
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.error).sum();
        let target = (rel_tol * total.abs()).max(f64::MIN_POSITIVE * 1e4);
        if err <= target || segs.len() >= MAX_SEGMENTS {
            return QuadResult {
                value: total,
                abs_error: err,
                evaluations: evals,
            };
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval no longer splittable in f64; accept it as-is.
            segs.push(s);
            let total: f64 = segs.iter().map(|s| s.value).sum();
            let err: f64 = segs.iter().map(|s| s.error).sum();
            return QuadResult {
                value: total,
                abs_error: err,
                evaluations: evals,
            };
        }
        for (lo, hi) in [(s.a, mid), (mid, s.b)] {
            let (v, e) = gk15(&f, lo, hi);
            evals += 15;
            segs.push(Segment {
                a: lo,
                b: hi,
                value: v,
                error: e,
            });
        }
    }
}

/// log of `∫_a^b exp(log_f(t)) dt`, stable when the integrand under/overflows.
///
/// A coarse scan locates the peak of `log_f`; the integral of
/// `exp(log_f - peak)` is then well scaled for the adaptive rule. If the scan
/// missed the true maximum by more than a few e-folds the pass is repeated
/// with the larger value.
pub fn log_integrate<F: Fn(f64) -> f64>(log_f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    assert!(b > a, "log_integrate needs a nonempty interval");
    const SCAN: usize = 257;
    let mut peak = f64::NEG_INFINITY;
    for i in 0..SCAN {
        let t = a + (b - a) * (i as f64) / ((SCAN - 1) as f64);
        let v = log_f(t);
        if v > peak {
            peak = v;
        }
    }
    if peak == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    for _ in 0..4 {
        let seen = std::cell::Cell::new(f64::NEG_INFINITY);
        let r = integrate(
            |t| {
                let lf = log_f(t);
                if lf > seen.get() {
                    seen.set(lf);
                }
                ((lf - peak).min(700.0)).exp()
            },
            a,
            b,
            rel_tol,
        );
        if seen.get() <= peak + 5.0 {
            return peak + r.value.ln();
        }
        peak = seen.get();
    }
    let r = integrate(|t| ((log_f(t) - peak).min(700.0)).exp(), a, b, rel_tol);
    peak + r.value.ln()
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; accurate to machine
/// precision for the small `n` used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Maps a Gauss–Legendre rule onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&t| half * t).collect(),
    )
}

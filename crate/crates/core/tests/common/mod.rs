//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's special-function code.

#![allow(dead_code)]

/// Neumaier-compensated sum.
pub fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// J_m(x) from its ascending power series, summed to convergence.
pub fn series_jn(m: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut lead = 1.0;
    for i in 1..=m {
        lead *= 0.5 * x / i as f64;
    }
    let mut terms = Vec::with_capacity(128);
    let mut t = lead;
    terms.push(t);
    for k in 1..200 {
        let kf = k as f64;
        t *= -q / (kf * (kf + m as f64));
        terms.push(t);
        if t.abs() < 1e-30 && kf > q {
            break;
        }
    }
    compensated_sum(terms)
}

/// Y0(x) from the logarithmic series.
pub fn series_y0(x: f64) -> f64 {
    const GAMMA: f64 = 0.577_215_664_901_532_9;
    let q = 0.25 * x * x;
    let mut t = 1.0;
    let mut h = 0.0;
    let mut terms = Vec::new();
    for k in 1..200 {
        let kf = k as f64;
        t *= -q / (kf * kf);
        h += 1.0 / kf;
        terms.push(-h * t);
        if t.abs() < 1e-30 && kf > q {
            break;
        }
    }
    let s = compensated_sum(terms);
    2.0 / std::f64::consts::PI * (((0.5 * x).ln() + GAMMA) * series_jn(0, x) + s)
}

/// Bisection root of `f` on a sign-changing bracket.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        if (b - a).abs() < 1e-15 * b.abs() {
            break;
        }
    }
    0.5 * (a + b)
}

/// All positive zeros of J_m below `x_max`, by sign scanning plus bisection.
pub fn bessel_zeros(m: u32, x_max: f64) -> Vec<f64> {
    let step = 0.01;
    let mut zeros = Vec::new();
    let mut a = 0.5 + m as f64 * 0.5;
    let mut fa = series_jn(m, a);
    while a < x_max {
        let b = a + step;
        let fb = series_jn(m, b);
        if fa.signum() != fb.signum() {
            let z = bisect(|x| series_jn(m, x), a, b);
            if z < x_max {
                zeros.push(z);
            }
        }
        a = b;
        fa = fb;
    }
    zeros
}

/// Sorted distinct Dirichlet eigen-wavenumbers of the unit disk below `k_max`
/// (zeros of J_m for m <= 10).
pub fn disk_spectrum(k_max: f64) -> Vec<f64> {
    let mut all: Vec<f64> = (0..=10).flat_map(|m| bessel_zeros(m, k_max)).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all
}

/// Signed orbit of `(x, y)` under the reflections in the corridor walls
/// `x = 0`, `y = a/2`, `y = -a/2`, generated breadth-first to `depth`
/// reflections and deduplicated on a 1e-9 lattice.
pub fn reflection_orbit(a: f64, x: f64, y: f64, depth: usize) -> Vec<(f64, f64, i8)> {
    use std::collections::HashMap;
    let key = |p: (f64, f64)| ((p.0 * 1e9).round() as i64, (p.1 * 1e9).round() as i64);
    let mut seen: HashMap<(i64, i64), (f64, f64, i8)> = HashMap::new();
    seen.insert(key((x, y)), (x, y, 1));
    let mut frontier = vec![(x, y, 1i8)];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (px, py, s) in frontier {
            for q in [(-px, py), (px, a - py), (px, -a - py)] {
                let kq = key(q);
                if !seen.contains_key(&kq) {
                    seen.insert(kq, (q.0, q.1, -s));
                    next.push((q.0, q.1, -s));
                }
            }
        }
        frontier = next;
    }
    seen.into_values().collect()
}

/// Exact corridor correlation for `{x >= 0, |y| <= a/2}` as a finite sum over
/// propagating transverse modes.
pub fn corridor_mode_sum(a: f64, k: f64, p: (f64, f64), q: (f64, f64)) -> f64 {
    let pi = std::f64::consts::PI;
    let mut terms = Vec::new();
    let mut n = 1;
    loop {
        let qn = n as f64 * pi / a;
        if qn >= k {
            break;
        }
        let pn = (k * k - qn * qn).sqrt();
        terms.push(
            8.0 / (a * pn)
                * (pn * p.0).sin()
                * (pn * q.0).sin()
                * (qn * (p.1 + 0.5 * a)).sin()
                * (qn * (q.1 + 0.5 * a)).sin(),
        );
        n += 1;
    }
    compensated_sum(terms)
}

/// Mean, variance, skewness and excess kurtosis.
pub fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let c = |p: i32| compensated_sum(xs.iter().map(|x| (x - mean).powi(p))) / n;
    let var = c(2);
    (mean, var, c(3) / var.powf(1.5), c(4) / (var * var) - 3.0)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

//! Two-point correlation grids: closed-form signed Bessel sums, ensemble
//! estimates, angular averages and the relative squared error.
//!
//! A grid is indexed by displacement `r` on a square of side `side` centered
//! at `r = 0`; cell `(i, j)` is `r = (-side/2 + i h, -side/2 + j h)`. Each
//! grid flags the cells whose point `probe + r` lies in the billiard domain;
//! the error metric and angular averages only use cells flagged in every
//! grid involved, since eigenstates are undefined outside the billiard.

use std::collections::HashMap;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::io::{format_point, format_table, parse_table, Header};
use crate::randwave::{adapted_field, FieldGrid, GridSpec, WaveEnsemble};
use crate::specfun::j0;
use crate::symmetry::{corridor_images, ImageKind, ImageSet};
use crate::{Error, Point, Result};

pub const DEFAULT_RESOLUTION: usize = 129;

/// Members folded into one GEMM call of the ensemble estimator.
const ENSEMBLE_BATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Theory,
    Empirical { sample_count: usize },
    Residual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    pub probe: Point,
    pub k: f64,
    pub side: f64,
    pub resolution: usize,
    /// Row-major, rows along r_y.
    pub values: Vec<f64>,
    pub kind: GridKind,
    /// Whether `probe + r` lies in the domain; all true when unknown.
    pub inside: Vec<bool>,
}

impl CorrelationGrid {
    pub fn spacing(&self) -> f64 {
        self.side / (self.resolution - 1) as f64
    }

    pub fn displacement(&self, i: usize, j: usize) -> Point {
        displacement(self.side, self.resolution, i, j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.resolution + i]
    }

    /// Grid geometry as a field-sampling lattice around the probe.
    pub fn field_spec(&self) -> GridSpec {
        GridSpec::centered(self.probe, self.side, self.resolution).expect("validated grid")
    }

    pub fn same_geometry(&self, other: &CorrelationGrid) -> bool {
        self.resolution == other.resolution
            && self.probe.dist(other.probe) <= 1e-12 * (1.0 + self.probe.norm())
            && (self.side - other.side).abs() <= 1e-12 * self.side
            && (self.k - other.k).abs() <= 1e-12 * self.k
    }

    /// Flags the cells outside the domain of `images`.
    pub fn restrict_to(&mut self, images: &ImageSet) {
        let n = self.resolution;
        for j in 0..n {
            for i in 0..n {
                self.inside[j * n + i] &= images.contains(self.probe + self.displacement(i, j));
            }
        }
    }

    pub fn header(&self) -> Header {
        let mut h = Header::new();
        let (kind, count) = match self.kind {
            GridKind::Theory => ("theory", 0),
            GridKind::Empirical { sample_count } => ("empirical", sample_count),
            GridKind::Residual => ("residual", 0),
        };
        h.set("kind", kind)
            .set("probe", format_point(self.probe))
            .set("k", self.k)
            .set("side", self.side)
            .set("resolution", self.resolution)
            .set("sample_count", count);
        // cells outside the domain, row-major indices
        let outside: Vec<String> = (0..self.inside.len()).filter(|&c| !self.inside[c]).map(|c| c.to_string()).collect();
        if !outside.is_empty() {
            h.set("outside", outside.join(";"));
        }
        h
    }

    pub fn to_csv(&self) -> String {
        format_table(&self.header(), self.resolution, &self.values)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (h, rows) = parse_table(text)?;
        let resolution = h.parse_usize("resolution")?;
        let kind = match h.require("kind")? {
            "theory" => GridKind::Theory,
            "empirical" => GridKind::Empirical { sample_count: h.parse_usize("sample_count")? },
            "residual" => GridKind::Residual,
            other => return Err(Error::Parse(format!("unknown grid kind `{other}`"))),
        };
        let values: Vec<f64> = rows.concat();
        if resolution < 2 || values.len() != resolution * resolution {
            return Err(Error::Parse("correlation grid has the wrong number of values".into()));
        }
        let side = h.parse_f64("side")?;
        if !(side > 0.0) {
            return Err(Error::Parse("side must be positive".into()));
        }
        let mut inside = vec![true; values.len()];
        if let Some(list) = h.get("outside") {
            for c in list.split(';') {
                let c: usize = c.trim().parse().map_err(|_| Error::Parse(format!("bad outside cell `{c}`")))?;
                *inside.get_mut(c).ok_or_else(|| Error::Parse(format!("outside cell {c} out of range")))? = false;
            }
        }
        Ok(Self {
            probe: h.parse_point("probe")?,
            k: h.parse_f64("k")?,
            side,
            resolution,
            inside,
            values,
            kind,
        })
    }
}

fn displacement(side: f64, n: usize, i: usize, j: usize) -> Point {
    let h = side / (n - 1) as f64;
    Point::new(-0.5 * side + i as f64 * h, -0.5 * side + j as f64 * h)
}

fn check_grid(k: f64, side: f64, resolution: usize) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("wavenumber must be > 0, got {k}")));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::InvalidArgument(format!("side must be > 0, got {side}")));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be >= 2".into()));
    }
    Ok(())
}

/// Image-sum cutoff whose J₀ envelope `sqrt(2/(π k d))` equals `1e-3`.
pub fn default_corridor_cutoff(k: f64) -> f64 {
    2.0 / (std::f64::consts::PI * k * 1e-6)
}

/// Smooth step: 1 for `t <= 0`, 0 for `t >= 1`, C^∞ in between.
fn taper(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        b / (a + b)
    }
}

/// Weight of a corridor image term at distance `rho` from the target point.
/// Terms are kept in full up to half the cutoff and rolled off smoothly to
/// zero at the cutoff; the roll-off suppresses the slowly decaying
/// oscillating tail that a hard cutoff leaves behind.
pub fn corridor_weight(rho: f64, cutoff: f64) -> f64 {
    taper((rho - 0.5 * cutoff) / (0.5 * cutoff))
}

/// Signed image points of `probe` reaching targets within `spread` of it,
/// plus the taper cutoff for corridor sets.
fn theory_terms(images: &ImageSet, probe: Point, spread: f64) -> Result<(Vec<(Point, f64)>, Option<f64>)> {
    let (terms, cutoff) = match images.kind {
        ImageKind::Corridor { width, cutoff } => {
            let canon = corridor_images(width, images.frame.apply(probe), cutoff + spread)?;
            (canon.in_frame(images.frame).elements, Some(cutoff))
        }
        _ => (images.elements.clone(), None),
    };
    let points: Vec<(Point, f64)> = terms.iter().map(|c| (c.apply(probe), c.character())).collect();
    Ok(match cutoff {
        Some(_) => (cancel_coincident(points), cutoff),
        None => (points, cutoff),
    })
}

/// Drops pairs of opposite-sign images that coincide up to rounding. Their
/// terms cancel for every target; for probes on a wall this makes the grid
/// exactly zero instead of leaving ulp-sized residues of far images.
fn cancel_coincident(points: Vec<(Point, f64)>) -> Vec<(Point, f64)> {
    const BUCKET: f64 = 1e-9;
    let key = |p: Point| ((p.x / BUCKET).round() as i64, (p.y / BUCKET).round() as i64);
    let mut open: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut keep = vec![true; points.len()];
    for (i, &(p, sign)) in points.iter().enumerate() {
        let tol = 16.0 * f64::EPSILON * p.norm().max(1.0);
        let (kx, ky) = key(p);
        let mut partner = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = open.get_mut(&(kx + dx, ky + dy)) {
                    if let Some(pos) = list.iter().position(|&j| points[j].1 == -sign && points[j].0.dist(p) <= tol) {
                        partner = Some(list.swap_remove(pos));
                        break 'search;
                    }
                }
            }
        }
        match partner {
            Some(j) => {
                keep[i] = false;
                keep[j] = false;
            }
            None => open.entry((kx, ky)).or_default().push(i),
        }
    }
    points.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect()
}

fn sum_terms(points: &[(Point, f64)], cutoff: Option<f64>, k: f64, target: Point) -> f64 {
    // compensated: wall cancellations involve thousands of corridor terms
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for &(img, sign) in points {
        let rho = target.dist(img);
        let term = match cutoff {
            Some(c) if rho < c => sign * corridor_weight(rho, c) * j0(k * rho),
            Some(_) => continue,
            None => sign * j0(k * rho),
        };
        let t = s + term;
        comp += if s.abs() >= term.abs() { (s - t) + term } else { (term - t) + s };
        s = t;
    }
    s + comp
}

/// `C(x, y) = Σ_C parity(C) J₀(k |y − C x|)` at a single pair of points.
pub fn theory_value(images: &ImageSet, k: f64, x: Point, y: Point) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("wavenumber must be > 0, got {k}")));
    }
    images.require_inside(x)?;
    let (points, cutoff) = theory_terms(images, x, x.dist(y))?;
    Ok(sum_terms(&points, cutoff, k, y))
}

/// `C(x, x + r) = Σ_C parity(C) J₀(k |x + r − C x|)` over the grid.
///
/// Wedge groups are summed as given. For `Corridor` sets the
/// images are re-enumerated around the probe so every cell sees all images
/// with `|x + r − C x| <= cutoff`, each weighted by [`corridor_weight`].
pub fn theory_correlation(
    images: &ImageSet,
    k: f64,
    probe: Point,
    side: f64,
    resolution: usize,
) -> Result<CorrelationGrid> {
    check_grid(k, side, resolution)?;
    images.require_inside(probe)?;
    let (points, cutoff) = theory_terms(images, probe, side * std::f64::consts::FRAC_1_SQRT_2)?;
    let n = resolution;
    let mut values = vec![0.0; n * n];
    let mut inside = vec![false; n * n];
    values
        .par_chunks_mut(n)
        .zip(inside.par_chunks_mut(n))
        .enumerate()
        .for_each(|(j, (row, in_row))| {
            for i in 0..n {
                let target = probe + displacement(side, n, i, j);
                in_row[i] = images.contains(target);
                row[i] = sum_terms(&points, cutoff, k, target);
            }
        });
    Ok(CorrelationGrid { probe, k, side, resolution, values, kind: GridKind::Theory, inside })
}

/// Mean of `ψ(x) ψ(x + r)` over samples of `(ψ(x), field grid centered on x)`.
pub fn empirical_correlation(samples: &[(f64, FieldGrid)]) -> Result<CorrelationGrid> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let first = &samples[0].1;
    let spec = first.spec;
    if samples.iter().any(|(_, g)| g.spec != spec) {
        return Err(Error::InvalidArgument("field grids differ in geometry".into()));
    }
    if samples.iter().any(|(_, g)| (g.k - first.k).abs() > 1e-12 * first.k) {
        return Err(Error::InvalidArgument("field grids differ in wavenumber".into()));
    }
    let n = spec.resolution;
    let mut values = vec![0.0; n * n];
    for (psi, g) in samples {
        for (v, f) in values.iter_mut().zip(&g.values) {
            *v += psi * f;
        }
    }
    let inv = 1.0 / samples.len() as f64;
    values.iter_mut().for_each(|v| *v *= inv);
    Ok(CorrelationGrid {
        probe: spec.center(),
        k: first.k,
        side: spec.side,
        resolution: n,
        inside: vec![true; values.len()],
        values,
        kind: GridKind::Empirical { sample_count: samples.len() },
    })
}

/// Ensemble estimate of the adapted-field correlation, equal to
/// [`empirical_correlation`] over `sample_grid` outputs but computed as one
/// real matrix product per batch of members:
/// `Σ_w ψ_w(x) ψ_w(P_ij) = Re Σ β e^{iκ_x X_i} e^{iκ_y Y_j}`.
pub fn ensemble_correlation(
    ensemble: &WaveEnsemble,
    images: &ImageSet,
    probe: Point,
    side: f64,
    resolution: usize,
) -> Result<CorrelationGrid> {
    ensemble_correlation_prefix(ensemble, images, probe, side, resolution, ensemble.size)
}

/// As [`ensemble_correlation`] over the first `count` members.
pub fn ensemble_correlation_prefix(
    ensemble: &WaveEnsemble,
    images: &ImageSet,
    probe: Point,
    side: f64,
    resolution: usize,
    count: usize,
) -> Result<CorrelationGrid> {
    check_grid(ensemble.k, side, resolution)?;
    images.require_inside(probe)?;
    if count < 2 || count > ensemble.size {
        return Err(Error::InvalidArgument(format!("member count {count} outside 2..={}", ensemble.size)));
    }
    let n = resolution;
    let batches: Vec<(usize, usize)> =
        (0..count).step_by(ENSEMBLE_BATCH).map(|s| (s, (s + ENSEMBLE_BATCH).min(count))).collect();
    let partials = batches
        .par_iter()
        .map(|&(lo, hi)| batch_product(ensemble, images, probe, side, n, lo, hi))
        .collect::<Result<Vec<Mat<f64>>>>()?;
    let mut values = vec![0.0; n * n];
    for part in &partials {
        for j in 0..n {
            for i in 0..n {
                values[j * n + i] += part[(j, i)];
            }
        }
    }
    let inv = 1.0 / count as f64;
    values.iter_mut().for_each(|v| *v *= inv);
    let mut grid = CorrelationGrid {
        probe,
        k: ensemble.k,
        side,
        resolution: n,
        values,
        kind: GridKind::Empirical { sample_count: count },
        inside: vec![true; n * n],
    };
    grid.restrict_to(images);
    Ok(grid)
}

fn batch_product(
    ensemble: &WaveEnsemble,
    images: &ImageSet,
    probe: Point,
    side: f64,
    n: usize,
    lo: usize,
    hi: usize,
) -> Result<Mat<f64>> {
    let fields = (lo..hi).map(|w| adapted_field(&ensemble.member(w), images)).collect::<Result<Vec<_>>>()?;
    let total: usize = fields.iter().map(|f| f.len()).sum();
    let h = side / (n - 1) as f64;
    let x0 = probe.x - 0.5 * side;
    let y0 = probe.y - 0.5 * side;
    // p[j, 2c..2c+2] = (Re, -Im) of β_c e^{iκ_y Y_j}; q[2c..2c+2, i] = (Re, Im) of e^{iκ_x X_i}
    let mut p = Mat::<f64>::zeros(n, 2 * total);
    let mut q = Mat::<f64>::zeros(2 * total, n);
    let mut col = 0;
    for f in &fields {
        let psi = f.value(probe);
        for c in 0..f.len() {
            let beta = f.coef[c] * psi;
            fill_phases(f.ky[c], y0, h, n, |j, z| {
                let v = beta * z;
                p[(j, col)] = v.re;
                p[(j, col + 1)] = -v.im;
            });
            fill_phases(f.kx[c], x0, h, n, |i, z| {
                q[(col, i)] = z.re;
                q[(col + 1, i)] = z.im;
            });
            col += 2;
        }
    }
    let mut out = Mat::<f64>::zeros(n, n);
    matmul(out.as_mut(), Accum::Replace, p.as_ref(), q.as_ref(), 1.0, Par::Seq);
    Ok(out)
}

/// Calls `put(i, e^{iκ(start + i h)})` for `i < n`, by exact evaluation every
/// 16 steps and multiplication by `e^{iκh}` in between.
fn fill_phases(kappa: f64, start: f64, h: f64, n: usize, mut put: impl FnMut(usize, Complex64)) {
    let step = Complex64::cis(kappa * h);
    let mut z = Complex64::ONE;
    for i in 0..n {
        if i % 16 == 0 {
            z = Complex64::cis(kappa * (start + i as f64 * h));
        } else {
            z *= step;
        }
        put(i, z);
    }
}

/// Relative integrated squared error `Σ (num − th)² / Σ th²` over the cells
/// flagged inside in both grids.
pub fn error_metric(num: &CorrelationGrid, th: &CorrelationGrid) -> Result<f64> {
    if !num.same_geometry(th) {
        return Err(Error::InvalidArgument("grids differ in geometry".into()));
    }
    let mut diff = Neumaier::default();
    let mut norm = Neumaier::default();
    for (idx, (a, b)) in num.values.iter().zip(&th.values).enumerate() {
        if !(num.inside[idx] && th.inside[idx]) {
            continue;
        }
        diff.add((a - b) * (a - b));
        norm.add(b * b);
    }
    let denom = norm.total();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric);
    }
    Ok(diff.total() / denom)
}

/// Cellwise `num − th`.
pub fn residual(num: &CorrelationGrid, th: &CorrelationGrid) -> Result<CorrelationGrid> {
    if !num.same_geometry(th) {
        return Err(Error::InvalidArgument("grids differ in geometry".into()));
    }
    let values = num.values.iter().zip(&th.values).map(|(a, b)| a - b).collect();
    let inside = num.inside.iter().zip(&th.inside).map(|(a, b)| *a && *b).collect();
    Ok(CorrelationGrid { values, inside, kind: GridKind::Residual, ..th.clone() })
}

#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Angular means of a grid in equal-width radial bins.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub means: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RadialProfile {
    pub fn to_csv(&self, header: &Header) -> String {
        let mut values = Vec::with_capacity(3 * self.radii.len());
        for ((r, m), c) in self.radii.iter().zip(&self.means).zip(&self.counts) {
            values.extend([*r, *m, *c as f64]);
        }
        let mut h = header.clone();
        h.set("columns", "r,mean,count");
        format_table(&h, 3, &values)
    }
}

pub fn default_bins(resolution: usize) -> usize {
    resolution.div_ceil(2)
}

/// Bins `[0, side/2)` into `bins` shells; cells outside the domain or beyond
/// `side/2` are skipped and empty bins are dropped.
pub fn angular_average(grid: &CorrelationGrid, bins: usize) -> Result<RadialProfile> {
    if bins < 4 {
        return Err(Error::InvalidArgument("need at least 4 bins".into()));
    }
    let r_max = 0.5 * grid.side;
    let width = r_max / bins as f64;
    let mut sums = vec![Neumaier::default(); bins];
    let mut counts = vec![0usize; bins];
    let n = grid.resolution;
    for j in 0..n {
        for i in 0..n {
            if !grid.inside[j * n + i] {
                continue;
            }
            let r = grid.displacement(i, j).norm();
            if r >= r_max {
                continue;
            }
            let b = ((r / width) as usize).min(bins - 1);
            sums[b].add(grid.get(i, j));
            counts[b] += 1;
        }
    }
    let mut profile = RadialProfile { radii: vec![], means: vec![], counts: vec![] };
    for b in 0..bins {
        if counts[b] > 0 {
            profile.radii.push((b as f64 + 0.5) * width);
            profile.means.push(sums[b].total() / counts[b] as f64);
            profile.counts.push(counts[b]);
        }
    }
    Ok(profile)
}

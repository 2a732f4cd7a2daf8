//! Boundary integral solver for Dirichlet eigenstates of planar billiards
//! bounded by line segments and circular arcs.
//!
//! An eigenfunction `u` with normal derivative `φ = ∂u/∂n` on the boundary
//! satisfies `u = S φ` inside (single layer of the outgoing Green function)
//! and `(I/2 − K′) φ = 0` on the boundary, where
//! `K′(x, y) = ∂_{ν(x)} (i/4) H₀(k|x − y|)`. The operator is discretized by
//! Kress's Nyström rule (logarithmic split with trigonometric weights) on a
//! parametrization that is graded toward every segment junction, and
//! eigen-wavenumbers are the minima of its smallest singular value.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::correlation::{empirical_correlation, CorrelationGrid};
use crate::io::{format_table, parse_table, write_atomic, Header};
use crate::randwave::{FieldGrid, GridSpec};
use crate::specfun::{j0_y0, j1_y1, y0};
use crate::{Error, Point, Result};

pub const DEFAULT_NODES_PER_WAVELENGTH: f64 = 10.0;
/// Power-law grading exponent at segment junctions.
pub const GRADING: f64 = 3.0;
pub const DEFAULT_THRESHOLD: f64 = 1e-4;
pub const REFINE_TOLERANCE: f64 = 1e-8;

/// A σ₂ minimum below this fraction of its median marks a close pair.
const PAIR_SPLIT: f64 = 0.25;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_UPSAMPLE: usize = 64;
/// Quadrature is trusted at points farther than this many node spacings
/// from the boundary.
const SAFE_SPACINGS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Line { start: Point, end: Point },
    /// Counterclockwise for positive `sweep`.
    Arc { center: Point, radius: f64, start_angle: f64, sweep: f64 },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { start, end } => start.dist(end),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point at fraction `s ∈ [0, 1]` of the segment.
    pub fn point(&self, s: f64) -> Point {
        match *self {
            Segment::Line { start, end } => start + s * (end - start),
            Segment::Arc { center, radius, start_angle, sweep } => {
                center + Point::from_polar(radius, start_angle + s * sweep)
            }
        }
    }

    /// d point / d s.
    pub fn derivative(&self, s: f64) -> Point {
        match *self {
            Segment::Line { start, end } => end - start,
            Segment::Arc { radius, start_angle, sweep, .. } => {
                let (sn, cs) = (start_angle + s * sweep).sin_cos();
                Point::new(-radius * sweep * sn, radius * sweep * cs)
            }
        }
    }

    /// Signed curvature, positive where the curve turns left.
    pub fn curvature(&self) -> f64 {
        match *self {
            Segment::Line { .. } => 0.0,
            Segment::Arc { radius, sweep, .. } => sweep.signum() / radius,
        }
    }

    pub fn start(&self) -> Point {
        self.point(0.0)
    }

    pub fn end(&self) -> Point {
        self.point(1.0)
    }

    fn in_sweep(&self, angle: f64) -> bool {
        match *self {
            Segment::Line { .. } => false,
            Segment::Arc { start_angle, sweep, .. } => {
                if sweep.abs() >= TAU {
                    return true;
                }
                let d = if sweep > 0.0 { angle - start_angle } else { start_angle - angle };
                d.rem_euclid(TAU) <= sweep.abs()
            }
        }
    }

    /// Distance from `p` and the nearest point of the segment.
    pub fn nearest(&self, p: Point) -> (f64, Point) {
        match *self {
            Segment::Line { start, end } => {
                let d = end - start;
                let s = ((p - start).dot(d) / d.dot(d)).clamp(0.0, 1.0);
                let q = start + s * d;
                (p.dist(q), q)
            }
            Segment::Arc { center, radius, .. } => {
                let v = p - center;
                if v.norm() > 0.0 && self.in_sweep(v.angle()) {
                    let q = center + (radius / v.norm()) * v;
                    return (p.dist(q), q);
                }
                let (a, b) = (self.start(), self.end());
                if p.dist(a) <= p.dist(b) {
                    (p.dist(a), a)
                } else {
                    (p.dist(b), b)
                }
            }
        }
    }

    /// Crossings of the ray from `p` toward +x.
    fn crossings(&self, p: Point) -> i32 {
        match *self {
            Segment::Line { start: a, end: b } => {
                if (a.y > p.y) != (b.y > p.y) {
                    let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                    i32::from(x > p.x)
                } else {
                    0
                }
            }
            Segment::Arc { center, radius, .. } => {
                let dy = p.y - center.y;
                if dy.abs() >= radius {
                    return 0;
                }
                let dx = (radius * radius - dy * dy).sqrt();
                let mut n = 0;
                for sx in [dx, -dx] {
                    if center.x + sx > p.x && self.in_sweep(dy.atan2(sx)) {
                        n += 1;
                    }
                }
                n
            }
        }
    }

    /// Twice the signed area swept from the origin.
    fn area2(&self) -> f64 {
        match *self {
            Segment::Line { start, end } => start.cross(end),
            Segment::Arc { center, radius, sweep, .. } => {
                radius * radius * sweep + center.cross(self.end() - self.start())
            }
        }
    }
}

/// Closed, counterclockwise chain of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub segments: Vec<Segment>,
}

impl BoundaryCurve {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("boundary needs at least one segment".into()));
        }
        for s in &segments {
            if !(s.length() > 0.0 && s.length().is_finite()) {
                return Err(Error::InvalidArgument(format!("degenerate segment {s:?}")));
            }
        }
        let n = segments.len();
        for i in 0..n {
            let gap = segments[i].end().dist(segments[(i + 1) % n].start());
            if gap > 1e-12 {
                return Err(Error::InvalidArgument(format!("boundary not closed after segment {i} (gap {gap:e})")));
            }
        }
        let curve = BoundaryCurve { segments };
        if curve.area() <= 0.0 {
            return Err(Error::InvalidArgument("boundary must be counterclockwise".into()));
        }
        if curve.self_intersects() {
            return Err(Error::InvalidArgument("boundary intersects itself".into()));
        }
        Ok(curve)
    }

    pub fn circle(radius: f64) -> Result<Self> {
        check_positive(radius, "radius")?;
        Self::new(vec![Segment::Arc { center: Point::new(0.0, 0.0), radius, start_angle: 0.0, sweep: TAU }])
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    pub fn area(&self) -> f64 {
        0.5 * self.segments.iter().map(Segment::area2).sum::<f64>()
    }

    /// Distance to the boundary and the nearest boundary point.
    pub fn nearest(&self, p: Point) -> (f64, Point) {
        self.segments
            .iter()
            .map(|s| s.nearest(p))
            .fold((f64::INFINITY, p), |a, b| if b.0 < a.0 { b } else { a })
    }

    pub fn distance(&self, p: Point) -> f64 {
        self.nearest(p).0
    }

    /// Closed domain test; points within 1e-12 of the boundary count as inside.
    pub fn contains(&self, p: Point) -> bool {
        if self.distance(p) <= 1e-12 * (1.0 + p.norm()) {
            return true;
        }
        self.segments.iter().map(|s| s.crossings(p)).sum::<i32>() % 2 == 1
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for s in &self.segments {
            for i in 0..=256 {
                let q = s.point(i as f64 / 256.0);
                lo = Point::new(lo.x.min(q.x), lo.y.min(q.y));
                hi = Point::new(hi.x.max(q.x), hi.y.max(q.y));
            }
        }
        (lo, hi)
    }

    fn self_intersects(&self) -> bool {
        const PER: usize = 64;
        let pts: Vec<Point> = self
            .segments
            .iter()
            .flat_map(|s| (0..PER).map(move |i| s.point(i as f64 / PER as f64)))
            .collect();
        let m = pts.len();
        let edge = |i: usize| (pts[i], pts[(i + 1) % m]);
        for i in 0..m {
            for j in i + 2..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                let ((a, b), (c, d)) = (edge(i), edge(j));
                let o1 = (b - a).cross(c - a);
                let o2 = (b - a).cross(d - a);
                let o3 = (d - c).cross(a - c);
                let o4 = (d - c).cross(b - c);
                if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                    return true;
                }
            }
        }
        false
    }

    /// Weyl estimate of the number of Dirichlet levels below `k`.
    pub fn weyl_count(&self, k: f64) -> f64 {
        (self.area() * k * k - self.total_length() * k) / (4.0 * PI)
    }

    /// Mean level spacing in k near `k`.
    pub fn mean_spacing(&self, k: f64) -> f64 {
        4.0 * PI / (2.0 * self.area() * k - self.total_length()).max(1e-300)
    }
}

fn check_positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")))
    }
}

/// Named billiard shapes; the descriptor persisted with eigenstate sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Cone { diameter: f64 },
    QuarterStadium { radius: f64, straight: f64 },
    Circle { radius: f64 },
}

impl Geometry {
    pub fn boundary(&self) -> Result<BoundaryCurve> {
        match *self {
            Geometry::Cone { diameter } => make_cone(diameter),
            Geometry::QuarterStadium { radius, straight } => make_quarter_stadium(radius, straight),
            Geometry::Circle { radius } => BoundaryCurve::circle(radius),
        }
    }

    pub fn header(&self) -> Header {
        let mut h = Header::new();
        match *self {
            Geometry::Cone { diameter } => h.set("geometry", "cone").set("diameter", diameter),
            Geometry::QuarterStadium { radius, straight } => {
                h.set("geometry", "quarter_stadium").set("radius", radius).set("straight", straight)
            }
            Geometry::Circle { radius } => h.set("geometry", "circle").set("radius", radius),
        };
        h
    }

    pub fn from_header(h: &Header) -> Result<Self> {
        match h.require("geometry")? {
            "cone" => Ok(Geometry::Cone { diameter: h.parse_f64("diameter")? }),
            "quarter_stadium" => {
                Ok(Geometry::QuarterStadium { radius: h.parse_f64("radius")?, straight: h.parse_f64("straight")? })
            }
            "circle" => Ok(Geometry::Circle { radius: h.parse_f64("radius")? }),
            other => Err(Error::Parse(format!("unknown billiard geometry '{other}'"))),
        }
    }
}

/// Ice-cream cone: a 60° wedge with apex at the origin and edges at ±30°,
/// closed by a semicircle of the given diameter on the chord joining the
/// edge ends. The edges have the same length as the diameter.
pub fn make_cone(diameter: f64) -> Result<BoundaryCurve> {
    check_positive(diameter, "cone diameter")?;
    let apex = Point::new(0.0, 0.0);
    let c = (PI / 6.0).cos() * diameter;
    let low = Point::new(c, -0.5 * diameter);
    let high = Point::new(c, 0.5 * diameter);
    BoundaryCurve::new(vec![
        Segment::Line { start: apex, end: low },
        Segment::Arc { center: Point::new(c, 0.0), radius: 0.5 * diameter, start_angle: -0.5 * PI, sweep: PI },
        Segment::Line { start: high, end: apex },
    ])
}

/// Rectangle `[0, straight] × [0, radius]` whose far top corner is replaced
/// by a quarter circle of the given radius centered at `(straight − radius, 0)`.
/// The back wall is `x = 0`.
pub fn make_quarter_stadium(radius: f64, straight: f64) -> Result<BoundaryCurve> {
    check_positive(radius, "stadium radius")?;
    check_positive(straight, "stadium straight length")?;
    if straight < radius {
        return Err(Error::InvalidArgument(format!("straight length {straight} shorter than radius {radius}")));
    }
    let c = straight - radius;
    let mut segs = vec![Segment::Line { start: Point::new(0.0, 0.0), end: Point::new(straight, 0.0) }];
    segs.push(Segment::Arc { center: Point::new(c, 0.0), radius, start_angle: 0.0, sweep: 0.5 * PI });
    if c > 0.0 {
        segs.push(Segment::Line { start: Point::new(c, radius), end: Point::new(0.0, radius) });
    }
    segs.push(Segment::Line { start: Point::new(0.0, radius), end: Point::new(0.0, 0.0) });
    BoundaryCurve::new(segs)
}

/// Kress's sigmoid substitution on `[0, 2π]` and its derivative; all
/// derivatives up to order `p − 1` vanish at both ends.
fn grading(u: f64, p: f64) -> (f64, f64) {
    let a = (PI - u) / PI;
    let v = (1.0 / p - 0.5) * a * a * a + (u - PI) / (p * PI) + 0.5;
    let dv = -3.0 * (1.0 / p - 0.5) * a * a / PI + 1.0 / (p * PI);
    let (vp, wp) = (v.powf(p), (1.0 - v).powf(p));
    let den = vp + wp;
    let w = TAU * vp / den;
    let dw = TAU * p * dv * (v * (1.0 - v)).powf(p - 1.0) / (den * den);
    (w, dw)
}

/// Boundary quadrature nodes `t_j = (j + ½) 2π/N` of the global
/// parametrization.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub t: Vec<f64>,
    pub pos: Vec<Point>,
    /// dγ/dt.
    pub tangent: Vec<Point>,
    /// |dγ/dt|.
    pub speed: Vec<f64>,
    /// Outward unit normal.
    pub normal: Vec<Point>,
    pub curvature: Vec<f64>,
    /// Parameter intervals `[T_s, T_s + len_s)` of the segments.
    breaks: Vec<(f64, f64)>,
    graded: bool,
}

impl Discretization {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn step(&self) -> f64 {
        TAU / self.len() as f64
    }
}

/// Node count for a wavenumber: `⌈npw · k · L / 2π⌉`, raised to at least
/// 32 and to an even number.
pub fn node_count(boundary: &BoundaryCurve, k: f64, nodes_per_wavelength: f64) -> usize {
    let n = (nodes_per_wavelength * k * boundary.total_length() / TAU).ceil() as usize;
    let n = n.max(32);
    n + n % 2
}

pub fn discretize(boundary: &BoundaryCurve, n: usize) -> Result<Discretization> {
    if n < 8 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("node count must be even and >= 8, got {n}")));
    }
    let segs = &boundary.segments;
    let total = boundary.total_length();
    // largest-remainder share of nodes per segment, at least 4 each
    let mut counts: Vec<usize> = segs.iter().map(|s| ((n as f64 * s.length() / total).floor() as usize).max(4)).collect();
    while counts.iter().sum::<usize>() < n {
        let i = (0..segs.len())
            .max_by(|&a, &b| {
                let ra = n as f64 * segs[a].length() / total - counts[a] as f64;
                let rb = n as f64 * segs[b].length() / total - counts[b] as f64;
                ra.total_cmp(&rb)
            })
            .unwrap();
        counts[i] += 1;
    }
    if counts.iter().sum::<usize>() != n {
        return Err(Error::InvalidArgument(format!("{n} nodes are too few for {} segments", segs.len())));
    }
    let h = TAU / n as f64;
    let mut breaks = Vec::with_capacity(segs.len());
    let mut start = 0.0;
    for &c in &counts {
        breaks.push((start, c as f64 * h));
        start += c as f64 * h;
    }
    let mut d = Discretization {
        t: Vec::with_capacity(n),
        pos: Vec::with_capacity(n),
        tangent: Vec::with_capacity(n),
        speed: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
        breaks,
        graded: segs.len() > 1,
    };
    for j in 0..n {
        let t = (j as f64 + 0.5) * h;
        let (p, dp, kappa) = evaluate_param(boundary, &d.breaks, d.graded, t);
        let sp = dp.norm();
        d.t.push(t);
        d.pos.push(p);
        d.tangent.push(dp);
        d.speed.push(sp);
        d.normal.push(Point::new(dp.y / sp, -dp.x / sp));
        d.curvature.push(kappa);
    }
    Ok(d)
}

/// Point, dγ/dt and curvature at global parameter `t`.
fn evaluate_param(boundary: &BoundaryCurve, breaks: &[(f64, f64)], graded: bool, t: f64) -> (Point, Point, f64) {
    let t = t.rem_euclid(TAU);
    let i = breaks.iter().rposition(|&(s, _)| s <= t).unwrap_or(0);
    let (s0, len) = breaks[i];
    let u = ((t - s0) / len * TAU).clamp(0.0, TAU);
    let (w, dw) = if graded { grading(u, GRADING) } else { (u, 1.0) };
    let seg = &boundary.segments[i];
    let s = w / TAU;
    let ds_dt = dw / len;
    (seg.point(s), ds_dt * seg.derivative(s), seg.curvature())
}

/// Kress's weights `R_m` for `∫ ln(4 sin²((t − τ)/2)) f(τ) dτ`, as a
/// function of the parameter offset `t − t_j`.
fn log_weight(n: usize, offset: f64) -> f64 {
    let half = n / 2;
    let mut s = 0.0;
    for l in 1..half {
        s += (l as f64 * offset).cos() / l as f64;
    }
    -(4.0 * PI / n as f64) * s - (4.0 * PI / (n * n) as f64) * (half as f64 * offset).cos()
}

fn log_weights(n: usize) -> Vec<f64> {
    let h = TAU / n as f64;
    (0..n).map(|m| log_weight(n, m as f64 * h)).collect()
}

/// `I/2 − K′` on the nodes of `d`.
pub fn assemble(d: &Discretization, k: f64) -> Mat<c64> {
    let n = d.len();
    let h = d.step();
    let r = log_weights(n);
    let rows: Vec<Vec<c64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = d.pos[i];
            let ni = d.normal[i];
            let mut row = vec![c64::new(0.0, 0.0); n];
            for (j, slot) in row.iter_mut().enumerate() {
                let rw = r[(i + n - j) % n];
                let entry = if i == j {
                    c64::new(-d.curvature[i] * d.speed[i] / (4.0 * PI) * h, 0.0)
                } else {
                    let diff = xi - d.pos[j];
                    let rho = diff.norm();
                    let g = ni.dot(diff) / rho * d.speed[j];
                    let (jj, yy) = j1_y1(k * rho);
                    let l1 = k / (4.0 * PI) * jj * g;
                    let lg = (4.0 * (0.5 * (d.t[i] - d.t[j])).sin().powi(2)).ln();
                    let full = c64::new(0.25 * k * yy * g, -0.25 * k * jj * g);
                    c64::new(rw * l1, 0.0) + h * (full - c64::new(l1 * lg, 0.0))
                };
                *slot = -entry;
            }
            row[i] += c64::new(0.5, 0.0);
            row
        })
        .collect();
    Mat::from_fn(n, n, |i, j| rows[i][j])
}

/// Discretized boundary operator with `N` from the node-count rule.
pub fn assemble_kernel(boundary: &BoundaryCurve, k: f64, nodes_per_wavelength: f64) -> Result<Mat<c64>> {
    check_positive(k, "wavenumber")?;
    if !(nodes_per_wavelength >= 6.0) {
        return Err(Error::InvalidArgument(format!("nodes per wavelength must be >= 6, got {nodes_per_wavelength}")));
    }
    let d = discretize(boundary, node_count(boundary, k, nodes_per_wavelength))?;
    Ok(assemble(&d, k))
}

/// Smallest singular value of `a` and its right singular vector by inverse
/// iteration on `(AᴴA)⁻¹`.
pub fn smallest_singular(a: &Mat<c64>) -> (f64, Vec<c64>) {
    let n = a.nrows();
    let lu = a.partial_piv_lu();
    let mut v = Mat::from_fn(n, 1, |j, _| c64::new(1.0 + 0.5 * (1.7 * j as f64).sin(), 0.3 * (0.9 * j as f64).cos()));
    let mut last = f64::INFINITY;
    let mut sigma = f64::INFINITY;
    for _ in 0..30 {
        let norm = v.norm_l2();
        v = v * faer::Scale(c64::new(1.0 / norm, 0.0));
        let av = a * &v;
        sigma = av.norm_l2();
        if (last - sigma).abs() <= 1e-4 * sigma {
            break;
        }
        last = sigma;
        lu.solve_adjoint_in_place(v.as_mut());
        lu.solve_in_place(v.as_mut());
        if !v.norm_l2().is_finite() {
            // exactly singular
            return (0.0, vec![c64::new(0.0, 0.0); n]);
        }
    }
    (sigma, (0..n).map(|j| v[(j, 0)]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub nodes_per_wavelength: f64,
    /// Grid step; defaults to an eighth of the Weyl mean spacing at `k_max`.
    pub dk: Option<f64>,
    /// Minima are accepted below `threshold × median` of the scanned values.
    pub threshold: f64,
    pub tolerance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            nodes_per_wavelength: DEFAULT_NODES_PER_WAVELENGTH,
            dk: None,
            threshold: DEFAULT_THRESHOLD,
            tolerance: REFINE_TOLERANCE,
        }
    }
}

/// An accepted minimum with its normal-derivative density at the scan nodes.
#[derive(Debug, Clone)]
pub struct Level {
    pub k: f64,
    pub sigma: f64,
    pub density: Vec<c64>,
    pub nodes: usize,
}

/// The two smallest singular values, by block inverse iteration on
/// `(AᴴA)⁻¹` with a 2×2 Rayleigh-Ritz step.
pub fn smallest_two_singular(a: &Mat<c64>) -> (f64, f64) {
    let n = a.nrows();
    let lu = a.partial_piv_lu();
    let mut v = Mat::from_fn(n, 2, |j, c| {
        let x = j as f64 + 1.0;
        c64::new((1.7 * x + c as f64).sin() + 0.5, (0.9 * x * (c + 1) as f64).cos())
    });
    let mut last = f64::INFINITY;
    let (mut s1, mut s2) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..40 {
        // Gram-Schmidt on the two columns
        let n0 = v.col(0).norm_l2();
        if !(n0 > 0.0 && n0.is_finite()) {
            return (0.0, 0.0);
        }
        v.col_mut(0).iter_mut().for_each(|z| *z /= n0);
        let proj: c64 = (0..n).map(|j| v[(j, 0)].conj() * v[(j, 1)]).sum();
        for j in 0..n {
            let z = v[(j, 0)] * proj;
            v[(j, 1)] -= z;
        }
        let n1 = v.col(1).norm_l2();
        if !(n1 > 0.0 && n1.is_finite()) {
            return (s1.min(0.0), 0.0);
        }
        v.col_mut(1).iter_mut().for_each(|z| *z /= n1);
        let b = a * &v;
        let g00: f64 = b.col(0).norm_l2().powi(2);
        let g11: f64 = b.col(1).norm_l2().powi(2);
        let g01: c64 = (0..n).map(|j| b[(j, 0)].conj() * b[(j, 1)]).sum();
        let mean = 0.5 * (g00 + g11);
        let gap = (0.25 * (g00 - g11).powi(2) + g01.norm_sqr()).sqrt();
        s1 = (mean - gap).max(0.0).sqrt();
        s2 = (mean + gap).sqrt();
        if (last - s2).abs() <= 1e-4 * s2 {
            break;
        }
        last = s2;
        lu.solve_adjoint_in_place(v.as_mut());
        lu.solve_in_place(v.as_mut());
    }
    (s1, s2)
}

/// σ₁ from the two-vector iteration, which stays accurate at degeneracies.
fn sigma_at(d: &Discretization, k: f64) -> f64 {
    smallest_two_singular(&assemble(d, k)).0
}

/// Golden-section minimization of `f` on `[a, b]`.
fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let mut fc = f(c);
    let mut fe = f(e);
    while b - a > tol {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = f(e);
        }
    }
    0.5 * (a + b)
}

fn median_of(v: &[f64]) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[sorted.len() / 2]
}

/// Eigen-wavenumbers in `[k_min, k_max]` with their densities.
pub fn scan_levels(boundary: &BoundaryCurve, k_min: f64, k_max: f64, opts: &ScanOptions) -> Result<Vec<Level>> {
    check_positive(k_min, "k_min")?;
    if !(k_max > k_min && k_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("empty window ({k_min}, {k_max})")));
    }
    let dk = opts.dk.unwrap_or_else(|| boundary.mean_spacing(k_max) / 8.0);
    check_positive(dk, "dk")?;
    let n = node_count(boundary, k_max, opts.nodes_per_wavelength);
    let d = discretize(boundary, n)?;
    faer::set_global_parallelism(faer::Par::Seq);
    let steps = ((k_max - k_min) / dk).ceil() as usize;
    let ks: Vec<f64> = (0..=steps + 2).map(|i| k_min + (i as f64 - 1.0) * dk).filter(|&k| k > 0.0).collect();
    let pairs: Vec<(f64, f64)> = ks.par_iter().map(|&k| smallest_two_singular(&assemble(&d, k))).collect();
    let sig: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let sig2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let median = median_of(&sig);
    let median2 = median_of(&sig2);
    let is_min = |v: &[f64], i: usize| v[i] < v[i - 1] && v[i] <= v[i + 1];
    let mut brackets: Vec<(f64, f64)> =
        (1..ks.len() - 1).filter(|&i| is_min(&sig, i)).map(|i| (ks[i - 1], ks[i + 1])).collect();
    // Two levels closer than the grid step show up as one σ₁ dip; σ₂ then
    // has a deep minimum between them, where the dip is split.
    let splits: Vec<(f64, f64, f64)> = (1..ks.len() - 1)
        .filter(|&i| is_min(&sig2, i) && sig2[i] < PAIR_SPLIT * median2)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| {
            let f = |k: f64| smallest_two_singular(&assemble(&d, k)).1;
            (ks[i - 1], golden(f, ks[i - 1], ks[i + 1], 1e-3 * dk), ks[i + 1])
        })
        .collect();
    for (a, m, b) in splits {
        brackets.push((a, m));
        brackets.push((m, b));
    }
    let refined: Vec<Option<Level>> = brackets
        .par_iter()
        .map(|&(a, b)| {
            let k = golden(|k| sigma_at(&d, k), a, b, opts.tolerance);
            // a minimum at the bracket end belongs to the neighbouring bracket
            let interior = k - a > 2.0 * opts.tolerance && b - k > 2.0 * opts.tolerance;
            let (sigma, density) = smallest_singular(&assemble(&d, k));
            (interior && sigma < opts.threshold * median && (k_min..=k_max).contains(&k))
                .then_some(Level { k, sigma, density, nodes: n })
        })
        .collect();
    let mut levels: Vec<Level> = refined.into_iter().flatten().collect();
    levels.sort_by(|a, b| a.k.total_cmp(&b.k));
    levels.dedup_by(|b, a| (b.k - a.k).abs() <= 10.0 * opts.tolerance);
    Ok(levels)
}

/// Eigen-wavenumbers in `[k_min, k_max]` scanned with step `dk`.
pub fn eigen_scan(boundary: &BoundaryCurve, k_min: f64, k_max: f64, dk: f64) -> Result<Vec<f64>> {
    let opts = ScanOptions { dk: Some(dk), ..ScanOptions::default() };
    Ok(scan_levels(boundary, k_min, k_max, &opts)?.into_iter().map(|l| l.k).collect())
}

/// A normalized Dirichlet eigenstate: `density` is `∂u/∂n` at the `N`
/// quadrature nodes of the graded parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenstate {
    pub k: f64,
    pub sigma: f64,
    pub density: Vec<f64>,
    /// Factor making the field built from `density` unit-L² normalized.
    pub norm: f64,
}

/// Rotates a complex null vector to its real form, `φ e^{−iα}` with
/// `α = ½ arg Σ φ²`, sign fixed by the largest entry.
pub fn real_density(v: &[c64]) -> Vec<f64> {
    let s: c64 = v.iter().map(|z| z * z).sum();
    let rot = c64::from_polar(1.0, -0.5 * s.arg());
    let mut out: Vec<f64> = v.iter().map(|z| (z * rot).re).collect();
    let big = out.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        out.iter_mut().for_each(|x| *x = -*x);
    }
    out
}

/// Interior field `u(p) = −¼ Σ w_j Y₀(k|p − y_j|) φ_j`, with the density
/// trigonometrically upsampled for points near the boundary.
#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub boundary: BoundaryCurve,
    pub k: f64,
    scale: f64,
    /// Source points and weights for upsampling factors 1, 2, 4, ...
    levels: Vec<(Vec<Point>, Vec<f64>)>,
    /// Largest base node spacing along the boundary.
    spacing: f64,
}

impl Eigenfunction {
    /// `density` is scaled by `scale` in every evaluation.
    pub fn new(boundary: &BoundaryCurve, k: f64, density: &[f64], scale: f64) -> Result<Self> {
        let n = density.len();
        let d = discretize(boundary, n)?;
        let h = d.step();
        let spacing = d.speed.iter().fold(0.0f64, |m, &s| m.max(s * h));
        let mut levels = Vec::new();
        let mut planner = FftPlanner::<f64>::new();
        let mut spectrum: Vec<c64> = density.iter().map(|&x| c64::new(x, 0.0)).collect();
        planner.plan_fft_forward(n).process(&mut spectrum);
        let mut f = 1;
        while f <= MAX_UPSAMPLE {
            let m = n * f;
            let mut fine = vec![c64::new(0.0, 0.0); m];
            let half = n / 2;
            for (q, &c) in spectrum.iter().enumerate() {
                if q < half {
                    fine[q] = c;
                } else if q > half {
                    fine[m - (n - q)] = c;
                } else if f == 1 {
                    fine[q] = c;
                } else {
                    fine[half] = 0.5 * c;
                    fine[m - half] = 0.5 * c;
                }
            }
            planner.plan_fft_inverse(m).process(&mut fine);
            let hf = h / f as f64;
            let mut pts = Vec::with_capacity(m);
            let mut wts = Vec::with_capacity(m);
            for (q, v) in fine.iter().enumerate() {
                let t = 0.5 * h + q as f64 * hf;
                let (p, dp, _) = evaluate_param(boundary, &d.breaks, d.graded, t);
                pts.push(p);
                wts.push(-0.25 * hf * dp.norm() * v.re / n as f64);
            }
            levels.push((pts, wts));
            f *= 2;
        }
        Ok(Self { boundary: boundary.clone(), k, scale, levels, spacing })
    }

    fn sum_level(&self, level: usize, p: Point) -> f64 {
        let (pts, wts) = &self.levels[level];
        let mut s = 0.0;
        for (q, w) in pts.iter().zip(wts) {
            s += w * y0(self.k * p.dist(*q));
        }
        s * self.scale
    }

    fn value_unchecked(&self, p: Point) -> f64 {
        let (dist, foot) = self.boundary.nearest(p);
        let need = SAFE_SPACINGS * self.spacing;
        if dist >= need {
            return self.sum_level(0, p);
        }
        let top = self.levels.len() - 1;
        let closest = need / (1 << top) as f64;
        if dist >= closest {
            let f = (need / dist).log2().ceil() as usize;
            return self.sum_level(f.min(top), p);
        }
        if dist == 0.0 {
            return 0.0;
        }
        // the field is linear in the wall distance this close to a wall
        let q = foot + (closest / dist) * (p - foot);
        if !self.boundary.contains(q) {
            return 0.0;
        }
        self.sum_level(top, q) * dist / closest
    }

    pub fn value(&self, p: Point) -> Result<f64> {
        if !self.boundary.contains(p) {
            return Err(Error::Domain(format!("point ({}, {}) outside the billiard", p.x, p.y)));
        }
        Ok(self.value_unchecked(p))
    }

    /// Field on a grid; cells outside the billiard hold 0.
    pub fn grid(&self, spec: GridSpec) -> FieldGrid {
        let n = spec.resolution;
        let mut values = vec![0.0; n * n];
        values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                let p = spec.point(i, j);
                if self.boundary.contains(p) {
                    *v = self.value_unchecked(p);
                }
            }
        });
        FieldGrid { spec, values, k: self.k, seed: 0, index: 0 }
    }

    /// Boundary value at parameter `t` through the single-layer limit
    /// (Kress quadrature), for checking the Dirichlet condition.
    pub fn boundary_value(&self, density: &[f64], t: f64) -> Result<f64> {
        let n = density.len();
        let d = discretize(&self.boundary, n)?;
        let (x, dx, _) = evaluate_param(&self.boundary, &d.breaks, d.graded, t);
        let h = d.step();
        let mut s = 0.0;
        for j in 0..n {
            let off = t - d.t[j];
            let rho = x.dist(d.pos[j]);
            let sp = d.speed[j];
            let lg = (4.0 * (0.5 * off).sin().powi(2)).ln();
            let (jj, s_full) = if rho > 0.0 && lg.is_finite() {
                let (jj, yy) = j0_y0(self.k * rho);
                (jj, -0.25 * yy * sp)
            } else {
                let lim = -(sp / TAU) * ((0.5 * self.k * dx.norm()).ln() + EULER_GAMMA);
                (1.0, lim)
            };
            let s1 = -jj * sp / (4.0 * PI);
            let s2 = if lg.is_finite() { s_full - s1 * lg } else { s_full };
            s += (log_weight(n, off) * s1 + h * s2) * density[j];
        }
        Ok(s * self.scale)
    }
}

/// Midpoint quadrature of `u²` over the billiard on cells of side `λ/8`,
/// returning `(∫u², max |u|)`.
pub fn interior_norm(f: &Eigenfunction) -> (f64, f64) {
    let (lo, hi) = f.boundary.bounding_box();
    let cell = (PI / (4.0 * f.k)).min((hi.x - lo.x).max(hi.y - lo.y) / 256.0);
    let nx = ((hi.x - lo.x) / cell).ceil() as usize;
    let ny = ((hi.y - lo.y) / cell).ceil() as usize;
    let rows: Vec<(f64, f64)> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let mut s = 0.0;
            let mut m = 0.0f64;
            for i in 0..nx {
                let p = lo + Point::new((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell);
                if f.boundary.contains(p) {
                    let u = f.value_unchecked(p);
                    s += u * u;
                    m = m.max(u.abs());
                }
            }
            (s, m)
        })
        .collect();
    let total: f64 = rows.iter().map(|r| r.0).sum();
    (total * cell * cell, rows.iter().fold(0.0f64, |m, r| m.max(r.1)))
}

impl Eigenstate {
    /// Real density, unit interior normalization.
    pub fn from_level(boundary: &BoundaryCurve, level: &Level) -> Result<Self> {
        let density = real_density(&level.density);
        let raw = Eigenfunction::new(boundary, level.k, &density, 1.0)?;
        let (mass, _) = interior_norm(&raw);
        if !(mass > 0.0) {
            return Err(Error::Domain(format!("state at k = {} has zero interior norm", level.k)));
        }
        Ok(Self { k: level.k, sigma: level.sigma, density, norm: 1.0 / mass.sqrt() })
    }

    /// Unit-L² eigenfunction.
    pub fn eigenfunction(&self, boundary: &BoundaryCurve) -> Result<Eigenfunction> {
        Eigenfunction::new(boundary, self.k, &self.density, self.norm)
    }
}

/// Interior field evaluator of an accepted level.
pub fn eigenfunction(boundary: &BoundaryCurve, level: &Level) -> Result<Eigenfunction> {
    Eigenstate::from_level(boundary, level)?.eigenfunction(boundary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenstateSet {
    pub geometry: Geometry,
    pub boundary: BoundaryCurve,
    /// Target wavenumber; correlation grids are labeled with it.
    pub k_center: f64,
    pub window: (f64, f64),
    pub nodes_per_wavelength: f64,
    pub states: Vec<Eigenstate>,
}

/// The `count` eigenstates nearest `k_center`. The window starts at the
/// Weyl width for `1.25 count` levels and widens symmetrically until enough
/// levels are found.
pub fn ensemble_of_states(geometry: Geometry, k_center: f64, count: usize, opts: &ScanOptions) -> Result<EigenstateSet> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    check_positive(k_center, "k_center")?;
    let boundary = geometry.boundary()?;
    let width = 1.25 * count as f64 * boundary.mean_spacing(k_center);
    let mut lo = (k_center - 0.5 * width).max(0.5 * k_center);
    let mut hi = k_center + 0.5 * width;
    let mut levels = scan_levels(&boundary, lo, hi, opts)?;
    while levels.len() < count {
        let grow = 0.5 * (hi - lo);
        let new_lo = (lo - grow).max(1e-3 * k_center);
        if new_lo < lo {
            levels.extend(scan_levels(&boundary, new_lo, lo, opts)?);
        }
        levels.extend(scan_levels(&boundary, hi, hi + grow, opts)?);
        lo = new_lo;
        hi += grow;
        levels.sort_by(|a, b| a.k.total_cmp(&b.k));
        levels.dedup_by(|b, a| (b.k - a.k).abs() <= 10.0 * opts.tolerance);
    }
    levels.sort_by(|a, b| (a.k - k_center).abs().total_cmp(&(b.k - k_center).abs()));
    levels.truncate(count);
    levels.sort_by(|a, b| a.k.total_cmp(&b.k));
    let states = levels.iter().map(|l| Eigenstate::from_level(&boundary, l)).collect::<Result<Vec<_>>>()?;
    Ok(EigenstateSet { geometry, boundary, k_center, window: (lo, hi), nodes_per_wavelength: opts.nodes_per_wavelength, states })
}

impl EigenstateSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.k).collect()
    }

    pub fn header(&self) -> Header {
        let mut h = self.geometry.header();
        h.set("k_center", self.k_center)
            .set("k_min", self.window.0)
            .set("k_max", self.window.1)
            .set("nodes_per_wavelength", self.nodes_per_wavelength)
            .set("count", self.states.len());
        h
    }

    /// Writes `geometry.txt` and one `state_NNNN.csv` per state.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (i, s) in self.states.iter().enumerate() {
            let d = discretize(&self.boundary, s.density.len())?;
            let mut h = Header::new();
            h.set("kind", "eigenstate").set("k", s.k).set("sigma", s.sigma).set("norm", s.norm).set("nodes", s.density.len());
            let mut rows = Vec::with_capacity(4 * s.density.len());
            for j in 0..s.density.len() {
                rows.extend([d.t[j], d.pos[j].x, d.pos[j].y, s.density[j]]);
            }
            write_atomic(&dir.join(format!("state_{i:04}.csv")), &format_table(&h, 4, &rows))?;
        }
        write_atomic(&dir.join("geometry.txt"), &self.header().to_kv_string())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let h = Header::from_kv_str(&fs::read_to_string(dir.join("geometry.txt"))?)?;
        let geometry = Geometry::from_header(&h)?;
        let boundary = geometry.boundary()?;
        let count = h.parse_usize("count")?;
        let mut states = Vec::with_capacity(count);
        for i in 0..count {
            let (sh, rows) = parse_table(&fs::read_to_string(dir.join(format!("state_{i:04}.csv")))?)?;
            let density: Vec<f64> = rows.iter().map(|r| r.get(3).copied()).collect::<Option<_>>().ok_or_else(|| {
                Error::Parse(format!("state {i}: expected 4 columns"))
            })?;
            if density.len() != sh.parse_usize("nodes")? {
                return Err(Error::Parse(format!("state {i}: node count mismatch")));
            }
            states.push(Eigenstate { k: sh.parse_f64("k")?, sigma: sh.parse_f64("sigma")?, density, norm: sh.parse_f64("norm")? });
        }
        Ok(Self {
            geometry,
            boundary,
            k_center: h.parse_f64("k_center")?,
            window: (h.parse_f64("k_min")?, h.parse_f64("k_max")?),
            nodes_per_wavelength: h.parse_f64("nodes_per_wavelength")?,
            states,
        })
    }

    /// Correlation `⟨ψ(x) ψ(x + r)⟩` over the states, each scaled to unit
    /// mean square over the billiard (`√Area` times the unit-L² field).
    pub fn correlation(&self, probe: Point, side: f64, resolution: usize) -> Result<CorrelationGrid> {
        if !self.boundary.contains(probe) {
            return Err(Error::Domain(format!("probe ({}, {}) outside the billiard", probe.x, probe.y)));
        }
        let spec = GridSpec::centered(probe, side, resolution)?;
        let scale = self.boundary.area().sqrt();
        let samples = self
            .states
            .iter()
            .map(|s| {
                let f = s.eigenfunction(&self.boundary)?;
                let mut g = f.grid(spec);
                g.values.iter_mut().for_each(|v| *v *= scale);
                g.k = 1.0;
                Ok((scale * f.value(probe)?, g))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut grid = empirical_correlation(&samples)?;
        grid.k = self.k_center;
        for (j, row) in grid.inside.chunks_mut(resolution).enumerate() {
            for (i, f) in row.iter_mut().enumerate() {
                *f = self.boundary.contains(spec.point(i, j));
            }
        }
        Ok(grid)
    }
}

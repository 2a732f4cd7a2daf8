//! Real Gaussian random plane-wave fields and their projections onto the
//! odd (Dirichlet) representation of an image set.
//!
//! A free field is `ψ(p) = sqrt(2/M) Σ_j a_j cos(k_j·p + δ_j)`. Projected
//! fields are stored as complex plane-wave lists, `Re Σ c e^{iκ·p}`, so one
//! realization can be evaluated at many points without redoing the group sum.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::io::{format_point, format_table, parse_table, Header};
use crate::symmetry::{ImageKind, ImageSet, Isometry};
use crate::{Error, Point, Result};

pub const DEFAULT_WAVES: usize = 256;

/// RNG words reserved per component; a standard normal draw rarely needs
/// more than four.
const WORDS_PER_COMPONENT: u128 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveComponent {
    pub theta: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// One realization of the free random field.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveSum {
    pub k: f64,
    pub components: Vec<WaveComponent>,
    pub seed: u64,
    /// Member index within an ensemble sharing `seed`.
    pub index: u64,
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("wavenumber must be > 0, got {k}")));
    }
    Ok(())
}

pub fn sample_free_wave(k: f64, m: usize, seed: u64) -> Result<PlaneWaveSum> {
    sample_wave(k, m, seed, 0)
}

/// Ensemble member `index`. Component `j` is drawn from ChaCha20 stream
/// `index` at word offset `64 j`, so each component depends only on
/// `(seed, index, j)`.
pub fn sample_wave(k: f64, m: usize, seed: u64, index: u64) -> Result<PlaneWaveSum> {
    check_k(k)?;
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one plane wave".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let components = (0..m)
        .map(|j| {
            rng.set_word_pos(j as u128 * WORDS_PER_COMPONENT);
            let theta = TAU * rng.random::<f64>();
            let phase = TAU * rng.random::<f64>();
            let amplitude: f64 = rng.sample(StandardNormal);
            WaveComponent { theta, amplitude, phase }
        })
        .collect();
    Ok(PlaneWaveSum { k, components, seed, index })
}

impl PlaneWaveSum {
    pub fn scale(&self) -> f64 {
        (2.0 / self.components.len() as f64).sqrt()
    }

    pub fn wavevector(&self, j: usize) -> Point {
        Point::from_polar(self.k, self.components[j].theta)
    }
}

pub fn evaluate_free(wave: &PlaneWaveSum, p: Point) -> f64 {
    let s: f64 = wave
        .components
        .iter()
        .map(|c| {
            let kv = Point::from_polar(wave.k, c.theta);
            c.amplitude * (kv.dot(p) + c.phase).cos()
        })
        .sum();
    wave.scale() * s
}

pub fn gradient_free(wave: &PlaneWaveSum, p: Point) -> Point {
    let mut g = Point::default();
    for c in &wave.components {
        let kv = Point::from_polar(wave.k, c.theta);
        g = g + (-c.amplitude * (kv.dot(p) + c.phase).sin()) * kv;
    }
    wave.scale() * g
}

/// `Re Σ c_j e^{iκ_j·p}` in structure-of-arrays form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlaneWaveField {
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub coef: Vec<Complex64>,
}

impl PlaneWaveField {
    fn with_capacity(n: usize) -> Self {
        Self { kx: Vec::with_capacity(n), ky: Vec::with_capacity(n), coef: Vec::with_capacity(n) }
    }

    fn push(&mut self, kappa: Point, c: Complex64) {
        self.kx.push(kappa.x);
        self.ky.push(kappa.y);
        self.coef.push(c);
    }

    pub fn len(&self) -> usize {
        self.coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.is_empty()
    }

    /// The free field itself.
    pub fn from_wave(wave: &PlaneWaveSum) -> Self {
        let scale = wave.scale();
        let mut f = Self::with_capacity(wave.components.len());
        for c in &wave.components {
            f.push(Point::from_polar(wave.k, c.theta), Complex64::from_polar(scale * c.amplitude, c.phase));
        }
        f
    }

    /// The field `p -> self(g p)`.
    pub fn compose(&self, g: &Isometry) -> Self {
        let mut f = Self::with_capacity(self.len());
        for j in 0..self.len() {
            let kappa = Point::new(self.kx[j], self.ky[j]);
            let c = self.coef[j] * Complex64::cis(kappa.dot(g.shift));
            f.push(g.apply_linear_transpose(kappa), c);
        }
        f
    }

    /// Each term is evaluated as `Re[(c e^{iκ_y y}) e^{iκ_x x}]`; grid
    /// sampling reuses the same factors, so both paths agree bit for bit.
    pub fn value(&self, p: Point) -> f64 {
        let mut s = 0.0;
        for j in 0..self.coef.len() {
            let t = self.coef[j] * Complex64::cis(self.ky[j] * p.y);
            let u = Complex64::cis(self.kx[j] * p.x);
            s += t.re * u.re - t.im * u.im;
        }
        s
    }

    /// Values on all points of `spec`, rows along y.
    fn grid_values(&self, spec: &GridSpec) -> Vec<f64> {
        let n = spec.resolution;
        let xs: Vec<f64> = (0..n).map(|i| spec.point(i, 0).x).collect();
        // cis(κ_x x_i), laid out per column for contiguous access
        let mut ux = vec![Complex64::ZERO; n * self.len()];
        for (i, &x) in xs.iter().enumerate() {
            for j in 0..self.len() {
                ux[i * self.len() + j] = Complex64::cis(self.kx[j] * x);
            }
        }
        let mut values = vec![0.0; n * n];
        values.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
            let y = spec.point(0, row).y;
            let t: Vec<Complex64> = (0..self.len()).map(|j| self.coef[j] * Complex64::cis(self.ky[j] * y)).collect();
            for (i, v) in out.iter_mut().enumerate() {
                let u = &ux[i * self.len()..(i + 1) * self.len()];
                let mut s = 0.0;
                for j in 0..t.len() {
                    s += t[j].re * u[j].re - t[j].im * u[j].im;
                }
                *v = s;
            }
        });
        values
    }
}

/// Propagating transverse modes of the corridor of width `a` at wavenumber
/// `k`: pairs `(q_n, p_n)` with `q_n = nπ/a < k` and `p_n = sqrt(k² − q_n²)`.
pub fn corridor_modes(width: f64, k: f64) -> Vec<(f64, f64)> {
    let mut modes = Vec::new();
    let mut n = 1;
    loop {
        let q = n as f64 * std::f64::consts::PI / width;
        if q >= k {
            return modes;
        }
        modes.push((q, (k * k - q * q).sqrt()));
        n += 1;
    }
}

/// Projection of `wave` onto the odd representation of `images`, as a
/// plane-wave list in user coordinates.
///
/// Wedge groups are finite and are summed element by element. For the
/// corridor, summing a plane wave over the full image lattice leaves only
/// wavevectors `(±p_n, ±q_n)`, so the adapted field is the Gaussian mode
/// superposition `Σ_n g_n sqrt(8/(a p_n)) sin(p_n x) sin(q_n (y + a/2))`,
/// whose covariance is the complete image sum. The standard normal weight
/// `g_n` is the amplitude of component `n` of the realization.
pub fn adapted_field(wave: &PlaneWaveSum, images: &ImageSet) -> Result<PlaneWaveField> {
    match images.kind {
        ImageKind::Corridor { width, .. } => {
            let modes = corridor_modes(width, wave.k);
            if modes.len() > wave.components.len() {
                return Err(Error::InvalidArgument(format!(
                    "corridor supports {} modes at k = {}; realization has only {} components",
                    modes.len(),
                    wave.k,
                    wave.components.len()
                )));
            }
            let mut canon = PlaneWaveField::with_capacity(2 * modes.len());
            for (&(q, p), c) in modes.iter().zip(&wave.components) {
                // sin(px) sin(q(y + a/2)) = Re{½e^{-iqa/2}e^{i(px-qy)} - ½e^{iqa/2}e^{i(px+qy)}}
                let amp = 0.5 * c.amplitude * (8.0 / (width * p)).sqrt();
                let shift = Complex64::cis(0.5 * q * width);
                canon.push(Point::new(p, -q), amp * shift.conj());
                canon.push(Point::new(p, q), -amp * shift);
            }
            Ok(canon.compose(&images.frame))
        }
        ImageKind::Wedge { .. } => {
            let free = PlaneWaveField::from_wave(wave);
            let mut f = PlaneWaveField::with_capacity(images.len() * free.len());
            for a in &images.elements {
                let part = free.compose(a);
                let w = images.normalization * a.character();
                for j in 0..part.len() {
                    f.push(Point::new(part.kx[j], part.ky[j]), part.coef[j] * w);
                }
            }
            Ok(f)
        }
    }
}

/// `normalization · Σ_A parity(A) ψ(A p)`, see [`adapted_field`].
pub fn evaluate_adapted(wave: &PlaneWaveSum, images: &ImageSet, p: Point) -> Result<f64> {
    images.require_inside(p)?;
    Ok(adapted_field(wave, images)?.value(p))
}

/// Square sampling lattice: `origin` is the lower-left corner and the
/// spacing is `side / (resolution - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub side: f64,
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(origin: Point, side: f64, resolution: usize) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid side must be > 0, got {side}")));
        }
        if resolution < 2 {
            return Err(Error::InvalidArgument("grid resolution must be >= 2".into()));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidArgument("grid origin must be finite".into()));
        }
        Ok(Self { origin, side, resolution })
    }

    pub fn centered(center: Point, side: f64, resolution: usize) -> Result<Self> {
        Self::new(center - Point::new(0.5 * side, 0.5 * side), side, resolution)
    }

    pub fn spacing(&self) -> f64 {
        self.side / (self.resolution - 1) as f64
    }

    /// Point in column `i` (x) and row `j` (y).
    pub fn point(&self, i: usize, j: usize) -> Point {
        let h = self.spacing();
        Point::new(self.origin.x + i as f64 * h, self.origin.y + j as f64 * h)
    }

    pub fn center(&self) -> Point {
        self.origin + Point::new(0.5 * self.side, 0.5 * self.side)
    }
}

/// Field samples on a [`GridSpec`], row-major with rows along y.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub k: f64,
    pub seed: u64,
    pub index: u64,
}

impl FieldGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.resolution + i]
    }

    pub fn to_csv(&self) -> String {
        let mut h = Header::new();
        h.set("kind", "field")
            .set("origin", format_point(self.spec.origin))
            .set("side", self.spec.side)
            .set("resolution", self.spec.resolution)
            .set("k", self.k)
            .set("seed", self.seed)
            .set("index", self.index);
        format_table(&h, self.spec.resolution, &self.values)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (h, rows) = parse_table(text)?;
        let spec = GridSpec::new(h.parse_point("origin")?, h.parse_f64("side")?, h.parse_usize("resolution")?)?;
        let values: Vec<f64> = rows.concat();
        if values.len() != spec.resolution * spec.resolution {
            return Err(Error::Parse("field grid has the wrong number of values".into()));
        }
        Ok(Self { spec, values, k: h.parse_f64("k")?, seed: h.parse_u64("seed")?, index: h.parse_u64("index").unwrap_or(0) })
    }
}

/// Adapted field on a grid. Cells outside the domain hold 0, the value of
/// the Dirichlet field continued by zero.
pub fn sample_grid(wave: &PlaneWaveSum, images: &ImageSet, spec: GridSpec) -> Result<FieldGrid> {
    let field = adapted_field(wave, images)?;
    let n = spec.resolution;
    let mut values = field.grid_values(&spec);
    for j in 0..n {
        for i in 0..n {
            if !images.contains(spec.point(i, j)) {
                values[j * n + i] = 0.0;
            }
        }
    }
    Ok(FieldGrid { spec, values, k: wave.k, seed: wave.seed, index: wave.index })
}

/// Reproducible ensemble description: member `i` is `sample_wave(k, m, seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveEnsemble {
    pub k: f64,
    pub waves_per_member: usize,
    pub size: usize,
    pub seed: u64,
}

impl WaveEnsemble {
    pub fn new(k: f64, waves_per_member: usize, size: usize, seed: u64) -> Result<Self> {
        check_k(k)?;
        if waves_per_member == 0 || size == 0 {
            return Err(Error::InvalidArgument("ensemble needs at least one member and one wave".into()));
        }
        Ok(Self { k, waves_per_member, size, seed })
    }

    pub fn member(&self, i: usize) -> PlaneWaveSum {
        sample_wave(self.k, self.waves_per_member, self.seed, i as u64).expect("validated ensemble")
    }

    pub fn header(&self) -> Header {
        let mut h = Header::new();
        h.set("kind", "randwave_ensemble")
            .set("k", self.k)
            .set("waves_per_member", self.waves_per_member)
            .set("size", self.size)
            .set("seed", self.seed)
            .set("rng", "chacha20 stream=member word=64*component");
        h
    }

    pub fn from_header(h: &Header) -> Result<Self> {
        Self::new(h.parse_f64("k")?, h.parse_usize("waves_per_member")?, h.parse_usize("size")?, h.parse_u64("seed")?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::{corridor_images, wedge_group};
    use std::f64::consts::PI;

    fn single(theta: f64, amplitude: f64, phase: f64) -> PlaneWaveSum {
        PlaneWaveSum { k: 1.0, components: vec![WaveComponent { theta, amplitude, phase }], seed: 0, index: 0 }
    }

    #[test]
    fn single_component_values() {
        let w = single(0.0, 1.0, 0.0);
        assert!((evaluate_free(&w, Point::default()) - 2f64.sqrt()).abs() < 1e-15);
        assert!((evaluate_free(&w, Point::new(PI, 0.0)) + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn determinism_and_member_independence() {
        let a = sample_free_wave(50.0, 32, 9).unwrap();
        assert_eq!(a, sample_free_wave(50.0, 32, 9).unwrap());
        assert_ne!(a, sample_free_wave(50.0, 32, 10).unwrap());
        // component j does not depend on how many components follow it
        let b = sample_free_wave(50.0, 8, 9).unwrap();
        assert_eq!(&a.components[..8], &b.components[..]);
        assert_ne!(sample_wave(50.0, 8, 9, 1).unwrap().components, b.components);
        assert!(sample_free_wave(0.0, 4, 1).is_err());
        assert!(sample_free_wave(1.0, 0, 1).is_err());
    }

    #[test]
    fn plane_wave_field_matches_direct_sum() {
        let w = sample_free_wave(30.0, 40, 3).unwrap();
        let f = PlaneWaveField::from_wave(&w);
        let g = Isometry::reflection(0.4).compose(&Isometry::translation(Point::new(0.3, -1.2)));
        let fg = f.compose(&g);
        for p in [Point::new(0.1, 0.2), Point::new(-2.0, 0.7)] {
            assert!((f.value(p) - evaluate_free(&w, p)).abs() < 1e-12);
            assert!((fg.value(p) - evaluate_free(&w, g.apply(p))).abs() < 1e-12);
        }
    }

    #[test]
    fn half_plane_single_wave_is_sine_in_y() {
        let w = single(PI / 2.0, 1.0, 0.0);
        let g = wedge_group(1).unwrap();
        for y in [0.0, 0.3, 1.1, 2.0] {
            // cos(y) is even in y, so its odd part vanishes
            let v = evaluate_adapted(&w, &g, Point::new(0.7, y)).unwrap();
            assert!(v.abs() < 1e-15);
        }
        let w = single(PI / 2.0, 1.0, -PI / 2.0);
        for y in [0.0, 0.3, 1.1] {
            let v = evaluate_adapted(&w, &g, Point::new(0.7, y)).unwrap();
            assert!((v - 2.0 * y.sin()).abs() < 1e-14, "{v}");
        }
        assert!(evaluate_adapted(&w, &g, Point::new(0.0, -0.1)).is_err());
    }

    #[test]
    fn corridor_field_is_the_mode_sum() {
        let w = sample_free_wave(40.0, 16, 5).unwrap();
        let frame = Isometry::translation(Point::new(0.0, -0.3));
        let set = corridor_images(0.6, Point::new(0.3, 0.0), 1.0).unwrap().in_frame(frame);
        let field = adapted_field(&w, &set).unwrap();
        let modes = corridor_modes(0.6, 40.0);
        assert_eq!(modes.len(), 7);
        for p in [Point::new(0.2, 0.0255), Point::new(0.9, 0.41), Point::new(0.0, 0.3), Point::new(0.4, 0.6)] {
            let direct: f64 = modes
                .iter()
                .zip(&w.components)
                .map(|(&(q, pn), c)| c.amplitude * (8.0 / (0.6 * pn)).sqrt() * (pn * p.x).sin() * (q * p.y).sin())
                .sum();
            assert!((field.value(p) - direct).abs() < 1e-12, "{} {}", field.value(p), direct);
        }
        assert!(adapted_field(&sample_free_wave(40.0, 6, 5).unwrap(), &set).is_err());
    }

    #[test]
    fn grid_matches_pointwise_and_zero_outside() {
        let w = sample_free_wave(60.0, 24, 1).unwrap();
        let g = wedge_group(3).unwrap();
        let spec = GridSpec::centered(Point::new(0.3, 0.05), 0.2, 9).unwrap();
        let grid = sample_grid(&w, &g, spec).unwrap();
        for j in 0..9 {
            for i in 0..9 {
                let p = spec.point(i, j);
                match evaluate_adapted(&w, &g, p) {
                    Ok(v) => assert_eq!(v.to_bits(), grid.get(i, j).to_bits()),
                    Err(_) => assert_eq!(grid.get(i, j), 0.0),
                }
            }
        }
        let back = FieldGrid::from_csv(&grid.to_csv()).unwrap();
        assert_eq!(back, grid);
    }
}

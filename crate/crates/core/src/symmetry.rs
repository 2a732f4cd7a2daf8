//! Plane isometries carrying a character sign, the dihedral wedge groups and
//! the signed image lattice of the semi-infinite corridor.
//!
//! Canonical frames:
//! - wedge(n): apex at the origin, edges along φ = 0 and φ = π/n;
//! - corridor(a): `{x >= 0, |y| <= a/2}`, back wall on the y-axis.
//!
//! Geometries given in other coordinates are handled with
//! [`ImageSet::in_frame`], which conjugates every element by the frame map.

use std::f64::consts::PI;

use crate::{Error, Point, Result};

/// Relative tolerance for domain membership tests.
const DOMAIN_TOL: f64 = 1e-12;

/// A plane isometry `p -> linear * p + shift` with its character sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    /// Row-major 2x2 orthogonal matrix.
    pub linear: [[f64; 2]; 2],
    pub shift: Point,
    /// +1 for rotations and translations, -1 for reflections.
    pub parity: i8,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        linear: [[1.0, 0.0], [0.0, 1.0]],
        shift: Point::new(0.0, 0.0),
        parity: 1,
    };

    /// Rotation about the origin by `angle` (radians, counterclockwise).
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Isometry { linear: [[c, -s], [s, c]], shift: Point::default(), parity: 1 }
    }

    /// Reflection across the line through the origin at polar angle `phi`.
    pub fn reflection(phi: f64) -> Self {
        let (s, c) = (2.0 * phi).sin_cos();
        Isometry { linear: [[c, s], [s, -c]], shift: Point::default(), parity: -1 }
    }

    pub fn translation(shift: Point) -> Self {
        Isometry { shift, ..Isometry::IDENTITY }
    }

    pub fn apply(&self, p: Point) -> Point {
        let l = &self.linear;
        Point::new(
            l[0][0] * p.x + l[0][1] * p.y + self.shift.x,
            l[1][0] * p.x + l[1][1] * p.y + self.shift.y,
        )
    }

    /// Applies only the linear part (for directions and displacements).
    pub fn apply_linear(&self, v: Point) -> Point {
        let l = &self.linear;
        Point::new(l[0][0] * v.x + l[0][1] * v.y, l[1][0] * v.x + l[1][1] * v.y)
    }

    /// Applies the transpose of the linear part.
    pub fn apply_linear_transpose(&self, v: Point) -> Point {
        let l = &self.linear;
        Point::new(l[0][0] * v.x + l[1][0] * v.y, l[0][1] * v.x + l[1][1] * v.y)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let a = &self.linear;
        let b = &other.linear;
        let mut linear = [[0.0; 2]; 2];
        for (i, row) in linear.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Isometry {
            linear,
            shift: self.apply(other.shift),
            parity: self.parity * other.parity,
        }
    }

    pub fn inverse(&self) -> Isometry {
        let l = &self.linear;
        let linear = [[l[0][0], l[1][0]], [l[0][1], l[1][1]]];
        let inv = Isometry { linear, shift: Point::default(), parity: self.parity };
        Isometry { shift: -inv.apply_linear(self.shift), ..inv }
    }

    pub fn det(&self) -> f64 {
        let l = &self.linear;
        l[0][0] * l[1][1] - l[0][1] * l[1][0]
    }

    pub fn character(&self) -> f64 {
        f64::from(self.parity)
    }

    /// Componentwise closeness of linear parts and shifts, plus equal parity.
    pub fn approx_eq(&self, other: &Isometry, tol: f64) -> bool {
        self.parity == other.parity
            && (0..2).all(|i| (0..2).all(|j| (self.linear[i][j] - other.linear[i][j]).abs() <= tol))
            && (self.shift - other.shift).norm() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImageKind {
    /// Dihedral group of order 2n for the wedge of opening angle π/n.
    /// `n = 1` is the half plane `y >= 0`.
    Wedge { n: u32 },
    /// Images of one probe point within `cutoff` of it.
    Corridor { width: f64, cutoff: f64 },
}

/// A finite signed list of isometries and the projection normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub elements: Vec<Isometry>,
    pub kind: ImageKind,
    pub normalization: f64,
    /// Map from user coordinates into the canonical frame of `kind`.
    pub frame: Isometry,
}

/// The 2n rotations and reflections fixing the apex of the wedge
/// `0 <= φ <= π/n`: identity, reflections across φ = mπ/n, then rotations by
/// 2πm/n.
pub fn wedge_group(n: u32) -> Result<ImageSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("wedge order n must be >= 1".into()));
    }
    let nf = f64::from(n);
    let mut elements = Vec::with_capacity(2 * n as usize);
    elements.push(Isometry::IDENTITY);
    for m in 0..n {
        elements.push(Isometry::reflection(f64::from(m) * PI / nf));
    }
    for m in 1..n {
        elements.push(Isometry::rotation(2.0 * PI * f64::from(m) / nf));
    }
    Ok(ImageSet {
        elements,
        kind: ImageKind::Wedge { n },
        normalization: 1.0 / (2.0 * nf).sqrt(),
        frame: Isometry::IDENTITY,
    })
}

/// Translation-family element `(x, y) -> (σx, y + 2ma)`, parity σ.
pub fn corridor_translation(width: f64, sigma: i8, m: i64) -> Isometry {
    let s = f64::from(sigma);
    Isometry {
        linear: [[s, 0.0], [0.0, 1.0]],
        shift: Point::new(0.0, 2.0 * m as f64 * width),
        parity: sigma,
    }
}

/// Mirror-family element `(x, y) -> (σx, (2m+1)a - y)`, parity -σ.
pub fn corridor_mirror(width: f64, sigma: i8, m: i64) -> Isometry {
    let s = f64::from(sigma);
    Isometry {
        linear: [[s, 0.0], [0.0, -1.0]],
        shift: Point::new(0.0, (2 * m + 1) as f64 * width),
        parity: -sigma,
    }
}

fn check_width(width: f64) -> Result<()> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidArgument(format!("corridor width must be > 0, got {width}")));
    }
    Ok(())
}

/// All corridor images of `probe` (canonical frame) that lie within `cutoff`
/// of it, sorted by that distance. The identity is always first.
pub fn corridor_images(width: f64, probe: Point, cutoff: f64) -> Result<ImageSet> {
    check_width(width)?;
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::InvalidArgument(format!("cutoff must be > 0, got {cutoff}")));
    }
    if !probe.is_finite() {
        return Err(Error::InvalidArgument("probe must be finite".into()));
    }
    let m_bound = ((cutoff + probe.y.abs() + width) / (2.0 * width)).ceil() as i64 + 1;
    let mut found: Vec<(f64, usize, Isometry)> = Vec::new();
    let mut order = 0usize;
    for m in -m_bound..=m_bound {
        for sigma in [1i8, -1] {
            for iso in [corridor_translation(width, sigma, m), corridor_mirror(width, sigma, m)] {
                let d = iso.apply(probe).dist(probe);
                let is_identity = iso.approx_eq(&Isometry::IDENTITY, 0.0);
                if d <= cutoff || is_identity {
                    // identity sorts ahead of any zero-distance wall mirror
                    let key = if is_identity { -1.0 } else { d };
                    found.push((key, order, iso));
                }
                order += 1;
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let elements: Vec<Isometry> = found.into_iter().map(|(_, _, iso)| iso).collect();
    let normalization = 1.0 / (elements.len() as f64).sqrt();
    Ok(ImageSet {
        elements,
        kind: ImageKind::Corridor { width, cutoff },
        normalization,
        frame: Isometry::IDENTITY,
    })
}

impl ImageSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Re-expresses the set in user coordinates, where `frame` maps user
    /// coordinates into the canonical frame. Elements become
    /// `frame⁻¹ ∘ A ∘ frame`.
    pub fn in_frame(&self, frame: Isometry) -> ImageSet {
        let inv = frame.inverse();
        let elements = self.elements.iter().map(|a| inv.compose(&a.compose(&frame))).collect();
        ImageSet {
            elements,
            kind: self.kind,
            normalization: self.normalization,
            frame: frame.compose(&self.frame),
        }
    }

    /// Whether `p` (user coordinates) lies in the closed physical domain.
    pub fn contains(&self, p: Point) -> bool {
        let q = self.frame.apply(p);
        let scale = 1.0 + q.norm();
        let tol = DOMAIN_TOL * scale;
        match self.kind {
            ImageKind::Wedge { n } => {
                if n == 1 {
                    return q.y >= -tol;
                }
                let edge = Point::from_polar(1.0, PI / f64::from(n));
                q.y >= -tol && q.cross(edge) >= -tol
            }
            ImageKind::Corridor { width, .. } => {
                q.x >= -tol && q.y.abs() <= 0.5 * width + tol
            }
        }
    }

    /// Distance from `p` (user coordinates) to the nearest wall of the
    /// physical domain; meaningful for points inside it.
    pub fn wall_distance(&self, p: Point) -> f64 {
        let q = self.frame.apply(p);
        match self.kind {
            ImageKind::Wedge { n } => {
                let d0 = q.y.max(0.0);
                if n == 1 {
                    return d0;
                }
                let edge = Point::from_polar(1.0, PI / f64::from(n));
                let d1 = if q.dot(edge) >= 0.0 { q.cross(edge) } else { q.norm() };
                let d0 = if q.x >= 0.0 { d0 } else { q.norm() };
                d0.min(d1)
            }
            ImageKind::Corridor { width, .. } => {
                let dy = 0.5 * width - q.y.abs();
                if q.y.abs() <= 0.5 * width {
                    q.x.min(dy)
                } else {
                    0.0
                }
            }
        }
    }

    /// Errors unless `p` is inside the physical domain.
    pub fn require_inside(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::Domain(format!("point ({}, {}) lies outside the domain", p.x, p.y)))
        }
    }
}

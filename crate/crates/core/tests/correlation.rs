mod common;

use std::f64::consts::PI;

use chaoswave::correlation::{
    angular_average, default_corridor_cutoff, ensemble_correlation_prefix, error_metric, theory_correlation,
    theory_value, CorrelationGrid, GridKind,
};
use chaoswave::randwave::WaveEnsemble;
use chaoswave::symmetry::{corridor_images, wedge_group, ImageSet, Isometry};
use chaoswave::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: f64 = 200.0;

fn cone_group() -> ImageSet {
    wedge_group(3).unwrap().in_frame(Isometry::rotation(PI / 6.0))
}

fn corridor(cutoff: f64) -> ImageSet {
    corridor_images(0.6, Point::new(0.3, 0.0), cutoff)
        .unwrap()
        .in_frame(Isometry::translation(Point::new(0.0, -0.3)))
}

fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[test]
fn correlation_is_symmetric_in_its_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sets = [wedge_group(1).unwrap(), wedge_group(2).unwrap(), cone_group(), corridor(20.0)];
    for images in &sets {
        let mut checked = 0;
        while checked < 50 {
            let x = Point::new(rng.random_range(0.0..1.0), rng.random_range(-0.5..0.6));
            let y = x + Point::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
            if !(images.contains(x) && images.contains(y)) {
                continue;
            }
            let a = theory_value(images, K, x, y).unwrap();
            let b = theory_value(images, K, y, x).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} {b}");
            checked += 1;
        }
    }
}

#[test]
fn wall_probes_give_identically_zero_grids() {
    let cone = cone_group();
    let lambda = 2.0 * PI / K;
    for probe in [Point::from_polar(0.3, PI / 6.0), Point::from_polar(0.5, -PI / 6.0)] {
        let g = theory_correlation(&cone, K, probe, 4.0 * lambda, 33).unwrap();
        assert!(sup_abs(&g.values) <= 1e-12);
    }
    let c = corridor(default_corridor_cutoff(K));
    for probe in [Point::new(0.0, 0.2), Point::new(0.2, 0.0), Point::new(0.35, 0.6)] {
        let g = theory_correlation(&c, K, probe, 2.0 * lambda, 9).unwrap();
        assert!(sup_abs(&g.values) <= 1e-12, "{probe:?}: {}", sup_abs(&g.values));
    }
}

#[test]
fn correlation_vanishes_when_second_point_is_on_a_wall() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cone = cone_group();
    let c = corridor(40.0);
    for _ in 0..30 {
        let x = Point::from_polar(rng.random_range(0.1..0.6), rng.random_range(-0.5..0.5));
        let wall = Point::from_polar(rng.random_range(0.0..0.8), if rng.random::<bool>() { PI / 6.0 } else { -PI / 6.0 });
        assert!(theory_value(&cone, K, x, wall).unwrap().abs() <= 1e-12);
        let x = Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..0.6));
        let t = rng.random_range(0.0..1.0);
        for wall in [Point::new(0.0, 0.6 * t), Point::new(t, 0.0), Point::new(t, 0.6)] {
            assert!(theory_value(&c, K, x, wall).unwrap().abs() <= 1e-12);
        }
    }
}

/// Largest deviation from J₀(kr) against five times the envelope of the
/// nearest image seen from any grid cell.
fn far_field_check(images: &ImageSet, probe: Point, side: f64) {
    let g = theory_correlation(images, K, probe, side, 33).unwrap();
    let reach = side * std::f64::consts::FRAC_1_SQRT_2;
    let nearest = match images.kind {
        chaoswave::symmetry::ImageKind::Wedge { .. } => images
            .elements
            .iter()
            .skip(1)
            .map(|e| e.apply(probe).dist(probe))
            .fold(f64::INFINITY, f64::min),
        _ => 2.0 * images.wall_distance(probe),
    };
    let d = nearest - reach;
    let bound = 5.0 * (2.0 / (PI * K * d)).sqrt();
    let mut worst = 0.0f64;
    for j in 0..33 {
        for i in 0..33 {
            let r = g.displacement(i, j).norm();
            worst = worst.max((g.get(i, j) - common::series_jn(0, K * r)).abs());
        }
    }
    assert!(worst <= bound, "deviation {worst} > bound {bound}");
}

#[test]
fn far_from_walls_the_correlation_reduces_to_j0() {
    let lambda = 2.0 * PI / K;
    let side = 2.0 * lambda;
    far_field_check(&wedge_group(1).unwrap(), Point::new(0.0, 12.0 * lambda), side);
    far_field_check(&wedge_group(2).unwrap(), Point::new(12.0 * lambda, 12.0 * lambda), side);
    // cone bisector far from both edges
    far_field_check(&cone_group(), Point::new(30.0 * lambda, 0.0), side);
    let n4 = wedge_group(4).unwrap();
    far_field_check(&n4, Point::from_polar(40.0 * lambda, PI / 8.0), side);
    // corridor wide enough for a probe 10 wavelengths from every wall
    let wide = corridor_images(1.0, Point::new(0.5, 0.0), 40.0).unwrap();
    far_field_check(&wide, Point::new(0.5, 0.0), side);
}

#[test]
fn bisector_probe_gives_mirror_symmetric_map() {
    let cone = cone_group();
    let lambda = 2.0 * PI / K;
    let g = theory_correlation(&cone, K, Point::new(0.3, 0.0), 4.0 * lambda, 65).unwrap();
    for j in 0..65 {
        for i in 0..65 {
            assert!((g.get(i, j) - g.get(i, 64 - j)).abs() <= 1e-12);
        }
    }
}

#[test]
fn corridor_sum_matches_exact_mode_expansion() {
    // canonical corridor of width 0.6, probe (0.3, 0)
    let images = corridor_images(0.6, Point::new(0.3, 0.0), default_corridor_cutoff(K)).unwrap();
    let probe = Point::new(0.3, 0.0);
    let g = theory_correlation(&images, K, probe, 0.1, 5).unwrap();
    for j in 0..5 {
        for i in 0..5 {
            let q = probe + g.displacement(i, j);
            let exact = common::corridor_mode_sum(0.6, K, (probe.x, probe.y), (q.x, q.y));
            assert!((g.get(i, j) - exact).abs() < 1e-6, "{} {}", g.get(i, j), exact);
        }
    }
}

#[test]
fn exact_bessel_grid_has_bessel_profile() {
    let n = 129;
    let side = 8.0 * 2.0 * PI / K;
    let mut g = theory_correlation(&wedge_group(1).unwrap(), K, Point::new(0.0, 100.0), side, n).unwrap();
    for j in 0..n {
        for i in 0..n {
            g.values[j * n + i] = common::series_jn(0, K * g.displacement(i, j).norm());
        }
    }
    let bins = 32;
    let p = angular_average(&g, bins).unwrap();
    let dr = 0.5 * side / bins as f64;
    let tol = (K * dr).powi(2) / 8.0;
    // a shell average of J₀ over a bin of width Δr differs from J₀ at the
    // bin center by at most (kΔr)²/8 plus the first-order term from cells
    // sitting off-center inside the bin
    for (r, m) in p.radii.iter().zip(&p.means) {
        let offcenter = K * dr * 0.5 * common::series_jn(1, K * r).abs();
        assert!((m - common::series_jn(0, K * r)).abs() <= tol + offcenter, "r = {r}");
    }
}

#[test]
fn monte_carlo_sup_norm_error_scales_as_inverse_root_n() {
    let cone = cone_group();
    let probe = Point::new(0.3, 0.153);
    let k = 100.0;
    let lambda = 2.0 * PI / k;
    let ens = WaveEnsemble::new(k, 64, 4000, 17).unwrap();
    let th = theory_correlation(&cone, k, probe, 4.0 * lambda, 25).unwrap();
    let sizes = [250usize, 1000, 4000];
    let sups: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let emp = ensemble_correlation_prefix(&ens, &cone, probe, 4.0 * lambda, 25, n).unwrap();
            assert_eq!(emp.kind, GridKind::Empirical { sample_count: n });
            emp.values
                .iter()
                .zip(&th.values)
                .zip(&emp.inside)
                .filter(|(_, inside)| **inside)
                .map(|((a, b), _)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let slope = common::loglog_slope(&sizes.map(|n| n as f64), &sups);
    assert!((-0.6..=-0.4).contains(&slope), "sup-norm exponent {slope}, sups {sups:?}");
    let emp = ensemble_correlation_prefix(&ens, &cone, probe, 4.0 * lambda, 25, 4000).unwrap();
    assert!(error_metric(&emp, &th).unwrap() < 0.05);
}

#[test]
fn csv_round_trip_preserves_values() {
    // the window crosses the upper edge, so some cells are outside
    let g = theory_correlation(&cone_group(), K, Point::new(0.3, 0.15), 0.1, 9).unwrap();
    assert!(g.inside.iter().any(|&c| !c));
    let back = CorrelationGrid::from_csv(&g.to_csv()).unwrap();
    assert_eq!(back.values, g.values);
    assert_eq!(back.inside, g.inside);
    assert_eq!(error_metric(&back, &g).unwrap(), 0.0);
}

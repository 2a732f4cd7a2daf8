mod common;

use std::f64::consts::PI;
use std::time::Instant;

use chaoswave::correlation::{default_corridor_cutoff, theory_value};
use chaoswave::randwave::{
    adapted_field, evaluate_adapted, evaluate_free, gradient_free, sample_free_wave, sample_grid, sample_wave,
    GridSpec, DEFAULT_WAVES,
};
use chaoswave::symmetry::{corridor_images, wedge_group, ImageSet, Isometry};
use chaoswave::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: f64 = 200.0;

fn cone_group() -> ImageSet {
    wedge_group(3).unwrap().in_frame(Isometry::rotation(PI / 6.0))
}

fn stadium_corridor() -> ImageSet {
    corridor_images(0.6, Point::new(0.3, 0.0), default_corridor_cutoff(K))
        .unwrap()
        .in_frame(Isometry::translation(Point::new(0.0, -0.3)))
}

fn values_at(images: &ImageSet, p: Point, count: u64, seed: u64) -> Vec<f64> {
    (0..count)
        .map(|w| {
            let wave = sample_wave(K, DEFAULT_WAVES, seed, w).unwrap();
            adapted_field(&wave, images).unwrap().value(p)
        })
        .collect()
}

#[test]
fn free_field_has_zero_mean_and_unit_variance() {
    let p = Point::new(0.17, -0.4);
    let xs: Vec<f64> = (0..10_000).map(|w| evaluate_free(&sample_wave(K, DEFAULT_WAVES, 11, w).unwrap(), p)).collect();
    let (mean, var, _, _) = common::moments(&xs);
    assert!((var - 1.0).abs() < 0.03, "variance {var}");
    assert!(mean.abs() < 3.0 * (var / xs.len() as f64).sqrt(), "mean {mean}");
}

#[test]
fn adapted_fields_have_unit_far_field_variance_and_gaussian_statistics() {
    // points at least 5 wavelengths from the walls
    let lambda = 2.0 * PI / K;
    for images in [cone_group(), stadium_corridor()] {
        // first candidate whose predicted one-point variance is close to 1
        let p = (0..200)
            .map(|i| Point::new(0.4 + 0.003 * i as f64, if images.len() == 6 { 0.0 } else { 0.3 }))
            .find(|&p| (theory_value(&images, K, p, p).unwrap() - 1.0).abs() < 0.02)
            .unwrap();
        assert!(images.wall_distance(p) >= 5.0 * lambda);
        let xs = values_at(&images, p, 10_000, 5);
        let (mean, var, skew, kurt) = common::moments(&xs);
        assert!((var - 1.0).abs() < 0.05, "variance {var} at {p:?}");
        assert!(mean.abs() < 0.05);
        assert!(skew.abs() < 0.1, "skew {skew}");
        assert!(kurt.abs() < 0.2, "kurtosis {kurt}");
    }
}

#[test]
fn dirichlet_condition_on_every_wall() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cone = cone_group();
    let corridor = stadium_corridor();
    for w in 0..100 {
        let wave = sample_wave(K, 64, 21, w).unwrap();
        for (images, walls) in [(&cone, 0), (&corridor, 1)] {
            let field = adapted_field(&wave, images).unwrap();
            let mut sup = 0.0f64;
            for _ in 0..50 {
                let p = if walls == 0 {
                    Point::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI / 6.0..PI / 6.0))
                } else {
                    Point::new(rng.random_range(0.0..1.2), rng.random_range(0.0..0.6))
                };
                sup = sup.max(field.value(p).abs());
            }
            for _ in 0..100 {
                let t = rng.random_range(0.0..1.0);
                let p = if walls == 0 {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    Point::from_polar(t, sign * PI / 6.0)
                } else {
                    match rng.random_range(0..3) {
                        0 => Point::new(0.0, 0.6 * t),
                        1 => Point::new(2.0 * t, 0.0),
                        _ => Point::new(2.0 * t, 0.6),
                    }
                };
                let v = evaluate_adapted(&wave, images, p).unwrap();
                assert!(v.abs() <= 1e-10 * sup, "wave {w}: {v} at {p:?}");
            }
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let wave = sample_free_wave(K, DEFAULT_WAVES, 8).unwrap();
    let h = 1e-6;
    for _ in 0..10 {
        let p = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let g = gradient_free(&wave, p);
        let fx = (evaluate_free(&wave, p + Point::new(h, 0.0)) - evaluate_free(&wave, p - Point::new(h, 0.0))) / (2.0 * h);
        let fy = (evaluate_free(&wave, p + Point::new(0.0, h)) - evaluate_free(&wave, p - Point::new(0.0, h))) / (2.0 * h);
        let scale = g.norm().max(K);
        assert!((fx - g.x).abs() < 1e-6 * scale && (fy - g.y).abs() < 1e-6 * scale);
    }
}

#[test]
fn grid_straddling_an_edge_has_a_zero_row() {
    // canonical wedge frame: the edge is the x axis
    let g = wedge_group(3).unwrap();
    let wave = sample_free_wave(K, DEFAULT_WAVES, 2).unwrap();
    let spec = GridSpec::new(Point::new(0.3, -0.05), 0.1, 11).unwrap();
    let grid = sample_grid(&wave, &g, spec).unwrap();
    let sup = grid.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(sup > 0.1);
    for i in 0..11 {
        assert!(grid.get(i, 5).abs() <= 1e-12 * sup);
        assert_eq!(grid.get(i, 0), 0.0);
    }
}

#[test]
fn grids_are_byte_identical_for_equal_seeds() {
    let g = cone_group();
    let spec = GridSpec::centered(Point::new(0.3, 0.0), 0.1, 33).unwrap();
    let a = sample_grid(&sample_free_wave(K, 64, 99).unwrap(), &g, spec).unwrap().to_csv();
    let b = sample_grid(&sample_free_wave(K, 64, 99).unwrap(), &g, spec).unwrap().to_csv();
    assert_eq!(a.as_bytes(), b.as_bytes());
}

#[test]
fn large_grid_within_time_budget() {
    let g = cone_group();
    let wave = sample_free_wave(K, DEFAULT_WAVES, 1).unwrap();
    let spec = GridSpec::centered(Point::new(0.3, 0.0), 0.2, 128).unwrap();
    let start = Instant::now();
    let grid = sample_grid(&wave, &g, spec).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(grid.values.len(), 128 * 128);
    assert!(elapsed < 1.0, "took {elapsed:.2}s");
}

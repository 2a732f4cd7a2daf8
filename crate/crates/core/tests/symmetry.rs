mod common;

use std::f64::consts::PI;

use chaoswave::symmetry::{corridor_images, wedge_group, ImageSet, Isometry};
use chaoswave::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn find(set: &ImageSet, e: &Isometry) -> Option<usize> {
    set.elements.iter().position(|a| a.approx_eq(e, 1e-12))
}

#[test]
fn wedge_groups_satisfy_group_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=8u32 {
        let g = wedge_group(n).unwrap();
        let order = g.len();
        assert_eq!(order, 2 * n as usize);
        assert_eq!(g.elements.iter().filter(|e| e.parity == -1).count(), n as usize);
        let ids: Vec<_> = g.elements.iter().filter(|e| e.approx_eq(&Isometry::IDENTITY, 1e-12)).collect();
        assert_eq!(ids.len(), 1);
        assert_eq!(ids[0].parity, 1);
        // full composition table; every product is an element carrying the
        // product character
        let mut table = vec![vec![0usize; order]; order];
        for (i, a) in g.elements.iter().enumerate() {
            for (j, b) in g.elements.iter().enumerate() {
                let ab = a.compose(b);
                let idx = find(&g, &ab).unwrap_or_else(|| panic!("n={n}: product not closed"));
                assert_eq!(g.elements[idx].parity, a.parity * b.parity);
                table[i][j] = idx;
            }
            assert!(find(&g, &a.inverse()).is_some());
        }
        // Latin square: each row is a permutation
        for row in &table {
            let mut r = row.clone();
            r.sort();
            assert_eq!(r, (0..order).collect::<Vec<_>>());
        }
        for _ in 0..20 {
            let (i, j, l) = (rng.random_range(0..order), rng.random_range(0..order), rng.random_range(0..order));
            assert_eq!(table[table[i][j]][l], table[i][table[j][l]]);
        }
        for e in &g.elements {
            let l = e.linear;
            for r in 0..2 {
                for c in 0..2 {
                    let dot = l[r][0] * l[c][0] + l[r][1] * l[c][1];
                    assert!((dot - if r == c { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
            assert!((e.det() - e.character()).abs() < 1e-14);
        }
    }
}

#[test]
fn c3_characters_multiply_over_all_pairs() {
    let g = wedge_group(3).unwrap();
    let mut pairs = 0;
    for a in &g.elements {
        for b in &g.elements {
            let idx = find(&g, &a.compose(b)).unwrap();
            assert_eq!(g.elements[idx].character(), a.character() * b.character());
            pairs += 1;
        }
    }
    assert_eq!(pairs, 36);
    // as a set: 1, R1, R2, R3, R1R2, R2R1
    let r: Vec<_> = g.elements.iter().filter(|e| e.parity == -1).collect();
    assert_eq!(r.len(), 3);
    let r1r2 = r[0].compose(r[1]);
    let r2r1 = r[1].compose(r[0]);
    assert!(find(&g, &r1r2).is_some() && find(&g, &r2r1).is_some());
    assert!(!r1r2.approx_eq(&r2r1, 1e-12));
    let third = Isometry::rotation(2.0 * PI / 3.0);
    assert!(r1r2.approx_eq(&third, 1e-14) || r2r1.approx_eq(&third, 1e-14));
}

#[test]
fn reflections_fix_their_mirror_lines() {
    for n in 1..=8u32 {
        let g = wedge_group(n).unwrap();
        for e in g.elements.iter().filter(|e| e.parity == -1) {
            // the fixed line of a reflection with matrix [[c, s], [s, -c]] is
            // at half the angle of (c, s)
            let phi = 0.5 * e.linear[1][0].atan2(e.linear[0][0]);
            for t in [0.0, 0.37, 1.0, 5.5] {
                let p = Point::from_polar(t, phi);
                assert!(e.apply(p).dist(p) <= 1e-14 * (1.0 + t));
            }
        }
    }
}

#[test]
fn corridor_images_match_recursive_reflection_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = 1.0;
    for trial in 0..100 {
        let probe = Point::new(rng.random_range(0.01..3.0), rng.random_range(-0.49..0.49));
        let cutoff = rng.random_range(0.3..4.0);
        let set = corridor_images(a, probe, cutoff).unwrap();
        let depth = (cutoff / a).ceil() as usize + 2;
        let mut oracle: Vec<(f64, f64, i8)> = common::reflection_orbit(a, probe.x, probe.y, 2 * depth + 2)
            .into_iter()
            .filter(|&(x, y, _)| Point::new(x, y).dist(probe) <= cutoff)
            .collect();
        let mut ours: Vec<(f64, f64, i8)> = set
            .elements
            .iter()
            .map(|e| {
                let q = e.apply(probe);
                (q.x, q.y, e.parity)
            })
            .collect();
        let key = |v: &(f64, f64, i8)| ((v.0 * 1e9).round() as i64, (v.1 * 1e9).round() as i64, v.2);
        oracle.sort_by_key(key);
        ours.sort_by_key(key);
        assert_eq!(ours.len(), oracle.len(), "trial {trial}");
        for (o, w) in oracle.iter().zip(&ours) {
            assert_eq!(key(o), key(w), "trial {trial}");
        }
        // sorted by image distance, identity first
        assert_eq!(set.elements[0], Isometry::IDENTITY);
        let d: Vec<f64> = set.elements.iter().map(|e| e.apply(probe).dist(probe)).collect();
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
        assert!(set.elements.iter().all(|e| (e.det() - e.character()).abs() < 1e-15));
    }
}

#[test]
fn corridor_example_listing() {
    // probe on the centerline: back-wall image at x = -0.3 and wall images at y = ±1, ±2
    let set = corridor_images(1.0, Point::new(0.3, 0.0), 2.5).unwrap();
    let pts: Vec<(Point, i8)> = set.elements.iter().map(|e| (e.apply(Point::new(0.3, 0.0)), e.parity)).collect();
    let has = |x: f64, y: f64, s: i8| pts.iter().any(|(p, q)| p.dist(Point::new(x, y)) < 1e-12 && *q == s);
    assert!(has(-0.3, 0.0, -1));
    assert!(has(0.3, 1.0, -1) && has(0.3, -1.0, -1));
    assert!(has(0.3, 2.0, 1) && has(0.3, -2.0, 1));
    assert!(has(-0.3, 1.0, 1) && has(-0.3, 2.0, -1));
    assert_eq!(set.len(), 10);
}

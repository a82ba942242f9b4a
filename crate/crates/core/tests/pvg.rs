mod common;

use common::*;
use gcr::features::{FeatureSet, RowMeta, Split};
use gcr::pvg::{margin_labels, mean_profile, pvg, ridge_profile, solve_camera, PvgConfig, PvgMethod};
use proptest::prelude::*;

/// One camera: `sizes[c]` unit rows for tracklet `c`, drawn around a
/// per-tracklet center.
fn camera(rng: &mut Draws, sizes: &[usize], d: usize) -> (Vec<f64>, Vec<usize>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, &s) in sizes.iter().enumerate() {
        let center: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        for _ in 0..s {
            let mut r: Vec<f64> = center.iter().map(|v| v + 0.3 * rng.normal()).collect();
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            r.iter_mut().for_each(|v| *v /= n);
            rows.extend(r);
            labels.push(c);
        }
    }
    (rows, labels)
}

fn dense(rows: &[f64], d: usize) -> Dense {
    rows.chunks(d).map(|r| r.to_vec()).collect()
}

#[test]
fn solutions_satisfy_the_normal_equations() {
    let mut rng = Draws::new(21);
    for _ in 0..10 {
        let d = rng.range(2, 40);
        let sizes: Vec<usize> = (0..rng.range(2, 6)).map(|_| rng.range(1, 9)).collect();
        let (rows, labels) = camera(&mut rng, &sizes, d);
        let x = dense(&rows, d);
        let n = x.len() as f64;
        let lambda = 0.5 + 10.0 * rng.uniform();
        let r = solve_camera(&rows, d, &labels, lambda).unwrap();
        for (v, m) in r.solutions.iter().zip(&r.targets) {
            let mut res = 0.0f64;
            for a in 0..d {
                let mut s = n * lambda * v[a];
                for row in &x {
                    s += row[a] * row.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
                }
                res += (s - m[a]).powi(2);
            }
            let mnorm = m.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(res.sqrt() <= 1e-8 * mnorm.max(1e-300), "{} vs {}", res.sqrt(), mnorm);
        }
    }
}

#[test]
fn targets_are_labels_times_rows() {
    let mut rng = Draws::new(3);
    let sizes = [3, 1, 4];
    let (rows, labels) = camera(&mut rng, &sizes, 5);
    let x = dense(&rows, 5);
    let r = solve_camera(&rows, 5, &labels, 10.0).unwrap();
    for c in 0..sizes.len() {
        let z = margin_labels(&sizes, c).unwrap();
        for a in 0..5 {
            let xtz: f64 = x.iter().zip(&z).map(|(row, zi)| row[a] * zi).sum();
            assert!((xtz - r.targets[c][a]).abs() < 1e-14);
        }
    }
}

#[test]
fn matches_gradient_descent_minimizer() {
    let mut rng = Draws::new(8);
    let sizes = [2, 5, 3];
    let (rows, labels) = camera(&mut rng, &sizes, 6);
    let x = dense(&rows, 6);
    let r = solve_camera(&rows, 6, &labels, 0.7).unwrap();
    for c in 0..sizes.len() {
        let z = margin_labels(&sizes, c).unwrap();
        let v = ridge_by_descent(&x, &z, 0.7, 1e-13);
        for (a, b) in v.iter().zip(&r.solutions[c]) {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }
}

#[test]
fn large_lambda_aligns_with_mean_difference() {
    let mut rng = Draws::new(1);
    let sizes = [3, 3, 2];
    let (rows, labels) = camera(&mut rng, &sizes, 4);
    let r = solve_camera(&rows, 4, &labels, 1e9).unwrap();
    let n = 8.0;
    for (v, m) in r.solutions.iter().zip(&r.targets) {
        // v -> m / (n lambda) as lambda grows
        for (a, b) in v.iter().zip(m) {
            assert!((a * n * 1e9 - b).abs() < 1e-8);
        }
    }
}

#[test]
fn two_tracklet_profiles_are_antisymmetric_for_equal_sizes() {
    // with equal sizes the label vectors are negatives of each other
    let mut rng = Draws::new(4);
    let (rows, labels) = camera(&mut rng, &[3, 3], 5);
    let r = solve_camera(&rows, 5, &labels, 2.0).unwrap();
    for (a, b) in r.solutions[0].iter().zip(&r.solutions[1]) {
        assert!((a + b).abs() < 1e-14);
    }
}

fn tracklet_set(rng: &mut Draws, cams: u32, tracklets: usize, d: usize) -> FeatureSet {
    let mut data = Vec::new();
    let mut meta = Vec::new();
    for c in 0..cams {
        for t in 0..tracklets {
            for _ in 0..rng.range(1, 4) {
                data.extend((0..d).map(|_| rng.normal()));
                meta.push(RowMeta {
                    person_id: t as i64,
                    camera_id: c,
                    tracklet_id: t as u32,
                    split: if c == 0 { Split::Query } else { Split::Gallery },
                });
            }
        }
    }
    FeatureSet::new(data, d, meta).unwrap()
}

#[test]
fn profiles_are_unit_and_provenance_partitions_rows() {
    let mut rng = Draws::new(12);
    let fs = tracklet_set(&mut rng, 3, 4, 6);
    let p = ridge_profile(&fs, &PvgConfig::default()).unwrap();
    assert_eq!(p.features.len(), 12);
    assert!(p.warnings.is_empty());
    for r in p.features.rows() {
        assert!((r.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let mut all: Vec<usize> = p.provenance.iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..fs.len()).collect::<Vec<_>>());
    for (q, members) in p.provenance.iter().enumerate() {
        let m = p.features.meta()[q];
        for &i in members {
            assert_eq!(fs.meta()[i].camera_id, m.camera_id);
            assert_eq!(fs.meta()[i].tracklet_id, m.tracklet_id);
        }
    }
}

#[test]
fn mean_method_averages_members() {
    let mut rng = Draws::new(13);
    let fs = tracklet_set(&mut rng, 2, 3, 4);
    let p = pvg(
        &fs,
        &PvgConfig {
            method: PvgMethod::Mean,
            ..PvgConfig::default()
        },
    )
    .unwrap();
    assert_eq!(p, mean_profile(&fs).unwrap());
    for (q, members) in p.provenance.iter().enumerate() {
        for a in 0..4 {
            let want = members.iter().map(|&i| fs.row(i)[a]).sum::<f64>() / members.len() as f64;
            assert!((p.features.row(q)[a] - want).abs() < 1e-15);
        }
    }
}

proptest! {
    #[test]
    fn margin_labels_balance(sizes in proptest::collection::vec(1usize..50, 2..9), pick in any::<proptest::sample::Index>()) {
        let target = pick.index(sizes.len());
        let z = margin_labels(&sizes, target).unwrap();
        prop_assert_eq!(z.len(), sizes.iter().sum::<usize>());
        prop_assert!(z.iter().sum::<f64>().abs() < 1e-12);
    }
}

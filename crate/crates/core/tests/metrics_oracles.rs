mod common;

use common::*;
use ordgate::image::LabelMap;
use ordgate::metrics::*;
use ordgate::ordinal::RankLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dice_and_hd95_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let h = rng.gen_range(1..=32);
        let w = rng.gen_range(1..=32);
        let a = random_mask(&mut rng, h, w);
        let b = random_mask(&mut rng, h, w);
        let spacing = [
            DYADIC_SPACINGS[rng.gen_range(0..4)],
            DYADIC_SPACINGS[rng.gen_range(0..4)],
        ];
        for label in 1..=3 {
            assert_eq!(dice(&a, &b, label).unwrap(), brute_dice(&a, &b, label));
            assert_eq!(hd95(&a, &b, label, spacing).unwrap(), brute_hd95(&a, &b, label, spacing));
            assert_eq!(
                pooled_surface_distances(&a, &b, label, spacing).unwrap(),
                brute_pooled(&a, &b, label, spacing)
            );
        }
    }
}

#[test]
fn symmetry_and_hausdorff_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let (h, w) = (rng.gen_range(2..=24), rng.gen_range(2..=24));
        let a = random_mask(&mut rng, h, w);
        let b = random_mask(&mut rng, h, w);
        for label in 1..=3 {
            assert_eq!(dice(&a, &b, label).unwrap(), dice(&b, &a, label).unwrap());
            let ab = hd95(&a, &b, label, [1.0, 1.0]).unwrap();
            assert_eq!(ab, hd95(&b, &a, label, [1.0, 1.0]).unwrap());
            let full = hausdorff(&a, &b, label, [1.0, 1.0]).unwrap();
            assert_eq!(ab.is_some(), full.is_some());
            if let (Some(p), Some(m)) = (ab, full) {
                assert!(p <= m);
            }
        }
    }
}

#[test]
fn hd95_scales_with_spacing() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let a = random_mask(&mut rng, 16, 16);
        let b = random_mask(&mut rng, 16, 16);
        if let Some(v) = hd95(&a, &b, 1, [1.0, 1.0]).unwrap() {
            assert_eq!(hd95(&a, &b, 1, [2.0, 2.0]).unwrap(), Some(2.0 * v));
        }
    }
}

#[test]
fn shifted_square() {
    let mut a = LabelMap::filled(10, 10, 0);
    let mut b = LabelMap::filled(10, 10, 0);
    for r in 3..6 {
        for c in 3..6 {
            a.set(r, c, 2);
            b.set(r, c + 1, 2);
        }
    }
    assert_eq!(hd95(&a, &b, 2, [1.0, 1.0]).unwrap(), Some(1.0));
    assert_eq!(hausdorff(&a, &b, 2, [1.0, 1.0]).unwrap(), Some(1.0));
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<RankLabel> {
    (0..n).map(|_| RankLabel::new(rng.gen_range(1..=k), k).unwrap()).collect()
}

#[test]
fn kappa_below_accuracy_unless_perfect() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..500 {
        let k = rng.gen_range(2..=5);
        let n = rng.gen_range(2..60);
        let truth = random_labels(&mut rng, n, k);
        let preds = random_labels(&mut rng, n, k);
        let cm = confusion(&preds, &truth, k).unwrap();
        let acc = accuracy(&preds, &truth).unwrap();
        assert_eq!(acc, cm.accuracy().unwrap());
        assert_eq!(cm.total() as usize, n);
        let kappa = cohens_kappa(&cm).unwrap();
        assert!(kappa <= 1.0);
        // kappa < p_o  <=>  p_e (p_o - 1) < 0
        let chance_overlap = cm.row_sums().iter().zip(cm.col_sums()).any(|(&r, c)| r > 0 && c > 0);
        if acc < 1.0 && chance_overlap {
            assert!(kappa < acc, "kappa {kappa} acc {acc}");
        }
    }
}

#[test]
fn kappa_hand_values() {
    // p_o = 3/5, p_e = (3*3 + 2*2) / 25 = 0.52
    let cm = ConfusionMatrix::from_counts(vec![vec![2, 1], vec![1, 1]]).unwrap();
    let want = (0.6 - 0.52) / (1.0 - 0.52);
    assert!((cohens_kappa(&cm).unwrap() - want).abs() < 1e-12);
    let cm = ConfusionMatrix::from_counts(vec![vec![0, 2], vec![2, 0]]).unwrap();
    assert!((cohens_kappa(&cm).unwrap() + 1.0).abs() < 1e-12);
}

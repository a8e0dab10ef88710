use std::collections::VecDeque;
use std::f64::consts::PI;

use ordgate::image::{Image, LabelMap};
use ordgate::metrics::{dice, mean_dice};
use ordgate::ordinal::RankLabel;
use ordgate::phantom::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

fn naive_dft2(img: &Image) -> Vec<Complex64> {
    let (h, w) = img.dims();
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for k in 0..h {
        for l in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..h {
                for n in 0..w {
                    let angle = -2.0 * PI * ((k * m) as f64 / h as f64 + (l * n) as f64 / w as f64);
                    acc += img.get(m, n) * Complex64::from_polar(1.0, angle);
                }
            }
            out[k * w + l] = acc;
        }
    }
    out
}

fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Image {
    Image::from_vec(h, w, (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn fft_matches_naive_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (h, w) in [(1, 1), (4, 6), (7, 5), (16, 16)] {
        let img = random_image(&mut rng, h, w);
        let fast = dft2(&img);
        for (a, b) in fast.as_slice().iter().zip(naive_dft2(&img)) {
            assert!((a - b).norm() < 1e-9, "{h}x{w}");
        }
    }
}

#[test]
fn round_trip_parseval_linearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let x = random_image(&mut rng, 64, 64);
        let y = random_image(&mut rng, 64, 64);
        let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let sx = dft2(&x);
        let back = idft2(&sx);
        let max_err = x.as_slice().iter().zip(back.as_slice()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(max_err <= 1e-9);
        let e_img: f64 = x.as_slice().iter().map(|v| v * v).sum();
        assert!((e_img - sx.energy() / 4096.0).abs() <= 1e-9 * e_img.max(1.0));
        let combo = Image::from_vec(
            64,
            64,
            x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| a * p + b * q).collect(),
        )
        .unwrap();
        let sc = dft2(&combo);
        let sy = dft2(&y);
        for i in 0..4096 {
            let want = a * sx.as_slice()[i] + b * sy.as_slice()[i];
            assert!((sc.as_slice()[i] - want).norm() <= 1e-9 * 4096.0_f64.sqrt());
        }
    }
}

/// Breadth-first flood fill, independent of the crate's labelling.
fn component_count(mask: &LabelMap, label: u8) -> usize {
    let (h, w) = mask.dims();
    let mut seen = vec![false; h * w];
    let mut count = 0;
    for start in 0..h * w {
        if seen[start] || mask.as_slice()[start] != label {
            continue;
        }
        count += 1;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            let (r, c) = ((i / w) as i64, (i % w) as i64);
            for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                let (rr, cc) = (r + dr, c + dc);
                if rr < 0 || cc < 0 || rr >= h as i64 || cc >= w as i64 {
                    continue;
                }
                let j = rr as usize * w + cc as usize;
                if !seen[j] && mask.as_slice()[j] == label {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    count
}

#[test]
fn phantom_geometry_invariants() {
    for seed in 0..100 {
        let p = make_phantom(seed, 64, 64).unwrap();
        assert_eq!(component_count(&p.mask, LV), 1, "seed {seed}");
        for l in LABELS {
            assert!(p.mask.count(l) > 0);
        }
        // LV sits strictly inside the myocardium
        for r in 0..64 {
            for c in 0..64 {
                if p.mask.get(r, c) == LV {
                    assert!(r > 0 && c > 0 && r < 63 && c < 63);
                    for (rr, cc) in [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)] {
                        assert!(matches!(p.mask.get(rr, cc), LV | MYO), "seed {seed}");
                    }
                }
            }
        }
        assert!(p.image.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

fn energy(a: &Image, b: &Image) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn sev(k: usize) -> RankLabel {
    RankLabel::new(k, 3).unwrap()
}

#[test]
fn artefact_energy_increases_with_severity() {
    let spec = CorruptionSpec::default();
    for seed in 0..50 {
        let clean = make_phantom(seed, 64, 64).unwrap();
        let e: Vec<f64> = (1..=3)
            .map(|k| energy(&corrupt_kspace(&clean, sev(k), &spec, seed).unwrap().image, &clean.image))
            .collect();
        assert!(e[0] < e[1] && e[1] < e[2], "seed {seed}: {e:?}");
    }
}

fn mean_label_dice(pred: &LabelMap, truth: &LabelMap) -> f64 {
    let d: Vec<f64> = LABELS.iter().map(|&l| dice(pred, truth, l).unwrap()).collect();
    mean_dice(&d).unwrap()
}

#[test]
fn reference_segmenter_degrades_with_severity() {
    let spec = CorruptionSpec::default();
    let mut per_severity = [0.0; 3];
    let seeds = 0..60u64;
    for seed in seeds.clone() {
        let clean = make_phantom(seed, 64, 64).unwrap();
        let clean_seg = reference_segment(&clean.image);
        for l in LABELS {
            assert!(dice(&clean_seg, &clean.mask, l).unwrap() >= 0.85, "seed {seed} label {l}");
        }
        for k in 1..=3 {
            let c = corrupt_kspace(&clean, sev(k), &spec, seed).unwrap();
            assert_eq!(c.mask, clean.mask);
            per_severity[k - 1] += mean_label_dice(&reference_segment(&c.image), &c.mask);
        }
    }
    let n = seeds.count() as f64;
    let means = per_severity.map(|s| s / n);
    assert!(means[0] >= means[1] && means[1] >= means[2], "{means:?}");
    assert!(means[2] < means[0]);
}

#[test]
fn severe_corruption_hurts_same_base() {
    let spec = CorruptionSpec::default();
    let mut worse = 0;
    for seed in 0..20 {
        let clean = make_phantom(seed, 64, 64).unwrap();
        let d = |k| {
            let c = corrupt_kspace(&clean, sev(k), &spec, seed).unwrap();
            mean_label_dice(&reference_segment(&c.image), &c.mask)
        };
        if d(3) < d(1) {
            worse += 1;
        }
    }
    assert!(worse >= 18, "{worse} of 20");
}

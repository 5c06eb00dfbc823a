//! Metrics checked against straightforward re-implementations written from
//! the textbook definitions.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use renderproof_core::iqa::{
    mse, nr_features, psnr, ssim, zscore, IqaError, LumaGrid, SsimParams,
};
use renderproof_core::render::{encode_display, render, DisplayImage, Mode, RenderSettings};

fn random_grid(rng: &mut StdRng, w: usize, h: usize) -> LumaGrid {
    LumaGrid::new(w, h, (0..w * h).map(|_| rng.gen_range(0.0..=255.0)).collect())
}

fn brute_mse(a: &LumaGrid, b: &LumaGrid) -> f64 {
    let mut sum = 0.0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            let d = a.get(x, y) - b.get(x, y);
            sum += d * d;
        }
    }
    sum / (a.width() * a.height()) as f64
}

/// SSIM with a separable Gaussian and raw-moment variances.
fn brute_ssim(a: &LumaGrid, b: &LumaGrid) -> f64 {
    let (n, sigma) = (11usize, 1.5f64);
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let d = i as f64 - 5.0;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let gs: f64 = g.iter().sum();
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mut total = 0.0;
    let mut windows = 0;
    for y0 in 0..=a.height() - n {
        for x0 in 0..=a.width() - n {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in 0..n {
                for dx in 0..n {
                    let w = g[dx] * g[dy] / (gs * gs);
                    let (p, q) = (a.get(x0 + dx, y0 + dy), b.get(x0 + dx, y0 + dy));
                    ma += w * p;
                    mb += w * q;
                    saa += w * p * p;
                    sbb += w * q * q;
                    sab += w * p * q;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2)
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            windows += 1;
        }
    }
    total / windows as f64
}

#[test]
fn full_reference_metrics_match_brute_force() {
    let mut rng = StdRng::seed_from_u64(20);
    let params = SsimParams::default();
    for case in 0..100 {
        let a = random_grid(&mut rng, 16, 16);
        // Mix of unrelated pairs and noisy copies so SSIM spans its range.
        let b = if case % 2 == 0 {
            random_grid(&mut rng, 16, 16)
        } else {
            let noise = rng.gen_range(1.0..40.0);
            LumaGrid::new(
                16,
                16,
                a.data()
                    .iter()
                    .map(|v| (v + rng.gen_range(-noise..noise)).clamp(0.0, 255.0))
                    .collect(),
            )
        };
        let m = brute_mse(&a, &b);
        assert!((mse(&a, &b).unwrap() - m).abs() < 1e-6);
        let p = 10.0 * (255.0f64 * 255.0 / m).log10();
        assert!((psnr(&a, &b).unwrap() - p).abs() < 1e-6);
        let s = ssim(&a, &b, &params).unwrap();
        assert!((s - brute_ssim(&a, &b)).abs() < 1e-6, "case {case}");
        assert!((ssim(&b, &a, &params).unwrap() - s).abs() < 1e-9);
        assert!((ssim(&a, &a, &params).unwrap() - 1.0).abs() < 1e-9);
        assert!((-1.0..=1.0).contains(&s));
    }
}

#[test]
fn constant_image_closed_forms() {
    let a = LumaGrid::new(16, 16, vec![100.0; 256]);
    let b = LumaGrid::new(16, 16, vec![116.0; 256]);
    assert_eq!(mse(&a, &b).unwrap(), 256.0);
    assert!((psnr(&a, &b).unwrap() - 24.0484).abs() < 1e-4);
    assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);

    let c = LumaGrid::new(16, 16, vec![200.0; 256]);
    let s = ssim(&a, &c, &SsimParams::default()).unwrap();
    // (2*100*200 + C1) / (100^2 + 200^2 + C1), C1 = 6.5025.
    assert!((s - 40006.5025 / 50006.5025).abs() < 1e-6);
    assert!((s - 0.80003).abs() < 1e-5);
}

#[test]
fn full_reference_needs_aligned_images() {
    let a = LumaGrid::new(16, 16, vec![0.0; 256]);
    let b = LumaGrid::new(16, 8, vec![0.0; 128]);
    assert!(matches!(mse(&a, &b), Err(IqaError::DimensionMismatch { .. })));
    assert!(matches!(psnr(&a, &b), Err(IqaError::DimensionMismatch { .. })));
    let small = LumaGrid::new(8, 8, vec![0.0; 64]);
    assert!(matches!(
        ssim(&small, &small, &SsimParams::default()),
        Err(IqaError::TooSmall { .. })
    ));
}

fn brute_features(img: &DisplayImage) -> [f64; 3] {
    let (w, h) = (img.width as usize, img.height as usize);
    let y: Vec<f64> = img
        .pixels
        .iter()
        .map(|p| 0.2126 * p[0] as f64 + 0.7152 * p[1] as f64 + 0.0722 * p[2] as f64)
        .collect();
    let at = |x: usize, yy: usize| y[yy * w + x];
    let mut lap = Vec::new();
    for j in 1..h - 1 {
        for i in 1..w - 1 {
            lap.push(4.0 * at(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1));
        }
    }
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt())
    };
    let (_, lap_sd) = stats(&lap);
    let (_, contrast) = stats(&y);
    let rg: Vec<f64> = img.pixels.iter().map(|p| p[0] as f64 - p[1] as f64).collect();
    let yb: Vec<f64> = img
        .pixels
        .iter()
        .map(|p| (p[0] as f64 + p[1] as f64) / 2.0 - p[2] as f64)
        .collect();
    let ((m_rg, s_rg), (m_yb, s_yb)) = (stats(&rg), stats(&yb));
    let colorfulness = (s_rg * s_rg + s_yb * s_yb).sqrt() + 0.3 * (m_rg * m_rg + m_yb * m_yb).sqrt();
    [lap_sd * lap_sd, contrast, colorfulness]
}

fn close(a: [f64; 3], b: [f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + y.abs()))
}

#[test]
fn checkerboard_features_match_brute_force() {
    let pixels = (0..64)
        .map(|k| if (k % 8 + k / 8) % 2 == 0 { [0u8; 3] } else { [255u8; 3] })
        .collect();
    let board = DisplayImage::new(8, 8, pixels);
    let f = nr_features(&board).unwrap().as_array();
    assert!(close(f, brute_features(&board)));
    // Every interior Laplacian is +-1020 with zero mean; luma is half 0, half 255.
    assert!(close(f, [1020.0 * 1020.0, 127.5, 0.0]));
}

#[test]
fn random_colour_features_match_brute_force() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let (w, h) = (rng.gen_range(3..20), rng.gen_range(3..20));
        let pixels = (0..w * h).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let img = DisplayImage::new(w as u32, h as u32, pixels);
        assert!(close(nr_features(&img).unwrap().as_array(), brute_features(&img)));
    }
}

/// 3x3 binomial blur per channel with clamped borders, rounded back to 8 bits.
fn blur(img: &DisplayImage) -> DisplayImage {
    let (w, h) = (img.width as i64, img.height as i64);
    let k = [1.0, 2.0, 1.0];
    let mut out = Vec::with_capacity(img.pixels.len());
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            for (dy, ky) in (-1..=1).zip(k) {
                for (dx, kx) in (-1..=1).zip(k) {
                    let p = img.get((x + dx).clamp(0, w - 1) as u32, (y + dy).clamp(0, h - 1) as u32);
                    for c in 0..3 {
                        acc[c] += kx * ky * p[c] as f64 / 16.0;
                    }
                }
            }
            out.push(acc.map(|v| v.round() as u8));
        }
    }
    DisplayImage::new(img.width, img.height, out)
}

#[test]
fn blurring_never_sharpens() {
    let mut rng = StdRng::seed_from_u64(8);
    let mut corpus: Vec<DisplayImage> = (0..30)
        .map(|_| {
            let (w, h) = (rng.gen_range(6..24), rng.gen_range(6..24));
            DisplayImage::new(w, h, (0..w * h).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect())
        })
        .collect();
    let room = renderproof_core::fixtures::diffuse_room(32, 24);
    for mode in [Mode::Direct, Mode::Gi] {
        let img = render(&room, &RenderSettings::new(mode, 16, 4, 1), None).unwrap();
        corpus.push(encode_display(&img, 1.0));
    }
    for img in &corpus {
        let mut current = img.clone();
        for _ in 0..3 {
            let next = blur(&current);
            let before = nr_features(&current).unwrap().sharpness;
            let after = nr_features(&next).unwrap().sharpness;
            assert!(after <= before, "{after} > {before}");
            current = next;
        }
    }
}

#[test]
fn zscore_standardizes_random_lists() {
    let mut rng = StdRng::seed_from_u64(1000);
    for _ in 0..1000 {
        let len = rng.gen_range(2..60);
        let scale = 10f64.powi(rng.gen_range(-3..4));
        let offset = rng.gen_range(-100.0..100.0);
        let values: Vec<f64> = (0..len).map(|_| offset + scale * rng.gen_range(-1.0..1.0)).collect();
        let z = zscore(&values).unwrap();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9, "mean {mean} {values:?} {z:?}");
        assert!((sd - 1.0).abs() < 1e-9, "sd {sd}");

        let mut distinct = values.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() == values.len() {
            let order = |v: &[f64]| {
                let mut idx: Vec<usize> = (0..v.len()).collect();
                idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
                idx
            };
            assert_eq!(order(&values), order(&z));
        }
    }
    assert_eq!(zscore(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0; 3]);
    let z = zscore(&[1.0, 2.0, 3.0]).unwrap();
    for (v, e) in z.iter().zip([-1.22474, 0.0, 1.22474]) {
        assert!((v - e).abs() < 1e-5);
    }
    assert!(zscore(&[]).is_err());
}

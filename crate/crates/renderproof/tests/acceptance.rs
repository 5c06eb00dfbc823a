//! Acceptance run: one PASS/FAIL line per criterion at pinned tolerances.
//!
//! Wall-clock limits are stated for laptop hardware. They are measured and
//! reported here, but only decide the exit status when
//! `RENDERPROOF_ENFORCE_TIMING=1` is set.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use renderproof::parallel::{bake_parallel, pool, render_parallel};
use renderproof::scene_file::parse_scene;
use renderproof_core::fixtures::furnace_box;
use renderproof_core::iqa::{mse, psnr, ssim, zscore, LumaGrid, SsimParams};
use renderproof_core::render::{encode_display, luma, BakeSettings, LinearImage, Mode, RenderSettings};
use renderproof_core::report::{emit_markdown, MetricId, MetricScore, Provenance, Report};

struct Outcome {
    id: &'static str,
    pass: bool,
    timing: bool,
    detail: String,
}

#[derive(Default)]
struct Ledger(Vec<Outcome>);

impl Ledger {
    fn record(&mut self, id: &'static str, pass: bool, detail: String) {
        println!("[{}] {id} {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push(Outcome {
            id,
            pass,
            timing: false,
            detail,
        });
    }

    fn timing(&mut self, id: &'static str, seconds: f64, limit: f64, what: &str) {
        let pass = seconds < limit;
        let detail = format!(
            "{what}: {seconds:.1} s (limit {limit:.0} s, {} hardware threads)",
            std::thread::available_parallelism().map_or(1, |n| n.get())
        );
        println!("[{}] {id} {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push(Outcome {
            id,
            pass,
            timing: true,
            detail,
        });
    }
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_renderproof"))
}

fn rel(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs()
}

fn furnace(ledger: &mut Ledger) {
    let p = pool(None);
    let scene = furnace_box(2.0, 0.2, 0.5, 128, 128);
    let start = Instant::now();
    let gi = render_parallel(&p, &scene, &RenderSettings::new(Mode::Gi, 1024, 16, 1), None).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let e = rel(gi.mean(), 0.4);
    ledger.record(
        "1a",
        e < 0.02,
        format!("furnace gi 128x128 1024spp b16: mean {:.5}, expected 0.4, rel err {:.4} (tol 0.02)", gi.mean(), e),
    );
    let direct =
        render_parallel(&p, &scene, &RenderSettings::new(Mode::Direct, 1024, 16, 1), None).unwrap();
    let e = rel(direct.mean(), 0.3);
    ledger.record(
        "1b",
        e < 0.02,
        format!("furnace direct 128x128 1024spp: mean {:.5}, expected 0.3, rel err {:.4} (tol 0.02)", direct.mean(), e),
    );
    ledger.timing("1c", seconds, 60.0, "furnace gi render 128x128 1024spp b16");
}

fn mean_abs_luma_gap(a: &LinearImage, b: &LinearImage) -> (f64, f64) {
    let (la, lb) = (luma(&encode_display(a, 1.0)), luma(&encode_display(b, 1.0)));
    let n = la.data().len() as f64;
    let mad = la.data().iter().zip(lb.data()).map(|(x, y)| (x - y).abs()).sum::<f64>() / n;
    (mad, lb.data().iter().sum::<f64>() / n)
}

fn baked_vs_dynamic(ledger: &mut Ledger) {
    let p = pool(None);
    let scene = furnace_box(2.0, 0.2, 0.5, 64, 64);
    let bake = BakeSettings {
        texel_size: 0.25,
        samples_per_texel: 512,
        max_bounces: 16,
        seed: 2,
    };
    let set = bake_parallel(&p, &scene, &bake).unwrap();
    let baked = render_parallel(&p, &scene, &RenderSettings::new(Mode::Baked, 16, 16, 3), Some(&set)).unwrap();
    let gi = render_parallel(&p, &scene, &RenderSettings::new(Mode::Gi, 1024, 16, 3), None).unwrap();
    let (mad, mean) = mean_abs_luma_gap(&baked, &gi);
    ledger.record(
        "2",
        mad < 0.05 * mean,
        format!("baked vs gi furnace 64x64 (texel 0.25, 512 spt): luma gap {mad:.3} = {:.2}% of mean luma {mean:.2} (tol 5%)", 100.0 * mad / mean),
    );
}

fn grid(rng: &mut StdRng, n: usize) -> LumaGrid {
    LumaGrid::new(n, n, (0..n * n).map(|_| rng.gen_range(0.0..=255.0)).collect())
}

/// Direct double loops over the definitions.
fn oracle_mse(a: &LumaGrid, b: &LumaGrid) -> f64 {
    let mut s = 0.0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            s += (a.get(x, y) - b.get(x, y)).powi(2);
        }
    }
    s / (a.width() * a.height()) as f64
}

fn oracle_ssim(a: &LumaGrid, b: &LumaGrid) -> f64 {
    let g: Vec<f64> = (0..11).map(|i| (-((i as f64 - 5.0).powi(2)) / 4.5).exp()).collect();
    let norm: f64 = g.iter().sum::<f64>().powi(2);
    let (c1, c2) = (6.5025, 58.5225);
    let mut total = 0.0;
    let mut count = 0.0;
    for y0 in 0..=a.height() - 11 {
        for x0 in 0..=a.width() - 11 {
            let (mut ma, mut mb) = (0.0, 0.0);
            for j in 0..11 {
                for i in 0..11 {
                    let w = g[i] * g[j] / norm;
                    ma += w * a.get(x0 + i, y0 + j);
                    mb += w * b.get(x0 + i, y0 + j);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..11 {
                for i in 0..11 {
                    let w = g[i] * g[j] / norm;
                    let (da, db) = (a.get(x0 + i, y0 + j) - ma, b.get(x0 + i, y0 + j) - mb);
                    va += w * da * da;
                    vb += w * db * db;
                    cov += w * da * db;
                }
            }
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1.0;
        }
    }
    total / count
}

fn metric_oracles(ledger: &mut Ledger) {
    let mut rng = StdRng::seed_from_u64(3);
    let params = SsimParams::default();
    let (mut worst_mse, mut worst_psnr, mut worst_ssim) = (0.0f64, 0.0f64, 0.0f64);
    let (mut worst_identity, mut worst_symmetry) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let a = grid(&mut rng, 16);
        let b = if k % 2 == 0 {
            grid(&mut rng, 16)
        } else {
            let amp = rng.gen_range(1.0..50.0);
            LumaGrid::new(16, 16, a.data().iter().map(|v| (v + rng.gen_range(-amp..amp)).clamp(0.0, 255.0)).collect())
        };
        let m = oracle_mse(&a, &b);
        worst_mse = worst_mse.max((mse(&a, &b).unwrap() - m).abs());
        worst_psnr = worst_psnr.max((psnr(&a, &b).unwrap() - 10.0 * (255.0f64 * 255.0 / m).log10()).abs());
        let s = ssim(&a, &b, &params).unwrap();
        worst_ssim = worst_ssim.max((s - oracle_ssim(&a, &b)).abs());
        worst_identity = worst_identity.max((ssim(&a, &a, &params).unwrap() - 1.0).abs());
        worst_symmetry = worst_symmetry.max((s - ssim(&b, &a, &params).unwrap()).abs());
    }
    ledger.record(
        "3a",
        worst_mse < 1e-6 && worst_psnr < 1e-6 && worst_ssim < 1e-6,
        format!("100 random 16x16 pairs vs brute force: max |d| mse {worst_mse:.1e}, psnr {worst_psnr:.1e} dB, ssim {worst_ssim:.1e} (tol 1e-6)"),
    );
    ledger.record(
        "3b",
        worst_identity < 1e-9 && worst_symmetry < 1e-9,
        format!("ssim identity max |d| {worst_identity:.1e}, symmetry max |d| {worst_symmetry:.1e} (tol 1e-9)"),
    );
    let (a, b) = (LumaGrid::new(16, 16, vec![100.0; 256]), LumaGrid::new(16, 16, vec![200.0; 256]));
    let s = ssim(&a, &b, &params).unwrap();
    let closed = (2.0 * 100.0 * 200.0 + 6.5025) / (100.0f64 * 100.0 + 200.0 * 200.0 + 6.5025);
    ledger.record(
        "3c",
        (s - closed).abs() < 1e-6 && format!("{s:.5}") == "0.80003",
        format!("constant 100 vs 200: ssim {s:.7}, closed form {closed:.7}, 5 decimals {s:.5}"),
    );
}

fn normalization(ledger: &mut Ledger) {
    let mut rng = StdRng::seed_from_u64(4);
    let (mut worst_mean, mut worst_std) = (0.0f64, 0.0f64);
    let mut rank_ok = true;
    for _ in 0..1000 {
        let n = rng.gen_range(2..60);
        let scale = 10f64.powi(rng.gen_range(-3..4));
        let offset = rng.gen_range(-100.0..100.0);
        let v: Vec<f64> = (0..n).map(|_| offset + scale * rng.gen_range(-1.0..1.0)).collect();
        let z = zscore(&v).unwrap();
        let mean = z.iter().sum::<f64>() / n as f64;
        let sd = (z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        worst_mean = worst_mean.max(mean.abs());
        worst_std = worst_std.max((sd - 1.0).abs());
        for i in 0..n {
            for j in 0..n {
                if v[i] < v[j] && !(z[i] < z[j]) {
                    rank_ok = false;
                }
            }
        }
    }
    ledger.record(
        "4",
        worst_mean < 1e-9 && worst_std < 1e-9 && rank_ok,
        format!("zscore on 1000 random lists: max |mean| {worst_mean:.1e}, max |sd-1| {worst_std:.1e} (tol 1e-9), ranks preserved: {rank_ok}"),
    );
}

fn read_all(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()))
}

fn compare(out: &Path) -> (bool, f64) {
    let start = Instant::now();
    let status = bin()
        .args(["compare", "--config"])
        .arg(assets().join("bundled.json"))
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap();
    (status.status.success(), start.elapsed().as_secs_f64())
}

fn bundled_experiment(ledger: &mut Ledger, tmp: &Path) {
    let first = tmp.join("run1");
    let (ok, seconds) = compare(&first);
    let csv = String::from_utf8(read_all(&first, "report.csv")).unwrap();
    let verdicts: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .filter(|v| *v != "baseline")
        .collect();
    let improved = verdicts.iter().filter(|v| **v == "improved").count();
    ledger.record(
        "5a",
        ok && verdicts.len() == 9 && improved == 9,
        format!("bundled 3-scene experiment: {improved}/{} cells improved at tie_epsilon 0", verdicts.len()),
    );
    ledger.timing("5b", seconds, 600.0, "bundled experiment end to end");
}

fn thread_determinism(ledger: &mut Ledger, tmp: &Path) {
    let (first, second) = (tmp.join("run1"), tmp.join("run2"));
    let (ok2, _) = compare(&second);
    let same = ok2
        && ["report.csv", "report.md"]
            .iter()
            .all(|f| read_all(&first, f) == read_all(&second, f));
    ledger.record("7a", same, "compare twice: report.csv and report.md byte-identical".into());

    let scene = assets().join("scenes/box.json");
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let (ppm, pfm) = (tmp.join(format!("t{threads}.ppm")), tmp.join(format!("t{threads}.pfm")));
        let status = bin()
            .env("RENDERPROOF_THREADS", threads)
            .args(["render", "--mode", "gi", "--spp", "16", "--bounces", "4", "--seed", "5", "--scene"])
            .arg(&scene)
            .arg("--out-ppm")
            .arg(&ppm)
            .arg("--out-pfm")
            .arg(&pfm)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((fs::read(&ppm).unwrap(), fs::read(&pfm).unwrap()));
    }
    ledger.record(
        "7b",
        outputs[0] == outputs[1],
        "render of bundled box with RENDERPROOF_THREADS=1 vs 8: PPM and PFM bit-identical".into(),
    );
}

fn table_golden(ledger: &mut Ledger) {
    let table: [(&str, [f64; 6]); 3] = [
        ("CVRKD", [-1.1654, 0.9932, -0.3112, -1.0244, 1.5823, -0.0749]),
        ("WaDIQaM", [-0.4971, 0.3884, -0.1692, -0.4608, 0.5792, 0.1596]),
        ("NIMA", [0.4080, 0.0202, -0.6083, 0.4673, 0.1761, -0.4622]),
    ];
    let mut cells = Vec::new();
    for (name, values) in table {
        for (k, v) in values.iter().enumerate() {
            let variant = if k < 3 { "original" } else { "improved" };
            let scene = format!("Scene{}", k % 3 + 1);
            cells.push(MetricScore::new(MetricId::External(name.into()), &scene, variant, *v));
        }
    }
    let md = emit_markdown(&Report::build(cells, 0.0, Provenance::default()).unwrap());
    let golden = include_str!("../../core/tests/golden/table1.md");
    let all_values = table
        .iter()
        .flat_map(|(_, v)| v.iter())
        .all(|v| md.contains(&format!(" {v:.4} |")));
    ledger.record(
        "6",
        md == golden && all_values,
        format!("golden IQA table through emit_markdown: matches golden {}, all 18 values at 4 decimals {all_values}", md == golden),
    );
}

fn per_pixel_variance(scene: &renderproof_core::scene::Scene, spp: u32) -> f64 {
    let p = pool(None);
    let runs: Vec<LinearImage> = (0..8)
        .map(|s| render_parallel(&p, scene, &RenderSettings::new(Mode::Gi, spp, 4, 500 + s), None).unwrap())
        .collect();
    let n = runs.len() as f64;
    let mut total = 0.0;
    for i in 0..runs[0].pixels.len() {
        for c in 0..3 {
            let m = runs.iter().map(|r| r.pixels[i][c] as f64).sum::<f64>() / n;
            total += runs.iter().map(|r| (r.pixels[i][c] as f64 - m).powi(2)).sum::<f64>() / (n - 1.0);
        }
    }
    total / (3 * runs[0].pixels.len()) as f64
}

fn variance_scaling(ledger: &mut Ledger) {
    let text = fs::read_to_string(assets().join("scenes/box.json")).unwrap();
    let scene = parse_scene(&text).unwrap();
    let ratio = per_pixel_variance(&scene, 16) / per_pixel_variance(&scene, 64);
    ledger.record(
        "8",
        (2.0..=8.0).contains(&ratio),
        format!("bundled box, gi spp 16 vs 64 over 8 seeds: variance ratio {ratio:.3} (range [2, 8])"),
    );
}

fn main() {
    // `cargo test -- --list` enumerates tests; there is nothing to list here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let mut ledger = Ledger::default();
    furnace(&mut ledger);
    baked_vs_dynamic(&mut ledger);
    metric_oracles(&mut ledger);
    normalization(&mut ledger);
    bundled_experiment(&mut ledger, tmp.path());
    table_golden(&mut ledger);
    thread_determinism(&mut ledger, tmp.path());
    variance_scaling(&mut ledger);

    let enforce_timing = std::env::var("RENDERPROOF_ENFORCE_TIMING").is_ok_and(|v| v == "1");
    let failed: Vec<&Outcome> = ledger.0.iter().filter(|o| !o.pass).collect();
    let blocking: Vec<&&Outcome> = failed.iter().filter(|o| enforce_timing || !o.timing).collect();
    println!(
        "acceptance: {} of {} checks passed",
        ledger.0.len() - failed.len(),
        ledger.0.len()
    );
    for o in &failed {
        let note = if o.timing && !enforce_timing {
            " (wall-clock limit, not enforced; set RENDERPROOF_ENFORCE_TIMING=1)"
        } else {
            ""
        };
        println!("failed: {} {}{note}", o.id, o.detail);
    }
    if !blocking.is_empty() {
        std::process::exit(1);
    }
}

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input (unreadable,
//! unparsable or invalid files), 3 metric precondition failure.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use renderproof_core::iqa::nr_features;
use renderproof_core::render::{encode_display, BakeSettings, DisplayImage, Mode, RenderSettings};
use renderproof_core::report::MetricScore;

use crate::calibration::{calibrate, default_calibration, parse_calibration, serialize_calibration};
use crate::experiment::{run_experiment, write_outcome, Experiment, HarnessError};
use crate::formats::{read_lightmaps, read_ppm, write_lightmaps, write_pfm, write_ppm};
use crate::metrics::{json_line, parse_metric_list, score};
use crate::parallel::{bake_parallel, pool, render_parallel, threads_from_env};
use crate::scene_file::parse_scene;

pub const USAGE: i32 = 1;
pub const INVALID_INPUT: i32 = 2;
pub const METRIC_PRECONDITION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "renderproof", version, about = "Render scenes and check image quality improvements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Direct,
    Gi,
    Baked,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Direct => Mode::Direct,
            ModeArg::Gi => Mode::Gi,
            ModeArg::Baked => Mode::Baked,
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err("expected a finite number > 0".into()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err("expected a finite number >= 0".into()),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a scene to PPM (and optionally PFM).
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        spp: u32,
        #[arg(long)]
        bounces: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1", value_parser = positive)]
        exposure: f64,
        /// LMP1 file; required in baked mode.
        #[arg(long)]
        lightmaps: Option<PathBuf>,
        #[arg(long)]
        out_ppm: PathBuf,
        #[arg(long)]
        out_pfm: Option<PathBuf>,
    },
    /// Bake lightmaps for the quads and triangles of a scene.
    Bake {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_parser = positive)]
        texel_size: f64,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        samples: u32,
        #[arg(long)]
        bounces: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a test image, printing one JSON object per metric.
    Assess {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated subset of psnr, ssim, nrq.
        #[arg(long)]
        metrics: String,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Run an experiment config and write its report.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "0", value_parser = non_negative)]
        tie_epsilon: f64,
        /// Write outputs here instead of the config's `out_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compute a no-reference calibration file from a set of PPM images.
    Calibrate {
        #[arg(long, num_args = 1.., required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure with its exit code and a one-line diagnostic.
struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn at(path: &Path, message: impl std::fmt::Display) -> Failure {
    fail(INVALID_INPUT, format!("{}: {message}", path.display()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| at(path, e))
}

fn load_ppm(path: &Path) -> Result<DisplayImage, Failure> {
    let file = fs::File::open(path).map_err(|e| at(path, e))?;
    read_ppm(BufReader::new(file)).map_err(|e| at(path, e))
}

fn save(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), Failure> {
    let file = fs::File::create(path).map_err(|e| at(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| at(path, e))
}

fn harness_failure(e: HarnessError) -> Failure {
    let code = match e {
        HarnessError::Metric { .. } => METRIC_PRECONDITION,
        _ => INVALID_INPUT,
    };
    fail(code, e.to_string())
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    let threads = threads_from_env().map_err(|e| fail(USAGE, e.to_string()))?;
    match command {
        Command::Render {
            scene,
            mode,
            spp,
            bounces,
            seed,
            exposure,
            lightmaps,
            out_ppm,
            out_pfm,
        } => {
            let mode = Mode::from(mode);
            match (mode, &lightmaps) {
                (Mode::Baked, None) => return Err(fail(USAGE, "--mode baked requires --lightmaps")),
                (Mode::Direct | Mode::Gi, Some(_)) => {
                    return Err(fail(USAGE, "--lightmaps is only used with --mode baked"))
                }
                _ => {}
            }
            let parsed = parse_scene(&read_text(&scene)?).map_err(|e| at(&scene, e))?;
            let set = match &lightmaps {
                Some(p) => {
                    let file = fs::File::open(p).map_err(|e| at(p, e))?;
                    Some(read_lightmaps(BufReader::new(file)).map_err(|e| at(p, e))?)
                }
                None => None,
            };
            let settings = RenderSettings {
                mode,
                samples_per_pixel: spp,
                max_bounces: bounces,
                seed,
                exposure,
            };
            let image = render_parallel(&pool(threads), &parsed, &settings, set.as_ref()).map_err(|e| {
                match (&lightmaps, &e) {
                    (Some(p), renderproof_core::render::RenderError::LightmapMismatch(_)) => at(p, e),
                    _ => at(&scene, e),
                }
            })?;
            save(&out_ppm, |w| write_ppm(&encode_display(&image, exposure), w))?;
            if let Some(p) = &out_pfm {
                save(p, |w| write_pfm(&image, w))?;
            }
            Ok(())
        }
        Command::Bake {
            scene,
            texel_size,
            samples,
            bounces,
            seed,
            out: out_path,
        } => {
            let parsed = parse_scene(&read_text(&scene)?).map_err(|e| at(&scene, e))?;
            let settings = BakeSettings {
                texel_size,
                samples_per_texel: samples,
                max_bounces: bounces,
                seed,
            };
            let set = bake_parallel(&pool(threads), &parsed, &settings).map_err(|e| at(&scene, e))?;
            save(&out_path, |w| write_lightmaps(&set, w))
        }
        Command::Assess {
            reference,
            test,
            metrics,
            calibration,
        } => {
            let metrics = parse_metric_list(&metrics).map_err(|m| fail(USAGE, format!("--metrics: {m}")))?;
            let cal = match &calibration {
                Some(p) => parse_calibration(&read_text(p)?).map_err(|m| at(p, m))?,
                None => default_calibration(),
            };
            let (r, t) = (load_ppm(&reference)?, load_ppm(&test)?);
            let mut lines = String::new();
            for m in &metrics {
                let raw = score(m, &r, &t, &cal).map_err(|e| {
                    fail(
                        METRIC_PRECONDITION,
                        format!("{m}: --ref {} vs --test {}: {e}", reference.display(), test.display()),
                    )
                })?;
                let cell = MetricScore::new(
                    m.clone(),
                    &reference.display().to_string(),
                    &test.display().to_string(),
                    raw,
                );
                lines.push_str(&json_line(&cell));
                lines.push('\n');
            }
            out.write_all(lines.as_bytes())
                .map_err(|e| fail(INVALID_INPUT, format!("stdout: {e}")))
        }
        Command::Compare {
            config,
            tie_epsilon,
            out_dir,
        } => {
            let mut exp = Experiment::load(&config).map_err(harness_failure)?;
            exp.out_dir_override = out_dir;
            let outcome = run_experiment(&exp, &pool(threads), tie_epsilon).map_err(harness_failure)?;
            let dir = write_outcome(&exp, &outcome).map_err(harness_failure)?;
            let md = fs::read_to_string(dir.join("report.md")).map_err(|e| at(&dir, e))?;
            write!(out, "{md}\nwrote {}\n", dir.display())
                .map_err(|e| fail(INVALID_INPUT, format!("stdout: {e}")))
        }
        Command::Calibrate { images, out: out_path } => {
            let mut features = Vec::new();
            for p in &images {
                let img = load_ppm(p)?;
                features.push(nr_features(&img).map_err(|e| {
                    fail(METRIC_PRECONDITION, format!("{}: {e}", p.display()))
                })?);
            }
            let cal = calibrate(&features).map_err(|m| fail(INVALID_INPUT, format!("--images: {m}")))?;
            fs::write(&out_path, serialize_calibration(&cal)).map_err(|e| at(&out_path, e))
        }
    }
}

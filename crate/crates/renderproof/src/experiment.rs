//! Experiment configs and the comparison runner.
//!
//! A run renders every (scene, variant) pair, scores it against the scene's
//! reference, and writes `report.csv`, `report.md`, `scores.jsonl`,
//! `provenance.json` and the images under the output directory. Any failure
//! aborts the whole run; no partial report is written.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::ThreadPool;
use serde::Deserialize;

use renderproof_core::iqa::{IqaError, NrCalibration};
use renderproof_core::render::{
    encode_display, BakeSettings, DisplayImage, LinearImage, Mode, RenderSettings,
};
use renderproof_core::report::{
    emit_csv, emit_markdown, normalize_rows, MetricId, MetricScore, Provenance, Report,
};
use renderproof_core::scene::{apply_overrides, MaterialOverride, Scene};

use crate::calibration::{default_calibration, parse_calibration};
use crate::formats::{read_ppm, write_pfm, write_ppm};
use crate::metrics::{json_line, score};
use crate::parallel::{bake_parallel, render_parallel};
use crate::scene_file::{parse_overrides, parse_scene};

pub const TOOL_VERSION: &str = concat!("renderproof ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// A file that exists but does not parse or validate.
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    /// The experiment itself is malformed or cannot be rendered.
    #[error("{0}")]
    Config(String),
    /// A metric precondition failed, such as a resolution mismatch.
    #[error("{context}: {source}")]
    Metric { context: String, source: IqaError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_owned(),
        source,
    }
}

fn input_err(path: &Path, message: impl ToString) -> HarnessError {
    HarnessError::Input {
        path: path.to_owned(),
        message: message.to_string(),
    }
}

fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(io_err(path))
}

#[derive(Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BakeDoc {
    pub texel_size: f64,
    pub samples: u32,
    pub bounces: u32,
    pub seed: u64,
}

#[derive(Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SettingsDoc {
    pub mode: String,
    pub spp: u32,
    pub bounces: u32,
    pub seed: u64,
    #[serde(default = "one")]
    pub exposure: f64,
    /// Lightmap settings; required in baked mode, rejected otherwise.
    #[serde(default)]
    pub bake: Option<BakeDoc>,
}

fn one() -> f64 {
    1.0
}

/// Override file(s) for a variant: one file for every scene, or a map from
/// scene id to file.
#[derive(Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
pub enum OverridesDoc {
    All(String),
    PerScene(BTreeMap<String, String>),
}

#[derive(Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged, deny_unknown_fields)]
pub enum ReferenceDoc {
    Image {
        image: String,
    },
    Render {
        settings: SettingsDoc,
        #[serde(default)]
        overrides: Option<String>,
    },
}

#[derive(Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneEntry {
    pub id: String,
    pub scene: String,
    pub reference: ReferenceDoc,
}

#[derive(Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VariantEntry {
    pub id: String,
    #[serde(default)]
    pub overrides: Option<OverridesDoc>,
    pub settings: SettingsDoc,
}

#[derive(Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenes: Vec<SceneEntry>,
    pub variants: Vec<VariantEntry>,
    pub metrics: Vec<String>,
    #[serde(default)]
    pub normalize: bool,
    pub out_dir: String,
    #[serde(default)]
    pub calibration: Option<String>,
}

impl SettingsDoc {
    pub fn render_settings(&self) -> Result<RenderSettings, String> {
        let mode = Mode::parse(&self.mode)
            .ok_or_else(|| format!("unknown mode {:?} (expected direct, gi or baked)", self.mode))?;
        if (mode == Mode::Baked) != self.bake.is_some() {
            return Err(if mode == Mode::Baked {
                "baked mode needs a \"bake\" block".into()
            } else {
                "\"bake\" is only allowed in baked mode".into()
            });
        }
        let s = RenderSettings {
            mode,
            samples_per_pixel: self.spp,
            max_bounces: self.bounces,
            seed: self.seed,
            exposure: self.exposure,
        };
        s.check().map_err(|e| e.to_string())?;
        if let Some(b) = self.bake_settings() {
            b.check().map_err(|e| e.to_string())?;
        }
        Ok(s)
    }

    pub fn bake_settings(&self) -> Option<BakeSettings> {
        self.bake.map(|b| BakeSettings {
            texel_size: b.texel_size,
            samples_per_texel: b.samples,
            max_bounces: b.bounces,
            seed: b.seed,
        })
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<(), String> {
        if self.scenes.is_empty() {
            return Err("at least one scene is required".into());
        }
        if self.variants.len() < 2 {
            return Err("at least two variants are required (a baseline and one to compare)".into());
        }
        if self.metrics.is_empty() {
            return Err("at least one metric is required".into());
        }
        unique("scene", self.scenes.iter().map(|s| s.id.as_str()))?;
        unique("variant", self.variants.iter().map(|v| v.id.as_str()))?;
        unique("metric", self.metrics.iter().map(String::as_str))?;
        for id in self.scenes.iter().map(|s| &s.id).chain(self.variants.iter().map(|v| &v.id)) {
            let ok = !id.is_empty()
                && id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(format!("id {id:?} must be non-empty [A-Za-z0-9_-]"));
            }
        }
        for m in &self.metrics {
            MetricId::parse(m).ok_or_else(|| format!("unknown metric {m:?}"))?;
        }
        for s in &self.scenes {
            if let ReferenceDoc::Render { settings, .. } = &s.reference {
                settings
                    .render_settings()
                    .map_err(|e| format!("scenes \"{}\" reference: {e}", s.id))?;
            }
        }
        for v in &self.variants {
            v.settings
                .render_settings()
                .map_err(|e| format!("variants \"{}\": {e}", v.id))?;
            if let Some(OverridesDoc::PerScene(map)) = &v.overrides {
                for key in map.keys() {
                    if !self.scenes.iter().any(|s| &s.id == key) {
                        return Err(format!(
                            "variants \"{}\": overrides name unknown scene {key:?}",
                            v.id
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn metric_ids(&self) -> Vec<MetricId> {
        self.metrics
            .iter()
            .map(|m| MetricId::parse(m).expect("checked"))
            .collect()
    }
}

fn unique<'a>(what: &str, ids: impl Iterator<Item = &'a str>) -> Result<(), String> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(format!("duplicate {what} id {id:?}"));
        }
    }
    Ok(())
}

/// A loaded experiment: config plus the directory its paths are relative to.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub text: String,
    pub base: PathBuf,
    /// Replaces the config's `out_dir` when set.
    pub out_dir_override: Option<PathBuf>,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = read_text(path)?;
        let config = ExperimentConfig::parse(&text).map_err(|m| input_err(path, m))?;
        let base = path.parent().map(Path::to_owned).unwrap_or_default();
        Ok(Experiment {
            config,
            text,
            base,
            out_dir_override: None,
        })
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        self.base.join(p)
    }

    pub fn out_dir(&self) -> PathBuf {
        match &self.out_dir_override {
            Some(p) => p.clone(),
            None => self.resolve(&self.config.out_dir),
        }
    }
}

/// Everything a run produces, before it is written out.
pub struct Outcome {
    pub report: Report,
    /// (scene id, reference) in config order.
    pub references: Vec<(String, DisplayImage, Option<LinearImage>)>,
    /// (scene id, variant id, linear, display) in config order.
    pub renders: Vec<(String, String, LinearImage, DisplayImage)>,
    pub calibration: NrCalibration,
}

fn load_scene(path: &Path) -> Result<Scene, HarnessError> {
    parse_scene(&read_text(path)?).map_err(|e| input_err(path, e))
}

fn load_overrides(path: &Path) -> Result<Vec<MaterialOverride>, HarnessError> {
    parse_overrides(&read_text(path)?).map_err(|e| input_err(path, e))
}

fn render_with(
    pool: &ThreadPool,
    scene: &Scene,
    settings: &SettingsDoc,
    what: &str,
) -> Result<LinearImage, HarnessError> {
    let rs = settings.render_settings().map_err(HarnessError::Config)?;
    let lightmaps = match settings.bake_settings() {
        Some(b) => Some(
            bake_parallel(pool, scene, &b)
                .map_err(|e| HarnessError::Config(format!("{what}: bake failed: {e}")))?,
        ),
        None => None,
    };
    render_parallel(pool, scene, &rs, lightmaps.as_ref())
        .map_err(|e| HarnessError::Config(format!("{what}: {e}")))
}

fn with_overrides(
    scene: &Scene,
    overrides: &[MaterialOverride],
    path: &Path,
) -> Result<Scene, HarnessError> {
    apply_overrides(scene, overrides).map_err(|e| input_err(path, e))
}

/// An override file and its parsed edits.
type LoadedOverrides = (PathBuf, Vec<MaterialOverride>);

/// Runs the experiment in memory. Deterministic given the config and the
/// files it names; the thread count only affects speed.
pub fn run_experiment(
    exp: &Experiment,
    pool: &ThreadPool,
    tie_epsilon: f64,
) -> Result<Outcome, HarnessError> {
    let cfg = &exp.config;
    let calibration = match &cfg.calibration {
        Some(p) => {
            let path = exp.resolve(p);
            parse_calibration(&read_text(&path)?).map_err(|m| input_err(&path, m))?
        }
        None => default_calibration(),
    };
    let metrics = cfg.metric_ids();

    // Parse every input before rendering anything.
    let mut scenes = Vec::new();
    for s in &cfg.scenes {
        scenes.push(load_scene(&exp.resolve(&s.scene))?);
    }
    let mut variant_overrides: Vec<Vec<Option<LoadedOverrides>>> = Vec::new();
    for v in &cfg.variants {
        let mut per_scene = Vec::new();
        for (s, scene) in cfg.scenes.iter().zip(&scenes) {
            let file = match &v.overrides {
                None => None,
                Some(OverridesDoc::All(p)) => Some(p),
                Some(OverridesDoc::PerScene(map)) => map.get(&s.id),
            };
            let loaded = match file {
                Some(p) => {
                    let path = exp.resolve(p);
                    let o = load_overrides(&path)?;
                    with_overrides(scene, &o, &path)?;
                    Some((path, o))
                }
                None => None,
            };
            per_scene.push(loaded);
        }
        variant_overrides.push(per_scene);
    }

    let mut references = Vec::new();
    for (s, scene) in cfg.scenes.iter().zip(&scenes) {
        let what = format!("scenes \"{}\" reference", s.id);
        match &s.reference {
            ReferenceDoc::Image { image } => {
                let path = exp.resolve(image);
                let file = fs::File::open(&path).map_err(io_err(&path))?;
                let img = read_ppm(std::io::BufReader::new(file)).map_err(|e| input_err(&path, e))?;
                references.push((s.id.clone(), img, None));
            }
            ReferenceDoc::Render {
                settings,
                overrides,
            } => {
                let scene = match overrides {
                    Some(p) => {
                        let path = exp.resolve(p);
                        with_overrides(scene, &load_overrides(&path)?, &path)?
                    }
                    None => scene.clone(),
                };
                let linear = render_with(pool, &scene, settings, &what)?;
                let display = encode_display(&linear, settings.exposure);
                references.push((s.id.clone(), display, Some(linear)));
            }
        }
    }

    let mut renders = Vec::new();
    for (v, overrides) in cfg.variants.iter().zip(&variant_overrides) {
        for ((s, scene), o) in cfg.scenes.iter().zip(&scenes).zip(overrides) {
            let scene = match o {
                Some((path, o)) => with_overrides(scene, o, path)?,
                None => scene.clone(),
            };
            let what = format!("variants \"{}\" on scene \"{}\"", v.id, s.id);
            let linear = render_with(pool, &scene, &v.settings, &what)?;
            let display = encode_display(&linear, v.settings.exposure);
            renders.push((s.id.clone(), v.id.clone(), linear, display));
        }
    }

    // Scoring happens after every render, in a fixed order.
    let mut cells = Vec::new();
    for m in &metrics {
        for (scene_id, variant_id, _, display) in &renders {
            let reference = &references
                .iter()
                .find(|r| &r.0 == scene_id)
                .expect("one reference per scene")
                .1;
            let raw = score(m, reference, display, &calibration).map_err(|source| {
                HarnessError::Metric {
                    context: format!("{m} on scene \"{scene_id}\" variant \"{variant_id}\""),
                    source,
                }
            })?;
            cells.push(MetricScore::new(m.clone(), scene_id, variant_id, raw));
        }
    }
    if cfg.normalize {
        normalize_rows(&mut cells);
    }
    let provenance = Provenance {
        tool_version: TOOL_VERSION.into(),
        config: exp.text.clone(),
        seeds: cfg
            .variants
            .iter()
            .map(|v| (v.id.clone(), v.settings.seed))
            .collect(),
    };
    let report =
        Report::build(cells, tie_epsilon, provenance).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(Outcome {
        report,
        references,
        renders,
        calibration,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn write_image<F>(path: &Path, f: F) -> Result<(), HarnessError>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(io_err(path))?;
    std::io::Write::flush(&mut w).map_err(io_err(path))
}

fn provenance_json(exp: &Experiment, outcome: &Outcome) -> String {
    let cfg = &exp.config;
    let config: serde_json::Value =
        serde_json::from_str(&exp.text).expect("config parsed earlier");
    let mut seeds = Vec::new();
    for s in &cfg.scenes {
        if let ReferenceDoc::Render { settings, .. } = &s.reference {
            seeds.push(serde_json::json!({"scene": s.id, "variant": "reference", "seed": settings.seed}));
        }
        for v in &cfg.variants {
            seeds.push(serde_json::json!({"scene": s.id, "variant": v.id, "seed": v.settings.seed}));
        }
    }
    let c = &outcome.calibration;
    let stat = |(mean, stddev): (f64, f64)| serde_json::json!({"mean": mean, "stddev": stddev});
    let doc = serde_json::json!({
        "tool_version": outcome.report.provenance.tool_version,
        "config": config,
        "seeds": seeds,
        "calibration": {
            "sharpness": stat(c.sharpness),
            "contrast": stat(c.contrast),
            "colorfulness": stat(c.colorfulness),
        },
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("provenance serializes");
    s.push('\n');
    s
}

/// Writes the report files and images under the config's `out_dir`.
pub fn write_outcome(exp: &Experiment, outcome: &Outcome) -> Result<PathBuf, HarnessError> {
    let out = exp.out_dir();
    let images = out.join("images");
    fs::create_dir_all(&images).map_err(io_err(&images))?;
    for (scene, display, linear) in &outcome.references {
        write_image(&images.join(format!("{scene}_reference.ppm")), |w| write_ppm(display, w))?;
        if let Some(linear) = linear {
            write_image(&images.join(format!("{scene}_reference.pfm")), |w| write_pfm(linear, w))?;
        }
    }
    for (scene, variant, linear, display) in &outcome.renders {
        write_image(&images.join(format!("{scene}_{variant}.ppm")), |w| write_ppm(display, w))?;
        write_image(&images.join(format!("{scene}_{variant}.pfm")), |w| write_pfm(linear, w))?;
    }
    let r = &outcome.report;
    write_file(&out.join("report.csv"), emit_csv(r).as_bytes())?;
    write_file(&out.join("report.md"), emit_markdown(r).as_bytes())?;
    let lines: String = r.cells.iter().map(|c| json_line(c) + "\n").collect();
    write_file(&out.join("scores.jsonl"), lines.as_bytes())?;
    write_file(&out.join("provenance.json"), provenance_json(exp, outcome).as_bytes())?;
    Ok(out)
}

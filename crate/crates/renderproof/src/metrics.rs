//! Metric evaluation on display images and the JSON result line.

use renderproof_core::iqa::{nr_features, nr_score, psnr, ssim, IqaError, NrCalibration, SsimParams};
use renderproof_core::render::{luma, DisplayImage};
use renderproof_core::report::{format_score, MetricId, MetricScore};

/// Scores `test` under `metric`. Full-reference metrics compare luma against
/// `reference`; `nrq` looks at `test` alone.
pub fn score(
    metric: &MetricId,
    reference: &DisplayImage,
    test: &DisplayImage,
    calibration: &NrCalibration,
) -> Result<f64, IqaError> {
    match metric {
        MetricId::Psnr => psnr(&luma(reference), &luma(test)),
        MetricId::Ssim => ssim(&luma(reference), &luma(test), &SsimParams::default()),
        MetricId::Nrq => nr_score(&nr_features(test)?, calibration),
        MetricId::External(name) => panic!("metric {name} is computed outside this tool"),
    }
}

/// Parses a comma-separated metric list such as `psnr,ssim,nrq`.
pub fn parse_metric_list(list: &str) -> Result<Vec<MetricId>, String> {
    let mut out: Vec<MetricId> = Vec::new();
    for name in list.split(',').map(str::trim) {
        let m = MetricId::parse(name)
            .ok_or_else(|| format!("unknown metric {name:?} (expected psnr, ssim or nrq)"))?;
        if out.contains(&m) {
            return Err(format!("metric {name:?} listed twice"));
        }
        out.push(m);
    }
    Ok(out)
}

fn number(v: f64) -> String {
    if v.is_finite() {
        format_score(v)
    } else {
        serde_json::to_string(&format_score(v)).expect("string")
    }
}

/// `{"metric","scene","variant","raw","normalized"}` on one line, with four
/// decimals and infinities written as strings such as `"inf"`.
pub fn json_line(cell: &MetricScore) -> String {
    let s = |v: &str| serde_json::to_string(v).expect("string");
    format!(
        "{{\"metric\":{},\"scene\":{},\"variant\":{},\"raw\":{},\"normalized\":{}}}",
        s(cell.metric.id()),
        s(&cell.scene),
        s(&cell.variant),
        number(cell.raw),
        cell.normalized.map_or_else(|| "null".to_owned(), number)
    )
}

//! Multi-threaded rendering and baking.
//!
//! Pixels and texels are pure functions of their coordinates, so the work is
//! split freely across threads and the result matches the sequential path
//! bit for bit.

use rayon::prelude::*;
use rayon::ThreadPool;

use renderproof_core::render::{
    BakeError, BakeSettings, Baker, LightmapSet, LinearImage, RenderError, RenderSettings,
    Renderer,
};
use renderproof_core::scene::Scene;

pub const THREADS_VAR: &str = "RENDERPROOF_THREADS";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{THREADS_VAR} must be a positive integer, got {0:?}")]
pub struct ThreadsError(pub String);

/// Worker cap from `RENDERPROOF_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>, ThreadsError> {
    match std::env::var(THREADS_VAR) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(v)) => Err(ThreadsError(v.to_string_lossy().into())),
        Ok(v) => parse_threads(&v).map(Some),
    }
}

pub fn parse_threads(v: &str) -> Result<usize, ThreadsError> {
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(ThreadsError(v.to_owned())),
    }
}

/// Pool with `threads` workers, or one per core when `None`.
pub fn pool(threads: Option<usize>) -> ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool")
}

/// Renders rows in parallel on `pool`.
pub fn render_parallel(
    pool: &ThreadPool,
    scene: &Scene,
    settings: &RenderSettings,
    lightmaps: Option<&LightmapSet>,
) -> Result<LinearImage, RenderError> {
    let renderer = Renderer::new(scene, *settings, lightmaps)?;
    let mut img = LinearImage::new(renderer.width(), renderer.height());
    let width = renderer.width() as usize;
    pool.install(|| {
        img.pixels
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(y, row)| renderer.render_row(y as u32, row));
    });
    Ok(img)
}

/// Bakes texels in parallel on `pool`.
pub fn bake_parallel(
    pool: &ThreadPool,
    scene: &Scene,
    settings: &BakeSettings,
) -> Result<LightmapSet, BakeError> {
    let baker = Baker::new(scene, *settings)?;
    let jobs: Vec<(usize, usize)> = (0..baker.entry_count())
        .flat_map(|k| (0..baker.texel_count(k)).map(move |t| (k, t)))
        .collect();
    let values: Vec<Option<[f32; 3]>> =
        pool.install(|| jobs.par_iter().map(|&(k, t)| baker.texel(k, t)).collect());
    let mut values = values.into_iter();
    let texels = (0..baker.entry_count())
        .map(|k| values.by_ref().take(baker.texel_count(k)).collect())
        .collect();
    Ok(baker.assemble(texels))
}

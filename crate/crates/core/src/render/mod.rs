//! Image synthesis under direct, path-traced and baked illumination.

mod bake;
pub(crate) mod geometry;
mod image;
mod integrator;

use alloc::vec::Vec;
use core::fmt;

pub use bake::{bake_lightmaps, grid_size, BakeError, BakeSettings, Baker, LightmapEntry, LightmapSet};
pub use image::{
    encode_channel, encode_display, linear_luminance, luma, DisplayImage, LinearImage,
};

use crate::math::{tan, Vec3, PI};
use crate::rng::Sampler;
use crate::scene::{validate_scene, Camera, Scene, Violation};
use geometry::Ray;
use integrator::{PathState, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Emission plus one bounce of light from emitters and the environment.
    Direct,
    /// Path tracing up to `max_bounces`.
    Gi,
    /// Diffuse light from baked lightmaps, glossy lobe traced live.
    Baked,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Direct => "direct",
            Mode::Gi => "gi",
            Mode::Baked => "baked",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "direct" => Some(Mode::Direct),
            "gi" => Some(Mode::Gi),
            "baked" => Some(Mode::Baked),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderSettings {
    pub mode: Mode,
    pub samples_per_pixel: u32,
    /// 0 renders emission and environment only; `Direct` clamps this to 1.
    pub max_bounces: u32,
    pub seed: u64,
    /// Multiplier applied by `encode_display`.
    pub exposure: f64,
}

impl RenderSettings {
    pub fn new(mode: Mode, samples_per_pixel: u32, max_bounces: u32, seed: u64) -> Self {
        RenderSettings {
            mode,
            samples_per_pixel,
            max_bounces,
            seed,
            exposure: 1.0,
        }
    }

    pub fn check(&self) -> Result<(), RenderError> {
        if self.samples_per_pixel == 0 {
            return Err(RenderError::Settings("samples_per_pixel must be >= 1"));
        }
        if !(self.exposure > 0.0 && self.exposure.is_finite()) {
            return Err(RenderError::Settings("exposure must be > 0"));
        }
        Ok(())
    }

    fn effective_bounces(&self) -> u32 {
        match self.mode {
            Mode::Direct => self.max_bounces.min(1),
            Mode::Gi | Mode::Baked => self.max_bounces,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RenderError {
    InvalidScene(Vec<Violation>),
    Settings(&'static str),
    MissingLightmaps,
    LightmapMismatch(alloc::string::String),
}

impl fmt::Display for RenderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenderError::InvalidScene(v) => {
                f.write_str("invalid scene: ")?;
                for (i, violation) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{violation}")?;
                }
                Ok(())
            }
            RenderError::Settings(msg) => write!(f, "invalid render settings: {msg}"),
            RenderError::MissingLightmaps => f.write_str("baked mode requires lightmaps"),
            RenderError::LightmapMismatch(msg) => write!(f, "lightmap/primitive mismatch: {msg}"),
        }
    }
}

impl core::error::Error for RenderError {}

struct CameraFrame {
    position: Vec3,
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    half_width: f64,
    half_height: f64,
    width: u32,
    height: u32,
}

impl CameraFrame {
    fn new(c: &Camera) -> Self {
        let forward = (c.look_at - c.position).normalized();
        let right = forward.cross(c.up).normalized();
        let up = right.cross(forward);
        let half_height = tan(c.vertical_fov * PI / 360.0);
        CameraFrame {
            position: c.position,
            forward,
            right,
            up,
            half_width: half_height * c.width as f64 / c.height as f64,
            half_height,
            width: c.width,
            height: c.height,
        }
    }

    fn ray(&self, px: f64, py: f64) -> Ray {
        let sx = (2.0 * px / self.width as f64 - 1.0) * self.half_width;
        let sy = (1.0 - 2.0 * py / self.height as f64) * self.half_height;
        Ray {
            origin: self.position,
            dir: (self.forward + self.right * sx + self.up * sy).normalized(),
        }
    }
}

/// A scene prepared for rendering. Pixels are independent pure functions of
/// their coordinates, so any partition of the image across workers yields the
/// same bits as `render`.
pub struct Renderer<'a> {
    world: World,
    frame: CameraFrame,
    settings: RenderSettings,
    lightmaps: Option<(&'a LightmapSet, Vec<Option<usize>>)>,
}

impl<'a> Renderer<'a> {
    pub fn new(
        scene: &Scene,
        settings: RenderSettings,
        lightmaps: Option<&'a LightmapSet>,
    ) -> Result<Self, RenderError> {
        let violations = validate_scene(scene);
        if !violations.is_empty() {
            return Err(RenderError::InvalidScene(violations));
        }
        settings.check()?;
        let world = World::new(scene);
        let lightmaps = if settings.mode == Mode::Baked {
            let set = lightmaps.ok_or(RenderError::MissingLightmaps)?;
            let index = set.index_for(scene).map_err(RenderError::LightmapMismatch)?;
            for (i, slot) in index.iter().enumerate() {
                if slot.is_none() && !(world.surfaces[i].emission.max_component() > 0.0) {
                    return Err(RenderError::LightmapMismatch(alloc::format!(
                        "primitive {i} is not emissive and has no lightmap"
                    )));
                }
            }
            Some((set, index))
        } else {
            None
        };
        Ok(Renderer {
            world,
            frame: CameraFrame::new(&scene.camera),
            settings,
            lightmaps,
        })
    }

    pub fn width(&self) -> u32 {
        self.frame.width
    }

    pub fn height(&self) -> u32 {
        self.frame.height
    }

    /// Mean of `samples_per_pixel` path samples for pixel `(x, y)`.
    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        let spp = self.settings.samples_per_pixel;
        let stream = y as u64 * self.frame.width as u64 + x as u64;
        let mut sum = Vec3::ZERO;
        for s in 0..spp {
            let mut sampler = Sampler::new(self.settings.seed, stream, s as u64);
            sum += self.sample(x, y, &mut sampler);
        }
        let mean = sum / spp as f64;
        [mean.x as f32, mean.y as f32, mean.z as f32]
    }

    /// Fills `row` (length = width) with scanline `y`.
    pub fn render_row(&self, y: u32, row: &mut [[f32; 3]]) {
        for (x, px) in row.iter_mut().enumerate() {
            *px = self.pixel(x as u32, y);
        }
    }

    pub fn render(&self) -> LinearImage {
        let mut img = LinearImage::new(self.frame.width, self.frame.height);
        for (y, row) in img
            .pixels
            .chunks_mut(self.frame.width as usize)
            .enumerate()
        {
            self.render_row(y as u32, row);
        }
        img
    }

    fn sample(&self, x: u32, y: u32, sampler: &mut Sampler) -> Vec3 {
        sampler.start_bounce(u32::MAX);
        let (jx, jy) = sampler.next_2d();
        let ray = self.frame.ray(x as f64 + jx, y as f64 + jy);
        match &self.lightmaps {
            None => self.world.trace(
                ray,
                sampler,
                0,
                self.settings.effective_bounces(),
                PathState::camera(),
            ),
            Some((set, index)) => self.baked_sample(ray, set, index, sampler),
        }
    }

    fn baked_sample(
        &self,
        ray: Ray,
        set: &LightmapSet,
        index: &[Option<usize>],
        sampler: &mut Sampler,
    ) -> Vec3 {
        let Some(hit) = self.world.intersect(&ray) else {
            return self.world.environment();
        };
        let s = self.world.surfaces[hit.shape];
        let mut radiance = s.emission;
        if self.settings.max_bounces == 0 {
            return radiance;
        }
        if let Some(entry) = index[hit.shape] {
            let irradiance = set.entries[entry].lookup(hit.uv.0, hit.uv.1);
            radiance += s.albedo.hadamard(irradiance) * ((1.0 - s.specular) / PI);
        }
        if s.specular > 0.0 {
            let n = if hit.normal.dot(ray.dir) < 0.0 {
                hit.normal
            } else {
                -hit.normal
            };
            sampler.start_bounce(0);
            if let Some(dir) = self.world.glossy_direction(ray.dir, n, s.roughness, sampler) {
                let reflected = Ray {
                    origin: integrator::offset(hit.point, n),
                    dir,
                };
                sampler.start_bounce(1);
                let incoming = self.world.direct_at(&reflected, sampler);
                radiance += s.albedo.hadamard(incoming) * s.specular;
            }
        }
        radiance
    }
}

/// Renders the whole image sequentially.
pub fn render(
    scene: &Scene,
    settings: &RenderSettings,
    lightmaps: Option<&LightmapSet>,
) -> Result<LinearImage, RenderError> {
    Ok(Renderer::new(scene, *settings, lightmaps)?.render())
}

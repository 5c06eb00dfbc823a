//! Precomputed diffuse irradiance on planar primitives.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::integrator::World;
use crate::math::{ceil, floor, Vec3, PI};
use crate::rng::Sampler;
use crate::scene::{validate_scene, Geometry, Scene, Violation};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BakeSettings {
    /// World units per texel edge.
    pub texel_size: f64,
    pub samples_per_texel: u32,
    pub max_bounces: u32,
    pub seed: u64,
}

impl BakeSettings {
    pub fn check(&self) -> Result<(), BakeError> {
        if !(self.texel_size > 0.0 && self.texel_size.is_finite()) {
            return Err(BakeError::Settings("texel_size must be > 0"));
        }
        if self.samples_per_texel == 0 {
            return Err(BakeError::Settings("samples_per_texel must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BakeError {
    InvalidScene(Vec<Violation>),
    Settings(&'static str),
    NoBakeablePrimitive,
}

impl fmt::Display for BakeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BakeError::InvalidScene(v) => {
                f.write_str("invalid scene: ")?;
                for (i, violation) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{violation}")?;
                }
                Ok(())
            }
            BakeError::Settings(msg) => write!(f, "invalid bake settings: {msg}"),
            BakeError::NoBakeablePrimitive => {
                f.write_str("scene has no quad or triangle to bake")
            }
        }
    }
}

impl core::error::Error for BakeError {}

/// Texel grid of one primitive; `None` for spheres.
///
/// Each axis gets `ceil(extent / texel_size)` texels (at least one); triangles
/// use the parallelogram spanned by `p1 - p0` and `p2 - p0`.
pub fn grid_size(geometry: &Geometry, texel_size: f64) -> Option<(u32, u32)> {
    let (u, v) = match *geometry {
        Geometry::Sphere { .. } => return None,
        Geometry::Quad { edge_u, edge_v, .. } => (edge_u, edge_v),
        Geometry::Triangle { p0, p1, p2 } => (p1 - p0, p2 - p0),
    };
    let cells = |len: f64| (ceil(len / texel_size) as u32).max(1);
    Some((cells(u.length()), cells(v.length())))
}

fn texel_used(triangle: bool, i: u32, j: u32, w: u32, h: u32) -> bool {
    !triangle || (i as f64 / w as f64 + j as f64 / h as f64) < 1.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct LightmapEntry {
    pub primitive: u32,
    pub width: u32,
    pub height: u32,
    /// One flag per texel, row-major; false for texels outside a triangle.
    pub used: Vec<bool>,
    /// Incident irradiance per texel, row-major along `edge_v`.
    pub irradiance: Vec<[f32; 3]>,
}

impl LightmapEntry {
    fn texel_index(&self, a: f64, b: f64) -> (u32, u32) {
        let clamp = |x: f64, n: u32| (floor(x * n as f64).max(0.0) as u32).min(n - 1);
        (clamp(a, self.width), clamp(b, self.height))
    }

    /// Irradiance at parametric coordinates, read from the containing texel
    /// or, if that texel is unused, the nearest used one.
    pub fn lookup(&self, a: f64, b: f64) -> Vec3 {
        let (i, j) = self.texel_index(a, b);
        let k = (j * self.width + i) as usize;
        let k = if self.used[k] {
            k
        } else {
            self.nearest_used(a, b).unwrap_or(k)
        };
        let p = self.irradiance[k];
        Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)
    }

    fn nearest_used(&self, a: f64, b: f64) -> Option<usize> {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for j in 0..self.height {
            for i in 0..self.width {
                let k = (j * self.width + i) as usize;
                if !self.used[k] {
                    continue;
                }
                let da = (i as f64 + 0.5) / self.width as f64 - a;
                let db = (j as f64 + 0.5) / self.height as f64 - b;
                let d = da * da + db * db;
                if d < best_d {
                    best_d = d;
                    best = Some(k);
                }
            }
        }
        best
    }

    fn check_shape(&self) -> Result<(), String> {
        let n = self.width as usize * self.height as usize;
        if self.width == 0 || self.height == 0 {
            return Err(format!("primitive {}: empty grid", self.primitive));
        }
        if self.used.len() != n || self.irradiance.len() != n {
            return Err(format!("primitive {}: texel count mismatch", self.primitive));
        }
        if self
            .irradiance
            .iter()
            .any(|p| p.iter().any(|c| !c.is_finite() || *c < 0.0))
        {
            return Err(format!(
                "primitive {}: irradiance must be finite and >= 0",
                self.primitive
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LightmapSet {
    pub entries: Vec<LightmapEntry>,
    /// Settings used to bake; absent when loaded from a file.
    pub settings: Option<BakeSettings>,
}

impl LightmapSet {
    /// Per-primitive entry index, after checking the set fits `scene`.
    pub fn index_for(&self, scene: &Scene) -> Result<Vec<Option<usize>>, String> {
        let mut index = vec![None; scene.primitives.len()];
        for (k, e) in self.entries.iter().enumerate() {
            e.check_shape()?;
            let p = e.primitive as usize;
            let prim = scene.primitives.get(p).ok_or_else(|| {
                format!(
                    "entry {k} names primitive {p}, scene has {}",
                    scene.primitives.len()
                )
            })?;
            if index[p].is_some() {
                return Err(format!("primitive {p} has more than one entry"));
            }
            if matches!(prim.geometry, Geometry::Sphere { .. }) {
                return Err(format!("primitive {p} is a sphere and cannot be lightmapped"));
            }
            if let Some(dims) = self
                .settings
                .and_then(|s| grid_size(&prim.geometry, s.texel_size))
            {
                if dims != (e.width, e.height) {
                    return Err(format!(
                        "primitive {p}: grid {}x{} does not match expected {}x{}",
                        e.width, e.height, dims.0, dims.1
                    ));
                }
            }
            index[p] = Some(k);
        }
        Ok(index)
    }

    /// Copy of `scene` with each primitive's `lightmap_id` pointing at its
    /// entry in this set.
    pub fn attach_ids(&self, scene: &Scene) -> Result<Scene, String> {
        let index = self.index_for(scene)?;
        let mut out = scene.clone();
        for (p, k) in out.primitives.iter_mut().zip(index) {
            p.lightmap_id = k.map(|k| k as u32);
        }
        Ok(out)
    }
}

struct Target {
    primitive: usize,
    width: u32,
    height: u32,
    triangle: bool,
}

/// A scene prepared for baking. Texels are independent pure functions of
/// `(entry, texel)`, so they may be evaluated in any order or in parallel.
pub struct Baker {
    world: World,
    settings: BakeSettings,
    targets: Vec<Target>,
}

impl Baker {
    /// Unlit scenes are accepted and bake to black.
    pub fn new(scene: &Scene, settings: BakeSettings) -> Result<Self, BakeError> {
        let violations: Vec<_> = validate_scene(scene)
            .into_iter()
            .filter(|v| *v != Violation::NoEmitter)
            .collect();
        if !violations.is_empty() {
            return Err(BakeError::InvalidScene(violations));
        }
        settings.check()?;
        let targets: Vec<_> = scene
            .primitives
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                grid_size(&p.geometry, settings.texel_size).map(|(width, height)| Target {
                    primitive: i,
                    width,
                    height,
                    triangle: matches!(p.geometry, Geometry::Triangle { .. }),
                })
            })
            .collect();
        if targets.is_empty() {
            return Err(BakeError::NoBakeablePrimitive);
        }
        Ok(Baker {
            world: World::new(scene),
            settings,
            targets,
        })
    }

    pub fn entry_count(&self) -> usize {
        self.targets.len()
    }

    pub fn texel_count(&self, entry: usize) -> usize {
        let t = &self.targets[entry];
        t.width as usize * t.height as usize
    }

    /// Irradiance of texel `texel` (row-major) of entry `entry`; `None` if the
    /// texel lies outside its triangle.
    pub fn texel(&self, entry: usize, texel: usize) -> Option<[f32; 3]> {
        let t = &self.targets[entry];
        let (i, j) = (texel as u32 % t.width, texel as u32 / t.width);
        if !texel_used(t.triangle, i, j, t.width, t.height) {
            return None;
        }
        let shape = &self.world.shapes[t.primitive];
        let stream = ((t.primitive as u64) << 32) | texel as u64;
        let (du, dv) = (1.0 / t.width as f64, 1.0 / t.height as f64);
        let (a0, b0) = (i as f64 * du, j as f64 * dv);
        let mut sum = Vec3::ZERO;
        for s in 0..self.settings.samples_per_texel {
            let mut sampler = Sampler::new(self.settings.seed, stream, s as u64);
            sampler.start_bounce(u32::MAX);
            let mut ab = (a0, b0);
            for _ in 0..16 {
                let (r1, r2) = sampler.next_2d();
                let cand = (a0 + r1 * du, b0 + r2 * dv);
                if !t.triangle || cand.0 + cand.1 <= 1.0 {
                    ab = cand;
                    break;
                }
            }
            let (x, n) = shape
                .point_at(ab.0, ab.1)
                .expect("only planar shapes are baked");
            sum += self
                .world
                .receiver_radiance(x, n, &mut sampler, self.settings.max_bounces);
        }
        let e = sum * (PI / self.settings.samples_per_texel as f64);
        Some([e.x as f32, e.y as f32, e.z as f32])
    }

    /// Assembles per-entry texel results (as returned by `texel`) into a set.
    pub fn assemble(&self, texels: Vec<Vec<Option<[f32; 3]>>>) -> LightmapSet {
        let entries = self
            .targets
            .iter()
            .zip(texels)
            .map(|(t, values)| LightmapEntry {
                primitive: t.primitive as u32,
                width: t.width,
                height: t.height,
                used: values.iter().map(Option::is_some).collect(),
                irradiance: values.into_iter().map(|v| v.unwrap_or([0.0; 3])).collect(),
            })
            .collect();
        LightmapSet {
            entries,
            settings: Some(self.settings),
        }
    }

    pub fn bake(&self) -> LightmapSet {
        let texels = (0..self.entry_count())
            .map(|k| (0..self.texel_count(k)).map(|t| self.texel(k, t)).collect())
            .collect();
        self.assemble(texels)
    }
}

/// Bakes every quad and triangle sequentially.
pub fn bake_lightmaps(scene: &Scene, settings: &BakeSettings) -> Result<LightmapSet, BakeError> {
    Ok(Baker::new(scene, *settings)?.bake())
}

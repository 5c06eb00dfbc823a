//! Unidirectional path tracing with next-event estimation.
//!
//! Bounce accounting: a camera ray's first hit is vertex 1. Light reflected
//! at vertex `k` has bounced `k` times, so a path limited to `max_bounces`
//! reflects (next-event sample plus continuation ray) only at vertices
//! `1..=max_bounces`. Emission seen directly is bounce 0.

use alloc::vec::Vec;

use super::geometry::{cosine_hemisphere, reflect, uniform_cone, Hit, PlaneHit, Ray, Shape};
use crate::math::{Vec3, PI};
use crate::rng::Sampler;
use crate::scene::Scene;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Surface {
    pub albedo: Vec3,
    pub roughness: f64,
    pub specular: f64,
    pub emission: Vec3,
}

impl Surface {
    fn emissive(&self) -> bool {
        self.emission.max_component() > 0.0
    }
}

/// State carried along a path between vertices.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PathState {
    pub throughput: Vec3,
    /// Solid-angle pdf with which the diffuse lobe produced the current ray,
    /// or `None` when emission at the next hit must be counted in full
    /// (camera rays and glossy continuations).
    pub diffuse_pdf: Option<f64>,
}

impl PathState {
    pub fn camera() -> Self {
        PathState {
            throughput: Vec3::ONE,
            diffuse_pdf: None,
        }
    }
}

pub(crate) struct LightSample {
    pub point: Vec3,
    pub normal: Vec3,
    pub emission: Vec3,
}

/// Scene compiled for intersection and shading.
pub(crate) struct World {
    pub shapes: Vec<Shape>,
    pub surfaces: Vec<Surface>,
    /// Planar shapes with their index into `shapes`.
    planes: Vec<(PlaneHit, usize)>,
    /// Indices of sphere shapes.
    spheres: Vec<usize>,
    emitters: Vec<usize>,
    emitter_cdf: Vec<f64>,
    emitter_area: f64,
    environment: Vec3,
}

#[inline]
pub(crate) fn offset(p: Vec3, n: Vec3) -> Vec3 {
    let scale = 1.0 + p.x.abs().max(p.y.abs()).max(p.z.abs());
    p + n * (1e-7 * scale)
}

#[inline]
fn power_heuristic(a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    a2 / (a2 + b2)
}

impl World {
    /// Expects a scene that passed `validate_scene` (emitter check aside).
    pub fn new(scene: &Scene) -> Self {
        let mut shapes = Vec::with_capacity(scene.primitives.len());
        let mut surfaces = Vec::with_capacity(scene.primitives.len());
        let mut emitters = Vec::new();
        let mut emitter_cdf = Vec::new();
        let mut emitter_area = 0.0;
        for (i, p) in scene.primitives.iter().enumerate() {
            let shape = Shape::from_geometry(&p.geometry);
            let m = scene
                .material(&p.material)
                .expect("validated scene resolves every material");
            let surface = Surface {
                albedo: m.albedo,
                roughness: m.roughness,
                specular: m.specular,
                emission: m.emission,
            };
            if surface.emissive() {
                emitter_area += shape.area();
                emitters.push(i);
                emitter_cdf.push(emitter_area);
            }
            shapes.push(shape);
            surfaces.push(surface);
        }
        let mut planes = Vec::new();
        let mut spheres = Vec::new();
        for (i, s) in shapes.iter().enumerate() {
            match PlaneHit::new(s) {
                Some(p) => planes.push((p, i)),
                None => spheres.push(i),
            }
        }
        World {
            shapes,
            surfaces,
            planes,
            spheres,
            emitters,
            emitter_cdf,
            emitter_area,
            environment: scene.environment_radiance,
        }
    }

    pub fn environment(&self) -> Vec3 {
        self.environment
    }

    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        let mut best = usize::MAX;
        let mut t_max = f64::INFINITY;
        let (mut best_a, mut best_b) = (0.0, 0.0);
        for &(ref p, i) in &self.planes {
            let (inside, t, a, b) = p.test(ray, t_max);
            if inside {
                t_max = t;
                best = i;
                best_a = a;
                best_b = b;
            }
        }
        for &i in &self.spheres {
            if let Some((t, _, _)) = self.shapes[i].hit(ray, 0.0, t_max) {
                t_max = t;
                best = i;
                best_a = 0.0;
                best_b = 0.0;
            }
        }
        if best == usize::MAX {
            return None;
        }
        let point = ray.at(t_max);
        Some(Hit {
            t: t_max,
            point,
            normal: self.shapes[best].normal_at(point),
            uv: (best_a, best_b),
            shape: best,
        })
    }

    fn occluded(&self, from: Vec3, to: Vec3) -> bool {
        let d = to - from;
        let dist = d.length();
        let ray = Ray {
            origin: from,
            dir: d / dist,
        };
        let limit = dist * (1.0 - 1e-7);
        let mut blocked = false;
        for (p, _) in &self.planes {
            blocked |= p.test(&ray, limit).0;
        }
        blocked
            || self
                .spheres
                .iter()
                .any(|&i| self.shapes[i].hit(&ray, 0.0, limit).is_some())
    }

    /// Density of `sample_light` per unit area.
    fn light_area_pdf(&self) -> f64 {
        1.0 / self.emitter_area
    }

    /// Uniform-area sample over the union of emissive primitives.
    pub fn sample_light(&self, sampler: &mut Sampler) -> Option<LightSample> {
        if self.emitters.is_empty() {
            return None;
        }
        let pick = sampler.next_f64() * self.emitter_area;
        let k = self
            .emitter_cdf
            .partition_point(|&c| c <= pick)
            .min(self.emitters.len() - 1);
        let shape = self.emitters[k];
        let (r1, r2) = sampler.next_2d();
        let (point, normal) = self.shapes[shape].sample_point(r1, r2);
        Some(LightSample {
            point,
            normal,
            emission: self.surfaces[shape].emission,
        })
    }

    /// Next-event estimate of light reflected by a Lambertian lobe with
    /// reflectance `weight` (already scaled by the lobe probability) at `x`.
    /// `mis_lobe_pdf` is the probability of choosing the diffuse lobe, or
    /// `None` to skip multiple-importance weighting.
    fn next_event(
        &self,
        x: Vec3,
        n: Vec3,
        weight: Vec3,
        mis_lobe_pdf: Option<f64>,
        sampler: &mut Sampler,
    ) -> Vec3 {
        let Some(light) = self.sample_light(sampler) else {
            return Vec3::ZERO;
        };
        let to_light = light.point - x;
        let dist2 = to_light.length_squared();
        if dist2 == 0.0 {
            return Vec3::ZERO;
        }
        let wi = to_light / crate::math::sqrt(dist2);
        let cos_x = n.dot(wi);
        let cos_y = light.normal.dot(wi).abs();
        if cos_x <= 0.0 || cos_y <= 0.0 {
            return Vec3::ZERO;
        }
        let origin = offset(x, n);
        if self.occluded(origin, light.point) {
            return Vec3::ZERO;
        }
        let pdf_light = self.light_area_pdf() * dist2 / cos_y;
        let mis = match mis_lobe_pdf {
            Some(lobe) => power_heuristic(pdf_light, lobe * cos_x / PI),
            None => 1.0,
        };
        weight.hadamard(light.emission) * (cos_x / PI / pdf_light * mis)
    }

    /// Radiance arriving along `ray`. `depth` is the index of the vertex the
    /// ray is about to find, minus one.
    pub fn trace(
        &self,
        mut ray: Ray,
        sampler: &mut Sampler,
        mut depth: u32,
        max_bounces: u32,
        mut state: PathState,
    ) -> Vec3 {
        let mut radiance = Vec3::ZERO;
        loop {
            sampler.start_bounce(depth);
            let Some(hit) = self.intersect(&ray) else {
                radiance += state.throughput.hadamard(self.environment);
                break;
            };
            let surface = self.surfaces[hit.shape];
            if surface.emissive() {
                let w = match state.diffuse_pdf {
                    None => 1.0,
                    Some(pdf_bsdf) => {
                        let cos_y = hit.normal.dot(ray.dir).abs();
                        if cos_y <= 0.0 {
                            0.0
                        } else {
                            let pdf_light = self.light_area_pdf() * hit.t * hit.t / cos_y;
                            power_heuristic(pdf_bsdf, pdf_light)
                        }
                    }
                };
                radiance += state.throughput.hadamard(surface.emission) * w;
            }
            if depth >= max_bounces {
                break;
            }
            depth += 1;

            let n = if hit.normal.dot(ray.dir) < 0.0 {
                hit.normal
            } else {
                -hit.normal
            };
            let diffuse = 1.0 - surface.specular;
            if diffuse > 0.0 {
                let weight = state.throughput.hadamard(surface.albedo) * diffuse;
                radiance += self.next_event(hit.point, n, weight, Some(diffuse), sampler);
            }

            let lobe = sampler.next_f64();
            let (r1, r2) = sampler.next_2d();
            let dir = if lobe < surface.specular {
                let mirror = reflect(ray.dir, n);
                let d = uniform_cone(mirror, surface.roughness * PI * 0.5, r1, r2);
                if d.dot(n) <= 0.0 {
                    break;
                }
                state.diffuse_pdf = None;
                d
            } else {
                let d = cosine_hemisphere(n, r1, r2);
                state.diffuse_pdf = Some(diffuse * d.dot(n).max(0.0) / PI);
                d
            };
            state.throughput = state.throughput.hadamard(surface.albedo);
            if state.throughput.max_component() <= 0.0 {
                break;
            }
            ray = Ray {
                origin: offset(hit.point, n),
                dir,
            };
        }
        radiance
    }

    /// Light reflected toward the viewer by a white Lambertian receiver at
    /// `x` facing `n`, with the receiver counted as the first bounce. Equals
    /// irradiance / pi.
    pub fn receiver_radiance(
        &self,
        x: Vec3,
        n: Vec3,
        sampler: &mut Sampler,
        max_bounces: u32,
    ) -> Vec3 {
        if max_bounces == 0 {
            return Vec3::ZERO;
        }
        sampler.start_bounce(0);
        let mut radiance = self.next_event(x, n, Vec3::ONE, Some(1.0), sampler);
        let (r1, r2) = sampler.next_2d();
        let dir = cosine_hemisphere(n, r1, r2);
        let state = PathState {
            throughput: Vec3::ONE,
            diffuse_pdf: Some(dir.dot(n).max(0.0) / PI),
        };
        let ray = Ray {
            origin: offset(x, n),
            dir,
        };
        radiance += self.trace(ray, sampler, 1, max_bounces, state);
        radiance
    }

    /// Emission plus single-sample direct lighting of the diffuse lobe at a
    /// hit; used for glossy reflections in baked mode.
    pub fn direct_at(&self, ray: &Ray, sampler: &mut Sampler) -> Vec3 {
        let Some(hit) = self.intersect(ray) else {
            return self.environment;
        };
        let s = self.surfaces[hit.shape];
        let n = if hit.normal.dot(ray.dir) < 0.0 {
            hit.normal
        } else {
            -hit.normal
        };
        let weight = s.albedo * (1.0 - s.specular);
        s.emission + self.next_event(hit.point, n, weight, None, sampler)
    }

    /// Glossy lobe direction for a view ray hitting a surface with normal `n`.
    pub fn glossy_direction(
        &self,
        incoming: Vec3,
        n: Vec3,
        roughness: f64,
        sampler: &mut Sampler,
    ) -> Option<Vec3> {
        let (r1, r2) = sampler.next_2d();
        let d = uniform_cone(reflect(incoming, n), roughness * PI * 0.5, r1, r2);
        (d.dot(n) > 0.0).then_some(d)
    }
}


//! Ray/primitive intersection and area sampling.

use crate::math::{sincos, sqrt, Vec3, PI};
use crate::scene::Geometry;

#[derive(Clone, Copy, Debug)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit length.
    pub dir: Vec3,
}

impl Ray {
    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    /// Geometric unit normal, not flipped toward the ray.
    pub normal: Vec3,
    /// Parametric surface coordinates; `(0, 0)` for spheres.
    pub uv: (f64, f64),
    pub shape: usize,
}

/// A primitive in intersection-ready form.
#[derive(Clone, Debug)]
pub enum Shape {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    /// Parallelogram `origin + a*u + b*v`, `a, b` in `[0, 1]`; triangles keep
    /// only the half with `a + b <= 1`.
    Planar {
        origin: Vec3,
        u: Vec3,
        v: Vec3,
        /// `u x v`, unnormalized.
        cross: Vec3,
        /// Dual vectors: `a = (p - origin) . dual_u`, likewise for `b`.
        dual_u: Vec3,
        dual_v: Vec3,
        normal: Vec3,
        triangle: bool,
    },
}

impl Shape {
    pub fn from_geometry(g: &Geometry) -> Shape {
        match *g {
            Geometry::Sphere { center, radius } => Shape::Sphere { center, radius },
            Geometry::Quad {
                origin,
                edge_u,
                edge_v,
            } => Shape::planar(origin, edge_u, edge_v, false),
            Geometry::Triangle { p0, p1, p2 } => Shape::planar(p0, p1 - p0, p2 - p0, true),
        }
    }

    fn planar(origin: Vec3, u: Vec3, v: Vec3, triangle: bool) -> Shape {
        let cross = u.cross(v);
        let len2 = cross.length_squared();
        Shape::Planar {
            origin,
            u,
            v,
            cross,
            dual_u: v.cross(cross) / len2,
            dual_v: cross.cross(u) / len2,
            normal: cross / sqrt(len2),
            triangle,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Sphere { radius, .. } => 4.0 * PI * radius * radius,
            Shape::Planar {
                cross, triangle, ..
            } => {
                let a = cross.length();
                if triangle {
                    0.5 * a
                } else {
                    a
                }
            }
        }
    }

    /// Nearest intersection with `t` in `(t_min, t_max)`: `(t, normal, uv)`.
    #[cfg(test)]
    pub fn intersect(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<(f64, Vec3, (f64, f64))> {
        let (t, a, b) = self.hit(ray, t_min, t_max)?;
        Some((t, self.normal_at(ray.at(t)), (a, b)))
    }

    /// Distance and parametric coordinates of the nearest hit in `(t_min, t_max)`.
    #[inline(always)]
    pub fn hit(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<(f64, f64, f64)> {
        match *self {
            Shape::Sphere { center, radius } => {
                let oc = ray.origin - center;
                let half_b = oc.dot(ray.dir);
                let c = oc.length_squared() - radius * radius;
                let disc = half_b * half_b - c;
                if disc < 0.0 {
                    return None;
                }
                let root = sqrt(disc);
                let mut t = -half_b - root;
                if t <= t_min || t >= t_max {
                    t = -half_b + root;
                    if t <= t_min || t >= t_max {
                        return None;
                    }
                }
                Some((t, 0.0, 0.0))
            }
            Shape::Planar {
                origin,
                dual_u,
                dual_v,
                normal,
                triangle,
                ..
            } => {
                let denom = normal.dot(ray.dir);
                if denom == 0.0 {
                    return None;
                }
                let t = normal.dot(origin - ray.origin) / denom;
                if t <= t_min || t >= t_max {
                    return None;
                }
                let w = ray.at(t) - origin;
                let a = w.dot(dual_u);
                let b = w.dot(dual_v);
                let inside = if triangle {
                    a >= 0.0 && b >= 0.0 && a + b <= 1.0
                } else {
                    (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)
                };
                inside.then_some((t, a, b))
            }
        }
    }

    /// Geometric normal at a surface point.
    #[inline]
    pub fn normal_at(&self, p: Vec3) -> Vec3 {
        match *self {
            Shape::Sphere { center, radius } => (p - center) / radius,
            Shape::Planar { normal, .. } => normal,
        }
    }

    /// Uniformly distributed surface point and its normal.
    pub fn sample_point(&self, r1: f64, r2: f64) -> (Vec3, Vec3) {
        match *self {
            Shape::Sphere { center, radius } => {
                let z = 1.0 - 2.0 * r1;
                let r = sqrt((1.0 - z * z).max(0.0));
                let (sin_phi, cos_phi) = sincos(2.0 * PI * r2);
                let n = Vec3::new(r * cos_phi, r * sin_phi, z);
                (center + n * radius, n)
            }
            Shape::Planar {
                origin,
                u,
                v,
                normal,
                triangle,
                ..
            } => {
                let (a, b) = if triangle {
                    let s = sqrt(r1);
                    (s * (1.0 - r2), s * r2)
                } else {
                    (r1, r2)
                };
                (origin + u * a + v * b, normal)
            }
        }
    }

    /// Surface point at parametric coordinates (planar shapes only).
    pub fn point_at(&self, a: f64, b: f64) -> Option<(Vec3, Vec3)> {
        match *self {
            Shape::Planar {
                origin, u, v, normal, ..
            } => Some((origin + u * a + v * b, normal)),
            Shape::Sphere { .. } => None,
        }
    }
}

/// Flattened planar primitive for the intersection loop. Bounds tests are
/// evaluated without branches because hit/miss outcomes of random rays are
/// unpredictable.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PlaneHit {
    origin: Vec3,
    normal: Vec3,
    plane_d: f64,
    dual_u: Vec3,
    dual_v: Vec3,
    /// 1 for triangles, 2 for quads (where `a + b <= 2` always holds).
    sum_max: f64,
}

impl PlaneHit {
    pub fn new(shape: &Shape) -> Option<PlaneHit> {
        match *shape {
            Shape::Planar {
                origin,
                dual_u,
                dual_v,
                normal,
                triangle,
                ..
            } => Some(PlaneHit {
                origin,
                normal,
                plane_d: normal.dot(origin),
                dual_u,
                dual_v,
                sum_max: if triangle { 1.0 } else { 2.0 },
            }),
            Shape::Sphere { .. } => None,
        }
    }

    /// `(t, a, b)` with `t` meaningful only when `inside` is true.
    #[inline(always)]
    pub fn test(&self, ray: &Ray, t_max: f64) -> (bool, f64, f64, f64) {
        let t = (self.plane_d - self.normal.dot(ray.origin)) / self.normal.dot(ray.dir);
        let w = ray.at(t) - self.origin;
        let a = w.dot(self.dual_u);
        let b = w.dot(self.dual_v);
        let inside = (t > 0.0)
            & (t < t_max)
            & (a >= 0.0)
            & (b >= 0.0)
            & (a <= 1.0)
            & (b <= 1.0)
            & (a + b <= self.sum_max);
        (inside, t, a, b)
    }
}

/// Cosine-weighted direction around unit normal `n`; pdf is `cos / pi`.
pub fn cosine_hemisphere(n: Vec3, r1: f64, r2: f64) -> Vec3 {
    let r = sqrt(r1);
    let (sin_phi, cos_phi) = sincos(2.0 * PI * r2);
    let (t, b) = n.basis();
    let local_z = sqrt((1.0 - r1).max(0.0));
    (t * (r * cos_phi) + b * (r * sin_phi) + n * local_z).normalized()
}

/// Uniform direction inside the cone of half-angle `half_angle` around unit `axis`.
pub fn uniform_cone(axis: Vec3, half_angle: f64, r1: f64, r2: f64) -> Vec3 {
    let cos_max = crate::math::cos(half_angle);
    let cos_theta = 1.0 - r1 * (1.0 - cos_max);
    let sin_theta = sqrt((1.0 - cos_theta * cos_theta).max(0.0));
    let (sin_phi, cos_phi) = sincos(2.0 * PI * r2);
    let (t, b) = axis.basis();
    (t * (sin_theta * cos_phi) + b * (sin_theta * sin_phi) + axis * cos_theta).normalized()
}

#[inline]
pub fn reflect(d: Vec3, n: Vec3) -> Vec3 {
    d - n * (2.0 * d.dot(n))
}

//! Scene data model, invariant checks and material overrides.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math::Vec3;

/// Linear RGB triple.
pub type Rgb = Vec3;

#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    /// Vertical field of view in degrees, strictly inside (0, 180).
    pub vertical_fov: f64,
    pub width: u32,
    pub height: u32,
}

/// Editable surface appearance.
///
/// Shading is `emission + (1 - specular) * lambert(albedo) + specular * glossy(albedo, roughness)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Material {
    pub name: String,
    pub albedo: Rgb,
    pub roughness: f64,
    pub specular: f64,
    pub emission: Rgb,
}

impl Material {
    pub fn new(name: impl Into<String>, albedo: Rgb, roughness: f64) -> Self {
        Material {
            name: name.into(),
            albedo,
            roughness,
            specular: 0.0,
            emission: Vec3::ZERO,
        }
    }

    pub fn is_emissive(&self) -> bool {
        self.emission.max_component() > 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Sphere { center: Vec3, radius: f64 },
    Quad { origin: Vec3, edge_u: Vec3, edge_v: Vec3 },
    Triangle { p0: Vec3, p1: Vec3, p2: Vec3 },
}

impl Geometry {
    pub fn kind(&self) -> &'static str {
        match self {
            Geometry::Sphere { .. } => "sphere",
            Geometry::Quad { .. } => "quad",
            Geometry::Triangle { .. } => "triangle",
        }
    }

    fn coordinates(&self) -> ([Vec3; 3], Option<f64>) {
        match *self {
            Geometry::Sphere { center, radius } => ([center, center, center], Some(radius)),
            Geometry::Quad {
                origin,
                edge_u,
                edge_v,
            } => ([origin, edge_u, edge_v], None),
            Geometry::Triangle { p0, p1, p2 } => ([p0, p1, p2], None),
        }
    }

    /// Reason the shape has no area, if it is degenerate.
    fn degeneracy(&self) -> Option<&'static str> {
        match *self {
            Geometry::Sphere { radius, .. } => (radius <= 0.0).then_some("radius must be > 0"),
            Geometry::Quad { edge_u, edge_v, .. } => spans_plane(edge_u, edge_v)
                .then_some("edges must be nonzero and linearly independent"),
            Geometry::Triangle { p0, p1, p2 } => {
                spans_plane(p1 - p0, p2 - p0).then_some("points must not be collinear")
            }
        }
    }
}

fn spans_plane(a: Vec3, b: Vec3) -> bool {
    let (la, lb) = (a.length(), b.length());
    la == 0.0 || lb == 0.0 || a.cross(b).length() <= 1e-9 * la * lb
}

#[derive(Clone, Debug, PartialEq)]
pub struct Primitive {
    pub geometry: Geometry,
    pub material: String,
    /// Index into a baked `LightmapSet`, filled by `LightmapSet::attach_ids`.
    pub lightmap_id: Option<u32>,
}

impl Primitive {
    pub fn new(geometry: Geometry, material: impl Into<String>) -> Self {
        Primitive {
            geometry,
            material: material.into(),
            lightmap_id: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub name: String,
    pub camera: Camera,
    pub materials: Vec<Material>,
    pub primitives: Vec<Primitive>,
    pub environment_radiance: Rgb,
}

impl Scene {
    pub fn material(&self, name: &str) -> Option<&Material> {
        self.materials.iter().find(|m| m.name == name)
    }

    pub fn material_index(&self, name: &str) -> Option<usize> {
        self.materials.iter().position(|m| m.name == name)
    }
}

/// Partial material edit; `None` fields are left untouched.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaterialOverride {
    pub target: String,
    pub albedo: Option<Rgb>,
    pub roughness: Option<f64>,
    pub specular: Option<f64>,
    pub emission: Option<Rgb>,
}

impl MaterialOverride {
    /// First broken invariant, if any.
    pub fn check(&self) -> Option<&'static str> {
        if self.albedo.is_none()
            && self.roughness.is_none()
            && self.specular.is_none()
            && self.emission.is_none()
        {
            return Some("override sets no field");
        }
        if self.albedo.is_some_and(|a| !unit_rgb(a)) {
            return Some("albedo out of [0,1]");
        }
        if self.roughness.is_some_and(|r| !unit(r)) {
            return Some("roughness out of [0,1]");
        }
        if self.specular.is_some_and(|s| !unit(s)) {
            return Some("specular out of [0,1]");
        }
        if self.emission.is_some_and(|e| !non_negative_rgb(e)) {
            return Some("emission must be finite and >= 0");
        }
        None
    }
}

fn unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

fn unit_rgb(c: Rgb) -> bool {
    unit(c.x) && unit(c.y) && unit(c.z)
}

fn non_negative_rgb(c: Rgb) -> bool {
    c.is_finite() && c.x >= 0.0 && c.y >= 0.0 && c.z >= 0.0
}

/// One broken scene invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Camera(&'static str),
    EmptyMaterialName { index: usize },
    Material {
        index: usize,
        name: String,
        issue: &'static str,
    },
    DuplicateMaterial { name: String },
    UnresolvedMaterial { primitive: usize, name: String },
    NonFiniteGeometry { primitive: usize },
    Degenerate {
        primitive: usize,
        kind: &'static str,
        issue: &'static str,
    },
    Environment,
    NoEmitter,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Camera(issue) => write!(f, "camera: {issue}"),
            Violation::EmptyMaterialName { index } => {
                write!(f, "materials[{index}]: name must be non-empty")
            }
            Violation::Material { index, name, issue } => {
                write!(f, "materials[{index}] \"{name}\": {issue}")
            }
            Violation::DuplicateMaterial { name } => write!(f, "duplicate material name \"{name}\""),
            Violation::UnresolvedMaterial { primitive, name } => {
                write!(f, "primitives[{primitive}]: unknown material \"{name}\"")
            }
            Violation::NonFiniteGeometry { primitive } => {
                write!(f, "primitives[{primitive}]: coordinates must be finite")
            }
            Violation::Degenerate {
                primitive,
                kind,
                issue,
            } => write!(f, "primitives[{primitive}] ({kind}): degenerate, {issue}"),
            Violation::Environment => write!(f, "environment radiance must be finite and >= 0"),
            Violation::NoEmitter => write!(f, "no emitter"),
        }
    }
}

impl core::error::Error for Violation {}

/// Lists every broken scene invariant in document order; empty means valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();
    check_camera(&scene.camera, &mut out);

    for (index, m) in scene.materials.iter().enumerate() {
        if m.name.is_empty() {
            out.push(Violation::EmptyMaterialName { index });
        }
        let mut issue = |issue| {
            out.push(Violation::Material {
                index,
                name: m.name.clone(),
                issue,
            })
        };
        if !unit_rgb(m.albedo) {
            issue("albedo out of [0,1]");
        }
        if !unit(m.roughness) {
            issue("roughness out of [0,1]");
        }
        if !unit(m.specular) {
            issue("specular out of [0,1]");
        }
        if !non_negative_rgb(m.emission) {
            issue("emission must be finite and >= 0");
        }
        if scene.materials[..index].iter().any(|p| p.name == m.name) {
            out.push(Violation::DuplicateMaterial {
                name: m.name.clone(),
            });
        }
    }

    for (i, p) in scene.primitives.iter().enumerate() {
        if scene.material(&p.material).is_none() {
            out.push(Violation::UnresolvedMaterial {
                primitive: i,
                name: p.material.clone(),
            });
        }
        let (points, radius) = p.geometry.coordinates();
        if !points.iter().all(|v| v.is_finite()) || radius.is_some_and(|r| !r.is_finite()) {
            out.push(Violation::NonFiniteGeometry { primitive: i });
        } else if let Some(issue) = p.geometry.degeneracy() {
            out.push(Violation::Degenerate {
                primitive: i,
                kind: p.geometry.kind(),
                issue,
            });
        }
    }

    if !non_negative_rgb(scene.environment_radiance) {
        out.push(Violation::Environment);
    }

    let lit_primitive = scene
        .primitives
        .iter()
        .any(|p| scene.material(&p.material).is_some_and(Material::is_emissive));
    if !lit_primitive && !(scene.environment_radiance.max_component() > 0.0) {
        out.push(Violation::NoEmitter);
    }
    out
}

fn check_camera(c: &Camera, out: &mut Vec<Violation>) {
    if !(c.position.is_finite() && c.look_at.is_finite() && c.up.is_finite()) {
        out.push(Violation::Camera("coordinates must be finite"));
        return;
    }
    let forward = c.look_at - c.position;
    if forward.length_squared() == 0.0 {
        out.push(Violation::Camera("look_at must differ from position"));
    } else if c.up.length_squared() == 0.0
        || forward.cross(c.up).length() <= 1e-9 * forward.length() * c.up.length()
    {
        out.push(Violation::Camera("up must not be parallel to the view direction"));
    }
    if !(c.vertical_fov > 0.0 && c.vertical_fov < 180.0) {
        out.push(Violation::Camera("fov_degrees must be inside (0, 180)"));
    }
    if c.width == 0 || c.height == 0 {
        out.push(Violation::Camera("resolution must be positive"));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownMaterial(pub String);

impl fmt::Display for UnknownMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "override targets unknown material \"{}\"", self.0)
    }
}

impl core::error::Error for UnknownMaterial {}

/// Returns a copy of `scene` with the overrides applied in order; later
/// overrides win on fields they both set.
pub fn apply_overrides(
    scene: &Scene,
    overrides: &[MaterialOverride],
) -> Result<Scene, UnknownMaterial> {
    let mut out = scene.clone();
    for o in overrides {
        let idx = out
            .material_index(&o.target)
            .ok_or_else(|| UnknownMaterial(o.target.clone()))?;
        let m = &mut out.materials[idx];
        if let Some(a) = o.albedo {
            m.albedo = a;
        }
        if let Some(r) = o.roughness {
            m.roughness = r;
        }
        if let Some(s) = o.specular {
            m.specular = s;
        }
        if let Some(e) = o.emission {
            m.emission = e;
        }
    }
    Ok(out)
}

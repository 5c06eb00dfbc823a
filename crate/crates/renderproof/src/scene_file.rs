//! JSON scene and material-override files.

use serde::{Deserialize, Serialize};

use renderproof_core::scene::{
    validate_scene, Camera, Geometry, Material, MaterialOverride, Primitive, Scene, Violation,
};
use renderproof_core::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
}

impl From<serde_json::Error> for SceneError {
    fn from(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => {
                // serde_json appends " at line L column C"; keep the bare message.
                let full = e.to_string();
                let message = match full.rfind(" at line ") {
                    Some(i) => full[..i].to_owned(),
                    None => full,
                };
                SceneError::Syntax {
                    line: e.line(),
                    column: e.column(),
                    message,
                }
            }
            Category::Data => SceneError::Schema(e.to_string()),
        }
    }
}

type Triple = [f64; 3];

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    name: String,
    camera: CameraDoc,
    materials: Vec<MaterialDoc>,
    primitives: Vec<PrimitiveDoc>,
    #[serde(default)]
    environment: Option<EnvironmentDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraDoc {
    position: Triple,
    look_at: Triple,
    up: Triple,
    fov_degrees: f64,
    resolution: [u32; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialDoc {
    name: String,
    albedo: Triple,
    roughness: f64,
    #[serde(default)]
    specular: f64,
    #[serde(default)]
    emission: Triple,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum PrimitiveDoc {
    Sphere {
        center: Triple,
        radius: f64,
        material: String,
    },
    Quad {
        origin: Triple,
        edge_u: Triple,
        edge_v: Triple,
        material: String,
    },
    Triangle {
        p0: Triple,
        p1: Triple,
        p2: Triple,
        material: String,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentDoc {
    radiance: Triple,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideDoc {
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    albedo: Option<Triple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    roughness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    specular: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    emission: Option<Triple>,
}

fn v(t: Triple) -> Vec3 {
    Vec3::from_array(t)
}

impl From<SceneDoc> for Scene {
    fn from(d: SceneDoc) -> Scene {
        Scene {
            name: d.name,
            camera: Camera {
                position: v(d.camera.position),
                look_at: v(d.camera.look_at),
                up: v(d.camera.up),
                vertical_fov: d.camera.fov_degrees,
                width: d.camera.resolution[0],
                height: d.camera.resolution[1],
            },
            materials: d
                .materials
                .into_iter()
                .map(|m| Material {
                    name: m.name,
                    albedo: v(m.albedo),
                    roughness: m.roughness,
                    specular: m.specular,
                    emission: v(m.emission),
                })
                .collect(),
            primitives: d
                .primitives
                .into_iter()
                .map(|p| match p {
                    PrimitiveDoc::Sphere {
                        center,
                        radius,
                        material,
                    } => Primitive::new(
                        Geometry::Sphere {
                            center: v(center),
                            radius,
                        },
                        material,
                    ),
                    PrimitiveDoc::Quad {
                        origin,
                        edge_u,
                        edge_v,
                        material,
                    } => Primitive::new(
                        Geometry::Quad {
                            origin: v(origin),
                            edge_u: v(edge_u),
                            edge_v: v(edge_v),
                        },
                        material,
                    ),
                    PrimitiveDoc::Triangle { p0, p1, p2, material } => Primitive::new(
                        Geometry::Triangle {
                            p0: v(p0),
                            p1: v(p1),
                            p2: v(p2),
                        },
                        material,
                    ),
                })
                .collect(),
            environment_radiance: d.environment.map_or(Vec3::ZERO, |e| v(e.radiance)),
        }
    }
}

fn doc(scene: &Scene) -> SceneDoc {
    let c = &scene.camera;
    SceneDoc {
        name: scene.name.clone(),
        camera: CameraDoc {
            position: c.position.to_array(),
            look_at: c.look_at.to_array(),
            up: c.up.to_array(),
            fov_degrees: c.vertical_fov,
            resolution: [c.width, c.height],
        },
        materials: scene
            .materials
            .iter()
            .map(|m| MaterialDoc {
                name: m.name.clone(),
                albedo: m.albedo.to_array(),
                roughness: m.roughness,
                specular: m.specular,
                emission: m.emission.to_array(),
            })
            .collect(),
        primitives: scene
            .primitives
            .iter()
            .map(|p| {
                let material = p.material.clone();
                match p.geometry {
                    Geometry::Sphere { center, radius } => PrimitiveDoc::Sphere {
                        center: center.to_array(),
                        radius,
                        material,
                    },
                    Geometry::Quad {
                        origin,
                        edge_u,
                        edge_v,
                    } => PrimitiveDoc::Quad {
                        origin: origin.to_array(),
                        edge_u: edge_u.to_array(),
                        edge_v: edge_v.to_array(),
                        material,
                    },
                    Geometry::Triangle { p0, p1, p2 } => PrimitiveDoc::Triangle {
                        p0: p0.to_array(),
                        p1: p1.to_array(),
                        p2: p2.to_array(),
                        material,
                    },
                }
            })
            .collect(),
        environment: Some(EnvironmentDoc {
            radiance: scene.environment_radiance.to_array(),
        }),
    }
}

/// Parses and validates a scene document.
///
/// Every scene invariant is enforced except the emitter requirement: unlit
/// scenes are legal input for baking (they bake to black), and rendering
/// rejects them on its own.
pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let scene: Scene = serde_json::from_str::<SceneDoc>(text)?.into();
    let problems: Vec<String> = validate_scene(&scene)
        .into_iter()
        .filter(|v| *v != Violation::NoEmitter)
        .map(|v| v.to_string())
        .collect();
    if !problems.is_empty() {
        return Err(SceneError::Schema(problems.join("; ")));
    }
    Ok(scene)
}

/// Pretty-printed scene document. Numbers are written in shortest
/// round-trip form, so `parse_scene(&serialize_scene(s))` reproduces `s`.
pub fn serialize_scene(scene: &Scene) -> String {
    let mut s = serde_json::to_string_pretty(&doc(scene)).expect("scene documents serialize");
    s.push('\n');
    s
}

pub fn parse_overrides(text: &str) -> Result<Vec<MaterialOverride>, SceneError> {
    let docs: Vec<OverrideDoc> = serde_json::from_str(text)?;
    docs.into_iter()
        .enumerate()
        .map(|(i, d)| {
            let o = MaterialOverride {
                target: d.target,
                albedo: d.albedo.map(v),
                roughness: d.roughness,
                specular: d.specular,
                emission: d.emission.map(v),
            };
            match o.check() {
                Some(issue) => Err(SceneError::Schema(format!(
                    "overrides[{i}] \"{}\": {issue}",
                    o.target
                ))),
                None => Ok(o),
            }
        })
        .collect()
}

pub fn serialize_overrides(overrides: &[MaterialOverride]) -> String {
    let docs: Vec<OverrideDoc> = overrides
        .iter()
        .map(|o| OverrideDoc {
            target: o.target.clone(),
            albedo: o.albedo.map(Vec3::to_array),
            roughness: o.roughness,
            specular: o.specular,
            emission: o.emission.map(Vec3::to_array),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&docs).expect("override documents serialize");
    s.push('\n');
    s
}

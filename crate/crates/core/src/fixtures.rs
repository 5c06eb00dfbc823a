//! Analytic test scenes.

use alloc::vec;

use crate::math::Vec3;
use crate::scene::{Camera, Geometry, Material, Primitive, Scene};

/// Closed cube `[0, side]^3` whose six inward-facing walls share one
/// Lambertian material with uniform `emission` and grey `albedo`; the camera
/// sits at the centre. Every wall point sees radiance `E / (1 - rho)` at
/// equilibrium, truncated to `E * sum(rho^k, k = 0..=bounces)`.
pub fn furnace_box(side: f64, emission: f64, albedo: f64, width: u32, height: u32) -> Scene {
    let s = side;
    let x = Vec3::new(s, 0.0, 0.0);
    let y = Vec3::new(0.0, s, 0.0);
    let z = Vec3::new(0.0, 0.0, s);
    let o = Vec3::ZERO;
    let walls = [
        (o, z, x),     // floor, +y
        (y, x, z),     // ceiling, -y
        (o, y, z),     // x = 0, +x
        (x, z, y),     // x = side, -x
        (o, x, y),     // z = 0, +z
        (z, y, x),     // z = side, -z
    ];
    let mut wall = Material::new("wall", Vec3::splat(albedo), 1.0);
    wall.emission = Vec3::splat(emission);
    let centre = Vec3::splat(0.5 * s);
    Scene {
        name: "furnace".into(),
        camera: Camera {
            position: centre,
            look_at: centre - Vec3::new(0.0, 0.0, 1.0),
            up: Vec3::new(0.0, 1.0, 0.0),
            vertical_fov: 90.0,
            width,
            height,
        },
        materials: vec![wall],
        primitives: walls
            .iter()
            .map(|&(origin, edge_u, edge_v)| {
                Primitive::new(
                    Geometry::Quad {
                        origin,
                        edge_u,
                        edge_v,
                    },
                    "wall",
                )
            })
            .collect(),
        environment_radiance: Vec3::ZERO,
    }
}

/// Open-fronted 2x2x2 room lit by a small ceiling panel, with a table top
/// casting a shadow and a triangle hung on the back wall. Everything is
/// Lambertian (specular 0), polygonal and oriented so front faces point into
/// the room, which makes it bakeable. The camera looks in through the open
/// side.
pub fn diffuse_room(width: u32, height: u32) -> Scene {
    let quad = |origin, edge_u, edge_v, material: &str| {
        Primitive::new(
            Geometry::Quad {
                origin,
                edge_u,
                edge_v,
            },
            material,
        )
    };
    let v = Vec3::new;
    let mut lamp = Material::new("lamp", Vec3::ZERO, 1.0);
    lamp.emission = Vec3::splat(12.0);
    Scene {
        name: "diffuse_room".into(),
        camera: Camera {
            position: v(1.0, 1.0, 4.2),
            look_at: v(1.0, 0.9, 0.0),
            up: v(0.0, 1.0, 0.0),
            vertical_fov: 40.0,
            width,
            height,
        },
        materials: vec![
            Material::new("white", Vec3::splat(0.7), 1.0),
            Material::new("red", v(0.7, 0.15, 0.1), 1.0),
            Material::new("green", v(0.15, 0.6, 0.2), 1.0),
            Material::new("wood", v(0.5, 0.35, 0.2), 1.0),
            lamp,
        ],
        primitives: vec![
            quad(v(0.0, 0.0, 0.0), v(0.0, 0.0, 2.0), v(2.0, 0.0, 0.0), "white"),
            quad(v(0.0, 2.0, 0.0), v(2.0, 0.0, 0.0), v(0.0, 0.0, 2.0), "white"),
            quad(v(0.0, 0.0, 0.0), v(2.0, 0.0, 0.0), v(0.0, 2.0, 0.0), "white"),
            quad(v(0.0, 0.0, 0.0), v(0.0, 2.0, 0.0), v(0.0, 0.0, 2.0), "red"),
            quad(v(2.0, 0.0, 0.0), v(0.0, 0.0, 2.0), v(0.0, 2.0, 0.0), "green"),
            quad(v(0.6, 0.8, 0.6), v(0.0, 0.0, 0.8), v(0.8, 0.0, 0.0), "wood"),
            Primitive::new(
                Geometry::Triangle {
                    p0: v(1.2, 1.0, 0.01),
                    p1: v(1.8, 1.0, 0.01),
                    p2: v(1.5, 1.7, 0.01),
                },
                "red",
            ),
            quad(v(0.7, 1.999, 0.7), v(0.6, 0.0, 0.0), v(0.0, 0.0, 0.6), "lamp"),
        ],
        environment_radiance: Vec3::ZERO,
    }
}

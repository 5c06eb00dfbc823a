use renderproof_core::fixtures::{diffuse_room, furnace_box};
use renderproof_core::render::{
    bake_lightmaps, encode_display, grid_size, luma, render, BakeError, BakeSettings, Baker,
    Mode, RenderError, RenderSettings,
};
use renderproof_core::scene::{Geometry, Material, Primitive, Scene};
use renderproof_core::Vec3;

fn settings(texel_size: f64, samples: u32, bounces: u32) -> BakeSettings {
    BakeSettings {
        texel_size,
        samples_per_texel: samples,
        max_bounces: bounces,
        seed: 9,
    }
}

/// Mean absolute luma difference between two renders, relative to the mean
/// luma of the second.
fn relative_luma_gap(a: &renderproof_core::render::LinearImage, b: &renderproof_core::render::LinearImage) -> f64 {
    let (la, lb) = (luma(&encode_display(a, 1.0)), luma(&encode_display(b, 1.0)));
    let n = la.data().len() as f64;
    let mad = la
        .data()
        .iter()
        .zip(lb.data())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / n;
    mad / (lb.data().iter().sum::<f64>() / n)
}

#[test]
fn furnace_wall_irradiance_is_pi_times_radiance() {
    let scene = furnace_box(2.0, 0.2, 0.5, 4, 4);
    let set = bake_lightmaps(&scene, &settings(0.25, 512, 16)).unwrap();
    assert_eq!(set.entries.len(), 6);
    let expected = std::f64::consts::PI * 0.4;
    for e in &set.entries {
        assert_eq!((e.width, e.height), (8, 8));
        // Interior texels, away from the corners where the wall meets others.
        for j in 2..6 {
            for i in 2..6 {
                for c in e.irradiance[j * 8 + i] {
                    let rel = (c as f64 - expected).abs() / expected;
                    assert!(rel < 0.03, "wall {} texel ({i},{j}): {c}", e.primitive);
                }
            }
        }
    }
}

#[test]
fn unlit_scene_bakes_to_black() {
    let mut scene = furnace_box(2.0, 0.0, 0.5, 4, 4);
    scene.environment_radiance = Vec3::ZERO;
    let set = bake_lightmaps(&scene, &settings(0.5, 8, 4)).unwrap();
    assert!(set
        .entries
        .iter()
        .all(|e| e.irradiance.iter().flatten().all(|&c| c == 0.0)));
}

#[test]
fn grid_size_follows_ceiling_rule() {
    let quad = Geometry::Quad {
        origin: Vec3::ZERO,
        edge_u: Vec3::new(2.0, 0.0, 0.0),
        edge_v: Vec3::new(0.0, 1.0, 0.0),
    };
    assert_eq!(grid_size(&quad, 0.5), Some((4, 2)));
    assert_eq!(grid_size(&quad, 0.3), Some((7, 4)));
    assert_eq!(grid_size(&quad, 10.0), Some((1, 1)));
    let sphere = Geometry::Sphere {
        center: Vec3::ZERO,
        radius: 1.0,
    };
    assert_eq!(grid_size(&sphere, 0.5), None);

    let mut lamp = Material::new("lamp", Vec3::ZERO, 1.0);
    lamp.emission = Vec3::ONE;
    let scene = Scene {
        name: "strip".into(),
        camera: furnace_box(2.0, 0.2, 0.5, 4, 4).camera,
        materials: vec![lamp, Material::new("grey", Vec3::splat(0.5), 1.0)],
        primitives: vec![
            Primitive::new(quad, "grey"),
            Primitive::new(sphere, "lamp"),
        ],
        environment_radiance: Vec3::ZERO,
    };
    let set = bake_lightmaps(&scene, &settings(0.5, 4, 1)).unwrap();
    assert_eq!(set.entries.len(), 1);
    let e = &set.entries[0];
    assert_eq!((e.primitive, e.width, e.height), (0, 4, 2));
    assert_eq!(e.irradiance.len(), 8);
}

#[test]
fn triangle_texels_outside_the_triangle_are_unused() {
    let scene = diffuse_room(4, 4);
    let set = bake_lightmaps(&scene, &settings(0.25, 4, 1)).unwrap();
    let tri = set.entries.iter().find(|e| e.primitive == 6).unwrap();
    // Edges of length 0.6 and sqrt(0.58) give a 3 x 4 grid.
    assert_eq!((tri.width, tri.height), (3, 4));
    for j in 0..4 {
        for i in 0..3 {
            let lower_corner_inside = (i as f64) / 3.0 + (j as f64) / 4.0 < 1.0;
            let k = j * 3 + i;
            assert_eq!(tri.used[k], lower_corner_inside, "texel ({i},{j})");
            if !tri.used[k] {
                assert_eq!(tri.irradiance[k], [0.0; 3]);
            }
        }
    }
    // The lamp is emissive but still gets a grid; spheres never do.
    assert_eq!(set.entries.len(), scene.primitives.len());
}

#[test]
fn baking_is_deterministic_and_order_free() {
    let scene = diffuse_room(4, 4);
    let s = settings(0.5, 16, 3);
    let a = bake_lightmaps(&scene, &s).unwrap();
    assert_eq!(a, bake_lightmaps(&scene, &s).unwrap());

    // Evaluate texels last-to-first, as an arbitrary worker schedule might.
    let baker = Baker::new(&scene, s).unwrap();
    let mut texels: Vec<Vec<Option<[f32; 3]>>> = (0..baker.entry_count())
        .map(|k| vec![None; baker.texel_count(k)])
        .collect();
    for k in (0..baker.entry_count()).rev() {
        for t in (0..baker.texel_count(k)).rev() {
            texels[k][t] = baker.texel(k, t);
        }
    }
    assert_eq!(a, baker.assemble(texels));
}

#[test]
fn baked_furnace_matches_path_tracing() {
    let scene = furnace_box(2.0, 0.2, 0.5, 24, 24);
    let set = bake_lightmaps(&scene, &settings(0.25, 512, 16)).unwrap();
    let baked = render(&scene, &RenderSettings::new(Mode::Baked, 64, 16, 2), Some(&set)).unwrap();
    let gi = render(&scene, &RenderSettings::new(Mode::Gi, 1024, 16, 2), None).unwrap();
    let gap = relative_luma_gap(&baked, &gi);
    assert!(gap < 0.05, "relative luma gap {gap}");
    assert!((baked.mean() - 0.4).abs() < 0.02 * 0.4, "baked mean {}", baked.mean());
}

#[test]
fn baked_room_tracks_path_tracing() {
    let scene = diffuse_room(32, 24);
    let set = bake_lightmaps(&scene, &settings(0.125, 256, 6)).unwrap();
    let baked = render(&scene, &RenderSettings::new(Mode::Baked, 16, 6, 4), Some(&set)).unwrap();
    let gi = render(&scene, &RenderSettings::new(Mode::Gi, 512, 6, 4), None).unwrap();
    let rel = (baked.mean_luminance() - gi.mean_luminance()).abs() / gi.mean_luminance();
    assert!(rel < 0.03, "mean luminance baked {} gi {}", baked.mean_luminance(), gi.mean_luminance());
    let gap = relative_luma_gap(&baked, &gi);
    assert!(gap < 0.05, "relative luma gap {gap}");
}

#[test]
fn baked_mode_without_bounces_shows_emission_only() {
    let scene = furnace_box(2.0, 0.2, 0.5, 6, 6);
    let set = bake_lightmaps(&scene, &settings(0.5, 8, 2)).unwrap();
    let img = render(&scene, &RenderSettings::new(Mode::Baked, 4, 0, 1), Some(&set)).unwrap();
    assert!(img.pixels.iter().flatten().all(|&c| c == 0.2f32));
}

#[test]
fn lightmaps_must_fit_the_scene() {
    let room = diffuse_room(4, 4);
    let furnace = furnace_box(2.0, 0.2, 0.5, 4, 4);
    let set = bake_lightmaps(&furnace, &settings(0.5, 2, 1)).unwrap();
    let baked = RenderSettings::new(Mode::Baked, 1, 1, 0);
    // Grids baked for a different scene do not fit.
    assert!(matches!(
        render(&room, &baked, Some(&set)),
        Err(RenderError::LightmapMismatch(_))
    ));

    // Dropping the entry of a non-emissive primitive is an error; emitters
    // may go without one.
    let room_set = bake_lightmaps(&room, &settings(0.5, 2, 1)).unwrap();
    let mut partial = room_set.clone();
    partial.entries.remove(0);
    assert!(matches!(
        render(&room, &baked, Some(&partial)),
        Err(RenderError::LightmapMismatch(_))
    ));
    let mut no_lamp = room_set.clone();
    no_lamp.entries.retain(|e| e.primitive != 7);
    assert!(render(&room, &baked, Some(&no_lamp)).is_ok());

    let ids = set.attach_ids(&furnace).unwrap();
    let attached: Vec<_> = ids.primitives.iter().map(|p| p.lightmap_id).collect();
    assert_eq!(attached, (0..6).map(Some).collect::<Vec<_>>());
}

#[test]
fn bake_rejects_bad_input() {
    let mut scene = furnace_box(2.0, 0.2, 0.5, 4, 4);
    assert!(matches!(
        bake_lightmaps(&scene, &settings(0.0, 4, 1)),
        Err(BakeError::Settings(_))
    ));
    scene.primitives = vec![Primitive::new(
        Geometry::Sphere {
            center: Vec3::ZERO,
            radius: 1.0,
        },
        "wall",
    )];
    assert_eq!(
        bake_lightmaps(&scene, &settings(0.5, 4, 1)),
        Err(BakeError::NoBakeablePrimitive)
    );
    scene.primitives[0].material = "nope".into();
    assert!(matches!(
        bake_lightmaps(&scene, &settings(0.5, 4, 1)),
        Err(BakeError::InvalidScene(_))
    ));
}

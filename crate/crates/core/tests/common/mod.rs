//! Synthetic highway scenes shared by the integration tests.
#![allow(dead_code)]

use clusterfirst::geom::PixelBox;
use clusterfirst::scene::{CameraModel, Extrinsic, LidarSpec, Scene, SceneObject};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

/// Ground plane height in the vehicle frame; sensors sit at roof height.
pub const GROUND_Z: f64 = -1.5;

pub fn highway_lidar() -> LidarSpec {
    LidarSpec::new(128, 4096, 30.0)
}

pub fn highway_camera() -> CameraModel {
    CameraModel::from_hfov(1920, 1280, 50.4, Extrinsic::forward_looking([0.0; 3]))
}

pub fn vehicle(id: &str, x: f64, y: f64, length: f64, width: f64, height: f64) -> SceneObject {
    SceneObject {
        id: id.into(),
        center: [x, y, GROUND_Z + height / 2.0],
        extent: [length, width, height],
        class_label: "vehicle".into(),
    }
}

/// A few vehicles ahead at 25-70 m in neighbouring lanes, no two of them
/// overlapping in the image and all fully inside it.
pub fn highway_scene(rng: &mut StdRng, max_objects: usize) -> Scene {
    let camera = highway_camera();
    let frame = camera.frame().full_box();
    loop {
        let n = rng.random_range(1..=max_objects);
        let objects: Vec<SceneObject> = (0..n)
            .map(|k| {
                vehicle(
                    &format!("car{k}"),
                    rng.random_range(25.0..70.0),
                    rng.random_range(-4.0..4.0),
                    rng.random_range(4.0..5.0),
                    rng.random_range(1.7..2.0),
                    rng.random_range(1.5..1.8),
                )
            })
            .collect();
        let scene = Scene {
            lidar: highway_lidar(),
            camera: camera.clone(),
            objects,
            ego_speed_mps: rng.random_range(15.0..30.0),
        };
        let gt = scene.ground_truth();
        if gt.len() != n {
            continue;
        }
        let inside = |b: &PixelBox| b.x_min > 0 && b.y_min > 0 && b.x_max < frame.x_max && b.y_max < frame.y_max;
        let apart = gt
            .iter()
            .enumerate()
            .all(|(i, a)| gt[i + 1..].iter().all(|b| !a.bbox.intersects(&b.bbox)));
        if apart && gt.iter().all(|g| inside(&g.bbox)) {
            return scene;
        }
    }
}

pub fn highway_scenes(seed: u64, count: usize, max_objects: usize) -> Vec<Scene> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| highway_scene(&mut rng, max_objects)).collect()
}

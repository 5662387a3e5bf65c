//! Synthetic world model: axis-aligned box objects, a spinning LiDAR that
//! ray-casts them into a range image, and a pinhole camera that yields
//! ground-truth boxes and a painted frame.
//!
//! Vehicle frame: x forward, y left, z up, LiDAR at the origin. Camera frame
//! follows the optical convention: z forward, x right, y down.

use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{from_json, Error, Result};
use crate::geom::{FrameSize, PixelBox};
use crate::raster::{Raster, Rgb};

/// Range value for beams that hit nothing within `max_range`.
pub const NO_RETURN: f64 = f64::INFINITY;

/// Points closer than this to the image plane are treated as not projectable.
const MIN_CAMERA_DEPTH: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub center: [f64; 3],
    pub extent: [f64; 3],
    #[serde(rename = "class")]
    pub class_label: String,
}

impl SceneObject {
    pub fn min_corner(&self) -> Vector3<f64> {
        Vector3::from(self.center) - Vector3::from(self.extent) / 2.0
    }

    pub fn max_corner(&self) -> Vector3<f64> {
        Vector3::from(self.center) + Vector3::from(self.extent) / 2.0
    }

    pub fn corners(&self) -> [Point3<f64>; 8] {
        let lo = self.min_corner();
        let hi = self.max_corner();
        std::array::from_fn(|i| {
            Point3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            )
        })
    }

    /// Distance along a unit ray from the origin to the box surface, if hit
    /// in front of the origin.
    pub fn ray_hit(&self, dir: &Vector3<f64>) -> Option<f64> {
        let lo = self.min_corner();
        let hi = self.max_corner();
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for k in 0..3 {
            let d = dir[k];
            if d.abs() < 1e-15 {
                if 0.0 < lo[k] || 0.0 > hi[k] {
                    return None;
                }
                continue;
            }
            let (a, b) = (lo[k] / d, hi[k] / d);
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            t_near = t_near.max(a);
            t_far = t_far.min(b);
        }
        (t_near <= t_far && t_near > 0.0).then_some(t_near)
    }

    fn validate(&self) -> Result<()> {
        if self.extent.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid(
                format!("objects[{}].extent", self.id),
                "all components must be > 0",
            ));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("objects[{}].center", self.id), "must be finite"));
        }
        Ok(())
    }
}

fn default_lidar_hfov() -> f64 {
    360.0
}

fn default_max_range() -> f64 {
    75.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LidarSpec {
    pub n_rings: usize,
    pub n_azimuth: usize,
    /// Symmetric about the horizontal plane.
    pub vertical_fov_deg: f64,
    #[serde(default = "default_lidar_hfov")]
    pub horizontal_fov_deg: f64,
    #[serde(default = "default_max_range")]
    pub max_range_m: f64,
}

impl LidarSpec {
    pub fn new(n_rings: usize, n_azimuth: usize, vertical_fov_deg: f64) -> Self {
        Self {
            n_rings,
            n_azimuth,
            vertical_fov_deg,
            horizontal_fov_deg: default_lidar_hfov(),
            max_range_m: default_max_range(),
        }
    }

    pub fn alpha_h(&self) -> f64 {
        self.horizontal_fov_deg.to_radians() / self.n_azimuth as f64
    }

    pub fn alpha_v(&self) -> f64 {
        self.vertical_fov_deg.to_radians() / (self.n_rings - 1) as f64
    }

    /// Elevation of ring `r`; ring 0 is the top beam.
    pub fn elevation(&self, ring: usize) -> f64 {
        self.vertical_fov_deg.to_radians() / 2.0 - ring as f64 * self.alpha_v()
    }

    /// Azimuth of column `c`, counter-clockwise from +x. Columns sweep from
    /// left (+hfov/2) to right, so column `n_azimuth / 2` looks straight
    /// ahead when `n_azimuth` is even.
    pub fn azimuth(&self, col: usize) -> f64 {
        wrap_angle(self.horizontal_fov_deg.to_radians() / 2.0 - col as f64 * self.alpha_h())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rings < 2 {
            return Err(Error::invalid("lidar.n_rings", "must be >= 2"));
        }
        if self.n_azimuth < 2 {
            return Err(Error::invalid("lidar.n_azimuth", "must be >= 2"));
        }
        if !(self.max_range_m > 0.0) {
            return Err(Error::invalid("lidar.max_range_m", "must be > 0"));
        }
        if !(self.vertical_fov_deg > 0.0 && self.vertical_fov_deg < 180.0) {
            return Err(Error::invalid("lidar.vertical_fov_deg", "must be in (0, 180)"));
        }
        if !(self.horizontal_fov_deg > 0.0 && self.horizontal_fov_deg <= 360.0) {
            return Err(Error::invalid("lidar.horizontal_fov_deg", "must be in (0, 360]"));
        }
        Ok(())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a % two_pi;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    } else if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// A LiDAR sweep as a (ring x azimuth) grid of ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeImage {
    n_rings: usize,
    n_azimuth: usize,
    ranges: Vec<f64>,
    elevations: Vec<f64>,
    azimuths: Vec<f64>,
    pub alpha_h: f64,
    pub alpha_v: f64,
    pub max_range: f64,
    /// Column 0 and the last column are neighbours (full 360 degree sweep).
    pub wraps: bool,
}

impl RangeImage {
    pub fn empty(spec: &LidarSpec) -> Self {
        Self {
            n_rings: spec.n_rings,
            n_azimuth: spec.n_azimuth,
            ranges: vec![NO_RETURN; spec.n_rings * spec.n_azimuth],
            elevations: (0..spec.n_rings).map(|r| spec.elevation(r)).collect(),
            azimuths: (0..spec.n_azimuth).map(|c| spec.azimuth(c)).collect(),
            alpha_h: spec.alpha_h(),
            alpha_v: spec.alpha_v(),
            max_range: spec.max_range_m,
            wraps: (spec.horizontal_fov_deg - 360.0).abs() < 1e-9,
        }
    }

    pub fn n_rings(&self) -> usize {
        self.n_rings
    }

    pub fn n_azimuth(&self) -> usize {
        self.n_azimuth
    }

    #[inline]
    pub fn range(&self, ring: usize, col: usize) -> f64 {
        self.ranges[ring * self.n_azimuth + col]
    }

    #[inline]
    pub fn has_return(&self, ring: usize, col: usize) -> bool {
        self.range(ring, col).is_finite()
    }

    /// Stores a range; values outside `(0, max_range]` become `NO_RETURN`.
    pub fn set_range(&mut self, ring: usize, col: usize, r: f64) {
        let v = if r > 0.0 && r <= self.max_range { r } else { NO_RETURN };
        self.ranges[ring * self.n_azimuth + col] = v;
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    pub fn elevation(&self, ring: usize) -> f64 {
        self.elevations[ring]
    }

    pub fn azimuth(&self, col: usize) -> f64 {
        self.azimuths[col]
    }

    pub fn direction(&self, ring: usize, col: usize) -> Vector3<f64> {
        beam_direction(self.elevations[ring], self.azimuths[col])
    }

    /// 3D point of a cell in the vehicle frame.
    pub fn point(&self, ring: usize, col: usize) -> Option<Point3<f64>> {
        let r = self.range(ring, col);
        r.is_finite().then(|| Point3::from(self.direction(ring, col) * r))
    }

    pub fn returns(&self) -> usize {
        self.ranges.iter().filter(|r| r.is_finite()).count()
    }
}

pub fn beam_direction(elevation: f64, azimuth: f64) -> Vector3<f64> {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vector3::new(ce * ca, ce * sa, se)
}

/// Ray-casts every beam against the scene; each cell keeps the nearest hit.
pub fn render_range_image(objects: &[SceneObject], lidar: &LidarSpec) -> RangeImage {
    let mut img = RangeImage::empty(lidar);
    let n_az = lidar.n_azimuth;
    let max_range = lidar.max_range_m;
    let elevations = img.elevations.clone();
    let azimuths = img.azimuths.clone();
    img.ranges
        .par_chunks_mut(n_az)
        .enumerate()
        .for_each(|(ring, row)| {
            for (col, cell) in row.iter_mut().enumerate() {
                let dir = beam_direction(elevations[ring], azimuths[col]);
                let nearest = objects
                    .iter()
                    .filter_map(|o| o.ray_hit(&dir))
                    .fold(NO_RETURN, f64::min);
                *cell = if nearest <= max_range { nearest } else { NO_RETURN };
            }
        });
    img
}

/// Rigid vehicle-to-camera transform stored as a 4x4 row-major matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "ExtrinsicRepr", into = "ExtrinsicRepr")]
pub struct Extrinsic(pub Matrix4<f64>);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtrinsicRepr {
    Rows([[f64; 4]; 4]),
    Flat([f64; 16]),
}

impl From<ExtrinsicRepr> for Extrinsic {
    fn from(r: ExtrinsicRepr) -> Self {
        match r {
            ExtrinsicRepr::Rows(rows) => Extrinsic(Matrix4::from_fn(|i, j| rows[i][j])),
            ExtrinsicRepr::Flat(v) => Extrinsic(Matrix4::from_row_slice(&v)),
        }
    }
}

impl From<Extrinsic> for ExtrinsicRepr {
    fn from(e: Extrinsic) -> Self {
        ExtrinsicRepr::Rows(std::array::from_fn(|i| std::array::from_fn(|j| e.0[(i, j)])))
    }
}

impl Extrinsic {
    /// Camera at `position` (vehicle frame) looking along +x, image x to
    /// the vehicle's right and image y down.
    pub fn forward_looking(position: [f64; 3]) -> Self {
        let rot = Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0);
        let t = -(rot * Vector3::from(position));
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
        Extrinsic(m)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }
}

fn default_camera_hfov() -> f64 {
    50.4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_camera_hfov")]
    pub hfov_deg: f64,
    pub extrinsic: Extrinsic,
}

impl CameraModel {
    /// Square-pixel camera with the focal length implied by `hfov_deg`.
    pub fn from_hfov(width: u32, height: u32, hfov_deg: f64, extrinsic: Extrinsic) -> Self {
        let f = (width as f64 / 2.0) / (hfov_deg.to_radians() / 2.0).tan();
        Self {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
            hfov_deg,
            extrinsic,
        }
    }

    pub fn frame(&self) -> FrameSize {
        FrameSize::new(self.width, self.height)
    }

    pub fn to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.extrinsic.rotation() * p.coords + self.extrinsic.translation()
    }

    /// Pixel coordinates and camera-frame depth, or `None` behind the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64, f64)> {
        let c = self.to_camera(p);
        self.project_camera(&c)
    }

    fn project_camera(&self, c: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        (c.z > MIN_CAMERA_DEPTH)
            .then(|| (self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy, c.z))
    }

    /// Inverse of [`project`](Self::project) at camera-frame depth `z`.
    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Point3<f64> {
        let c = Vector3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z);
        let r = self.extrinsic.rotation();
        Point3::from(r.transpose() * (c - self.extrinsic.translation()))
    }

    pub fn in_image(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }

    /// Azimuth of the optical axis in the vehicle frame.
    pub fn forward_azimuth(&self) -> f64 {
        let axis = self.extrinsic.rotation().transpose() * Vector3::z();
        axis.y.atan2(axis.x)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0) {
            return Err(Error::invalid("camera.fx", "must be > 0"));
        }
        if !(self.fy > 0.0) {
            return Err(Error::invalid("camera.fy", "must be > 0"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(Error::invalid("camera.cx", "must lie in [0, width)"));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::invalid("camera.cy", "must lie in [0, height)"));
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg <= 360.0) {
            return Err(Error::invalid("camera.hfov_deg", "must be in (0, 360]"));
        }
        let r = self.extrinsic.rotation();
        if ((r * r.transpose()) - Matrix3::identity()).abs().max() > 1e-6 {
            return Err(Error::invalid("camera.extrinsic", "rotation block is not orthonormal"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub id: String,
    pub bbox: PixelBox,
    pub depth: f64,
    pub class_label: String,
}

const BOX_EDGES: [(usize, usize); 12] = [
    (0, 1), (2, 3), (4, 5), (6, 7),
    (0, 2), (1, 3), (4, 6), (5, 7),
    (0, 4), (1, 5), (2, 6), (3, 7),
];

/// Tight image boxes of the scene objects.
///
/// Box edges crossing the near plane are clipped so partially visible
/// objects still get a correct box. Depth is the vehicle-frame distance of
/// the nearest visible corner. Objects that do not reach the image or lie
/// beyond `max_range` are omitted.
pub fn ground_truth_boxes(
    objects: &[SceneObject],
    cam: &CameraModel,
    max_range: f64,
) -> Vec<GroundTruth> {
    let frame = cam.frame();
    let mut out = Vec::new();
    for obj in objects {
        let corners = obj.corners();
        let in_cam: Vec<Vector3<f64>> = corners.iter().map(|p| cam.to_camera(p)).collect();

        let mut pts: Vec<(f64, f64)> = in_cam.iter().filter_map(|c| cam.project_camera(c)).map(|(u, v, _)| (u, v)).collect();
        let near = MIN_CAMERA_DEPTH * 2.0;
        for &(a, b) in &BOX_EDGES {
            let (ca, cb) = (in_cam[a], in_cam[b]);
            if (ca.z > near) != (cb.z > near) {
                let t = (near - ca.z) / (cb.z - ca.z);
                let c = ca + (cb - ca) * t;
                if let Some((u, v, _)) = cam.project_camera(&c) {
                    pts.push((u, v));
                }
            }
        }
        if pts.is_empty() {
            continue;
        }
        let (mut u0, mut v0, mut u1, mut v1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(u, v) in &pts {
            u0 = u0.min(u);
            v0 = v0.min(v);
            u1 = u1.max(u);
            v1 = v1.max(v);
        }
        let bbox = PixelBox::new(u0.floor() as i32, v0.floor() as i32, u1.ceil() as i32, v1.ceil() as i32)
            .clamp_to(frame);
        if bbox.is_empty() {
            continue;
        }

        let visible_depth = corners
            .iter()
            .zip(&in_cam)
            .filter(|(_, c)| cam.project_camera(c).is_some_and(|(u, v, _)| cam.in_image(u, v)))
            .map(|(p, _)| p.coords.norm())
            .fold(f64::INFINITY, f64::min);
        let depth = if visible_depth.is_finite() {
            visible_depth
        } else {
            corners
                .iter()
                .zip(&in_cam)
                .filter(|(_, c)| c.z > MIN_CAMERA_DEPTH)
                .map(|(p, _)| p.coords.norm())
                .fold(f64::INFINITY, f64::min)
        };
        if !(depth <= max_range) {
            continue;
        }
        out.push(GroundTruth {
            id: obj.id.clone(),
            bbox,
            depth,
            class_label: obj.class_label.clone(),
        });
    }
    out
}

/// Deterministic per-object color that never equals the null background.
pub fn object_color(id: &str) -> Rgb {
    let mut h: u32 = 2166136261;
    for b in id.bytes() {
        h = (h ^ b as u32).wrapping_mul(16777619);
    }
    let c = [(h & 0xff) as u8, ((h >> 8) & 0xff) as u8, ((h >> 16) & 0xff) as u8];
    // keep away from mid gray and from the sky color
    Rgb([c[0] | 0x80, c[1] & 0x7f, c[2] | 0x40])
}

pub const SKY: Rgb = Rgb([96, 120, 160]);

/// Paints ground-truth boxes far-to-near over a plain background.
pub fn render_camera_frame(truth: &[GroundTruth], cam: &CameraModel) -> Raster {
    let mut r = Raster::filled(cam.width, cam.height, SKY);
    let mut order: Vec<&GroundTruth> = truth.iter().collect();
    order.sort_by(|a, b| b.depth.total_cmp(&a.depth));
    for gt in order {
        r.fill_box(&gt.bbox, object_color(&gt.id));
    }
    r
}

/// A scene file: sensors, objects and ego speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub lidar: LidarSpec,
    pub camera: CameraModel,
    pub objects: Vec<SceneObject>,
    pub ego_speed_mps: f64,
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Scene = from_json("scene", text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.lidar.validate()?;
        self.camera.validate()?;
        for o in &self.objects {
            o.validate()?;
        }
        if !(self.ego_speed_mps >= 0.0) {
            return Err(Error::invalid("ego_speed_mps", "must be >= 0"));
        }
        Ok(())
    }

    pub fn range_image(&self) -> RangeImage {
        render_range_image(&self.objects, &self.lidar)
    }

    pub fn ground_truth(&self) -> Vec<GroundTruth> {
        ground_truth_boxes(&self.objects, &self.camera, self.lidar.max_range_m)
    }
}

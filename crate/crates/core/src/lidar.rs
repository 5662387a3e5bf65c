//! LiDAR stage: crop the sweep to the camera's field of view, segment the
//! range image by thresholding the angle between neighbouring beams, and
//! project each segment onto the image as a depth-labelled box.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::PixelBox;
use crate::scene::{wrap_angle, CameraModel, RangeImage, NO_RETURN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterParams {
    /// Neighbours belong to the same segment when their beam angle exceeds this.
    pub theta_deg: f64,
    /// Smaller components are discarded as speckle.
    pub min_cluster_points: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            theta_deg: 10.0,
            min_cluster_points: 5,
        }
    }
}

impl ClusterParams {
    pub fn theta(&self) -> f64 {
        self.theta_deg.to_radians()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_deg > 0.0 && self.theta_deg < 90.0) {
            return Err(Error::invalid("cluster.theta_deg", "must be in (0, 90)"));
        }
        if self.min_cluster_points < 1 {
            return Err(Error::invalid("cluster.min_cluster_points", "must be >= 1"));
        }
        Ok(())
    }
}

/// A connected segment of range-image cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster3D {
    /// `(ring, column)` cells in row-major order.
    pub cells: Vec<(usize, usize)>,
    pub min_range: f64,
}

/// A segment projected to the image, labelled with its nearest range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster2D {
    pub bbox: PixelBox,
    pub depth: f64,
}

impl Cluster2D {
    pub fn new(bbox: PixelBox, depth: f64) -> Self {
        Self { bbox, depth }
    }
}

/// Blanks every column whose azimuth is outside the camera's horizontal FOV.
pub fn crop_fov(ri: &RangeImage, cam: &CameraModel) -> RangeImage {
    let half = cam.hfov_deg.to_radians() / 2.0;
    let forward = cam.forward_azimuth();
    let mut out = ri.clone();
    for col in 0..ri.n_azimuth() {
        if wrap_angle(ri.azimuth(col) - forward).abs() > half + 1e-12 {
            for ring in 0..ri.n_rings() {
                out.set_range(ring, col, NO_RETURN);
            }
        }
    }
    out
}

/// Angle at the farther of two neighbouring returns between its beam and
/// the segment joining the two points. Large angles mean a smooth surface,
/// small angles a depth discontinuity.
pub fn beam_angle(d1: f64, d2: f64, alpha: f64) -> f64 {
    let (far, near) = if d1 >= d2 { (d1, d2) } else { (d2, d1) };
    let (s, c) = alpha.sin_cos();
    (near * s).atan2(far - near * c)
}

/// Enumerates the 4-neighbours of a cell with the beam spacing of each edge.
/// Columns wrap around for full sweeps.
pub(crate) fn neighbours(
    ri: &RangeImage,
    ring: usize,
    col: usize,
) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let n_r = ri.n_rings();
    let n_c = ri.n_azimuth();
    let up = (ring > 0).then(|| (ring - 1, col, ri.alpha_v));
    let down = (ring + 1 < n_r).then(|| (ring + 1, col, ri.alpha_v));
    let left = if col > 0 {
        Some((ring, col - 1, ri.alpha_h))
    } else {
        ri.wraps.then(|| (ring, n_c - 1, ri.alpha_h))
    };
    let right = if col + 1 < n_c {
        Some((ring, col + 1, ri.alpha_h))
    } else {
        ri.wraps.then_some((ring, 0, ri.alpha_h))
    };
    [up, down, left, right].into_iter().flatten()
}

/// True when two neighbouring cells are joined by the segmentation rule.
pub fn same_segment(ri: &RangeImage, a: (usize, usize), b: (usize, usize), alpha: f64, theta: f64) -> bool {
    let (ra, rb) = (ri.range(a.0, a.1), ri.range(b.0, b.1));
    ra.is_finite() && rb.is_finite() && beam_angle(ra, rb, alpha) > theta
}

/// Breadth-first connected-component labelling of the range image.
pub fn depth_cluster(ri: &RangeImage, p: &ClusterParams) -> Vec<Cluster3D> {
    let theta = p.theta();
    let n_c = ri.n_azimuth();
    let mut label = vec![false; ri.n_rings() * n_c];
    let mut queue = VecDeque::new();
    let mut out = Vec::new();

    for ring in 0..ri.n_rings() {
        for col in 0..n_c {
            if label[ring * n_c + col] || !ri.has_return(ring, col) {
                continue;
            }
            label[ring * n_c + col] = true;
            queue.push_back((ring, col));
            let mut cells = Vec::new();
            while let Some(cur) = queue.pop_front() {
                cells.push(cur);
                for (nr, nc, alpha) in neighbours(ri, cur.0, cur.1) {
                    let idx = nr * n_c + nc;
                    if !label[idx] && same_segment(ri, cur, (nr, nc), alpha, theta) {
                        label[idx] = true;
                        queue.push_back((nr, nc));
                    }
                }
            }
            if cells.len() >= p.min_cluster_points {
                cells.sort_unstable();
                let min_range = cells
                    .iter()
                    .map(|&(r, c)| ri.range(r, c))
                    .fold(f64::INFINITY, f64::min);
                out.push(Cluster3D { cells, min_range });
            }
        }
    }
    out
}

/// Projects a segment's points and returns their tight pixel bound, clipped
/// to the image. `None` when no point lands inside the image.
pub fn project_cluster(c: &Cluster3D, ri: &RangeImage, cam: &CameraModel) -> Option<Cluster2D> {
    let mut any_inside = false;
    let (mut u0, mut v0, mut u1, mut v1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(r, col) in &c.cells {
        let Some(p) = ri.point(r, col) else { continue };
        let Some((u, v, _)) = cam.project(&p) else { continue };
        any_inside |= cam.in_image(u, v);
        u0 = u0.min(u);
        v0 = v0.min(v);
        u1 = u1.max(u);
        v1 = v1.max(v);
    }
    if !any_inside {
        return None;
    }
    // a pixel is covered when a projection falls inside it
    let clamp = |x: f64| x.clamp(i32::MIN as f64 / 2.0, i32::MAX as f64 / 2.0);
    let bbox = PixelBox::new(
        clamp(u0.floor()) as i32,
        clamp(v0.floor()) as i32,
        clamp(u1.floor()) as i32 + 1,
        clamp(v1.floor()) as i32 + 1,
    )
    .clamp_to(cam.frame());
    (!bbox.is_empty()).then_some(Cluster2D::new(bbox, c.min_range))
}

/// Full LiDAR stage: crop, segment, project.
pub fn lidar_clusters(ri: &RangeImage, cam: &CameraModel, p: &ClusterParams) -> Vec<Cluster2D> {
    let cropped = crop_fov(ri, cam);
    depth_cluster(&cropped, p)
        .iter()
        .filter_map(|c| project_cluster(c, &cropped, cam))
        .collect()
}

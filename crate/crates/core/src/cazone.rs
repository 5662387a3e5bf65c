//! Collision-avoidance zones: depth-based merging of projected clusters and
//! speed-dependent priority assignment.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{depth_margin, inflate, iou, FrameSize, PixelBox};
use crate::lidar::Cluster2D;

/// Inflated boxes of depth-close clusters must overlap more than this.
pub const IOU_CLOSE: f64 = 0.1;
/// Clusters overlapping more than this merge regardless of depth.
pub const IOU_OVERLAP: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MergeParams {
    /// Closeness margin, pixels per meter of depth.
    pub a: f64,
    /// Maximum depth difference for two clusters to count as close (m).
    #[serde(rename = "L")]
    pub l: f64,
    /// Pre-merge inflation, pixels per meter of depth.
    pub inflate_c: f64,
}

impl Default for MergeParams {
    fn default() -> Self {
        Self {
            a: 0.5,
            l: 5.0,
            inflate_c: 0.2,
        }
    }
}

impl MergeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) {
            return Err(Error::invalid("merge.a", "must be >= 0"));
        }
        if !(self.l > 0.0) {
            return Err(Error::invalid("merge.L", "must be > 0"));
        }
        if !(self.inflate_c >= 0.0) {
            return Err(Error::invalid("merge.inflate_c", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Priority {
    #[serde(rename = "HP")]
    High,
    #[serde(rename = "LP")]
    Low,
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Priority::High => "HP",
            Priority::Low => "LP",
        })
    }
}

/// Speed (m/s) to safety distance (m) table.
///
/// Lookup takes the first entry whose speed is at least the ego speed, and
/// the last entry beyond the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct SafetyPolicy {
    entries: Vec<(f64, f64)>,
}

impl SafetyPolicy {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("safety_policy", "needs at least one entry"));
        }
        for (i, &(speed, dist)) in entries.iter().enumerate() {
            if !(speed >= 0.0) || !(dist > 0.0) {
                return Err(Error::invalid(
                    format!("safety_policy[{i}]"),
                    "speed must be >= 0 and distance > 0",
                ));
            }
            if i > 0 {
                let (ps, pd) = entries[i - 1];
                if speed <= ps {
                    return Err(Error::invalid(format!("safety_policy[{i}]"), "speeds must increase"));
                }
                if dist < pd {
                    return Err(Error::invalid(
                        format!("safety_policy[{i}]"),
                        "distances must be nondecreasing in speed",
                    ));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Typical stopping distances from the UK Highway Code (20..70 mph).
    pub fn uk_highway_code() -> Self {
        const MPH: f64 = 0.44704;
        Self::new(vec![
            (20.0 * MPH, 12.0),
            (30.0 * MPH, 23.0),
            (40.0 * MPH, 36.0),
            (50.0 * MPH, 53.0),
            (60.0 * MPH, 73.0),
            (70.0 * MPH, 96.0),
        ])
        .expect("static table is valid")
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn distance(&self, ego_speed: f64) -> f64 {
        self.entries
            .iter()
            .find(|(s, _)| *s >= ego_speed)
            .or(self.entries.last())
            .map(|e| e.1)
            .expect("policy is nonempty")
    }
}

impl Default for SafetyPolicy {
    fn default() -> Self {
        Self::uk_highway_code()
    }
}

impl TryFrom<Vec<(f64, f64)>> for SafetyPolicy {
    type Error = Error;

    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SafetyPolicy> for Vec<(f64, f64)> {
    fn from(p: SafetyPolicy) -> Self {
        p.entries
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CAZone {
    pub bbox: PixelBox,
    pub depth: f64,
    pub priority: Priority,
}

impl CAZone {
    pub fn new(bbox: PixelBox, depth: f64, priority: Priority) -> Self {
        Self { bbox, depth, priority }
    }

    pub fn is_hp(&self) -> bool {
        self.priority == Priority::High
    }
}

/// Grows each cluster by `inflate_c * depth` pixels per side; far clusters
/// grow more.
pub fn pre_inflate(clusters: &[Cluster2D], p: &MergeParams, frame: FrameSize) -> Vec<Cluster2D> {
    clusters
        .iter()
        .map(|c| Cluster2D::new(inflate(&c.bbox, depth_margin(p.inflate_c, c.depth), frame), c.depth))
        .collect()
}

/// Depth within `L` and the depth-margined boxes overlap by more than 0.1.
pub fn check_close(c1: &Cluster2D, c2: &Cluster2D, p: &MergeParams, frame: FrameSize) -> bool {
    if (c1.depth - c2.depth).abs() > p.l {
        return false;
    }
    let b1 = inflate(&c1.bbox, depth_margin(p.a, c1.depth), frame);
    let b2 = inflate(&c2.bbox, depth_margin(p.a, c2.depth), frame);
    iou(&b1, &b2) > IOU_CLOSE
}

/// True when the merge rule would join the two clusters.
pub fn mergeable(c1: &Cluster2D, c2: &Cluster2D, p: &MergeParams, frame: FrameSize) -> bool {
    check_close(c1, c2, p, frame) || iou(&c1.bbox, &c2.bbox) > IOU_OVERLAP
}

/// A merged region together with the input indices it absorbed.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedCluster {
    pub cluster: Cluster2D,
    pub members: Vec<usize>,
}

/// Depth-based merging, tracking which inputs end up in each output.
///
/// Clusters are scanned nearest first (ties by box), so the result depends
/// only on the set of clusters, not on their order. In each pass a cluster
/// absorbs the first partner that is close, or failing that the first that
/// overlaps by more than 0.3. The merged box is the bounding union and
/// keeps the smaller depth. Passes repeat until nothing merges.
pub fn merge_tracked(clusters: &[Cluster2D], p: &MergeParams, frame: FrameSize) -> Vec<MergedCluster> {
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&clusters[i], &clusters[j]);
        a.depth
            .total_cmp(&b.depth)
            .then_with(|| (a.bbox.x_min, a.bbox.y_min, a.bbox.x_max, a.bbox.y_max).cmp(&(b.bbox.x_min, b.bbox.y_min, b.bbox.x_max, b.bbox.y_max)))
    });
    let mut cur: Vec<MergedCluster> = order
        .into_iter()
        .map(|i| MergedCluster {
            cluster: clusters[i],
            members: vec![i],
        })
        .collect();
    let mut merged = true;
    while merged {
        merged = false;
        let mut i = 0;
        while i < cur.len() {
            let c1 = cur[i].cluster;
            let partner = (0..cur.len())
                .find(|&j| j != i && check_close(&c1, &cur[j].cluster, p, frame))
                .or_else(|| {
                    (0..cur.len()).find(|&j| j != i && iou(&c1.bbox, &cur[j].cluster.bbox) > IOU_OVERLAP)
                });
            match partner {
                Some(j) => {
                    let absorbed = cur.remove(j);
                    let ti = if j < i { i - 1 } else { i };
                    let target = &mut cur[ti];
                    target.cluster = Cluster2D::new(
                        target.cluster.bbox.union(&absorbed.cluster.bbox),
                        target.cluster.depth.min(absorbed.cluster.depth),
                    );
                    target.members.extend(absorbed.members);
                    merged = true;
                    i = ti + 1;
                }
                None => i += 1,
            }
        }
    }
    for m in &mut cur {
        m.members.sort_unstable();
    }
    cur
}

pub fn merge(clusters: &[Cluster2D], p: &MergeParams, frame: FrameSize) -> Vec<Cluster2D> {
    merge_tracked(clusters, p, frame).into_iter().map(|m| m.cluster).collect()
}

/// HP when the zone is no farther than the safety distance for `ego_speed`.
pub fn assign_priority(zones: &[Cluster2D], ego_speed: f64, policy: &SafetyPolicy) -> Vec<CAZone> {
    let safe = policy.distance(ego_speed);
    zones
        .iter()
        .map(|z| {
            let priority = if z.depth <= safe { Priority::High } else { Priority::Low };
            CAZone::new(z.bbox, z.depth, priority)
        })
        .collect()
}

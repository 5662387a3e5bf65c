//! Frame orchestration: LiDAR clusters first, camera inference later.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cazone::{assign_priority, merge, pre_inflate, CAZone, Priority};
use crate::config::PipelineConfig;
use crate::detect::{backmap, Detection, Detector, OracleDetector};
use crate::error::Result;
use crate::geom::PixelBox;
use crate::lidar::{crop_fov, lidar_clusters, Cluster2D};
use crate::packing::{assemble, choose_canvas, pack_ffdh, CompositeImage};
use crate::raster::Raster;
use crate::scene::{render_camera_frame, Scene};
use crate::scheduler::{simulate_cost, LatencyTable, SchedulePlan, Scheduler};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Wall clock of FOV crop, clustering and projection.
    pub lidar: f64,
    /// Wall clock of merging, priority, packing, scheduling and assembly.
    pub preprocess: f64,
    /// Latency-table cost of the plan.
    pub inference_sim: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub clusters_2d: usize,
    pub cazones_hp: usize,
    pub cazones_lp: usize,
    pub composites_hp: usize,
    pub composites_lp: usize,
    pub dropped_lp: usize,
    /// CAZones processed, either on a kept composite or through the full frame.
    pub cazones_kept: usize,
    pub cazones_dropped: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub canvas: u32,
    pub final_size: u32,
    pub fallback: bool,
    pub batch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDetection {
    #[serde(rename = "box")]
    pub bbox: PixelBox,
    #[serde(rename = "class")]
    pub class_label: String,
    pub score: f64,
    pub priority: Priority,
}

/// Simulated time at which the first composite holding a CAZone of each
/// priority finishes. Composites complete in plan order, the k-th at the
/// table cost of a batch of k.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FirstDetection {
    pub hp: Option<f64>,
    pub lp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame_id: String,
    pub timings_ms: Timings,
    pub counts: Counts,
    pub plan: PlanSummary,
    pub detections: Vec<FrameDetection>,
    pub first_detection_ms: FirstDetection,
}

/// Everything a frame run produced, for visualization and tests.
#[derive(Clone, Debug)]
pub struct FrameRun {
    pub report: FrameReport,
    pub clusters: Vec<Cluster2D>,
    pub zones: Vec<CAZone>,
    pub composites: Vec<CompositeImage>,
    pub plan: SchedulePlan,
    pub rasters: Vec<Raster>,
}

#[derive(Clone, Debug)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub table: LatencyTable,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let table = config.load_table()?;
        Ok(Self { config, table })
    }

    pub fn with_table(config: PipelineConfig, table: LatencyTable) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, table })
    }

    pub fn scheduler(&self) -> Scheduler<'_> {
        let mut s = Scheduler::new(&self.table, self.config.budget());
        s.fallback_coverage = self.config.fallback_coverage;
        s
    }

    /// Runs a frame with the oracle detector built from the scene's own
    /// ground truth.
    pub fn run_frame(&self, frame_id: &str, scene: &Scene) -> Result<FrameRun> {
        let oracle = OracleDetector::new(scene.ground_truth(), self.config.null_bg);
        self.run_frame_with(frame_id, scene, &oracle)
    }

    pub fn run_frame_with(&self, frame_id: &str, scene: &Scene, detector: &dyn Detector) -> Result<FrameRun> {
        let cfg = &self.config;
        let cam = &scene.camera;
        let frame = cam.frame();
        let range_image = scene.range_image();
        let camera_frame = render_camera_frame(&scene.ground_truth(), cam);

        let t0 = Instant::now();
        let cropped = crop_fov(&range_image, cam);
        let clusters = lidar_clusters(&cropped, cam, &cfg.cluster);
        let lidar_ms = ms_since(t0);

        let t1 = Instant::now();
        let inflated = pre_inflate(&clusters, &cfg.merge, frame);
        let merged = merge(&inflated, &cfg.merge, frame);
        let zones = assign_priority(&merged, scene.ego_speed_mps, &cfg.safety_policy);
        let composites = if zones.is_empty() {
            Vec::new()
        } else {
            let side = choose_canvas(&zones, cfg.gap, &cfg.downsize);
            pack_ffdh(&zones, side, cfg.gap, &cfg.downsize)?
        };
        let plan = self.scheduler().guarantee(&composites, frame)?;
        let rasters: Vec<Raster> = plan
            .kept
            .par_iter()
            .map(|c| assemble(c, &camera_frame, cfg.null_bg))
            .collect();
        let preprocess_ms = ms_since(t1);

        let mut detections = Vec::new();
        for (c, r) in plan.kept.iter().zip(&rasters) {
            let dets = detector.detect(r, c);
            for (d, pl) in backmap(&dets, c, frame) {
                let priority = if plan.fallback_full_frame {
                    detection_priority(&d, &zones)
                } else {
                    pl.zone.priority
                };
                detections.push(FrameDetection {
                    bbox: d.bbox,
                    class_label: d.class_label,
                    score: d.score,
                    priority,
                });
            }
        }

        let report = FrameReport {
            frame_id: frame_id.to_string(),
            timings_ms: Timings {
                lidar: lidar_ms,
                preprocess: preprocess_ms,
                inference_sim: simulate_cost(&plan, &self.table),
            },
            counts: counts(&clusters, &zones, &composites, &plan),
            plan: PlanSummary {
                canvas: plan.canvas,
                final_size: plan.final_size,
                fallback: plan.fallback_full_frame,
                batch: plan.kept.len(),
            },
            detections,
            first_detection_ms: first_detection(&plan, &zones, &self.table),
        };
        Ok(FrameRun {
            report,
            clusters,
            zones,
            composites,
            plan,
            rasters,
        })
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn detection_priority(d: &Detection, zones: &[CAZone]) -> Priority {
    if zones.iter().any(|z| z.is_hp() && z.bbox.intersects(&d.bbox)) {
        Priority::High
    } else {
        Priority::Low
    }
}

fn counts(clusters: &[Cluster2D], zones: &[CAZone], composites: &[CompositeImage], plan: &SchedulePlan) -> Counts {
    let cazones_hp = zones.iter().filter(|z| z.is_hp()).count();
    let cazones_dropped: usize = plan.dropped_lp.iter().map(|c| c.placements.len()).sum();
    Counts {
        clusters_2d: clusters.len(),
        cazones_hp,
        cazones_lp: zones.len() - cazones_hp,
        composites_hp: composites.iter().filter(|c| c.is_hp()).count(),
        composites_lp: composites.iter().filter(|c| !c.is_hp()).count(),
        dropped_lp: plan.dropped_lp.len(),
        cazones_kept: zones.len() - cazones_dropped,
        cazones_dropped,
    }
}

fn first_detection(plan: &SchedulePlan, zones: &[CAZone], table: &LatencyTable) -> FirstDetection {
    let done = |k: usize| table.lookup(plan.final_size, k as u32 + 1).unwrap_or(plan.predicted_ms);
    if plan.fallback_full_frame {
        let any = |p: Priority| zones.iter().any(|z| z.priority == p).then_some(plan.predicted_ms);
        return FirstDetection {
            hp: any(Priority::High),
            lp: any(Priority::Low),
        };
    }
    let first = |p: Priority| {
        plan.kept
            .iter()
            .position(|c| c.placements.iter().any(|pl| pl.zone.priority == p))
            .map(done)
    };
    FirstDetection {
        hp: first(Priority::High),
        lp: first(Priority::Low),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameCost {
    pub frame_id: String,
    pub proposed_ms: f64,
    pub preprocess_ms: f64,
    pub fallback: bool,
    pub composites: usize,
    pub final_size: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub frames: usize,
    pub mean_proposed_ms: f64,
    pub full_frame_608_ms: Option<f64>,
    pub full_frame_512_ms: Option<f64>,
    pub mean_preprocess_ms: f64,
    /// Full-frame @608 cost over the mean proposed cost.
    pub speedup_vs_608: Option<f64>,
    pub per_frame: Vec<FrameCost>,
}

/// Mean simulated cost of the pipeline against processing whole frames.
/// Frames run in parallel; results keep input order.
pub fn compare_fullframe(pipeline: &Pipeline, scenes: &[(String, Scene)]) -> Result<Comparison> {
    let per_frame = scenes
        .par_iter()
        .map(|(id, scene)| {
            let run = pipeline.run_frame(id, scene)?;
            let r = &run.report;
            Ok(FrameCost {
                frame_id: id.clone(),
                proposed_ms: r.timings_ms.inference_sim,
                preprocess_ms: r.timings_ms.lidar + r.timings_ms.preprocess,
                fallback: r.plan.fallback,
                composites: r.plan.batch,
                final_size: r.plan.final_size,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_frame.len();
    let mean = |f: fn(&FrameCost) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_frame.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let mean_proposed_ms = mean(|f| f.proposed_ms);
    let full_608 = pipeline.table.cell(608, 1);
    Ok(Comparison {
        frames: n,
        mean_proposed_ms,
        full_frame_608_ms: full_608,
        full_frame_512_ms: pipeline.table.cell(512, 1),
        mean_preprocess_ms: mean(|f| f.preprocess_ms),
        speedup_vs_608: full_608.filter(|_| mean_proposed_ms > 0.0).map(|f| f / mean_proposed_ms),
        per_frame,
    })
}

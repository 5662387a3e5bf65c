//! Detector interface, the bundled oracle and stub detectors, and mapping of
//! composite-space detections back onto the camera frame.

use serde::{Deserialize, Serialize};

use crate::geom::{FrameSize, PixelBox};
use crate::packing::{CompositeImage, Placement};
use crate::raster::{Raster, Rgb};
use crate::scene::GroundTruth;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: PixelBox,
    #[serde(rename = "class")]
    pub class_label: String,
    pub score: f64,
}

/// Anything that turns a rendered composite into boxes on that composite.
pub trait Detector: Sync {
    fn detect(&self, raster: &Raster, composite: &CompositeImage) -> Vec<Detection>;
}

/// Reports the ground truth visible through each placement.
///
/// Each ground-truth box is clipped to the placement's source region and
/// mapped to composite pixels, with score 1. Slots holding only background
/// yield nothing.
#[derive(Clone, Debug)]
pub struct OracleDetector {
    pub truth: Vec<GroundTruth>,
    pub background: Rgb,
}

impl OracleDetector {
    pub fn new(truth: Vec<GroundTruth>, background: Rgb) -> Self {
        Self { truth, background }
    }
}

/// Maps a source-frame box into a placement's slot.
pub fn to_composite(b: &PixelBox, pl: &Placement) -> PixelBox {
    let src = pl.source();
    let (ox, oy) = (pl.offset.0 as f64, pl.offset.1 as f64);
    let fx = |x: i32| (ox + (x - src.x_min) as f64 / pl.scale).round() as i32;
    let fy = |y: i32| (oy + (y - src.y_min) as f64 / pl.scale).round() as i32;
    let slot = pl.slot();
    PixelBox::new(fx(b.x_min), fy(b.y_min), fx(b.x_max), fy(b.y_max))
        .intersection(&slot)
        .unwrap_or(PixelBox::new(slot.x_min, slot.y_min, slot.x_min, slot.y_min))
}

impl Detector for OracleDetector {
    fn detect(&self, raster: &Raster, composite: &CompositeImage) -> Vec<Detection> {
        let mut out = Vec::new();
        for pl in &composite.placements {
            if raster.region_is(&pl.slot(), self.background) {
                continue;
            }
            for gt in &self.truth {
                let Some(clip) = gt.bbox.intersection(&pl.source()) else {
                    continue;
                };
                let b = to_composite(&clip, pl);
                if !b.is_empty() {
                    out.push(Detection {
                        bbox: b,
                        class_label: gt.class_label.clone(),
                        score: 1.0,
                    });
                }
            }
        }
        out
    }
}

/// Content-only stand-in: one low-confidence box per slot around the pixels
/// that differ from the slot's top-left color.
#[derive(Clone, Debug)]
pub struct ContentStub {
    pub background: Rgb,
}

impl Detector for ContentStub {
    fn detect(&self, raster: &Raster, composite: &CompositeImage) -> Vec<Detection> {
        let mut out = Vec::new();
        for pl in &composite.placements {
            let s = pl.slot();
            if s.is_empty() || raster.region_is(&s, self.background) {
                continue;
            }
            let reference = raster.get(s.x_min as u32, s.y_min as u32);
            let mut hit: Option<PixelBox> = None;
            for y in s.y_min..s.y_max {
                for x in s.x_min..s.x_max {
                    if raster.get(x as u32, y as u32) != reference {
                        let px = PixelBox::new(x, y, x + 1, y + 1);
                        hit = Some(hit.map_or(px, |h| h.union(&px)));
                    }
                }
            }
            if let Some(bbox) = hit {
                out.push(Detection {
                    bbox,
                    class_label: "object".into(),
                    score: 0.5,
                });
            }
        }
        out
    }
}

/// The placement whose slot holds the detection's center, if any.
pub fn owning_placement<'a>(det: &Detection, composite: &'a CompositeImage) -> Option<&'a Placement> {
    let cx = (det.bbox.x_min + det.bbox.x_max) / 2;
    let cy = (det.bbox.y_min + det.bbox.y_max) / 2;
    composite.placements.iter().find(|pl| pl.slot().contains_point(cx, cy))
}

/// Inverse of the placement mapping, clipped to the frame.
pub fn to_frame(b: &PixelBox, pl: &Placement, frame: FrameSize) -> PixelBox {
    let src = pl.source();
    let (ox, oy) = (pl.offset.0 as i32, pl.offset.1 as i32);
    let fx = |x: i32| src.x_min + ((x - ox) as f64 * pl.scale).round() as i32;
    let fy = |y: i32| src.y_min + ((y - oy) as f64 * pl.scale).round() as i32;
    PixelBox::new(fx(b.x_min), fy(b.y_min), fx(b.x_max), fy(b.y_max)).clamp_to(frame)
}

/// Maps detections back to the frame. Detections whose center is on
/// background belong to no placement and are dropped.
pub fn backmap<'a>(
    dets: &[Detection],
    composite: &'a CompositeImage,
    frame: FrameSize,
) -> Vec<(Detection, &'a Placement)> {
    dets.iter()
        .filter_map(|d| {
            let pl = owning_placement(d, composite)?;
            let bbox = to_frame(&d.bbox, pl, frame);
            (!bbox.is_empty()).then(|| {
                (
                    Detection {
                        bbox,
                        class_label: d.class_label.clone(),
                        score: d.score,
                    },
                    pl,
                )
            })
        })
        .collect()
}

//! Variable downsizing of zones and depth-aware first-fit decreasing height
//! (FFDH) packing onto square composite canvases.
//!
//! Each zone is shrunk by a factor that decreases linearly with depth, so
//! near zones lose more resolution than far ones. Shrunk zones, padded by a
//! gap on every side, are packed level by level: HP zones first, then LP
//! zones into whatever room is left before new LP canvases are opened.

use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::cazone::{CAZone, Priority};
use crate::error::{Error, Result};
use crate::geom::{round_up_32, FrameSize, PixelBox};
use crate::raster::{Raster, Rgb};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DownsizeParams {
    /// Factor applied at zero depth.
    pub d0: f64,
    /// Factor decrease per meter of depth.
    pub b: f64,
    pub d_min: f64,
}

impl Default for DownsizeParams {
    fn default() -> Self {
        Self {
            d0: 3.0,
            b: 2.0 / 75.0,
            d_min: 1.0,
        }
    }
}

impl DownsizeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_min >= 1.0) {
            return Err(Error::invalid("downsize.d_min", "must be >= 1"));
        }
        if !(self.d0 >= self.d_min) {
            return Err(Error::invalid("downsize.d0", "must be >= d_min"));
        }
        if !(self.b >= 0.0) {
            return Err(Error::invalid("downsize.b", "must be >= 0"));
        }
        Ok(())
    }
}

/// `D = max(d_min, d0 - b * depth)`.
pub fn downsize_factor(depth: f64, p: &DownsizeParams) -> f64 {
    (p.d0 - p.b * depth).max(p.d_min)
}

/// Size of a `width x height` region shrunk by `factor`, rounded up so no
/// source pixel is lost.
pub fn downsized_dims(width: u32, height: u32, factor: f64) -> (u32, u32) {
    let shrink = |n: u32| ((n as f64 / factor).ceil() as u32).max(1);
    (shrink(width), shrink(height))
}

fn zone_dims(z: &CAZone, p: &DownsizeParams) -> (u32, u32) {
    downsized_dims(z.bbox.width(), z.bbox.height(), downsize_factor(z.depth, p))
}

/// Canvas side: the largest downsized zone dimension plus gaps, rounded up
/// to a multiple of 32. Empty input yields 32.
pub fn choose_canvas(zones: &[CAZone], gap: u32, p: &DownsizeParams) -> u32 {
    let largest = zones
        .iter()
        .map(|z| {
            let (w, h) = zone_dims(z, p);
            w.max(h) + 2 * gap
        })
        .max()
        .unwrap_or(0);
    round_up_32(largest)
}

/// A zone's slot on a canvas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub zone: CAZone,
    /// Top-left of the content on the canvas (gap excluded).
    pub offset: (u32, u32),
    pub width: u32,
    pub height: u32,
    /// Source pixels per canvas pixel.
    pub scale: f64,
}

impl Placement {
    pub fn slot(&self) -> PixelBox {
        PixelBox::from_origin_size(self.offset.0 as i32, self.offset.1 as i32, self.width, self.height)
    }

    pub fn source(&self) -> PixelBox {
        self.zone.bbox
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeImage {
    /// Creation order within the frame.
    pub index: usize,
    pub side: u32,
    pub placements: Vec<Placement>,
    pub priority: Priority,
}

impl CompositeImage {
    pub fn is_hp(&self) -> bool {
        self.priority == Priority::High
    }

    fn refresh_priority(&mut self) {
        self.priority = if self.placements.iter().any(|p| p.zone.is_hp()) {
            Priority::High
        } else {
            Priority::Low
        };
    }

    /// The same layout mapped onto a `new_side` canvas. Slot intervals are
    /// mapped with a monotone floor, so disjoint slots stay disjoint and
    /// in bounds; each placement's scale grows to fit its new slot.
    pub fn rescaled(&self, new_side: u32) -> CompositeImage {
        if new_side == self.side {
            return self.clone();
        }
        let r = new_side as f64 / self.side as f64;
        let map = |v: u32| ((v as f64 * r).floor() as u32).min(new_side);
        let placements = self
            .placements
            .iter()
            .map(|pl| {
                let x0 = map(pl.offset.0);
                let y0 = map(pl.offset.1);
                let room_w = (map(pl.offset.0 + pl.width) - x0).max(1);
                let room_h = (map(pl.offset.1 + pl.height) - y0).max(1);
                let (sw, sh) = (pl.zone.bbox.width() as f64, pl.zone.bbox.height() as f64);
                let scale = (sw / room_w as f64).max(sh / room_h as f64).max(pl.scale);
                let (w, h) = downsized_dims(pl.zone.bbox.width(), pl.zone.bbox.height(), scale);
                Placement {
                    zone: pl.zone,
                    offset: (x0, y0),
                    width: w.min(room_w),
                    height: h.min(room_h),
                    scale,
                }
            })
            .collect();
        CompositeImage {
            index: self.index,
            side: new_side,
            placements,
            priority: self.priority,
        }
    }

    /// A single placement showing the whole frame, letterboxed into a
    /// `side x side` canvas.
    pub fn full_frame(index: usize, frame: FrameSize, side: u32, zone: CAZone) -> CompositeImage {
        let scale = (frame.width.max(frame.height) as f64 / side as f64).max(1.0);
        let (w, h) = downsized_dims(frame.width, frame.height, scale);
        CompositeImage {
            index,
            side,
            placements: vec![Placement {
                zone: CAZone::new(frame.full_box(), zone.depth, zone.priority),
                offset: (0, 0),
                width: w.min(side),
                height: h.min(side),
                scale,
            }],
            priority: zone.priority,
        }
    }

    /// Checks bounds and pairwise separation of the slots.
    pub fn check_layout(&self, min_separation: u32) -> std::result::Result<(), String> {
        let canvas = PixelBox::new(0, 0, self.side as i32, self.side as i32);
        let sep = min_separation as i32;
        for (i, a) in self.placements.iter().enumerate() {
            let sa = a.slot();
            if !canvas.contains(&sa) {
                return Err(format!("slot {i} {sa:?} exceeds canvas {}", self.side));
            }
            for (j, b) in self.placements.iter().enumerate().skip(i + 1) {
                let sb = b.slot();
                let grown = PixelBox::new(sa.x_min - sep, sa.y_min - sep, sa.x_max + sep, sa.y_max + sep);
                if grown.intersects(&sb) || sa.intersects(&sb) {
                    return Err(format!("slots {i} and {j} closer than {min_separation}px"));
                }
            }
        }
        Ok(())
    }
}

/// One horizontal level of an FFDH layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Level {
    pub y: u32,
    pub height: u32,
    pub used: u32,
}

/// FFDH level state for one bin (or an unbounded strip).
#[derive(Clone, Debug)]
pub struct LevelPacker {
    width: u32,
    max_height: Option<u32>,
    levels: Vec<Level>,
    next_y: u32,
}

impl LevelPacker {
    pub fn new(width: u32, max_height: Option<u32>) -> Self {
        Self {
            width,
            max_height,
            levels: Vec::new(),
            next_y: 0,
        }
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn height(&self) -> u32 {
        self.next_y
    }

    /// Left-justifies the rectangle on the first existing level it fits.
    pub fn place_on_level(&mut self, w: u32, h: u32) -> Option<(u32, u32)> {
        let width = self.width;
        let lvl = self.levels.iter_mut().find(|l| l.used + w <= width && h <= l.height)?;
        let at = (lvl.used, lvl.y);
        lvl.used += w;
        Some(at)
    }

    /// Opens a new level of height `h` on top of the existing ones.
    pub fn place_on_new_level(&mut self, w: u32, h: u32) -> Option<(u32, u32)> {
        if w > self.width || self.max_height.is_some_and(|m| self.next_y + h > m) {
            return None;
        }
        let y = self.next_y;
        self.levels.push(Level { y, height: h, used: w });
        self.next_y += h;
        Some((0, y))
    }

    pub fn place(&mut self, w: u32, h: u32) -> Option<(u32, u32)> {
        self.place_on_level(w, h).or_else(|| self.place_on_new_level(w, h))
    }
}

/// Order used by FFDH: decreasing height, then decreasing width, then input
/// position.
pub fn ffdh_order(dims: &[(u32, u32)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dims.len()).collect();
    idx.sort_by_key(|&i| (Reverse(dims[i].1), Reverse(dims[i].0), i));
    idx
}

/// Classical FFDH into a single strip of the given width.
/// Returns the packer (levels) and each rectangle's position.
pub fn pack_strip(dims: &[(u32, u32)], width: u32) -> Result<(LevelPacker, Vec<(u32, u32)>)> {
    let mut packer = LevelPacker::new(width, None);
    let mut pos = vec![(0, 0); dims.len()];
    for i in ffdh_order(dims) {
        let (w, h) = dims[i];
        pos[i] = packer.place(w, h).ok_or(Error::ZoneTooLarge {
            index: i,
            needed: w,
            side: width,
        })?;
    }
    Ok((packer, pos))
}

struct Canvas {
    packer: LevelPacker,
    composite: CompositeImage,
}

/// Depth-aware FFDH over canvases of side `side`.
///
/// Levels of every open canvas are tried first-fit, then a new level on the
/// first canvas with vertical room, then a new canvas.
pub fn pack_ffdh(zones: &[CAZone], side: u32, gap: u32, p: &DownsizeParams) -> Result<Vec<CompositeImage>> {
    let factors: Vec<f64> = zones.iter().map(|z| downsize_factor(z.depth, p)).collect();
    let dims: Vec<(u32, u32)> = zones
        .iter()
        .zip(&factors)
        .map(|(z, &d)| downsized_dims(z.bbox.width(), z.bbox.height(), d))
        .collect();
    let padded: Vec<(u32, u32)> = dims.iter().map(|&(w, h)| (w + 2 * gap, h + 2 * gap)).collect();
    for (i, &(w, h)) in padded.iter().enumerate() {
        if w.max(h) > side {
            return Err(Error::ZoneTooLarge {
                index: i,
                needed: w.max(h),
                side,
            });
        }
    }

    let order = ffdh_order(&padded);
    let hp = order.iter().copied().filter(|&i| zones[i].is_hp());
    let lp = order.iter().copied().filter(|&i| !zones[i].is_hp());

    let mut canvases: Vec<Canvas> = Vec::new();
    for i in hp.chain(lp) {
        let (w, h) = padded[i];
        let spot = canvases
            .iter_mut()
            .enumerate()
            .find_map(|(ci, c)| c.packer.place_on_level(w, h).map(|at| (ci, at)))
            .or_else(|| {
                canvases
                    .iter_mut()
                    .enumerate()
                    .find_map(|(ci, c)| c.packer.place_on_new_level(w, h).map(|at| (ci, at)))
            });
        let (ci, (x, y)) = match spot {
            Some(s) => s,
            None => {
                let mut packer = LevelPacker::new(side, Some(side));
                let at = packer.place_on_new_level(w, h).expect("zone fits an empty canvas");
                canvases.push(Canvas {
                    packer,
                    composite: CompositeImage {
                        index: canvases.len(),
                        side,
                        placements: Vec::new(),
                        priority: zones[i].priority,
                    },
                });
                (canvases.len() - 1, at)
            }
        };
        let c = &mut canvases[ci].composite;
        c.placements.push(Placement {
            zone: zones[i],
            offset: (x + gap, y + gap),
            width: dims[i].0,
            height: dims[i].1,
            scale: factors[i],
        });
        c.refresh_priority();
    }
    Ok(canvases.into_iter().map(|c| c.composite).collect())
}

/// Renders a composite: each placement's source region is box-filtered by
/// its scale into its slot; everything else is `background`.
pub fn assemble(composite: &CompositeImage, frame: &Raster, background: Rgb) -> Raster {
    let mut out = Raster::filled(composite.side, composite.side, background);
    let frame_box = PixelBox::new(0, 0, frame.width() as i32, frame.height() as i32);
    for pl in &composite.placements {
        let Some(src) = pl.zone.bbox.intersection(&frame_box) else {
            continue;
        };
        let span = |i: u32, origin: i32, limit: i32| {
            let lo = origin + (i as f64 * pl.scale).floor() as i32;
            let hi = origin + ((i + 1) as f64 * pl.scale).floor() as i32;
            (lo.min(limit - 1), hi.max(lo + 1).min(limit))
        };
        for j in 0..pl.height {
            let (y0, y1) = span(j, pl.zone.bbox.y_min, src.y_max);
            let y0 = y0.max(src.y_min);
            for i in 0..pl.width {
                let (x0, x1) = span(i, pl.zone.bbox.x_min, src.x_max);
                let x0 = x0.max(src.x_min);
                let mut acc = [0u32; 3];
                let mut n = 0u32;
                for y in y0..y1 {
                    for x in x0..x1 {
                        let px = frame.get(x as u32, y as u32).0;
                        for k in 0..3 {
                            acc[k] += px[k] as u32;
                        }
                        n += 1;
                    }
                }
                if n > 0 {
                    let avg = acc.map(|s| ((s + n / 2) / n) as u8);
                    out.set(pl.offset.0 + i, pl.offset.1 + j, Rgb(avg));
                }
            }
        }
    }
    out
}

//! Integer pixel rectangles shared by every pipeline stage.
//!
//! Boxes are closed-open: a box covers the pixels `x_min..x_max` by
//! `y_min..y_max`, so `area = width * height` and two boxes that share an
//! edge do not intersect.

use serde::{Deserialize, Serialize};

/// Side length granularity of detector inputs.
pub const CANVAS_QUANTUM: u32 = 32;

/// Image dimensions in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSize {
    pub width: u32,
    pub height: u32,
}

impl FrameSize {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    /// The box covering the whole frame.
    pub fn full_box(&self) -> PixelBox {
        PixelBox::new(0, 0, self.width as i32, self.height as i32)
    }
}

/// Axis-aligned pixel box in frame coordinates (origin top-left, y down).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelBox {
    pub x_min: i32,
    pub y_min: i32,
    pub x_max: i32,
    pub y_max: i32,
}

impl PixelBox {
    /// Builds a box, swapping coordinates if they are given out of order.
    pub fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        Self {
            x_min: x0.min(x1),
            y_min: y0.min(y1),
            x_max: x0.max(x1),
            y_max: y0.max(y1),
        }
    }

    pub fn from_origin_size(x: i32, y: i32, width: u32, height: u32) -> Self {
        Self::new(x, y, x + width as i32, y + height as i32)
    }

    pub fn width(&self) -> u32 {
        (self.x_max - self.x_min) as u32
    }

    pub fn height(&self) -> u32 {
        (self.y_max - self.y_min) as u32
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.x_max <= self.x_min || self.y_max <= self.y_min
    }

    pub fn intersection(&self, other: &PixelBox) -> Option<PixelBox> {
        let b = PixelBox {
            x_min: self.x_min.max(other.x_min),
            y_min: self.y_min.max(other.y_min),
            x_max: self.x_max.min(other.x_max),
            y_max: self.y_max.min(other.y_max),
        };
        (!b.is_empty()).then_some(b)
    }

    pub fn intersects(&self, other: &PixelBox) -> bool {
        self.intersection(other).is_some()
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &PixelBox) -> PixelBox {
        PixelBox {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn contains(&self, other: &PixelBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    pub fn contains_point(&self, x: i32, y: i32) -> bool {
        x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max
    }

    /// Clamps the box to `[0, width] x [0, height]`.
    pub fn clamp_to(&self, frame: FrameSize) -> PixelBox {
        let w = frame.width as i32;
        let h = frame.height as i32;
        PixelBox {
            x_min: self.x_min.clamp(0, w),
            y_min: self.y_min.clamp(0, h),
            x_max: self.x_max.clamp(0, w),
            y_max: self.y_max.clamp(0, h),
        }
    }

    pub fn translate(&self, dx: i32, dy: i32) -> PixelBox {
        PixelBox {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }
}

/// Intersection over union. Zero when the union is empty.
pub fn iou(a: &PixelBox, b: &PixelBox) -> f64 {
    let inter = a.intersection(b).map_or(0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Moves every side outward by `margin` pixels, then clamps to the frame.
pub fn inflate(b: &PixelBox, margin: u32, frame: FrameSize) -> PixelBox {
    let m = margin as i32;
    PixelBox {
        x_min: b.x_min - m,
        y_min: b.y_min - m,
        x_max: b.x_max + m,
        y_max: b.y_max + m,
    }
    .clamp_to(frame)
}

/// Area of the union of a set of boxes (coordinate compression).
pub fn union_area(boxes: &[PixelBox]) -> u64 {
    let boxes: Vec<&PixelBox> = boxes.iter().filter(|b| !b.is_empty()).collect();
    let mut xs: Vec<i32> = boxes.iter().flat_map(|b| [b.x_min, b.x_max]).collect();
    xs.sort_unstable();
    xs.dedup();
    let mut total = 0u64;
    for win in xs.windows(2) {
        let (x0, x1) = (win[0], win[1]);
        let mut spans: Vec<(i32, i32)> = boxes
            .iter()
            .filter(|b| b.x_min <= x0 && b.x_max >= x1)
            .map(|b| (b.y_min, b.y_max))
            .collect();
        spans.sort_unstable();
        let mut covered = 0i64;
        let mut cur: Option<(i32, i32)> = None;
        for (lo, hi) in spans {
            match cur {
                Some((clo, chi)) if lo <= chi => cur = Some((clo, chi.max(hi))),
                _ => {
                    if let Some((clo, chi)) = cur {
                        covered += (chi - clo) as i64;
                    }
                    cur = Some((lo, hi));
                }
            }
        }
        if let Some((clo, chi)) = cur {
            covered += (chi - clo) as i64;
        }
        total += covered as u64 * (x1 - x0) as u64;
    }
    total
}

/// Margin in whole pixels for a coefficient (px per meter) at a depth.
pub fn depth_margin(coeff: f64, depth: f64) -> u32 {
    (coeff * depth).max(0.0).round() as u32
}

/// Smallest positive multiple of 32 that is `>= n`. Zero maps to 32.
pub fn round_up_32(n: u32) -> u32 {
    n.max(1).div_ceil(CANVAS_QUANTUM) * CANVAS_QUANTUM
}

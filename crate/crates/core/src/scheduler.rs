//! Profiled GPU latency model and the run-time guarantee for HP composites.
//!
//! The latency table maps (input side, batch size) to milliseconds; missing
//! cells are combinations that were not supported on the profiled device.
//! [`Scheduler::guarantee`] turns a frame's composites into a plan whose
//! predicted cost never exceeds the budget: LP composites are shed one at a
//! time, then HP composites are shrunk to a smaller profiled size, and as a
//! last resort the whole frame is processed at the largest affordable size.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cazone::{CAZone, Priority};
use crate::error::{Error, Result};
use crate::geom::{union_area, FrameSize, PixelBox};
use crate::packing::CompositeImage;

/// The profiled table shipped with the crate.
pub const TABLE_I_CSV: &str = include_str!("../fixtures/latency_table.csv");

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyTable {
    sizes: Vec<u32>,
    batches: Vec<u32>,
    entries: BTreeMap<(u32, u32), f64>,
}

impl LatencyTable {
    /// Parses the CSV layout without checking monotonicity.
    ///
    /// First row: a label cell followed by input sizes. Following rows: a
    /// batch size followed by milliseconds, blank where unsupported.
    pub fn parse_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = rdr.records();
        let header = rows
            .next()
            .ok_or_else(|| Error::LatencyTable("empty file".into()))??;
        let sizes = header
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<u32>()
                    .map_err(|_| Error::LatencyTable(format!("bad input size `{s}` in header")))
            })
            .collect::<Result<Vec<u32>>>()?;
        if sizes.is_empty() {
            return Err(Error::LatencyTable("header lists no input sizes".into()));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::LatencyTable("input sizes must be strictly increasing".into()));
        }

        let mut batches = Vec::new();
        let mut entries = BTreeMap::new();
        for (line, row) in rows.enumerate() {
            let row = row?;
            if row.iter().all(str::is_empty) {
                continue;
            }
            let batch: u32 = row[0]
                .parse()
                .map_err(|_| Error::LatencyTable(format!("row {}: bad batch size `{}`", line + 2, &row[0])))?;
            if batch == 0 || batches.last().is_some_and(|&b| b >= batch) {
                return Err(Error::LatencyTable(format!(
                    "row {}: batch sizes must be positive and increasing",
                    line + 2
                )));
            }
            if row.len() > sizes.len() + 1 {
                return Err(Error::LatencyTable(format!("row {}: more cells than input sizes", line + 2)));
            }
            for (cell, &size) in row.iter().skip(1).zip(&sizes) {
                if cell.is_empty() {
                    continue;
                }
                let ms: f64 = cell.parse().map_err(|_| {
                    Error::LatencyTable(format!("row {}: bad latency `{cell}` for size {size}", line + 2))
                })?;
                if !(ms.is_finite() && ms > 0.0) {
                    return Err(Error::LatencyTable(format!("row {}: latency must be > 0", line + 2)));
                }
                entries.insert((size, batch), ms);
            }
            batches.push(batch);
        }
        if entries.is_empty() {
            return Err(Error::LatencyTable("no latency cells".into()));
        }
        Ok(Self { sizes, batches, entries })
    }

    /// Parses and rejects tables that violate monotonicity.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let t = Self::parse_csv(text.as_bytes())?;
        let problems = t.monotonicity_violations();
        if let Some(first) = problems.first() {
            return Err(Error::LatencyTable(first.clone()));
        }
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn table_one() -> Self {
        Self::from_csv_str(TABLE_I_CSV).expect("bundled table is valid")
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn batches(&self) -> &[u32] {
        &self.batches
    }

    /// The exact cell, without rounding.
    pub fn cell(&self, size: u32, batch: u32) -> Option<f64> {
        self.entries.get(&(size, batch)).copied()
    }

    /// Latency for running `batch` inputs of side `size`. Unlisted sizes and
    /// batches round up to the next listed value; `None` means unsupported.
    pub fn lookup(&self, size: u32, batch: u32) -> Option<f64> {
        let s = *self.sizes.iter().find(|&&s| s >= size)?;
        let b = *self.batches.iter().find(|&&b| b >= batch.max(1))?;
        self.cell(s, b)
    }

    /// Every pair of adjacent cells along a row or column that decreases.
    pub fn monotonicity_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for &b in &self.batches {
            let row: Vec<(u32, f64)> = self.sizes.iter().filter_map(|&s| self.cell(s, b).map(|v| (s, v))).collect();
            for w in row.windows(2) {
                if w[1].1 < w[0].1 {
                    out.push(format!(
                        "batch {b}: size {} costs {}ms, less than size {} at {}ms",
                        w[1].0, w[1].1, w[0].0, w[0].1
                    ));
                }
            }
        }
        for &s in &self.sizes {
            let col: Vec<(u32, f64)> = self.batches.iter().filter_map(|&b| self.cell(s, b).map(|v| (b, v))).collect();
            for w in col.windows(2) {
                if w[1].1 < w[0].1 {
                    out.push(format!(
                        "size {s}: batch {} costs {}ms, less than batch {} at {}ms",
                        w[1].0, w[1].1, w[0].0, w[0].1
                    ));
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("batch\\input");
        for size in &self.sizes {
            s.push_str(&format!(",{size}"));
        }
        s.push('\n');
        for &b in &self.batches {
            s.push_str(&b.to_string());
            for &size in &self.sizes {
                s.push(',');
                if let Some(v) = self.cell(size, b) {
                    s.push_str(&v.to_string());
                }
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub threshold_ms: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { threshold_ms: 140.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    /// Composites to run, HP first. In fallback mode a single full-frame
    /// composite.
    pub kept: Vec<CompositeImage>,
    pub dropped_lp: Vec<CompositeImage>,
    /// Canvas side the composites were packed at.
    pub canvas: u32,
    /// Input side the kept composites run at.
    pub final_size: u32,
    pub predicted_ms: f64,
    pub fallback_full_frame: bool,
}

impl SchedulePlan {
    fn empty() -> Self {
        Self {
            kept: Vec::new(),
            dropped_lp: Vec::new(),
            canvas: 0,
            final_size: 0,
            predicted_ms: 0.0,
            fallback_full_frame: false,
        }
    }

    pub fn kept_hp(&self) -> usize {
        self.kept.iter().filter(|c| c.is_hp()).count()
    }
}

/// Predicted inference time of a plan.
pub fn simulate_cost(plan: &SchedulePlan, table: &LatencyTable) -> f64 {
    if plan.kept.is_empty() {
        return 0.0;
    }
    table
        .lookup(plan.final_size, plan.kept.len() as u32)
        .unwrap_or(f64::INFINITY)
}

#[derive(Clone, Debug)]
pub struct Scheduler<'a> {
    pub table: &'a LatencyTable,
    pub budget: Budget,
    /// Fraction of the frame CAZones must cover to trigger full-frame mode.
    pub fallback_coverage: f64,
}

impl<'a> Scheduler<'a> {
    pub fn new(table: &'a LatencyTable, budget: Budget) -> Self {
        Self {
            table,
            budget,
            fallback_coverage: 0.8,
        }
    }

    fn fits(&self, size: u32, batch: usize) -> Option<f64> {
        if batch == 0 {
            return Some(0.0);
        }
        self.table
            .lookup(size, batch as u32)
            .filter(|&ms| ms <= self.budget.threshold_ms)
    }

    /// Builds a plan whose predicted cost is within budget.
    pub fn guarantee(&self, composites: &[CompositeImage], frame: FrameSize) -> Result<SchedulePlan> {
        if composites.is_empty() {
            return Ok(SchedulePlan::empty());
        }
        let side = composites[0].side;
        if let Some(c) = composites.iter().find(|c| c.side != side) {
            return Err(Error::MixedCanvasSizes(side, c.side));
        }
        let smallest = self.table.sizes()[0];
        match self.table.lookup(smallest, 1) {
            Some(ms) if ms <= self.budget.threshold_ms => {}
            other => {
                return Err(Error::InfeasibleBudget {
                    budget_ms: self.budget.threshold_ms,
                    min_ms: other.unwrap_or(f64::INFINITY),
                })
            }
        }

        let zones: Vec<CAZone> = composites.iter().flat_map(|c| c.placements.iter().map(|p| p.zone)).collect();
        let boxes: Vec<PixelBox> = zones.iter().map(|z| z.bbox.clamp_to(frame)).collect();
        let coverage = union_area(&boxes) as f64 / frame.area().max(1) as f64;
        if coverage > self.fallback_coverage {
            return self.full_frame_plan(side, &zones, frame);
        }

        let mut kept: Vec<CompositeImage> = composites.to_vec();
        kept.sort_by_key(|c| (c.priority, c.index));
        if let Some(ms) = self.fits(side, kept.len()) {
            return Ok(self.plan(kept, Vec::new(), side, side, ms));
        }

        let mut lp_order: Vec<usize> = (0..kept.len()).filter(|&i| !kept[i].is_hp()).collect();
        lp_order.sort_by_key(|&i| (kept[i].placements.len(), kept[i].index));
        let mut dropped = Vec::new();
        for i in lp_order {
            dropped.push(kept[i].index);
            let remaining = kept.len() - dropped.len();
            if let Some(ms) = self.fits(side, remaining) {
                let (dropped_lp, kept) = split_dropped(kept, &dropped);
                return Ok(self.plan(kept, dropped_lp, side, side, ms));
            }
        }
        let (dropped_lp, hp) = split_dropped(kept, &dropped);

        let shrink = self
            .table
            .sizes()
            .iter()
            .rev()
            .filter(|&&s| s < side)
            .find_map(|&s| self.fits(s, hp.len()).map(|ms| (s, ms)));
        match shrink {
            Some((s, ms)) => {
                let kept = hp.iter().map(|c| c.rescaled(s)).collect();
                Ok(self.plan(kept, dropped_lp, side, s, ms))
            }
            None => self.full_frame_plan(side, &zones, frame),
        }
    }

    fn plan(
        &self,
        kept: Vec<CompositeImage>,
        dropped_lp: Vec<CompositeImage>,
        canvas: u32,
        final_size: u32,
        predicted_ms: f64,
    ) -> SchedulePlan {
        SchedulePlan {
            kept,
            dropped_lp,
            canvas,
            final_size,
            predicted_ms,
            fallback_full_frame: false,
        }
    }

    /// Processes the whole frame at the largest size affordable at batch 1.
    fn full_frame_plan(&self, canvas: u32, zones: &[CAZone], frame: FrameSize) -> Result<SchedulePlan> {
        let (size, ms) = self
            .table
            .sizes()
            .iter()
            .rev()
            .find_map(|&s| self.fits(s, 1).map(|ms| (s, ms)))
            .ok_or(Error::InfeasibleBudget {
                budget_ms: self.budget.threshold_ms,
                min_ms: self.table.lookup(self.table.sizes()[0], 1).unwrap_or(f64::INFINITY),
            })?;
        let priority = if zones.iter().any(|z| z.is_hp()) {
            Priority::High
        } else {
            Priority::Low
        };
        let depth = zones.iter().map(|z| z.depth).fold(f64::INFINITY, f64::min);
        let zone = CAZone::new(frame.full_box(), depth, priority);
        Ok(SchedulePlan {
            kept: vec![CompositeImage::full_frame(0, frame, size, zone)],
            dropped_lp: Vec::new(),
            canvas,
            final_size: size,
            predicted_ms: ms,
            fallback_full_frame: true,
        })
    }
}

fn split_dropped(all: Vec<CompositeImage>, dropped: &[usize]) -> (Vec<CompositeImage>, Vec<CompositeImage>) {
    let (mut gone, keep): (Vec<_>, Vec<_>) = all.into_iter().partition(|c| dropped.contains(&c.index));
    gone.sort_by_key(|c| dropped.iter().position(|&d| d == c.index));
    (gone, keep)
}

//! SVG overlay of a frame: 2D clusters in green, CAZones in blue,
//! detections in red.

use std::fmt::Write;

use crate::geom::{FrameSize, PixelBox};
use crate::pipeline::FrameRun;

fn rect(out: &mut String, b: &PixelBox, stroke: &str, width: u32, dash: bool) {
    let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        out,
        r#"  <rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}/>"#,
        b.x_min,
        b.y_min,
        b.width(),
        b.height()
    );
}

pub fn frame_overlay_svg(run: &FrameRun, frame: FrameSize) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = frame.width,
        h = frame.height
    );
    let _ = writeln!(s, r##"  <rect width="100%" height="100%" fill="#202020"/>"##);
    for c in &run.clusters {
        rect(&mut s, &c.bbox, "lime", 2, false);
    }
    for z in &run.zones {
        rect(&mut s, &z.bbox, "blue", 3, !z.is_hp());
    }
    for d in &run.report.detections {
        rect(&mut s, &d.bbox, "red", 1, false);
    }
    s.push_str("</svg>\n");
    s
}

//! Heatmaps: a binary PGM scaled to the field maximum plus an SVG overlay
//! with zone boundaries and labelled cluster centers, both one unit per cell.

use crate::density::{find_cluster_centers, DensityField};
use crate::model::{Region, WorkZoneLayout};
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedHeatmap {
    pub pgm: Vec<u8>,
    pub svg: String,
    pub warnings: Vec<String>,
}

fn region_name(r: Region) -> &'static str {
    match r {
        Region::Upstream => "upstream",
        Region::Warning => "warning",
        Region::UpstreamTransition => "transition",
        Region::Buffer => "buffer",
        Region::Work => "work",
        Region::DownstreamTransition => "transition",
        Region::Termination => "termination",
        Region::Downstream => "downstream",
    }
}

/// Grey level 255 is the field maximum. The top image row is the largest `y`
/// (the leftmost lane); an all-zero field renders black with a warning.
pub fn render_heatmap(field: &DensityField, layout: &WorkZoneLayout) -> RenderedHeatmap {
    let spec = &field.spec;
    let (nx, ny) = (spec.nx(), spec.ny());
    let max = field.max();
    let mut warnings = Vec::new();
    if !(max > 0.0) {
        warnings.push(format!("{} density field is empty", field.label.name()));
    }

    let mut pgm = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    pgm.reserve(nx * ny);
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let v = field.get(ix, iy);
            let g = if max > 0.0 { (v / max * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 };
            pgm.push(g);
        }
    }

    let px = |x: f64| (x - spec.x_min) / spec.cell;
    let py = |y: f64| ny as f64 - (y - spec.y_min) / spec.cell;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {nx} {ny}" width="{}" height="{}">"#,
        nx * 4,
        ny * 4
    );
    let _ = writeln!(svg, r#"<title>{} density</title>"#, xml_escape(field.label.name()));
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{nx}" height="{ny}" fill="none" stroke="gray" stroke-width="0.2"/>"#
    );
    let bounds = layout.boundaries();
    let starts = [
        (Region::Warning, bounds[0]),
        (Region::UpstreamTransition, bounds[1]),
        (Region::Buffer, bounds[2]),
        (Region::Work, bounds[3]),
        (Region::DownstreamTransition, bounds[4]),
        (Region::Termination, bounds[5]),
        (Region::Downstream, bounds[6]),
    ];
    for (region, x) in starts {
        if x < spec.x_min || x > spec.x_max {
            continue;
        }
        let u = px(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{u}" y1="0" x2="{u}" y2="{ny}" stroke="cyan" stroke-width="0.3" stroke-dasharray="1 1"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="2" font-size="1.6" fill="cyan">{}</text>"#,
            u + 0.3,
            region_name(region)
        );
    }
    for c in find_cluster_centers(field, layout) {
        let (u, w) = (px(c.x), py(c.y));
        let _ = writeln!(
            svg,
            r#"<circle cx="{u}" cy="{w}" r="1" fill="none" stroke="red" stroke-width="0.3"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="1.8" fill="red">{:.2}</text>"#,
            u + 1.2,
            w - 1.2,
            c.density
        );
    }
    svg.push_str("</svg>\n");
    RenderedHeatmap { pgm, svg, warnings }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::BehaviorLabel;
    use crate::density::DensityGridSpec;

    fn spec() -> DensityGridSpec {
        let l = WorkZoneLayout::default();
        DensityGridSpec::for_layout(&l, 600.0, 200.0)
    }

    fn header_len(pgm: &[u8]) -> usize {
        let mut newlines = 0;
        pgm.iter().position(|&b| {
            newlines += usize::from(b == b'\n');
            newlines == 3
        }).unwrap() + 1
    }

    #[test]
    fn zero_field_black() {
        let s = spec();
        let f = DensityField::zeros(s, BehaviorLabel::LA);
        let r = render_heatmap(&f, &WorkZoneLayout::default());
        let h = header_len(&r.pgm);
        assert_eq!(r.pgm.len() - h, s.nx() * s.ny());
        assert!(r.pgm[h..].iter().all(|&b| b == 0));
        assert_eq!(r.warnings.len(), 1);
        assert!(String::from_utf8_lossy(&r.pgm).starts_with(&format!("P5\n{} {}\n255\n", s.nx(), s.ny())));
    }

    #[test]
    fn center_labelled() {
        let s = spec();
        let mut f = DensityField::zeros(s, BehaviorLabel::LD);
        let (ix, iy) = (40, 3);
        f.values[iy * s.nx() + ix] = 5.88;
        let r = render_heatmap(&f, &WorkZoneLayout::default());
        assert!(r.svg.contains(">5.88</text>"));
        assert!(r.warnings.is_empty());
        let h = header_len(&r.pgm);
        // the peak cell is the only white pixel, flipped vertically
        let row = s.ny() - 1 - iy;
        assert_eq!(r.pgm[h + row * s.nx() + ix], 255);
        assert_eq!(r.pgm[h..].iter().filter(|&&b| b > 0).count(), 1);
        assert!(r.svg.contains("termination") && !r.svg.contains("TL&amp;"));
    }
}

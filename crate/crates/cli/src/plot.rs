//! SVG rendering of planar instances: sites, multiplicities, cluster hulls
//! and a dashed hull around the witness coalition.

use std::fmt::Write as _;

use corecheck::{Clustering, Instance};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlotError {
    #[error("instance has no planar coordinates; plotting needs a 2D point instance")]
    NotEuclidean2D,
}

const SIZE: f64 = 640.0;
const MARGIN: f64 = 60.0;
const PAD: f64 = 16.0;
const COLORS: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];

/// Convex hull by Andrew's monotone chain, counterclockwise, without
/// repeated or collinear points.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn shape(points: &[(f64, f64)], pad: f64, style: &str) -> String {
    let hull = convex_hull(points);
    if hull.len() == 1 {
        let (x, y) = hull[0];
        return format!(r#"<circle cx="{x:.2}" cy="{y:.2}" r="{pad:.2}" {style}/>"#);
    }
    let pts: Vec<String> = hull.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        r#"<polygon points="{}" stroke-width="{:.2}" stroke-linejoin="round" stroke-linecap="round" {style}/>"#,
        pts.join(" "),
        2.0 * pad
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders `inst` with the clusters of `clustering` and, when given, the
/// sites of the witness coalition `witness` (agent ids).
pub fn render_svg(inst: &Instance, clustering: Option<&Clustering>, witness: &[usize]) -> Result<String, PlotError> {
    let coords = inst.coords().filter(|c| c.iter().all(|p| p.len() == 2)).ok_or(PlotError::NotEuclidean2D)?;
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in coords {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let to_px = |p: &[f64]| (MARGIN + (p[0] - xmin) * scale, SIZE - MARGIN - (p[1] - ymin) * scale);
    let site_px: Vec<(f64, f64)> = coords.iter().map(|p| to_px(p)).collect();
    let sites_of = |agents: &[usize]| -> Vec<(f64, f64)> { agents.iter().map(|&a| site_px[inst.agent_site(a)]).collect() };

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="14">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    if let Some(c) = clustering {
        for (i, cluster) in c.clusters().iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let style = format!(r#"class="cluster" fill="{color}" fill-opacity="0.18" stroke="{color}" stroke-opacity="0.18""#);
            writeln!(svg, "{}", shape(&sites_of(cluster), PAD, &style)).unwrap();
        }
    }
    if !witness.is_empty() {
        // drawn as an outline so the cluster fill stays visible underneath
        let hull = convex_hull(&sites_of(witness));
        let style = r##"class="witness" fill="none" stroke="#222" stroke-width="1.5" stroke-dasharray="6 4""##;
        if hull.len() == 1 {
            writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" {style}/>"#, hull[0].0, hull[0].1, PAD * 1.6).unwrap();
        } else {
            let pts: Vec<String> = hull.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            writeln!(svg, r#"<polygon points="{}" {style}/>"#, pts.join(" ")).unwrap();
        }
    }
    for (s, &(x, y)) in site_px.iter().enumerate() {
        let label = escape(&inst.labels()[s]);
        let m = inst.multiplicity()[s];
        let annotation = if m > 1 { format!(" \u{d7}{m}") } else { String::new() };
        writeln!(
            svg,
            r#"<g class="site"><circle cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/><text x="{:.2}" y="{:.2}">{label}{annotation}</text></g>"#,
            x + 7.0,
            y - 7.0
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_point() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5), (0.5, 0.0)];
        let hull = convex_hull(&pts);
        assert_eq!(hull, vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
    }

    #[test]
    fn degenerate_hulls() {
        assert_eq!(convex_hull(&[(1.0, 2.0), (1.0, 2.0)]), vec![(1.0, 2.0)]);
        assert_eq!(convex_hull(&[(0.0, 0.0), (2.0, 0.0), (1.0, 0.0)]), vec![(0.0, 0.0), (2.0, 0.0)]);
        assert!(convex_hull(&[]).is_empty());
    }
}

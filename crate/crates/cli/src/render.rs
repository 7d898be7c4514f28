//! Overlay rendering: the potential field re-emitted as a PGM alongside an
//! SVG with one polyline per contour, scaled to an 800-px-wide viewport.

use std::path::Path;

use anyhow::{Context, Result};
use snake_core::{write_pgm, Contour, GridField, Point, ScalarField, Topology};

const VIEW_WIDTH: f64 = 800.0;
const RASTER: usize = 256;

/// World-coordinate bounding box covering the field raster and contours.
fn world_box(field: &ScalarField, contours: &[(&str, &Contour)]) -> (Point, Point) {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Point| {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    };
    if let Some((lo, hi)) = field.domain() {
        grow(lo);
        grow(hi);
    }
    for (_, c) in contours {
        for &p in c.points() {
            grow(p);
        }
    }
    if !min.x.is_finite() {
        (Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    } else {
        let pad = 0.1 * (max - min).norm().max(1e-9);
        (
            min - Point::new(pad, pad),
            max + Point::new(pad, pad),
        )
    }
}

fn rasterize(field: &ScalarField, min: Point, max: Point) -> GridField {
    let w = RASTER;
    let h = RASTER;
    let dx = (max.x - min.x) / (w - 1) as f64;
    let dy = (max.y - min.y) / (h - 1) as f64;
    let mut values = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let p = Point::new(min.x + col as f64 * dx, min.y + row as f64 * dy);
            values.push(field.value(p).unwrap_or(0.0));
        }
    }
    // the raster spacing is only nominal; the PGM records intensities
    GridField::new(w, h, dx.max(dy), values).expect("raster grid")
}

/// Re-emit the field as `field.pgm` in `dir`.
pub fn write_field_pgm(field: &ScalarField, contours: &[(&str, &Contour)], dir: &Path) -> Result<()> {
    let grid = match field.as_grid() {
        Some(g) => g.clone(),
        None => {
            let (min, max) = world_box(field, contours);
            rasterize(field, min, max)
        }
    };
    let lo = grid.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = grid.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo, lo + 1.0) };
    let path = dir.join("field.pgm");
    std::fs::write(&path, write_pgm(&grid, lo, hi))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Write `overlay.svg` with one polyline per (label, contour) pair.
pub fn render_overlay(
    field: &ScalarField,
    contours: &[(&str, &Contour)],
    dir: &Path,
) -> Result<()> {
    let (min, max) = world_box(field, contours);
    let span_x = (max.x - min.x).max(1e-12);
    let span_y = (max.y - min.y).max(1e-12);
    let scale = VIEW_WIDTH / span_x;
    let height = span_y * scale;
    let to_view = |p: Point| (scale * (p.x - min.x), scale * (max.y - p.y));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{VIEW_WIDTH}\" height=\"{height:.1}\" \
         viewBox=\"0 0 {VIEW_WIDTH} {height:.1}\">\n"
    ));
    svg.push_str("<!-- potential field rasterized alongside as field.pgm -->\n");
    svg.push_str(&format!(
        "<rect width=\"{VIEW_WIDTH}\" height=\"{height:.1}\" fill=\"#f0f0f0\"/>\n"
    ));
    let strokes = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];
    for (i, (label, contour)) in contours.iter().enumerate() {
        let stroke = strokes[i % strokes.len()];
        svg.push_str(&format!("<!-- {label} -->\n"));
        let mut pts: Vec<(f64, f64)> = contour.points().iter().map(|&p| to_view(p)).collect();
        if contour.topology() == Topology::Closed {
            if let Some(&first) = pts.first() {
                pts.push(first);
            }
        }
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"2\"/>\n",
            coords.join(" ")
        ));
    }
    svg.push_str("</svg>\n");
    let path = dir.join("overlay.svg");
    std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    write_field_pgm(field, contours, dir)
}

//! SVG 1.1 rendering of rasters and trajectories.

use std::fmt::Write;

use crate::loewner::{ClusterRaster, TrajectorySample, Window};

/// Drawing width in pixels; heights follow the window's aspect ratio.
const WIDTH: f64 = 800.0;
const LOW: (f64, f64, f64) = (8.0, 48.0, 107.0);
const HIGH: (f64, f64, f64) = (222.0, 235.0, 247.0);

struct Frame {
    window: Window,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(window: Window) -> Self {
        let scale = WIDTH / (window.x_max - window.x_min);
        Self { window, scale, height: scale * (window.y_max - window.y_min) }
    }

    fn x(&self, x: f64) -> f64 {
        (x - self.window.x_min) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        self.height - (y - self.window.y_min) * self.scale
    }

    fn open(&self, out: &mut String) {
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#,
            w = WIDTH,
            h = self.height
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{:.3}" height="{:.3}" fill="white"/>"#, WIDTH, self.height);
    }

    /// Real axis and a marker at the origin, when they fall in the window.
    fn close(&self, out: &mut String) {
        let w = &self.window;
        if w.y_min <= 0.0 && 0.0 <= w.y_max {
            let y = self.y(0.0);
            let _ = writeln!(
                out,
                r#"<line x1="0" y1="{y:.3}" x2="{WIDTH:.3}" y2="{y:.3}" stroke="black" stroke-width="1"/>"#
            );
        }
        if w.x_min <= 0.0 && 0.0 <= w.x_max && w.y_min <= 0.0 && 0.0 <= w.y_max {
            let _ = writeln!(out, r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="red"/>"#, self.x(0.0), self.y(0.0));
        }
        out.push_str("</svg>\n");
    }
}

fn color(q: f64) -> String {
    let mix = |a: f64, b: f64| (a + (b - a) * q).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(LOW.0, HIGH.0), mix(LOW.1, HIGH.1), mix(LOW.2, HIGH.2))
}

/// Cells with `zeta <= t` as filled squares, darkest for the earliest
/// hits (colored by the percentile of `zeta` among filled cells).
pub fn render_raster(raster: &ClusterRaster, t: f64) -> String {
    let frame = Frame::new(raster.window);
    let mut out = String::new();
    frame.open(&mut out);
    let mut hit: Vec<(usize, f64)> = raster.zeta.iter().copied().enumerate().filter(|&(_, z)| z <= t).collect();
    hit.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let (dx, dy) = raster.cell_size();
    let last = hit.len().saturating_sub(1).max(1) as f64;
    for (rank, &(k, _)) in hit.iter().enumerate() {
        let (i, j) = (k % raster.nx, k / raster.nx);
        let x0 = raster.window.x_min + i as f64 * dx;
        let y1 = raster.window.y_min + (j + 1) as f64 * dy;
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
            frame.x(x0),
            frame.y(y1),
            dx * frame.scale,
            dy * frame.scale,
            color(rank as f64 / last)
        );
    }
    frame.close(&mut out);
    out
}

/// The path of `h_t(z)` as a polyline in a window that contains it.
pub fn render_trajectory(samples: &[TrajectorySample]) -> String {
    let (mut x_min, mut x_max, mut y_max) = (-1.0f64, 1.0f64, 1.0f64);
    for s in samples {
        x_min = x_min.min(s.h.re);
        x_max = x_max.max(s.h.re);
        y_max = y_max.max(s.h.im);
    }
    let pad = 0.05 * (x_max - x_min).max(y_max);
    let window = Window { x_min: x_min - pad, x_max: x_max + pad, y_min: 0.0, y_max: y_max + pad };
    let frame = Frame::new(window);
    let mut out = String::new();
    frame.open(&mut out);
    if !samples.is_empty() {
        let points: Vec<String> =
            samples.iter().map(|s| format!("{:.3},{:.3}", frame.x(s.h.re), frame.y(s.h.im.max(0.0)))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            points.join(" "),
            color(0.0)
        );
    }
    frame.close(&mut out);
    out
}

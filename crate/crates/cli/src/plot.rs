//! Self-contained SVG line plots: axes, ticks, legend, linear or log-10
//! vertical scale. No plotting dependency, deterministic output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 70.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
/// Floor for log plots; values at or below zero clamp here.
const LOG_FLOOR: f64 = 1e-12;

pub struct Curve<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

pub fn write_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    curves: &[Curve<'_>],
    log_y: bool,
) -> Result<()> {
    let map_y = |v: f64| if log_y { v.max(LOG_FLOOR).log10() } else { v };

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for c in curves {
        for &(x, y) in c.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(map_y(y));
            y_max = y_max.max(map_y(y));
        }
    }
    if !(x_min.is_finite() && y_min.is_finite()) || x_max <= x_min {
        anyhow::bail!("nothing to plot for {title}");
    }
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_T + (1.0 - (map_y(y) - y_min) / (y_max - y_min)) * plot_h;

    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    writeln!(
        w,
        r#"<text x="{:.1}" y="28" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )?;

    // Frame.
    writeln!(
        w,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black"/>"#
    )?;

    // Ticks and grid.
    let ticks = 5usize;
    for i in 0..=ticks {
        let fx = i as f64 / ticks as f64;
        let xv = x_min + fx * (x_max - x_min);
        let px = MARGIN_L + fx * plot_w;
        writeln!(
            w,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#,
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 6.0
        )?;
        writeln!(
            w,
            r#"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            MARGIN_T + plot_h + 22.0,
            tick_label(xv)
        )?;
        let yv = y_min + fx * (y_max - y_min);
        let py = MARGIN_T + (1.0 - fx) * plot_h;
        writeln!(
            w,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{MARGIN_L}" y2="{py:.1}" stroke="black"/>"#,
            MARGIN_L - 6.0
        )?;
        let label = if log_y {
            format!("1e{}", tick_label(yv))
        } else {
            tick_label(yv)
        };
        writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">{label}</text>"#,
            MARGIN_L - 10.0,
            py + 4.0
        )?;
    }

    writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    )?;
    writeln!(
        w,
        r#"<text x="22" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 22 {:.1})">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    )?;

    for (ci, c) in curves.iter().enumerate() {
        let color = COLORS[ci % COLORS.len()];
        let mut d = String::new();
        for (i, &(x, y)) in c.points.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{cmd}{:.2} {:.2} ", sx(x), sy(y)));
        }
        writeln!(
            w,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            d.trim_end()
        )?;
        let ly = MARGIN_T + 18.0 + 18.0 * ci as f64;
        writeln!(
            w,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.8"/>"#,
            MARGIN_L + plot_w - 150.0,
            MARGIN_L + plot_w - 120.0
        )?;
        writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            MARGIN_L + plot_w - 112.0,
            ly + 4.0,
            escape(c.label)
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

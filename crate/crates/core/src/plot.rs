//! Static SVG figures: DMA curves on a log-pulsation axis, and raster
//! heatmaps for grids and dumped fields.

use std::fmt::Write as _;

use crate::dma::DmaCurve;
use crate::microstructure::{Phase, PhaseGrid};

const STORAGE_COLOR: &str = "#1f4fb4";
const LOSS_COLOR: &str = "#c62828";

fn nice_step(span: f64, target_ticks: usize) -> f64 {
    let raw = span / target_ticks as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn axis_range(values: &[f64]) -> (f64, f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let step = nice_step(hi - lo, 5);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Storage (left axis) and loss (right axis) versus pulsation on a log axis.
pub fn curve_svg(curve: &DmaCurve, title: &str) -> String {
    let (w, h) = (820.0, 500.0);
    let (left, right, top, bottom) = (80.0, 80.0, 50.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let lx: Vec<f64> = curve.omegas.iter().map(|o| o.log10()).collect();
    let (xmin, xmax) = (lx[0].floor(), lx[lx.len() - 1].ceil());
    let (s_lo, s_hi, s_step) = axis_range(&curve.storage);
    let (l_lo, l_hi, l_step) = axis_range(&curve.loss);

    let px = |x: f64| left + (x - xmin) / (xmax - xmin) * pw;
    let py = |y: f64, lo: f64, hi: f64| top + ph - (y - lo) / (hi - lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );

    // x: one tick per decade
    let mut d = xmin;
    while d <= xmax + 1e-9 {
        let x = px(d);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##,
            top + ph
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{}</text>"#,
            top + ph + 18.0,
            d as i64
        );
        d += 1.0;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">pulsation ω (rad/s)</text>"#,
        left + pw / 2.0,
        h - 15.0
    );

    let mut ticks = |lo: f64, hi: f64, step: f64, x: f64, anchor: &str, color: &str| {
        let mut v = lo;
        while v <= hi + step * 1e-6 {
            let y = py(v, lo, hi);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="{anchor}" fill="{color}">{}</text>"#,
                y + 4.0,
                fmt_tick(v)
            );
            v += step;
        }
    };
    ticks(s_lo, s_hi, s_step, left - 8.0, "end", STORAGE_COLOR);
    ticks(l_lo, l_hi, l_step, left + pw + 8.0, "start", LOSS_COLOR);

    let _ = writeln!(
        s,
        r#"<text transform="translate(22,{:.2}) rotate(-90)" text-anchor="middle" fill="{STORAGE_COLOR}">storage G′xy (GPa)</text>"#,
        top + ph / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate({:.2},{:.2}) rotate(90)" text-anchor="middle" fill="{LOSS_COLOR}">loss G″xy (GPa)</text>"#,
        w - 22.0,
        top + ph / 2.0
    );

    for (values, lo, hi, color) in [
        (&curve.storage, s_lo, s_hi, STORAGE_COLOR),
        (&curve.loss, l_lo, l_hi, LOSS_COLOR),
    ] {
        let pts: Vec<String> = lx
            .iter()
            .zip(values.iter())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y, lo, hi)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for p in &pts {
            let (x, y) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Diverging blue-white-red color for `t` in `[-1, 1]`.
fn diverging(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(-1.0, 1.0);
    let lerp = |a: f64, b: f64, u: f64| (a + (b - a) * u).round() as u8;
    if t < 0.0 {
        let u = -t;
        (lerp(255.0, 33.0, u), lerp(255.0, 102.0, u), lerp(255.0, 172.0, u))
    } else {
        (lerp(255.0, 178.0, t), lerp(255.0, 24.0, t), lerp(255.0, 43.0, t))
    }
}

/// Square heatmap of row-major values; `symmetric` centers the color scale at 0.
pub fn heatmap_svg(values: &[f64], resolution: usize, title: &str, symmetric: bool) -> String {
    let cell = (512 / resolution).max(1);
    let side = cell * resolution;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let amp = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let color = |v: f64| {
        if symmetric {
            diverging(v / amp)
        } else if hi > lo {
            diverging((v - lo) / (hi - lo))
        } else {
            diverging(0.0)
        }
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="13" shape-rendering="crispEdges">"#,
        side + 20,
        side + 50
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="22">{} (range {lo:.4e} … {hi:.4e})</text>"#,
        escape(title)
    );
    for row in 0..resolution {
        for col in 0..resolution {
            let (r, g, b) = color(values[row * resolution + col]);
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                10 + col * cell,
                40 + row * cell
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Fiber pixels red on a white matrix.
pub fn grid_svg(grid: &PhaseGrid, title: &str) -> String {
    let values: Vec<f64> = grid
        .labels()
        .iter()
        .map(|&p| if p == Phase::Fiber { 1.0 } else { 0.0 })
        .collect();
    heatmap_svg(&values, grid.resolution(), title, true)
}

//! Minimal self-contained SVG plots: amplitude heatmap, PCC curve and a
//! mask-versus-truth timeline sharing one time axis.

use std::fmt::Write as _;

use csimotion_core::{GroundTruth, Matrix, MovementMask, PccSeries};

const WIDTH: f64 = 900.0;
const MARGIN: f64 = 60.0;
const PANEL_GAP: f64 = 30.0;
const HEAT_H: f64 = 180.0;
const CURVE_H: f64 = 160.0;
const LANE_H: f64 = 18.0;
/// Heatmap rows beyond this are decimated.
const MAX_HEAT_ROWS: usize = 450;

pub struct Figure<'a> {
    pub title: &'a str,
    /// Time-by-subcarrier amplitudes with their start time and rate.
    pub amplitudes: Option<(&'a Matrix, f64, f64)>,
    pub pcc: &'a PccSeries,
    pub threshold: Option<f64>,
    pub mask: &'a MovementMask,
    pub gt: Option<&'a GroundTruth>,
}

struct Axis {
    t0: f64,
    span: f64,
}

impl Axis {
    fn x(&self, t: f64) -> f64 {
        MARGIN + (t - self.t0) / self.span * (WIDTH - 2.0 * MARGIN)
    }
}

/// Blue to yellow ramp for `v` in `[0, 1]`.
fn colour(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let r = (30.0 + 220.0 * v) as u8;
    let g = (40.0 + 180.0 * v) as u8;
    let b = (120.0 - 90.0 * v) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn heatmap(out: &mut String, axis: &Axis, top: f64, m: &Matrix, t0: f64, rate: f64) {
    let (lo, hi) = m
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(v), h.max(v))
        });
    let scale = if hi > lo { hi - lo } else { 1.0 };
    let step = m.rows().div_ceil(MAX_HEAT_ROWS).max(1);
    let cell_h = HEAT_H / m.cols() as f64;
    let dt = step as f64 / rate;
    let cell_w = axis.x(t0 + dt) - axis.x(t0);
    let _ = writeln!(out, "<g shape-rendering=\"crispEdges\">");
    for r in (0..m.rows()).step_by(step) {
        let x = axis.x(t0 + r as f64 / rate);
        for (c, v) in m.row(r).iter().enumerate() {
            let y = top + HEAT_H - (c + 1) as f64 * cell_h;
            let _ = writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                cell_w + 0.05,
                cell_h + 0.05,
                colour((v - lo) / scale)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    label(out, MARGIN - 8.0, top + HEAT_H / 2.0, "subcarrier", "end");
}

fn label(out: &mut String, x: f64, y: f64, text: &str, anchor: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{x:.1}\" y=\"{y:.1}\" font-size=\"11\" text-anchor=\"{anchor}\">{}</text>",
        escape(text)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn curve(out: &mut String, axis: &Axis, top: f64, pcc: &PccSeries, threshold: Option<f64>) {
    let vals = pcc.values();
    let (mut lo, mut hi) = vals
        .iter()
        .chain(threshold.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    if !(hi > lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    let y = |v: f64| top + CURVE_H - (v - lo) / (hi - lo) * CURVE_H;
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{top}\" width=\"{}\" height=\"{CURVE_H}\" fill=\"none\" stroke=\"#999\"/>",
        WIDTH - 2.0 * MARGIN
    );
    if let Some(th) = threshold {
        let _ = writeln!(
            out,
            "<line x1=\"{MARGIN}\" x2=\"{}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"#c33\" stroke-dasharray=\"4 3\"/>",
            WIDTH - MARGIN,
            y(th),
            y(th)
        );
    }
    out.push_str("<polyline fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"1.2\" points=\"");
    for (i, v) in vals.iter().enumerate() {
        let _ = write!(out, "{:.2},{:.2} ", axis.x(pcc.time(i)), y(*v));
    }
    out.push_str("\"/>\n");
    label(out, MARGIN - 8.0, top + 10.0, &format!("{hi:.3}"), "end");
    label(out, MARGIN - 8.0, top + CURVE_H, &format!("{lo:.3}"), "end");
    label(out, MARGIN - 8.0, top + CURVE_H / 2.0, "PCC", "end");
}

fn lane(out: &mut String, axis: &Axis, y: f64, name: &str, runs: &[(f64, f64)], fill: &str) {
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{y}\" width=\"{}\" height=\"{LANE_H}\" fill=\"#eee\"/>",
        WIDTH - 2.0 * MARGIN
    );
    for (a, b) in runs {
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{y}\" width=\"{:.2}\" height=\"{LANE_H}\" fill=\"{fill}\"/>",
            axis.x(*a),
            axis.x(*b) - axis.x(*a)
        );
    }
    label(out, MARGIN - 8.0, y + 13.0, name, "end");
}

pub fn render(fig: &Figure<'_>) -> String {
    let mask_end = fig.mask.time(fig.mask.len());
    let t0 = fig.mask.t0.min(fig.pcc.t0());
    let mut t1 = mask_end.max(fig.pcc.time(fig.pcc.len()));
    if let Some(gt) = fig.gt {
        t1 = t1.max(t0 + gt.total_duration());
    }
    let axis = Axis {
        t0,
        span: if t1 > t0 { t1 - t0 } else { 1.0 },
    };

    let mut top = 40.0;
    let mut body = String::new();
    if let Some((m, at0, rate)) = fig.amplitudes {
        if m.rows() > 0 && m.cols() > 0 {
            heatmap(&mut body, &axis, top, m, at0, rate);
            top += HEAT_H + PANEL_GAP;
        }
    }
    curve(&mut body, &axis, top, fig.pcc, fig.threshold);
    top += CURVE_H + PANEL_GAP;
    let detected: Vec<(f64, f64)> = fig
        .mask
        .segments()
        .into_iter()
        .map(|(a, b)| (fig.mask.time(a), fig.mask.time(b)))
        .collect();
    lane(&mut body, &axis, top, "detected", &detected, "#d9822b");
    top += LANE_H + 6.0;
    if let Some(gt) = fig.gt {
        let truth: Vec<(f64, f64)> = gt
            .intervals()
            .iter()
            .filter(|iv| iv.label.is_moving())
            .map(|iv| (t0 + iv.start, t0 + iv.end))
            .collect();
        lane(&mut body, &axis, top, "truth", &truth, "#3a8f3a");
        top += LANE_H + 6.0;
    }
    // time ticks every whole number of seconds that keeps ~10 labels
    let tick = [1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 60.0, 120.0, 300.0]
        .into_iter()
        .find(|s| axis.span / s <= 12.0)
        .unwrap_or(600.0);
    let mut t = 0.0;
    while t <= axis.span + 1e-9 {
        label(
            &mut body,
            axis.x(t0 + t),
            top + 14.0,
            &format!("{t}"),
            "middle",
        );
        t += tick;
    }
    label(&mut body, WIDTH / 2.0, top + 30.0, "time (s)", "middle");
    let height = top + 40.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" viewBox=\"0 0 {WIDTH} {height}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    label(&mut out, WIDTH / 2.0, 22.0, fig.title, "middle");
    out.push_str(&body);
    out.push_str("</svg>\n");
    out
}

//! Self-contained SVG figure of the per-period ATE with its HPD band.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::inference::AteSummary;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlotOptions {
    pub width: f64,
    pub height: f64,
    pub title: String,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 400.0,
            title: "Average treatment effect by period".into(),
        }
    }
}

const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick spacing of 1, 2 or 5 times a power of ten giving about `target` ticks.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = raw / mag;
    let k = if unit < 1.5 {
        1.0
    } else if unit < 3.5 {
        2.0
    } else if unit < 7.5 {
        5.0
    } else {
        10.0
    };
    k * mag
}

pub fn ate_figure(ate: &AteSummary, truth: Option<&[f64]>, opts: &PlotOptions) -> String {
    let t_max = ate.periods.len();
    let (w, h) = (opts.width, opts.height);
    let (pw, ph) = (w - LEFT - RIGHT, h - TOP - BOTTOM);

    let mut values: Vec<f64> = ate.periods.iter().flat_map(|p| [p.lower, p.upper, p.mean, p.plug_in]).collect();
    if let Some(tr) = truth {
        values.extend_from_slice(tr);
    }
    values.retain(|v| v.is_finite());
    let (mut lo, mut hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.08 * (hi - lo);
    let step = nice_step(hi - lo + 2.0 * pad, 5.0);
    let (y0, y1) = (((lo - pad) / step).floor() * step, ((hi + pad) / step).ceil() * step);

    let sx = |t: usize| {
        if t_max <= 1 {
            LEFT + 0.5 * pw
        } else {
            LEFT + pw * t as f64 / (t_max - 1) as f64
        }
    };
    let sy = |v: f64| TOP + ph * (y1 - v) / (y1 - y0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + 0.5 * pw,
        escape(&opts.title)
    );

    let ticks = ((y1 - y0) / step).round() as usize;
    for k in 0..=ticks {
        let v = y0 + k as f64 * step;
        let y = sy(v);
        let label = if v.abs() < 1e-12 * step { 0.0 } else { v };
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            format_tick(label, step)
        );
    }
    for t in 0..t_max {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0,
            ate.periods[t].period
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#333333"/>"##
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">period</text>"#, LEFT + 0.5 * pw, h - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">ATE</text>"#,
        TOP + 0.5 * ph,
        TOP + 0.5 * ph
    );

    let mut band: Vec<String> = (0..t_max).map(|t| format!("{:.2},{:.2}", sx(t), sy(ate.periods[t].upper))).collect();
    band.extend((0..t_max).rev().map(|t| format!("{:.2},{:.2}", sx(t), sy(ate.periods[t].lower))));
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#4682b4" fill-opacity="0.25" stroke="none"/>"##,
        band.join(" ")
    );
    for (t, p) in ate.periods.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#4682b4" stroke-width="2"/>"##,
            sy(p.lower),
            sy(p.upper),
            x = sx(t)
        );
    }
    let line: Vec<String> = (0..t_max).map(|t| format!("{:.2},{:.2}", sx(t), sy(ate.periods[t].mean))).collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f4e79" stroke-width="2"/>"##,
        line.join(" ")
    );
    for (t, p) in ate.periods.iter().enumerate() {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f4e79"/>"##, sx(t), sy(p.mean));
    }
    if let Some(tr) = truth {
        let pts: Vec<String> = tr.iter().enumerate().take(t_max).map(|(t, &v)| format!("{:.2},{:.2}", sx(t), sy(v))).collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="2" stroke-dasharray="6 4"/>"##,
            pts.join(" ")
        );
        for (t, &v) in tr.iter().enumerate().take(t_max) {
            let (x, y) = (sx(t), sy(v));
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="#c0392b" transform="rotate(45 {x:.2} {y:.2})"/>"##,
                x - 4.0,
                y - 4.0
            );
        }
    }

    let lx = LEFT + pw + 15.0;
    let pct = 100.0 * ate.level;
    let _ = writeln!(
        s,
        r##"<rect x="{lx:.2}" y="{:.2}" width="18" height="10" fill="#4682b4" fill-opacity="0.25"/><text x="{:.2}" y="{:.2}">{pct}% HPD</text>"##,
        TOP + 5.0,
        lx + 24.0,
        TOP + 14.0
    );
    let _ = writeln!(
        s,
        r##"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f4e79" stroke-width="2"/><text x="{:.2}" y="{:.2}">posterior mean</text>"##,
        TOP + 30.0,
        lx + 18.0,
        TOP + 30.0,
        lx + 24.0,
        TOP + 34.0
    );
    if truth.is_some() {
        let _ = writeln!(
            s,
            r##"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-width="2" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}">true ATE</text>"##,
            TOP + 50.0,
            lx + 18.0,
            TOP + 50.0,
            lx + 24.0,
            TOP + 54.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    format!("{v:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::AtePeriod;

    fn summary() -> AteSummary {
        AteSummary {
            level: 0.95,
            periods: (1..=4)
                .map(|t| AtePeriod {
                    period: t,
                    plug_in: 0.1 * t as f64,
                    mean: 0.1 * t as f64,
                    lower: 0.1 * t as f64 - 0.2,
                    upper: 0.1 * t as f64 + 0.2,
                })
                .collect(),
        }
    }

    #[test]
    fn figure_has_band_points_and_truth() {
        let truth = [0.1, 0.25, 0.3, 0.35];
        let svg = ate_figure(&summary(), Some(&truth), &PlotOptions::default());
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(svg.contains("true ATE"));
        assert!(!svg.contains("href"));
        let plain = ate_figure(&summary(), None, &PlotOptions::default());
        assert!(!plain.contains("true ATE"));
    }

    #[test]
    fn ticks_are_round() {
        assert!((nice_step(1.0, 5.0) - 0.2).abs() < 1e-12);
        assert!((nice_step(37.0, 5.0) - 5.0).abs() < 1e-12);
        assert_eq!(format_tick(0.4, 0.2), "0.4");
    }

    #[test]
    fn degenerate_range_still_renders() {
        let mut s = summary();
        s.periods.truncate(1);
        let p = &mut s.periods[0];
        (p.lower, p.upper) = (p.mean, p.mean);
        let svg = ate_figure(&s, None, &PlotOptions::default());
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}

//! Static SVG strip chart of maneuvers over time.

use std::fmt::Write;

use crate::identification::Maneuver;
use crate::sim::TickRecord;

const LEFT: f64 = 110.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const ROW_H: f64 = 28.0;
const ROW_GAP: f64 = 8.0;
const WIDTH: f64 = 900.0;

pub fn maneuver_color(m: Maneuver) -> &'static str {
    match m {
        Maneuver::ChangeLaneLeft => "#d62728",
        Maneuver::ChangeLaneRight => "#9467bd",
        Maneuver::KeepLaneAccelerate => "#2ca02c",
        Maneuver::KeepLaneSameSpeed => "#1f77b4",
        Maneuver::KeepLaneDecelerate => "#ff7f0e",
        Maneuver::Stop => "#7f7f7f",
    }
}

/// Contiguous runs of one maneuver as `(maneuver, first tick, tick count)`.
pub fn maneuver_bands(records: &[TickRecord]) -> Vec<(Maneuver, usize, usize)> {
    let mut out: Vec<(Maneuver, usize, usize)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match out.last_mut() {
            Some(b) if b.0 == r.maneuver => b.2 += 1,
            _ => out.push((r.maneuver, i, 1)),
        }
    }
    out
}

fn tick_step(span: f64) -> f64 {
    let raw = span / 8.0;
    let mag = 10f64.powf(raw.max(1e-9).log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

/// One row per `(label, records)` pair, time on the x axis.
pub fn emit_timeline_plot(rows: &[(&str, &[TickRecord])], dt: f64) -> String {
    let n_ticks = rows.iter().map(|(_, r)| r.len()).max().unwrap_or(0);
    let span = n_ticks as f64 * dt;
    let plot_w = WIDTH - LEFT - RIGHT;
    let axis_y = TOP + rows.len() as f64 * (ROW_H + ROW_GAP);
    let height = axis_y + 70.0;
    let x_of = |t: f64| if span > 0.0 { LEFT + plot_w * t / span } else { LEFT };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH:.0}" height="{height:.0}" fill="white"/>"#);
    for (i, (label, records)) in rows.iter().enumerate() {
        let y = TOP + i as f64 * (ROW_H + ROW_GAP);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + ROW_H / 2.0 + 4.0,
            escape(label)
        );
        for (m, start, len) in maneuver_bands(records) {
            let x0 = x_of(start as f64 * dt);
            let x1 = x_of((start + len) as f64 * dt);
            let _ = writeln!(
                s,
                r#"<rect class="band" data-maneuver="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                m.code(),
                x0,
                y,
                x1 - x0,
                ROW_H,
                maneuver_color(m)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
        WIDTH - RIGHT
    );
    if span > 0.0 {
        let step = tick_step(span);
        let mut k = 0;
        loop {
            let t = k as f64 * step;
            if t > span + 1e-9 {
                break;
            }
            let x = x_of(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{axis_y:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                axis_y + 5.0,
                axis_y + 18.0,
                fmt_num(t)
            );
            k += 1;
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
        LEFT + plot_w / 2.0,
        axis_y + 34.0
    );
    for (i, m) in Maneuver::ALL.iter().enumerate() {
        let x = LEFT + i as f64 * 110.0;
        let y = axis_y + 46.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            maneuver_color(*m),
            x + 16.0,
            y + 10.0,
            m.code()
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_num(t: f64) -> String {
    if (t - t.round()).abs() < 1e-9 {
        format!("{:.0}", t)
    } else {
        format!("{t:.1}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

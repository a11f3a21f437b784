//! Hand-written SVG charts.
//!
//! Every chart embeds the plotted numbers as JSON inside `<metadata>` so the
//! figure can be checked against `report.json`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::fp_taxonomy::FpType;
use crate::metrics::FpDistributionSeries;
use crate::sensitivity::SensitivityRow;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 120.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";

pub(crate) fn fp_type_color(t: FpType) -> &'static str {
    match t {
        FpType::Loc => "#4e79a7",
        FpType::Sim => "#f28e2b",
        FpType::Oth => "#59a14f",
        FpType::Bg => "#bab0ac",
    }
}

pub(crate) fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

fn metadata<T: Serialize>(out: &mut String, data: &T) {
    let json = serde_json::to_string(data).expect("chart data serializes");
    let _ = writeln!(out, "<metadata id=\"data\"><![CDATA[{json}]]></metadata>");
}

fn text(out: &mut String, x: f64, y: f64, size: u32, anchor: &str, body: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{x:.1}" y="{y:.1}" {FONT} font-size="{size}" text-anchor="{anchor}">{}</text>"#,
        escape_xml(body)
    );
}

fn axes(out: &mut String, top: f64, plot_w: f64, plot_h: f64, y_label: &str) {
    let x0 = MARGIN_L;
    let y0 = top + MARGIN_T + plot_h;
    let _ = writeln!(
        out,
        r##"<path d="M{x0:.1},{t:.1} V{y0:.1} H{x1:.1}" fill="none" stroke="#333" stroke-width="1"/>"##,
        t = top + MARGIN_T,
        x1 = x0 + plot_w
    );
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let y = y0 - v * plot_h;
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="#333"/>"##,
            x0 - 4.0
        );
        text(out, x0 - 8.0, y + 4.0, 10, "end", &format!("{v:.2}"));
    }
    let cy = top + MARGIN_T + plot_h / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="16" y="{cy:.1}" {FONT} font-size="11" text-anchor="middle" transform="rotate(-90 16 {cy:.1})">{}</text>"#,
        escape_xml(y_label)
    );
}

#[derive(Serialize)]
struct DistributionPanelData<'a> {
    title: &'a str,
    series: &'a FpDistributionSeries,
}

/// Stacked-area chart of false-positive type fractions against the number of
/// top-ranked false positives (log axis). One panel per entry, stacked
/// vertically.
pub fn fp_distribution_svg(panels: &[(&str, &FpDistributionSeries)]) -> String {
    let height = PANEL_H * panels.len().max(1) as f64;
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let mut out = String::new();
    header(&mut out, PANEL_W, height);
    let data: Vec<DistributionPanelData> = panels
        .iter()
        .map(|&(title, series)| DistributionPanelData { title, series })
        .collect();
    metadata(&mut out, &data);

    for (p, &(title, series)) in panels.iter().enumerate() {
        let top = p as f64 * PANEL_H;
        text(&mut out, PANEL_W / 2.0, top + 22.0, 14, "middle", title);
        axes(&mut out, top, plot_w, plot_h, "fraction of false positives");
        let y0 = top + MARGIN_T + plot_h;

        let entries = &series.entries;
        if entries.is_empty() {
            text(&mut out, MARGIN_L + plot_w / 2.0, y0 - plot_h / 2.0, 12, "middle", "no false positives");
        } else {
            let lo = (entries[0].k as f64).ln();
            let hi = (entries[entries.len() - 1].k as f64).ln();
            let xs: Vec<f64> = if entries.len() == 1 {
                vec![MARGIN_L, MARGIN_L + plot_w]
            } else {
                entries
                    .iter()
                    .map(|e| MARGIN_L + ((e.k as f64).ln() - lo) / (hi - lo) * plot_w)
                    .collect()
            };
            let fractions: Vec<_> = if entries.len() == 1 {
                vec![entries[0].fractions; 2]
            } else {
                entries.iter().map(|e| e.fractions).collect()
            };
            let mut below = vec![0.0; xs.len()];
            for t in FpType::ALL {
                let above: Vec<f64> = below.iter().zip(&fractions).map(|(b, f)| b + f.get(t)).collect();
                let mut d = String::new();
                for (i, (&x, &v)) in xs.iter().zip(&above).enumerate() {
                    let _ = write!(d, "{}{x:.2},{:.2} ", if i == 0 { 'M' } else { 'L' }, y0 - v * plot_h);
                }
                for (&x, &v) in xs.iter().zip(&below).rev() {
                    let _ = write!(d, "L{x:.2},{:.2} ", y0 - v * plot_h);
                }
                let _ = writeln!(
                    out,
                    r#"<path class="band-{}" d="{}Z" fill="{}" stroke="none"/>"#,
                    t.name(),
                    d.trim_end(),
                    fp_type_color(t)
                );
                below = above;
            }
            for (e, x) in entries.iter().zip(&xs) {
                text(&mut out, *x, y0 + 16.0, 10, "middle", &e.k.to_string());
            }
        }
        text(
            &mut out,
            MARGIN_L + plot_w / 2.0,
            y0 + 36.0,
            11,
            "middle",
            "total false positives (log scale)",
        );

        for (i, t) in FpType::ALL.iter().rev().enumerate() {
            let ly = top + MARGIN_T + 10.0 + i as f64 * 20.0;
            let lx = MARGIN_L + plot_w + 16.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{}"/>"#,
                ly - 10.0,
                fp_type_color(*t)
            );
            text(&mut out, lx + 18.0, ly, 11, "start", t.name());
        }
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Serialize)]
struct SensitivityPanelData<'a> {
    title: &'a str,
    rows: &'a [SensitivityRow],
}

/// Per-characteristic normalized AP of each subset, with the max and min
/// printed above each group. One panel per entry, stacked vertically.
pub fn sensitivity_svg(panels: &[(&str, &[SensitivityRow])]) -> String {
    let height = PANEL_H * panels.len().max(1) as f64;
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let mut out = String::new();
    header(&mut out, PANEL_W, height);
    let data: Vec<SensitivityPanelData> = panels
        .iter()
        .map(|&(title, rows)| SensitivityPanelData { title, rows })
        .collect();
    metadata(&mut out, &data);

    for (p, &(title, rows)) in panels.iter().enumerate() {
        let top = p as f64 * PANEL_H;
        text(&mut out, PANEL_W / 2.0, top + 22.0, 14, "middle", title);
        axes(&mut out, top, plot_w, plot_h, "normalized AP");
        let y0 = top + MARGIN_T + plot_h;
        if rows.is_empty() {
            text(&mut out, MARGIN_L + plot_w / 2.0, y0 - plot_h / 2.0, 12, "middle", "no positives");
            continue;
        }
        let group_w = plot_w / rows.len() as f64;
        for (g, row) in rows.iter().enumerate() {
            let gx = MARGIN_L + g as f64 * group_w;
            let n = row.subsets.len().max(1) as f64;
            let step = group_w * 0.8 / n;
            let points: Vec<(f64, f64)> = row
                .subsets
                .iter()
                .enumerate()
                .filter_map(|(i, s)| {
                    s.normalized_ap
                        .map(|v| (gx + group_w * 0.1 + step * (i as f64 + 0.5), y0 - v * plot_h))
                })
                .collect();
            if points.len() > 1 {
                let d: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##,
                    d.join(" ")
                );
            }
            for (x, y) in &points {
                let _ = writeln!(out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="#c0392b"/>"##);
            }
            for (i, s) in row.subsets.iter().enumerate() {
                let x = gx + group_w * 0.1 + step * (i as f64 + 0.5);
                text(&mut out, x, y0 + 12.0, 8, "middle", &s.subset);
            }
            text(
                &mut out,
                gx + group_w / 2.0,
                y0 + 30.0,
                11,
                "middle",
                row.characteristic.name(),
            );
            text(
                &mut out,
                gx + group_w / 2.0,
                top + MARGIN_T - 4.0,
                9,
                "middle",
                &format!("{:.3} / {:.3}", row.max, row.min),
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

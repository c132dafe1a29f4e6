//! Static SVG charts of result tables.

use std::fmt::Write as _;

use crate::classify::experiment::ClassifyResults;
use crate::disagg::DisaggRow;
use crate::occupancy::OccupancyResults;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 70.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Rounds `max` up to a 1/2/5 × 10^n tick step and returns (top, step).
fn nice_axis(max: f64) -> (f64, f64) {
    if !(max > 0.0) || !max.is_finite() {
        return (1.0, 0.2);
    }
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    ((max / step).ceil() * step, step)
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = write!(
        out,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        esc(title)
    );
}

fn y_axis(out: &mut String, top: f64, step: f64, label: &str) {
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let mut v = 0.0;
    while v <= top + step * 1e-9 {
        let y = HEIGHT - MARGIN_B - v / top * plot_h;
        let _ = write!(
            out,
            r##"<line x1="{MARGIN_L}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            WIDTH - MARGIN_R,
            MARGIN_L - 6.0,
            y + 4.0,
            trim_num(v)
        );
        v += step;
    }
    let _ = write!(
        out,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        esc(label)
    );
}

fn trim_num(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn legend(out: &mut String, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN_T + 18.0 * i as f64;
        let x = WIDTH - MARGIN_R + 16.0;
        let _ = write!(
            out,
            r#"<rect x="{x}" y="{y}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y + 10.0,
            esc(name)
        );
    }
}

/// Grouped bars: one group per entry of `groups`, one bar per series.
pub fn grouped_bar_svg(title: &str, y_label: &str, groups: &[String], series: &[(String, Vec<f64>)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let max = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let (top, step) = nice_axis(max);
    y_axis(&mut out, top, step, y_label);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (g, name) in groups.iter().enumerate() {
        let gx = MARGIN_L + g as f64 * group_w;
        for (s, (_, values)) in series.iter().enumerate() {
            let v = values.get(g).copied().unwrap_or(0.0);
            let v = if v.is_finite() { v.max(0.0) } else { 0.0 };
            let h = v / top * plot_h;
            let _ = write!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{}</title></rect>"#,
                gx + group_w * 0.1 + s as f64 * bar_w,
                HEIGHT - MARGIN_B - h,
                bar_w,
                h,
                PALETTE[s % PALETTE.len()],
                trim_num(v)
            );
        }
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            gx + group_w / 2.0,
            HEIGHT - MARGIN_B + 18.0,
            esc(name)
        );
    }
    let _ = write!(
        out,
        r#"<line x1="{MARGIN_L}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R
    );
    legend(&mut out, &series.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Scatter plot; points sharing a series name share a colour.
pub fn scatter_svg(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let finite = |v: &f64| v.is_finite();
    let xmax = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).filter(finite).fold(0.0, f64::max);
    let ymax = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)).filter(finite).fold(0.0, f64::max);
    let (xtop, xstep) = nice_axis(xmax);
    let (ytop, ystep) = nice_axis(ymax);
    y_axis(&mut out, ytop, ystep, y_label);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let mut v = 0.0;
    while v <= xtop + xstep * 1e-9 {
        let x = MARGIN_L + v / xtop * plot_w;
        let _ = write!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 18.0,
            trim_num(v)
        );
        v += xstep;
    }
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 20.0,
        esc(x_label)
    );
    let _ = write!(
        out,
        r#"<line x1="{MARGIN_L}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{0}" stroke="black"/>"#,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R
    );
    for (s, (_, points)) in series.iter().enumerate() {
        for &(px, py) in points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = write!(
                out,
                r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{}" fill-opacity="0.8"/>"#,
                MARGIN_L + px / xtop * plot_w,
                HEIGHT - MARGIN_B - py / ytop * plot_h,
                PALETTE[s % PALETTE.len()]
            );
        }
    }
    legend(&mut out, &series.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Accuracy and confusion-rate bars per algorithm, and energy proxy against
/// miss time per home. Counts are shown as a percentage of evaluated windows.
pub fn occupancy_charts(results: &OccupancyResults) -> Vec<(String, String)> {
    let groups: Vec<String> = ["accuracy", "TP", "TN", "FP", "FN"].iter().map(|s| s.to_string()).collect();
    let series: Vec<(String, Vec<f64>)> = results
        .summary
        .iter()
        .map(|s| {
            let total = (s.tp + s.tn + s.fp + s.fn_).max(f64::MIN_POSITIVE);
            let pct = |v: f64| 100.0 * v / total;
            (
                s.algorithm.name().to_string(),
                vec![s.accuracy_pct, pct(s.tp), pct(s.tn), pct(s.fp), pct(s.fn_)],
            )
        })
        .collect();
    let bars = grouped_bar_svg("Occupancy detection by algorithm", "% of evaluated windows", &groups, &series);

    let points: Vec<(String, Vec<(f64, f64)>)> = results
        .summary
        .iter()
        .map(|s| {
            let pts = results
                .rows_for(s.algorithm)
                .map(|r| {
                    let n = r.metrics.evaluated().max(1) as f64;
                    (100.0 * r.metrics.energy_proxy as f64 / n, 100.0 * r.metrics.miss_time as f64 / n)
                })
                .collect();
            (s.algorithm.name().to_string(), pts)
        })
        .collect();
    let scatter = scatter_svg(
        "Energy proxy vs miss time per home",
        "windows predicted occupied (%)",
        "occupied windows missed (%)",
        &points,
    );
    vec![("occupancy_metrics.svg".into(), bars), ("occupancy_tradeoff.svg".into(), scatter)]
}

/// Accuracy per characteristic, one bar per feature source plus the
/// majority baseline.
pub fn classify_charts(results: &ClassifyResults) -> Vec<(String, String)> {
    let mut groups: Vec<String> = Vec::new();
    let mut sources: Vec<String> = Vec::new();
    for r in &results.rows {
        let c = r.characteristic.name().to_string();
        if !groups.contains(&c) {
            groups.push(c);
        }
        let s = r.source.name().to_string();
        if !sources.contains(&s) {
            sources.push(s);
        }
    }
    let mut series: Vec<(String, Vec<f64>)> = sources
        .iter()
        .map(|s| {
            let vals = groups
                .iter()
                .map(|g| {
                    results
                        .rows
                        .iter()
                        .find(|r| r.characteristic.name() == g && r.source.name() == s)
                        .map_or(0.0, |r| r.accuracy_pct)
                })
                .collect();
            (s.clone(), vals)
        })
        .collect();
    let baseline = groups
        .iter()
        .map(|g| {
            results
                .rows
                .iter()
                .find(|r| r.characteristic.name() == g)
                .map_or(0.0, |r| r.baseline_pct)
        })
        .collect();
    series.push(("majority".into(), baseline));
    vec![(
        "classification_accuracy.svg".into(),
        grouped_bar_svg("Household characteristic accuracy", "accuracy (%)", &groups, &series),
    )]
}

/// Mean F-score and energy error per appliance.
pub fn disagg_charts(rows: &[DisaggRow]) -> Vec<(String, String)> {
    let mut appliances: Vec<String> = rows.iter().map(|r| r.appliance.clone()).collect();
    appliances.sort();
    appliances.dedup();
    let mean = |name: &str, f: &dyn Fn(&DisaggRow) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter(|r| r.appliance == name).filter_map(f).collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let fscore = appliances.iter().map(|a| 100.0 * mean(a, &|r| Some(r.metrics.fscore))).collect();
    let energy = appliances.iter().map(|a| mean(a, &|r| r.metrics.error_energy_pct)).collect();
    vec![(
        "disaggregation_metrics.svg".into(),
        grouped_bar_svg(
            "Disaggregation accuracy per appliance",
            "percent",
            &appliances,
            &[("F-score x100".into(), fscore), ("energy error %".into(), energy)],
        ),
    )]
}

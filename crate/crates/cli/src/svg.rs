//! Minimal line plots: axes, optional log scales, polylines with markers,
//! and a legend.

use std::fmt::Write as _;

use crate::config::ExperimentConfig;
use crate::runner::RunOutput;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, log: bool, px_lo: f64, px_hi: f64) -> Scale {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let t = if log { v.log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-12 {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            lo -= pad;
            hi += pad;
        }
        Scale { lo, hi, log, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        self.px_lo + (t - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    /// Tick positions in data units with their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0) as i64;
            (self.lo as i64..=self.hi as i64)
                .step_by(step as usize)
                .map(|e| (10f64.powi(e as i32), format!("1e{e}")))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            let first = (self.lo / step - 1e-9).ceil() as i64;
            let last = (self.hi / step + 1e-9).floor() as i64;
            (first..=last)
                .map(|k| {
                    let v = k as f64 * step;
                    (v, format!("{}", (v / step).round() * step))
                })
                .map(|(v, s)| (v, trim_float(&s)))
                .collect()
        }
    }
}

fn trim_float(s: &str) -> String {
    match s.parse::<f64>() {
        Ok(v) if v.abs() >= 1e-3 || v == 0.0 => {
            let t = format!("{v:.6}");
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        }
        Ok(v) => format!("{v:.1e}"),
        Err(_) => s.to_string(),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn usable(v: f64, log: bool) -> bool {
    v.is_finite() && (!log || v > 0.0)
}

pub fn render(spec: &PlotSpec, series: &[Series]) -> String {
    let kept: Vec<Series> = series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            points: s.points.iter().copied().filter(|&(x, y)| usable(x, spec.log_x) && usable(y, spec.log_y)).collect(),
        })
        .collect();
    let all = || kept.iter().flat_map(|s| s.points.iter().copied());
    let xs = Scale::new(all().map(|p| p.0), spec.log_x, LEFT, WIDTH - RIGHT);
    let ys = Scale::new(all().map(|p| p.1), spec.log_y, HEIGHT - BOTTOM, TOP);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, escape(&spec.title));
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);

    for (v, label) in xs.ticks() {
        let px = xs.map(v);
        let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{y1}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 20.0, escape(&label));
    }
    for (v, label) in ys.ticks() {
        let py = ys.map(v);
        let _ = writeln!(out, r##"<line x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, escape(&label));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(&spec.x_label));
    let _ = writeln!(
        out,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(&spec.y_label)
    );

    for (i, s) in kept.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", xs.map(x), ys.map(y))).collect();
        if coords.len() > 1 {
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
        }
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, xs.map(x), ys.map(y));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

/// One series per y column and per combination of the other swept
/// parameters, in sweep order. Rows with errors are skipped.
pub fn series_from_run(cfg: &ExperimentConfig, run: &RunOutput) -> (PlotSpec, Vec<Series>) {
    let x_name = cfg.output.x.clone().unwrap_or_default();
    let y_cols: Vec<String> = if cfg.output.y.is_empty() {
        run.columns
            .iter()
            .filter(|c| c.ends_with("infidelity"))
            .map(|c| c.to_string())
            .collect()
    } else {
        cfg.output.y.clone()
    };
    let others: Vec<&str> = cfg.swept_axes().iter().map(|a| a.name.as_str()).filter(|n| *n != x_name).collect();
    let mut series: Vec<Series> = Vec::new();
    for y in &y_cols {
        for r in &run.results {
            if r.error.is_some() {
                continue;
            }
            let Some(x) = r.point.get(&x_name).and_then(|v| v.as_f64()) else { continue };
            let Some(yv) = r.get(&run.columns, y) else { continue };
            let tag: Vec<String> = others
                .iter()
                .map(|n| {
                    let key = n.split_once('.').map(|(_, k)| k).unwrap_or(n);
                    match r.point.get(n).and_then(|v| v.as_f64()) {
                        Some(v) => format!("{key}={v}"),
                        None => format!("{key}={:?}", r.point.get(n)),
                    }
                })
                .collect();
            let label = if tag.is_empty() { y.clone() } else { format!("{y} {}", tag.join(" ")) };
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((x, yv)),
                None => series.push(Series { label, points: vec![(x, yv)] }),
            }
        }
    }
    let spec = PlotSpec {
        title: cfg.output.title.clone().unwrap_or_else(|| cfg.name.clone()),
        x_label: x_name,
        y_label: if y_cols.len() == 1 { y_cols[0].clone() } else { "value".into() },
        log_x: cfg.output.log_x,
        log_y: cfg.output.log_y,
    };
    (spec, series)
}

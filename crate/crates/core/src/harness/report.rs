//! Tables and plots built from run records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::records::RunRecord;
use super::spec::Algorithm;

/// Reference line drawn on sweep plots.
pub const TARGET_LOG_INFIDELITY: f64 = -3.0;

/// Best `log10(1 - F)` per (algorithm, T), minimized over repetitions.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub algorithms: Vec<Algorithm>,
    pub times: Vec<f64>,
    /// `None` when no repetition of that cell completed.
    pub cells: BTreeMap<(Algorithm, u64), Option<f64>>,
}

impl SweepTable {
    pub fn get(&self, algorithm: Algorithm, t: f64) -> Option<f64> {
        self.cells.get(&(algorithm, t.to_bits())).copied().flatten()
    }

    /// Wide CSV: one row per T, one column per algorithm, `NA` for absent cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T");
        for a in &self.algorithms {
            let _ = write!(out, ",{a}");
        }
        out.push('\n');
        for &t in &self.times {
            let _ = write!(out, "{t}");
            for &a in &self.algorithms {
                match self.get(a, t) {
                    Some(l) => {
                        let _ = write!(out, ",{l}");
                    }
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let series: Vec<(String, Vec<(f64, f64)>)> = self
            .algorithms
            .iter()
            .map(|&a| {
                let pts = self
                    .times
                    .iter()
                    .filter_map(|&t| self.get(a, t).map(|l| (t, l)))
                    .collect();
                (a.to_string(), pts)
            })
            .collect();
        let plot = Plot {
            x_label: "T",
            y_label: "log10(1 - F)",
            series: &series,
            reference: Some(TARGET_LOG_INFIDELITY),
            markers: true,
        };
        plot.render()
    }
}

/// Builds the sweep table. Failed or audited-out records count as absent.
pub fn sweep_report(records: &[RunRecord]) -> SweepTable {
    let mut algorithms = BTreeSet::new();
    let mut times: Vec<f64> = Vec::new();
    let mut cells: BTreeMap<(Algorithm, u64), Option<f64>> = BTreeMap::new();
    for r in records {
        algorithms.insert(r.algorithm);
        if !times.iter().any(|t| t.to_bits() == r.total_time.to_bits()) {
            times.push(r.total_time);
        }
        let cell = cells.entry((r.algorithm, r.total_time.to_bits())).or_insert(None);
        if let Some(l) = r.usable_log_infidelity() {
            *cell = Some(cell.map_or(l, |c: f64| c.min(l)));
        }
    }
    times.sort_by(f64::total_cmp);
    SweepTable {
        algorithms: algorithms.into_iter().collect(),
        times,
        cells,
    }
}

/// Per-episode fidelity of several runs and their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct LearningCurve {
    pub runs: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Original lengths when the runs differed and were cut to the shortest.
    pub truncated_from: Option<Vec<usize>>,
}

pub fn learning_curve_report(series: &[Vec<f64>]) -> LearningCurve {
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    let truncated_from = series
        .iter()
        .any(|s| s.len() != len)
        .then(|| series.iter().map(Vec::len).collect());
    let runs: Vec<Vec<f64>> = series.iter().map(|s| s[..len].to_vec()).collect();
    let mean = (0..len)
        .map(|i| runs.iter().map(|r| r[i]).sum::<f64>() / runs.len() as f64)
        .collect();
    LearningCurve {
        runs,
        mean,
        truncated_from,
    }
}

impl LearningCurve {
    /// Columns `episode, run0, run1, ..., mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(lens) = &self.truncated_from {
            let _ = writeln!(out, "# truncated to {} episodes from lengths {lens:?}", self.mean.len());
        }
        out.push_str("episode");
        for i in 0..self.runs.len() {
            let _ = write!(out, ",run{i}");
        }
        out.push_str(",mean\n");
        for (ep, m) in self.mean.iter().enumerate() {
            let _ = write!(out, "{ep}");
            for r in &self.runs {
                let _ = write!(out, ",{}", r[ep]);
            }
            let _ = writeln!(out, ",{m}");
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let as_points = |v: &[f64]| -> Vec<(f64, f64)> {
            // thin long curves so the file stays small
            let stride = (v.len() / 2000).max(1);
            v.iter()
                .enumerate()
                .step_by(stride)
                .map(|(i, &f)| (i as f64, f))
                .collect()
        };
        let mut series: Vec<(String, Vec<(f64, f64)>)> = self
            .runs
            .iter()
            .enumerate()
            .map(|(i, r)| (format!("run{i}"), as_points(r)))
            .collect();
        series.push(("mean".into(), as_points(&self.mean)));
        Plot {
            x_label: "episode",
            y_label: "F",
            series: &series,
            reference: None,
            markers: false,
        }
        .render()
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf",
];

struct Plot<'a> {
    x_label: &'a str,
    y_label: &'a str,
    series: &'a [(String, Vec<(f64, f64)>)],
    reference: Option<f64>,
    markers: bool,
}

impl Plot<'_> {
    fn render(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 420.0;
        const L: f64 = 70.0;
        const R: f64 = 130.0;
        const TOP: f64 = 20.0;
        const B: f64 = 50.0;

        let pts = self.series.iter().flat_map(|(_, p)| p.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if let Some(r) = self.reference {
            y0 = y0.min(r);
            y1 = y1.max(r);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let sx = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * (H - TOP - B);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{L}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - L - R,
            H - TOP - B
        );
        for k in 0..=5 {
            let fx = x0 + (x1 - x0) * k as f64 / 5.0;
            let fy = y0 + (y1 - y0) * k as f64 / 5.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(fx),
                H - B + 16.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                L - 6.0,
                sy(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (L + W - R) / 2.0,
            H - 12.0,
            self.x_label
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (TOP + H - B) / 2.0,
            (TOP + H - B) / 2.0,
            self.y_label
        );
        if let Some(r) = self.reference {
            let _ = writeln!(
                s,
                r##"<line x1="{L}" x2="{}" y1="{:.1}" y2="{:.1}" stroke="#d62728" stroke-dasharray="6 4"/>"##,
                W - R,
                sy(r),
                sy(r)
            );
        }
        for (i, (name, points)) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if !points.is_empty() {
                let path: Vec<String> = points
                    .iter()
                    .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    path.join(" ")
                );
                if self.markers {
                    for &(x, y) in points {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                            sx(x),
                            sy(y)
                        );
                    }
                }
            }
            let ly = TOP + 14.0 + 18.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{:.1}" width="12" height="3" fill="{color}"/><text x="{}" y="{:.1}">{name}</text>"#,
                W - R + 12.0,
                ly - 4.0,
                W - R + 30.0,
                ly
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

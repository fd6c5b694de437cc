use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::Path;

use crate::evaluate::{speedups, summarize, BoxStats};
use crate::methods::{Method, RunRecord};
use crate::PipelineError;

pub fn write_runs(records: &[RunRecord], out: impl Write) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs(input: impl Read) -> Result<Vec<RunRecord>, PipelineError> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(PipelineError::from)).collect()
}

/// CSV text with every timing column (`*_s`) removed.
pub fn strip_timings(csv_text: &str) -> Result<String, PipelineError> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let header = rd.headers()?.clone();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !header[i].ends_with("_s")).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(keep.iter().map(|&i| &header[i]))?;
    for rec in rd.records() {
        let rec = rec?;
        w.write_record(keep.iter().map(|&i| &rec[i]))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| PipelineError::Format(e.to_string()))?).expect("csv output is utf-8"))
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 60.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r##"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="#333"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="#333"/>"##,
        H - PAD,
        W - PAD / 2.0,
        H - PAD,
        H - PAD
    );
    s
}

/// Maps data values to the vertical pixel range, log10 when `log` is set.
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let t = |v: f64| if log { v.max(1e-300).log10() } else { v };
        let (mut lo, mut hi) = values.filter(|v| v.is_finite()).map(t).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !(lo < hi) {
            lo = if lo.is_finite() { lo - 1.0 } else { 0.0 };
            hi = lo + 2.0;
        }
        let pad = 0.05 * (hi - lo);
        Self { lo: lo - pad, hi: hi + pad, log }
    }

    fn y(&self, v: f64) -> f64 {
        let t = if self.log { v.max(1e-300).log10() } else { v };
        H - PAD - (t - self.lo) / (self.hi - self.lo) * (H - 2.0 * PAD)
    }

    fn ticks(&self, s: &mut String) {
        for k in 0..=4 {
            let t = self.lo + (self.hi - self.lo) * k as f64 / 4.0;
            let v = if self.log { 10f64.powf(t) } else { t };
            let y = H - PAD - k as f64 / 4.0 * (H - 2.0 * PAD);
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3e}</text>"#, PAD - 4.0, y + 4.0);
        }
    }
}

/// Box-and-whisker plot, one box per group.
pub fn box_plot_svg(title: &str, groups: &[(String, Vec<f64>)], log: bool) -> String {
    let mut s = svg_open(title);
    let axis = Axis::fit(groups.iter().flat_map(|(_, v)| v.iter().copied()), log);
    axis.ticks(&mut s);
    let slot = (W - 1.5 * PAD) / groups.len().max(1) as f64;
    for (i, (name, vals)) in groups.iter().enumerate() {
        if vals.is_empty() {
            continue;
        }
        let b = BoxStats::of(vals);
        let cx = PAD + slot * (i as f64 + 0.5);
        let hw = slot * 0.25;
        let _ = writeln!(
            s,
            r##"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="#333"/><rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#9ecae1" stroke="#333"/><line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#d62728" stroke-width="2"/>"##,
            axis.y(b.min),
            axis.y(b.max),
            cx - hw,
            axis.y(b.q3),
            2.0 * hw,
            (axis.y(b.q1) - axis.y(b.q3)).max(0.5),
            cx - hw,
            axis.y(b.median),
            cx + hw,
            axis.y(b.median)
        );
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{}" text-anchor="middle">{name}</text>"#, H - PAD + 16.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Histogram with `bins` equal-width bins.
pub fn histogram_svg(title: &str, values: &[f64], bins: usize) -> String {
    let mut s = svg_open(title);
    if values.is_empty() || bins == 0 {
        s.push_str("</svg>\n");
        return s;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let axis = Axis::fit([0.0, *counts.iter().max().unwrap() as f64].into_iter(), false);
    axis.ticks(&mut s);
    let bw = (W - 1.5 * PAD) / bins as f64;
    for (i, &c) in counts.iter().enumerate() {
        let x = PAD + bw * i as f64;
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#74c476" stroke="#333"/>"##,
            axis.y(c as f64),
            bw,
            axis.y(0.0) - axis.y(c as f64)
        );
    }
    for k in [0, bins] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.2}</text>"#,
            PAD + bw * k as f64,
            H - PAD + 16.0,
            lo + width * k as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

const COLOURS: [&str; 5] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Scatter of (x, y) per series on log-log axes.
pub fn scatter_svg(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut s = svg_open(title);
    let ya = Axis::fit(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)), true);
    let xa = Axis::fit(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)), true);
    ya.ticks(&mut s);
    let x = |v: f64| PAD + (v.max(1e-300).log10() - xa.lo) / (xa.hi - xa.lo) * (W - 1.5 * PAD);
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = COLOURS[i % COLOURS.len()];
        for &(px, py) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{c}"/>"#, x(px), ya.y(py));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{c}">{name}</text>"#, W - PAD * 1.5, PAD + 16.0 * i as f64);
    }
    s.push_str("</svg>\n");
    s
}

/// Writes runs.csv, summary.csv, speedup.csv and the SVG figures.
pub fn write_report(records: &[RunRecord], dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir)?;
    write_runs(records, File::create(dir.join("runs.csv"))?)?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    for row in summarize(records) {
        w.serialize(row)?;
    }
    w.flush()?;

    let mut by: BTreeMap<Method, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by.entry(r.method).or_default().push(r);
    }
    let groups = |f: fn(&RunRecord) -> f64| -> Vec<(String, Vec<f64>)> {
        by.iter().map(|(m, rs)| (m.name().to_string(), rs.iter().map(|r| f(r)).collect())).collect()
    };
    fs::write(dir.join("re_l2.svg"), box_plot_svg("Relative L2 error", &groups(|r| r.re_l2), true))?;
    fs::write(dir.join("time.svg"), box_plot_svg("Total time (s)", &groups(|r| r.total_s), true))?;
    let series: Vec<(String, Vec<(f64, f64)>)> =
        by.iter().map(|(m, rs)| (m.name().to_string(), rs.iter().map(|r| (r.total_s, r.re_l2)).collect())).collect();
    fs::write(dir.join("scatter.svg"), scatter_svg("Time (s) vs relative L2 error", &series))?;

    let mut sw = csv::Writer::from_path(dir.join("speedup.csv"))?;
    sw.write_record(["baseline", "ratio"])?;
    for &m in &[Method::Amr, Method::Wos, Method::Uniform, Method::Amg] {
        let ratios = speedups(records, m);
        for r in &ratios {
            sw.write_record([m.name(), &r.to_string()])?;
        }
        if !ratios.is_empty() {
            fs::write(dir.join(format!("speedup_{}.svg", m.name())), histogram_svg(&format!("{} time / lamg time", m.name()), &ratios, 10))?;
        }
    }
    sw.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_documents_are_closed() {
        let b = box_plot_svg("t", &[("a".into(), vec![1.0, 2.0, 3.0]), ("b".into(), vec![0.5])], true);
        assert!(b.starts_with("<svg") && b.trim_end().ends_with("</svg>"));
        assert_eq!(b.matches("<rect").count(), 3);
        let h = histogram_svg("h", &[1.0, 1.5, 2.0, 4.0], 3);
        assert_eq!(h.matches("<rect").count(), 4);
        let sc = scatter_svg("s", &[("x".into(), vec![(1.0, 0.1), (2.0, 0.05)])]);
        assert_eq!(sc.matches("<circle").count(), 2);
    }

    #[test]
    fn timing_columns_are_stripped() {
        let text = "method,re_l2,mc_s,total_s\nlamg,0.1,0.5,0.7\n";
        assert_eq!(strip_timings(text).unwrap(), "method,re_l2\nlamg,0.1\n");
    }
}

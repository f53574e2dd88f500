//! Batch runs over (sequence, flavor, qp), CSV logs, BD-rate tables and
//! R-D plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::codec::ModeCounts;
use crate::config::{Flavor, RunConfig};
use crate::metrics::{bd_rate, BdMetric, MetricError, RdPoint};
use crate::pipeline::{encode_cloud, rd_point};
use crate::pointcloud::PointCloud;
use crate::{Error, Result};

/// Upper edges of the lambda-scale histogram bins; the last bin is open.
pub const EPM_SCALE_BINS: [f64; 4] = [1.0, 1.25, 1.5, 1.75];

#[derive(Debug, Clone)]
pub struct JobResult {
    pub seq: String,
    pub flavor: Flavor,
    pub qp: u8,
    pub rd: RdPoint,
    pub near_bits: u64,
    pub far_bits: u64,
    pub near_modes: ModeCounts,
    pub far_modes: ModeCounts,
    /// Far-layer CTU counts per lambda-scale bin (see [`EPM_SCALE_BINS`]).
    pub epm_histogram: [usize; 5],
    pub bitstream: Vec<u8>,
}

fn histogram(scales: impl IntoIterator<Item = f64>) -> [usize; 5] {
    let mut h = [0; 5];
    for s in scales {
        let bin = EPM_SCALE_BINS.iter().position(|&edge| s <= edge).unwrap_or(4);
        h[bin] += 1;
    }
    h
}

/// Encodes every (sequence, flavor, qp) combination in parallel. Results are
/// sorted by sequence, flavor, then descending qp.
pub fn run_jobs(inputs: &[(String, PointCloud)], cfg: &RunConfig) -> Result<Vec<JobResult>> {
    cfg.validate()?;
    let jobs: Vec<(usize, Flavor, u8)> = (0..inputs.len())
        .flat_map(|i| {
            cfg.flavors
                .iter()
                .flat_map(move |&f| cfg.qps.iter().map(move |&q| (i, f, q)))
        })
        .collect();
    let mut results = jobs
        .par_iter()
        .map(|&(i, flavor, qp)| {
            let (seq, cloud) = &inputs[i];
            let params = cfg.pipeline(flavor, qp);
            let enc = encode_cloud(cloud, &params)?;
            let e = &enc.encoded;
            let rd = rd_point(cloud, &enc.recon, e.total_bits(), e.geometry_bits(), &params)?;
            let scales = e.far.ctu_estimates.iter().map(|n| n.lambda_scale);
            Ok(JobResult {
                seq: seq.clone(),
                flavor,
                qp,
                rd,
                near_bits: 8 * e.near.payload.len() as u64,
                far_bits: 8 * e.far.payload.len() as u64,
                near_modes: e.near.mode_counts(),
                far_modes: e.far.mode_counts(),
                epm_histogram: histogram(scales),
                bitstream: e.bitstream.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| (&a.seq, a.flavor, std::cmp::Reverse(a.qp)).cmp(&(&b.seq, b.flavor, std::cmp::Reverse(b.qp))));
    Ok(results)
}

/// Unique bitstream path for a job.
pub fn bitstream_path(dir: &Path, r: &JobResult) -> PathBuf {
    dir.join(format!("{}_{}_qp{:02}.pcgs", r.seq, r.flavor, r.qp))
}

/// One row of the metric report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub seq: String,
    pub qp: u8,
    pub bits_geometry: u64,
    pub d1_psnr: f64,
    pub d2_psnr: f64,
    pub points_missed: usize,
}

pub const METRIC_HEADER: [&str; 6] = ["seq", "qp", "bits_geometry", "d1_psnr", "d2_psnr", "points_missed"];

impl MetricRow {
    pub fn from_job(r: &JobResult) -> Self {
        Self {
            seq: r.seq.clone(),
            qp: r.qp,
            bits_geometry: r.rd.bits_geometry,
            d1_psnr: r.rd.d1_psnr,
            d2_psnr: r.rd.d2_psnr,
            points_missed: r.rd.points_missed,
        }
    }

    fn record(&self) -> [String; 6] {
        [
            self.seq.clone(),
            self.qp.to_string(),
            self.bits_geometry.to_string(),
            format!("{:.6}", self.d1_psnr),
            format!("{:.6}", self.d2_psnr),
            self.points_missed.to_string(),
        ]
    }

    fn rd(&self) -> RdPoint {
        RdPoint {
            bits_total: self.bits_geometry,
            bits_geometry: self.bits_geometry,
            d1_psnr: self.d1_psnr,
            d2_psnr: self.d2_psnr,
            points_missed: self.points_missed,
            ..Default::default()
        }
    }
}

pub fn write_metric_csv<W: std::io::Write>(w: W, rows: &[MetricRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(METRIC_HEADER)?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_metric_csv<R: std::io::Read>(r: R) -> Result<Vec<MetricRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("metric CSV lacks column `{name}`")))
    };
    let idx: Vec<usize> = METRIC_HEADER.iter().map(|n| col(n)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("").trim();
        let bad = |what: &str| Error::Config(format!("metric CSV row {}: bad {what}", line + 2));
        rows.push(MetricRow {
            seq: field(0).to_string(),
            qp: field(1).parse().map_err(|_| bad("qp"))?,
            bits_geometry: field(2).parse().map_err(|_| bad("bits_geometry"))?,
            d1_psnr: field(3).parse().map_err(|_| bad("d1_psnr"))?,
            d2_psnr: field(4).parse().map_err(|_| bad("d2_psnr"))?,
            points_missed: field(5).parse().map_err(|_| bad("points_missed"))?,
        });
    }
    Ok(rows)
}

pub const ENCODE_LOG_HEADER: [&str; 23] = [
    "seq",
    "flavor",
    "qp",
    "bits_total",
    "bits_geometry",
    "near_bits",
    "far_bits",
    "d1_psnr",
    "d2_psnr",
    "points_in",
    "points_out",
    "points_missed",
    "near_intra",
    "near_split",
    "far_skip",
    "far_merge",
    "far_intra",
    "far_split",
    "epm_le_1.00",
    "epm_le_1.25",
    "epm_le_1.50",
    "epm_le_1.75",
    "epm_gt_1.75",
];

/// Encoder log: one row per job with bits, quality, mode counts and the
/// far-layer lambda-scale histogram.
pub fn write_encode_log<W: std::io::Write>(w: W, results: &[JobResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ENCODE_LOG_HEADER)?;
    for r in results {
        let mut row = vec![
            r.seq.clone(),
            r.flavor.to_string(),
            r.qp.to_string(),
            r.rd.bits_total.to_string(),
            r.rd.bits_geometry.to_string(),
            r.near_bits.to_string(),
            r.far_bits.to_string(),
            format!("{:.6}", r.rd.d1_psnr),
            format!("{:.6}", r.rd.d2_psnr),
            r.rd.points_in.to_string(),
            r.rd.points_out.to_string(),
            r.rd.points_missed.to_string(),
            r.near_modes.intra.to_string(),
            r.near_modes.split.to_string(),
            r.far_modes.skip.to_string(),
            r.far_modes.merge.to_string(),
            r.far_modes.intra.to_string(),
            r.far_modes.split.to_string(),
        ];
        row.extend(r.epm_histogram.iter().map(|c| c.to_string()));
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// BD-rate of one sequence, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct BdRow {
    pub seq: String,
    pub d1: std::result::Result<f64, MetricError>,
    pub d2: std::result::Result<f64, MetricError>,
}

/// Pairs rows by sequence and computes D1/D2 BD-rates of `test` against
/// `anchor`. Sequences present in only one input are skipped.
pub fn bd_table(anchor: &[MetricRow], test: &[MetricRow]) -> Vec<BdRow> {
    let group = |rows: &[MetricRow]| {
        let mut m: BTreeMap<String, Vec<RdPoint>> = BTreeMap::new();
        for r in rows {
            m.entry(r.seq.clone()).or_default().push(r.rd());
        }
        m
    };
    let a = group(anchor);
    let t = group(test);
    a.iter()
        .filter_map(|(seq, ap)| {
            let tp = t.get(seq)?;
            Some(BdRow {
                seq: seq.clone(),
                d1: bd_rate(ap, tp, BdMetric::D1),
                d2: bd_rate(ap, tp, BdMetric::D2),
            })
        })
        .collect()
}

fn mean_ok(rows: &[BdRow], f: impl Fn(&BdRow) -> &std::result::Result<f64, MetricError>) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter_map(|r| f(r).as_ref().ok().copied()).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn cell(v: &std::result::Result<f64, MetricError>) -> String {
    match v {
        Ok(x) => format!("{x:.2}%"),
        Err(_) => "n/a".to_string(),
    }
}

/// Aligned text table with an average row.
pub fn format_bd_table(rows: &[BdRow]) -> String {
    let width = rows.iter().map(|r| r.seq.len()).max().unwrap_or(0).max("Average".len());
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  {:>10}  {:>10}", "Sequence", "D1", "D2");
    for r in rows {
        let _ = writeln!(s, "{:<width$}  {:>10}  {:>10}", r.seq, cell(&r.d1), cell(&r.d2));
    }
    let avg = |o: Option<f64>| o.map_or("n/a".to_string(), |x| format!("{x:.2}%"));
    let _ = writeln!(
        s,
        "{:<width$}  {:>10}  {:>10}",
        "Average",
        avg(mean_ok(rows, |r| &r.d1)),
        avg(mean_ok(rows, |r| &r.d2))
    );
    s
}

pub fn write_bd_csv<W: std::io::Write>(w: W, rows: &[BdRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["seq", "d1_bd_rate", "d2_bd_rate"])?;
    let num = |v: &std::result::Result<f64, MetricError>| v.as_ref().map_or(String::new(), |x| format!("{x:.6}"));
    for r in rows {
        out.write_record([r.seq.clone(), num(&r.d1), num(&r.d2)])?;
    }
    let avg = |o: Option<f64>| o.map_or(String::new(), |x| format!("{x:.6}"));
    out.write_record([
        "average".to_string(),
        avg(mean_ok(rows, |r| &r.d1)),
        avg(mean_ok(rows, |r| &r.d2)),
    ])?;
    out.flush()?;
    Ok(())
}

/// A named R-D curve for plotting: `(bits, psnr)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Self-contained SVG line plot of PSNR against geometry bits.
pub fn render_svg(series: &[Series], title: &str, y_label: &str) -> String {
    let (w, h) = (720.0, 480.0);
    let (l, r, t, b) = (70.0, 180.0, 40.0, 50.0);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let py = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, (l + w - r) / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} L{l} {} L{} {}" fill="none" stroke="black"/>"#,
        h - b,
        w - r,
        h - b
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.0}</text>"#, px(fx), h - b + 16.0, fx);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.2}</text>"#, l - 6.0, py(fy) + 4.0, fy);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">geometry bits</text>"#, (l + w - r) / 2.0, h - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (t + h - b) / 2.0,
        (t + h - b) / 2.0,
        escape(y_label)
    );
    for (i, se) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = se.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        for &(x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = t + 18.0 * i as f64 + 10.0;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, w - r + 10.0, w - r + 30.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - r + 36.0, ly + 4.0, escape(&se.label));
    }
    s.push_str("</svg>\n");
    s
}

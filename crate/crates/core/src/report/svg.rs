//! Self-contained SVG renderings: the normalized band overview and a
//! histogram overlay of one metric's reference and user distributions.
//!
//! Coordinates are printed with three decimals so output bytes depend only
//! on the input values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{ComparisonSummary, TestStatistic};

/// Half-width of the overview axis in reference standard deviations.
pub const AXIS_LIMIT: f64 = 5.0;

const OV_WIDTH: f64 = 760.0;
const OV_LEFT: f64 = 240.0;
const OV_RIGHT: f64 = 740.0;
const OV_TOP: f64 = 40.0;
const OV_ROW: f64 = 28.0;

fn escape(s: &str) -> String {
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

/// Horizontal pixel position of a z value on the overview axis.
pub fn overview_x(z: f64) -> f64 {
    OV_LEFT + (z.clamp(-AXIS_LIMIT, AXIS_LIMIT) + AXIS_LIMIT) / (2.0 * AXIS_LIMIT) * (OV_RIGHT - OV_LEFT)
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    );
}

pub fn render_overview(summary: &ComparisonSummary) -> Result<String> {
    if summary.entries.is_empty() {
        return Err(Error::param("overview needs at least one metric"));
    }
    let rows = summary.entries.len() as f64;
    let bottom = OV_TOP + rows * OV_ROW;
    let height = bottom + 40.0;
    let mut s = String::new();
    header(&mut s, OV_WIDTH, height);

    // Widest band first so the narrower ones paint over it.
    for (k, fill) in [(3.0, "#f4b6b6"), (2.0, "#f7e3a1"), (1.0, "#b9e3b0")] {
        let x0 = overview_x(-k);
        let x1 = overview_x(k);
        let _ = writeln!(
            s,
            r#"<rect class="band-{k:.0}" x="{x0:.3}" y="{OV_TOP:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
            x1 - x0,
            bottom - OV_TOP
        );
    }
    let c = overview_x(0.0);
    let _ = writeln!(
        s,
        r#"<line class="center" x1="{c:.3}" y1="{OV_TOP:.3}" x2="{c:.3}" y2="{bottom:.3}" stroke="black" stroke-width="1"/>"#
    );
    for z in -5..=5 {
        let x = overview_x(z as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.3}" y="{:.3}" text-anchor="middle">{z}</text>"#,
            bottom + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{c:.3}" y="{:.3}" text-anchor="middle">(user mean − reference mean) / reference std</text>"#,
        bottom + 34.0
    );

    for (i, e) in summary.entries.iter().enumerate() {
        let y = OV_TOP + (i as f64 + 0.5) * OV_ROW;
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#,
            OV_LEFT - 8.0,
            y + 4.0,
            escape(&e.metric)
        );
        let half = e.std_ratio.abs();
        let lo = overview_x(e.z - half);
        let hi = overview_x(e.z + half);
        let _ = writeln!(
            s,
            r#"<line class="errorbar" x1="{lo:.3}" y1="{y:.3}" x2="{hi:.3}" y2="{y:.3}" stroke="black" stroke-width="1.5"/>"#
        );
        if e.z.abs() > AXIS_LIMIT || !e.z.is_finite() {
            // Clip arrow at the axis edge pointing outward.
            let (tip, dir) = if e.z > 0.0 { (OV_RIGHT, 1.0) } else { (OV_LEFT, -1.0) };
            let base = tip - dir * 10.0;
            let _ = writeln!(
                s,
                r#"<polygon class="clip" data-z="{:.3}" points="{base:.3},{:.3} {tip:.3},{y:.3} {base:.3},{:.3}" fill="black"/>"#,
                e.z,
                y - 6.0,
                y + 6.0
            );
        } else {
            let _ = writeln!(
                s,
                r#"<circle class="marker" data-z="{:.3}" cx="{:.3}" cy="{y:.3}" r="4" fill="black"/>"#,
                e.z,
                overview_x(e.z)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn plot_overview(summary: &ComparisonSummary, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_overview(summary)?)?;
    Ok(())
}

const H_WIDTH: f64 = 640.0;
const H_HEIGHT: f64 = 400.0;
const H_LEFT: f64 = 60.0;
const H_RIGHT: f64 = 620.0;
const H_TOP: f64 = 40.0;
const H_BOTTOM: f64 = 340.0;

/// Counts per equal-width bin over `[lo, hi]`; the top edge is inclusive.
pub fn histogram(values: &[f64], lo: f64, hi: f64, nbins: usize) -> Vec<usize> {
    let mut counts = vec![0; nbins];
    let width = hi - lo;
    for v in values {
        let b = (((v - lo) / width) * nbins as f64).floor();
        let b = if b.is_nan() || b < 0.0 { 0 } else { (b as usize).min(nbins - 1) };
        counts[b] += 1;
    }
    counts
}

pub fn render_teststatistic(reference: &TestStatistic, user: &TestStatistic, nbins: usize) -> Result<String> {
    if reference.metric != user.metric {
        return Err(Error::param(format!(
            "metric mismatch: `{}` vs `{}`",
            reference.metric, user.metric
        )));
    }
    if nbins == 0 {
        return Err(Error::param("histogram needs at least one bin"));
    }
    let all = reference.values.iter().chain(&user.values);
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Degenerate("histogram values must be finite".into()));
    }
    if hi == lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let series = [
        ("bar-ref", "IID reference", "#4c72b0", histogram(&reference.values, lo, hi, nbins)),
        ("bar-user", "user", "#dd8452", histogram(&user.values, lo, hi, nbins)),
    ];
    let peak = series.iter().flat_map(|s| s.3.iter()).copied().max().unwrap_or(1).max(1) as f64;
    let bin_px = (H_RIGHT - H_LEFT) / nbins as f64;

    let mut s = String::new();
    header(&mut s, H_WIDTH, H_HEIGHT);
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        (H_LEFT + H_RIGHT) / 2.0,
        escape(&reference.metric)
    );
    for (class, _, color, counts) in &series {
        for (b, &count) in counts.iter().enumerate() {
            let h = count as f64 / peak * (H_BOTTOM - H_TOP);
            let _ = writeln!(
                s,
                r#"<rect class="{class}" data-bin="{b}" data-count="{count}" x="{:.3}" y="{:.3}" width="{bin_px:.3}" height="{h:.3}" fill="{color}" fill-opacity="0.5" stroke="{color}"/>"#,
                H_LEFT + b as f64 * bin_px,
                H_BOTTOM - h
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{H_LEFT:.3}" y1="{H_BOTTOM:.3}" x2="{H_RIGHT:.3}" y2="{H_BOTTOM:.3}" stroke="black"/>
<line class="axis" x1="{H_LEFT:.3}" y1="{H_TOP:.3}" x2="{H_LEFT:.3}" y2="{H_BOTTOM:.3}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{H_LEFT:.3}" y="{:.3}" text-anchor="middle">{lo:.4e}</text>
<text x="{H_RIGHT:.3}" y="{:.3}" text-anchor="middle">{hi:.4e}</text>
<text x="{:.3}" y="{:.3}" text-anchor="middle">metric value</text>
<text x="{:.3}" y="{H_BOTTOM:.3}" text-anchor="end">0</text>
<text x="{:.3}" y="{:.3}" text-anchor="end">{peak:.0}</text>
<text transform="translate(16,{:.3}) rotate(-90)" text-anchor="middle">batches</text>"#,
        H_BOTTOM + 16.0,
        H_BOTTOM + 16.0,
        (H_LEFT + H_RIGHT) / 2.0,
        H_BOTTOM + 36.0,
        H_LEFT - 6.0,
        H_LEFT - 6.0,
        H_TOP + 4.0,
        (H_TOP + H_BOTTOM) / 2.0
    );
    for (k, (_, label, color, _)) in series.iter().enumerate() {
        let y = H_TOP + 6.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<g class="legend"><rect x="{:.3}" y="{y:.3}" width="12" height="12" fill="{color}" fill-opacity="0.5" stroke="{color}"/><text x="{:.3}" y="{:.3}">{label} (m={})</text></g>"#,
            H_RIGHT - 150.0,
            H_RIGHT - 132.0,
            y + 10.0,
            if k == 0 { reference.m() } else { user.m() }
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn plot_teststatistic(
    reference: &TestStatistic,
    user: &TestStatistic,
    nbins: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, render_teststatistic(reference, user, nbins)?)?;
    Ok(())
}

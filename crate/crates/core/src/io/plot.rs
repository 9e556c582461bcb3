use std::fmt::Write as _;
use std::path::Path;

use super::{write_text, ExplanationDocument, IoError};
use crate::dsp::rdft;
use crate::mappings::MappingKind;
use crate::Series;

const WIDTH: f64 = 800.0;
const LINE_TOP: f64 = 10.0;
const LINE_HEIGHT: f64 = 130.0;
const STRIP_TOP: f64 = 150.0;
const STRIP_HEIGHT: f64 = 30.0;

struct PlotData {
    kind: MappingKind,
    phi: Vec<f64>,
    /// Series values, or magnitudes per bin for frequency kinds.
    curve: Vec<f64>,
    /// Half-open index range of each fragment along `curve`.
    ranges: Vec<(usize, usize)>,
}

fn prepare(doc: &ExplanationDocument, specimen: &Series) -> Result<PlotData, IoError> {
    let kind = doc.mapping_kind()?;
    let d = specimen.len();
    if d != doc.mapping.series_length {
        return Err(IoError::InvalidDocument(format!("specimen has length {d}, document says {}", doc.mapping.series_length)));
    }
    let phi = doc.primary_class().ok_or_else(|| IoError::InvalidDocument("no classes".into()))?.phi.clone();
    let k = doc.mapping.fragments;
    if phi.len() != k {
        return Err(IoError::InvalidDocument(format!("{} impacts for {k} fragments", phi.len())));
    }
    let edges = &doc.mapping.edges;
    let (curve, ranges) = match kind {
        MappingKind::Statistics => (specimen.values().to_vec(), vec![(0, d / 2), (d / 2, d)]),
        _ => {
            let last = if kind == MappingKind::TimeSlice { d } else { d / 2 + 1 };
            if edges.len() != k + 1 || edges.windows(2).any(|w| w[0] >= w[1]) || edges[k] != last {
                return Err(IoError::InvalidDocument(format!("edges {edges:?} do not fit {k} fragments")));
            }
            let curve = if kind == MappingKind::TimeSlice { specimen.values().to_vec() } else { rdft(specimen).magnitudes() };
            (curve, edges.windows(2).map(|w| (w[0], w[1])).collect())
        }
    };
    Ok(PlotData { kind, phi, curve, ranges })
}

/// CSV of the primary class impacts against the specimen.
///
/// Time slices give one row per sample (`t,x,fragment,impact`); frequency
/// kinds one row per bin (`bin,magnitude,fragment,impact`, with DC outside
/// every band); statistics one row per statistic.
pub fn plot_csv(doc: &ExplanationDocument, specimen: &Series) -> Result<String, IoError> {
    let p = prepare(doc, specimen)?;
    let mut out = String::new();
    match p.kind {
        MappingKind::Statistics => {
            out.push_str("fragment,statistic,value,impact\n");
            writeln!(out, "0,mean,{},{}", specimen.mean(), p.phi[0]).expect("write to string");
            writeln!(out, "1,std,{},{}", specimen.population_std(), p.phi[1]).expect("write to string");
        }
        kind => {
            out.push_str(if kind == MappingKind::TimeSlice { "t,x,fragment,impact\n" } else { "bin,magnitude,fragment,impact\n" });
            for (i, v) in p.curve.iter().enumerate() {
                match p.ranges.iter().position(|&(a, b)| (a..b).contains(&i)) {
                    Some(f) => writeln!(out, "{i},{v},{f},{}", p.phi[f]),
                    None => writeln!(out, "{i},{v},,"),
                }
                .expect("write to string");
            }
        }
    }
    Ok(out)
}

/// Red for positive impact, blue for negative, white for none; intensity is
/// `|phi| / max |phi|`.
fn color(value: f64, scale: f64) -> String {
    if scale == 0.0 || value == 0.0 {
        return "#ffffff".into();
    }
    let fade = (255.0 * (1.0 - (value.abs() / scale).min(1.0))).round() as u8;
    if value > 0.0 {
        format!("#ff{fade:02x}{fade:02x}")
    } else {
        format!("#{fade:02x}{fade:02x}ff")
    }
}

/// SVG with the series (or its magnitude spectrum) as a line and the
/// impacts as a heat strip underneath.
pub fn plot_svg(doc: &ExplanationDocument, specimen: &Series) -> Result<String, IoError> {
    let p = prepare(doc, specimen)?;
    let n = p.curve.len();
    let step = WIDTH / n as f64;
    let (lo, hi) = p.curve.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let scale = p.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{}" viewBox="0 0 {WIDTH} {}">"#,
        STRIP_TOP + STRIP_HEIGHT + 10.0,
        STRIP_TOP + STRIP_HEIGHT + 10.0
    )
    .expect("write to string");
    for (f, &(a, b)) in p.ranges.iter().enumerate() {
        writeln!(
            out,
            r#"<rect x="{:.3}" y="{STRIP_TOP}" width="{:.3}" height="{STRIP_HEIGHT}" fill="{}" data-fragment="{f}"/>"#,
            a as f64 * step,
            (b - a) as f64 * step,
            color(p.phi[f], scale)
        )
        .expect("write to string");
    }
    let points: Vec<String> = p
        .curve
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let y = if hi > lo { LINE_TOP + LINE_HEIGHT * (1.0 - (v - lo) / span) } else { LINE_TOP + LINE_HEIGHT / 2.0 };
            format!("{:.3},{:.3}", (i as f64 + 0.5) * step, y)
        })
        .collect();
    writeln!(out, r#"<polyline fill="none" stroke="black" stroke-width="1.5" points="{}"/>"#, points.join(" ")).expect("write to string");
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes [`plot_csv`] and [`plot_svg`] output.
pub fn emit_plot_data(
    doc: &ExplanationDocument,
    specimen: &Series,
    csv_path: impl AsRef<Path>,
    svg_path: impl AsRef<Path>,
) -> Result<(), IoError> {
    write_text(csv_path.as_ref(), &plot_csv(doc, specimen)?)?;
    write_text(svg_path.as_ref(), &plot_svg(doc, specimen)?)
}

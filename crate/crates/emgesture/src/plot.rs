//! Plot-data emitters: tidy CSV for external tools, plus a bare-bones SVG
//! renderer for quick looks.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

/// One named line: `(x, y)` points.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Tidy CSV: `x,y,series`, one row per point.
pub fn write_tidy_csv(path: &Path, series: &[Series]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "x,y,series")?;
    for s in series {
        for (x, y) in &s.points {
            writeln!(out, "{x},{y},{}", s.name)?;
        }
    }
    out.flush()?;
    Ok(())
}

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 420.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Minimal multi-series line plot. `log_y` plots `log10(y)` (non-positive
/// values are dropped).
pub fn write_line_svg(path: &Path, series: &[Series], title: &str, log_y: bool) -> Result<()> {
    let mapped: Vec<Series> = series
        .iter()
        .map(|s| Series {
            name: s.name.clone(),
            points: s
                .points
                .iter()
                .filter(|(_, y)| !log_y || *y > 0.0)
                .map(|&(x, y)| (x, if log_y { y.log10() } else { y }))
                .collect(),
        })
        .collect();

    let all: Vec<(f64, f64)> = mapped.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (x_min, x_max) = bounds(all.iter().map(|p| p.0));
    let (y_min, y_max) = bounds(all.iter().map(|p| p.1));
    let x_span = (x_max - x_min).max(1e-12);
    let y_span = (y_max - y_min).max(1e-12);
    let sx = |x: f64| MARGIN + (x - x_min) / x_span * (SVG_W - 2.0 * MARGIN);
    let sy = |y: f64| SVG_H - MARGIN - (y - y_min) / y_span * (SVG_H - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SVG_W} {SVG_H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        SVG_W / 2.0,
        xml_escape(title)
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN,
        t = MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">{:.3e}</text>\n<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3e}</text>\n",
        MARGIN,
        SVG_H - MARGIN + 16.0,
        x_min,
        SVG_W - MARGIN,
        SVG_H - MARGIN + 16.0,
        x_max
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3e}</text>\n<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3e}</text>\n",
        MARGIN - 4.0,
        SVG_H - MARGIN,
        if log_y { 10f64.powf(y_min) } else { y_min },
        MARGIN - 4.0,
        MARGIN + 4.0,
        if log_y { 10f64.powf(y_max) } else { y_max },
    ));

    for (i, s) in mapped.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            SVG_W - MARGIN + 4.0,
            MARGIN + 14.0 * i as f64,
            xml_escape(&s.name)
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

/// Heatmap of a count matrix (confusion-matrix rendering).
pub fn write_heatmap_svg(
    path: &Path,
    matrix: &[Vec<u32>],
    labels: &[String],
    title: &str,
) -> Result<()> {
    let n = matrix.len();
    let cell = ((SVG_W.min(SVG_H) - 2.0 * MARGIN) / n.max(1) as f64).max(4.0);
    let max = matrix.iter().flatten().cloned().max().unwrap_or(1).max(1) as f64;
    let mut svg = String::new();
    let side = 2.0 * MARGIN + cell * n as f64;
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {side} {side}\" font-family=\"sans-serif\" font-size=\"10\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        side / 2.0,
        xml_escape(title)
    ));
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let intensity = v as f64 / max;
            let shade = (255.0 - 205.0 * intensity) as u8;
            let x = MARGIN + cell * j as f64;
            let y = MARGIN + cell * i as f64;
            svg.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" fill=\"rgb({shade},{shade},255)\" stroke=\"white\"/>\n"
            ));
            if v > 0 {
                svg.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{v}</text>\n",
                    x + cell / 2.0,
                    y + cell / 2.0 + 3.0
                ));
            }
        }
    }
    for (i, label) in labels.iter().enumerate() {
        let c = MARGIN + cell * (i as f64 + 0.5);
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            MARGIN - 4.0,
            c + 3.0,
            xml_escape(label)
        ));
        svg.push_str(&format!(
            "<text x=\"{c:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN + cell * n as f64 + 12.0,
            xml_escape(label)
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tidy_csv_has_one_row_per_point() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.csv");
        let series = vec![
            Series {
                name: "a".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0)],
            },
            Series {
                name: "b".into(),
                points: vec![(0.0, -1.0)],
            },
        ];
        write_tidy_csv(&path, &series).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], "x,y,series");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "0,-1,b");
    }

    #[test]
    fn svg_outputs_are_well_formed_enough() {
        let dir = tempfile::tempdir().unwrap();
        let line = dir.path().join("line.svg");
        write_line_svg(
            &line,
            &[Series {
                name: "decay".into(),
                points: vec![(0.0, 1.0), (1.0, 0.37), (2.0, 0.14)],
            }],
            "field decay",
            true,
        )
        .unwrap();
        let body = std::fs::read_to_string(&line).unwrap();
        assert!(body.starts_with("<svg"));
        assert!(body.contains("polyline"));
        assert!(body.trim_end().ends_with("</svg>"));

        let heat = dir.path().join("heat.svg");
        write_heatmap_svg(
            &heat,
            &[vec![3, 0], vec![1, 2]],
            &["a".into(), "b".into()],
            "confusion",
        )
        .unwrap();
        let body = std::fs::read_to_string(&heat).unwrap();
        assert!(body.contains("rect"));
    }
}

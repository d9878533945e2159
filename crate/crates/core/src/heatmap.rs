//! Netpath heatmap output: a labeled CSV of the matrix, or an SVG grid
//! written as plain markup. Darker cells mean larger disagreement.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::netpath::NetpathMatrix;

const CELL: f64 = 56.0;
const LEFT: f64 = 64.0;
const TOP: f64 = 72.0;
const LEGEND_GAP: f64 = 28.0;
const LEGEND_WIDTH: f64 = 18.0;
const LIGHT: (f64, f64, f64) = (247.0, 251.0, 255.0);
const DARK: (f64, f64, f64) = (8.0, 48.0, 107.0);

fn check(m: &NetpathMatrix) -> Result<()> {
    if m.size() < 2 {
        Err(Error::InsufficientPaths(m.size()))
    } else {
        Ok(())
    }
}

pub fn render_netpath_csv(m: &NetpathMatrix) -> Result<String> {
    check(m)?;
    let mut out = String::new();
    out.push_str("path");
    for l in &m.labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (r, l) in m.labels.iter().enumerate() {
        out.push_str(l);
        for c in 0..m.size() {
            let _ = write!(out, ",{}", m.values[(r, c)]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Linear light-to-dark ramp; `t` is clamped to `[0, 1]`.
pub fn ramp(t: f64) -> String {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(LIGHT.0, DARK.0),
        mix(LIGHT.1, DARK.1),
        mix(LIGHT.2, DARK.2)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn label_markup(label: &str) -> String {
    match label.strip_prefix('π') {
        Some(rest) => format!(
            "π<tspan baseline-shift=\"sub\" font-size=\"70%\">{}</tspan>",
            escape(rest)
        ),
        None => escape(label),
    }
}

pub fn render_netpath_svg(m: &NetpathMatrix, title: Option<&str>) -> Result<String> {
    check(m)?;
    let p = m.size();
    let grid = CELL * p as f64;
    let legend_x = LEFT + grid + LEGEND_GAP;
    let width = legend_x + LEGEND_WIDTH + 48.0;
    let height = TOP + grid + if m.degenerate { 48.0 } else { 24.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"Helvetica, Arial, sans-serif\">"
    );
    s.push_str("<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">");
    let _ = write!(
        s,
        "<stop offset=\"0\" stop-color=\"{}\"/><stop offset=\"1\" stop-color=\"{}\"/>",
        ramp(0.0),
        ramp(1.0)
    );
    s.push_str("</linearGradient></defs>\n");
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    if let Some(t) = title {
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
            LEFT + grid / 2.0,
            escape(t)
        );
    }

    for (k, label) in m.labels.iter().enumerate() {
        let centre = k as f64 * CELL + CELL / 2.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
            LEFT + centre,
            TOP - 10.0,
            label_markup(label)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"end\" \
             dominant-baseline=\"middle\">{}</text>",
            LEFT - 10.0,
            TOP + centre,
            label_markup(label)
        );
    }

    for r in 0..p {
        for c in 0..p {
            let v = m.values[(r, c)];
            let (x, y) = (LEFT + c as f64 * CELL, TOP + r as f64 * CELL);
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\" \
                 stroke=\"#ffffff\" stroke-width=\"1\"/>",
                ramp(v)
            );
            let ink = if v > 0.55 { "#ffffff" } else { "#1a1a1a" };
            let _ = writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
                 dominant-baseline=\"middle\" fill=\"{ink}\">{v:.2}</text>",
                x + CELL / 2.0,
                y + CELL / 2.0
            );
        }
    }

    let _ = writeln!(
        s,
        "<rect x=\"{legend_x}\" y=\"{TOP}\" width=\"{LEGEND_WIDTH}\" height=\"{grid}\" \
         fill=\"url(#ramp)\" stroke=\"#999999\" stroke-width=\"0.5\"/>"
    );
    let tick_x = legend_x + LEGEND_WIDTH + 4.0;
    let _ = writeln!(
        s,
        "<text x=\"{tick_x}\" y=\"{}\" font-size=\"11\" dominant-baseline=\"middle\">1</text>",
        TOP + 4.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{tick_x}\" y=\"{}\" font-size=\"11\" dominant-baseline=\"middle\">0</text>",
        TOP + grid - 4.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">m</text>",
        legend_x + LEGEND_WIDTH / 2.0,
        TOP - 10.0
    );

    if m.degenerate {
        let _ = writeln!(
            s,
            "<text x=\"{LEFT}\" y=\"{}\" font-size=\"12\" fill=\"#b00020\">\
             warning: all path effects are equal; no disagreement to scale</text>",
            TOP + grid + 28.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netpath::netpath_matrix;

    #[test]
    fn csv_layout() {
        let m = netpath_matrix(&[2.0, 1.0, 3.0]).unwrap();
        let csv = render_netpath_csv(&m).unwrap();
        assert_eq!(csv, "path,π1,π2,π3\nπ1,0,0.5,0.5\nπ2,0.5,0,1\nπ3,0.5,1,0\n");
    }

    #[test]
    fn ramp_is_monotone() {
        let lum = |hex: String| {
            let v = u32::from_str_radix(&hex[1..], 16).unwrap();
            ((v >> 16) & 255) + ((v >> 8) & 255) + (v & 255)
        };
        let mut last = u32::MAX;
        for k in 0..=20 {
            let l = lum(ramp(k as f64 / 20.0));
            assert!(l <= last);
            last = l;
        }
        assert_eq!(ramp(0.0), "#f7fbff");
        assert_eq!(ramp(1.0), "#08306b");
    }

    #[test]
    fn svg_grid() {
        let m = netpath_matrix(&[2.0, 1.0, 3.0]).unwrap();
        let svg = render_netpath_svg(&m, Some("T_1 vs T_3")).unwrap();
        assert_eq!(svg.matches("<rect x=").count(), 9 + 1);
        assert_eq!(svg.matches(">1.00</text>").count(), 2);
        assert_eq!(svg.matches(">0.50</text>").count(), 4);
        assert!(svg.contains("baseline-shift=\"sub\""));
        assert!(!svg.contains("warning"));
        assert_eq!(svg, render_netpath_svg(&m, Some("T_1 vs T_3")).unwrap());
    }

    #[test]
    fn degenerate_svg_is_uniform() {
        let m = netpath_matrix(&[1.0, 1.0]).unwrap();
        let svg = render_netpath_svg(&m, None).unwrap();
        assert!(svg.contains("warning"));
        let fills: Vec<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<rect x=") && l.contains("stroke=\"#ffffff\""))
            .map(|l| {
                l.split("fill=\"")
                    .nth(1)
                    .unwrap()
                    .split('"')
                    .next()
                    .unwrap()
            })
            .collect();
        assert_eq!(fills.len(), 4);
        assert!(fills.iter().all(|f| *f == "#f7fbff"));
    }

    #[test]
    fn too_small() {
        let m = NetpathMatrix {
            labels: vec!["π1".into()],
            values: nalgebra::DMatrix::zeros(1, 1),
            degenerate: true,
        };
        assert_eq!(render_netpath_csv(&m), Err(Error::InsufficientPaths(1)));
        assert_eq!(
            render_netpath_svg(&m, None),
            Err(Error::InsufficientPaths(1))
        );
    }
}

//! Minimal SVG rendering of a surveillance curve.

use std::fmt::Write as _;
use std::path::Path;

use hotgrid_core::metrics::SurveillanceCurve;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

fn sx(x: f64) -> f64 {
    MARGIN + x * (WIDTH - 2.0 * MARGIN)
}

fn sy(y: f64) -> f64 {
    HEIGHT - MARGIN - y * (HEIGHT - 2.0 * MARGIN)
}

/// Hit rate as a function of coverage area, with the diagonal of a
/// uniform ranker for reference.
pub fn write_surveillance_svg(path: &Path, curve: &SurveillanceCurve) -> CliResult<()> {
    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = write!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#dddddd"/>"##,
            sx(f),
            sy(0.0),
            sx(f),
            sy(1.0)
        );
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#dddddd"/>"##,
            sx(0.0),
            sy(f),
            sx(1.0),
            sy(f)
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{:.1}</text>"#,
            sx(f),
            sy(0.0) + 18.0,
            f
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">{:.1}</text>"#,
            sx(0.0) - 8.0,
            sy(f) + 4.0,
            f
        );
    }

    // uniform-ranker diagonal for reference
    let _ = write!(
        svg,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999999" stroke-dasharray="6,4"/>"##,
        sx(0.0),
        sy(0.0),
        sx(1.0),
        sy(1.0)
    );

    let mut points = String::from(format!("{:.1},{:.1}", sx(0.0), sy(0.0)));
    for &(x, y) in &curve.points {
        let _ = write!(points, " {:.1},{:.1}", sx(x), sy(y));
    }
    let _ = write!(
        svg,
        r##"<polyline points="{points}" fill="none" stroke="#b22222" stroke-width="2"/>"##
    );

    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">coverage area</text>"#,
        sx(0.5),
        HEIGHT - 12.0
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{:.1}" font-size="14" text-anchor="middle" transform="rotate(-90 16 {:.1})">hit rate</text>"#,
        sy(0.5),
        sy(0.5)
    );
    let _ = write!(svg, "</svg>");

    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io("evaluate", parent, e))?;
    }
    std::fs::write(path, svg).map_err(|e| CliError::io("evaluate", path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_svg() {
        let curve = SurveillanceCurve {
            points: vec![(0.05, 0.2), (0.5, 0.7), (1.0, 1.0)],
            days_used: 3,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.svg");
        write_surveillance_svg(&path, &curve).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.ends_with("</svg>"));
        assert!(text.contains("polyline"));
    }
}

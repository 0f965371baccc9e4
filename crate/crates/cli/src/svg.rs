//! Self-contained SVG renderings of radial spectra and index box plots.
//!
//! Output is deterministic: fixed viewport, fixed palette, coordinates
//! printed with two decimals. The only run-dependent content is the
//! generator comment carrying the crate version.

use cloudscope_core::{RadialSpectrum, SummaryStats};
use std::fmt::Write;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
];

#[derive(Debug)]
pub enum SvgError {
    /// No plottable data (empty input, or log axes with no positive values).
    Empty(&'static str),
}

impl std::fmt::Display for SvgError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SvgError::Empty(what) => write!(f, "nothing to plot: {what}"),
        }
    }
}

impl std::error::Error for SvgError {}

fn plot_width() -> f64 {
    WIDTH - MARGIN_LEFT - MARGIN_RIGHT
}

fn plot_height() -> f64 {
    HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<!-- generated by cloudscope svg {} -->\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn frame() -> String {
    format!(
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" \
         stroke=\"#333333\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        plot_width(),
        plot_height()
    )
}

/// Log-log plot of rotation-averaged spectra: `rho` in 1/um on the
/// abscissa, mean energy density in um^2 on the ordinate. Annuli with
/// nonpositive density are dropped (log axis); each curve draws a
/// polyline plus one circle per annulus.
pub fn radial_svg(curves: &[(String, RadialSpectrum)]) -> Result<String, SvgError> {
    let mut points: Vec<Vec<(f64, f64)>> = Vec::new();
    for (_, rs) in curves {
        points.push(
            rs.bins
                .iter()
                .filter(|b| b.rho_center > 0.0 && b.mean_energy_density > 0.0)
                .map(|b| (b.rho_center.log10(), b.mean_energy_density.log10()))
                .collect(),
        );
    }
    let all: Vec<(f64, f64)> = points.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(SvgError::Empty("no positive annuli"));
    }
    let expand = |lo: f64, hi: f64| {
        let (lo, hi) = (lo.floor(), hi.ceil());
        if lo == hi {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x_lo, x_hi) = expand(
        all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = expand(
        all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let to_x = |lx: f64| MARGIN_LEFT + (lx - x_lo) / (x_hi - x_lo) * plot_width();
    let to_y = |ly: f64| MARGIN_TOP + (y_hi - ly) / (y_hi - y_lo) * plot_height();

    let mut out = header();
    out.push_str(&frame());
    for d in (x_lo as i64)..=(x_hi as i64) {
        let x = to_x(d as f64);
        if !(MARGIN_LEFT..=WIDTH - MARGIN_RIGHT).contains(&x) {
            continue;
        }
        let _ = write!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#cccccc\" \
             stroke-width=\"0.5\"/>\n<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
             font-size=\"12\">1e{d}</text>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_height(),
            MARGIN_TOP + plot_height() + 18.0,
        );
    }
    for d in (y_lo as i64)..=(y_hi as i64) {
        let y = to_y(d as f64);
        if !(MARGIN_TOP..=HEIGHT - MARGIN_BOTTOM).contains(&y) {
            continue;
        }
        let _ = write!(
            out,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#cccccc\" \
             stroke-width=\"0.5\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" \
             font-size=\"12\">1e{d}</text>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_width(),
            MARGIN_LEFT - 6.0,
            y + 4.0,
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\">rho (1/um)</text>\n\
         <text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 18 {:.2})\">k1 (um^2)</text>\n",
        MARGIN_LEFT + plot_width() / 2.0,
        HEIGHT - 12.0,
        MARGIN_TOP + plot_height() / 2.0,
        MARGIN_TOP + plot_height() / 2.0,
    );
    for (idx, ((label, _), pts)) in curves.iter().zip(&points).enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts
                .iter()
                .map(|&(lx, ly)| format!("{:.2},{:.2}", to_x(lx), to_y(ly)))
                .collect();
            let _ = write!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            );
        }
        for &(lx, ly) in pts {
            let _ = write!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                to_x(lx),
                to_y(ly)
            );
        }
        let _ = write!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            WIDTH - MARGIN_RIGHT - 200.0,
            MARGIN_TOP + 16.0 + 16.0 * idx as f64,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Vertical y coordinate of an index value on the box plot's fixed
/// linear axis: the plot area maps [0, 1] top-down, so
/// `y = MARGIN_TOP + (1 - v) * plot_height`.
pub fn boxplot_y(value: f64) -> f64 {
    MARGIN_TOP + (1.0 - value) * plot_height()
}

/// Box-and-whisker plot of per-group index summaries on a fixed [0, 1]
/// axis. Boxes span q1..q3 with the median line inside and whiskers to
/// min and max; groups without quartiles (fewer than three values) are
/// rejected. Boxes carry `class="box"`, medians `class="median"`.
pub fn boxplot_svg(groups: &[(String, SummaryStats)]) -> Result<String, SvgError> {
    if groups.is_empty() {
        return Err(SvgError::Empty("no sample groups"));
    }
    let mut out = header();
    out.push_str(&frame());
    for tick in 0..=10 {
        let v = tick as f64 / 10.0;
        let y = boxplot_y(v);
        let _ = write!(
            out,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#cccccc\" \
             stroke-width=\"0.5\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" \
             font-size=\"12\">{v:.1}</text>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_width(),
            MARGIN_LEFT - 6.0,
            y + 4.0,
        );
    }
    let _ = write!(
        out,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 18 {:.2})\">CLI</text>\n",
        MARGIN_TOP + plot_height() / 2.0,
        MARGIN_TOP + plot_height() / 2.0,
    );
    let slot = plot_width() / groups.len() as f64;
    let half = (slot * 0.3).min(40.0);
    for (idx, (label, stats)) in groups.iter().enumerate() {
        let (q1, q3) = match (stats.q1, stats.q3) {
            (Some(q1), Some(q3)) => (q1, q3),
            _ => return Err(SvgError::Empty("group without quartiles")),
        };
        let cx = MARGIN_LEFT + (idx as f64 + 0.5) * slot;
        let color = PALETTE[idx % PALETTE.len()];
        let (y_min, y_max) = (boxplot_y(stats.min), boxplot_y(stats.max));
        let (y_q1, y_q3, y_med) = (boxplot_y(q1), boxplot_y(q3), boxplot_y(stats.median));
        let _ = write!(
            out,
            "<line x1=\"{cx:.2}\" y1=\"{y_max:.2}\" x2=\"{cx:.2}\" y2=\"{y_min:.2}\" \
             stroke=\"{color}\" stroke-width=\"1\" class=\"whisker\"/>\n"
        );
        for y in [y_min, y_max] {
            let _ = write!(
                out,
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
                 stroke=\"{color}\" stroke-width=\"1\"/>\n",
                cx - half / 2.0,
                cx + half / 2.0,
            );
        }
        let _ = write!(
            out,
            "<rect x=\"{:.2}\" y=\"{y_q3:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"{color}\" fill-opacity=\"0.25\" stroke=\"{color}\" stroke-width=\"1.5\" \
             class=\"box\"/>\n<line x1=\"{:.2}\" y1=\"{y_med:.2}\" x2=\"{:.2}\" \
             y2=\"{y_med:.2}\" stroke=\"{color}\" stroke-width=\"2\" class=\"median\"/>\n\
             <text x=\"{cx:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            cx - half,
            2.0 * half,
            (y_q1 - y_q3).max(0.5),
            cx - half,
            cx + half,
            MARGIN_TOP + plot_height() + 22.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

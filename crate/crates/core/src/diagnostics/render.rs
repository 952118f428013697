//! Self-contained SVG charts with a CSV of the plotted data alongside.
//!
//! Numbers are printed with a fixed number of decimals so identical reports
//! render to identical bytes.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DiagnosticsReport;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Histogram,
    FittedVsResidual,
    Qq,
    Pareto,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] =
        [PlotKind::Histogram, PlotKind::FittedVsResidual, PlotKind::Qq, PlotKind::Pareto];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Histogram => "histogram",
            PlotKind::FittedVsResidual => "fitted_vs_residual",
            PlotKind::Qq => "qq",
            PlotKind::Pareto => "pareto",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPlotKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPlot {
    pub kind: PlotKind,
    pub svg: String,
    pub csv: String,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Maps data coordinates onto the plot area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>, left: f64) -> Self {
        let (x0, x1) = padded(xs);
        let (y0, y1) = padded(ys);
        Frame { x0, x1, y0, y1, left }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - self.left - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = write!(
        out,
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" ",
            "font-family=\"sans-serif\" font-size=\"12\">\n",
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{cx}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
            "<text x=\"{cx}\" y=\"{xl}\" text-anchor=\"middle\">{x_label}</text>\n",
            "<text x=\"16\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {cy})\">{y_label}</text>\n",
        ),
        w = WIDTH,
        h = HEIGHT,
        cx = WIDTH / 2.0,
        cy = HEIGHT / 2.0,
        xl = HEIGHT - 10.0,
        title = escape(title),
        x_label = escape(x_label),
        y_label = escape(y_label),
    );
}

fn axes(out: &mut String, f: &Frame, y_ticks: bool) {
    let (bl, br, bt, bb) = (f.left, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        "<path class=\"axes\" d=\"M{bl:.2} {bt:.2} L{bl:.2} {bb:.2} L{br:.2} {bb:.2}\" stroke=\"black\" fill=\"none\"/>"
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (f.x0 + t * (f.x1 - f.x0), f.y0 + t * (f.y1 - f.y0));
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            out,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            bb + 16.0,
            tick(xv)
        );
        if !y_ticks {
            continue;
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            bl - 6.0,
            py + 4.0,
            tick(yv)
        );
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

fn close(out: &mut String) {
    out.push_str("</svg>\n");
}

/// Renders one chart of the report.
pub fn render_report(report: &DiagnosticsReport, kind: PlotKind) -> RenderedPlot {
    let (svg, csv) = match kind {
        PlotKind::Histogram => histogram(report),
        PlotKind::FittedVsResidual => fitted_vs_residual(report),
        PlotKind::Qq => qq(report),
        PlotKind::Pareto => pareto(report),
    };
    RenderedPlot { kind, svg, csv }
}

fn histogram(report: &DiagnosticsReport) -> (String, String) {
    let bins = &report.histogram;
    let mut csv = String::from("lower,width,count\n");
    for b in bins {
        let _ = writeln!(csv, "{},{},{}", b.lower, b.width, b.count);
    }
    let xs = bins.iter().flat_map(|b| [b.lower, b.lower + b.width]);
    let max_count = bins.iter().map(|b| b.count).max().unwrap_or(0) as f64;
    let f = Frame { y0: 0.0, y1: max_count.max(1.0) * 1.05, ..Frame::new(xs, [0.0].into_iter(), LEFT) };

    let mut svg = String::new();
    open(&mut svg, "Histogram of residuals", "residual", "count");
    axes(&mut svg, &f, true);
    for b in bins {
        let (x, xr) = (f.px(b.lower), f.px(b.lower + b.width));
        let (y, y0) = (f.py(b.count as f64), f.py(0.0));
        let _ = writeln!(
            svg,
            "<rect class=\"bar\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4878a8\" stroke=\"white\"/>",
            xr - x,
            y0 - y
        );
    }
    close(&mut svg);
    (svg, csv)
}

fn fitted_vs_residual(report: &DiagnosticsReport) -> (String, String) {
    let pts = &report.fitted_vs_residual;
    let curve = &report.lowess_curve;
    let mut csv = String::from("fitted,residual,lowess\n");
    for ((x, r), (_, l)) in pts.iter().zip(curve) {
        let _ = writeln!(csv, "{x},{r},{l}");
    }
    let ys = pts.iter().map(|p| p.1).chain(curve.iter().map(|p| p.1)).chain([0.0]);
    let f = Frame::new(pts.iter().map(|p| p.0), ys, LEFT);

    let mut svg = String::new();
    open(&mut svg, "Residuals vs fitted", "fitted value", "residual");
    axes(&mut svg, &f, true);
    let _ = writeln!(
        svg,
        "<line class=\"zero\" x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>",
        f.px(f.x0),
        f.px(f.x1),
        y = f.py(0.0)
    );
    for (x, r) in pts {
        let _ = writeln!(
            svg,
            "<circle class=\"point\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"none\" stroke=\"#333333\"/>",
            f.px(*x),
            f.py(*r)
        );
    }
    let line: Vec<String> = curve.iter().map(|(x, y)| format!("{:.2},{:.2}", f.px(*x), f.py(*y))).collect();
    let _ = writeln!(
        svg,
        "<polyline class=\"lowess\" points=\"{}\" fill=\"none\" stroke=\"#c03030\" stroke-width=\"2\"/>",
        line.join(" ")
    );
    close(&mut svg);
    (svg, csv)
}

fn qq(report: &DiagnosticsReport) -> (String, String) {
    let q = &report.qq;
    let mut csv = String::from("theoretical,sample\n");
    for (t, s) in &q.points {
        let _ = writeln!(csv, "{t},{s}");
    }
    let f = Frame::new(q.points.iter().map(|p| p.0), q.points.iter().map(|p| p.1), LEFT);

    let mut svg = String::new();
    open(&mut svg, "Normal Q-Q plot", "theoretical quantile", "sample quantile");
    axes(&mut svg, &f, true);
    for (t, s) in &q.points {
        let _ = writeln!(
            svg,
            "<circle class=\"point\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"none\" stroke=\"#333333\"/>",
            f.px(*t),
            f.py(*s)
        );
    }
    let (a, b) = (f.x0, f.x1);
    let _ = writeln!(
        svg,
        "<line class=\"reference\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#c03030\"/>",
        f.px(a),
        f.py(q.intercept + q.slope * a),
        f.px(b),
        f.py(q.intercept + q.slope * b)
    );
    close(&mut svg);
    (svg, csv)
}

fn pareto(report: &DiagnosticsReport) -> (String, String) {
    let effects = &report.pareto;
    let mut csv = String::from("term,coefficient,magnitude\n");
    for e in effects {
        let _ = writeln!(csv, "{},{},{}", e.term, e.coefficient, e.magnitude);
    }
    let left = 170.0;
    let max = effects.iter().map(|e| e.magnitude).fold(0.0, f64::max);
    let f = Frame { x0: 0.0, x1: if max > 0.0 { max * 1.05 } else { 1.0 }, y0: 0.0, y1: 1.0, left };

    let mut svg = String::new();
    open(&mut svg, "Pareto plot of effects", "|coefficient|", "");
    axes(&mut svg, &f, false);
    let slot = (HEIGHT - TOP - BOTTOM) / effects.len().max(1) as f64;
    for (i, e) in effects.iter().enumerate() {
        let y = TOP + i as f64 * slot;
        let colour = if e.coefficient < 0.0 { "#c03030" } else { "#4878a8" };
        let _ = writeln!(
            svg,
            "<rect class=\"bar\" x=\"{left:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{colour}\"/>",
            y + slot * 0.15,
            f.px(e.magnitude) - left,
            slot * 0.7
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            left - 6.0,
            y + slot * 0.5 + 4.0,
            escape(&e.term)
        );
    }
    close(&mut svg);
    (svg, csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{DiagnosticsOptions, DiagnosticsReport};
    use crate::doe::{full_factorial, DesignPoint};
    use crate::regression::{expand_formula, fit_ols, ExperimentTable};

    fn report(n_extra: usize) -> DiagnosticsReport {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let d = full_factorial(3, 1.0).unwrap();
        let ys: Vec<f64> = (0..8).map(|i| ((i * 37) % 11) as f64).collect();
        let t = ExperimentTable::from_design(names.clone(), &d, &ys).unwrap();
        let m = fit_ols(&t, &expand_formula("a + b + c", &names).unwrap()).unwrap();
        let mut samples = t.samples();
        for i in 0..n_extra {
            let v = (i as f64 * 0.173).sin() * 0.9;
            samples.push((DesignPoint::unchecked(vec![v, -v, v * 0.5]), (i % 5) as f64));
        }
        DiagnosticsReport::build(&m, &samples, DiagnosticsOptions::default()).unwrap()
    }

    #[test]
    fn histogram_of_forty_residuals_has_seven_bars() {
        let r = report(32);
        assert_eq!(r.residuals.len(), 40);
        let out = render_report(&r, PlotKind::Histogram);
        assert_eq!(out.svg.matches("class=\"bar\"").count(), 7);
        assert_eq!(out.csv.lines().count(), 8);
        assert!(out.svg.starts_with("<svg") && out.svg.ends_with("</svg>\n"));
    }

    #[test]
    fn fitted_vs_residual_structure() {
        let out = render_report(&report(4), PlotKind::FittedVsResidual);
        assert_eq!(out.svg.matches("class=\"point\"").count(), 12);
        assert_eq!(out.svg.matches("class=\"lowess\"").count(), 1);
        assert_eq!(out.svg.matches("class=\"zero\"").count(), 1);
        assert!(out.csv.starts_with("fitted,residual,lowess\n"));
    }

    #[test]
    fn pareto_and_qq_structure() {
        let r = report(0);
        let p = render_report(&r, PlotKind::Pareto);
        assert_eq!(p.svg.matches("class=\"bar\"").count(), 3);
        assert_eq!(p.csv.lines().count(), 4);
        let q = render_report(&r, PlotKind::Qq);
        assert_eq!(q.svg.matches("class=\"point\"").count(), 8);
        assert!(!q.svg.contains("NaN"));
    }

    #[test]
    fn rendering_is_deterministic() {
        for kind in PlotKind::ALL {
            let a = render_report(&report(10), kind);
            let b = render_report(&report(10), kind);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn plot_kind_names() {
        for kind in PlotKind::ALL {
            assert_eq!(kind.name().parse::<PlotKind>().unwrap(), kind);
        }
        assert!(matches!("scatter".parse::<PlotKind>(), Err(Error::UnknownPlotKind(_))));
    }
}

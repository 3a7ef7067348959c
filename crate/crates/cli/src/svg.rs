//! Hand-rolled SVG learning-curve rendering: one file per (dataset,
//! classifier, labeled size) with a mean polyline and a +-1 standard error
//! band per training strategy, on a log2 x-axis with ticks exactly at the
//! unlabeled sizes. Output depends only on the input table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use semisup_core::experiment::{read_cells_csv, CurveCell, Strategy};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 460.0;
const MARGIN_LEFT: f64 = 74.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 56.0;
const BAND_OPACITY: f64 = 0.25;

fn series_color(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::Supervised => "#000000",
        Strategy::SelfLearned => "#E8A13A",
        Strategy::EmSoft => "#2E8B57",
        Strategy::Constrained => "#3A5FA8",
    }
}

fn series_label(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::Supervised => "supervised",
        Strategy::SelfLearned => "self-learned",
        Strategy::EmSoft => "soft EM",
        Strategy::Constrained => "constrained",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Error,
    JointLl,
    MarginalLl,
}

impl std::str::FromStr for Metric {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(Metric::Error),
            "joint_ll" => Ok(Metric::JointLl),
            "marginal_ll" => Ok(Metric::MarginalLl),
            other => bail!("unknown metric `{other}` (expected error, joint_ll, or marginal_ll)"),
        }
    }
}

impl Metric {
    fn tag(self) -> &'static str {
        match self {
            Metric::Error => "error",
            Metric::JointLl => "joint_ll",
            Metric::MarginalLl => "marginal_ll",
        }
    }

    fn y_label(self) -> &'static str {
        match self {
            Metric::Error => "mean error rate",
            Metric::JointLl => "mean log-likelihood per object (nats)",
            Metric::MarginalLl => "mean marginal log-likelihood per object (nats)",
        }
    }

    fn mean(self, c: &CurveCell) -> f64 {
        match self {
            Metric::Error => c.mean_error,
            Metric::JointLl => c.mean_joint_ll,
            Metric::MarginalLl => c.mean_marginal_ll,
        }
    }

    fn se(self, c: &CurveCell) -> f64 {
        match self {
            Metric::Error => c.se_error,
            Metric::JointLl => c.se_joint_ll,
            Metric::MarginalLl => c.se_marginal_ll,
        }
    }
}

/// Renders one SVG per (dataset, classifier, labeled size) found in the
/// cells table.
pub fn cmd_plot(cells_path: &Path, metric_token: &str, out: &Path) -> Result<()> {
    let metric: Metric = metric_token.parse()?;
    let cells = read_cells_csv(cells_path)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut groups: BTreeMap<(String, &'static str, usize), Vec<&CurveCell>> = BTreeMap::new();
    for c in &cells {
        groups
            .entry((c.dataset.clone(), c.classifier.as_str(), c.n_labeled))
            .or_default()
            .push(c);
    }
    let mut count = 0usize;
    for ((dataset, classifier, n_labeled), group) in &groups {
        let name = format!("{dataset}_{classifier}_l{n_labeled}_{}.svg", metric.tag());
        let path = out.join(&name);
        let svg = render(dataset, classifier, *n_labeled, metric, group);
        std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        count += 1;
    }
    println!("wrote {count} figures to {}", out.display());
    Ok(())
}

fn p2(v: f64) -> String {
    format!("{v:.2}")
}

fn render(
    dataset: &str,
    classifier: &str,
    n_labeled: usize,
    metric: Metric,
    cells: &[&CurveCell],
) -> String {
    let mut series: Vec<(Strategy, Vec<&CurveCell>)> = Vec::new();
    for strategy in Strategy::ALL {
        let mut pts: Vec<&CurveCell> =
            cells.iter().copied().filter(|c| c.method == strategy).collect();
        if pts.is_empty() {
            continue;
        }
        pts.sort_by_key(|c| c.n_unlabeled);
        series.push((strategy, pts));
    }

    let mut ticks: Vec<usize> = cells.iter().map(|c| c.n_unlabeled).collect();
    ticks.sort_unstable();
    ticks.dedup();

    let mut x0 = (ticks[0] as f64).log2();
    let mut x1 = (ticks[ticks.len() - 1] as f64).log2();
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in &series {
        for c in pts {
            y0 = y0.min(metric.mean(c) - metric.se(c));
            y1 = y1.max(metric.mean(c) + metric.se(c));
        }
    }
    let pad = if y1 - y0 < 1e-12 { 0.5 } else { 0.05 * (y1 - y0) };
    y0 -= pad;
    y1 += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |u: usize| MARGIN_LEFT + ((u as f64).log2() - x0) / (x1 - x0) * plot_w;
    let sy = |v: f64| MARGIN_TOP + (y1 - v) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{} ({}, {} labeled objects)</text>",
        p2(WIDTH / 2.0),
        dataset,
        classifier,
        n_labeled
    );

    // Axes.
    let bottom = HEIGHT - MARGIN_BOTTOM;
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>",
        p2(MARGIN_LEFT),
        p2(bottom),
        p2(WIDTH - MARGIN_RIGHT),
        p2(bottom)
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>",
        p2(MARGIN_LEFT),
        p2(MARGIN_TOP),
        p2(MARGIN_LEFT),
        p2(bottom)
    );

    // X ticks: exactly the unlabeled sizes, log2-spaced.
    for &u in &ticks {
        let x = sx(u);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>",
            p2(x),
            p2(bottom),
            p2(x),
            p2(bottom + 5.0)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            p2(x),
            p2(bottom + 20.0),
            u
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">unlabeled training objects</text>",
        p2(MARGIN_LEFT + plot_w / 2.0),
        p2(HEIGHT - 14.0)
    );

    // Y ticks: five evenly spaced values.
    for i in 0..5 {
        let v = y0 + (y1 - y0) * i as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>",
            p2(MARGIN_LEFT - 5.0),
            p2(y),
            p2(MARGIN_LEFT),
            p2(y)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{:.3}</text>",
            p2(MARGIN_LEFT - 9.0),
            p2(y + 4.0),
            v
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90)\">{}</text>",
        p2(-(MARGIN_TOP + plot_h / 2.0)),
        metric.y_label()
    );

    // Bands first so every mean line stays on top.
    for (strategy, pts) in &series {
        let mut points = String::new();
        for c in pts.iter() {
            let _ = write!(points, "{},{} ", p2(sx(c.n_unlabeled)), p2(sy(metric.mean(c) + metric.se(c))));
        }
        for c in pts.iter().rev() {
            let _ = write!(points, "{},{} ", p2(sx(c.n_unlabeled)), p2(sy(metric.mean(c) - metric.se(c))));
        }
        let _ = writeln!(
            svg,
            "<polygon class=\"band\" points=\"{}\" fill=\"{}\" fill-opacity=\"{BAND_OPACITY}\" stroke=\"none\"/>",
            points.trim_end(),
            series_color(*strategy)
        );
    }
    for (strategy, pts) in &series {
        let points: Vec<String> = pts
            .iter()
            .map(|c| format!("{},{}", p2(sx(c.n_unlabeled)), p2(sy(metric.mean(c)))))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline class=\"mean\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>",
            points.join(" "),
            series_color(*strategy)
        );
    }

    // Legend, top right inside the plot area.
    let legend_x = WIDTH - MARGIN_RIGHT - 138.0;
    for (i, (strategy, _)) in series.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"16\" height=\"4\" fill=\"{}\"/>",
            p2(legend_x),
            p2(y),
            series_color(*strategy)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            p2(legend_x + 22.0),
            p2(y + 5.0),
            series_label(*strategy)
        );
    }

    svg.push_str("</svg>\n");
    svg
}

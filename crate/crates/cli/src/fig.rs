//! Parameter-region and copy-count figure of the tolerant testers, as SVG plus CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qbell_core::algorithms::{eps1_limits, gamma_boundary_eps1, range_curve, range_tables, RangeRow};
use serde::Serialize;

use crate::args::FigArgs;
use crate::error::{CliError, Result};
use crate::io::write_text;

/// Default panels `(d, r)`.
pub const DEFAULT_PANELS: [(i64, u32); 3] = [(3, 2), (4, 3), (6, 5)];

/// Points on each copy-count curve.
const CURVE_POINTS: usize = 200;

/// Summary of one emitted panel.
#[derive(Clone, Debug, Serialize)]
pub struct PanelSummary {
    /// Local dimension.
    pub d: i64,
    /// POVM order.
    pub r: u32,
    /// Grid cells per axis.
    pub grid: usize,
    /// SVG path.
    pub svg: String,
    /// Grid CSV path.
    pub csv: String,
    /// Curve CSV path.
    pub curve_csv: String,
    /// Grid cells with `γ_r > 0`.
    pub gamma_positive_cells: usize,
    /// Grid cells with `α > 0`.
    pub alpha_positive_cells: usize,
    /// `1 − (1 − 1/4d²)^{(r−1)/2r}`, the `γ_r = 0` point at `ε₂ = 1`.
    pub boundary_eps1: f64,
    /// Largest `ε₁` cell centre of the top grid row with `γ_r > 0`, if any.
    pub top_row_last_positive_eps1: Option<f64>,
    /// `ε₁` ranges with `γ_r > 0` and `α > 0` on the curves.
    pub curve_eps1_limits: [f64; 2],
    /// Degenerate-parameter warnings.
    pub warnings: Vec<String>,
}

/// Summary of `fig range`.
#[derive(Clone, Debug, Serialize)]
pub struct RangeFigure {
    /// `ε₂` of the curves.
    pub curve_eps2: f64,
    /// `δ` of the copy counts.
    pub delta: f64,
    /// Emitted panels.
    pub panels: Vec<PanelSummary>,
}

fn opt(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// CSV of range rows with header `eps1,eps2,gamma,alpha,copies_povm,copies_bell`.
pub fn rows_csv(rows: &[RangeRow]) -> String {
    let mut s = String::from("eps1,eps2,gamma,alpha,copies_povm,copies_bell\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{},{}", r.eps1, r.eps2, r.gamma, r.alpha, opt(r.copies_povm), opt(r.copies_bell))
            .expect("string write");
    }
    s
}

const PANEL: f64 = 320.0;
const LEFT_X: f64 = 70.0;
const RIGHT_X: f64 = 470.0;
const TOP_Y: f64 = 50.0;
const BOTH: &str = "#7b5ea7";
const GAMMA_ONLY: &str = "#4c78a8";
const ALPHA_ONLY: &str = "#f58518";

fn axes(s: &mut String, x0: f64, xlabel: &str, ylabel: &str, xticks: &[(f64, String)], yticks: &[(f64, String)]) {
    let (y0, y1) = (TOP_Y, TOP_Y + PANEL);
    writeln!(s, r##"<rect x="{x0}" y="{y0}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#000"/>"##).unwrap();
    for (pos, label) in xticks {
        let x = x0 + pos * PANEL;
        writeln!(s, r##"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.2}" stroke="#000"/>"##, y1 + 5.0).unwrap();
        writeln!(s, r##"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{label}</text>"##, y1 + 18.0)
            .unwrap();
    }
    for (pos, label) in yticks {
        let y = y1 - pos * PANEL;
        writeln!(s, r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="#000"/>"##, x0 - 5.0).unwrap();
        writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"##,
            x0 - 8.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{xlabel}</text>"##,
        x0 + PANEL / 2.0,
        y1 + 36.0
    )
    .unwrap();
    writeln!(
        s,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{ylabel}</text>"##,
        x0 - 48.0,
        y0 + PANEL / 2.0,
        x0 - 48.0,
        y0 + PANEL / 2.0
    )
    .unwrap();
}

fn unit_ticks() -> Vec<(f64, String)> {
    (0..=5).map(|i| (i as f64 / 5.0, format!("{:.1}", i as f64 / 5.0))).collect()
}

fn region_class(row: &RangeRow) -> Option<&'static str> {
    match (row.gamma > 0.0, row.alpha > 0.0) {
        (true, true) => Some(BOTH),
        (true, false) => Some(GAMMA_ONLY),
        (false, true) => Some(ALPHA_ONLY),
        (false, false) => None,
    }
}

fn polyline(s: &mut String, pts: &[(f64, f64)], colour: &str) {
    if pts.is_empty() {
        return;
    }
    let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    writeln!(s, r##"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"##, path.join(" ")).unwrap();
}

/// SVG with the region map on the left and copy counts on the right.
#[allow(clippy::too_many_arguments)]
pub fn render_svg(
    d: i64,
    r: u32,
    grid: usize,
    rows: &[RangeRow],
    curve: &[RangeRow],
    eps1_max: f64,
    eps2: f64,
    delta: f64,
) -> String {
    let mut s = String::new();
    writeln!(s, r##"<svg xmlns="http://www.w3.org/2000/svg" width="840" height="450" viewBox="0 0 840 450">"##)
        .unwrap();
    writeln!(s, r##"<rect width="840" height="450" fill="#fff"/>"##).unwrap();
    writeln!(
        s,
        r##"<text x="{:.2}" y="28" font-size="14" text-anchor="middle">d = {d}: γ_r &gt; 0 (r = {r}) and α &gt; 0</text>"##,
        LEFT_X + PANEL / 2.0
    )
    .unwrap();
    let cell = PANEL / grid as f64;
    for j in 0..grid {
        let y = TOP_Y + PANEL - (j + 1) as f64 * cell;
        let mut i = 0;
        while i < grid {
            let class = region_class(&rows[j * grid + i]);
            let start = i;
            while i < grid && region_class(&rows[j * grid + i]) == class {
                i += 1;
            }
            if let Some(fill) = class {
                writeln!(
                    s,
                    r##"<rect x="{:.3}" y="{y:.3}" width="{:.3}" height="{cell:.3}" fill="{fill}" shape-rendering="crispEdges"/>"##,
                    LEFT_X + start as f64 * cell,
                    (i - start) as f64 * cell
                )
                .unwrap();
            }
        }
    }
    let b = gamma_boundary_eps1(d, r);
    writeln!(
        s,
        r##"<line x1="{x:.3}" y1="{TOP_Y}" x2="{x:.3}" y2="{:.3}" stroke="#000" stroke-dasharray="3,2"/>"##,
        TOP_Y + 12.0,
        x = LEFT_X + b * PANEL
    )
    .unwrap();
    axes(&mut s, LEFT_X, "ε₁", "ε₂", &unit_ticks(), &unit_ticks());
    for (k, (fill, label)) in
        [(GAMMA_ONLY, "γ_r > 0 only"), (ALPHA_ONLY, "α > 0 only"), (BOTH, "both")].iter().enumerate()
    {
        let y = TOP_Y + PANEL + 50.0;
        let x = LEFT_X + k as f64 * 110.0;
        writeln!(s, r##"<rect x="{x:.2}" y="{y:.2}" width="12" height="12" fill="{fill}"/>"##).unwrap();
        writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"##,
            x + 16.0,
            y + 10.0,
            label.replace('>', "&gt;")
        )
        .unwrap();
    }

    writeln!(
        s,
        r##"<text x="{:.2}" y="28" font-size="14" text-anchor="middle">copies at ε₂ = {eps2}, δ = {delta}</text>"##,
        RIGHT_X + PANEL / 2.0
    )
    .unwrap();
    let logs: Vec<f64> =
        curve.iter().flat_map(|c| [c.copies_povm, c.copies_bell]).flatten().map(|v| (v as f64).log10()).collect();
    let (lo, hi) = if logs.is_empty() {
        (0.0, 1.0)
    } else {
        let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min).floor();
        let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil();
        (lo, if hi > lo { hi } else { lo + 1.0 })
    };
    let to_xy = |eps1: f64, copies: u64| {
        (RIGHT_X + eps1 / eps1_max * PANEL, TOP_Y + PANEL - ((copies as f64).log10() - lo) / (hi - lo) * PANEL)
    };
    let povm: Vec<(f64, f64)> = curve.iter().filter_map(|c| c.copies_povm.map(|v| to_xy(c.eps1, v))).collect();
    let bell: Vec<(f64, f64)> = curve.iter().filter_map(|c| c.copies_bell.map(|v| to_xy(c.eps1, v))).collect();
    polyline(&mut s, &povm, GAMMA_ONLY);
    polyline(&mut s, &bell, ALPHA_ONLY);
    let xticks: Vec<(f64, String)> =
        (0..=4).map(|i| (i as f64 / 4.0, format!("{:.2e}", eps1_max * i as f64 / 4.0))).collect();
    let steps = (hi - lo) as usize;
    let yticks: Vec<(f64, String)> =
        (0..=steps).map(|i| (i as f64 / steps as f64, format!("1e{}", lo as i64 + i as i64))).collect();
    axes(&mut s, RIGHT_X, "ε₁", "copies", &xticks, &yticks);
    for (k, (colour, label)) in
        [(GAMMA_ONLY, format!("POVM, r = {r}")), (ALPHA_ONLY, "Bell sampling".to_string())].iter().enumerate()
    {
        let x = RIGHT_X + k as f64 * 130.0;
        let y = TOP_Y + PANEL + 50.0;
        writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{colour}" stroke-width="2"/>"##,
            y + 6.0,
            x + 14.0,
            y + 6.0
        )
        .unwrap();
        writeln!(s, r##"<text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"##, x + 18.0, y + 10.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

/// Emits one panel: grid CSV, curve CSV and SVG in `out`.
pub fn emit_range_figure(d: i64, r: u32, grid: usize, eps2: f64, delta: f64, out: &Path) -> Result<PanelSummary> {
    let rows = range_tables(d, r, grid, delta)?;
    let (g_lim, a_lim) = eps1_limits(d, r, eps2);
    let eps1_max = (1.05 * g_lim.max(a_lim)).clamp(1e-6, 1.0);
    let curve = range_curve(d, r, eps2, delta, eps1_max, CURVE_POINTS)?;
    let stem = format!("range_d{d}_r{r}");
    let svg: PathBuf = out.join(format!("{stem}.svg"));
    let csv = out.join(format!("{stem}.csv"));
    let curve_csv = out.join(format!("{stem}_curve.csv"));
    write_text(&csv, &rows_csv(&rows))?;
    write_text(&curve_csv, &rows_csv(&curve))?;
    write_text(&svg, &render_svg(d, r, grid, &rows, &curve, eps1_max, eps2, delta))?;
    let gamma_cells = rows.iter().filter(|x| x.gamma > 0.0).count();
    let alpha_cells = rows.iter().filter(|x| x.alpha > 0.0).count();
    let top = &rows[(grid - 1) * grid..];
    let mut warnings = Vec::new();
    if gamma_cells == 0 {
        warnings.push(format!("gamma_r <= 0 on the whole grid for d = {d}, r = {r}"));
    }
    if alpha_cells == 0 {
        warnings.push(format!("alpha <= 0 on the whole grid for d = {d}"));
    }
    Ok(PanelSummary {
        d,
        r,
        grid,
        svg: path_string(&svg),
        csv: path_string(&csv),
        curve_csv: path_string(&curve_csv),
        gamma_positive_cells: gamma_cells,
        alpha_positive_cells: alpha_cells,
        boundary_eps1: gamma_boundary_eps1(d, r),
        top_row_last_positive_eps1: top.iter().filter(|x| x.gamma > 0.0).map(|x| x.eps1).next_back(),
        curve_eps1_limits: [g_lim, a_lim],
        warnings,
    })
}

/// Runs `fig range`.
pub fn run_range(args: &FigArgs) -> Result<RangeFigure> {
    let panels: Vec<(i64, u32)> = match (args.d, args.r) {
        (Some(d), Some(r)) => vec![(d, r)],
        (None, None) => DEFAULT_PANELS.to_vec(),
        _ => return Err(CliError::Usage("give both --d and --r, or neither".into())),
    };
    let panels = panels
        .into_iter()
        .map(|(d, r)| emit_range_figure(d, r, args.grid, args.eps2, args.delta, &args.out))
        .collect::<Result<Vec<_>>>()?;
    Ok(RangeFigure { curve_eps2: args.eps2, delta: args.delta, panels })
}

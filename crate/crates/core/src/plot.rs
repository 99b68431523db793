//! Figure data emission: rectangular numeric series written as plain
//! CSV so any external plotter can draw the curves.

use std::io::Write;

use crate::entropy;

/// A rectangular numeric table with named columns; the first column is
/// strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotSeries {
    fn new(name: &str, columns: Vec<String>) -> Self {
        PlotSeries {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        debug_assert!(
            self.rows.last().map_or(true, |prev| prev[0] < row[0]),
            "x column must be strictly increasing"
        );
        self.rows.push(row);
    }

    /// Plain CSV: header row, '.' decimal separator, no locale effects.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Default samples per curve; odd so symmetric grids contain their
/// midpoint (K = 0, p = 0.5) exactly.
pub const DEFAULT_POINTS: usize = 513;

/// Endpoint inset for performance grids, which exclude exact {0, 1}.
pub const GRID_EPS: f64 = 1e-6;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Exponential densities at the given rate parameters.
pub fn exp_density_series(lambdas: &[f64], x_max: f64, points: usize) -> PlotSeries {
    let mut cols = vec!["x".to_string()];
    cols.extend(lambdas.iter().map(|l| format!("lambda_{l}")));
    let mut s = PlotSeries::new("exp-density", cols);
    for x in linspace(0.0, x_max, points) {
        let mut row = vec![x];
        row.extend(
            lambdas
                .iter()
                .map(|&l| entropy::exp_density(x, l).expect("valid lambda")),
        );
        s.push(row);
    }
    s
}

/// Exponential distributions at the given rate parameters.
pub fn exp_distribution_series(lambdas: &[f64], x_max: f64, points: usize) -> PlotSeries {
    let mut cols = vec!["k".to_string()];
    cols.extend(lambdas.iter().map(|l| format!("lambda_{l}")));
    let mut s = PlotSeries::new("exp-distribution", cols);
    for k in linspace(0.0, x_max, points) {
        let mut row = vec![k];
        row.extend(
            lambdas
                .iter()
                .map(|&l| entropy::exp_distribution(k, l).expect("valid lambda")),
        );
        s.push(row);
    }
    s
}

/// Sigmoid curves, one column per expectation value.
pub fn sigmoid_series(expectations: &[f64], k_range: f64, points: usize) -> PlotSeries {
    let mut cols = vec!["k".to_string()];
    cols.extend(expectations.iter().map(|e| format!("E_{e}")));
    let mut s = PlotSeries::new("sigmoid", cols);
    for k in linspace(-k_range, k_range, points) {
        let mut row = vec![k];
        row.extend(
            expectations
                .iter()
                .map(|&e| entropy::sigmoid(k, e).expect("valid expectation")),
        );
        s.push(row);
    }
    s
}

/// Self-weighted net force and its mirrored variant over a performance
/// grid; both are zero at p = 0.5.
pub fn net_force_series(points: usize) -> PlotSeries {
    let mut s = PlotSeries::new(
        "net-force",
        vec!["p".into(), "net_force".into(), "mirrored".into()],
    );
    for p in linspace(GRID_EPS, 1.0 - GRID_EPS, points) {
        s.push(vec![
            p,
            entropy::net_force_self(p).expect("inset grid"),
            entropy::mirrored_net_force_self(p).expect("inset grid"),
        ]);
    }
    s
}

/// The two mirrored spiral branches in Cartesian coordinates, indexed
/// by the performance sweep.
pub fn spirals_series(points: usize) -> PlotSeries {
    let grid = linspace(GRID_EPS, 1.0 - GRID_EPS, points);
    let (branch, mirror) = entropy::mirrored_spirals(&grid).expect("inset grid");
    let mut s = PlotSeries::new(
        "spirals",
        vec!["p".into(), "x".into(), "y".into(), "x_mirror".into(), "y_mirror".into()],
    );
    for ((p, b), m) in grid.iter().zip(&branch).zip(&mirror) {
        s.push(vec![*p, b.x, b.y, m.x, m.y]);
    }
    s
}

/// The spiral branches with the performance value kept as the time
/// coordinate of the third axis.
pub fn universe_series(points: usize) -> PlotSeries {
    let grid = linspace(GRID_EPS, 1.0 - GRID_EPS, points);
    let (branch, mirror) = entropy::mirrored_spirals(&grid).expect("inset grid");
    let mut s = PlotSeries::new(
        "universe",
        vec![
            "t".into(),
            "x".into(),
            "y".into(),
            "x_mirror".into(),
            "y_mirror".into(),
        ],
    );
    for ((p, b), m) in grid.iter().zip(&branch).zip(&mirror) {
        s.push(vec![*p, b.x, b.y, m.x, m.y]);
    }
    s
}

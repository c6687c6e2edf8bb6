//! CSV and plot-data writers. Every real is printed as `{:.10e}` so equal runs give equal bytes.

use super::{CellModel, TableRun};

fn num(x: f64) -> String {
    format!("{x:.10e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for row in rows {
        w.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

fn cell_columns(run: &TableRun, cell: usize) -> [String; 4] {
    let c = &run.cells[cell];
    [
        num(c.noise.mu),
        num(c.noise.sigma),
        opt(c.omega_tilde()),
        opt(c.omega_t()),
    ]
}

/// One row per `(cell, metric)`:
/// `table,cell,mu,sigma,omega_tilde,omega_t,metric,mean,std,count,failures`.
/// Level columns are empty for level-minimisation tables.
pub fn summary_csv(run: &TableRun) -> String {
    let rows = run.summaries.iter().map(|s| {
        let [mu, sigma, w, wt] = cell_columns(run, s.cell);
        vec![
            run.table.to_string(),
            s.cell.to_string(),
            mu,
            sigma,
            w,
            wt,
            s.metric.as_str().to_string(),
            num(s.mean),
            num(s.std),
            s.count.to_string(),
            s.failures.to_string(),
        ]
    });
    write_rows(
        &[
            "table",
            "cell",
            "mu",
            "sigma",
            "omega_tilde",
            "omega_t",
            "metric",
            "mean",
            "std",
            "count",
            "failures",
        ],
        rows,
    )
}

/// One row per `(cell, instance)` with solver status and all four metrics
/// (empty when the solve is not optimal or the metric is undefined).
pub fn raw_csv(run: &TableRun) -> String {
    let rows = run.records.iter().map(|r| {
        let [mu, sigma, w, wt] = cell_columns(run, r.cell);
        let m = r.metrics.as_ref();
        vec![
            run.table.to_string(),
            r.cell.to_string(),
            r.instance.to_string(),
            mu,
            sigma,
            w,
            wt,
            r.status.as_str().to_string(),
            r.iterations.to_string(),
            num(r.objective),
            opt(m.map(|m| m.ce)),
            opt(m.map(|m| m.ace)),
            opt(m.and_then(|m| m.rea)),
            opt(m.and_then(|m| m.reu)),
        ]
    });
    write_rows(
        &[
            "table",
            "cell",
            "instance",
            "mu",
            "sigma",
            "omega_tilde",
            "omega_t",
            "status",
            "iterations",
            "objective",
            "CE",
            "ACE",
            "REA",
            "REU",
        ],
        rows,
    )
}

/// One plot file: whitespace-separated `x mean std` lines after `#` comments.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    /// File stem, e.g. `table3_REA_omega_t_1.0400000000e0`.
    pub name: String,
    pub contents: String,
}

fn series(name: String, comment: String, points: &[(f64, f64, f64)]) -> PlotSeries {
    let mut contents = format!("# {comment}\n# x mean std\n");
    for (x, m, s) in points {
        contents.push_str(&format!("{} {} {}\n", num(*x), num(*m), num(*s)));
    }
    PlotSeries { name, contents }
}

/// Error-bar series per metric.
///
/// Level-minimisation tables plot against the cell index (the comment lists each
/// cell's `(mu, sigma)`); noise sweeps against `sigma`; level sweeps against `omega_tilde`,
/// one series per `omega_t`.
pub fn plot_data(run: &TableRun) -> Vec<PlotSeries> {
    let mut out = Vec::new();
    let level_sweep = run.table == 3;
    for metric in &run.metrics {
        if level_sweep {
            let mut levels: Vec<f64> = run.cells.iter().filter_map(|c| c.omega_t()).collect();
            levels.dedup();
            for wt in levels {
                let pts: Vec<(f64, f64, f64)> = run
                    .summaries
                    .iter()
                    .filter(|s| s.metric == *metric && s.config.omega_t() == Some(wt))
                    .map(|s| (s.config.omega_tilde().unwrap_or(f64::NAN), s.mean, s.std))
                    .collect();
                out.push(series(
                    format!("table{}_{}_omega_t_{}", run.table, metric.as_str(), num(wt)),
                    format!(
                        "{} vs omega_tilde at omega_t = {}",
                        metric.as_str(),
                        num(wt)
                    ),
                    &pts,
                ));
            }
        } else {
            let by_index = run
                .cells
                .iter()
                .any(|c| matches!(c.model, CellModel::Amopul1Box { .. }));
            let pts: Vec<(f64, f64, f64)> = run
                .summaries
                .iter()
                .filter(|s| s.metric == *metric)
                .map(|s| {
                    let x = if by_index {
                        (s.cell + 1) as f64
                    } else {
                        s.config.noise.sigma
                    };
                    (x, s.mean, s.std)
                })
                .collect();
            let axis = if by_index {
                let labels: Vec<String> = run
                    .cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{}=({},{})", i + 1, c.noise.mu, c.noise.sigma))
                    .collect();
                format!("cell index {}", labels.join(" "))
            } else {
                "sigma".to_string()
            };
            out.push(series(
                format!("table{}_{}", run.table, metric.as_str()),
                format!("{} vs {}", metric.as_str(), axis),
                &pts,
            ));
        }
    }
    out
}

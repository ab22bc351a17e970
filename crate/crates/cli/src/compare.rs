use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;

use crate::svg::{line_chart, Series};
use crate::{usage, CliResult};

#[derive(Args)]
pub struct CompareArgs {
    /// Trace CSVs written by `slca solve`.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Merged CSV with columns `solver,time,objective`.
    #[arg(long)]
    out: PathBuf,
    /// Objective-versus-time plot.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Plot the gap to the best objective over all traces.
    #[arg(long)]
    gap: bool,
    /// Linear instead of logarithmic objective axis.
    #[arg(long)]
    linear: bool,
}

/// Series label: the file name without `.trace.csv` or `.csv`.
fn label(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_suffix(".trace.csv")
        .or_else(|| name.strip_suffix(".csv"))
        .unwrap_or(&name)
        .to_string()
}

/// Reads the `time` and `objective` columns of a trace CSV.
pub fn read_trace(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| usage(format!("{}: no '{name}' column", path.display())))
    };
    let (ti, oi) = (col("time")?, col("objective")?);
    let mut points = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        let get = |i: usize| -> CliResult<f64> {
            fields
                .get(i)
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| usage(format!("{}: bad row {}", path.display(), k + 2)))
        };
        points.push((get(ti)?, get(oi)?));
    }
    Ok(points)
}

pub fn run(args: CompareArgs) -> CliResult<()> {
    let mut series = Vec::new();
    for path in &args.traces {
        series.push(Series {
            label: label(path),
            points: read_trace(path)?,
        });
    }
    let mut csv = String::from("solver,time,objective\n");
    for s in &series {
        for (t, o) in &s.points {
            let _ = writeln!(csv, "{},{t},{o}", s.label);
        }
    }
    std::fs::write(&args.out, csv)?;

    for s in &series {
        if let Some((t, o)) = s.points.last() {
            println!("{}: {} samples, final objective {o} at {t}", s.label, s.points.len());
        }
    }

    if let Some(svg_path) = &args.svg {
        let y_label = if args.gap {
            let best = series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1))
                .fold(f64::INFINITY, f64::min);
            for s in &mut series {
                for p in &mut s.points {
                    p.1 -= best;
                }
            }
            "objective gap to best"
        } else {
            "objective"
        };
        std::fs::write(svg_path, line_chart(&series, "time or iteration", y_label, !args.linear))?;
    }
    Ok(())
}

//! Command implementations behind the `gridcoord` binary.

pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use gridcoord::coordination::{check_equivalence, run_coordinated, run_ideal};
use gridcoord::dso_market::{build_bid_curve, BidCurve, CurvePoint, DsoDispatch, MarginalStep};
use gridcoord::iso_market::{clear, IsoOutcome};
use gridcoord::{case, CaseError, Scenario};
use thiserror::Error;

use output::{Format, Table};

/// Environment variable overriding the solver tolerance of every case.
pub const TOLERANCE_ENV: &str = "GRIDCOORD_TOL";

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const VERIFY_FAILED: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const SOLVER: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Core(#[from] gridcoord::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("equivalence check failed: max deviation {0:e}")]
    VerifyFailed(f64),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use gridcoord::Error as E;
        match self {
            CliError::Usage(_) | CliError::Case(_) | CliError::Io(_) | CliError::Csv(_) => exit::USAGE,
            CliError::VerifyFailed(_) => exit::VERIFY_FAILED,
            CliError::Core(e) => match e {
                E::Infeasible(_) => exit::INFEASIBLE,
                E::Case(_) | E::InvalidScenario(_) | E::NonRadial(_) | E::UnknownNode { .. } => exit::USAGE,
                E::Unbounded(_) | E::Consistency(_) | E::Lp(_) => exit::SOLVER,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gridcoord", version, about = "Wholesale/distribution market coordination")]
pub struct Cli {
    /// Output format for tabular files.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the distribution operator's bid curve.
    DsoBid {
        /// Case file path or bundled case name.
        #[arg(long)]
        case: String,
        /// Sweep step in MW (overrides the case file).
        #[arg(long)]
        step: Option<f64>,
    },
    /// Clear the wholesale market against a previously written bid curve.
    IsoClear {
        #[arg(long)]
        case: String,
        #[arg(long)]
        curve: PathBuf,
    },
    /// Bid curve, wholesale clearing and aggregator re-dispatch.
    Coordinate {
        #[arg(long)]
        case: String,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Joint dispatch of wholesale participants and aggregators.
    Ideal {
        #[arg(long)]
        case: String,
    },
    /// Check that coordination reproduces the joint dispatch.
    Verify {
        #[arg(long)]
        case: String,
        /// Equivalence tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        step: Option<f64>,
    },
}

fn load_case(spec: &str, step: Option<f64>) -> Result<Scenario, CliError> {
    let mut scenario = case::load(spec)?;
    if let Some(step) = step {
        if !(step > 0.0 && step.is_finite()) {
            return Err(CliError::Usage(format!("--step must be > 0, got {step}")));
        }
        scenario.sweep_step = step;
    }
    if let Ok(raw) = std::env::var(TOLERANCE_ENV) {
        let tol: f64 = raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{TOLERANCE_ENV}={raw:?} is not a number")))?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage(format!("{TOLERANCE_ENV} must be > 0")));
        }
        scenario.tolerance = tol;
    }
    Ok(scenario)
}

pub fn bid_curve_table(curve: &BidCurve) -> Table {
    let mut points: Vec<CurvePoint> = curve
        .samples
        .iter()
        .map(|s| CurvePoint { q: s.q, cost: s.cost })
        .chain(curve.breakpoints.iter().copied())
        .collect();
    points.sort_by(|a, b| a.q.total_cmp(&b.q));
    points.dedup_by(|b, a| (b.q - a.q).abs() <= 1e-9);

    let mut t = Table::new("bid_curve", &["q_mw", "total_cost", "marginal_price"]);
    for p in points {
        let price = curve.price_at(p.q).unwrap_or(f64::NAN);
        t.push(vec![p.q.into(), p.cost.into(), price.into()]);
    }
    t
}

pub fn breakpoints_table(curve: &BidCurve) -> Table {
    let mut t = Table::new("breakpoints", &["q_mw", "total_cost"]);
    for p in &curve.breakpoints {
        t.push(vec![p.q.into(), p.cost.into()]);
    }
    t
}

pub fn iso_table(iso: &IsoOutcome) -> Table {
    let mut t = Table::new("iso_outcome", &["participant", "cleared_mw"]);
    for p in &iso.participants {
        t.push(vec![p.id.clone().into(), p.cleared_mw.into()]);
    }
    for award in &iso.dso_awards {
        t.push(vec!["DSO".into(), (*award).into()]);
    }
    t
}

pub fn dispatch_table(dispatch: &DsoDispatch) -> Table {
    let mut t = Table::new("dso_dispatch", &["aggregator", "mw"]);
    for a in &dispatch.aggregators {
        t.push(vec![a.id.clone().into(), a.mw.into()]);
    }
    t
}

pub fn retail_table(dispatch: &DsoDispatch) -> Table {
    let mut t = Table::new("retail_prices", &["node", "price"]);
    for (n, price) in dispatch.retail_prices.iter().enumerate() {
        t.push(vec![n.to_string().into(), (*price).into()]);
    }
    t
}

/// Rebuild a bid curve from a `bid_curve` table written by `dso-bid`.
pub fn read_bid_curve(path: &Path) -> Result<BidCurve, CliError> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<(f64, f64, f64)> = if path.extension().is_some_and(|e| e == "json") {
        let v: Vec<serde_json::Value> =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        v.iter()
            .map(|r| {
                let get = |k: &str| {
                    r[k].as_f64()
                        .ok_or_else(|| CliError::Usage(format!("{}: row lacks numeric {k}", path.display())))
                };
                Ok((get("q_mw")?, get("total_cost")?, get("marginal_price")?))
            })
            .collect::<Result<_, CliError>>()?
    } else {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| -> Result<f64, CliError> {
                rec.get(k).and_then(|s| s.trim().parse().ok()).ok_or_else(|| {
                    CliError::Usage(format!("{}: line {} column {} is not a number", path.display(), i + 2, k + 1))
                })
            };
            rows.push((field(0)?, field(1)?, field(2)?));
        }
        rows
    };
    if rows.is_empty() {
        return Err(CliError::Usage(format!("{}: bid curve has no rows", path.display())));
    }

    let start = CurvePoint {
        q: rows[0].0,
        cost: rows[0].1,
    };
    let mut steps: Vec<MarginalStep> = Vec::new();
    for w in rows.windows(2) {
        let (q0, _, price) = w[0];
        let q1 = w[1].0;
        match steps.last_mut() {
            Some(s) if s.price == price => s.q_to = q1,
            _ => steps.push(MarginalStep {
                q_from: q0,
                q_to: q1,
                price,
            }),
        }
    }
    Ok(BidCurve::from_steps(start, &steps)?)
}

/// Execute one command; returns the process exit code on success paths.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    let fmt = cli.format;
    match &cli.command {
        Command::DsoBid { case, step } => {
            let scenario = load_case(case, *step)?;
            let curve = build_bid_curve(&scenario)?;
            bid_curve_table(&curve).write(out, fmt)?;
            breakpoints_table(&curve).write(out, fmt)?;
            println!(
                "bid curve: {} segments on [{}, {}] MW",
                curve.segments.len(),
                output::fixed6(curve.q_min()),
                output::fixed6(curve.q_max())
            );
            for s in &curve.segments {
                println!(
                    "  {} $/MWh on [{}, {}]",
                    output::fixed6(s.price),
                    output::fixed6(s.q_lo),
                    output::fixed6(s.q_hi)
                );
            }
        }
        Command::IsoClear { case, curve } => {
            let scenario = load_case(case, None)?;
            let curve = read_bid_curve(curve)?;
            let iso = clear(
                &scenario.wholesale,
                std::slice::from_ref(&curve),
                scenario.firm_wholesale_load,
                scenario.tolerance,
            )?;
            iso_table(&iso).write(out, fmt)?;
            println!("clearing price: {} $/MWh", output::fixed6(iso.clearing_price));
            println!("DSO award: {} MW", output::fixed6(iso.dso_awards[0]));
        }
        Command::Coordinate { case, step } => {
            let scenario = load_case(case, *step)?;
            let result = run_coordinated(&scenario)?;
            bid_curve_table(&result.bid_curve).write(out, fmt)?;
            breakpoints_table(&result.bid_curve).write(out, fmt)?;
            iso_table(&result.iso).write(out, fmt)?;
            dispatch_table(&result.dso_dispatch).write(out, fmt)?;
            retail_table(&result.dso_dispatch).write(out, fmt)?;
            println!("clearing price: {} $/MWh", output::fixed6(result.iso.clearing_price));
            println!("DSO award: {} MW", output::fixed6(result.award()));
            println!("total objective: {}", output::fixed6(result.objective()));
        }
        Command::Ideal { case } => {
            let scenario = load_case(case, None)?;
            let ideal = run_ideal(&scenario)?;
            let mut t = Table::new("ideal_outcome", &["participant", "cleared_mw"]);
            for p in &ideal.participants {
                t.push(vec![p.id.clone().into(), p.cleared_mw.into()]);
            }
            for a in &ideal.aggregators {
                t.push(vec![a.id.clone().into(), a.mw.into()]);
            }
            t.write(out, fmt)?;
            println!("clearing price: {} $/MWh", output::fixed6(ideal.clearing_price));
            println!("substation exchange: {} MW", output::fixed6(ideal.dso_exchange));
            println!("total objective: {}", output::fixed6(ideal.objective));
        }
        Command::Verify { case, tol, step } => {
            if tol.is_nan() || *tol < 0.0 {
                return Err(CliError::Usage(format!("--tol must be >= 0, got {tol}")));
            }
            let scenario = load_case(case, *step)?;
            let report = check_equivalence(&scenario, *tol)?;
            let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
            text.push('\n');
            fs::write(out.join("equivalence_report.json"), text)?;
            println!(
                "{}: max deviation {:e} (tolerance {:e})",
                if report.pass { "PASS" } else { "FAIL" },
                report.max_deviation,
                tol
            );
            if !report.pass {
                return Err(CliError::VerifyFailed(report.max_deviation));
            }
        }
    }
    Ok(exit::OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bid_curve_csv_round_trips_through_reader() {
        let scenario = case::bundled("paper_reference").unwrap();
        let curve = build_bid_curve(&scenario).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = bid_curve_table(&curve).write(dir.path(), Format::Csv).unwrap();
        let back = read_bid_curve(&path).unwrap();
        assert_eq!(back.segments.len(), curve.segments.len());
        for (a, b) in back.segments.iter().zip(&curve.segments) {
            assert!((a.q_lo - b.q_lo).abs() < 1e-6 && (a.q_hi - b.q_hi).abs() < 1e-6);
            assert!((a.price - b.price).abs() < 1e-6);
        }
    }

    #[test]
    fn json_curve_is_readable_too() {
        let scenario = case::bundled("paper_reference").unwrap();
        let curve = build_bid_curve(&scenario).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = bid_curve_table(&curve).write(dir.path(), Format::Json).unwrap();
        assert_eq!(read_bid_curve(&path).unwrap().segments.len(), 5);
    }

    #[test]
    fn exit_codes_follow_mapping() {
        assert_eq!(CliError::VerifyFailed(1.0).exit_code(), 2);
        assert_eq!(CliError::Core(gridcoord::Error::Infeasible("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(gridcoord::Error::Consistency("x".into())).exit_code(), 4);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
    }
}

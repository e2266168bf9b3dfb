//! Command-line surface: model ingestion, invariant evaluation, ample-cone
//! scans, and the self-test ledger.
//!
//! Exit statuses: 0 success, 1 domain error (named invariant), 2 schema
//! error, 3 internal consistency failure.

use clap::{Parser, Subcommand, ValueEnum};
use divstab_core::curve;
use divstab_core::error::Error;
use divstab_core::io::{self, JobFile};
use divstab_core::numclass::VarietyModel;
use divstab_core::rat::Rat;
use divstab_core::scan::{
    cross_backend_suite, openness_extract, scan, validation_suite, Functional, Ledger, ScanTable,
};
use divstab_core::stability::{
    beta_dirac, beta_measure, delta, dirac_energy, entropy, measure_norm, sigma_div, sigma_val,
    threshold, CandidateSpec, PolarizedPair, ThresholdReport, ThresholdValue, Valuation,
    ValueOrBracket,
};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "divstab",
    version,
    about = "Exact stability invariants of polarized pairs on curve, surface and toric backends"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Model file (JSON).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Job file with valuations, measures, potentials, classes, or a scan
    /// slice.
    #[arg(long, global = true)]
    job: Option<PathBuf>,
    /// Output path; results go to stdout when omitted. Scans write
    /// <out>.csv, <out>.report.json and <out>.plot-<functional>.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for scan tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Toric candidate radius (primitive directions with sup-norm <= R).
    #[arg(long, global = true)]
    radius: Option<i64>,
    /// Surface chain candidate depth.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Seed for the self-test sample generator.
    #[arg(long, global = true, default_value_t = 17)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Dirac energies of valuations and energies of divisorial measures.
    Norm,
    /// Beta invariants of valuations and measures.
    Beta,
    /// Minimum of A / ||.|| over the candidate set.
    Delta,
    /// Valuative stability threshold over Dirac candidates.
    SigmaVal,
    /// Divisorial stability threshold (exact in the proportional case,
    /// bracketed otherwise).
    SigmaDiv,
    /// Monge-Ampere energies of curve potentials.
    Energy,
    /// Ding functional of curve potentials (subklt pairs).
    Ding,
    /// Mabuchi K-energy of curve potentials.
    Mabuchi,
    /// Grid scan of the thresholds over an ample-cone slice.
    Scan,
    /// Run the validation ledger and the cross-backend oracle.
    Selftest,
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}

#[derive(Serialize)]
struct Document<T: Serialize> {
    command: String,
    model_id: String,
    model_hash: String,
    omega: Vec<Rat>,
    assumptions: Vec<String>,
    results: T,
}

#[derive(Serialize)]
struct ValueRow {
    input: serde_json::Value,
    value: ValueOrBracket,
    value_float: f64,
}

#[derive(Serialize)]
struct ReportRow {
    report: ThresholdReport,
    value_float: Option<f64>,
    witness_description: Option<String>,
}

fn report_row(report: ThresholdReport) -> ReportRow {
    let value_float = match &report.value {
        ThresholdValue::Exact { value } => Some(value.to_f64()),
        ThresholdValue::Bracket { lo, hi } => Some((lo.to_f64() + hi.to_f64()) / 2.0),
        _ => None,
    };
    let witness_description = report.witness.as_ref().map(Valuation::describe);
    ReportRow {
        report,
        value_float,
        witness_description,
    }
}

fn value_float(v: &ValueOrBracket) -> f64 {
    match v {
        ValueOrBracket::Exact { value } => value.to_f64(),
        ValueOrBracket::Bracket { lo, hi } => (lo.to_f64() + hi.to_f64()) / 2.0,
    }
}

fn run(cli: &Cli) -> Result<i32, Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot build worker pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<i32, Error> {
    let model_path = cli
        .model
        .as_ref()
        .ok_or_else(|| Error::schema("--model is required"))?;
    let (model, hash) = io::load_model(model_path)?;
    let job = match &cli.job {
        Some(path) => io::load_job(path)?,
        None => JobFile::default(),
    };
    let omega = match &job.omega {
        Some(coords) => model.class(coords.clone()),
        None => model
            .default_omega()
            .ok_or_else(|| Error::domain("no polarization: pass omega in the job file"))?,
    };
    let pair = PolarizedPair::new(model.clone(), omega)?;
    let spec = CandidateSpec {
        radius: job.radius.or(cli.radius).unwrap_or(3),
        depth: job.depth.or(cli.depth).unwrap_or(2),
    };
    match &cli.command {
        Command::Norm => {
            let mut results = Vec::new();
            for v in &job.valuations {
                let value = dirac_energy(&pair, v)?;
                results.push(serde_json::json!({
                    "valuation": v,
                    "description": v.describe(),
                    "value": value,
                    "value_float": value.to_f64(),
                    "threshold": threshold(&pair, v)?,
                }));
            }
            for m in &job.measures {
                let mu = m.clone().into_measure()?;
                let value = measure_norm(&pair, &mu)?;
                results.push(serde_json::json!({
                    "measure": m,
                    "value": value,
                    "value_float": value_float(&value),
                }));
            }
            if results.is_empty() {
                return Err(Error::domain(
                    "norm needs at least one valuation or measure in the job file",
                ));
            }
            emit(cli, &pair, &hash, "norm", results)
        }
        Command::Beta => {
            let mut results = Vec::new();
            for v in &job.valuations {
                let value = beta_dirac(&pair, v)?;
                results.push(serde_json::json!({
                    "valuation": v,
                    "description": v.describe(),
                    "value": value,
                    "value_float": value.to_f64(),
                }));
            }
            for m in &job.measures {
                let mu = m.clone().into_measure()?;
                let value = beta_measure(&pair, &mu)?;
                let ent = entropy(&pair, &mu)?;
                results.push(serde_json::json!({
                    "measure": m,
                    "entropy": ent,
                    "value": value,
                    "value_float": value_float(&value),
                }));
            }
            if results.is_empty() {
                return Err(Error::domain(
                    "beta needs at least one valuation or measure in the job file",
                ));
            }
            emit(cli, &pair, &hash, "beta", results)
        }
        Command::Delta => emit(cli, &pair, &hash, "delta", report_row(delta(&pair, &spec)?)),
        Command::SigmaVal => emit(
            cli,
            &pair,
            &hash,
            "sigma-val",
            report_row(sigma_val(&pair, &spec)?),
        ),
        Command::SigmaDiv => emit(
            cli,
            &pair,
            &hash,
            "sigma-div",
            report_row(sigma_div(&pair, &spec)?),
        ),
        Command::Energy => curve_potentials(cli, &pair, &hash, &job, "energy"),
        Command::Ding => curve_potentials(cli, &pair, &hash, &job, "ding"),
        Command::Mabuchi => curve_potentials(cli, &pair, &hash, &job, "mabuchi"),
        Command::Scan => run_scan(cli, &model, &hash, &job, &spec),
        Command::Selftest => run_selftest(cli, &pair, &hash),
    }
}

fn curve_potentials(
    cli: &Cli,
    pair: &PolarizedPair,
    hash: &str,
    job: &JobFile,
    what: &str,
) -> Result<i32, Error> {
    let VarietyModel::Curve(model) = &pair.model else {
        return Err(Error::domain(format!(
            "{what} is defined on the curve backend only"
        )));
    };
    if job.potentials.is_empty() {
        return Err(Error::domain(format!(
            "{what} needs at least one potential in the job file"
        )));
    }
    let v_omega = pair.volume.clone();
    let theta_degree: Option<Rat> = match &job.theta {
        None => None,
        Some(coords) if coords.len() == 1 => Some(coords[0].clone()),
        Some(_) => {
            return Err(Error::domain("curve twist class must be a single degree"));
        }
    };
    let mut results = Vec::new();
    for p in &job.potentials {
        let phi = p.clone().into_potential(&v_omega)?;
        let row = match what {
            "energy" => {
                let e = curve::energy(&v_omega, &phi)?;
                let ma = curve::monge_ampere(&v_omega, &phi)?;
                let mut row = serde_json::json!({
                    "potential": p,
                    "energy": e,
                    "energy_float": e.to_f64(),
                    "sup": phi.sup(),
                    "monge_ampere": ma,
                });
                if let Some(theta) = &theta_degree {
                    let tw = curve::twisted_energy(&v_omega, theta, &phi);
                    let grad = curve::grad_energy(&v_omega, theta, &phi)?;
                    row["twisted_energy"] = serde_json::to_value(&tw).unwrap();
                    row["energy_gradient"] = serde_json::to_value(&grad).unwrap();
                }
                row
            }
            "ding" => {
                let d = curve::ding(model, &v_omega, &phi)?;
                serde_json::json!({
                    "potential": p,
                    "value": d,
                    "value_float": d.to_f64(),
                })
            }
            "mabuchi" => {
                let m = curve::mabuchi(model, &v_omega, &phi)?;
                serde_json::json!({
                    "potential": p,
                    "value": m,
                    "value_float": m.to_f64(),
                })
            }
            _ => unreachable!(),
        };
        results.push(row);
    }
    emit(cli, pair, hash, what, results)
}

fn run_scan(
    cli: &Cli,
    model: &VarietyModel,
    hash: &str,
    job: &JobFile,
    spec: &CandidateSpec,
) -> Result<i32, Error> {
    let slice_file = job
        .slice
        .clone()
        .ok_or_else(|| Error::domain("scan needs a slice in the job file"))?;
    let slice = slice_file.into_slice(spec);
    let table = scan(model, &slice, hash)?;
    let openness = openness_extract(model, &table, hash)?;
    match &cli.out {
        None => match cli.format {
            Format::Csv => print!("{}", table_csv(&table)),
            Format::Json => {
                let doc = serde_json::json!({
                    "table": table,
                    "openness": openness,
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            }
        },
        Some(base) => {
            let base = base.to_string_lossy().to_string();
            std::fs::write(format!("{base}.csv"), table_csv(&table))
                .map_err(|e| Error::domain(format!("cannot write table: {e}")))?;
            let report = serde_json::json!({
                "table": table,
                "openness": openness,
            });
            std::fs::write(
                format!("{base}.report.json"),
                serde_json::to_string_pretty(&report).unwrap(),
            )
            .map_err(|e| Error::domain(format!("cannot write report: {e}")))?;
            for f in &table.slice.functionals {
                let name = match f {
                    Functional::Delta => "delta",
                    Functional::SigmaVal => "sigma-val",
                    Functional::SigmaDiv => "sigma-div",
                };
                std::fs::write(format!("{base}.plot-{name}.csv"), plot_csv(&table, *f))
                    .map_err(|e| Error::domain(format!("cannot write plot data: {e}")))?;
            }
        }
    }
    Ok(0)
}

fn threshold_cells(report: Option<&ThresholdReport>) -> [String; 4] {
    match report {
        None => ["".into(), "".into(), "".into(), "".into()],
        Some(r) => {
            let (value, lo_hi) = match &r.value {
                ThresholdValue::Exact { value } => (value.to_string(), "".into()),
                ThresholdValue::Bracket { lo, hi } => ("".into(), format!("[{lo};{hi}]")),
                ThresholdValue::NegativeInfinity => ("-inf".into(), "".into()),
                ThresholdValue::EmptyCandidateSet => ("empty-candidate-set".into(), "".into()),
            };
            let witness = r
                .witness
                .as_ref()
                .map(Valuation::describe)
                .unwrap_or_default();
            let kind = serde_json::to_value(r.bound_kind)
                .unwrap()
                .as_str()
                .unwrap()
                .to_string();
            [value, lo_hi, witness, kind]
        }
    }
}

fn table_csv(table: &ScanTable) -> String {
    let mut out = String::new();
    out.push_str("# model_id=");
    out.push_str(&table.metadata.model_id);
    out.push_str(" model_hash=");
    out.push_str(&table.metadata.model_hash);
    out.push('\n');
    out.push_str("# candidate_set=");
    out.push_str(&table.metadata.candidate_set);
    out.push('\n');
    for a in &table.metadata.assumptions {
        out.push_str("# assumption=");
        out.push_str(a);
        out.push('\n');
    }
    out.push_str(
        "index,params,omega,inside,volume,\
         delta,delta_bracket,delta_witness,delta_kind,\
         sigma_val,sigma_val_bracket,sigma_val_witness,sigma_val_kind,\
         sigma_div,sigma_div_bracket,sigma_div_witness,sigma_div_kind\n",
    );
    for row in &table.rows {
        let idx: Vec<String> = row.index.iter().map(|i| i.to_string()).collect();
        let params: Vec<String> = row.params.iter().map(|p| p.to_string()).collect();
        let omega: Vec<String> = row.omega.iter().map(|c| c.to_string()).collect();
        let mut cells = vec![
            idx.join(" "),
            params.join(" "),
            omega.join(" "),
            row.inside_ample_cone.to_string(),
            row.volume.as_ref().map(|v| v.to_string()).unwrap_or_default(),
        ];
        cells.extend(threshold_cells(row.delta.as_ref()));
        cells.extend(threshold_cells(row.sigma_val.as_ref()));
        cells.extend(threshold_cells(row.sigma_div.as_ref()));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn plot_csv(table: &ScanTable, f: Functional) -> String {
    let mut out = String::from("x,y,value\n");
    for row in &table.rows {
        let report = match f {
            Functional::Delta => row.delta.as_ref(),
            Functional::SigmaVal => row.sigma_val.as_ref(),
            Functional::SigmaDiv => row.sigma_div.as_ref(),
        };
        let Some(report) = report else { continue };
        let value = match &report.value {
            ThresholdValue::Exact { value } => value.to_f64(),
            ThresholdValue::Bracket { lo, hi } => (lo.to_f64() + hi.to_f64()) / 2.0,
            _ => continue,
        };
        let x = row.params.first().map(|p| p.to_f64()).unwrap_or(0.0);
        let y = row.params.get(1).map(|p| p.to_f64()).unwrap_or(0.0);
        out.push_str(&format!("{x},{y},{value}\n"));
    }
    out
}

fn run_selftest(cli: &Cli, pair: &PolarizedPair, hash: &str) -> Result<i32, Error> {
    let mut ledger = validation_suite(pair, cli.seed)?;
    ledger.rows.extend(cross_backend_suite(cli.seed)?);
    for row in &ledger.rows {
        println!(
            "[{}] {} — {} (samples: {})",
            if row.pass { "PASS" } else { "FAIL" },
            row.id,
            row.description,
            row.samples,
        );
    }
    let all_pass = ledger.all_pass();
    if let Some(out) = &cli.out {
        write_ledger(out, pair, hash, &ledger)?;
    }
    if all_pass {
        println!("selftest: all {} checks passed", ledger.rows.len());
        Ok(0)
    } else {
        eprintln!("selftest: at least one check failed");
        Ok(3)
    }
}

fn write_ledger(out: &PathBuf, pair: &PolarizedPair, hash: &str, ledger: &Ledger) -> Result<(), Error> {
    let doc = Document {
        command: "selftest".into(),
        model_id: pair.model.id().to_string(),
        model_hash: hash.to_string(),
        omega: pair.omega.coords.clone(),
        assumptions: pair.assumptions(),
        results: ledger,
    };
    std::fs::write(out, serde_json::to_string_pretty(&doc).unwrap())
        .map_err(|e| Error::domain(format!("cannot write ledger: {e}")))
}

fn emit<T: Serialize>(
    cli: &Cli,
    pair: &PolarizedPair,
    hash: &str,
    command: &str,
    results: T,
) -> Result<i32, Error> {
    let doc = Document {
        command: command.to_string(),
        model_id: pair.model.id().to_string(),
        model_hash: hash.to_string(),
        omega: pair.omega.coords.clone(),
        assumptions: pair.assumptions(),
        results,
    };
    let text = serde_json::to_string_pretty(&doc).unwrap();
    match &cli.out {
        None => println!("{text}"),
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::domain(format!("cannot write output: {e}")))?,
    }
    Ok(0)
}

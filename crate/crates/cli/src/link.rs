use clap::Args;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{line_plot_svg, now, OutDir, Series};
use crate::{resolve_seed, with_threads, Common};
use translum::config::digest;
use translum::harness::{run_link, sweep, write_report_csv, write_sweep_csv, SweepRecord, SweepRow, SweepSettings};
use translum::powerbudget::check_efficiencies;

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Master seed (overrides TRANSLUM_SEED and the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Frames to send
    #[arg(long, default_value_t = 1000)]
    frames: u64,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

pub fn run(args: RunArgs) -> Result<(), CliError> {
    let started = now();
    let mut config = args.common.load_config()?;
    config.link.seed = resolve_seed(args.seed, config.link.seed)?;
    if args.frames == 0 {
        return Err(CliError::Usage("--frames must be >= 1".into()));
    }
    let stack = config.tissue.resolve()?;
    let preset = config.tissue.preset.clone().unwrap_or_else(|| "custom".into());
    let mut out = OutDir::create(&args.common.out)?;
    let report = with_threads(args.threads, || run_link(&config.link, &stack, &config.receiver, args.frames))?
        .map_err(|e| CliError::Usage(e.to_string()))?;

    out.write_json("report.json", &report)?;
    out.write_with("report.csv", |w| write_report_csv(&config.link, &preset, &report, w))?;
    out.finish("link run", report.config_digest.clone(), started)?;

    if args.common.json {
        println!("{}", serde_json::to_string(&report).expect("report serializes"));
    } else {
        println!(
            "{} frames, {} bits compared, {} errors, {} sync failures",
            report.frames_sent, report.bits_compared, report.bit_errors, report.sync_failures
        );
        println!("BER {:e} (95% upper bound {:e})", report.ber, report.ber_upper_95);
    }
    if report.sync_dominated() {
        return Err(CliError::NoSignal(format!(
            "{} of {} frames failed to synchronize",
            report.sync_failures, report.frames_sent
        )));
    }
    Ok(())
}

#[derive(Args)]
pub struct Table1Args {
    #[command(flatten)]
    common: Common,
    /// Comma-separated row keys such as `5mbps-pwm,3mbps-pdm`
    #[arg(long, value_delimiter = ',')]
    rows: Vec<String>,
    #[arg(long, default_value_t = 200)]
    frames: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Also write table1.svg (energy per bit against rate)
    #[arg(long)]
    svg: bool,
}

#[derive(Serialize)]
struct Table1Json<'a> {
    rows: Vec<RowJson<'a>>,
    inconsistent_rows: Vec<String>,
}

#[derive(Serialize)]
struct RowJson<'a> {
    key: String,
    #[serde(flatten)]
    record: &'a SweepRecord,
}

pub fn table1(args: Table1Args) -> Result<(), CliError> {
    let started = now();
    let config = args.common.load_config()?;
    let all = SweepRow::measured();
    let known: Vec<String> = all.iter().map(SweepRow::key).collect();
    if let Some(bad) = args.rows.iter().find(|k| !known.contains(k)) {
        return Err(CliError::Usage(format!("unknown row {bad:?}; expected one of {}", known.join(", "))));
    }
    let rows: Vec<SweepRow> = all.into_iter().filter(|r| args.rows.is_empty() || args.rows.contains(&r.key())).collect();
    if args.frames == 0 {
        return Err(CliError::Usage("--frames must be >= 1".into()));
    }
    let settings = SweepSettings {
        frames: args.frames,
        master_seed: resolve_seed(args.seed, config.link.seed)?,
        template: config.link.clone(),
        receiver: config.receiver.clone(),
    };
    let mut out = OutDir::create(&args.common.out)?;
    let records = with_threads(args.threads, || sweep(&rows, &settings))?;

    let flagged: Vec<String> = check_efficiencies()
        .into_iter()
        .filter(|c| c.inconsistent && rows.iter().any(|r| r.key() == c.row.rate_key() && r.preset == c.row.preset))
        .map(|c| {
            format!(
                "{} {}: printed {} nJ/bit, power/rate gives {:.2} nJ/bit",
                c.row.rate_key(),
                c.row.preset,
                c.printed_nj_per_bit,
                c.computed_nj_per_bit
            )
        })
        .collect();

    out.write_with("table1.csv", |w| write_sweep_csv(&records, w))?;
    if args.svg {
        out.write_with("table1.svg", |w| w.write_all(table1_svg(&records).as_bytes()))?;
    }
    let run_digest = digest(&(&settings.template, &settings.receiver, settings.frames, settings.master_seed, &rows));
    out.finish("link table1", run_digest, started)?;

    for f in &flagged {
        eprintln!("inconsistent: {f}");
    }
    if args.common.json {
        let doc = Table1Json {
            rows: records.iter().map(|r| RowJson { key: r.row.key(), record: r }).collect(),
            inconsistent_rows: flagged,
        };
        println!("{}", serde_json::to_string(&doc).expect("records serialize"));
    } else {
        for r in &records {
            match &r.report {
                Ok(b) => println!(
                    "{:<12} {:<13} {:>6.3} nJ/bit  {} bits  {} errors  {} sync failures",
                    r.row.key(),
                    r.row.preset,
                    r.nj_per_bit.unwrap_or(f64::NAN),
                    b.bits_compared,
                    b.bit_errors,
                    b.sync_failures
                ),
                Err(e) => println!("{:<12} {:<13} failed: {e}", r.row.key(), r.row.preset),
            }
        }
    }
    Ok(())
}

use std::io::Write as _;

fn table1_svg(records: &[SweepRecord]) -> String {
    let mut series: Vec<Series> = Vec::new();
    for r in records {
        let label = format!("{} {}", r.row.preset, r.row.modulation);
        let point = (r.row.rate_bps as f64 / 1e6, r.nj_per_bit.unwrap_or(f64::NAN));
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point),
            None => series.push(Series { label, points: vec![point] }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    line_plot_svg("Transmit energy per bit", "data rate (Mbit/s)", "nJ/bit", &series)
}

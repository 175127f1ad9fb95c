use clap::Args;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{line_plot_svg, now, OutDir, Series};
use crate::Common;
use translum::config::digest;
use translum::fus::{array_power, harvest_sweep, safety_gate, ArrayPower, PiezoElement, SIX_ELEMENT_ORIENTATIONS};

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Source pressure, Pa (overrides the config)
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long, default_value_t = 0.5e6)]
    f_min: f64,
    #[arg(long, default_value_t = 1.5e6)]
    f_max: f64,
    #[arg(long, default_value_t = 101)]
    f_steps: usize,
    #[arg(long, default_value_t = 100.0)]
    r_min: f64,
    #[arg(long, default_value_t = 20_000.0)]
    r_max: f64,
    #[arg(long, default_value_t = 101)]
    r_steps: usize,
    /// Space the load grid logarithmically
    #[arg(long)]
    log_r: bool,
    /// Also write fus_sweep.svg (power against frequency at the best load)
    #[arg(long)]
    svg: bool,
}

fn grid(lo: f64, hi: f64, steps: usize, log: bool, name: &str) -> Result<Vec<f64>, CliError> {
    let ok = lo.is_finite() && hi.is_finite() && lo > 0.0 && steps >= 1 && (lo < hi || (lo == hi && steps == 1));
    if !ok {
        return Err(CliError::Usage(format!(
            "{name} grid needs 0 < min < max (or min == max with one step), got [{lo}, {hi}] in {steps} steps"
        )));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let at = |i: usize| i as f64 / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| if log { lo * (hi / lo).powf(at(i)) } else { lo + (hi - lo) * at(i) })
        .collect())
}

#[derive(Serialize)]
struct SweepJson {
    p0_pa: f64,
    temperature_rise_c: f64,
    best_frequency_hz: f64,
    best_load_ohm: f64,
    best_power_w: f64,
    cells: usize,
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let started = now();
    let config = args.common.load_config()?;
    let f_grid = grid(args.f_min, args.f_max, args.f_steps, false, "frequency")?;
    let r_grid = grid(args.r_min, args.r_max, args.r_steps, args.log_r, "load")?;
    let mut path = config.fus.path();
    if let Some(p0) = args.p0 {
        path.p0 = p0;
    }
    path.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let elem = config.fus.element();
    let gate = safety_gate(&path, &config.fus.limits)?;
    let surface = harvest_sweep(&elem, &path, &f_grid, &r_grid)?;
    let (i, j, best) = surface.argmax();

    let mut out = OutDir::create(&args.common.out)?;
    out.write_with("fus_sweep.csv", |w| surface.write_csv(w))?;
    if args.svg {
        let points = (0..f_grid.len()).map(|k| (f_grid[k] / 1e6, surface.at(k, j) * 1e3)).collect();
        let label = format!("R = {:.0} ohm", r_grid[j]);
        let svg = line_plot_svg("Harvested power", "frequency (MHz)", "power (mW)", &[Series { label, points }]);
        out.write_with("fus_sweep.svg", |w| w.write_all(svg.as_bytes()))?;
    }
    out.finish("fus sweep", digest(&(&config.fus, &path.p0, &f_grid, &r_grid)), started)?;

    let doc = SweepJson {
        p0_pa: path.p0,
        temperature_rise_c: gate.temperature_rise,
        best_frequency_hz: f_grid[i],
        best_load_ohm: r_grid[j],
        best_power_w: best,
        cells: surface.power.len(),
    };
    if args.common.json {
        println!("{}", serde_json::to_string(&doc).expect("sweep serializes"));
    } else {
        println!("P0 {} Pa, temperature rise {:.3} C", doc.p0_pa, doc.temperature_rise_c);
        println!(
            "best cell: {:.6} MHz, {:.2} ohm, {:.4} mW",
            doc.best_frequency_hz / 1e6,
            doc.best_load_ohm,
            doc.best_power_w * 1e3
        );
    }
    Ok(())
}

#[derive(Args)]
pub struct ArrayArgs {
    #[command(flatten)]
    common: Common,
    /// Element layout
    #[arg(long, default_value = "six-element")]
    preset: String,
    /// Source pressure, Pa (overrides the config)
    #[arg(long)]
    p0: Option<f64>,
    /// Run every element at the path frequency instead of tuning each one
    #[arg(long)]
    untuned: bool,
}

fn preset_elements(name: &str, base: &PiezoElement<f64>) -> Result<Vec<PiezoElement<f64>>, CliError> {
    match name {
        "six-element" => Ok(SIX_ELEMENT_ORIENTATIONS.iter().map(|&o| base.with_orientation(o)).collect()),
        "single" => Ok(vec![base.clone()]),
        other => Err(CliError::Usage(format!("unknown array preset {other:?}; expected six-element or single"))),
    }
}

pub fn array(args: ArrayArgs) -> Result<(), CliError> {
    let started = now();
    let config = args.common.load_config()?;
    let mut path = config.fus.path();
    if let Some(p0) = args.p0 {
        path.p0 = p0;
    }
    path.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let elements = preset_elements(&args.preset, &config.fus.element())?;
    safety_gate(&path, &config.fus.limits)?;
    let result: ArrayPower<f64> = array_power(&elements, &path, !args.untuned)?;

    let mut out = OutDir::create(&args.common.out)?;
    out.write_with("fus_array.csv", |w| {
        writeln!(w, "element,orientation_deg,power_w,total_w")?;
        for (k, (e, p)) in elements.iter().zip(&result.per_element).enumerate() {
            writeln!(w, "{},{},{:e},{:e}", k + 1, e.orientation, p, result.total)?;
        }
        Ok(())
    })?;
    out.finish("fus array", digest(&(&config.fus, &path.p0, &args.preset, args.untuned)), started)?;

    if args.common.json {
        println!("{}", serde_json::to_string(&result).expect("array serializes"));
    } else {
        for (k, (e, p)) in elements.iter().zip(&result.per_element).enumerate() {
            println!("element {} at {:>4} deg: {:.4} mW", k + 1, e.orientation, p * 1e3);
        }
        println!("total: {:.4} mW", result.total * 1e3);
    }
    Ok(())
}

use std::io::Write as _;

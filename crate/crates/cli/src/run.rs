//! Subcommand drivers. Each writes its CSV files plus `<subcommand>.json`
//! into the output directory and returns the JSON summary.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qesr_core::dynamics::{invert_to_time, time_domain_propagate, InitialCondition, Method};
use qesr_core::protocol::{esr_spectrum, excitation_budget, find_swap_time, simulate_swap};
use qesr_core::sensitivity::{
    delta_from_linewidth, min_detectable_spins, peak_photon_number, sensitivity_table, write_table_csv,
    WeakCouplingScenario,
};
use qesr_core::units::{hz_to_rad, rad_to_hz};
use qesr_core::Execution;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{EnsembleSpec, RunConfig, SCHEMA_VERSION};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Spectrum,
    Swap,
    Transfer,
    Sensitivity,
    Density,
}

impl Subcommand {
    fn name(self) -> &'static str {
        match self {
            Subcommand::Spectrum => "spectrum",
            Subcommand::Swap => "swap",
            Subcommand::Transfer => "transfer",
            Subcommand::Sensitivity => "sensitivity",
            Subcommand::Density => "density",
        }
    }
}

pub fn run(cmd: Subcommand, cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(format!("creating {}", out.display()), e))?;
    let results = match cmd {
        Subcommand::Spectrum => spectrum(cfg, out)?,
        Subcommand::Swap => swap(cfg, out)?,
        Subcommand::Transfer => transfer(cfg, out)?,
        Subcommand::Sensitivity => sensitivity(cfg, out)?,
        Subcommand::Density => density(cfg, out)?,
    };
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "subcommand": cmd.name(),
        "mode": cfg.numerics.mode,
        "results": results,
    });
    let path = out.join(format!("{}.json", cmd.name()));
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(summary)
}

fn create(out: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
    let path = out.join(name);
    let f = File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
    Ok((BufWriter::new(f), path))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn ctx(e: &EnsembleSpec, step: &str) -> String {
    format!("ensemble {:?}, {step}", e.name)
}

#[derive(Serialize)]
struct PeakSummary {
    frequency_hz: f64,
    offset_hz: f64,
    p_e: f64,
}

fn spectrum(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let env = cfg.envelope();
    let mut results = Vec::new();
    for e in &cfg.ensembles {
        let dist = e.distribution()?;
        let cavity = cfg.cavity_for(e);
        let tau_s = match cfg.spectrum.tau_s {
            Some(t) => t,
            None => find_swap_time(&dist, &cavity, &cfg.numerics.contour, Execution::Parallel)
                .map_err(|err| CliError::core(ctx(e, "swap time"), err))?,
        };
        let half = hz_to_rad(0.5 * cfg.spectrum.span_hz);
        let omegas = grid(e.omega_k() - half, e.omega_k() + half, cfg.spectrum.points);
        let s = esr_spectrum(
            &dist,
            &cavity,
            &env,
            &cfg.qubit,
            &omegas,
            tau_s,
            cfg.spectrum.n_p,
            cfg.numerics.mode,
            &cfg.numerics.contour,
            Execution::Parallel,
        )
        .map_err(|err| CliError::core(ctx(e, "spectrum"), err))?;
        let (w, path) = create(out, &format!("spectrum_{}.csv", e.slug()))?;
        s.write_csv(w).map_err(|err| CliError::core(ctx(e, "spectrum csv"), err))?;
        let budget = excitation_budget(
            &dist,
            &cavity,
            &env,
            cfg.spectrum.n_p,
            e.omega_k(),
            tau_s,
            cfg.numerics.mode,
            &cfg.numerics.contour,
        )
        .map_err(|err| CliError::core(ctx(e, "excitation budget"), err))?;
        let peaks: Vec<PeakSummary> = s
            .peaks()
            .iter()
            .map(|p| PeakSummary {
                frequency_hz: rad_to_hz(p.x),
                offset_hz: rad_to_hz(p.x - e.omega_k()),
                p_e: p.y,
            })
            .collect();
        let separations: Vec<f64> = peaks.windows(2).map(|w| w[1].frequency_hz - w[0].frequency_hz).collect();
        results.push(json!({
            "ensemble": e.name,
            "csv": file_name(&path),
            "points": s.omega_p.len(),
            "tau_s": tau_s,
            "n_excitations_peak": s.n_excitations_peak,
            "scale": s.scale,
            "peaks": peaks,
            "peak_separations_hz": separations,
            "budget": budget,
        }));
    }
    Ok(Value::Array(results))
}

fn swap(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let taus = grid(0.0, cfg.swap.t_max_s, cfg.swap.points);
    let mut results = Vec::new();
    for e in &cfg.ensembles {
        let dist = e.distribution()?;
        let cavity = cfg.cavity_for(e);
        let trace = simulate_swap(&dist, &cavity, &cfg.qubit, &taus, &cfg.numerics.contour, Execution::Parallel)
            .map_err(|err| CliError::core(ctx(e, "swap"), err))?;
        let (w, path) = create(out, &format!("swap_{}.csv", e.slug()))?;
        trace.write_csv(w).map_err(|err| CliError::core(ctx(e, "swap csv"), err))?;
        results.push(json!({
            "ensemble": e.name,
            "csv": file_name(&path),
            "points": taus.len(),
            "tau_s": trace.tau_s,
            "tau_return": trace.tau_return,
            "p_e_return": trace.p_e_return,
            "oscillation_frequency_hz": trace.oscillation_frequency.map(rad_to_hz),
        }));
    }
    Ok(Value::Array(results))
}

fn transfer(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let env = cfg.envelope();
    let times = grid(0.0, cfg.transfer.t_max_s, cfg.transfer.points);
    let mut results = Vec::new();
    for e in &cfg.ensembles {
        let dist = e.distribution()?;
        let cavity = cfg.cavity_for(e);
        for (k, &offset) in cfg.transfer.offsets_hz.iter().enumerate() {
            let init = InitialCondition::PulseExcited {
                omega_p: hz_to_rad(e.center_hz + offset),
                envelope: env,
            };
            let r = match cfg.transfer.method {
                Method::Contour => invert_to_time(
                    &dist,
                    &cavity,
                    &init,
                    cfg.numerics.mode,
                    &times,
                    &cfg.numerics.contour,
                    Execution::Parallel,
                ),
                Method::TimeDomain => time_domain_propagate(&dist, &cavity, &init, &times, &cfg.numerics.ode),
            }
            .map_err(|err| CliError::core(ctx(e, "transfer"), err))?;
            let (w, path) = create(out, &format!("transfer_{}_{k}.csv", e.slug()))?;
            r.write_csv(w).map_err(|err| CliError::core(ctx(e, "transfer csv"), err))?;
            let abs2 = r.abs2();
            let (i_max, peak) = abs2
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            results.push(json!({
                "ensemble": e.name,
                "offset_hz": offset,
                "csv": file_name(&path),
                "method": r.method,
                "max_abs2_beta": peak,
                "t_at_max": times[i_max],
            }));
        }
    }
    Ok(Value::Array(results))
}

fn density(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let mut results = Vec::new();
    for e in &cfg.ensembles {
        let dist = e.distribution()?;
        let (w, path) = create(out, &format!("density_{}.csv", e.slug()))?;
        dist.write_csv(w).map_err(|err| CliError::core(ctx(e, "density csv"), err))?;
        results.push(json!({
            "ensemble": e.name,
            "csv": file_name(&path),
            "nodes": dist.len(),
            "collective_coupling_hz": rad_to_hz(dist.collective_coupling()),
            "reconstructed_coupling_hz": rad_to_hz(dist.reconstructed_coupling()),
            "window_integral": dist.raw_integral(),
        }));
    }
    Ok(Value::Array(results))
}

fn sensitivity(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let s = &cfg.sensitivity;
    let g = hz_to_rad(s.g_hz);
    let delta = delta_from_linewidth(s.linewidth_mt, s.hz_per_mt);
    let n_min = min_detectable_spins(g, delta, s.n_threshold).map_err(|err| CliError::core("sensitivity", err))?;
    let scenario = WeakCouplingScenario {
        g,
        n_spins: s.n_spins.unwrap_or(n_min),
        delta,
        kappa: s.kappa_over_delta * delta,
        n_threshold: s.n_threshold,
    };
    let photons = peak_photon_number(&scenario).map_err(|err| CliError::core("sensitivity", err))?;
    let gs: Vec<f64> = s.table_g_hz.iter().map(|&x| hz_to_rad(x)).collect();
    let deltas: Vec<f64> = s.table_linewidth_mt.iter().map(|&mt| delta_from_linewidth(mt, s.hz_per_mt)).collect();
    let rows = sensitivity_table(&gs, &deltas, &s.table_n_threshold).map_err(|err| CliError::core("sensitivity table", err))?;
    let (w, path) = create(out, "sensitivity_table.csv")?;
    write_table_csv(&rows, w).map_err(|err| CliError::core("sensitivity csv", err))?;
    Ok(json!({
        "g_hz": s.g_hz,
        "delta_hz": rad_to_hz(delta),
        "kappa_hz": rad_to_hz(scenario.kappa),
        "n_threshold": s.n_threshold,
        "n_min": n_min,
        "n_min_unit": "spins per sqrt(Hz), one-second integration",
        "n_spins": scenario.n_spins,
        "nbar_closed_form": photons.closed_form,
        "nbar_trajectory_max": photons.trajectory_max,
        "t_peak": photons.t_peak,
        "regime": photons.regime,
        "table_csv": file_name(&path),
        "table_rows": rows.len(),
    }))
}

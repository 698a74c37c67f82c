//! The five subcommands: single-configuration index, resolution sweep, the
//! wave boundary-observation demonstration, sensor-placement comparison,
//! and the model list.

use std::time::Instant;

use pdeobs::consistency::{index_sweep, sensor_sweep, wave_ratio_study, SensorCandidate, WaveData};
use pdeobs::models::catalog;
use pdeobs::{default_rho, direct_epsilon, gramian_index, DirectOptions, ExecMode};

use crate::config::{
    build_bundle, build_bundle_at, build_wave_config, default_sensor_groups, default_sweep,
    make_candidate_observe, snapshot, Bundle, CliError, CliResult, RhoChoice, Settings,
};
use crate::report::{ensure_out_dir, fmt_float, write_csv, write_plot, write_run_record};

fn resolve_rho(settings: &Settings, bundle: &Bundle) -> f64 {
    match settings.rho {
        RhoChoice::Fixed(x) => x,
        RhoChoice::Auto => default_rho(&bundle.model, &bundle.u0),
    }
}

fn exec_mode() -> ExecMode {
    ExecMode::Parallel
}

/// Apply --jobs by capping the worker pool; returns quietly when the pool
/// was already sized (it can only be set once per process).
pub fn apply_jobs(settings: &Settings) {
    if let Some(jobs) = settings.jobs {
        let _ = pdeobs::exec::configure_threads(jobs);
    }
}

const REPORT_HEADER: &[&str] = &[
    "model",
    "N",
    "s",
    "rho",
    "sigma_min",
    "epsilon",
    "index",
    "source",
];

pub fn cmd_index(settings: &Settings) -> CliResult<()> {
    let started = Instant::now();
    apply_jobs(settings);
    let bundle = build_bundle(settings)?;
    let rho = resolve_rho(settings, &bundle);
    let (gram, report) = gramian_index(&bundle.model, &bundle.u0, &bundle.space, rho, exec_mode())
        .map_err(|e| CliError::failure("perturbation runs and gramian assembly", e))?;

    println!(
        "model = {} (N = {}, s = {}, space = {})",
        settings.model_id, bundle.resolution, bundle.subspace, bundle.space.label
    );
    println!("rho = {}", fmt_float(rho));
    println!("sigma_min = {}", fmt_float(report.sigma_min));
    println!("sigma_max = {}", fmt_float(report.sigma_max));
    println!("epsilon = {}", fmt_float(report.epsilon));
    println!("index = {}", fmt_float(report.index));
    println!(
        "worst estimation error bound for unit sensor error = {}",
        fmt_float(report.worst_error_bound(1.0))
    );
    if report.practically_unobservable {
        println!("practically unobservable: sigma_min <= 1e-14 * sigma_max");
    }

    let mut rows = vec![vec![
        settings.model_id.clone(),
        bundle.resolution.to_string(),
        bundle.subspace.to_string(),
        fmt_float(rho),
        fmt_float(report.sigma_min),
        fmt_float(report.epsilon),
        fmt_float(report.index),
        report.source.to_string(),
    ]];

    if settings.direct {
        let opts = DirectOptions {
            seed: settings.seed,
            ..DirectOptions::default()
        };
        let outcome = direct_epsilon(
            &bundle.model,
            &bundle.u0,
            &bundle.space,
            rho,
            opts,
            exec_mode(),
        )
        .map_err(|e| CliError::failure("direct minimization", e))?;
        println!(
            "direct index = {} ({} objective evaluations)",
            fmt_float(outcome.report.index),
            outcome.evaluations
        );
        rows.push(vec![
            settings.model_id.clone(),
            bundle.resolution.to_string(),
            bundle.subspace.to_string(),
            fmt_float(rho),
            fmt_float(outcome.report.sigma_min),
            fmt_float(outcome.report.epsilon),
            fmt_float(outcome.report.index),
            outcome.report.source.to_string(),
        ]);
    }

    ensure_out_dir(&settings.out_dir)?;
    let mut files = Vec::new();
    files.push(write_csv(
        &settings.out_dir,
        "report.csv",
        REPORT_HEADER,
        &rows,
    )?);

    let labels = &gram.direction_labels;
    let mut gram_header: Vec<&str> = vec!["row"];
    gram_header.extend(labels.iter().map(String::as_str));
    let dim = labels.len();
    let gram_rows: Vec<Vec<String>> = (0..dim)
        .map(|i| {
            let mut row = vec![labels[i].clone()];
            row.extend((0..dim).map(|j| fmt_float(gram.g[[i, j]])));
            row
        })
        .collect();
    files.push(write_csv(
        &settings.out_dir,
        "gramian.csv",
        &gram_header,
        &gram_rows,
    )?);

    let mut eigen_header: Vec<&str> = vec!["sigma"];
    eigen_header.extend(labels.iter().map(String::as_str));
    let eigen_rows: Vec<Vec<String>> = (0..dim)
        .map(|k| {
            let mut row = vec![fmt_float(gram.eigenvalues[k])];
            row.extend((0..dim).map(|i| fmt_float(gram.eigenvectors[[i, k]])));
            row
        })
        .collect();
    files.push(write_csv(
        &settings.out_dir,
        "eigen.csv",
        &eigen_header,
        &eigen_rows,
    )?);

    write_run_record(
        &settings.out_dir,
        "index",
        &snapshot(settings, Some(rho)),
        started.elapsed().as_millis(),
        &files,
    )?;
    Ok(())
}

pub fn cmd_sweep(settings: &Settings) -> CliResult<()> {
    let started = Instant::now();
    apply_jobs(settings);
    let resolutions = match &settings.sweep {
        Some(list) => list.clone(),
        None => default_sweep(&settings.model_id)?,
    };
    if settings.model_id == "wave" {
        return Err(CliError::config(
            "the wave model is driven by the wave-demo command",
        ));
    }
    // One rho for the whole ladder (indices are only comparable at fixed
    // rho): resolve `auto` against the coarsest resolution.
    let first = build_bundle_at(settings, Some(resolutions[0]))?;
    let rho = resolve_rho(settings, &first);
    drop(first);

    let result = index_sweep(&resolutions, exec_mode(), |n| {
        let bundle =
            build_bundle_at(settings, Some(n)).map_err(|e| pdeobs::Error::Config(e.to_string()))?;
        Ok((bundle.model, bundle.u0, bundle.space, rho))
    });

    for ((n, index), sigma) in result
        .resolutions
        .iter()
        .zip(&result.indices)
        .zip(&result.sigma_mins)
    {
        println!(
            "N = {:>5}  sigma_min = {}  index = {}",
            n,
            fmt_float(*sigma),
            fmt_float(*index)
        );
    }
    match (result.stabilized_at, result.stabilized_value) {
        (Some(at), Some(value)) => {
            println!("stabilized_at = {}", at);
            println!("stabilized_value = {}", fmt_float(value));
        }
        _ => println!("no stabilization detected (indices still moving over the ladder)"),
    }

    ensure_out_dir(&settings.out_dir)?;
    let rows: Vec<Vec<String>> = result
        .resolutions
        .iter()
        .zip(&result.sigma_mins)
        .zip(&result.indices)
        .map(|((n, sigma), index)| vec![n.to_string(), fmt_float(*sigma), fmt_float(*index)])
        .collect();
    let mut files = Vec::new();
    files.push(write_csv(
        &settings.out_dir,
        "sweep.csv",
        &["N", "sigma_min", "index"],
        &rows,
    )?);
    let points: Vec<(String, f64)> = result
        .resolutions
        .iter()
        .zip(&result.indices)
        .map(|(n, index)| (n.to_string(), *index))
        .collect();
    files.push(write_plot(&settings.out_dir, "sweep_plot.dat", &points)?);
    write_run_record(
        &settings.out_dir,
        "sweep",
        &snapshot(settings, Some(rho)),
        started.elapsed().as_millis(),
        &files,
    )?;

    if let Some(abort) = result.aborted {
        return Err(CliError::failure(
            "resolution sweep",
            format!(
                "resolution {} failed: {} (earlier results were written)",
                abort.resolution, abort.message
            ),
        ));
    }
    Ok(())
}

pub fn cmd_wave_demo(settings: &Settings) -> CliResult<()> {
    let started = Instant::now();
    apply_jobs(settings);
    if settings.model_id != "wave" {
        return Err(CliError::config(
            "wave-demo runs the wave model; drop --model or pass --model wave",
        ));
    }
    let cfg = build_wave_config(settings)?;
    let resolutions = settings.sweep.clone().unwrap_or(vec![20, 40, 80]);
    let low = wave_ratio_study(&cfg, &resolutions, WaveData::LowestMode, exec_mode())
        .map_err(|e| CliError::failure("wave ratio study (lowest mode)", e))?;
    let high = wave_ratio_study(&cfg, &resolutions, WaveData::HighestMode, exec_mode())
        .map_err(|e| CliError::failure("wave ratio study (highest mode)", e))?;

    for (k, &n) in resolutions.iter().enumerate() {
        println!(
            "N = {:>5}  low_mode_ratio = {}  high_mode_ratio = {}",
            n,
            fmt_float(low.ratios[k]),
            fmt_float(high.ratios[k])
        );
    }
    let growth = high.ratios.last().unwrap() / high.ratios.first().unwrap();
    println!(
        "high-mode ratio growth across the ladder = {}x",
        fmt_float(growth)
    );

    ensure_out_dir(&settings.out_dir)?;
    let rows: Vec<Vec<String>> = resolutions
        .iter()
        .enumerate()
        .map(|(k, n)| {
            vec![
                n.to_string(),
                fmt_float(low.initial_energies[k]),
                fmt_float(low.boundary_totals[k]),
                fmt_float(low.ratios[k]),
                fmt_float(high.initial_energies[k]),
                fmt_float(high.boundary_totals[k]),
                fmt_float(high.ratios[k]),
            ]
        })
        .collect();
    let mut files = Vec::new();
    files.push(write_csv(
        &settings.out_dir,
        "ratios.csv",
        &[
            "N",
            "low_initial_energy",
            "low_boundary_total",
            "low_ratio",
            "high_initial_energy",
            "high_boundary_total",
            "high_ratio",
        ],
        &rows,
    )?);
    let points: Vec<(String, f64)> = resolutions
        .iter()
        .zip(&high.ratios)
        .map(|(n, r)| (n.to_string(), *r))
        .collect();
    files.push(write_plot(&settings.out_dir, "wave_plot.dat", &points)?);
    write_run_record(
        &settings.out_dir,
        "wave-demo",
        &snapshot(settings, None),
        started.elapsed().as_millis(),
        &files,
    )?;
    Ok(())
}

pub fn cmd_sensors(settings: &Settings) -> CliResult<()> {
    let started = Instant::now();
    apply_jobs(settings);
    let bundle = build_bundle(settings)?;
    let rho = resolve_rho(settings, &bundle);
    let groups = match &settings.sensors {
        Some(groups) => groups.clone(),
        None => default_sensor_groups(settings)?,
    };
    let mut candidates = Vec::with_capacity(groups.len());
    for positions in &groups {
        let (observe, channels) = make_candidate_observe(settings, positions)?;
        let label = positions
            .iter()
            .map(|x| format!("{}", x))
            .collect::<Vec<_>>()
            .join(" ");
        candidates.push(SensorCandidate {
            label,
            observe,
            num_channels: channels,
        });
    }

    let result = sensor_sweep(
        &bundle.model,
        &bundle.space,
        &bundle.u0,
        rho,
        candidates,
        exec_mode(),
    )
    .map_err(|e| CliError::failure("sensor comparison", e))?;

    for (rank, &pos) in result.ranking.iter().enumerate() {
        println!(
            "#{}  candidate = [{}]  sigma_min = {}  index = {}",
            rank + 1,
            result.labels[pos],
            fmt_float(result.sigma_mins[pos]),
            fmt_float(result.indices[pos])
        );
    }
    for (label, message) in &result.failures {
        println!("failed candidate [{}]: {}", label, message);
    }
    if let Some(&best) = result.ranking.first() {
        println!(
            "best candidate = [{}] (index = {})",
            result.labels[best],
            fmt_float(result.indices[best])
        );
    }

    ensure_out_dir(&settings.out_dir)?;
    let mut rows: Vec<Vec<String>> = result
        .labels
        .iter()
        .enumerate()
        .map(|(k, label)| {
            vec![
                (k + 1).to_string(),
                label.clone(),
                fmt_float(result.sigma_mins[k]),
                fmt_float(result.indices[k]),
                "ok".to_string(),
            ]
        })
        .collect();
    for (label, message) in &result.failures {
        rows.push(vec![
            "0".to_string(),
            label.clone(),
            fmt_float(f64::NAN),
            fmt_float(f64::NAN),
            message.replace(',', ";"),
        ]);
    }
    let mut files = Vec::new();
    files.push(write_csv(
        &settings.out_dir,
        "sensors.csv",
        &["candidate", "label", "sigma_min", "index", "status"],
        &rows,
    )?);
    let points: Vec<(String, f64)> = result
        .indices
        .iter()
        .enumerate()
        .map(|(k, index)| ((k + 1).to_string(), *index))
        .collect();
    files.push(write_plot(&settings.out_dir, "sensors_plot.dat", &points)?);
    write_run_record(
        &settings.out_dir,
        "sensors",
        &snapshot(settings, Some(rho)),
        started.elapsed().as_millis(),
        &files,
    )?;
    Ok(())
}

pub fn cmd_models() -> CliResult<()> {
    for (id, description) in catalog() {
        println!("{:<8}  {}", id, description);
    }
    Ok(())
}

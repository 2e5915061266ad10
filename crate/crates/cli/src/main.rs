//! `fopsim` — batch simulator for fiber-optic-plate fluorescence frontends.
//!
//! Every command is a pure function of (config file, flags, seed): rerunning
//! with the same inputs reproduces every artifact byte for byte, regardless
//! of thread count.

mod config;
mod io;
mod plot;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use fop_optics::explorer::{
    self, design_sweep, excitation_efficiency, irdye_680lt, min_thickness, FluorophoreSpec,
    SweepGrid,
};
use fop_optics::filter::calibrate_n_eff;
use fop_optics::fop::{angular_transmittance, FopDesign};
use fop_optics::frontend::{sweep_frontend, StackOrder};
use fop_optics::imaging::{
    collection_efficiency, ctf, fwhm_deg, psf_angular, psf_spatial, render, resolution_at,
    usaf_scene, CtfResolution, NoiseModel, UsafPattern,
};
use fop_optics::response::AngularResponse;
use fop_optics::OpticsError;
use plot::Curve;

#[derive(Parser)]
#[command(name = "fopsim", version, about)]
struct Cli {
    /// Path to a run configuration file (sectioned key-value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config value.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker thread count (default: all cores). Results are identical for
    /// any value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Substitute a measured angular response CSV (theta_deg,transmittance)
    /// for the simulated plate wherever one is consumed.
    #[arg(long, global = true)]
    measured: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the plate's angular transmittance T(θ).
    AngleSweep(AngleSweepArgs),
    /// Compose filter + plate in all three stack orders.
    FrontendSweep(FrontendSweepArgs),
    /// Angular and spatial point-spread function of the frontend.
    Psf(PsfArgs),
    /// Collection efficiency of the frontend (or an ideal cone).
    Eta(EtaArgs),
    /// Render 3-bar resolution elements onto the sensor.
    RenderUsaf(UsafArgs),
    /// Contrast-transfer curve and threshold resolution.
    Ctf(CtfArgs),
    /// Thinnest plate meeting a laser-blocking target (scatter-free model).
    OptimizeH(OptimizeArgs),
    /// Evaluate an NA × fill-factor design grid.
    DesignSweep(DesignSweepArgs),
    /// Fit the filter's effective cavity index from band-edge anchors.
    CalibrateFilter(CalibrateArgs),
}

#[derive(Args)]
struct AngleSweepArgs {
    #[arg(long, default_value_t = 90.0)]
    theta_max: f64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    /// Output stem (files: <out>.csv, <out>.svg).
    #[arg(long, default_value = "angle_sweep")]
    out: String,
}

#[derive(Args)]
struct FrontendSweepArgs {
    #[arg(long, default_value_t = 660.0)]
    lambda: f64,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    #[arg(long, default_value = "frontend_sweep")]
    out: String,
}

#[derive(Args)]
struct PsfArgs {
    /// Working distance in µm; overrides [geometry].
    #[arg(long)]
    working_distance: Option<f64>,
    /// Sample medium index; overrides [geometry].
    #[arg(long)]
    medium_index: Option<f64>,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    #[arg(long, default_value = "psf")]
    out: String,
}

#[derive(Args)]
struct EtaArgs {
    /// Use the ideal rectangular filter with this cutoff (degrees) instead
    /// of the simulated plate.
    #[arg(long)]
    rect: Option<f64>,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    #[arg(long, default_value = "eta")]
    out: String,
}

#[derive(Args)]
struct UsafArgs {
    /// Bar line widths in µm, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    line_widths: Vec<f64>,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    #[arg(long, default_value = "usaf")]
    out: String,
}

#[derive(Args)]
struct CtfArgs {
    /// Bar line widths in µm, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    line_widths: Vec<f64>,
    #[arg(long, default_value_t = 0.4)]
    contrast_level: f64,
    #[arg(long, default_value_t = 8)]
    phases: usize,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    #[arg(long, default_value = "ctf")]
    out: String,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Blocking target in OD; overrides [optimize].
    #[arg(long)]
    target_od: Option<f64>,
    /// Laser wavelength in nm; overrides [optimize].
    #[arg(long)]
    lambda: Option<f64>,
    /// Illumination restriction in degrees; overrides [optimize].
    #[arg(long)]
    theta_max: Option<f64>,
    #[arg(long, default_value = "optimize_h")]
    out: String,
}

#[derive(Args)]
struct DesignSweepArgs {
    /// Fluorophore excitation spectrum CSV (wavelength_nm,relative_value);
    /// defaults to the built-in IRDye 680LT profile.
    #[arg(long)]
    fluorophore: Option<PathBuf>,
    #[arg(long, default_value = "design_sweep")]
    out: String,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Band-edge anchor `theta_deg:lambda_nm`; repeatable.
    #[arg(long = "anchor", required = true)]
    anchors: Vec<String>,
    /// Unshifted band-edge wavelength in nm.
    #[arg(long)]
    edge: f64,
    #[arg(long, default_value = "calibrate")]
    out: String,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<OpticsError>()
                .map(|oe| oe.exit_code() as i32)
                .unwrap_or(2);
            std::process::exit(code);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }

    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.display().to_string();
    }
    let out_dir = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;

    match &cli.command {
        Command::AngleSweep(args) => cmd_angle_sweep(&cfg, &cli, args, &out_dir),
        Command::FrontendSweep(args) => cmd_frontend_sweep(&cfg, &cli, args, &out_dir),
        Command::Psf(args) => cmd_psf(&cfg, &cli, args, &out_dir),
        Command::Eta(args) => cmd_eta(&cfg, &cli, args, &out_dir),
        Command::RenderUsaf(args) => cmd_render_usaf(&cfg, &cli, args, &out_dir),
        Command::Ctf(args) => cmd_ctf(&cfg, &cli, args, &out_dir),
        Command::OptimizeH(args) => cmd_optimize_h(&cfg, args, &out_dir),
        Command::DesignSweep(args) => cmd_design_sweep(&cfg, args, &out_dir),
        Command::CalibrateFilter(args) => cmd_calibrate(args, &out_dir),
    }
}

/// The plate's angular response on a 0..=90° grid: measured substitute if
/// given, Monte Carlo otherwise.
fn fop_response(
    cfg: &RunConfig,
    cli: &Cli,
    design: &FopDesign,
    theta_max: f64,
    step: f64,
    samples: usize,
) -> Result<AngularResponse> {
    if let Some(path) = &cli.measured {
        return Ok(io::read_response_csv(path)?);
    }
    let grid = AngularResponse::uniform_grid(theta_max, step);
    Ok(angular_transmittance(design, &grid, samples, cfg.seed)?)
}

fn curve_of(response: &AngularResponse) -> Vec<(f64, f64)> {
    response
        .theta_deg()
        .iter()
        .zip(response.transmittance())
        .map(|(&t, &v)| (t, v))
        .collect()
}

fn cmd_angle_sweep(cfg: &RunConfig, cli: &Cli, args: &AngleSweepArgs, out_dir: &Path) -> Result<()> {
    if !(0.0 < args.theta_max && args.theta_max <= 90.0) || args.step <= 0.0 {
        bail!("--theta-max must lie in (0, 90] with a positive --step");
    }
    let design = cfg.fop.build()?;
    let response = fop_response(cfg, cli, &design, args.theta_max, args.step, args.samples)?;
    io::write_response_csv(&out_dir.join(format!("{}.csv", args.out)), &response)?;
    plot::write_svg(
        &out_dir.join(format!("{}.svg", args.out)),
        "Plate angular transmittance",
        "angle of incidence (deg)",
        "transmittance",
        &[Curve {
            label: "T(θ)",
            points: &curve_of(&response),
        }],
        true,
    )?;
    Ok(())
}

fn cmd_frontend_sweep(
    cfg: &RunConfig,
    cli: &Cli,
    args: &FrontendSweepArgs,
    out_dir: &Path,
) -> Result<()> {
    let design = cfg.fop.build()?;
    let fop_t = fop_response(cfg, cli, &design, 90.0, 1.0, args.samples)?;
    let grid = fop_t.theta_deg().to_vec();
    let base = cfg.frontend(&design)?;
    let mut curves = Vec::new();
    for order in [
        StackOrder::FilterFirst,
        StackOrder::FilterLast,
        StackOrder::DualSided,
    ] {
        let composed = sweep_frontend(&base.clone().with_order(order), args.lambda, &grid, &fop_t)?;
        curves.push((order, composed));
    }

    let rows: Vec<Vec<String>> = grid
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut row = vec![io::fmt(theta)];
            for (_, c) in &curves {
                row.push(io::fmt(c.transmittance()[i]));
            }
            row
        })
        .collect();
    io::write_csv(
        &out_dir.join(format!("{}.csv", args.out)),
        "theta_deg,filter_first,filter_last,dual_sided",
        &rows,
    )?;

    let od_curves: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|(_, c)| {
            curve_of(c)
                .into_iter()
                .map(|(t, v)| (t, fop_optics::filter::od_of(v)))
                .collect()
        })
        .collect();
    plot::write_svg(
        &out_dir.join(format!("{}.svg", args.out)),
        &format!("Frontend blocking at {} nm", args.lambda),
        "angle of incidence (deg)",
        "optical density",
        &curves
            .iter()
            .zip(&od_curves)
            .map(|((order, _), pts)| Curve {
                label: order.as_str(),
                points: pts,
            })
            .collect::<Vec<_>>(),
        false,
    )?;
    Ok(())
}

fn cmd_psf(cfg: &RunConfig, cli: &Cli, args: &PsfArgs, out_dir: &Path) -> Result<()> {
    let design = cfg.fop.build()?;
    let mut geom = cfg.geometry.build()?;
    if let Some(l) = args.working_distance {
        geom.working_distance_um = l;
    }
    if let Some(n) = args.medium_index {
        geom.medium_index = n;
    }
    geom.validate()?;

    let fop_t = fop_response(cfg, cli, &design, 90.0, 1.0, args.samples)?;
    let psf = psf_angular(&fop_t)?;
    let width = fwhm_deg(&psf)?;

    io::write_response_csv(&out_dir.join(format!("{}.csv", args.out)), &psf)?;
    plot::write_svg(
        &out_dir.join(format!("{}.svg", args.out)),
        "Angular point-spread function",
        "angle (deg)",
        "normalized PSF",
        &[Curve {
            label: "PSF(θ)",
            points: &curve_of(&psf),
        }],
        false,
    )?;
    let sensor_span = geom.pixel_pitch_um * geom.pixel_rows.max(geom.pixel_cols) as f64;
    let kernel = psf_spatial(&fop_t, &geom, cfg.render.scene_pitch_um, sensor_span)?;
    io::write_pgm16(&out_dir.join(format!("{}_kernel.pgm", args.out)), &kernel)?;
    io::write_json(
        &out_dir.join(format!("{}.json", args.out)),
        &serde_json::json!({
            "fwhm_deg": width,
            "working_distance_um": geom.working_distance_um,
            "medium_index": geom.medium_index,
        }),
    )?;
    Ok(())
}

fn cmd_eta(cfg: &RunConfig, cli: &Cli, args: &EtaArgs, out_dir: &Path) -> Result<()> {
    let response = match args.rect {
        Some(theta_c) => AngularResponse::rectangular(theta_c, 4096)?,
        None => {
            let design = cfg.fop.build()?;
            fop_response(cfg, cli, &design, 90.0, 1.0, args.samples)?
        }
    };
    let eta_c = collection_efficiency(&response)?;
    io::write_json(
        &out_dir.join(format!("{}.json", args.out)),
        &serde_json::json!({ "eta_c": eta_c }),
    )?;
    println!("eta_c = {}", io::fmt(eta_c));
    Ok(())
}

/// Frontend emission-band response for imaging commands.
fn emission_response(
    cfg: &RunConfig,
    cli: &Cli,
    design: &FopDesign,
    samples: usize,
) -> Result<AngularResponse> {
    let fop_t = fop_response(cfg, cli, design, 90.0, 1.0, samples)?;
    let frontend = cfg.frontend(design)?;
    Ok(sweep_frontend(
        &frontend,
        cfg.sweep.emission_nm,
        &fop_t.theta_deg().to_vec(),
        &fop_t,
    )?)
}

fn cmd_render_usaf(cfg: &RunConfig, cli: &Cli, args: &UsafArgs, out_dir: &Path) -> Result<()> {
    if args.line_widths.iter().any(|w| *w <= 0.0) {
        bail!("line widths must be positive");
    }
    let design = cfg.fop.build()?;
    let geom = cfg.geometry.build()?;
    let emission = emission_response(cfg, cli, &design, args.samples)?;
    let noise = if cfg.render.noise_read_sigma > 0.0 || cfg.render.noise_shot_gain > 0.0 {
        Some(NoiseModel {
            read_sigma: cfg.render.noise_read_sigma,
            shot_gain: cfg.render.noise_shot_gain,
        })
    } else {
        None
    };
    for &w in &args.line_widths {
        let extent = (5.0 * w + 4.0 * geom.pixel_pitch_um)
            .min(geom.pixel_cols.max(geom.pixel_rows) as f64 * geom.pixel_pitch_um)
            .max(5.0 * w);
        let scene = usaf_scene(
            &UsafPattern {
                line_width_um: w,
                phase_um: 0.0,
            },
            cfg.render.scene_pitch_um,
            extent,
        )?;
        let image = render(
            &scene,
            &emission,
            &geom,
            Some(&design),
            noise.as_ref(),
            cfg.seed,
        )?;
        io::write_pgm16(&out_dir.join(format!("{}_w{w}.pgm", args.out)), &image)?;
    }
    Ok(())
}

fn cmd_ctf(cfg: &RunConfig, cli: &Cli, args: &CtfArgs, out_dir: &Path) -> Result<()> {
    if !(0.0 < args.contrast_level && args.contrast_level < 1.0) {
        bail!("--contrast-level must lie in (0, 1)");
    }
    let design = cfg.fop.build()?;
    let geom = cfg.geometry.build()?;
    let emission = emission_response(cfg, cli, &design, args.samples)?;
    let points = ctf(
        &emission,
        &geom,
        Some(&design),
        &args.line_widths,
        cfg.render.scene_pitch_um,
        args.phases,
        cfg.seed,
    )?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|(w, c)| vec![io::fmt(*w), io::fmt(*c)])
        .collect();
    io::write_csv(
        &out_dir.join(format!("{}.csv", args.out)),
        "line_width_um,contrast",
        &rows,
    )?;
    plot::write_svg(
        &out_dir.join(format!("{}.svg", args.out)),
        "Contrast transfer",
        "line width (µm)",
        "Michelson contrast",
        &[Curve {
            label: "CTF",
            points: &points,
        }],
        false,
    )?;
    let resolution = resolution_at(&points, args.contrast_level, geom.nyquist_um())?;
    let json = match resolution {
        CtfResolution::PixelLimited { nyquist_um } => serde_json::json!({
            "level": args.contrast_level,
            "result": "pixel-limited",
            "resolution_um": nyquist_um,
        }),
        CtfResolution::Resolved { width_um } => serde_json::json!({
            "level": args.contrast_level,
            "result": "resolved",
            "resolution_um": width_um,
        }),
        CtfResolution::Unresolved => serde_json::json!({
            "level": args.contrast_level,
            "result": "unresolved",
        }),
    };
    io::write_json(&out_dir.join(format!("{}_resolution.json", args.out)), &json)?;
    Ok(())
}

fn cmd_optimize_h(cfg: &RunConfig, args: &OptimizeArgs, out_dir: &Path) -> Result<()> {
    let design = cfg.fop.build()?;
    // The thinning model is scatter-free by construction; lumped scatter
    // floors would break the monotone bisection certificate.
    let frontend = cfg.frontend(&design)?.with_scatter(0.0, 0.0)?;
    let target = args.target_od.unwrap_or(cfg.optimize.target_od);
    let lambda = args.lambda.unwrap_or(cfg.optimize.lambda_nm);
    let theta_max = args.theta_max.unwrap_or(cfg.optimize.theta_max_deg);
    let result = min_thickness(
        &frontend,
        lambda,
        target,
        theta_max,
        cfg.optimize.samples_per_angle,
        cfg.seed,
        cfg.optimize.h_max_um,
        false,
    )?;
    io::write_json(
        &out_dir.join(format!("{}.json", args.out)),
        &serde_json::json!({
            "target_od": target,
            "lambda_nm": lambda,
            "theta_max_deg": theta_max,
            "thickness_um": result.thickness_um,
            "od_at_thickness": result.od_at_thickness,
            "od_2um_below": result.od_below,
        }),
    )?;
    println!("h_min = {} µm", io::fmt(result.thickness_um));
    Ok(())
}

fn cmd_design_sweep(cfg: &RunConfig, args: &DesignSweepArgs, out_dir: &Path) -> Result<()> {
    let design = cfg.fop.build()?;
    let filter = cfg.filter.build()?;
    let order: StackOrder = cfg.frontend.order.parse()?;
    let fluor = match &args.fluorophore {
        Some(path) => FluorophoreSpec::new(
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "custom".into()),
            io::read_spectrum_csv(path)?,
        )?,
        None => irdye_680lt(),
    };
    let grid = SweepGrid {
        nas: cfg.sweep.nas.clone(),
        fill_factors: cfg.sweep.fill_factors.clone(),
    };
    let rows = design_sweep(
        &grid,
        &design,
        &filter,
        order,
        cfg.sweep.emission_nm,
        cfg.sweep.excitation_nm,
        &fluor,
        cfg.sweep.samples_per_angle,
        cfg.seed,
    )?;

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                io::fmt(r.na),
                io::fmt(r.fill_factor),
                io::fmt(r.core_diameter_um),
                io::fmt(r.pitch_um),
                io::fmt(r.n_clad),
                io::fmt(r.acceptance_angle_deg),
                io::fmt(r.fwhm_deg),
                io::fmt(r.collection_efficiency),
                io::fmt(r.normal_transmittance),
                io::fmt(r.passband_insertion),
                io::fmt(r.excitation_efficiency),
                io::fmt(r.figure_of_merit),
            ]
        })
        .collect();
    io::write_csv(
        &out_dir.join(format!("{}.csv", args.out)),
        "na,fill_factor,core_diameter_um,pitch_um,n_clad,acceptance_angle_deg,fwhm_deg,collection_efficiency,normal_transmittance,passband_insertion,excitation_efficiency,figure_of_merit",
        &csv_rows,
    )?;
    let json_rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "na": r.na,
                "fill_factor": r.fill_factor,
                "collection_efficiency": r.collection_efficiency,
                "fwhm_deg": r.fwhm_deg,
                "figure_of_merit": r.figure_of_merit,
            })
        })
        .collect();
    io::write_json(
        &out_dir.join(format!("{}.json", args.out)),
        &serde_json::json!({
            "fluorophore": fluor.name.clone(),
            "excitation_nm": cfg.sweep.excitation_nm,
            "excitation_efficiency": excitation_efficiency(&fluor, cfg.sweep.excitation_nm),
            "rows": json_rows,
        }),
    )?;

    // η_C versus NA, one curve per fill factor.
    let mut curves_pts: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for &ff in &cfg.sweep.fill_factors {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| (r.fill_factor - ff).abs() < 1e-12)
            .map(|r| (r.na, r.collection_efficiency))
            .collect();
        curves_pts.push((format!("FF {ff:.2}"), pts));
    }
    plot::write_svg(
        &out_dir.join(format!("{}.svg", args.out)),
        "Collection efficiency across the design grid",
        "numerical aperture",
        "collection efficiency",
        &curves_pts
            .iter()
            .map(|(label, pts)| Curve {
                label,
                points: pts,
            })
            .collect::<Vec<_>>(),
        true,
    )?;
    let _ = explorer::laser_margin(0.0, 0.0);
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs, out_dir: &Path) -> Result<()> {
    let mut anchors = Vec::new();
    for spec in &args.anchors {
        let (theta, lambda) = spec
            .split_once(':')
            .with_context(|| format!("anchor `{spec}` must be theta_deg:lambda_nm"))?;
        anchors.push((
            theta
                .trim()
                .parse::<f64>()
                .with_context(|| format!("bad anchor angle in `{spec}`"))?,
            lambda
                .trim()
                .parse::<f64>()
                .with_context(|| format!("bad anchor wavelength in `{spec}`"))?,
        ));
    }
    let n_eff = calibrate_n_eff(&anchors, args.edge)?;
    io::write_json(
        &out_dir.join(format!("{}.json", args.out)),
        &serde_json::json!({
            "n_eff": n_eff,
            "edge_nm": args.edge,
            "anchors": anchors.iter().map(|(t, l)| serde_json::json!([t, l])).collect::<Vec<_>>(),
        }),
    )?;
    println!("n_eff = {}", io::fmt(n_eff));
    Ok(())
}

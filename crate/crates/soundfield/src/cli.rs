//! Command-line interface: argument parsing, optional JSON config files
//! (flags override file values), and report writing.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::arrays::ArraySpec;
use crate::benchmarks::{self, ArrayKind, CaseConfig, CaseId, GridPoint, Profile, SummaryRow};
use crate::directivity::DirectivityPolynomial;
use crate::error::{Error, Result};
use crate::estimators::AveWeight;
use crate::wavefield::{BandSpec, Medium};

#[derive(Debug, Parser)]
#[command(
    name = "soundfield",
    version,
    about = "Microphone-array sound-field simulation and diffuseness estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single plane wave over a direction grid.
    Case1(RunArgs),
    /// Beam plus diffuse mixture over an energy-ratio grid.
    Case2(RunArgs),
    /// Two-wave interference over a separation-angle sweep.
    Case3(RunArgs),
    /// Mix two measured impulse responses at prescribed energy ratios.
    Irmix(IrmixArgs),
    /// Export an array layout and its sensor directions.
    Layout(LayoutArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Ci,
    Paper,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Profile {
        match p {
            ProfileArg::Ci => Profile::Ci,
            ProfileArg::Paper => Profile::Paper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AveWeightArg {
    VelocitySquared,
    Energy,
    IntensityMagnitude,
}

impl From<AveWeightArg> for AveWeight {
    fn from(w: AveWeightArg) -> AveWeight {
        match w {
            AveWeightArg::VelocitySquared => AveWeight::VelocitySquared,
            AveWeightArg::Energy => AveWeight::Energy,
            AveWeightArg::IntensityMagnitude => AveWeight::IntensityMagnitude,
        }
    }
}

/// Flags shared by the three benchmark cases.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Array name: afmt, fibo64, or tf24.
    #[arg(long)]
    pub array: Option<String>,
    /// Array layout JSON exported by `layout` (alternative to --array).
    #[arg(long, conflicts_with = "array")]
    pub array_file: Option<PathBuf>,
    /// Comma-separated octave band centers in Hz (default: 63..16000).
    #[arg(long, value_delimiter = ',')]
    pub bands: Option<Vec<f64>>,
    /// Scale preset: ci or paper (default paper).
    #[arg(long)]
    pub profile: Option<ProfileArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: results/<case>_<array>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker thread count (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON run configuration; flags override file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directivity table `band_hz, a0..a8` replacing the array's model.
    #[arg(long)]
    pub directivity: Option<PathBuf>,
    /// Medium density rho0 (kg/m^3, default 1.21).
    #[arg(long)]
    pub density: Option<f64>,
    /// Medium sound speed c (m/s, default 343).
    #[arg(long)]
    pub sound_speed: Option<f64>,
    /// Tone scenes per band (default 100).
    #[arg(long)]
    pub tones: Option<usize>,
    /// Rays per component for case 2 and the whitener reference.
    #[arg(long)]
    pub rays: Option<usize>,
    /// Case 2 energy-ratio step (default 0.05).
    #[arg(long)]
    pub eta_step: Option<f64>,
    /// Case 3 realizations per angle.
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Case 3 separation-angle step in degrees (default 5).
    #[arg(long)]
    pub angle_step: Option<f64>,
    /// Case 1 grid as AZxZEN, e.g. 72x35.
    #[arg(long)]
    pub grid: Option<String>,
    /// Directional-average weight law (default velocity-squared).
    #[arg(long)]
    pub ave_weight: Option<AveWeightArg>,
}

/// Optional JSON configuration file; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub array: Option<String>,
    pub array_file: Option<PathBuf>,
    pub bands: Option<Vec<f64>>,
    pub profile: Option<Profile>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub directivity: Option<PathBuf>,
    pub density: Option<f64>,
    pub sound_speed: Option<f64>,
    pub tones: Option<usize>,
    pub rays: Option<usize>,
    pub eta_step: Option<f64>,
    pub realizations: Option<usize>,
    pub angle_step: Option<f64>,
    pub grid_azimuths: Option<usize>,
    pub grid_zeniths: Option<usize>,
    pub ave_weight: Option<AveWeight>,
}

#[derive(Debug, Args)]
pub struct IrmixArgs {
    /// WAV with the anechoic ("beam") response.
    #[arg(long)]
    pub beam: PathBuf,
    /// WAV with the reverberant ("diffuse") response.
    #[arg(long)]
    pub diffuse: PathBuf,
    /// Array name matching the channel layout: afmt or tf24 (or fibo64).
    #[arg(long)]
    pub array: Option<String>,
    #[arg(long, conflicts_with = "array")]
    pub array_file: Option<PathBuf>,
    /// Energy-ratio grid start:end:step (default 0:1:0.1).
    #[arg(long, default_value = "0:1:0.1")]
    pub eta: String,
    /// Comma-separated band centers (default: all bands below Nyquist).
    #[arg(long, value_delimiter = ',')]
    pub bands: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub sound_speed: Option<f64>,
    #[arg(long)]
    pub ave_weight: Option<AveWeightArg>,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    /// Array name: afmt, fibo64, or tf24.
    #[arg(long)]
    pub array: String,
    /// Write the layout JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also export sensor orientations as CSV rows x,y,z.
    #[arg(long)]
    pub directions_csv: Option<PathBuf>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (a, z) = s
        .split_once('x')
        .ok_or_else(|| Error::Config(format!("grid '{s}' must be AZxZEN, e.g. 72x35")))?;
    let az = a
        .parse()
        .map_err(|_| Error::Config(format!("bad azimuth count '{a}'")))?;
    let zen = z
        .parse()
        .map_err(|_| Error::Config(format!("bad zenith count '{z}'")))?;
    Ok((az, zen))
}

fn resolve_array(
    name: Option<&str>,
    file: Option<&Path>,
    directivity: Option<&Path>,
) -> Result<ArraySpec> {
    let mut spec = match (name, file) {
        (_, Some(path)) => ArraySpec::from_json_str(&std::fs::read_to_string(path)?)?,
        (Some(n), None) => n.parse::<ArrayKind>()?.make(),
        (None, None) => {
            return Err(Error::Config(
                "no array selected: pass --array or --array-file".into(),
            ))
        }
    };
    if let Some(path) = directivity {
        let table = DirectivityPolynomial::from_table(&std::fs::read_to_string(path)?)?;
        spec.directivities = vec![table];
        for s in spec.sensors.iter_mut() {
            s.directivity = 0;
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn validate_bands(bands: &[f64]) -> Result<()> {
    for &b in bands {
        BandSpec::new(b)?;
    }
    if bands.is_empty() {
        return Err(Error::Config("band list is empty".into()));
    }
    Ok(())
}

/// Merge flags over the optional config file into a run configuration.
pub fn parse_config(case: CaseId, args: &RunArgs) -> Result<(CaseConfig, PathBuf, Option<usize>)> {
    let file = load_file_config(args.config.as_deref())?;
    let profile: Profile = args
        .profile
        .map(Profile::from)
        .or(file.profile)
        .unwrap_or_default();
    let array = resolve_array(
        args.array.as_deref().or(file.array.as_deref()),
        args.array_file.as_deref().or(file.array_file.as_deref()),
        args.directivity.as_deref().or(file.directivity.as_deref()),
    )?;
    let array_name = array.name.clone();
    let mut cfg = CaseConfig::new(case, array, profile);
    if let Some(bands) = args.bands.clone().or(file.bands.clone()) {
        validate_bands(&bands)?;
        cfg.bands = bands;
    }
    cfg.seed = args.seed.or(file.seed).unwrap_or(0);
    if let Some(d) = args.density.or(file.density) {
        cfg.medium.density = d;
    }
    if let Some(c) = args.sound_speed.or(file.sound_speed) {
        cfg.medium.sound_speed = c;
    }
    if cfg.medium.density <= 0.0 || cfg.medium.sound_speed <= 0.0 {
        return Err(Error::Config("medium parameters must be positive".into()));
    }
    if let Some(t) = args.tones.or(file.tones) {
        cfg.tones = t;
    }
    if let Some(r) = args.rays.or(file.rays) {
        cfg.rays = r;
    }
    if let Some(e) = args.eta_step.or(file.eta_step) {
        cfg.eta_step = e;
    }
    if let Some(r) = args.realizations.or(file.realizations) {
        cfg.realizations = r;
    }
    if let Some(a) = args.angle_step.or(file.angle_step) {
        cfg.angle_step_deg = a;
    }
    if let Some(g) = &args.grid {
        let (az, zen) = parse_grid(g)?;
        cfg.grid_azimuths = az;
        cfg.grid_zeniths = zen;
    } else {
        if let Some(az) = file.grid_azimuths {
            cfg.grid_azimuths = az;
        }
        if let Some(zen) = file.grid_zeniths {
            cfg.grid_zeniths = zen;
        }
    }
    if let Some(w) = args.ave_weight.map(AveWeight::from).or(file.ave_weight) {
        cfg.ave_weight = w;
    }
    let out = args
        .out
        .clone()
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("results/{}_{array_name}", case.label())));
    Ok((cfg, out, args.jobs.or(file.jobs)))
}

/// Parse an energy-ratio grid `start:end:step`.
pub fn parse_eta_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("eta grid '{s}' must be start:end:step")));
    }
    let parse = |p: &str| -> Result<f64> {
        p.parse()
            .map_err(|_| Error::Config(format!("bad number '{p}' in eta grid")))
    };
    let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step <= 0.0 || end < start || !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) {
        return Err(Error::Config(format!("degenerate eta grid '{s}'")));
    }
    let mut etas = Vec::new();
    let mut v = start;
    while v <= end + 1e-9 {
        etas.push(v.min(end));
        v += step;
    }
    Ok(etas)
}

fn run_in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

#[derive(Debug, Serialize)]
struct IrmixEcho {
    command: &'static str,
    beam: PathBuf,
    diffuse: PathBuf,
    array: String,
    bands: Vec<f64>,
    etas: Vec<f64>,
    medium: Medium,
    ave_weight: AveWeight,
    sample_rate: u32,
}

fn run_irmix(args: &IrmixArgs) -> Result<PathBuf> {
    let spec = resolve_array(args.array.as_deref(), args.array_file.as_deref(), None)?;
    let mut medium = Medium::default();
    if let Some(d) = args.density {
        medium.density = d;
    }
    if let Some(c) = args.sound_speed {
        medium.sound_speed = c;
    }
    let pipeline = benchmarks::Pipeline::new(spec.clone(), medium)?;
    let beam = crate::irtools::load_wav(&args.beam)?;
    let diffuse = crate::irtools::load_wav(&args.diffuse)?;
    for (label, ir) in [("beam", &beam), ("diffuse", &diffuse)] {
        if ir.channel_count() != spec.sensors.len() {
            return Err(Error::Domain(format!(
                "{label} file has {} channels, array '{}' needs {}",
                ir.channel_count(),
                spec.name,
                spec.sensors.len()
            )));
        }
    }
    let etas = parse_eta_range(&args.eta)?;
    let nyquist = beam.sample_rate as f64 / 2.0;
    let bands: Vec<f64> = match &args.bands {
        Some(list) => {
            validate_bands(list)?;
            list.clone()
        }
        None => crate::wavefield::OCTAVE_CENTERS
            .iter()
            .copied()
            .filter(|&fc| BandSpec::new(fc).map(|b| b.edges().1 <= nyquist).unwrap_or(false))
            .collect(),
    };
    let ave_weight = args.ave_weight.map(AveWeight::from).unwrap_or_default();

    let mut rows = Vec::new();
    for &fc in &bands {
        let band = BandSpec::new(fc)?;
        for &eta in &etas {
            let spectra = crate::irtools::mix_by_ratio(&beam, &diffuse, eta, &band)?;
            let mut acc = benchmarks::BandAccumulator::new(false);
            for bin in 0..spectra.bin_count() {
                acc.push(&pipeline.snapshot_quantities(&spectra.snapshot(bin))?);
            }
            let indices = acc.finalize(&pipeline, ave_weight, None)?;
            rows.push(indices.to_result_row(fc, GridPoint::Eta(eta), None));
        }
    }
    // linearity summary per band and index, as in case 2
    let scalar_name = pipeline.scalar_index_name();
    let mut summary = Vec::new();
    for &fc in &bands {
        for (index, value) in [
            (
                scalar_name.to_string(),
                (&|r: &benchmarks::ResultRow| r.psi_ie.or(r.psi_ave).unwrap_or(f64::NAN))
                    as &dyn Fn(&benchmarks::ResultRow) -> f64,
            ),
            ("psi_pr".to_string(), &|r| r.psi_pr),
            ("psi_com".to_string(), &|r| r.psi_com),
        ] {
            let mut max_abs_err = 0.0_f64;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for r in rows.iter().filter(|r| r.band_hz == fc) {
                if let GridPoint::Eta(eta) = r.grid {
                    let v = value(r);
                    max_abs_err = max_abs_err.max((v - (1.0 - eta)).abs());
                    xs.push(1.0 - eta);
                    ys.push(v);
                }
            }
            summary.push(SummaryRow::LinearityError {
                band_hz: fc,
                index,
                max_abs_err,
                pearson_r: benchmarks::pearson(&xs, &ys),
            });
        }
    }
    let echo = IrmixEcho {
        command: "irmix",
        beam: args.beam.clone(),
        diffuse: args.diffuse.clone(),
        array: spec.name.clone(),
        bands,
        etas,
        medium,
        ave_weight,
        sample_rate: beam.sample_rate,
    };
    let result = benchmarks::CaseResult {
        case: CaseId::Irmix,
        array: spec.name.clone(),
        rows,
        summary,
        config_echo: serde_json::to_value(&echo)?,
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("results/irmix_{}", spec.name)));
    crate::report::write_reports(&out, &result)?;
    Ok(out)
}

fn run_layout(args: &LayoutArgs) -> Result<()> {
    let spec = resolve_array(Some(&args.array), None, None)?;
    if let Some(out) = &args.out {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(out, spec.to_json_string()?)?;
        println!("wrote {}", out.display());
    } else {
        println!("{}", spec.to_json_string()?);
    }
    if let Some(csv) = &args.directions_csv {
        let dirs: Vec<_> = spec.sensors.iter().map(|s| s.orientation).collect();
        std::fs::write(csv, crate::spatial::directions_to_csv(&dirs))?;
        println!("wrote {}", csv.display());
    }
    Ok(())
}

/// Execute a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Case1(args) => run_case_command(CaseId::Case1, &args),
        Command::Case2(args) => run_case_command(CaseId::Case2, &args),
        Command::Case3(args) => run_case_command(CaseId::Case3, &args),
        Command::Irmix(args) => {
            let out = run_irmix(&args)?;
            println!("wrote reports to {}", out.display());
            Ok(())
        }
        Command::Layout(args) => run_layout(&args),
    }
}

fn run_case_command(case: CaseId, args: &RunArgs) -> Result<()> {
    let (cfg, out, jobs) = parse_config(case, args)?;
    let result = run_in_pool(jobs, || benchmarks::run(&cfg))?;
    crate::report::write_reports(&out, &result)?;
    println!(
        "wrote {} rows to {}",
        result.rows.len(),
        out.join("results.csv").display()
    );
    Ok(())
}

//! The `cloudlat` command line.
//!
//! ```text
//! cloudlat measure  --regions FILE --client-id ID [--reps N --warmup N --timeout S --parallelism N] --out FILE
//! cloudlat simulate --truth FILE --scenarios FILE [--noise-sigma X --seed N] --out FILE
//! cloudlat fit      --measurements FILE --paths FILE [--b-ds X --b-c X --fit-core] --out FILE
//! cloudlat predict  --params FILE --bytes N --i-lan M --i-sub M --n-relays K
//! cloudlat heatmap  --measurements FILE --regions FILE [--ref CITY --agg median|mean --scale log|linear] --csv FILE [--svg FILE]
//! cloudlat report   --measurements FILE --regions FILE (--asymmetry | --linearity --continent NAME) --out FILE
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 fit failure,
//! 4 campaign finished with every probe failed.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};

use crate::analysis::{self, Aggregator, ColorScale};
use crate::fitting::{self, FitOptions, FitResult, PathTable};
use crate::geodesy::City;
use crate::model::{self, DataSize, ModelParams, PathSpec, DEFAULT_B_DS};
use crate::probe::{self, ProbeConfig, Region, Status};
use crate::synth::{self, NoiseSpec, Scenario};
use crate::Error;

pub const FORMAT_VERSION: u32 = 1;
pub const PATHS_HEADER: [&str; 5] = ["client_id", "server_id", "i_lan_m", "i_sub_m", "n_relays"];
pub const SCENARIOS_HEADER: [&str; 6] = ["client_id", "server_id", "i_lan_m", "i_sub_m", "n_relays", "bytes"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Io = 2,
    FitFailure = 3,
    AllProbesFailed = 4,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cloudlat",
    version,
    about = "Cloud outbound latency measurement and modeling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggArg {
    Median,
    Mean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Log,
    Linear,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time downloads from every server region and append the records
    Measure {
        #[arg(long)]
        regions: PathBuf,
        #[arg(long)]
        client_id: String,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        /// Seconds per download attempt
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long, default_value_t = 2)]
        retries: usize,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic measurements from known parameters
    Simulate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = synth::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit model coefficients to measurements
    Fit {
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        paths: PathBuf,
        #[arg(long, default_value_t = DEFAULT_B_DS)]
        b_ds: f64,
        #[arg(long)]
        b_c: Option<f64>,
        #[arg(long)]
        fit_core: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the predicted latency in milliseconds
    Predict {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        bytes: u64,
        #[arg(long)]
        i_lan: f64,
        #[arg(long)]
        i_sub: f64,
        #[arg(long)]
        n_relays: u32,
    },
    /// Render the distance-sorted latency matrix as CSV and SVG
    Heatmap {
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        regions: PathBuf,
        #[arg(long = "ref", default_value = "Ashburn")]
        reference: String,
        #[arg(long, value_enum, default_value = "median")]
        agg: AggArg,
        #[arg(long, value_enum, default_value = "log")]
        scale: ScaleArg,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Asymmetry or intra-continent linearity report
    #[command(group(ArgGroup::new("kind").required(true).args(["asymmetry", "linearity"])))]
    Report {
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        regions: PathBuf,
        #[arg(long)]
        asymmetry: bool,
        #[arg(long, requires = "continent")]
        linearity: bool,
        #[arg(long)]
        continent: Option<String>,
        #[arg(long, value_enum, default_value = "median")]
        agg: AggArg,
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: ExitCode,
    message: String,
}

impl Failure {
    fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure::new(ExitCode::Usage, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) => ExitCode::Usage,
            _ => ExitCode::Io,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = std::result::Result<ExitCode, Failure>;

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    ExitCode::Success
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    ExitCode::Usage
                }
            };
        }
    };

    let result = match cli.command {
        Command::Measure {
            regions,
            client_id,
            reps,
            warmup,
            timeout,
            retries,
            parallelism,
            out,
        } => {
            if !(timeout > 0.0 && timeout.is_finite()) {
                Err(Failure::usage("--timeout must be a positive number of seconds"))
            } else {
                let config = ProbeConfig {
                    repetitions: reps,
                    warmup,
                    timeout: Duration::from_secs_f64(timeout),
                    max_retries: retries,
                    parallelism,
                };
                measure(&regions, &client_id, &config, &out, stdout)
            }
        }
        Command::Simulate {
            truth,
            scenarios,
            noise_sigma,
            seed,
            samples,
            out,
        } => simulate(&truth, &scenarios, noise_sigma, seed, samples, &out),
        Command::Fit {
            measurements,
            paths,
            b_ds,
            b_c,
            fit_core,
            out,
        } => {
            let options = FitOptions {
                fit_core,
                b_ds,
                b_c,
                ..FitOptions::default()
            };
            fit(&measurements, &paths, &options, &out, stderr)
        }
        Command::Predict {
            params,
            bytes,
            i_lan,
            i_sub,
            n_relays,
        } => predict(&params, bytes, i_lan, i_sub, n_relays, stdout),
        Command::Heatmap {
            measurements,
            regions,
            reference,
            agg,
            scale,
            csv,
            svg,
        } => {
            let scale = match scale {
                ScaleArg::Log => ColorScale::Log,
                ScaleArg::Linear => ColorScale::Linear,
            };
            heatmap(
                &measurements,
                &regions,
                &reference,
                agg.into(),
                scale,
                &csv,
                svg.as_deref(),
            )
        }
        Command::Report {
            measurements,
            regions,
            asymmetry: _,
            linearity,
            continent,
            agg,
            out,
        } => {
            let continent = if linearity { continent } else { None };
            report(&measurements, &regions, continent.as_deref(), agg.into(), &out)
        }
    };

    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "cloudlat: {}", f.message);
            f.code
        }
    }
}

impl From<AggArg> for Aggregator {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Median => Aggregator::Median,
            AggArg::Mean => Aggregator::Mean,
        }
    }
}

fn measure(
    regions_path: &Path,
    client_id: &str,
    config: &ProbeConfig,
    out: &Path,
    stdout: &mut dyn Write,
) -> CmdResult {
    config.validate()?;
    let regions = probe::load_regions(regions_path)?;
    if !regions.iter().any(|r| r.id == client_id) {
        return Err(Failure::usage(format!(
            "client id `{client_id}` not found in {}",
            regions_path.display()
        )));
    }
    let servers: Vec<Region> = regions
        .into_iter()
        .filter(|r| r.id != client_id && r.endpoint_url().is_some())
        .collect();

    let records = probe::run_campaign(client_id, &servers, config)?;
    probe::persist_records(&records, out)?;

    for r in &records {
        let median = r
            .representative_ms()
            .map(|m| format!("{m:.3} ms"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(stdout, "{} -> {}: {:?} {}", r.client_id, r.server_id, r.status, median);
    }
    if !records.is_empty() && records.iter().all(|r| r.status == Status::Failed) {
        return Err(Failure::new(ExitCode::AllProbesFailed, "every probe failed"));
    }
    Ok(ExitCode::Success)
}

/// Parameters document, shared by `fit` output, `simulate --truth` and
/// `predict --params`. Infinite speeds and bandwidths are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    #[serde(default = "format_version")]
    pub format_version: u32,
    #[serde(deserialize_with = "null_as_infinity")]
    pub s_lan: f64,
    #[serde(deserialize_with = "null_as_infinity")]
    pub s_sub: f64,
    pub rho: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(deserialize_with = "null_as_infinity")]
    pub b_ds: f64,
    #[serde(deserialize_with = "null_as_infinity")]
    pub b_c: f64,
    #[serde(default)]
    pub rmse: Option<f64>,
    #[serde(default)]
    pub r2: Option<f64>,
    #[serde(default)]
    pub n_records: Option<usize>,
    #[serde(default)]
    pub rank_deficient: Option<bool>,
    #[serde(default)]
    pub notes: Vec<String>,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

fn null_as_infinity<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl ParamsDocument {
    pub fn from_params(p: &ModelParams) -> Self {
        ParamsDocument {
            format_version: FORMAT_VERSION,
            s_lan: p.s_lan(),
            s_sub: p.s_sub(),
            rho: p.rho(),
            c0: p.c0(),
            b_ds: p.b_ds(),
            b_c: p.b_c(),
            rmse: None,
            r2: None,
            n_records: None,
            rank_deficient: None,
            notes: Vec::new(),
        }
    }

    pub fn from_fit(fit: &FitResult) -> Self {
        ParamsDocument {
            rmse: Some(fit.rmse),
            r2: fit.r2,
            n_records: Some(fit.n_records),
            rank_deficient: Some(fit.rank_deficient),
            notes: fit.notes.clone(),
            ..ParamsDocument::from_params(&fit.params)
        }
    }

    pub fn params(&self) -> crate::Result<ModelParams> {
        ModelParams::new(self.b_ds, self.b_c, self.s_lan, self.s_sub, self.rho)?.with_c0(self.c0)
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("params document serializes");
        text.push('\n');
        text
    }
}

fn load_params(path: &Path) -> std::result::Result<ModelParams, Failure> {
    ParamsDocument::load(path)?
        .params()
        .map_err(|e| Failure::new(ExitCode::Io, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> crate::Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_reader(path: &Path, expected: &[&str]) -> crate::Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers().map_err(|e| Error::Parse {
        path: path.into(),
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("header must be `{}`", expected.join(",")),
        });
    }
    Ok(reader)
}

#[derive(Debug, Deserialize)]
struct PathRow {
    client_id: String,
    server_id: String,
    i_lan_m: f64,
    i_sub_m: f64,
    n_relays: u32,
    #[serde(default)]
    bytes: Option<u64>,
}

fn read_path_rows(path: &Path, header: &[&str]) -> crate::Result<Vec<(PathRow, PathSpec)>> {
    let mut reader = csv_reader(path, header)?;
    let mut rows = Vec::new();
    for (idx, row) in reader.deserialize::<PathRow>().enumerate() {
        let line = idx + 2;
        let parse = |message: String| Error::Parse {
            path: path.into(),
            line,
            message,
        };
        let row = row.map_err(|e| parse(e.to_string()))?;
        let spec = PathSpec::new(row.i_lan_m, row.i_sub_m, row.n_relays).map_err(|e| parse(e.to_string()))?;
        rows.push((row, spec));
    }
    Ok(rows)
}

/// Reads a paths file (`client_id,server_id,i_lan_m,i_sub_m,n_relays`).
pub fn load_paths(path: &Path) -> crate::Result<PathTable> {
    let mut table = HashMap::new();
    for (row, spec) in read_path_rows(path, &PATHS_HEADER)? {
        let key = (row.client_id, row.server_id);
        if let Some(prev) = table.insert(key.clone(), spec) {
            if prev != spec {
                return Err(Error::Validation(format!(
                    "{}: conflicting paths for {} -> {}",
                    path.display(),
                    key.0,
                    key.1
                )));
            }
        }
    }
    Ok(table)
}

/// Reads a scenarios file: the paths columns followed by `bytes`.
pub fn load_scenarios(path: &Path) -> crate::Result<Vec<Scenario>> {
    Ok(read_path_rows(path, &SCENARIOS_HEADER)?
        .into_iter()
        .map(|(row, spec)| Scenario {
            client_id: row.client_id,
            server_id: row.server_id,
            path: spec,
            size: DataSize(row.bytes.expect("bytes column checked by header")),
        })
        .collect())
}

#[derive(Serialize)]
struct SimulationMeta<'a> {
    format_version: u32,
    generator: &'a str,
    seed: u64,
    noise: &'a str,
    noise_sigma: f64,
    samples: usize,
}

fn simulate(truth: &Path, scenarios: &Path, sigma: f64, seed: u64, samples: usize, out: &Path) -> CmdResult {
    let truth = load_params(truth)?;
    let scenarios = load_scenarios(scenarios)?;
    let noise = if sigma == 0.0 {
        NoiseSpec {
            seed,
            ..NoiseSpec::none()
        }
    } else {
        NoiseSpec::lognormal(sigma, seed)?
    };
    let records = synth::generate(&truth, &scenarios, &noise, samples)?;

    let mut buf = Vec::new();
    probe::write_records(&mut buf, &records).map_err(|e| Error::io(out, e))?;
    write_file(out, &buf)?;

    let meta = SimulationMeta {
        format_version: FORMAT_VERSION,
        generator: synth::RNG_ALGORITHM,
        seed,
        noise: if sigma == 0.0 {
            "none"
        } else {
            "multiplicative-lognormal"
        },
        noise_sigma: sigma,
        samples,
    };
    let mut meta_path = out.as_os_str().to_owned();
    meta_path.push(".meta.json");
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    write_file(Path::new(&meta_path), text.as_bytes())?;
    Ok(ExitCode::Success)
}

fn fit(measurements: &Path, paths: &Path, options: &FitOptions, out: &Path, stderr: &mut dyn Write) -> CmdResult {
    if !options.fit_core && options.b_c.is_none() {
        return Err(Failure::usage("--b-c is required unless --fit-core is given"));
    }
    let records = probe::load_records(measurements)?;
    let paths = load_paths(paths)?;
    let design = fitting::build_design_matrix(&records, &paths, options)?;
    if design.rejected > 0 {
        let _ = writeln!(
            stderr,
            "cloudlat: skipped {} records without a usable latency",
            design.rejected
        );
    }
    let result = fitting::fit(&design.rows, options).map_err(|e| match e {
        Error::Degenerate(m) => Failure::new(ExitCode::FitFailure, m),
        other => other.into(),
    })?;
    write_file(out, ParamsDocument::from_fit(&result).to_json().as_bytes())?;
    Ok(ExitCode::Success)
}

fn predict(params: &Path, bytes: u64, i_lan: f64, i_sub: f64, n_relays: u32, stdout: &mut dyn Write) -> CmdResult {
    let params = load_params(params)?;
    let path = PathSpec::new(i_lan, i_sub, n_relays)?;
    let seconds = model::predict(DataSize(bytes), &path, &params);
    let _ = writeln!(stdout, "{:.3}", seconds * 1e3);
    Ok(ExitCode::Success)
}

fn resolve_reference(name: &str, regions: &[Region]) -> std::result::Result<City, Failure> {
    if let Some(r) = regions.iter().find(|r| r.city.name == name) {
        return Ok(r.city.clone());
    }
    if name.eq_ignore_ascii_case("ashburn") {
        return Ok(City::ashburn());
    }
    Err(Failure::usage(format!(
        "reference city `{name}` not found among region cities"
    )))
}

fn load_matrix(
    measurements: &Path,
    regions_path: &Path,
    reference: Option<&str>,
    agg: Aggregator,
) -> std::result::Result<(analysis::LatencyMatrix, Vec<Region>), Failure> {
    let records = probe::load_records(measurements)?;
    let regions = probe::load_regions(regions_path)?;
    let reference = resolve_reference(reference.unwrap_or("Ashburn"), &regions)?;
    let matrix = analysis::build_matrix(&records, &regions, &reference, agg)?;
    Ok((matrix, regions))
}

fn heatmap(
    measurements: &Path,
    regions: &Path,
    reference: &str,
    agg: Aggregator,
    scale: ColorScale,
    csv: &Path,
    svg: Option<&Path>,
) -> CmdResult {
    let (matrix, _) = load_matrix(measurements, regions, Some(reference), agg)?;
    let mut buf = Vec::new();
    analysis::emit_heatmap_csv(&matrix, &mut buf)?;
    write_file(csv, &buf)?;
    if let Some(svg) = svg {
        let file = File::create(svg).map_err(|e| Error::io(svg, e))?;
        analysis::emit_heatmap_svg(&matrix, BufWriter::new(file), scale).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(svg, source),
            other => other,
        })?;
    }
    Ok(ExitCode::Success)
}

#[derive(Serialize)]
struct AsymmetryDocument {
    format_version: u32,
    kind: &'static str,
    entries: Vec<analysis::AsymmetryEntry>,
}

#[derive(Serialize)]
struct LinearityDocument<'a> {
    format_version: u32,
    kind: &'static str,
    continent: &'a str,
    #[serde(flatten)]
    fit: analysis::LinearFitReport,
}

fn report(measurements: &Path, regions: &Path, continent: Option<&str>, agg: Aggregator, out: &Path) -> CmdResult {
    let (matrix, regions) = load_matrix(measurements, regions, None, agg)?;
    let mut text = match continent {
        None => serde_json::to_string_pretty(&AsymmetryDocument {
            format_version: FORMAT_VERSION,
            kind: "asymmetry",
            entries: analysis::asymmetry_report(&matrix),
        }),
        Some(continent) => {
            let points = analysis::continent_points(&matrix, &regions, continent)?;
            let fit = analysis::linearity_report(&points)
                .map_err(|e| Failure::new(ExitCode::Io, format!("continent `{continent}`: {e}")))?;
            serde_json::to_string_pretty(&LinearityDocument {
                format_version: FORMAT_VERSION,
                kind: "linearity",
                continent,
                fit,
            })
        }
    }
    .expect("report serializes");
    text.push('\n');
    write_file(out, text.as_bytes())?;
    Ok(ExitCode::Success)
}

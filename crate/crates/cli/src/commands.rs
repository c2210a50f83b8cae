//! Subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use twinbeam_core::counting::{
    bin_counts, bin_width_guard, bin_width_sweep, bootstrap_q, CountingError, MandelResult,
};
use twinbeam_core::physmodel::{
    coincidence_profile, FieldGeometry, ModelConfig, ModelError, ProfileSummary, SpectralGrid,
    SusceptibilityModel, TemporalDensity, VelocityQuadrature,
};
use twinbeam_core::squeezing::{
    difference_noise_spectrum, expected_ratio_db, simulate_snl_trace, simulate_twin_traces,
    IntensityTrace, SqueezeError,
};
use twinbeam_core::synth::{detect, generate, DelayProfile, DetectorSpec, SourceSpec, SynthError};
use twinbeam_core::timetags::io::FormatError;
use twinbeam_core::timetags::{
    coincidence_histogram_parallel, parse_csv, parse_ttag, start_stop_histogram, write_csv,
    write_histogram_csv, write_ttag, HistogramSpec, ParsedStreams, TagError,
};

const EXIT_VALIDATION: i32 = 2;
const EXIT_IO: i32 = 3;
const EXIT_CONVERGENCE: i32 = 4;

pub struct CliError {
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    fn validation(msg: impl Into<String>) -> Self {
        CliError {
            exit_code: EXIT_VALIDATION,
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            exit_code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError {
            exit_code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let code = match e {
            ModelError::QuadratureNotConverged { .. } | ModelError::EdgeLeakage { .. } => {
                EXIT_CONVERGENCE
            }
            _ => EXIT_VALIDATION,
        };
        CliError {
            exit_code: code,
            message: e.to_string(),
        }
    }
}

impl From<TagError> for CliError {
    fn from(e: TagError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<CountingError> for CliError {
    fn from(e: CountingError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<SqueezeError> for CliError {
    fn from(e: SqueezeError) -> Self {
        CliError::validation(e.to_string())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::validation(format!("serialize {}: {e}", path.display())))?;
    writeln!(w)?;
    Ok(())
}

// ---------------------------------------------------------------- model

#[derive(Args)]
pub struct ModelArgs {
    /// Parameter file (JSON). See --print-default-params for the schema.
    #[arg(long, required_unless_present = "print_default_params")]
    params: Option<PathBuf>,

    /// Print the default parameter file to stdout and exit.
    #[arg(long)]
    print_default_params: bool,

    /// Output CSV with columns tau_ns,counts.
    #[arg(long, default_value = "profile.csv")]
    out_csv: PathBuf,

    /// Output JSON summary (peak, plateau width, side features).
    #[arg(long)]
    out_summary: Option<PathBuf>,

    /// Spectral grid size (power of two).
    #[arg(long, default_value_t = 16384)]
    grid_points: usize,

    /// Spectral grid span in GHz (cyclic).
    #[arg(long, default_value_t = 16.0)]
    grid_span_ghz: f64,

    /// Gauss-Hermite node count for velocity averages.
    #[arg(long, default_value_t = 64)]
    quadrature_nodes: usize,
}

#[derive(Serialize)]
struct ModelSummaryOut {
    schema_version: u32,
    #[serde(flatten)]
    summary: ProfileSummary,
    total_counts: f64,
}

pub fn run_model(args: ModelArgs) -> Result<(), CliError> {
    if args.print_default_params {
        let cfg = ModelConfig::default();
        println!("{}", serde_json::to_string_pretty(&cfg).unwrap());
        return Ok(());
    }
    let path = args.params.expect("clap enforces presence");
    let text = std::fs::read_to_string(&path)?;
    let cfg = ModelConfig::parse(&text)?;
    let medium = cfg.medium();
    let geometry = FieldGeometry::for_medium(&medium);
    let model = SusceptibilityModel::new(medium, geometry)?;
    let grid = SpectralGrid::new(
        2.0 * std::f64::consts::PI * args.grid_span_ghz * 1e9,
        args.grid_points,
    )?;
    let quad = VelocityQuadrature::GaussHermite {
        nodes: args.quadrature_nodes,
    };
    let channels = cfg.channels();
    let hist = coincidence_profile(
        &model,
        &channels,
        cfg.beta,
        cfg.bin_ps * 1e-12,
        cfg.acquisition_s,
        cfg.window_ns * 1e-9,
        &grid,
        &quad,
    )?;

    let mut w = create(&args.out_csv)?;
    writeln!(w, "tau_ns,counts")?;
    for (i, c) in hist.counts.iter().enumerate() {
        writeln!(w, "{},{}", hist.bin_center(i) * 1e9, c)?;
    }

    if let Some(summary_path) = &args.out_summary {
        let summary = ProfileSummary::from_histogram(&hist, &channels);
        write_json(
            summary_path,
            &ModelSummaryOut {
                schema_version: 1,
                summary,
                total_counts: hist.counts.iter().sum(),
            },
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------- coincide

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    AllPairs,
    StartStop,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Auto,
    Csv,
    Ttag,
}

#[derive(Args)]
pub struct CoincideArgs {
    /// Input tag file (CSV or TTAG; sniffed when --format auto).
    #[arg(long)]
    input: PathBuf,

    /// Output histogram CSV (tau_ps,counts).
    #[arg(long, default_value = "histogram.csv")]
    out: PathBuf,

    /// Half-width of the delay window in ns.
    #[arg(long, default_value_t = 30.0)]
    window_ns: f64,

    /// Bin width in ps.
    #[arg(long, default_value_t = 250)]
    bin_ps: u64,

    /// Pair counting mode.
    #[arg(long, value_enum, default_value_t = ModeArg::AllPairs)]
    mode: ModeArg,

    /// Input format.
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
}

pub fn load_streams(path: &Path, format: FormatArg) -> Result<ParsedStreams, CliError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let is_ttag = match format {
        FormatArg::Ttag => true,
        FormatArg::Csv => false,
        FormatArg::Auto => bytes.len() >= 4 && &bytes[0..4] == b"TTAG",
    };
    let parsed = if is_ttag {
        parse_ttag(std::io::Cursor::new(bytes))?
    } else {
        parse_csv(BufReader::new(std::io::Cursor::new(bytes)))?
    };
    if parsed.out_of_order > 0 {
        eprintln!(
            "warning: {} out-of-order timestamps were sorted",
            parsed.out_of_order
        );
    }
    Ok(parsed)
}

pub fn run_coincide(args: CoincideArgs) -> Result<(), CliError> {
    let window_ps = (args.window_ns * 1000.0).round() as i64;
    let spec = HistogramSpec::symmetric(window_ps, args.bin_ps);
    let parsed = load_streams(&args.input, args.format)?;
    let hist = match args.mode {
        ModeArg::AllPairs => {
            coincidence_histogram_parallel(&parsed.probe, &parsed.conjugate, &spec)?
        }
        ModeArg::StartStop => start_stop_histogram(&parsed.probe, &parsed.conjugate, &spec)?,
    };
    let mut w = create(&args.out)?;
    write_histogram_csv(&mut w, &hist)?;
    Ok(())
}

// ---------------------------------------------------------------- mandel

#[derive(Args)]
pub struct MandelArgs {
    /// Input tag file (CSV or TTAG).
    #[arg(long)]
    input: PathBuf,

    /// Output JSON.
    #[arg(long, default_value = "mandel.json")]
    out: PathBuf,

    /// Counting bin width in ns.
    #[arg(long, default_value_t = 100.0)]
    bin_ns: f64,

    /// Bootstrap iterations.
    #[arg(long, default_value_t = 10_000)]
    iterations: u64,

    /// Bootstrap seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Bin-width sweep "lo:hi:step" in ns (overrides --bin-ns).
    #[arg(long)]
    sweep: Option<String>,

    /// Detector dead time in ns, for the bin-width guard warning.
    #[arg(long)]
    dead_time_ns: Option<f64>,

    /// Input format.
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
}

#[derive(Serialize)]
struct MandelEntry {
    bin_width_ns: f64,
    q: f64,
    q_std: Option<f64>,
    mean: f64,
    var: f64,
    n_bins: usize,
    iterations: u64,
    seed: u64,
}

#[derive(Serialize)]
struct MandelChannelOut {
    channel: u8,
    n_events: u64,
    results: Vec<MandelEntry>,
}

#[derive(Serialize)]
struct MandelOut {
    schema_version: u32,
    channels: Vec<MandelChannelOut>,
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::validation(format!(
            "sweep must be lo:hi:step, got {spec:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::validation(format!("non-numeric sweep field {p:?}")))
        })
        .collect::<Result<_, _>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    // NaN in any field fails this guard too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(step > 0.0) || !(hi >= lo) {
        return Err(CliError::validation("sweep needs lo <= hi and step > 0"));
    }
    let mut widths = Vec::new();
    let mut w = lo;
    while w <= hi + 1e-9 {
        widths.push(w);
        w += step;
    }
    Ok(widths)
}

fn entry(width_ns: f64, r: &MandelResult, seed: u64) -> MandelEntry {
    MandelEntry {
        bin_width_ns: width_ns,
        q: r.q,
        q_std: r.q_std,
        mean: r.mean,
        var: r.variance,
        n_bins: r.n_bins,
        iterations: r.iterations,
        seed,
    }
}

pub fn run_mandel(args: MandelArgs) -> Result<(), CliError> {
    let parsed = load_streams(&args.input, args.format)?;
    let widths_ns = match &args.sweep {
        Some(s) => parse_sweep(s)?,
        None => vec![args.bin_ns],
    };
    let widths_ps: Vec<u64> = widths_ns.iter().map(|w| (w * 1000.0).round() as u64).collect();
    let dead_ps = args.dead_time_ns.map(|d| (d * 1000.0).round() as u64);

    let mut channels = Vec::new();
    for stream in [&parsed.probe, &parsed.conjugate] {
        for &w in &widths_ps {
            for warn in bin_width_guard(stream, w, dead_ps) {
                eprintln!("warning: channel {}: {}", stream.channel().index(), warn);
            }
        }
        let results = if widths_ps.len() == 1 {
            let binned = bin_counts(stream, widths_ps[0])?;
            let r = bootstrap_q(&binned, args.iterations, args.seed)?;
            vec![entry(widths_ns[0], &r, args.seed)]
        } else {
            bin_width_sweep(stream, &widths_ps, args.iterations, args.seed)?
                .iter()
                .zip(&widths_ns)
                .map(|((_, r), &w)| entry(w, r, args.seed))
                .collect()
        };
        channels.push(MandelChannelOut {
            channel: stream.channel().index(),
            n_events: stream.len() as u64,
            results,
        });
    }
    write_json(
        &args.out,
        &MandelOut {
            schema_version: 1,
            channels,
        },
    )
}

// ---------------------------------------------------------------- simulate

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Coherent,
    TwinPairs,
    RenewalPairs,
    SpdcLike,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Source kind.
    #[arg(long, value_enum, default_value_t = KindArg::TwinPairs)]
    kind: KindArg,

    /// Pair rate (pairs/s), or per-channel rate for coherent sources.
    #[arg(long, default_value_t = 6e6)]
    rate: f64,

    /// Record duration in seconds.
    #[arg(long, default_value_t = 1.0)]
    duration_s: f64,

    /// Renewal shape parameter (>= 1) for renewal-pairs.
    #[arg(long, default_value_t = 2.0)]
    shape: f64,

    /// Delay profile: delta | gaussian:<sigma_ns> | dexp:<tau_ns> | csv:<path>.
    #[arg(long, default_value = "delta")]
    profile: String,

    /// Background rate on channel 0 (probe), events/s.
    #[arg(long, default_value_t = 0.0)]
    bg0: f64,

    /// Background rate on channel 1 (conjugate), events/s.
    #[arg(long, default_value_t = 0.0)]
    bg1: f64,

    /// Detector efficiency (both channels).
    #[arg(long, default_value_t = 1.0)]
    eta: f64,

    /// Detector dead time in ns.
    #[arg(long, default_value_t = 0.0)]
    dead_ns: f64,

    /// Detector Gaussian timing jitter in ps.
    #[arg(long, default_value_t = 0.0)]
    jitter_ps: f64,

    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output tag file.
    #[arg(long, default_value = "stream.ttag")]
    out: PathBuf,

    /// Truth-record JSON sidecar (defaults to <out>.truth.json).
    #[arg(long)]
    truth: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormatArg::Ttag)]
    format: OutFormatArg,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum OutFormatArg {
    Ttag,
    Csv,
}

fn parse_profile(spec: &str) -> Result<DelayProfile, CliError> {
    if spec == "delta" {
        return Ok(DelayProfile::Delta);
    }
    if let Some(rest) = spec.strip_prefix("gaussian:") {
        let sigma_ns: f64 = rest
            .parse()
            .map_err(|_| CliError::validation(format!("bad gaussian sigma {rest:?}")))?;
        return Ok(DelayProfile::Gaussian {
            sigma_s: sigma_ns * 1e-9,
        });
    }
    if let Some(rest) = spec.strip_prefix("dexp:") {
        let tau_ns: f64 = rest
            .parse()
            .map_err(|_| CliError::validation(format!("bad dexp tau {rest:?}")))?;
        return Ok(DelayProfile::DoubleExponential { tau_s: tau_ns * 1e-9 });
    }
    if let Some(path) = spec.strip_prefix("csv:") {
        let text = std::fs::read_to_string(path)?;
        let mut taus = Vec::new();
        let mut dens = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || (i == 0 && t.starts_with("tau_ns")) {
                continue;
            }
            let mut f = t.split(',');
            let tau: f64 = f
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| CliError::validation(format!("profile line {}: bad tau", i + 1)))?;
            let d: f64 = f
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| {
                    CliError::validation(format!("profile line {}: bad density", i + 1))
                })?;
            taus.push(tau * 1e-9);
            dens.push(d);
        }
        if taus.len() < 2 {
            return Err(CliError::validation("profile csv needs at least two rows"));
        }
        let dt = taus[1] - taus[0];
        for w in taus.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs() {
                return Err(CliError::validation("profile csv grid must be uniform"));
            }
        }
        return Ok(DelayProfile::Sampled(TemporalDensity::new(dt, dens)));
    }
    Err(CliError::validation(format!(
        "unknown profile {spec:?}; expected delta | gaussian:<sigma_ns> | dexp:<tau_ns> | csv:<path>"
    )))
}

#[derive(Serialize)]
struct SimulateTruthOut {
    schema_version: u32,
    #[serde(flatten)]
    truth: twinbeam_core::synth::TruthRecord,
    detector: DetectorSpec,
    format: &'static str,
}

pub fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let profile = parse_profile(&args.profile)?;
    let mut spec = match args.kind {
        KindArg::Coherent => SourceSpec::coherent(args.rate),
        KindArg::TwinPairs => SourceSpec::twin_pairs(args.rate, profile),
        KindArg::RenewalPairs => SourceSpec::renewal_pairs(args.rate, args.shape),
        KindArg::SpdcLike => SourceSpec::spdc_like(args.rate),
    };
    spec.background_rate_per_s = [args.bg0, args.bg1];
    let (probe, conjugate, truth) = generate(&spec, args.duration_s, args.seed)?;
    let detector = DetectorSpec {
        efficiency: args.eta,
        dead_time_ps: (args.dead_ns * 1000.0).round() as u64,
        gaussian_jitter_ps: args.jitter_ps,
    };
    let (probe, conjugate) = if args.eta < 1.0 || detector.dead_time_ps > 0 || args.jitter_ps > 0.0
    {
        // independent detector streams derived from the master seed
        (
            detect(&probe, &detector, args.seed.wrapping_add(0x5eed_0001))?,
            detect(&conjugate, &detector, args.seed.wrapping_add(0x5eed_0002))?,
        )
    } else {
        (probe, conjugate)
    };

    let mut w = create(&args.out)?;
    let format_name = match args.format {
        OutFormatArg::Ttag => {
            write_ttag(&mut w, &probe, &conjugate)?;
            "ttag"
        }
        OutFormatArg::Csv => {
            write_csv(&mut w, &probe, &conjugate)?;
            "csv"
        }
    };
    drop(w);

    let truth_path = args.truth.unwrap_or_else(|| {
        let mut p = args.out.as_os_str().to_owned();
        p.push(".truth.json");
        PathBuf::from(p)
    });
    write_json(
        &truth_path,
        &SimulateTruthOut {
            schema_version: 1,
            truth,
            detector,
            format: format_name,
        },
    )
}

// ---------------------------------------------------------------- squeeze

#[derive(Args)]
pub struct SqueezeArgs {
    /// Pair rate (pairs/s).
    #[arg(long, default_value_t = 1e7)]
    pair_rate: f64,

    /// Channel-1 efficiency.
    #[arg(long, default_value_t = 0.718)]
    eta1: f64,

    /// Channel-2 efficiency.
    #[arg(long, default_value_t = 0.718)]
    eta2: f64,

    /// Trace sample rate (Hz).
    #[arg(long, default_value_t = 1e6)]
    sample_rate: f64,

    /// Trace duration (s).
    #[arg(long, default_value_t = 1.0)]
    duration_s: f64,

    /// Resolution bandwidth (kHz).
    #[arg(long, default_value_t = 10.0)]
    rbw_khz: f64,

    /// Video bandwidth (Hz); 0 disables smoothing.
    #[arg(long, default_value_t = 300.0)]
    vbw_hz: f64,

    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Scale factor applied to the SNL calibration rate (1.0 = matched).
    #[arg(long, default_value_t = 1.0)]
    snl_rate_scale: f64,

    /// Analyze the calibration trace against itself (0 dB check).
    #[arg(long)]
    self_cal: bool,

    /// Output spectrum CSV (freq_hz,db_rel_snl).
    #[arg(long, default_value = "spectrum.csv")]
    out_spectrum: PathBuf,

    /// Output band-average JSON.
    #[arg(long)]
    out_summary: Option<PathBuf>,

    /// Optional trace dump CSV (n1,n2) with a JSON header sidecar.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SqueezeSummaryOut {
    schema_version: u32,
    band_average_db: f64,
    expected_db: f64,
    eta1: f64,
    eta2: f64,
    rbw_hz: f64,
    vbw_hz: Option<f64>,
    n_bins: usize,
}

#[derive(Serialize)]
struct TraceHeaderOut {
    schema_version: u32,
    sample_rate_hz: f64,
    n_samples: usize,
    duration_s: f64,
}

fn write_trace(path: &Path, trace: &IntensityTrace) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "n1,n2")?;
    for (a, b) in trace.n1.iter().zip(&trace.n2) {
        writeln!(w, "{a},{b}")?;
    }
    drop(w);
    let mut hp = path.as_os_str().to_owned();
    hp.push(".header.json");
    write_json(
        &PathBuf::from(hp),
        &TraceHeaderOut {
            schema_version: 1,
            sample_rate_hz: trace.sample_rate_hz,
            n_samples: trace.len(),
            duration_s: trace.duration_s(),
        },
    )
}

pub fn run_squeeze(args: SqueezeArgs) -> Result<(), CliError> {
    let twin = simulate_twin_traces(
        args.pair_rate,
        args.eta1,
        args.eta2,
        args.sample_rate,
        args.duration_s,
        args.seed,
    )?;
    let snl = simulate_snl_trace(
        twin.total_rate_hz() * args.snl_rate_scale,
        args.sample_rate,
        args.duration_s,
        args.seed.wrapping_add(0x5eed_0003),
    )?;
    let analyzed = if args.self_cal { &snl } else { &twin };
    let vbw = if args.vbw_hz > 0.0 {
        Some(args.vbw_hz)
    } else {
        None
    };
    let spectrum = difference_noise_spectrum(analyzed, &snl, args.rbw_khz * 1e3, vbw)?;

    let mut w = create(&args.out_spectrum)?;
    writeln!(w, "freq_hz,db_rel_snl")?;
    for (f, db) in spectrum
        .frequencies_hz
        .iter()
        .zip(&spectrum.power_db_rel_snl)
    {
        writeln!(w, "{f},{db}")?;
    }
    drop(w);

    if let Some(tp) = &args.trace_out {
        write_trace(tp, analyzed)?;
    }
    if let Some(sp) = &args.out_summary {
        write_json(
            sp,
            &SqueezeSummaryOut {
                schema_version: 1,
                band_average_db: spectrum.band_average_db(),
                expected_db: if args.self_cal {
                    0.0
                } else {
                    expected_ratio_db(args.eta1, args.eta2)
                },
                eta1: args.eta1,
                eta2: args.eta2,
                rbw_hz: spectrum.rbw_hz,
                vbw_hz: spectrum.vbw_hz,
                n_bins: spectrum.frequencies_hz.len(),
            },
        )?;
    }
    Ok(())
}

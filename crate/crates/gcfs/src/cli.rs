//! The `gcfs` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gcfs_core::engine::process_stream;
use gcfs_core::eval::{self, BeamPatternOptions, SweepTemplate};
use gcfs_core::gcfsnet::{GcfsConfig, GcfsModel, Variant};
use gcfs_core::geometry::ArrayGeometry;
use gcfs_core::scene;

use crate::algo::{self, Algo, AlgoOptions};
use crate::bench::{bench_input, format_report, measure_rtf};
use crate::error::{AppError, AppResult};
use crate::scene_file::read_scene;
use crate::wav::{read_wav, write_wav, WavFormat};
use crate::weights_file::save_container;

#[derive(Debug, Parser)]
#[command(name = "gcfs", version, about = "Low-latency multichannel speech enhancement for a binaural hearing-aid array")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enhance a 4-channel 16 kHz recording (FL, FR, BL, BR) into a 2-channel (left, right) file.
    Enhance(EnhanceArgs),
    /// Render a scene spec into a 4-channel mixture and 2-channel clean reference.
    Simulate(SimulateArgs),
    /// Attenuation over incidence angle (-180..180 in 5 degree steps) as CSV.
    Beampattern(BeamArgs),
    /// SI-SDR and noise attenuation over an SNR grid as CSV.
    Sweep(SweepArgs),
    /// Real-time factor and per-frame timing on random input.
    Bench(BenchArgs),
    /// Write a seeded random GCFSnet weight file.
    RandomWeights(RandomWeightsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
pub enum FormatArg {
    #[default]
    F32,
    I16,
}

impl From<FormatArg> for WavFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::F32 => WavFormat::Float32,
            FormatArg::I16 => WavFormat::Int16,
        }
    }
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    /// Front-back microphone distance per ear, in metres.
    #[arg(long, default_value_t = ArrayGeometry::DEFAULT_MIC_SPACING)]
    pub mic_spacing: f64,
    /// Distance between the left and right microphone pairs, in metres.
    #[arg(long, default_value_t = ArrayGeometry::DEFAULT_HEAD_WIDTH)]
    pub head_width: f64,
}

impl GeometryArgs {
    fn geometry(&self) -> AppResult<ArrayGeometry> {
        Ok(ArrayGeometry::behind_the_ear(self.mic_spacing, self.head_width)?)
    }
}

#[derive(Debug, Args)]
pub struct ProcessorArgs {
    /// Weight file for gcfs-m / gcfs-b.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Use seeded random GCFSnet weights instead of a file.
    #[arg(long, value_name = "SEED")]
    pub random_weights: Option<u64>,
    /// Gain of the gain processor, in dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gain_db: f64,
    /// Per-bin target transfer functions (CSV) replacing the MVDR plane-wave model.
    #[arg(long)]
    pub atf: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

impl ProcessorArgs {
    fn options(&self) -> AppResult<AlgoOptions> {
        Ok(AlgoOptions {
            gain_db: self.gain_db,
            weights: self.weights.clone(),
            random_weights: self.random_weights,
            atf: self.atf.clone(),
            geometry: self.geometry.geometry()?,
        })
    }
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Output sample format.
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
    #[command(flatten)]
    pub proc: ProcessorArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene spec file (key = value lines).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out_mix: PathBuf,
    #[arg(long)]
    pub out_ref: PathBuf,
    /// Optional 4-channel noise-only output.
    #[arg(long)]
    pub out_noise: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Debug, Args)]
pub struct BeamArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    #[arg(long)]
    pub out: PathBuf,
    /// Probe length in seconds.
    #[arg(long, default_value_t = 4.0)]
    pub probe_secs: f64,
    /// Number of probe segments averaged per angle.
    #[arg(long, default_value_t = 4)]
    pub utterances: usize,
    /// Adaptation time discarded per angle; defaults to 2 s for adm and 0 otherwise.
    #[arg(long)]
    pub warmup_secs: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub proc: ProcessorArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated algorithms.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub algos: Vec<Algo>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub sentences: usize,
    #[arg(long, default_value_t = 1.5)]
    pub sentence_secs: f64,
    #[arg(long, default_value_t = -5, allow_negative_numbers = true)]
    pub snr_min: i32,
    #[arg(long, default_value_t = 10, allow_negative_numbers = true)]
    pub snr_max: i32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub proc: ProcessorArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    #[arg(long, default_value_t = 30.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub proc: ProcessorArgs,
}

#[derive(Debug, Args)]
pub struct RandomWeightsArgs {
    /// monaural or binaural.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant '{s}' (monaural or binaural)"))
}

fn write_text(path: &Path, text: &str) -> AppResult<()> {
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn enhance(a: &EnhanceArgs) -> AppResult<()> {
    let mut proc = algo::build(a.algo, &a.proc.options()?)?;
    let input = read_wav(&a.input)?;
    if input.n_channels() != proc.n_in_channels() {
        return Err(AppError::io(&a.input, format!("expected {} channels, got {}", proc.n_in_channels(), input.n_channels())));
    }
    let out = process_stream(&mut proc, &input).map_err(|e| AppError::io(&a.input, e))?;
    if out.clipped_input > 0 || out.clipped_output > 0 {
        eprintln!("warning: {} input and {} output samples at or beyond full scale", out.clipped_input, out.clipped_output);
    }
    write_wav(&a.output, &out.audio, a.format.into())
}

fn simulate(a: &SimulateArgs) -> AppResult<()> {
    let spec = read_scene(&a.spec, a.seed)?;
    let sc = scene::mix_scene(&spec, &a.geometry.geometry()?)?;
    write_wav(&a.out_mix, &sc.mixture, a.format.into())?;
    write_wav(&a.out_ref, &sc.target_ref, a.format.into())?;
    if let Some(p) = &a.out_noise {
        write_wav(p, &sc.noise_ref, a.format.into())?;
    }
    Ok(())
}

fn beampattern(a: &BeamArgs) -> AppResult<()> {
    let opts = a.proc.options()?;
    let mut proc = algo::build(a.algo, &opts)?;
    if !(a.probe_secs >= 2.0) {
        return Err(AppError::Usage("--probe-secs must be at least 2".into()));
    }
    let probe = scene::probe_signal((a.probe_secs * gcfs_core::SAMPLE_RATE as f64) as usize, a.seed);
    let bp_opts = BeamPatternOptions {
        warmup_secs: a.warmup_secs.unwrap_or(a.algo.warmup_secs()),
        n_utterances: a.utterances,
        ..BeamPatternOptions::default()
    };
    let bp = eval::beam_pattern(&mut proc, &opts.geometry, &probe, &bp_opts)?;
    write_text(&a.out, &bp.to_csv())
}

fn sweep(a: &SweepArgs) -> AppResult<()> {
    if a.snr_min > a.snr_max {
        return Err(AppError::Usage("--snr-min must not exceed --snr-max".into()));
    }
    let opts = a.proc.options()?;
    let mut procs = a.algos.iter().map(|&al| algo::build(al, &opts)).collect::<AppResult<Vec<_>>>()?;
    let mut refs: Vec<&mut dyn gcfs_core::engine::FrameProcessor> = procs.iter_mut().map(|p| &mut **p as _).collect();
    let template = SweepTemplate { sentence_secs: a.sentence_secs, seed: a.seed, ..SweepTemplate::s0_n60() };
    let snrs: Vec<f64> = (a.snr_min..=a.snr_max).map(f64::from).collect();
    let rep = eval::snr_sweep(&mut refs, &opts.geometry, &template, &snrs, a.sentences)?;
    write_text(&a.out, &rep.to_csv())
}

fn bench(a: &BenchArgs) -> AppResult<()> {
    let mut opts = a.proc.options()?;
    if opts.weights.is_none() && opts.random_weights.is_none() {
        opts.random_weights = Some(a.seed);
    }
    if !(a.seconds > 0.0) {
        return Err(AppError::Usage("--seconds must be positive".into()));
    }
    let mut proc = algo::build(a.algo, &opts)?;
    let r = measure_rtf(&mut proc, &bench_input(a.seconds, a.seed));
    print!("{}", format_report(proc.name(), &r));
    Ok(())
}

fn random_weights(a: &RandomWeightsArgs) -> AppResult<()> {
    let (wc, clamped) = GcfsModel::random(GcfsConfig::new(a.variant), a.seed)?.to_container();
    if clamped > 0 {
        eprintln!("warning: {clamped} values clamped during quantization");
    }
    save_container(&a.out, &wc)
}

pub fn execute(cli: &Cli) -> AppResult<()> {
    match &cli.command {
        Command::Enhance(a) => enhance(a),
        Command::Simulate(a) => simulate(a),
        Command::Beampattern(a) => beampattern(a),
        Command::Sweep(a) => sweep(a),
        Command::Bench(a) => bench(a),
        Command::RandomWeights(a) => random_weights(a),
    }
}

/// Parses `argv` (including the program name), runs it and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gcfs: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parse_errors_are_usage() {
        assert_eq!(run(["gcfs", "enhance", "--algo", "nope", "--in", "a", "--out", "b"]), 1);
        assert_eq!(run(["gcfs", "enhance", "--in", "a"]), 1);
        assert_eq!(run(["gcfs", "bench", "--algo", "bypass", "--frobnicate"]), 1);
        assert_eq!(run(["gcfs", "--help"]), 0);
    }
}

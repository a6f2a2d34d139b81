use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use voxguide::io;
use voxguide::pipeline::{self, f64_to_pcm, pcm_to_f64, CompareConfig, Modules};
use voxguide::signals::{self, NoiseKind, SignalKind};
use voxguide::{ControllerConfig, Decoder, DecoderConfig, Encoder, EncoderConfig, Error};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  other failure
  2  usage error
  3  file not found or unreadable
  4  malformed WAV, frame stream or CSV
  5  decoder states do not align with the audio
  6  invalid controller configuration";

#[derive(Parser)]
#[command(name = "voxguide", version, about = "Decoder-guided downlink voice enhancement simulator", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic test vector and its segment labels.
    Gen(GenArgs),
    /// Encode a WAV file into a frame stream.
    Encode(EncodeArgs),
    /// Decode a frame stream to WAV and per-frame decoder states.
    Decode(DecodeArgs),
    /// Run noise reduction and/or MDRP on decoded audio.
    Enhance(EnhanceArgs),
    /// Compare guided against unguided noise reduction across noise types.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    /// speech_like, music_like, mixed or silence.
    kind: SignalKind,
    /// Length in seconds.
    duration: f64,
    #[arg(short, long)]
    output: PathBuf,
    /// Labels CSV; defaults to the output path with a .labels.csv suffix.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = pipeline::DEFAULT_SEED)]
    seed: u64,
    /// Mix in a noise bed of this type.
    #[arg(long, requires = "snr")]
    noise: Option<NoiseKind>,
    /// Speech-to-noise ratio for --noise, in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Send every frame as speech.
    #[arg(long)]
    no_dtx: bool,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Per-frame decoder state CSV.
    #[arg(long)]
    states: Option<PathBuf>,
    #[arg(long, default_value_t = voxguide::decoder::DEFAULT_CNG_SEED)]
    cng_seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Guided,
    Unguided,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Module {
    Nr,
    Mdrp,
}

#[derive(Args)]
struct EnhanceArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Decoder state CSV written by `decode --states`.
    #[arg(long, conflicts_with = "stream")]
    states: Option<PathBuf>,
    /// Frame stream to decode for states instead of a state CSV.
    #[arg(long)]
    stream: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "nr,mdrp")]
    modules: Vec<Module>,
    /// Controller configuration file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-hop noise reduction trace CSV.
    #[arg(long)]
    nr_trace: Option<PathBuf>,
    /// Per-hop MDRP trace CSV.
    #[arg(long)]
    mdrp_trace: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value = "speech_like")]
    signal: SignalKind,
    #[arg(long, default_value_t = 20.0)]
    duration: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "white,pink,car,road,train,crossroad,cafeteria,wind"
    )]
    noises: Vec<NoiseKind>,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long, default_value_t = pipeline::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Writes report.csv, traces.csv and per-noise enhanced WAVs here;
    /// without it the report goes to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(String, Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(_, e) => match e {
                Error::Io(_) => 3,
                Error::Format(_) | Error::Stream(_) | Error::Csv(_) => 4,
                Error::StateMisalignment { .. } => 5,
                Error::Config(_) => 6,
                _ => 1,
            },
        }
    }
}

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, Failure>;
}

impl<T, E: Into<Error>> Context<T> for Result<T, E> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| Failure::Run(what(), e.into()))
    }
}

fn shown(path: &Path) -> String {
    path.display().to_string()
}

fn read_wav(path: &Path) -> Result<Vec<i16>, Failure> {
    io::read_wav(path).context(|| format!("reading {}", shown(path)))
}

fn write_wav(path: &Path, pcm: &[i16]) -> Result<(), Failure> {
    io::write_wav(path, pcm).context(|| format!("writing {}", shown(path)))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .context(|| format!("creating {}", shown(path)))
}

fn load_config(path: Option<&Path>) -> Result<ControllerConfig, Failure> {
    let Some(path) = path else {
        return Ok(ControllerConfig::default());
    };
    let what = || format!("reading {}", shown(path));
    let text = fs::read_to_string(path).context(what)?;
    text.parse().context(what)
}

fn read_stream(
    path: &Path,
) -> Result<(voxguide::StreamHeader, Vec<voxguide::FrameRecord>), Failure> {
    let what = || format!("reading {}", shown(path));
    let file = File::open(path).context(what)?;
    voxguide::read_stream(&mut BufReader::new(file)).context(what)
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    if !a.duration.is_finite() || a.duration <= 0.0 {
        return Err(Failure::Usage("duration must be positive".into()));
    }
    let vector = signals::generate(a.kind, a.duration, a.seed).context(|| "generating".into())?;
    let samples = match (a.noise, a.snr) {
        (Some(kind), Some(snr)) => signals::add_noise(&vector, kind, snr, a.seed),
        _ => vector.samples.clone(),
    };
    write_wav(&a.output, &f64_to_pcm(&samples))?;
    let labels = a
        .labels
        .unwrap_or_else(|| a.output.with_extension("labels.csv"));
    io::write_labels_file(&labels, &vector.labels).context(|| format!("writing {}", shown(&labels)))
}

fn cmd_encode(a: EncodeArgs) -> Result<(), Failure> {
    let pcm = read_wav(&a.input)?;
    let (header, frames, _) = Encoder::new(EncoderConfig::default()).encode(&pcm, !a.no_dtx);
    let mut sink = create(&a.output)?;
    let what = || format!("writing {}", shown(&a.output));
    voxguide::write_stream(&header, &frames, &mut sink).context(what)?;
    sink.flush().context(what)
}

fn cmd_decode(a: DecodeArgs) -> Result<(), Failure> {
    let (header, frames) = read_stream(&a.input)?;
    let cfg = DecoderConfig {
        cng_seed: a.cng_seed,
        ..DecoderConfig::default()
    };
    let (pcm, states) = Decoder::new(cfg)
        .decode(&header, &frames)
        .context(|| format!("decoding {}", shown(&a.input)))?;
    write_wav(&a.output, &pcm)?;
    if let Some(path) = &a.states {
        io::write_states_file(path, &states).context(|| format!("writing {}", shown(path)))?;
    }
    Ok(())
}

fn cmd_enhance(a: EnhanceArgs) -> Result<(), Failure> {
    let states = match (a.mode, &a.states, &a.stream) {
        (Mode::Unguided, _, _) => None,
        (Mode::Guided, Some(path), _) => {
            Some(io::read_states_file(path).context(|| format!("reading {}", shown(path)))?)
        }
        (Mode::Guided, None, Some(path)) => {
            let (header, frames) = read_stream(path)?;
            let (_, states) = Decoder::new(DecoderConfig::default())
                .decode(&header, &frames)
                .context(|| format!("decoding {}", shown(path)))?;
            Some(states)
        }
        (Mode::Guided, None, None) => {
            return Err(Failure::Usage(
                "--mode guided needs decoder states: pass --states or --stream".into(),
            ))
        }
    };
    let cfg = load_config(a.config.as_deref())?;
    let modules = Modules {
        nr: a.modules.contains(&Module::Nr),
        mdrp: a.modules.contains(&Module::Mdrp),
    };
    let pcm = pcm_to_f64(&read_wav(&a.input)?);
    let out = pipeline::enhance(&pcm, states.as_deref(), modules, &cfg)
        .context(|| format!("enhancing {}", shown(&a.input)))?;
    write_wav(&a.output, &f64_to_pcm(&out.pcm))?;
    if let (Some(path), Some(trace)) = (&a.nr_trace, &out.nr_trace) {
        io::write_file_with(path, |w| io::write_nr_trace(w, trace))
            .context(|| format!("writing {}", shown(path)))?;
    }
    if let (Some(path), Some(trace)) = (&a.mdrp_trace, &out.mdrp_trace) {
        io::write_file_with(path, |w| io::write_mdrp_trace(w, trace))
            .context(|| format!("writing {}", shown(path)))?;
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<(), Failure> {
    if !a.duration.is_finite() || a.duration <= 0.0 {
        return Err(Failure::Usage("duration must be positive".into()));
    }
    let cfg = CompareConfig {
        controller: load_config(a.config.as_deref())?,
        seed: a.seed,
        ..CompareConfig::default()
    };
    let clean = signals::generate(a.signal, a.duration, a.seed).context(|| "generating".into())?;
    let report =
        pipeline::compare(&clean, &a.noises, a.snr, &cfg).context(|| "comparing".into())?;
    let Some(dir) = a.out_dir else {
        let stdout = std::io::stdout();
        return report
            .write_csv(stdout.lock())
            .context(|| "writing report".into());
    };
    fs::create_dir_all(&dir).context(|| format!("creating {}", shown(&dir)))?;
    let path = dir.join("report.csv");
    report
        .write_csv(create(&path)?)
        .context(|| format!("writing {}", shown(&path)))?;
    let path = dir.join("traces.csv");
    report
        .write_traces_csv(create(&path)?)
        .context(|| format!("writing {}", shown(&path)))?;
    for &noise in &a.noises {
        let run = pipeline::run_condition(&clean, noise, a.snr, Modules::NR, &cfg)
            .context(|| format!("running {}", noise.as_str()))?;
        let name = noise.as_str();
        write_wav(&dir.join(format!("{name}_input.wav")), &run.input)?;
        write_wav(&dir.join(format!("{name}_decoded.wav")), &run.link.decoded)?;
        write_wav(
            &dir.join(format!("{name}_unguided.wav")),
            &f64_to_pcm(&run.unguided.pcm),
        )?;
        write_wav(
            &dir.join(format!("{name}_guided.wav")),
            &f64_to_pcm(&run.guided.pcm),
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Enhance(a) => cmd_enhance(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Run(what, e) => eprintln!("error: {what}: {e}"),
            }
            ExitCode::from(f.code())
        }
    }
}

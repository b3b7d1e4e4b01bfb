use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use leocap::{FadingRegime, PatternKind};
use leocap_cli::{run, CliError, Command, DeltaSweep, ExperimentSpec};

#[derive(Parser)]
#[command(name = "leocap", version, about = "LEO downlink area spectral efficiency experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form efficiency of the regular configuration across spacings.
    RegularSweep(Common),
    /// Monte Carlo efficiency of random drops, optionally with subband reuse.
    RandomSweep(Common),
    /// Best block shuffle against the identity association.
    ShuffleCompare(Common),
    /// Probe rate in spherical geometry against its planar projection.
    PlanarVsSpherical(Common),
    /// Best-reuse-distance efficiency for each subband count.
    ReuseTable(Common),
    /// Regular, shuffled and beam-region upper bound efficiencies.
    BoundReport(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    Bessel,
    MonotoneEnvelope,
    NoSidelobe,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fading {
    None,
    Light,
    Average,
    Heavy,
}

#[derive(Args)]
struct Common {
    /// JSON experiment spec; unset fields take the command defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; the sidecar goes next to it with a .json extension.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Print the resolved spec and exit without computing.
    #[arg(long)]
    dry_run: bool,

    #[arg(long, value_name = "KM")]
    altitude: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_name = "DEG")]
    sat_beamwidth: Option<f64>,
    #[arg(long, value_name = "DEG")]
    gs_beamwidth: Option<f64>,
    #[arg(long, value_enum)]
    pattern: Option<Pattern>,
    #[arg(long, value_name = "DB", allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Total-power constraint with an unconstrained PSD.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    power_limited: Option<bool>,
    #[arg(long, value_name = "DEG")]
    gamma_s: Option<f64>,
    #[arg(long, value_name = "DEG")]
    gamma_g: Option<f64>,
    #[arg(long, value_enum)]
    fading: Option<Fading>,
    #[arg(long)]
    fading_file: Option<PathBuf>,

    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    /// Spacings in km, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "KM,...")]
    deltas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_name = "M,...")]
    subbands: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',', value_name = "N,...")]
    satellites: Option<Vec<usize>>,
}

impl Common {
    fn resolve(self, command: Command) -> Result<(ExperimentSpec, bool), CliError> {
        let mut s = match &self.config {
            Some(p) => ExperimentSpec::from_file(command, p)?,
            None => ExperimentSpec::defaults(command),
        };
        let sc = &mut s.scenario;
        set(&mut sc.altitude_km, self.altitude);
        set(&mut sc.alpha, self.alpha);
        set(&mut sc.sat_beamwidth_deg, self.sat_beamwidth);
        set(&mut sc.gs_beamwidth_deg, self.gs_beamwidth);
        set(&mut sc.snr_db, self.snr_db);
        set(&mut sc.power_limited, self.power_limited);
        set(&mut sc.gamma_s_deg, self.gamma_s);
        set(&mut sc.gamma_g_deg, self.gamma_g);
        if let Some(p) = self.pattern {
            sc.pattern = match p {
                Pattern::Bessel => PatternKind::Bessel,
                Pattern::MonotoneEnvelope => PatternKind::MonotoneEnvelope,
                Pattern::NoSidelobe => PatternKind::NoSidelobe,
            };
        }
        if let Some(f) = self.fading {
            sc.fading = match f {
                Fading::None => FadingRegime::None,
                Fading::Light => FadingRegime::Light,
                Fading::Average => FadingRegime::Average,
                Fading::Heavy => FadingRegime::Heavy,
            };
        }
        if self.fading_file.is_some() {
            sc.fading_file = self.fading_file;
        }
        let sw = &mut s.sweep;
        set(&mut sw.trials, self.trials);
        set(&mut sw.subbands, self.subbands);
        set(&mut sw.satellites, self.satellites);
        if let Some(d) = self.deltas {
            sw.deltas_km = DeltaSweep::List(d);
        }
        set(&mut s.seeds.master, self.seed);
        set(&mut s.seeds.stream, self.stream);
        set(&mut s.output, self.output);
        s.validate()?;
        Ok((s, self.dry_run))
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::RegularSweep(c) => (Command::RegularSweep, c),
        Cmd::RandomSweep(c) => (Command::RandomSweep, c),
        Cmd::ShuffleCompare(c) => (Command::ShuffleCompare, c),
        Cmd::PlanarVsSpherical(c) => (Command::PlanarVsSpherical, c),
        Cmd::ReuseTable(c) => (Command::ReuseTable, c),
        Cmd::BoundReport(c) => (Command::BoundReport, c),
    };
    let result = common.resolve(command).and_then(|(spec, dry_run)| {
        if dry_run {
            println!("{}", serde_json::to_string_pretty(&spec).expect("spec serialises"));
            return Ok(());
        }
        let table = run(&spec)?;
        eprintln!(
            "wrote {} rows to {} (config echo: {})",
            table.rows.len(),
            spec.output.display(),
            spec.sidecar_path().display()
        );
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

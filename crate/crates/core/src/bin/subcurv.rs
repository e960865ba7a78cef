use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use subcurv::harness::{self, Mode, Report, SceneConfig, SceneKind};
use subcurv::Error;

#[derive(Parser)]
#[command(name = "subcurv", version, about = "Checks on 5D subconformal contact structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Symbol, contact distribution, δ and Lax pair of a PDE scene.
    CheckPde(Args),
    /// Coframe, residual identity and symbol checks of a master scene.
    CheckMaster(Args),
    /// Curvature of the lift of a projective structure.
    LiftProjective(Args),
    /// Contactification of a para-Kähler scene.
    Contactify(Args),
    /// Only the Lax pair checks of a PDE or master scene.
    LaxCheck(Args),
    /// Print the JSON schema of scene files, or a bundled scene.
    Show {
        /// Name of a bundled scene; the schema when omitted.
        name: Option<String>,
    },
}

#[derive(clap::Args)]
struct Args {
    /// Scene file (JSON), or `bundled:<name>` for a shipped scene.
    #[arg(long)]
    scene: String,
    /// Overrides the scene's sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scene's main tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    report: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

const CONFIG_ERROR: u8 = 2;

fn load(spec: &str) -> Result<SceneConfig, Error> {
    let text = match spec.strip_prefix("bundled:") {
        Some(name) => harness::bundled(name)
            .ok_or_else(|| Error::Config(format!("no bundled scene `{name}`")))?
            .to_string(),
        None => std::fs::read_to_string(spec).map_err(|e| Error::Config(format!("{spec}: {e}")))?,
    };
    SceneConfig::from_json(&text)
}

fn apply_overrides(cfg: &mut SceneConfig, a: &Args) {
    if let Some(s) = a.seed {
        cfg.sample.seed = s;
    }
    if let Some(t) = a.tol {
        let tol = &mut cfg.tolerances;
        match cfg.kind {
            SceneKind::Pde => tol.frobenius = t,
            SceneKind::Master => tol.identity = t,
            SceneKind::Projective | SceneKind::ParaKahler => tol.curvature = t,
        }
    }
}

fn run(a: &Args, kinds: &[SceneKind], mode: Mode) -> Result<Report, Error> {
    let mut cfg = load(&a.scene)?;
    if !kinds.contains(&cfg.kind) {
        return Err(Error::Config(format!(
            "this subcommand does not handle {} scenes",
            cfg.kind.name()
        )));
    }
    apply_overrides(&mut cfg, a);
    harness::run_scene_mode(&cfg, mode)
}

fn emit(report: &Report, a: &Args) -> Result<(), Error> {
    let text = match a.report {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
    };
    match &a.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, kinds, mode) = match &cli.command {
        Command::CheckPde(a) => (a, &[SceneKind::Pde][..], Mode::Full),
        Command::CheckMaster(a) => (a, &[SceneKind::Master][..], Mode::Full),
        Command::LiftProjective(a) => (a, &[SceneKind::Projective][..], Mode::Full),
        Command::Contactify(a) => (a, &[SceneKind::ParaKahler][..], Mode::Full),
        Command::LaxCheck(a) => (a, &[SceneKind::Pde, SceneKind::Master][..], Mode::LaxOnly),
        Command::Show { name } => {
            return match name {
                None => {
                    print!("{}", harness::SCENE_SCHEMA);
                    ExitCode::SUCCESS
                }
                Some(n) => match harness::bundled(n) {
                    Some(s) => {
                        print!("{s}");
                        ExitCode::SUCCESS
                    }
                    None => {
                        eprintln!("error: no bundled scene `{n}`");
                        ExitCode::from(CONFIG_ERROR)
                    }
                },
            };
        }
    };
    let report = match run(args, kinds, mode) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_config() { CONFIG_ERROR } else { 1 });
        }
    };
    if let Err(e) = emit(&report, args) {
        eprintln!("error: {e}");
        return ExitCode::from(CONFIG_ERROR);
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

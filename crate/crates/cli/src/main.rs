use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weil_cli::config::{Budget, BudgetClock, Format, SuiteConfig, SuiteName};
use weil_cli::export::{self, emit, ExportKind, PairSelection};
use weil_cli::{run_suite, CliError, CliResult, SuiteReport};
use weil_core::symplectic::SymplecticSpace;
use weil_core::values::Sign;

#[derive(Parser)]
#[command(name = "weil", version, about = "Exact checks of the finite-field Weil representation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 3)]
    p: u32,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Largest table, in bytes, that may be allocated.
    #[arg(long)]
    budget_bytes: Option<u64>,
}

impl Common {
    fn budget(&self) -> Budget {
        let mut b = Budget::default();
        if let Some(bytes) = self.budget_bytes {
            b.max_table_bytes = bytes;
        }
        b.max_seconds = self.budget_seconds;
        b
    }

    fn space(&self) -> CliResult<SymplecticSpace> {
        SymplecticSpace::new(self.p, self.d).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args, Clone)]
struct SuiteArgs {
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    level: usize,
}

#[derive(Args, Clone)]
struct PairArgs {
    /// Index of N in the lagrangian enumeration.
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Index of L in the lagrangian enumeration.
    #[arg(long, default_value_t = 0)]
    l: usize,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    n_eps: i32,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    l_eps: i32,
}

impl PairArgs {
    fn selection(&self) -> CliResult<PairSelection> {
        let sign = |x: i32| Sign::from_i32(x).ok_or_else(|| CliError::Usage(format!("sign must be 1 or -1, got {x}")));
        Ok(PairSelection { n: self.n, n_eps: sign(self.n_eps)?, l: self.l, l_eps: sign(self.l_eps)? })
    }
}

#[derive(Subcommand)]
enum Command {
    /// List all lagrangians in enumeration order.
    Enumerate {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the kernel of one enhanced pair.
    Kernel {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Run a verification suite and print its report.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        suite_args: SuiteArgs,
        #[arg(long, value_parser = parse_suite)]
        suite: SuiteName,
    },
    /// The theta table at a truncation level.
    ThetaTable {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// The tower suite: level squares, theta structure and invariance.
    TowerCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        suite_args: SuiteArgs,
    },
    /// Export a kernel, theta table or enumeration.
    Export {
        #[arg(long, value_enum)]
        kind: ExportKind,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
}

fn parse_suite(s: &str) -> Result<SuiteName, String> {
    s.parse::<SuiteName>().map_err(|_| {
        let names: Vec<&str> = SuiteName::EACH.iter().map(|n| n.as_str()).chain(["all"]).collect();
        format!("unknown suite `{s}`; expected one of {}", names.join(", "))
    })
}

fn report_csv(rep: &SuiteReport) -> String {
    let mut out = String::from("check,cases,failures\n");
    for c in &rep.checks {
        out.push_str(&format!("{},{},{}\n", c.name, c.cases, c.failures));
    }
    out
}

fn verify(common: &Common, args: &SuiteArgs, suite: SuiteName) -> CliResult<i32> {
    let cfg = SuiteConfig {
        p: common.p,
        d: common.d,
        suite,
        samples: args.samples,
        seed: args.seed,
        level: args.level,
        out: common.out.clone(),
        format: common.format,
        budget: common.budget(),
    };
    let rep = run_suite(&cfg)?;
    let body = match cfg.format {
        Format::Json => rep.to_json(),
        Format::Csv => report_csv(&rep),
    };
    emit(&body, cfg.out.as_deref())?;
    eprintln!("{} {}: {} cases, wall time {:.2} s", suite, if rep.passed { "PASS" } else { "FAIL" }, rep.cases, rep.wall_seconds);
    if let Some(w) = &rep.failure {
        eprintln!("first failure: {} at {}", w.check, w.case);
    }
    Ok(rep.exit_code())
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Enumerate { common } => {
            let clock = BudgetClock::start(common.budget());
            emit(&export::export_lagrangians(common.space()?, common.format, &clock)?, common.out.as_deref())?;
        }
        Command::Kernel { common, pair } => {
            let clock = BudgetClock::start(common.budget());
            let body = export::export_kernel(common.space()?, pair.selection()?, common.format, &clock)?;
            emit(&body, common.out.as_deref())?;
        }
        Command::Verify { common, suite_args, suite } => return verify(&common, &suite_args, suite),
        Command::ThetaTable { common, level } => {
            let clock = BudgetClock::start(common.budget());
            let body = export::export_theta_table(common.p, common.d, level, common.format, &clock)?;
            emit(&body, common.out.as_deref())?;
        }
        Command::TowerCheck { common, suite_args } => return verify(&common, &suite_args, SuiteName::Tower),
        Command::Export { kind, common, pair, level } => {
            let clock = BudgetClock::start(common.budget());
            let body = match kind {
                ExportKind::Kernel => export::export_kernel(common.space()?, pair.selection()?, common.format, &clock)?,
                ExportKind::ThetaTable => export::export_theta_table(common.p, common.d, level, common.format, &clock)?,
                ExportKind::Lagrangians => export::export_lagrangians(common.space()?, common.format, &clock)?,
            };
            emit(&body, common.out.as_deref())?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

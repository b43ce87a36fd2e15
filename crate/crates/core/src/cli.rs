//! Command-line front end. Every command renders into a `String`; the binary decides
//! where it goes.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::asymptotics::{clt_value, effective_a, normalize_by_max, scaled_row, theorem_check};
use crate::error::Error;
use crate::exact_betti::{betti_table, reconcile, BettiTable, FormulaVariant};
use crate::koszul_oracle::oracle_table;
use crate::lattice::SurfaceSpec;

pub const FIGURE_DEFAULT_D: [u64; 4] = [3, 5, 10, 20];
pub const CHECK_DEFAULT_D: [u64; 5] = [50, 100, 200, 400, 800];
pub const RECONCILE_DEFAULT_GRID: [(i64, i64); 6] = [(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "toric-betti", version, about = "Exact Betti tables of the toric surfaces X_delta embedded by L_d")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Ray parameter delta of the surface.
    #[arg(long, global = true, default_value_t = 0)]
    pub delta: u64,

    /// Degree parameter d of the line bundle.
    #[arg(long, global = true)]
    pub d: Option<u64>,

    /// Comma-separated list of d values.
    #[arg(long = "d-list", global = true, value_delimiter = ',')]
    pub d_list: Option<Vec<u64>>,

    /// Betti table row (1 or 2).
    #[arg(long, global = true)]
    pub q: Option<usize>,

    /// `validated` or `<paper|interior|height-one>:<kappa>:<s>`.
    #[arg(long, global = true, default_value = "validated")]
    pub variant: FormulaVariant,

    /// Half-width of the window in the effective coordinate a.
    #[arg(long = "a-window", global = true, default_value_t = 2.0)]
    pub a_window: f64,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Projective dimension for `clt`.
    #[arg(long, global = true)]
    pub r: Option<u64>,

    /// Column index for `clt`; omitted means the full sweep `0..=r`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub p: Option<i64>,

    #[arg(long, global = true, default_value_t = 0, allow_negative_numbers = true)]
    pub c1: i64,

    #[arg(long, global = true, default_value_t = 0, allow_negative_numbers = true)]
    pub c2: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exact Betti table from the numerator reconstruction.
    Table,
    /// One scaled row as `p,a_eff,raw,scaled`.
    Row,
    /// Both rows normalized by their maxima for several d.
    Figure,
    /// Brute-force Koszul cohomology table.
    Oracle,
    /// Scaled binomial coefficients against the Gaussian target.
    Clt,
    /// Compare every formula variant with the oracle.
    Reconcile,
    /// Row-1 convergence and row-2 vanishing checks.
    Check,
}

#[derive(Debug)]
pub enum CliError {
    /// Flag misuse detected after parsing (exit status 2).
    Usage(String),
    /// A computation failed (exit status 1).
    Failed(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failed(e)
    }
}

/// Rendered output plus whether every reported criterion held.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub diagnostics: String,
    pub ok: bool,
}

/// 12 significant digits, scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

impl Cli {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn single_spec(&self) -> Result<SurfaceSpec, CliError> {
        let d = self.d.ok_or_else(|| CliError::Usage("--d is required".into()))?;
        SurfaceSpec::new(self.delta as i64, d as i64).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Flag checks that do not need any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        match self.command {
            Command::Table | Command::Oracle => {
                self.single_spec()?;
            }
            Command::Row => {
                self.single_spec()?;
                match self.q {
                    Some(1) | Some(2) => {}
                    _ => return Err(CliError::Usage("--q must be 1 or 2".into())),
                }
            }
            Command::Clt => {
                if self.r.is_none_or(|r| r == 0) {
                    return Err(CliError::Usage("--r must be a positive integer".into()));
                }
            }
            Command::Check => {
                if !(self.a_window > 0.0) {
                    return Err(CliError::Usage("--a-window must be positive".into()));
                }
            }
            Command::Figure | Command::Reconcile => {}
        }
        if let Some(list) = &self.d_list {
            if list.iter().any(|&d| d == 0) {
                return Err(CliError::Usage("--d-list entries must be >= 1".into()));
            }
        }
        Ok(())
    }
}

fn table_csv(t: &BettiTable) -> String {
    let mut s = String::from("p,q,k\n");
    for q in 0..=2 {
        for p in 0..=t.r() {
            writeln!(s, "{p},{q},{}", t.get(p, q)).unwrap();
        }
    }
    s
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    cli.validate()?;
    let mut text = String::new();
    let mut diagnostics = String::new();
    let mut ok = true;
    match cli.command {
        Command::Table => {
            let spec = cli.single_spec()?;
            let t = betti_table(&spec, cli.variant)?;
            match cli.format_or(Format::Text) {
                Format::Csv => text = table_csv(&t),
                Format::Text => {
                    writeln!(text, "Betti table of {spec}, r = {}", t.r()).unwrap();
                    write!(text, "{t}").unwrap();
                }
            }
        }
        Command::Oracle => {
            let spec = cli.single_spec()?;
            let start = Instant::now();
            let t = oracle_table(&spec)?;
            let elapsed = start.elapsed().as_secs_f64();
            match cli.format_or(Format::Text) {
                Format::Csv => text = table_csv(&t),
                Format::Text => {
                    writeln!(text, "Koszul oracle table of {spec}, r = {}", t.r()).unwrap();
                    write!(text, "{t}").unwrap();
                }
            }
            writeln!(diagnostics, "oracle time: {elapsed:.3} s").unwrap();
        }
        Command::Row => {
            let spec = cli.single_spec()?;
            let row = scaled_row(&spec, cli.q.unwrap(), cli.variant)?;
            let sep = match cli.format_or(Format::Csv) {
                Format::Csv => ",",
                Format::Text => " ",
            };
            writeln!(text, "# {} scaled by {}", spec, row.scale_description).unwrap();
            writeln!(text, "p{sep}a_eff{sep}raw{sep}scaled").unwrap();
            for s in &row.samples {
                writeln!(
                    text,
                    "{}{sep}{}{sep}{}{sep}{}",
                    s.p,
                    fmt_float(s.a_eff),
                    s.raw,
                    fmt_float(s.scaled)
                )
                .unwrap();
            }
        }
        Command::Figure => {
            let ds = cli.d_list.clone().unwrap_or_else(|| FIGURE_DEFAULT_D.to_vec());
            writeln!(text, "# delta={}; each row normalized by its maximum entry", cli.delta).unwrap();
            writeln!(text, "d,q,p,normalized").unwrap();
            for d in ds {
                let spec = SurfaceSpec::new(cli.delta as i64, d as i64)?;
                let t = betti_table(&spec, cli.variant)?;
                for q in 1..=2 {
                    for (p, v) in normalize_by_max(t.row(q)).into_iter().enumerate() {
                        writeln!(text, "{d},{q},{p},{}", fmt_float(v)).unwrap();
                    }
                }
            }
        }
        Command::Clt => {
            let r = cli.r.unwrap();
            let ps: Vec<i64> = match cli.p {
                Some(p) => vec![p],
                None => (0..=r as i64).collect(),
            };
            writeln!(text, "r,p,c1,c2,a_eff,value,target").unwrap();
            for p in ps {
                let s = clt_value(r, p, cli.c1, cli.c2);
                writeln!(
                    text,
                    "{},{},{},{},{},{},{}",
                    s.r,
                    s.p,
                    s.c1,
                    s.c2,
                    fmt_float(effective_a(r, p)),
                    fmt_float(s.value),
                    fmt_float(s.target)
                )
                .unwrap();
            }
        }
        Command::Reconcile => {
            let grid: Vec<SurfaceSpec> = match &cli.d_list {
                Some(ds) => ds
                    .iter()
                    .map(|&d| SurfaceSpec::new(cli.delta as i64, d as i64))
                    .collect::<Result<_, _>>()?,
                None => RECONCILE_DEFAULT_GRID
                    .iter()
                    .map(|&(delta, d)| SurfaceSpec::new(delta, d))
                    .collect::<Result<_, _>>()?,
            };
            let report = reconcile(&grid)?;
            ok = report.winning_variant.is_some();
            write!(text, "{report}").unwrap();
        }
        Command::Check => {
            let ds = cli.d_list.clone().unwrap_or_else(|| CHECK_DEFAULT_D.to_vec());
            let report = theorem_check(cli.delta, &ds, cli.a_window, cli.variant)?;
            ok = report.passed();
            write!(text, "{report}").unwrap();
        }
    }
    Ok(Output { text, diagnostics, ok })
}

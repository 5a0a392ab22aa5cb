use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num::BigRational;

use cmtor::bounds::{self, StratumKind, TailParams};
use cmtor::census::{self, DegreeRecord, ScanOptions};
use cmtor::classnum::{batch_class_numbers, class_number};
use cmtor::density;
use cmtor::numtheory::decimal_truncate;
use cmtor::odt;

#[derive(Parser)]
#[command(
    name = "cmtor",
    version,
    about = "Torsion of CM elliptic curves in odd degree: realizability, class numbers, densities, census"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SumKind {
    S1,
    S2,
    S3,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the torsion groups realized in odd degree d
    Groups { d: u64 },
    /// T_CM(d): the largest torsion order in odd degree d
    Tcm { d: u64 },
    /// The group table for all odd degrees up to dmax
    Table { dmax: u64 },
    /// Scan odd degrees in [lo, hi], streaming one record per degree
    Scan {
        lo: u64,
        hi: u64,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Persist progress here; an existing file resumes the scan
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Attach certified density intervals to aggregates with
        /// representative <= 99 (loads class numbers up to 10^8)
        #[arg(long)]
        certify: bool,
    },
    /// Upper bound on the density of Olson degrees via the generator chain
    OlsonUpper {
        /// Generator search bound
        #[arg(long, default_value_t = 100_000)]
        limit: u64,
        /// Number of generators fed to the inclusion-exclusion chain
        #[arg(long, default_value_t = 38)]
        take: usize,
    },
    /// Certified density interval for the d-Olson stratum
    Stratum {
        d: u64,
        /// Threshold-family truncation point
        #[arg(long, default_value_t = 32_927)]
        z: u64,
    },
    /// Class number of Q(sqrt(-ell)) for a prime ell = 3 (mod 4)
    Classnum { ell: u64 },
    /// The three prime sums of the density lower-bound pipeline
    Sums {
        #[arg(value_enum)]
        which: SumKind,
        /// s1: summation cutoff; s2: upper end of the sieved range
        #[arg(long)]
        cutoff: Option<u64>,
        /// Allow multi-minute ranges; progress goes to standard error
        #[arg(long)]
        long_run: bool,
    },
    /// Running-minimum records for T_CM(d)/(d log log d)^(2/3)
    Records {
        #[arg(long, default_value_t = 100_000)]
        limit: u64,
    },
}

fn density_str(x: &BigRational) -> String {
    format!("{}/{} (≈ {})", x.numer(), x.denom(), decimal_truncate(x, 15))
}

fn require_odd(d: u64) -> Result<(), String> {
    if d % 2 == 0 {
        Err(format!(
            "degree {d} is even; the threshold theory here covers odd degrees only"
        ))
    } else {
        Ok(())
    }
}

fn run(cmd: Cmd) -> Result<(), Box<dyn std::error::Error>> {
    match cmd {
        Cmd::Groups { d } => {
            let gs = odt::groups_on_demand(d)?;
            // cyclic groups in order, the Klein group last, as in the paper's table
            let (klein, cyclic): (Vec<&odt::TorsionGroup>, Vec<&odt::TorsionGroup>) =
                gs.iter().partition(|g| matches!(g, odt::TorsionGroup::Z2xZ2));
            let names: Vec<String> = cyclic
                .into_iter()
                .chain(klein)
                .map(|g| g.to_string())
                .collect();
            println!("{}", names.join(", "));
        }
        Cmd::Tcm { d } => {
            println!("{}", odt::t_cm_on_demand(d)?);
        }
        Cmd::Table { dmax } => {
            let cache = batch_class_numbers(2 * dmax + 1)?;
            print!("{}", census::table(dmax, &cache)?);
        }
        Cmd::Scan { lo, hi, workers, checkpoint, format, certify } => {
            let need = (2 * hi + 1).max(if certify { 100_000_000 } else { 0 });
            let cache = batch_class_numbers(need)?;
            let opts = ScanOptions { workers, checkpoint, chunk_width: 0 };
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            use std::io::Write;
            if format == Format::Csv {
                writeln!(out, "{}", DegreeRecord::CSV_HEADER)?;
            }
            let mut outcome = census::scan(lo, hi, &opts, &cache, &mut |r| match format {
                Format::Csv => writeln!(out, "{}", r.csv_line()),
                Format::Jsonl => {
                    let line = serde_json::to_string(r).map_err(std::io::Error::other)?;
                    writeln!(out, "{line}")
                }
            })?;
            if certify {
                let z = 32_927;
                let kinds: Vec<StratumKind> = outcome
                    .aggregates
                    .iter()
                    .filter(|a| a.representative <= 99)
                    .map(|a| StratumKind::for_degree(a.representative))
                    .collect();
                let tails = census::kind_tails(&kinds, z, TailParams::default(), &cache)?;
                census::attach_intervals(&mut outcome, z, 99, &tails, &cache)?;
            }
            for a in &outcome.aggregates {
                let interval = a
                    .interval
                    .as_ref()
                    .map(|iv| {
                        format!(
                            " interval=[{}, {}]",
                            decimal_truncate(&iv.lower, 15),
                            decimal_truncate(&iv.upper, 15)
                        )
                    })
                    .unwrap_or_default();
                match format {
                    Format::Csv => writeln!(
                        out,
                        "# aggregate id={} fingerprint={:?} representative={} count={} empirical={:.15}{}",
                        a.fingerprint_id,
                        outcome.fingerprints[a.fingerprint_id as usize],
                        a.representative,
                        a.count,
                        a.empirical_density,
                        interval
                    )?,
                    Format::Jsonl => {
                        let mut obj = serde_json::json!({
                            "aggregate": {
                                "fingerprint_id": a.fingerprint_id,
                                "fingerprint": outcome.fingerprints[a.fingerprint_id as usize],
                                "representative": a.representative,
                                "count": a.count,
                                "empirical_density": a.empirical_density,
                            }
                        });
                        if let Some(iv) = &a.interval {
                            obj["aggregate"]["interval"] = serde_json::json!([
                                decimal_truncate(&iv.lower, 15),
                                decimal_truncate(&iv.upper, 15)
                            ]);
                        }
                        writeln!(out, "{obj}")?;
                    }
                }
            }
        }
        Cmd::OlsonUpper { limit, take } => {
            let cache = batch_class_numbers(2 * limit + 1)?;
            let upper = density::olson_density_interval_upper(limit, take, &cache)?;
            println!("{}", density_str(&upper));
        }
        Cmd::Stratum { d, z } => {
            require_odd(d).map_err(UsageError)?;
            let cache = batch_class_numbers((2 * z + 1).max(TailParams::default().l0))?;
            let kind = StratumKind::for_degree(d);
            let tails = census::kind_tails(&[kind], z, TailParams::default(), &cache)?;
            let iv = density::stratum_density(
                density::StratumQuery { d, z },
                &cache,
                &tails[&kind],
            )?;
            println!("lower {}", density_str(&iv.lower));
            println!("upper {}", density_str(&iv.upper));
        }
        Cmd::Classnum { ell } => {
            println!("{}", class_number(ell)?);
        }
        Cmd::Sums { which, cutoff, long_run } => match which {
            SumKind::S1 => {
                let cutoff = cutoff.unwrap_or(100_000);
                if cutoff > 100_000_000 && !long_run {
                    return Err(Box::new(UsageError(format!(
                        "s1 cutoff {cutoff} needs --long-run (class numbers for every prime up to the cutoff)"
                    ))));
                }
                let cache = batch_class_numbers(cutoff)?;
                let s = bounds::sum1_partial(cutoff, &cache)?;
                println!("{}", density_str(&s));
            }
            SumKind::S2 => {
                let lo = 1_000_000_000;
                let hi = cutoff.unwrap_or(if long_run { 2_800_000_000 } else { 1_200_000_000 });
                if hi > 1_200_000_000 && !long_run {
                    return Err(Box::new(UsageError(format!(
                        "s2 up to {hi} needs --long-run (multi-minute segmented sieve)"
                    ))));
                }
                let s = bounds::sum2_with_progress(lo, hi, long_run)?;
                println!("range ({lo}, {hi}]");
                println!("{}", density_str(&s));
            }
            SumKind::S3 => {
                let t = bounds::sum3_tail()?;
                println!("exceptional {:.6e}", t.exceptional);
                println!("main {:.6e}", t.main);
            }
        },
        Cmd::Records { limit } => {
            let cache = batch_class_numbers(limit)?;
            for r in bounds::record_search(limit, &cache)? {
                println!(
                    "ell={} d={} t_cm={} ratio={:.6} l_value_product={:.6}",
                    r.ell, r.d, r.t_cm, r.ratio, r.l_value_product
                );
            }
        }
    }
    Ok(())
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // odd-degree guard for subcommands taking a degree argument
    let degree = match &cli.cmd {
        Cmd::Groups { d } | Cmd::Tcm { d } | Cmd::Stratum { d, .. } => Some(*d),
        _ => None,
    };
    if let Some(d) = degree {
        if let Err(msg) = require_odd(d) {
            eprintln!("usage error: {msg}");
            return ExitCode::from(2);
        }
    }
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

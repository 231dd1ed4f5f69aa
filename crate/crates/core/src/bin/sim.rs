use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pimdram::bench::copy::{bench_copy, run_auto, run_copy, run_zero, CopyMode, CopyRun, Placement};
use pimdram::bench::dbi::{bench_dbi, random_traces};
use pimdram::bench::htap::{Table, FIELDS, FIELD_PATTERN};
use pimdram::bench::ops::{buddy_throughput, run_buddy_op, run_cache_trace, run_gather, BuddyRun, CacheTraceStats, GatherRun};
use pimdram::bench::BenchReport;
use pimdram::buddy::BitwiseOp;
use pimdram::cache::trace::parse_cache_trace;
use pimdram::cache::DbiPolicy;
use pimdram::command::{format_command, parse_trace, run_timed};
use pimdram::config::{builtin_profiles, load_config, parse_override, SimConfig};
use pimdram::rank::RankState;
use pimdram::system::cache_config_for;
use pimdram::{bench, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "sim", version, about = "Command-level DRAM rank simulator and benchmarks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Built-in profile name or path to a key = value config file.
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true, value_parser = parse_set)]
    overrides: Vec<(String, String)>,
    /// Write results as CSV to this file.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
}

fn parse_set(s: &str) -> std::result::Result<(String, String), String> {
    parse_override(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Row copy and zeroing in every mode with latency and traffic checks.
    Copy,
    /// Weekly-activity bitmap index query.
    Bitmap {
        #[arg(long, default_value_t = 1 << 20)]
        users: usize,
        #[arg(long, default_value_t = 4)]
        weeks: usize,
    },
    /// Union, intersection and difference of 15 sets.
    Sets {
        #[arg(long, default_value_t = 1 << 20)]
        universe: usize,
        #[arg(long, default_value_t = 100_000)]
        elems: usize,
    },
    /// Transactions and field scans over a row-store table.
    Htap {
        #[arg(long, default_value_t = 32_768)]
        tuples: u64,
        #[arg(long, default_value_t = 1000)]
        txns: u64,
        #[arg(long, default_value_t = 8)]
        fields: usize,
    },
    /// Differential DBI replay, flush lookups and DAWB row hits.
    Dbi {
        #[arg(long, default_value_t = 10)]
        traces: usize,
        #[arg(long, default_value_t = 100_000)]
        ops: usize,
        /// Replay this cache trace file instead of random traces.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Single row-granular copy or zeroing operation.
    #[command(subcommand)]
    Rowclone(RowcloneCmd),
    /// In-DRAM bitwise operations.
    #[command(subcommand)]
    Buddy(BuddyCmd),
    /// Gathered column accesses.
    #[command(subcommand)]
    Gsdram(GsdramCmd),
    /// Run a DRAM command trace and print every command with the totals.
    Trace { file: PathBuf },
    /// Replay a cache trace through the DBI cache and print its statistics.
    CacheTrace {
        file: PathBuf,
        #[arg(long, default_value = "lrw")]
        policy: DbiPolicy,
        #[arg(long)]
        dawb: bool,
    },
    /// List built-in profiles.
    Profiles,
}

#[derive(Subcommand)]
enum RowcloneCmd {
    /// Copy `--size` bytes in one mode.
    Copy {
        #[arg(long, default_value = "fpm")]
        mode: CopyMode,
        #[arg(long)]
        size: Option<u64>,
        /// Destination placement for `--mode auto`: same-subarray or random.
        #[arg(long, default_value = "same-subarray")]
        placement: Placement,
    },
    /// Zero `--size` bytes.
    Zero {
        #[arg(long)]
        size: Option<u64>,
        /// Zero over the channel instead of in DRAM.
        #[arg(long)]
        baseline: bool,
    },
}

#[derive(Subcommand)]
enum BuddyCmd {
    /// Run one operation over random rows and verify the result.
    Op {
        #[arg(long, default_value = "and")]
        kind: BitwiseOp,
        #[arg(long, default_value_t = 1)]
        rows: u32,
    },
    /// Analytic result throughput across banks.
    Throughput {
        #[arg(long, default_value_t = 1)]
        banks: u32,
        /// One operation; all seven when omitted.
        #[arg(long)]
        kind: Option<BitwiseOp>,
    },
}

#[derive(Subcommand)]
enum GsdramCmd {
    /// Gather one (pattern, column) line from a row of value indices.
    Gather {
        #[arg(long)]
        pattern: u32,
        #[arg(long)]
        col: u32,
    },
    /// Field scan by gathered lines against a tuple scan.
    Htap {
        #[arg(long, default_value_t = 4096)]
        tuples: u64,
        #[arg(long, default_value_t = 8)]
        fields: usize,
    },
}

impl Command {
    fn default_profile(&self) -> &'static str {
        match self {
            Command::Copy | Command::Rowclone(_) => "ddr3-1066-rowclone",
            _ => "ddr3-1600-buddy",
        }
    }
}

/// Destination for CSV output: the `--csv` file, or stdout.
fn csv_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout()),
    })
}

fn write_records<const N: usize>(path: &Option<PathBuf>, header: [&str; N], rows: &[[String; N]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(csv_out(path)?);
    let err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

fn finish_report(r: &BenchReport, g: &Global) -> Result<bool> {
    print!("{}", r.summary());
    if let Some(p) = &g.csv {
        r.write_csv(File::create(p)?)?;
    }
    Ok(r.passed())
}

fn default_size(sim: &SimConfig, size: Option<u64>) -> u64 {
    size.unwrap_or_else(|| sim.geometry.row_bytes())
}

/// Runs one command; `Ok(false)` means a check failed.
fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    let profile = g.profile.as_deref().unwrap_or(cli.command.default_profile());
    let sim = load_config(profile, &g.overrides)?;
    match cli.command {
        Command::Copy => finish_report(&bench_copy(&sim, g.seed)?, g),
        Command::Bitmap { users, weeks } => finish_report(&bench::bitmap::bench_bitmap(&sim, users, weeks, g.seed)?, g),
        Command::Sets { universe, elems } => finish_report(&bench::sets::bench_set_ops(&sim, universe, elems, g.seed)?, g),
        Command::Htap { tuples, txns, fields } => {
            finish_report(&bench::htap::bench_htap(&sim, tuples, txns, fields, g.seed)?, g)
        }
        Command::Dbi { traces, ops, trace } => {
            let base = cache_config_for(&sim.geometry);
            let traces = match trace {
                Some(p) => vec![parse_cache_trace(&std::fs::read_to_string(p)?)?],
                None => random_traces(&base, traces, ops, g.seed),
            };
            finish_report(&bench_dbi(&base, &traces, g.seed)?, g)
        }
        Command::Rowclone(RowcloneCmd::Copy { mode, size, placement }) => {
            let size = default_size(&sim, size);
            let r = match mode {
                CopyMode::Auto => run_auto(&sim, size, placement, g.seed)?,
                m => run_copy(&sim, m, size, g.seed)?,
            };
            write_records(&g.csv, CopyRun::CSV_HEADER, &[r.csv_record()])?;
            Ok(r.reserved_intact)
        }
        Command::Rowclone(RowcloneCmd::Zero { size, baseline }) => {
            let r = run_zero(&sim, !baseline, default_size(&sim, size), g.seed)?;
            write_records(&g.csv, CopyRun::CSV_HEADER, &[r.csv_record()])?;
            Ok(r.reserved_intact)
        }
        Command::Buddy(BuddyCmd::Op { kind, rows }) => {
            let r = run_buddy_op(&sim, kind, rows, g.seed)?;
            write_records(&g.csv, BuddyRun::CSV_HEADER, &[r.csv_record()])?;
            Ok(r.verified)
        }
        Command::Buddy(BuddyCmd::Throughput { banks, kind }) => {
            let ops = kind.map_or(BitwiseOp::ALL.to_vec(), |k| vec![k]);
            let runs = ops
                .into_iter()
                .map(|op| buddy_throughput(&sim, op, banks))
                .collect::<Result<Vec<_>>>()?;
            let records: Vec<_> = runs.iter().map(BuddyRun::csv_record).collect();
            write_records(&g.csv, BuddyRun::CSV_HEADER, &records)?;
            Ok(runs.iter().all(|r| r.verified))
        }
        Command::Gsdram(GsdramCmd::Gather { pattern, col }) => {
            let r = run_gather(&sim, pattern, col)?;
            eprintln!("values: {:?}", r.values);
            write_records(&g.csv, GatherRun::CSV_HEADER, &[r.csv_record()])?;
            Ok(true)
        }
        Command::Gsdram(GsdramCmd::Htap { tuples, fields }) => gsdram_htap(&sim, tuples, fields, g),
        Command::Trace { file } => {
            let cmds = parse_trace(&std::fs::read_to_string(file)?, &sim.geometry)?;
            let mut rank = RankState::new(sim.geometry.clone())?;
            for c in &cmds {
                println!("{}", format_command(c, &sim.geometry));
            }
            let r = run_timed(&mut rank, cmds, &sim.timing)?;
            for line in &r.reads {
                println!("read {}", line.iter().map(|w| format!("{w:016x}")).collect::<Vec<_>>().join(" "));
            }
            let l = r.ledger;
            write_records(
                &g.csv,
                ["ns", "energy", "bus_bytes", "commands"],
                &[[
                    l.elapsed_ns().to_string(),
                    l.energy.to_string(),
                    l.bus_bytes.to_string(),
                    l.counts.total().to_string(),
                ]],
            )?;
            Ok(true)
        }
        Command::CacheTrace { file, policy, dawb } => {
            let ops = parse_cache_trace(&std::fs::read_to_string(file)?)?;
            let cfg = pimdram::cache::CacheConfig {
                dbi_policy: policy,
                dawb,
                ..cache_config_for(&sim.geometry)
            };
            let s = run_cache_trace(&cfg, &ops)?;
            write_records(&g.csv, CacheTraceStats::CSV_HEADER, &[s.csv_record()])?;
            Ok(true)
        }
        Command::Profiles => {
            for p in builtin_profiles() {
                println!("{p}");
            }
            Ok(true)
        }
    }
}

/// One-field scans of the same table by gathered lines and by tuples.
fn gsdram_htap(sim: &SimConfig, tuples: u64, fields: usize, g: &Global) -> Result<bool> {
    if fields != FIELDS {
        return Err(Error::InvalidValue {
            key: "fields".into(),
            value: fields.to_string(),
            reason: format!("tuples have {FIELDS} fields"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let data: Vec<_> = (0..tuples).map(|_| std::array::from_fn(|_| rng.random::<u32>() as u64)).collect();
    let mut runs = Vec::new();
    let mut sums = Vec::new();
    for pattern in [FIELD_PATTERN, 0] {
        let mut t = Table::new(sim, &data)?;
        let (sum, lines) = if pattern == 0 { t.scan_rows(0)? } else { t.scan_gathered(0)? };
        sums.push(sum);
        runs.push(GatherRun {
            pattern,
            lines_fetched: lines,
            ledger: t.sys.cache().memory().ledger(),
            values: Vec::new(),
        });
    }
    let records: Vec<_> = runs.iter().map(GatherRun::csv_record).collect();
    write_records(&g.csv, GatherRun::CSV_HEADER, &records)?;
    Ok(sums[0] == sums[1] && runs[1].lines_fetched == 8 * runs[0].lines_fetched)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error ({}): {e}", e.code());
            ExitCode::from(2)
        }
    }
}

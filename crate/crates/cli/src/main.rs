//! Command-line front end: database/query/answer generation, recovery,
//! privacy and converse audits, capacity tables, and the TCP server/client
//! pair.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or I/O error,
//! 3 audit failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ipir::audit::{
    audit_exact_with, audit_montecarlo_with, converse_audit, posterior_for_query, Deviation,
    GroupAndCode, PinnedDemand, PrivacyReport, QueryScheme,
};
use ipir::capacity;
use ipir::net::{fetch, PirServer};
use ipir::params::ProtocolParams;
use ipir::protocol::{compute_answer, generate_query, recover, MessageDb};
use ipir::rng::SeededRng;
use ipir::wire;

const EXIT_VALIDATION: u8 = 2;
const EXIT_AUDIT_FAIL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ipir",
    version,
    about = "Individually-private information retrieval: protocol, audits, capacities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeChoice {
    /// Honest scheme: random grouping with a fixed public generator.
    GroupAndCode,
    /// Leaky regression fixture; the auditors must fail it.
    PinnedDemand,
}

impl SchemeChoice {
    fn as_scheme(self) -> &'static dyn QueryScheme {
        match self {
            SchemeChoice::GroupAndCode => &GroupAndCode,
            SchemeChoice::PinnedDemand => &PinnedDemand,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random database file.
    GenDb {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a query file for a demand and side-information set.
    GenQuery {
        /// Read K, n, q from an existing database file header.
        #[arg(long, conflicts_with_all = ["k", "q", "n"])]
        db_header: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        /// Expected demand size; checked against --demand when given.
        #[arg(long)]
        d: Option<usize>,
        /// Expected side-information size; checked against --side when given.
        #[arg(long)]
        m: Option<usize>,
        /// Comma-separated 1-based demand indices, e.g. 1,2.
        #[arg(long)]
        demand: String,
        /// Comma-separated 1-based side-information indices, e.g. 3.
        #[arg(long)]
        side: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the answer file for a query against a database.
    Answer {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the demand messages from an answer plus side information.
    Recover {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        answer: PathBuf,
        /// Comma-separated 1-based demand indices.
        #[arg(long)]
        demand: String,
        /// Comma-separated 1-based side-information indices.
        #[arg(long)]
        side: String,
        /// Database file holding the side messages, ascending by index.
        #[arg(long)]
        side_data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit the per-query privacy condition, exactly or by sampling.
    AuditPrivacy {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        q: u64,
        /// Exhaustive audit with exact rational probabilities.
        #[arg(long, conflicts_with_all = ["trials", "tol"])]
        exact: bool,
        /// Monte-Carlo trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Monte-Carlo tolerance on the worst bin deviation.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SchemeChoice::GroupAndCode)]
        scheme: SchemeChoice,
    },
    /// Evaluate the converse-bound quantities on a query file.
    AuditConverse {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
    },
    /// Print capacity expressions for (K, D, M).
    Capacity {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
    },
    /// Serve a database over TCP; prints the bound address, then blocks.
    Serve {
        #[arg(long)]
        db: PathBuf,
        #[arg(long, default_value = "127.0.0.1:0")]
        addr: String,
    },
    /// Send a query file to a server and store the answer file.
    Fetch {
        #[arg(long)]
        addr: String,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn read_text(path: &Path) -> ipir::Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn parse_index_list(text: &str) -> ipir::Result<Vec<usize>> {
    let mut out = Vec::new();
    for tok in text.split(',') {
        let idx: usize = tok
            .trim()
            .parse()
            .map_err(|_| ipir::Error::InvalidIndexSet(format!("bad index {tok:?}")))?;
        if idx == 0 {
            return Err(ipir::Error::InvalidIndexSet(
                "indices are 1-based; 0 is not valid".into(),
            ));
        }
        out.push(idx - 1);
    }
    Ok(out)
}

fn check_declared_size(name: &str, declared: Option<usize>, actual: usize) -> ipir::Result<()> {
    if let Some(expected) = declared {
        if expected != actual {
            return Err(ipir::Error::InvalidIndexSet(format!(
                "--{name} declares {expected} indices but {actual} were given"
            )));
        }
    }
    Ok(())
}

fn print_privacy_report(report: &PrivacyReport) {
    match &report.worst_deviation {
        Deviation::Exact(dev) => {
            println!("mode exact");
            println!("queries-audited {}", report.queries_audited);
            println!("worst-deviation {dev}");
        }
        Deviation::Estimate(dev) => {
            println!("mode monte-carlo");
            println!("bins-audited {}", report.queries_audited);
            println!("worst-deviation {dev:.6}");
        }
    }
    println!("privacy {}", if report.pass { "PASS" } else { "FAIL" });
}

fn run(command: Command) -> ipir::Result<u8> {
    match command {
        Command::GenDb { k, n, q, seed, out } => {
            if k == 0 || n == 0 {
                return Err(ipir::Error::InvalidParams(
                    "message count and length must be positive".into(),
                ));
            }
            let mut rng = SeededRng::new(seed);
            let db = MessageDb::random(k, n, q, &mut rng)?;
            fs::write(&out, wire::serialize_db(&db))?;
            Ok(0)
        }
        Command::GenQuery {
            db_header,
            k,
            q,
            n,
            d,
            m,
            demand,
            side,
            seed,
            out,
        } => {
            let (k, n, q) = match db_header {
                Some(path) => wire::parse_db_header(&read_text(&path)?)?,
                None => {
                    let k = k.ok_or_else(|| {
                        ipir::Error::InvalidParams("--k required without --db-header".into())
                    })?;
                    let q = q.ok_or_else(|| {
                        ipir::Error::InvalidParams("--q required without --db-header".into())
                    })?;
                    (k, n.unwrap_or(1), q)
                }
            };
            let demand = parse_index_list(&demand)?;
            let side = parse_index_list(&side)?;
            check_declared_size("d", d, demand.len())?;
            check_declared_size("m", m, side.len())?;
            let params = ProtocolParams::derive(k, demand.len(), side.len(), q, n)?;
            let mut rng = SeededRng::new(seed);
            let query = generate_query(&params, &demand, &side, &mut rng)?;
            fs::write(&out, wire::serialize_query(&query))?;
            Ok(0)
        }
        Command::Answer { db, query, out } => {
            let db = wire::parse_db(&read_text(&db)?)?;
            let query = wire::parse_query(&read_text(&query)?)?;
            let answer = compute_answer(&query, &db)?;
            fs::write(&out, wire::serialize_answer(&answer))?;
            Ok(0)
        }
        Command::Recover {
            query,
            answer,
            demand,
            side,
            side_data,
            out,
        } => {
            let query = wire::parse_query(&read_text(&query)?)?;
            let answer = wire::parse_answer(&read_text(&answer)?)?;
            let demand = parse_index_list(&demand)?;
            let side = parse_index_list(&side)?;
            let side_db = wire::parse_db(&read_text(&side_data)?)?;
            if side_db.message_count() != side.len() {
                return Err(ipir::Error::Inconsistent(format!(
                    "side data holds {} messages for {} side indices",
                    side_db.message_count(),
                    side.len()
                )));
            }
            let params = ProtocolParams::derive(
                query.message_count(),
                demand.len(),
                side.len(),
                query.generator().modulus(),
                answer.message_len(),
            )?;
            let side_rows: Vec<Vec<u64>> = (0..side_db.message_count())
                .map(|i| side_db.message(i).to_vec())
                .collect();
            let messages = recover(&params, &query, &answer, &demand, &side, &side_rows)?;
            let out_db = MessageDb::new(params.field_order(), params.message_len(), messages)?;
            fs::write(&out, wire::serialize_db(&out_db))?;
            Ok(0)
        }
        Command::AuditPrivacy {
            k,
            d,
            m,
            q,
            exact,
            trials,
            tol,
            seed,
            scheme,
        } => {
            let params = ProtocolParams::derive(k, d, m, q, 1)?;
            let scheme = scheme.as_scheme();
            let report = if exact {
                audit_exact_with(scheme, &params)?
            } else {
                let trials = trials.ok_or_else(|| {
                    ipir::Error::InvalidParams("--trials required unless --exact".into())
                })?;
                let tol = tol.ok_or_else(|| {
                    ipir::Error::InvalidParams("--tol required unless --exact".into())
                })?;
                let mut rng = SeededRng::new(seed);
                audit_montecarlo_with(scheme, &params, trials, tol, &mut rng)?
            };
            print_privacy_report(&report);
            Ok(if report.pass { 0 } else { EXIT_AUDIT_FAIL })
        }
        Command::AuditConverse { query, d, m } => {
            let query = wire::parse_query(&read_text(&query)?)?;
            let params = ProtocolParams::derive(
                query.message_count(),
                d,
                m,
                query.generator().modulus(),
                1,
            )?;
            let table = posterior_for_query(&query, &params)?;
            let report = converse_audit(&table, &params, params.download_cost())?;
            println!("feasible-tuples {}", table.tuple_count());
            println!("beta-functional {}", report.lhs);
            println!("bound {}", report.bound);
            println!("download {}", report.download);
            println!("min-download {}", report.min_download);
            println!("converse {}", if report.pass { "PASS" } else { "FAIL" });
            Ok(if report.pass { 0 } else { EXIT_AUDIT_FAIL })
        }
        Command::Capacity { k, d, m } => {
            println!("bound {}", capacity::linear_capacity_bound(k, d, m)?);
            match capacity::achievable_rate(k, d, m)? {
                Some(rate) => println!("achievable {rate}"),
                None => println!("achievable none (group size does not divide K)"),
            }
            println!("prior {}", capacity::prior_scheme_rate(k, d, m)?);
            println!(
                "conjecture {} (conjecture)",
                capacity::conjectured_capacity(k, d, m)?
            );
            match capacity::known_capacity(k, d, m)? {
                Some(cap) => println!("known {cap}"),
                None => println!("known none (settled only for D=2, M<=2)"),
            }
            Ok(0)
        }
        Command::Serve { db, addr } => {
            let db = wire::parse_db(&read_text(&db)?)?;
            let server = PirServer::bind(addr.as_str(), db)?;
            println!("listening on {}", server.local_addr()?);
            use std::io::Write;
            std::io::stdout().flush()?;
            server.run()?;
            Ok(0)
        }
        Command::Fetch { addr, query, out } => {
            let query_text = read_text(&query)?;
            let answer_text = fetch(addr.as_str(), &query_text)?;
            fs::write(&out, answer_text)?;
            Ok(0)
        }
    }
}

//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its runtime (visible with `--nocapture`).
//!
//! Run with: `cargo test -p ipir-cli --test acceptance -- --nocapture`

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use itertools::Itertools;
use num_integer::Integer;

use ipir::audit::{
    audit_exact, audit_exact_with, audit_montecarlo, converse_audit, converse_lhs,
    posterior_for_query, Deviation, PinnedDemand,
};
use ipir::capacity::{
    achievable_rate, conjectured_capacity, known_capacity, linear_capacity_bound, prior_scheme_rate,
};
use ipir::field::is_prime;
use ipir::mds::{build_generator, verify_mds};
use ipir::params::ProtocolParams;
use ipir::protocol::{compute_answer, generate_query, recover, MessageDb};
use ipir::rational::Rational;
use ipir::rng::SeededRng;

fn finish(criterion: u32, name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion} took {elapsed:?}, budget {budget:?}"
    );
    println!(
        "criterion {criterion} ({name}): PASS in {} ms",
        elapsed.as_millis()
    );
}

fn smallest_admissible_prime(d_per_group: usize, group_size: usize) -> u64 {
    if d_per_group == 1 {
        return 2;
    }
    (group_size as u64..).find(|&q| is_prime(q)).unwrap()
}

/// 1. Whenever the group size divides K, the download L satisfies
///    D/L = (D+M)/K as reduced rationals and L = ceil(DK/(D+M)).
#[test]
fn criterion_1_capacity_tightness() {
    let started = Instant::now();
    let mut checked = 0u32;
    for k in 3..=24usize {
        for d in 2..=4usize {
            for m in 1..=6usize {
                if k < d + m {
                    continue;
                }
                let r = d.gcd(&m);
                let group_size = d / r + m / r;
                if k % group_size != 0 {
                    continue;
                }
                let q = smallest_admissible_prime(d / r, group_size);
                let params = ProtocolParams::derive(k, d, m, q, 1).unwrap();
                let l = params.download_cost();
                assert_eq!(params.rate(), Rational::new((d + m) as i64, k as i64));
                assert_eq!(l, (d * k).div_ceil(d + m), "K={k} D={d} M={m}");
                checked += 1;
            }
        }
    }
    assert!(checked > 50, "sweep unexpectedly small: {checked}");
    finish(1, "capacity tightness", started, Duration::from_secs(1));
}

/// 2. Exact recovery over every disjoint demand/side pair for the stated
///    parameter grid, random databases, zero tolerance.
#[test]
fn criterion_2_recoverability() {
    let started = Instant::now();
    let mut rng = SeededRng::new(424242);
    let mut combos_run = 0u32;
    for k in [6usize, 9, 12] {
        for (d, m) in [(2usize, 1usize), (2, 4), (2, 2)] {
            for q in [2u64, 3, 5] {
                for n in [1usize, 4] {
                    let Ok(params) = ProtocolParams::derive(k, d, m, q, n) else {
                        continue;
                    };
                    combos_run += 1;
                    let db = MessageDb::random(k, n, q, &mut rng).unwrap();
                    for side in (0..k).combinations(m) {
                        let complement: Vec<usize> = (0..k).filter(|i| !side.contains(i)).collect();
                        for demand in complement.iter().copied().combinations(d) {
                            let query = generate_query(&params, &demand, &side, &mut rng).unwrap();
                            let answer = compute_answer(&query, &db).unwrap();
                            let side_data: Vec<Vec<u64>> =
                                side.iter().map(|&i| db.message(i).to_vec()).collect();
                            let got = recover(&params, &query, &answer, &demand, &side, &side_data)
                                .unwrap();
                            for (w, message) in demand.iter().zip(&got) {
                                assert_eq!(message, db.message(*w));
                            }
                        }
                    }
                }
            }
        }
    }
    // 42 = the valid (K, D, M, q, n) combinations in the grid above
    assert_eq!(combos_run, 42);
    finish(2, "recoverability", started, Duration::from_secs(30));
}

/// 3. The exhaustive audit proves exact privacy for three parameter sets,
///    and flags the leaky fixture.
#[test]
fn criterion_3_exact_privacy() {
    let mut timings = Vec::new();
    for (k, d, m, q) in [(6usize, 2usize, 1usize, 3u64), (9, 2, 4, 3), (8, 2, 2, 2)] {
        let started = Instant::now();
        let params = ProtocolParams::derive(k, d, m, q, 1).unwrap();
        let report = audit_exact(&params).unwrap();
        assert!(report.pass, "privacy deviation at K={k} D={d} M={m}");
        match &report.worst_deviation {
            Deviation::Exact(dev) => assert!(dev.is_zero()),
            Deviation::Estimate(_) => panic!("exact audit must report a rational"),
        }
        let elapsed = started.elapsed();
        assert!(
            elapsed < Duration::from_secs(60),
            "audit of K={k} D={d} M={m} too slow: {elapsed:?}"
        );
        timings.push(format!("K={k} D={d} M={m} in {} ms", elapsed.as_millis()));
    }

    let params = ProtocolParams::derive(6, 2, 1, 3, 1).unwrap();
    let broken = audit_exact_with(&PinnedDemand, &params).unwrap();
    assert!(!broken.pass, "leaky fixture must fail the exact audit");

    println!("criterion 3 (exact privacy): PASS ({})", timings.join(", "));
}

/// 4. Monte-Carlo audit: 10^5 trials at (6,2,1), every bin estimate within
///    0.02 of 1/3.
#[test]
fn criterion_4_montecarlo_privacy() {
    let started = Instant::now();
    let params = ProtocolParams::derive(6, 2, 1, 3, 1).unwrap();
    let mut rng = SeededRng::new(8);
    let report = audit_montecarlo(&params, 100_000, 0.02, &mut rng).unwrap();
    assert!(report.pass);
    assert!(report.queries_audited > 0);
    let Deviation::Estimate(dev) = report.worst_deviation else {
        panic!("monte-carlo audit must report an estimate");
    };
    assert!(dev <= 0.02);
    finish(4, "monte-carlo privacy", started, Duration::from_secs(30));
}

/// 5. Converse audit: the (6,2,1) posterior meets the bound with equality
///    and the minimum download; random beta vectors never exceed the bound,
///    strictly below unless uniform.
#[test]
fn criterion_5_converse_audit() {
    let started = Instant::now();
    let params = ProtocolParams::derive(6, 2, 1, 3, 1).unwrap();
    let mut rng = SeededRng::new(5);
    let query = generate_query(&params, &[0, 1], &[2], &mut rng).unwrap();
    let table = posterior_for_query(&query, &params).unwrap();
    let report = converse_audit(&table, &params, params.download_cost()).unwrap();
    assert!(report.pass);
    assert_eq!(report.lhs, Rational::from_integer(2));
    assert_eq!(report.bound, Rational::from_integer(2));
    assert_eq!(report.download, 4);
    assert_eq!(report.min_download, 4);

    let k = 6usize;
    let alpha = Rational::new(2, 6);
    let bound = Rational::from_integer(2); // M K / (D + M) = 6/3
    let uniform = Rational::new(1, 6);
    for trial in 0..100 {
        let weights: Vec<u64> = (0..k).map(|_| rng.below(64)).collect();
        let total: u64 = weights.iter().sum();
        if total == 0 {
            continue;
        }
        let betas: Vec<Rational> = weights
            .iter()
            .map(|&w| Rational::new(w as i64, total as i64))
            .collect();
        let lhs = converse_lhs(&alpha, &betas);
        assert!(lhs <= bound, "trial {trial} exceeded the bound");
        if betas.iter().any(|b| *b != uniform) {
            assert!(
                lhs < bound,
                "trial {trial} met the bound with nonuniform beta"
            );
        }
    }
    let equal = vec![uniform; k];
    assert_eq!(converse_lhs(&alpha, &equal), bound);
    finish(5, "converse audit", started, Duration::from_secs(10));
}

/// 6. The earlier scheme is strictly beaten at (9,2,4) and tied at (12,2,4).
#[test]
fn criterion_6_prior_scheme_separation() {
    let started = Instant::now();
    let prior = prior_scheme_rate(9, 2, 4).unwrap();
    let achievable = achievable_rate(9, 2, 4).unwrap().unwrap();
    assert_eq!(prior, Rational::new(1, 2));
    assert_eq!(achievable, Rational::new(2, 3));
    assert!(prior < achievable);

    let prior = prior_scheme_rate(12, 2, 4).unwrap();
    let achievable = achievable_rate(12, 2, 4).unwrap().unwrap();
    assert_eq!(prior, Rational::new(1, 2));
    assert_eq!(achievable, Rational::new(1, 2));
    finish(
        6,
        "prior-scheme separation",
        started,
        Duration::from_secs(1),
    );
}

/// 7. The settled capacities agree with the linear bound on their
///    divisibility ranges, swept to K = 60.
#[test]
fn criterion_7_known_capacity_consistency() {
    let started = Instant::now();
    for k in 3..=60usize {
        let known = known_capacity(k, 2, 1).unwrap().unwrap();
        assert_eq!(known, Rational::new(2, (2 * k).div_ceil(3) as i64));
        if k % 3 == 0 {
            assert_eq!(known, linear_capacity_bound(k, 2, 1).unwrap());
        }
    }
    for k in 4..=60usize {
        let known = known_capacity(k, 2, 2).unwrap().unwrap();
        assert_eq!(known, Rational::new(2, k.div_ceil(2) as i64));
        if k % 2 == 0 {
            assert_eq!(known, linear_capacity_bound(k, 2, 2).unwrap());
        }
    }
    // the conjecture matches the settled values everywhere they exist
    for k in 4..=60usize {
        assert_eq!(
            conjectured_capacity(k, 2, 2).unwrap(),
            known_capacity(k, 2, 2).unwrap().unwrap()
        );
    }
    finish(
        7,
        "known-capacity consistency",
        started,
        Duration::from_secs(1),
    );
}

/// 8. The generator construction satisfies the full-rank-submatrix property
///    for every shape up to length 8 over the smallest admissible prime.
#[test]
fn criterion_8_generator_property() {
    let started = Instant::now();
    for t in 1..=8usize {
        for d in 1..=t {
            let q = smallest_admissible_prime(d, t);
            let g = build_generator(t, d, q).unwrap();
            assert!(verify_mds(&g), "t={t} d={d} q={q}");
        }
    }
    finish(8, "generator property", started, Duration::from_secs(5));
}

struct ServeGuard {
    child: Child,
    addr: String,
}

impl ServeGuard {
    fn start(db: &Path) -> Self {
        let mut child = Command::new(env!("CARGO_BIN_EXE_ipir"))
            .args([
                "serve",
                "--db",
                db.to_str().unwrap(),
                "--addr",
                "127.0.0.1:0",
            ])
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        let stdout = child.stdout.take().unwrap();
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line).unwrap();
        let addr = line
            .trim()
            .strip_prefix("listening on ")
            .expect("server announces its address")
            .to_string();
        ServeGuard { child, addr }
    }
}

impl Drop for ServeGuard {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// 9. The networked pipeline (generate, serve, fetch, recover) reproduces
///    the demand rows byte for byte.
#[test]
fn criterion_9_networked_pipeline() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let run = |args: &[&str]| {
        let status = Command::new(env!("CARGO_BIN_EXE_ipir"))
            .args(args)
            .current_dir(root)
            .status()
            .unwrap();
        assert!(status.success(), "command failed: {args:?}");
    };

    run(&[
        "gen-db", "--k", "6", "--n", "4", "--q", "3", "--seed", "42", "--out", "db.txt",
    ]);
    run(&[
        "gen-query",
        "--db-header",
        "db.txt",
        "--demand",
        "1,2",
        "--side",
        "3",
        "--d",
        "2",
        "--m",
        "1",
        "--seed",
        "42",
        "--out",
        "q.txt",
    ]);

    let db_text = fs::read_to_string(root.join("db.txt")).unwrap();
    let db_lines: Vec<&str> = db_text.lines().collect();
    fs::write(
        root.join("side.txt"),
        format!("IPIR-DB v1 1 4 3\n{}\n", db_lines[3]),
    )
    .unwrap();

    let server = ServeGuard::start(&root.join("db.txt"));
    run(&[
        "fetch",
        "--addr",
        &server.addr,
        "--query",
        "q.txt",
        "--out",
        "a.txt",
    ]);
    run(&[
        "recover",
        "--query",
        "q.txt",
        "--answer",
        "a.txt",
        "--demand",
        "1,2",
        "--side",
        "3",
        "--side-data",
        "side.txt",
        "--out",
        "rec.txt",
    ]);

    let recovered = fs::read_to_string(root.join("rec.txt")).unwrap();
    let rec_rows: Vec<&str> = recovered.lines().skip(1).collect();
    assert_eq!(
        rec_rows,
        &db_lines[1..3],
        "demand rows must match byte for byte"
    );
    finish(9, "networked pipeline", started, Duration::from_secs(5));
}

//! Canonical text formats for databases, queries, and answers.
//!
//! All three artifacts are line-oriented UTF-8 with a versioned header:
//!
//! ```text
//! IPIR-DB v1 K n q      then K lines of n symbols
//! IPIR-Q  v1 K P T d q  then P lines of T ascending 1-based indices,
//!                       then d generator rows of T coefficients
//! IPIR-A  v1 P d n q    then P*d lines of n symbols (group-major)
//! ```
//!
//! Canonical form: fields separated by single spaces, every line terminated
//! by one `\n`, no other whitespace. Parsing rejects anything non-canonical,
//! so `serialize(parse(text)) == text` holds byte for byte.
//!
//! Indices are 1-based on the wire and 0-based in memory.

use crate::error::{Error, Result};
use crate::field::is_prime;
use crate::mds::build_generator;
use crate::protocol::{Answer, MessageDb, Query};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Splits a canonical line into fields, rejecting empty lines, leading or
/// trailing blanks, doubled spaces, tabs, and carriage returns.
fn fields(line: &str, lineno: usize) -> Result<Vec<&str>> {
    if line.is_empty() {
        return Err(parse_err(lineno, "empty line"));
    }
    if line.starts_with(' ') || line.ends_with(' ') || line.contains("  ") {
        return Err(parse_err(lineno, "non-canonical spacing"));
    }
    if line.contains('\t') || line.contains('\r') {
        return Err(parse_err(lineno, "tabs and carriage returns not allowed"));
    }
    Ok(line.split(' ').collect())
}

fn parse_number<T: std::str::FromStr>(token: &str, lineno: usize, what: &str) -> Result<T> {
    // leading zeros or signs would break canonical round-tripping
    if token.len() > 1 && token.starts_with('0') {
        return Err(parse_err(lineno, format!("{what} has a leading zero")));
    }
    token
        .parse()
        .map_err(|_| parse_err(lineno, format!("invalid {what}: {token:?}")))
}

/// Iterates canonical lines: each must end with `\n`, none after the last.
struct Lines<'a> {
    rest: &'a str,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            rest: text,
            lineno: 0,
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        match self.rest.find('\n') {
            Some(pos) => {
                let line = &self.rest[..pos];
                self.rest = &self.rest[pos + 1..];
                Ok(line)
            }
            None if self.rest.is_empty() => Err(parse_err(self.lineno, "unexpected end of file")),
            None => Err(parse_err(self.lineno, "missing final newline")),
        }
    }

    fn expect_eof(&self) -> Result<()> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(parse_err(self.lineno + 1, "trailing content after body"))
        }
    }
}

fn parse_symbol_row(line: &str, lineno: usize, n: usize, q: u64) -> Result<Vec<u64>> {
    let toks = fields(line, lineno)?;
    if toks.len() != n {
        return Err(parse_err(
            lineno,
            format!("expected {n} symbols, found {}", toks.len()),
        ));
    }
    let mut row = Vec::with_capacity(n);
    for tok in toks {
        let v: u64 = parse_number(tok, lineno, "symbol")?;
        if v >= q {
            return Err(parse_err(
                lineno,
                format!("symbol {v} not below field order {q}"),
            ));
        }
        row.push(v);
    }
    Ok(row)
}

// ---------------------------------------------------------------------------
// Database files
// ---------------------------------------------------------------------------

/// Header fields of a database file: `(K, n, q)`.
pub fn parse_db_header(text: &str) -> Result<(usize, usize, u64)> {
    let mut lines = Lines::new(text);
    let header = fields(lines.next_line()?, 1)?;
    if header.len() != 5 || header[0] != "IPIR-DB" || header[1] != "v1" {
        return Err(parse_err(1, "expected header: IPIR-DB v1 K n q"));
    }
    let k: usize = parse_number(header[2], 1, "message count")?;
    let n: usize = parse_number(header[3], 1, "message length")?;
    let q: u64 = parse_number(header[4], 1, "field order")?;
    if k == 0 || n == 0 {
        return Err(parse_err(1, "message count and length must be positive"));
    }
    if !is_prime(q) {
        return Err(parse_err(1, format!("field order {q} is not prime")));
    }
    Ok((k, n, q))
}

pub fn parse_db(text: &str) -> Result<MessageDb> {
    let (k, n, q) = parse_db_header(text)?;
    let mut lines = Lines::new(text);
    lines.next_line()?; // header
    let mut messages = Vec::with_capacity(k);
    for i in 0..k {
        messages.push(parse_symbol_row(lines.next_line()?, i + 2, n, q)?);
    }
    lines.expect_eof()?;
    MessageDb::new(q, n, messages)
}

pub fn serialize_db(db: &MessageDb) -> String {
    let mut out = format!(
        "IPIR-DB v1 {} {} {}\n",
        db.message_count(),
        db.message_len(),
        db.modulus()
    );
    for i in 0..db.message_count() {
        push_symbol_row(&mut out, db.message(i));
    }
    out
}

fn push_symbol_row(out: &mut String, row: &[u64]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

// ---------------------------------------------------------------------------
// Query files
// ---------------------------------------------------------------------------

pub fn parse_query(text: &str) -> Result<Query> {
    let mut lines = Lines::new(text);
    let header = fields(lines.next_line()?, 1)?;
    if header.len() != 7 || header[0] != "IPIR-Q" || header[1] != "v1" {
        return Err(parse_err(1, "expected header: IPIR-Q v1 K P T d q"));
    }
    let k: usize = parse_number(header[2], 1, "message count")?;
    let p: usize = parse_number(header[3], 1, "group count")?;
    let t: usize = parse_number(header[4], 1, "group size")?;
    let d: usize = parse_number(header[5], 1, "code dimension")?;
    let q: u64 = parse_number(header[6], 1, "field order")?;
    if p * t != k {
        return Err(parse_err(
            1,
            format!("{p} groups of {t} do not cover {k} indices"),
        ));
    }
    if d == 0 || d > t {
        return Err(parse_err(1, format!("code dimension {d} not in 1..={t}")));
    }
    if !is_prime(q) {
        return Err(parse_err(1, format!("field order {q} is not prime")));
    }

    let mut groups = Vec::with_capacity(p);
    for g in 0..p {
        let lineno = g + 2;
        let toks = fields(lines.next_line()?, lineno)?;
        if toks.len() != t {
            return Err(parse_err(
                lineno,
                format!("expected {t} indices, found {}", toks.len()),
            ));
        }
        let mut group = Vec::with_capacity(t);
        for tok in toks {
            let idx: usize = parse_number(tok, lineno, "message index")?;
            if idx == 0 || idx > k {
                return Err(parse_err(lineno, format!("index {idx} not in 1..={k}")));
            }
            group.push(idx - 1);
        }
        if !group.windows(2).all(|w| w[0] < w[1]) {
            return Err(parse_err(lineno, "indices not strictly increasing"));
        }
        groups.push(group);
    }

    let generator = build_generator(t, d, q).map_err(|e| parse_err(1, e.to_string()))?;
    for row in 0..d {
        let lineno = p + row + 2;
        let coeffs = parse_symbol_row(lines.next_line()?, lineno, t, q)?;
        if coeffs != generator.matrix().row(row) {
            return Err(parse_err(
                lineno,
                "generator row does not match the canonical generator for these parameters",
            ));
        }
    }
    lines.expect_eof()?;
    Query::new(k, groups, generator).map_err(|e| parse_err(2, e.to_string()))
}

pub fn serialize_query(query: &Query) -> String {
    let k = query.message_count();
    let p = query.groups().len();
    let t = query.generator().code_length();
    let d = query.generator().dimension();
    let q = query.generator().modulus();
    let mut out = format!("IPIR-Q v1 {k} {p} {t} {d} {q}\n");
    for group in query.groups() {
        for (j, idx) in group.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&(idx + 1).to_string());
        }
        out.push('\n');
    }
    for row in 0..d {
        push_symbol_row(&mut out, query.generator().matrix().row(row));
    }
    out
}

// ---------------------------------------------------------------------------
// Answer files
// ---------------------------------------------------------------------------

pub fn parse_answer(text: &str) -> Result<Answer> {
    let mut lines = Lines::new(text);
    let header = fields(lines.next_line()?, 1)?;
    if header.len() != 6 || header[0] != "IPIR-A" || header[1] != "v1" {
        return Err(parse_err(1, "expected header: IPIR-A v1 P d n q"));
    }
    let p: usize = parse_number(header[2], 1, "group count")?;
    let d: usize = parse_number(header[3], 1, "code dimension")?;
    let n: usize = parse_number(header[4], 1, "message length")?;
    let q: u64 = parse_number(header[5], 1, "field order")?;
    if p == 0 || d == 0 || n == 0 {
        return Err(parse_err(1, "counts must be positive"));
    }
    if !is_prime(q) {
        return Err(parse_err(1, format!("field order {q} is not prime")));
    }
    let mut coded = Vec::with_capacity(p * d);
    for i in 0..p * d {
        coded.push(parse_symbol_row(lines.next_line()?, i + 2, n, q)?);
    }
    lines.expect_eof()?;
    Answer::new(q, n, p, d, coded).map_err(|e| parse_err(2, e.to_string()))
}

pub fn serialize_answer(answer: &Answer) -> String {
    let mut out = format!(
        "IPIR-A v1 {} {} {} {}\n",
        answer.groups(),
        answer.per_group(),
        answer.message_len(),
        answer.modulus()
    );
    for row in answer.coded() {
        push_symbol_row(&mut out, row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProtocolParams;
    use crate::protocol::{compute_answer, generate_query};
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    #[test]
    fn db_roundtrip_fixture() {
        let text = "IPIR-DB v1 3 2 5\n0 4\n1 2\n3 3\n";
        let db = parse_db(text).unwrap();
        assert_eq!(db.message_count(), 3);
        assert_eq!(db.message(2), &[3, 3]);
        assert_eq!(serialize_db(&db), text);
    }

    #[test]
    fn db_header_mismatch_names_the_line() {
        let text = "IPIR-DB v1 3 2 5\n0 4\n1 2\n";
        match parse_db(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn db_symbol_out_of_range_rejected() {
        let text = "IPIR-DB v1 1 2 5\n0 5\n";
        match parse_db(text).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("5"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_canonical_spacing_rejected() {
        for text in [
            "IPIR-DB v1 1 2 5\n0  4\n",
            "IPIR-DB v1 1 2 5\n0 4 \n",
            "IPIR-DB  v1 1 2 5\n0 4\n",
            "IPIR-DB v1 1 2 5\n0 4",
            "IPIR-DB v1 1 2 05\n0 4\n",
        ] {
            assert!(parse_db(text).is_err(), "accepted: {text:?}");
        }
    }

    #[test]
    fn query_roundtrip_and_validation() {
        let p = ProtocolParams::derive(6, 2, 1, 3, 1).unwrap();
        let mut rng = SeededRng::new(4);
        let query = generate_query(&p, &[0, 3], &[5], &mut rng).unwrap();
        let text = serialize_query(&query);
        let parsed = parse_query(&text).unwrap();
        assert_eq!(parsed.groups(), query.groups());
        assert_eq!(serialize_query(&parsed), text);

        // tamper with a generator coefficient
        let mut bad = text.clone();
        let last_row_start = bad.trim_end().rfind('\n').unwrap() + 1;
        bad.replace_range(last_row_start.., "0 1 1\n");
        assert!(parse_query(&bad).is_err());
    }

    #[test]
    fn query_rejects_non_partition() {
        // index 2 appears twice, 4 missing (1-based)
        let text = "IPIR-Q v1 6 2 3 2 3\n1 2 3\n2 5 6\n1 1 1\n0 1 2\n";
        assert!(parse_query(text).is_err());
    }

    #[test]
    fn answer_roundtrip() {
        let p = ProtocolParams::derive(6, 2, 1, 3, 4).unwrap();
        let mut rng = SeededRng::new(9);
        let db = crate::protocol::MessageDb::random(6, 4, 3, &mut rng).unwrap();
        let query = generate_query(&p, &[1, 2], &[0], &mut rng).unwrap();
        let answer = compute_answer(&query, &db).unwrap();
        let text = serialize_answer(&answer);
        let parsed = parse_answer(&text).unwrap();
        assert_eq!(parsed, answer);
        assert_eq!(serialize_answer(&parsed), text);
    }

    proptest! {
        #[test]
        fn db_roundtrip_random(seed in 0u64..100_000) {
            let mut rng = SeededRng::new(seed);
            let q = [2u64, 3, 5, 7][rng.below(4) as usize];
            let k = rng.below(6) as usize + 1;
            let n = rng.below(5) as usize + 1;
            let db = crate::protocol::MessageDb::random(k, n, q, &mut rng).unwrap();
            let text = serialize_db(&db);
            let back = parse_db(&text).unwrap();
            prop_assert_eq!(&back, &db);
            prop_assert_eq!(serialize_db(&back), text);
        }

        #[test]
        fn query_roundtrip_random(seed in 0u64..100_000) {
            let mut rng = SeededRng::new(seed);
            let (k, dsz, msz, q) = [(6, 2, 1, 3u64), (9, 2, 4, 3), (8, 2, 2, 2)]
                [rng.below(3) as usize];
            let p = ProtocolParams::derive(k, dsz, msz, q, 1).unwrap();
            let side = rng.subset(msz, k);
            let complement: Vec<usize> = (0..k).filter(|i| !side.contains(i)).collect();
            let demand: Vec<usize> = rng
                .subset(dsz, complement.len())
                .into_iter()
                .map(|i| complement[i])
                .collect();
            let query = generate_query(&p, &demand, &side, &mut rng).unwrap();
            let text = serialize_query(&query);
            let back = parse_query(&text).unwrap();
            prop_assert_eq!(back.groups(), query.groups());
            prop_assert_eq!(serialize_query(&back), text);
        }
    }
}

//! Private retrieval by grouping and coding.
//!
//! A retrieval runs in three steps. The user partitions the message indices
//! into equal-size groups so that the demand and side-information indices
//! fill a few groups exactly, and sends the partition together with the
//! public code generator as the query. The server returns, for each group,
//! the coded combinations of that group's messages. The user strips the
//! side-information contribution from the demand-bearing groups and solves
//! the remaining square systems.
//!
//! Message indices are `0`-based throughout the library; the text formats in
//! [`crate::wire`] use `1`-based numbering.

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, Fq};
use crate::mds::{build_generator, GeneratorMatrix};
use crate::params::ProtocolParams;
use crate::rng::SeededRng;

/// The server's immutable store: `K` messages of `n` symbols over F_q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageDb {
    modulus: u64,
    message_len: usize,
    messages: Vec<Vec<u64>>,
}

impl MessageDb {
    /// Builds a database from raw symbol rows; every symbol must already be
    /// in `[0, q)`.
    pub fn new(q: u64, message_len: usize, messages: Vec<Vec<u64>>) -> Result<Self> {
        if !crate::field::is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        for (i, msg) in messages.iter().enumerate() {
            if msg.len() != message_len {
                return Err(Error::DimensionMismatch(format!(
                    "message {i} has {} symbols, expected {message_len}",
                    msg.len()
                )));
            }
            if let Some(&bad) = msg.iter().find(|&&v| v >= q) {
                return Err(Error::InvalidParams(format!(
                    "symbol {bad} out of range for field order {q}"
                )));
            }
        }
        Ok(MessageDb {
            modulus: q,
            message_len,
            messages,
        })
    }

    /// Uniformly random database.
    pub fn random(k: usize, message_len: usize, q: u64, rng: &mut SeededRng) -> Result<Self> {
        if !crate::field::is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        let messages = (0..k)
            .map(|_| (0..message_len).map(|_| rng.below(q)).collect())
            .collect();
        MessageDb::new(q, message_len, messages)
    }

    pub fn message_count(&self) -> usize {
        self.messages.len()
    }

    pub fn message_len(&self) -> usize {
        self.message_len
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn message(&self, i: usize) -> &[u64] {
        &self.messages[i]
    }
}

/// A query: an ordered list of groups (each sorted ascending) plus the
/// public generator. The group list order is uniformly shuffled at
/// generation time and carries no information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    groups: Vec<Vec<usize>>,
    generator: GeneratorMatrix,
}

impl Query {
    /// Assembles a query from parts, enforcing the structural invariants:
    /// the groups partition `0..k`, each group is strictly increasing of the
    /// generator's code length.
    pub fn new(k: usize, groups: Vec<Vec<usize>>, generator: GeneratorMatrix) -> Result<Self> {
        let t = generator.code_length();
        if groups.len() * t != k {
            return Err(Error::Inconsistent(format!(
                "{} groups of size {t} cannot partition {k} indices",
                groups.len()
            )));
        }
        let mut seen = vec![false; k];
        for group in &groups {
            if group.len() != t {
                return Err(Error::Inconsistent(format!(
                    "group of size {} in a size-{t} partition",
                    group.len()
                )));
            }
            if !group.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Inconsistent("group not strictly increasing".into()));
            }
            for &i in group {
                if i >= k {
                    return Err(Error::IndexOutOfRange { index: i, limit: k });
                }
                if seen[i] {
                    return Err(Error::Inconsistent(format!("index {i} appears twice")));
                }
                seen[i] = true;
            }
        }
        Ok(Query { groups, generator })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    pub fn message_count(&self) -> usize {
        self.groups.len() * self.generator.code_length()
    }

    /// The full download as one coefficient matrix: one row per coded
    /// combination (group-major), one column per message index.
    pub fn coefficient_matrix(&self) -> FieldMatrix {
        let k = self.message_count();
        let d = self.generator.dimension();
        let v = self.generator.matrix();
        let mut values = vec![0u64; self.groups.len() * d * k];
        for (g, group) in self.groups.iter().enumerate() {
            for l in 0..d {
                let row = g * d + l;
                for (j, &idx) in group.iter().enumerate() {
                    values[row * k + idx] = v.value(l, j);
                }
            }
        }
        FieldMatrix::from_values(v.modulus(), self.groups.len() * d, k, values)
            .expect("coefficient matrix dimensions are consistent")
    }
}

/// A server answer: `P * d` coded vectors of `n` symbols, group-major
/// (outer index the group, inner the generator row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    modulus: u64,
    message_len: usize,
    groups: usize,
    per_group: usize,
    coded: Vec<Vec<u64>>,
}

impl Answer {
    pub fn new(
        q: u64,
        message_len: usize,
        groups: usize,
        per_group: usize,
        coded: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if coded.len() != groups * per_group {
            return Err(Error::DimensionMismatch(format!(
                "{} coded vectors for {groups} groups of {per_group}",
                coded.len()
            )));
        }
        for row in &coded {
            if row.len() != message_len {
                return Err(Error::DimensionMismatch(format!(
                    "coded vector has {} symbols, expected {message_len}",
                    row.len()
                )));
            }
            if row.iter().any(|&v| v >= q) {
                return Err(Error::InvalidParams(format!(
                    "coded symbol out of range for field order {q}"
                )));
            }
        }
        Ok(Answer {
            modulus: q,
            message_len,
            groups,
            per_group,
            coded,
        })
    }

    pub fn coded(&self) -> &[Vec<u64>] {
        &self.coded
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn per_group(&self) -> usize {
        self.per_group
    }

    pub fn message_len(&self) -> usize {
        self.message_len
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }
}

pub(crate) fn validate_index_sets(
    params: &ProtocolParams,
    demand: &[usize],
    side: &[usize],
) -> Result<()> {
    let k = params.message_count();
    for set in [demand, side] {
        for &i in set {
            if i >= k {
                return Err(Error::IndexOutOfRange { index: i, limit: k });
            }
        }
    }
    let mut d_sorted = demand.to_vec();
    d_sorted.sort_unstable();
    d_sorted.dedup();
    if d_sorted.len() != params.demand_size() || demand.len() != params.demand_size() {
        return Err(Error::InvalidIndexSet(format!(
            "demand must be {} distinct indices",
            params.demand_size()
        )));
    }
    let mut s_sorted = side.to_vec();
    s_sorted.sort_unstable();
    s_sorted.dedup();
    if s_sorted.len() != params.side_size() || side.len() != params.side_size() {
        return Err(Error::InvalidIndexSet(format!(
            "side information must be {} distinct indices",
            params.side_size()
        )));
    }
    if d_sorted.iter().any(|i| s_sorted.binary_search(i).is_ok()) {
        return Err(Error::InvalidIndexSet(
            "demand and side information must be disjoint".into(),
        ));
    }
    Ok(())
}

/// Generates a query for demand set `demand` and side-information set `side`.
///
/// Randomization, in rng-consumption order:
/// 1. a uniform subset of group slots receives the demand-bearing groups;
/// 2. the demand set is shuffled and cut into equal blocks, one per chosen
///    slot (ascending); the side set likewise, pairing block `j` with block
///    `j`;
/// 3. the remaining indices are shuffled and cut into full groups for the
///    remaining slots (ascending);
/// 4. the final group list is shuffled.
///
/// Groups are then sorted internally, so the emitted query is a pure
/// function of the unordered partition and the slot shuffle.
pub fn generate_query(
    params: &ProtocolParams,
    demand: &[usize],
    side: &[usize],
    rng: &mut SeededRng,
) -> Result<Query> {
    validate_index_sets(params, demand, side)?;
    let r = params.demand_groups();
    let d = params.demand_per_group();
    let m = params.side_per_group();
    let p = params.group_count();
    let k = params.message_count();

    let chosen = rng.subset(r, p);

    let mut demand_perm = demand.to_vec();
    rng.shuffle(&mut demand_perm);
    let mut side_perm = side.to_vec();
    rng.shuffle(&mut side_perm);

    let in_union: Vec<bool> = {
        let mut mask = vec![false; k];
        for &i in demand.iter().chain(side.iter()) {
            mask[i] = true;
        }
        mask
    };
    let mut rest: Vec<usize> = (0..k).filter(|&i| !in_union[i]).collect();
    rng.shuffle(&mut rest);

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); p];
    let is_chosen: Vec<bool> = {
        let mut mask = vec![false; p];
        for &s in &chosen {
            mask[s] = true;
        }
        mask
    };
    for (j, &slot) in chosen.iter().enumerate() {
        let mut group: Vec<usize> = demand_perm[j * d..(j + 1) * d].to_vec();
        group.extend_from_slice(&side_perm[j * m..(j + 1) * m]);
        groups[slot] = group;
    }
    let free_slots: Vec<usize> = (0..p).filter(|&s| !is_chosen[s]).collect();
    let t = params.group_size();
    for (j, &slot) in free_slots.iter().enumerate() {
        groups[slot] = rest[j * t..(j + 1) * t].to_vec();
    }

    rng.shuffle(&mut groups);
    for group in &mut groups {
        group.sort_unstable();
    }

    let generator = build_generator(t, d, params.field_order())?;
    Query::new(k, groups, generator)
}

/// Server side: codes each group of messages with the generator rows,
/// componentwise over the symbols.
pub fn compute_answer(query: &Query, db: &MessageDb) -> Result<Answer> {
    if query.message_count() != db.message_count() {
        return Err(Error::Inconsistent(format!(
            "query partitions {} indices, database has {} messages",
            query.message_count(),
            db.message_count()
        )));
    }
    if query.generator().modulus() != db.modulus() {
        return Err(Error::ModulusMismatch(
            query.generator().modulus(),
            db.modulus(),
        ));
    }
    let v = query.generator().matrix();
    let d = query.generator().dimension();
    let n = db.message_len();
    let fq = Fq::new(db.modulus());
    let mut coded = Vec::with_capacity(query.groups().len() * d);
    for group in query.groups() {
        for l in 0..d {
            let mut acc = vec![0u64; n];
            for (j, &idx) in group.iter().enumerate() {
                let coeff = v.value(l, j);
                if coeff == 0 {
                    continue;
                }
                let msg = db.message(idx);
                for (slot, &sym) in acc.iter_mut().zip(msg) {
                    *slot = fq.add(*slot, fq.mul(coeff, sym));
                }
            }
            coded.push(acc);
        }
    }
    Answer::new(db.modulus(), n, query.groups().len(), d, coded)
}

/// User side: recovers the demand messages from the answer and the side
/// information (given as one vector per side index, ascending).
///
/// Returns the demand messages ordered by ascending demand index.
pub fn recover(
    params: &ProtocolParams,
    query: &Query,
    answer: &Answer,
    demand: &[usize],
    side: &[usize],
    side_data: &[Vec<u64>],
) -> Result<Vec<Vec<u64>>> {
    validate_index_sets(params, demand, side)?;
    let d = params.demand_per_group();
    let m = params.side_per_group();
    let n = params.message_len();
    if query.message_count() != params.message_count()
        || query.generator().dimension() != d
        || query.generator().code_length() != params.group_size()
    {
        return Err(Error::Inconsistent(
            "query does not match parameters".into(),
        ));
    }
    if answer.groups() != query.groups().len()
        || answer.per_group() != d
        || answer.message_len() != n
    {
        return Err(Error::Inconsistent(
            "answer does not match query shape".into(),
        ));
    }
    if answer.modulus() != params.field_order() {
        return Err(Error::ModulusMismatch(
            answer.modulus(),
            params.field_order(),
        ));
    }
    let mut side_sorted = side.to_vec();
    side_sorted.sort_unstable();
    if side_data.len() != side_sorted.len() || side_data.iter().any(|v| v.len() != n) {
        return Err(Error::Inconsistent(
            "side data must hold one length-n vector per side index".into(),
        ));
    }

    let q = params.field_order();
    let fq = Fq::new(q);
    let v = query.generator().matrix();
    let demand_set: Vec<usize> = {
        let mut w = demand.to_vec();
        w.sort_unstable();
        w
    };

    let mut recovered: Vec<Option<Vec<u64>>> = vec![None; demand_set.len()];
    let mut demand_groups_seen = 0usize;
    for (g, group) in query.groups().iter().enumerate() {
        let w_positions: Vec<usize> = (0..group.len())
            .filter(|&j| demand_set.binary_search(&group[j]).is_ok())
            .collect();
        let s_positions: Vec<usize> = (0..group.len())
            .filter(|&j| side_sorted.binary_search(&group[j]).is_ok())
            .collect();
        if w_positions.is_empty() && s_positions.is_empty() {
            continue;
        }
        if w_positions.len() != d || s_positions.len() != m {
            return Err(Error::Inconsistent(format!(
                "group {g} mixes {} demand and {} side indices; expected {d} and {m}",
                w_positions.len(),
                s_positions.len()
            )));
        }
        demand_groups_seen += 1;

        // Strip the side-information contribution from this group's rows.
        let mut stripped: Vec<Vec<u64>> = Vec::with_capacity(d);
        for l in 0..d {
            let mut z = answer.coded()[g * d + l].clone();
            for &j in &s_positions {
                let coeff = v.value(l, j);
                if coeff == 0 {
                    continue;
                }
                let side_row =
                    &side_data[side_sorted.binary_search(&group[j]).expect("side position")];
                for (slot, &sym) in z.iter_mut().zip(side_row) {
                    *slot = fq.sub(*slot, fq.mul(coeff, sym));
                }
            }
            stripped.push(z);
        }

        // d x d system over the demand columns; nonsingular because every
        // maximal square submatrix of the generator is.
        let coeffs: Vec<u64> = (0..d)
            .flat_map(|l| w_positions.iter().map(move |&j| (l, j)))
            .map(|(l, j)| v.value(l, j))
            .collect();
        let system = FieldMatrix::from_values(q, d, d, coeffs)?;
        let rhs_cols: Vec<Vec<u64>> = (0..n)
            .map(|sym| (0..d).map(|l| stripped[l][sym]).collect())
            .collect();
        let solutions = system.solve_columns(&rhs_cols)?;

        for (t_pos, &j) in w_positions.iter().enumerate() {
            let idx = group[j];
            let slot = demand_set.binary_search(&idx).expect("demand position");
            let message: Vec<u64> = (0..n).map(|sym| solutions[sym][t_pos]).collect();
            recovered[slot] = Some(message);
        }
    }
    if demand_groups_seen != params.demand_groups() {
        return Err(Error::Inconsistent(format!(
            "found {demand_groups_seen} demand-bearing groups, expected {}",
            params.demand_groups()
        )));
    }
    Ok(recovered
        .into_iter()
        .map(|msg| msg.expect("every demand index lies in a demand-bearing group"))
        .collect())
}

//! d-dissociated character sets.
//!
//! A finite set `{gamma_1, ..., gamma_m}` of distinct nontrivial characters is
//! d-dissociated when every relation `prod_j gamma_j^{k_j} = 1` with
//! `k_j in {-d..d}` forces each factor `gamma_j^{k_j}` to be trivial. Verdicts
//! here always concern the finite set given; the infinite-set notion is the
//! statement for every finite subset and is not decidable by enumeration.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{make_group, Character, FiniteAbelianGroup};

/// Default cap on the number of exponent tuples one check may visit.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// An ordered list of distinct nontrivial characters of one group.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacterSystem {
    group: FiniteAbelianGroup,
    characters: Vec<Character>,
}

impl CharacterSystem {
    pub fn new(group: &FiniteAbelianGroup, characters: Vec<Character>) -> Result<Self> {
        for (i, chi) in characters.iter().enumerate() {
            if chi.group() != group {
                return Err(Error::GroupMismatch);
            }
            if chi.is_trivial() {
                return Err(Error::TrivialCharacterPresent(i));
            }
            if let Some(j) = characters[..i].iter().position(|c| c == chi) {
                return Err(Error::DuplicateCharacter(j, i));
            }
        }
        Ok(Self { group: group.clone(), characters })
    }

    pub fn from_exponents(group: &FiniteAbelianGroup, exponents: &[Vec<usize>]) -> Result<Self> {
        let characters = exponents.iter().map(|a| group.character(a)).collect::<Result<Vec<_>>>()?;
        Self::new(group, characters)
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn characters(&self) -> &[Character] {
        &self.characters
    }

    pub fn get(&self, i: usize) -> &Character {
        &self.characters[i]
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    /// Smallest character order in the system, `None` when empty.
    pub fn min_order(&self) -> Option<usize> {
        self.characters.iter().map(Character::order).min()
    }

    pub fn exponent_vectors(&self) -> Vec<Vec<usize>> {
        self.characters.iter().map(|c| c.exponents().to_vec()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DissociationReport {
    pub d: usize,
    pub dissociated: bool,
    /// Lexicographically first violating tuple in the order `-d < ... < d`.
    pub witness: Option<Vec<i64>>,
}

/// Whether `witness` multiplies out to the trivial character while some
/// factor `gamma_j^{k_j}` is nontrivial.
pub fn witness_is_violation(system: &CharacterSystem, witness: &[i64]) -> bool {
    if witness.len() != system.len() {
        return false;
    }
    let mut product = system.group().trivial_character();
    let mut any_nontrivial = false;
    for (chi, &k) in system.characters().iter().zip(witness) {
        let p = chi.pow(k);
        any_nontrivial |= !p.is_trivial();
        product = product.mul(&p).expect("same group");
    }
    product.is_trivial() && any_nontrivial
}

struct PowerTable {
    d: usize,
    /// `powers[j][k + d]` is the exponent vector of `gamma_j^k`.
    powers: Vec<Vec<Vec<usize>>>,
    trivial: Vec<Vec<bool>>,
}

impl PowerTable {
    fn new(chars: &[Character], d: usize) -> Self {
        let span = 2 * d + 1;
        let mut powers = Vec::with_capacity(chars.len());
        let mut trivial = Vec::with_capacity(chars.len());
        for chi in chars {
            let row: Vec<Character> = (0..span).map(|i| chi.pow(i as i64 - d as i64)).collect();
            trivial.push(row.iter().map(Character::is_trivial).collect());
            powers.push(row.into_iter().map(|c| c.exponents().to_vec()).collect());
        }
        Self { d, powers, trivial }
    }
}

fn check_degree(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::ZeroDegree)
    } else {
        Ok(())
    }
}

fn tuple_count(span: usize, len: usize) -> u128 {
    (span as u128).checked_pow(len as u32).unwrap_or(u128::MAX)
}

/// Direct enumeration of `{-d..d}^m` under [`DEFAULT_BUDGET`].
pub fn is_d_dissociated(system: &CharacterSystem, d: usize) -> Result<DissociationReport> {
    is_d_dissociated_with_budget(system, d, DEFAULT_BUDGET)
}

pub fn is_d_dissociated_with_budget(system: &CharacterSystem, d: usize, budget: u128) -> Result<DissociationReport> {
    check_degree(d)?;
    let m = system.len();
    let needed = tuple_count(2 * d + 1, m);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let table = PowerTable::new(system.characters(), d);
    let mut search = DirectSearch {
        group: system.group(),
        table: &table,
        acc: vec![vec![0; system.group().rank()]; m + 1],
        nontrivial: vec![false; m + 1],
        choice: vec![0; m],
    };
    let witness = if m == 0 { None } else { search.run(0) };
    Ok(DissociationReport { d, dissociated: witness.is_none(), witness })
}

struct DirectSearch<'a> {
    group: &'a FiniteAbelianGroup,
    table: &'a PowerTable,
    acc: Vec<Vec<usize>>,
    nontrivial: Vec<bool>,
    choice: Vec<usize>,
}

impl DirectSearch<'_> {
    fn run(&mut self, depth: usize) -> Option<Vec<i64>> {
        let m = self.choice.len();
        if depth == m {
            if self.nontrivial[m] && self.acc[m].iter().all(|&a| a == 0) {
                let d = self.table.d as i64;
                return Some(self.choice.iter().map(|&c| c as i64 - d).collect());
            }
            return None;
        }
        for c in 0..2 * self.table.d + 1 {
            self.choice[depth] = c;
            let (head, tail) = self.acc.split_at_mut(depth + 1);
            self.group.add_digits(&head[depth], &self.table.powers[depth][c], &mut tail[0]);
            self.nontrivial[depth + 1] = self.nontrivial[depth] || !self.table.trivial[depth][c];
            if let Some(w) = self.run(depth + 1) {
                return Some(w);
            }
        }
        None
    }
}

struct HalfTuple {
    sum: Vec<usize>,
    nontrivial: bool,
    tuple: Vec<i64>,
}

/// All tuples over `chars[range]` in lexicographic order.
fn enumerate_half(group: &FiniteAbelianGroup, table: &PowerTable, range: std::ops::Range<usize>) -> Vec<HalfTuple> {
    let span = 2 * table.d + 1;
    let len = range.len();
    let d = table.d as i64;
    let mut out = Vec::new();
    let mut choice = vec![0usize; len];
    loop {
        let mut sum = vec![0usize; group.rank()];
        let mut scratch = sum.clone();
        let mut nontrivial = false;
        for (offset, &c) in choice.iter().enumerate() {
            let j = range.start + offset;
            group.add_digits(&sum, &table.powers[j][c], &mut scratch);
            std::mem::swap(&mut sum, &mut scratch);
            nontrivial |= !table.trivial[j][c];
        }
        out.push(HalfTuple { sum, nontrivial, tuple: choice.iter().map(|&c| c as i64 - d).collect() });
        // odometer, last position fastest
        let mut pos = len;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < span {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// Meet-in-the-middle variant: enumerates both halves of the system and
/// matches sums through a hash map. Same verdict as [`is_d_dissociated`];
/// the witness is also the lexicographically first one.
pub fn is_d_dissociated_mitm(system: &CharacterSystem, d: usize) -> Result<DissociationReport> {
    is_d_dissociated_mitm_with_budget(system, d, DEFAULT_BUDGET)
}

pub fn is_d_dissociated_mitm_with_budget(
    system: &CharacterSystem,
    d: usize,
    budget: u128,
) -> Result<DissociationReport> {
    check_degree(d)?;
    let m = system.len();
    if m == 0 {
        return Ok(DissociationReport { d, dissociated: true, witness: None });
    }
    let h = m.div_ceil(2);
    let needed = tuple_count(2 * d + 1, h);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let group = system.group();
    let table = PowerTable::new(system.characters(), d);
    let left = enumerate_half(group, &table, 0..h);
    let right = enumerate_half(group, &table, h..m);

    // first nontrivial and first all-trivial completion per sum
    let mut index: HashMap<Vec<usize>, (Option<usize>, Option<usize>)> = HashMap::new();
    for (i, t) in right.iter().enumerate() {
        let slot = index.entry(t.sum.clone()).or_default();
        if t.nontrivial {
            slot.0.get_or_insert(i);
        } else {
            slot.1.get_or_insert(i);
        }
    }

    for l in &left {
        let target: Vec<usize> = l.sum.iter().zip(group.orders()).map(|(&a, &mo)| (mo - a) % mo).collect();
        let Some(&(nt, tr)) = index.get(&target) else { continue };
        let pick = if l.nontrivial {
            match (nt, tr) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            }
        } else {
            nt
        };
        if let Some(r) = pick {
            let mut witness = l.tuple.clone();
            witness.extend_from_slice(&right[r].tuple);
            return Ok(DissociationReport { d, dissociated: false, witness: Some(witness) });
        }
    }
    Ok(DissociationReport { d, dissociated: true, witness: None })
}

/// Picks the direct enumerator when it fits the budget, otherwise the
/// meet-in-the-middle one.
pub fn check_dissociated(system: &CharacterSystem, d: usize) -> Result<DissociationReport> {
    check_degree(d)?;
    if tuple_count(2 * d + 1, system.len()) <= 1_000_000 {
        is_d_dissociated(system, d)
    } else {
        is_d_dissociated_mitm(system, d)
    }
}

/// `{chi_{q^k} : k = 1..count}` in the dual of `Z_M`.
///
/// Negative frequencies are not listed separately: the exponent range
/// `{-d..d}` already covers `chi_{-n} = chi_n^{-1}`. For `q >= d + 1` the
/// integer relation argument applies verbatim because `M > 2 d q^count`
/// keeps every `sum k_j q^j` away from nonzero multiples of `M`.
pub fn hadamard_trig_system(ratio: usize, count: usize, modulus: usize, d: usize) -> Result<CharacterSystem> {
    check_degree(d)?;
    if ratio < 2 {
        return Err(Error::RatioTooSmall(ratio));
    }
    let top = (ratio as u128).checked_pow(count as u32).unwrap_or(u128::MAX);
    let required = top.saturating_mul(2 * d as u128);
    if (modulus as u128) <= required {
        return Err(Error::ModulusTooSmall { modulus, required });
    }
    let group = make_group(&[modulus])?;
    let mut freq = 1usize;
    let mut chars = Vec::with_capacity(count);
    for _ in 0..count {
        freq *= ratio;
        chars.push(group.character(&[freq])?);
    }
    CharacterSystem::new(&group, chars)
}

/// Generalized Rademacher system `R_0..R_{count-1}` on `Z_p^count`, where
/// `R_k` reads digit `k`.
pub fn rademacher_system(p: usize, count: usize) -> Result<CharacterSystem> {
    let group = make_group(&vec![p; count])?;
    let chars = (0..count)
        .map(|k| {
            let mut exps = vec![0usize; count];
            exps[k] = 1;
            group.character(&exps)
        })
        .collect::<Result<Vec<_>>>()?;
    CharacterSystem::new(&group, chars)
}

/// Vilenkin-Chrestenson characters on `Z_p^rank` whose exponent vectors are
/// supported on the given digit positions, one character per set.
///
/// `values[i][j]` is the digit (in `1..p`) placed at `sets[i][j]`. Each set
/// must contain a position absent from all preceding sets; such a system is
/// d-dissociated for every d.
pub fn vc_system_from_digit_sets(
    p: usize,
    rank: usize,
    sets: &[Vec<usize>],
    values: &[Vec<usize>],
) -> Result<CharacterSystem> {
    if sets.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} digit sets but {} value lists",
            sets.len(),
            values.len()
        )));
    }
    let group = make_group(&vec![p; rank])?;
    let mut seen = vec![false; rank];
    let mut chars = Vec::with_capacity(sets.len());
    for (i, (set, vals)) in sets.iter().zip(values).enumerate() {
        if set.len() != vals.len() {
            return Err(Error::InvalidArgument(format!("set {i} has {} positions but {} values", set.len(), vals.len())));
        }
        let mut exps = vec![0usize; rank];
        let mut fresh = false;
        for (&pos, &v) in set.iter().zip(vals) {
            if pos >= rank {
                return Err(Error::PositionOutOfRange { position: pos, rank });
            }
            if v == 0 || v >= p {
                return Err(Error::DigitValueOutOfRange { value: v, max: p - 1 });
            }
            if exps[pos] != 0 {
                return Err(Error::InvalidArgument(format!("set {i} repeats position {pos}")));
            }
            exps[pos] = v;
            fresh |= !seen[pos];
        }
        if !fresh {
            return Err(Error::StaircaseViolated(i));
        }
        for &pos in set {
            seen[pos] = true;
        }
        chars.push(group.character(&exps)?);
    }
    CharacterSystem::new(&group, chars)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic(m: usize, exps: &[usize]) -> CharacterSystem {
        let g = make_group(&[m]).unwrap();
        CharacterSystem::from_exponents(&g, &exps.iter().map(|&a| vec![a]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn z5_one_two() {
        let sys = cyclic(5, &[1, 2]);
        let r1 = is_d_dissociated(&sys, 1).unwrap();
        assert!(r1.dissociated);
        assert_eq!(r1.witness, None);
        let r2 = is_d_dissociated(&sys, 2).unwrap();
        assert!(!r2.dissociated);
        // -2*1 + 1*2 = 0; lexicographically before (2, -1)
        assert_eq!(r2.witness, Some(vec![-2, 1]));
        assert!(witness_is_violation(&sys, &[2, -1]));
        assert!(witness_is_violation(&sys, r2.witness.as_ref().unwrap()));
    }

    #[test]
    fn trivial_and_duplicate_rejected() {
        let g = make_group(&[6]).unwrap();
        assert_eq!(
            CharacterSystem::from_exponents(&g, &[vec![1], vec![0]]).unwrap_err(),
            Error::TrivialCharacterPresent(1)
        );
        assert_eq!(
            CharacterSystem::from_exponents(&g, &[vec![2], vec![3], vec![2]]).unwrap_err(),
            Error::DuplicateCharacter(0, 2)
        );
    }

    #[test]
    fn zero_degree_rejected() {
        assert_eq!(is_d_dissociated(&cyclic(5, &[1]), 0).unwrap_err(), Error::ZeroDegree);
    }

    #[test]
    fn budget_enforced() {
        let sys = cyclic(97, &[1, 3, 9, 27]);
        assert!(matches!(
            is_d_dissociated_with_budget(&sys, 2, 100),
            Err(Error::BudgetExceeded { needed: 625, budget: 100 })
        ));
        // 5^2 = 25 per half fits
        assert!(is_d_dissociated_mitm_with_budget(&sys, 2, 100).is_ok());
    }

    #[test]
    fn single_character_cases() {
        let sys = cyclic(7, &[3]);
        for d in 1..=6 {
            assert!(is_d_dissociated_mitm(&sys, d).unwrap().dissociated);
        }
        let sys = cyclic(4, &[2]);
        assert!(is_d_dissociated(&sys, 1).unwrap().dissociated);
        assert!(is_d_dissociated_mitm(&sys, 1).unwrap().dissociated);
        // an order-2 character stays dissociated at every level
        assert!(is_d_dissociated(&sys, 3).unwrap().dissociated);
    }

    #[test]
    fn mitm_agrees_on_z7() {
        let g = make_group(&[7]).unwrap();
        for d in 1..=3 {
            for a in 1..7 {
                for b in a + 1..7 {
                    let sys = CharacterSystem::from_exponents(&g, &[vec![a], vec![b]]).unwrap();
                    assert_eq!(is_d_dissociated(&sys, d).unwrap(), is_d_dissociated_mitm(&sys, d).unwrap());
                    for c in b + 1..7 {
                        let sys = CharacterSystem::from_exponents(&g, &[vec![a], vec![b], vec![c]]).unwrap();
                        assert_eq!(is_d_dissociated(&sys, d).unwrap(), is_d_dissociated_mitm(&sys, d).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn hadamard_examples() {
        let sys = hadamard_trig_system(3, 3, 1000, 2).unwrap();
        assert_eq!(sys.exponent_vectors(), vec![vec![3], vec![9], vec![27]]);
        assert!(is_d_dissociated(&sys, 2).unwrap().dissociated);

        let sys = hadamard_trig_system(2, 2, 100, 2).unwrap();
        let r = is_d_dissociated(&sys, 2).unwrap();
        assert!(!r.dissociated);
        assert_eq!(r.witness, Some(vec![-2, 1]));

        let sys = hadamard_trig_system(4, 1, 100, 3).unwrap();
        assert_eq!(sys.len(), 1);
        assert!(is_d_dissociated(&sys, 3).unwrap().dissociated);

        assert!(matches!(hadamard_trig_system(3, 3, 100, 2), Err(Error::ModulusTooSmall { .. })));
        assert_eq!(hadamard_trig_system(1, 3, 100, 2).unwrap_err(), Error::RatioTooSmall(1));
    }

    #[test]
    fn vc_staircase_examples() {
        let sys = vc_system_from_digit_sets(3, 3, &[vec![0], vec![1], vec![0, 2]], &[vec![1], vec![1], vec![1, 1]])
            .unwrap();
        assert_eq!(sys.exponent_vectors(), vec![vec![1, 0, 0], vec![0, 1, 0], vec![1, 0, 1]]);
        assert!(is_d_dissociated(&sys, 2).unwrap().dissociated);

        assert_eq!(
            vc_system_from_digit_sets(2, 2, &[vec![0], vec![0]], &[vec![1], vec![1]]).unwrap_err(),
            Error::StaircaseViolated(1)
        );
        assert_eq!(
            vc_system_from_digit_sets(2, 2, &[vec![3]], &[vec![1]]).unwrap_err(),
            Error::PositionOutOfRange { position: 3, rank: 2 }
        );
        assert!(matches!(
            vc_system_from_digit_sets(3, 2, &[vec![0]], &[vec![3]]),
            Err(Error::DigitValueOutOfRange { value: 3, .. })
        ));

        let sys = vc_system_from_digit_sets(5, 1, &[vec![0]], &[vec![2]]).unwrap();
        for d in 1..=8 {
            assert!(is_d_dissociated(&sys, d).unwrap().dissociated);
        }
    }
}

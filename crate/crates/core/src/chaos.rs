//! Tetrahedral and polynomial chaos over a character system.
//!
//! A term `A_{k_1..k_d} gamma_{k_1} ... gamma_{k_d}` with `k_1 <= ... <= k_d`
//! is stored under its compressed index: the distinct bases `k_1 < ... < k_s`
//! and their multiplicities `alpha_i`, so the stored coefficient is exactly
//! `C^{alpha}_{k}` and `s` names the homogeneous part the term belongs to.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dissociation::CharacterSystem;
use crate::error::{Error, Result};
use crate::group::{Character, DensityMeasure, GroupElement};

/// Nondecreasing index `(k_1 <= ... <= k_d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FullIndex(Vec<usize>);

impl FullIndex {
    pub fn new(k: Vec<usize>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidIndex("empty index".into()));
        }
        if k.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidIndex(format!("{k:?} is not nondecreasing")));
        }
        Ok(Self(k))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_tetrahedral(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }
}

/// Distinct bases with multiplicities, `(s; k_1 < ... < k_s; alpha_1..alpha_s)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompressedIndex {
    bases: Vec<usize>,
    exponents: Vec<usize>,
}

impl CompressedIndex {
    pub fn new(bases: Vec<usize>, exponents: Vec<usize>) -> Result<Self> {
        if bases.is_empty() || bases.len() != exponents.len() {
            return Err(Error::InvalidIndex(format!("bases {bases:?} / exponents {exponents:?}")));
        }
        if bases.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndex(format!("bases {bases:?} are not strictly increasing")));
        }
        if exponents.contains(&0) {
            return Err(Error::InvalidIndex(format!("exponents {exponents:?} contain 0")));
        }
        Ok(Self { bases, exponents })
    }

    pub fn bases(&self) -> &[usize] {
        &self.bases
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    /// Number of distinct bases.
    pub fn s(&self) -> usize {
        self.bases.len()
    }

    pub fn degree(&self) -> usize {
        self.exponents.iter().sum()
    }

    fn iter_full(&self) -> impl Iterator<Item = usize> + '_ {
        self.bases.iter().zip(&self.exponents).flat_map(|(&k, &a)| std::iter::repeat_n(k, a))
    }
}

/// Ordered as the expanded full index, so maps iterate in lexicographic
/// `(k_1, ..., k_d)` order.
impl Ord for CompressedIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter_full().cmp(other.iter_full())
    }
}

impl PartialOrd for CompressedIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MultiIndex {
    Full(FullIndex),
    Compressed(CompressedIndex),
}

impl MultiIndex {
    pub fn to_compressed(&self) -> CompressedIndex {
        match self {
            MultiIndex::Full(f) => compress(f),
            MultiIndex::Compressed(c) => c.clone(),
        }
    }

    pub fn to_full(&self) -> FullIndex {
        match self {
            MultiIndex::Full(f) => f.clone(),
            MultiIndex::Compressed(c) => expand(c),
        }
    }
}

pub fn compress(idx: &FullIndex) -> CompressedIndex {
    let mut bases = Vec::new();
    let mut exponents = Vec::new();
    for &k in &idx.0 {
        if bases.last() == Some(&k) {
            *exponents.last_mut().unwrap() += 1;
        } else {
            bases.push(k);
            exponents.push(1);
        }
    }
    CompressedIndex { bases, exponents }
}

pub fn expand(idx: &CompressedIndex) -> FullIndex {
    FullIndex(idx.iter_full().collect())
}

fn enumerate(m: usize, d: usize, strict: bool) -> Vec<FullIndex> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(d);
    fn rec(m: usize, d: usize, strict: bool, start: usize, cur: &mut Vec<usize>, out: &mut Vec<FullIndex>) {
        if cur.len() == d {
            out.push(FullIndex(cur.clone()));
            return;
        }
        for k in start..m {
            cur.push(k);
            rec(m, d, strict, if strict { k + 1 } else { k }, cur, out);
            cur.pop();
        }
    }
    rec(m, d, strict, 0, &mut cur, &mut out);
    out
}

/// Strictly increasing `d`-tuples from `0..m`, lexicographic.
pub fn enumerate_tetrahedral(m: usize, d: usize) -> Result<Vec<FullIndex>> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    if d > m {
        return Err(Error::DegreeExceedsSystem { d, m });
    }
    Ok(enumerate(m, d, true))
}

/// Nondecreasing `d`-tuples from `0..m`, lexicographic.
pub fn enumerate_polynomial(m: usize, d: usize) -> Result<Vec<FullIndex>> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    if m == 0 {
        return Err(Error::InvalidArgument("system must be nonempty".into()));
    }
    Ok(enumerate(m, d, false))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChaosKind {
    Tetrahedral,
    #[default]
    Polynomial,
}

impl ChaosKind {
    pub fn indices(self, m: usize, d: usize) -> Result<Vec<FullIndex>> {
        match self {
            ChaosKind::Tetrahedral => enumerate_tetrahedral(m, d),
            ChaosKind::Polynomial => enumerate_polynomial(m, d),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChaosPolynomial {
    system: CharacterSystem,
    degree: usize,
    terms: BTreeMap<CompressedIndex, Complex64>,
}

impl ChaosPolynomial {
    /// The zero polynomial of degree `d`.
    pub fn new(system: &CharacterSystem, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDegree);
        }
        Ok(Self { system: system.clone(), degree: d, terms: BTreeMap::new() })
    }

    pub fn from_terms(
        system: &CharacterSystem,
        d: usize,
        terms: impl IntoIterator<Item = (FullIndex, Complex64)>,
    ) -> Result<Self> {
        let mut q = Self::new(system, d)?;
        for (k, c) in terms {
            q.insert(compress(&k), c)?;
        }
        Ok(q)
    }

    /// Every index of `kind` with the same coefficient.
    pub fn constant(system: &CharacterSystem, d: usize, kind: ChaosKind, value: Complex64) -> Result<Self> {
        let idx = kind.indices(system.len(), d)?;
        Self::from_terms(system, d, idx.into_iter().map(|k| (k, value)))
    }

    pub fn insert(&mut self, idx: CompressedIndex, coeff: Complex64) -> Result<()> {
        if idx.degree() != self.degree {
            return Err(Error::InvalidIndex(format!("index degree {} != {}", idx.degree(), self.degree)));
        }
        if let Some(&k) = idx.bases.last() {
            if k >= self.system.len() {
                return Err(Error::InvalidIndex(format!("base {k} outside a system of size {}", self.system.len())));
            }
        }
        self.terms.insert(idx, coeff);
        Ok(())
    }

    pub fn system(&self) -> &CharacterSystem {
        &self.system
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CompressedIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &CompressedIndex) -> Complex64 {
        self.terms.get(idx).copied().unwrap_or_default()
    }

    /// Coefficients in term order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.terms.values().copied().collect()
    }

    /// Same support, new coefficients (in term order).
    pub fn with_coefficients(&self, coeffs: &[Complex64]) -> Result<Self> {
        if coeffs.len() != self.terms.len() {
            return Err(Error::LengthMismatch { expected: self.terms.len(), got: coeffs.len() });
        }
        let terms = self.terms.keys().cloned().zip(coeffs.iter().copied()).collect();
        Ok(Self { system: self.system.clone(), degree: self.degree, terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    pub fn l2_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `prod_i gamma_{k_i}^{alpha_i}`.
    pub fn term_character(&self, idx: &CompressedIndex) -> Character {
        let mut chi = self.system.group().trivial_character();
        for (&k, &a) in idx.bases.iter().zip(&idx.exponents) {
            chi = chi.mul(&self.system.get(k).pow(a as i64)).expect("same group");
        }
        chi
    }

    pub fn term_characters(&self) -> Vec<Character> {
        self.terms.keys().map(|k| self.term_character(k)).collect()
    }

    /// Values of every term character over the group, in term order.
    pub fn basis_values(&self) -> Vec<Vec<Complex64>> {
        self.term_characters().iter().map(Character::values).collect()
    }

    pub fn evaluate(&self, g: &GroupElement) -> Result<Complex64> {
        if g.group() != self.system.group() {
            return Err(Error::GroupMismatch);
        }
        let group = self.system.group();
        Ok(self
            .terms
            .iter()
            .map(|(idx, c)| c * group.root(self.term_character(idx).phase(g.digits())))
            .sum())
    }

    /// Values at every group element, in enumeration order.
    pub fn evaluate_all(&self) -> Vec<Complex64> {
        let group = self.system.group();
        let mut out = vec![Complex64::new(0.0, 0.0); group.size()];
        for (idx, c) in &self.terms {
            for (v, t) in out.iter_mut().zip(self.term_character(idx).phase_table()) {
                *v += c * group.root(t);
            }
        }
        out
    }

    pub fn to_density(&self) -> DensityMeasure {
        DensityMeasure::new(self.system.group(), self.evaluate_all()).expect("length matches")
    }

    /// Splits into `Q^(1), ..., Q^(d)` by number of distinct bases.
    pub fn decompose(&self) -> Vec<HomogeneousPart> {
        let mut parts: Vec<HomogeneousPart> = (1..=self.degree)
            .map(|s| HomogeneousPart {
                s,
                poly: ChaosPolynomial { system: self.system.clone(), degree: self.degree, terms: BTreeMap::new() },
            })
            .collect();
        for (idx, c) in &self.terms {
            parts[idx.s() - 1].poly.terms.insert(idx.clone(), *c);
        }
        parts
    }

    pub fn to_json(&self) -> ChaosJson {
        ChaosJson {
            d: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(idx, c)| TermJson { k: idx.bases.clone(), alpha: idx.exponents.clone(), re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn from_json(system: &CharacterSystem, json: &ChaosJson) -> Result<Self> {
        let mut q = Self::new(system, json.d)?;
        for t in &json.terms {
            q.insert(CompressedIndex::new(t.k.clone(), t.alpha.clone())?, Complex64::new(t.re, t.im))?;
        }
        Ok(q)
    }
}

/// `Q^(s)`: the terms of `Q` with exactly `s` distinct bases.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousPart {
    pub s: usize,
    pub poly: ChaosPolynomial,
}

impl HomogeneousPart {
    pub fn evaluate_all(&self) -> Vec<Complex64> {
        self.poly.evaluate_all()
    }
}

pub fn decompose(q: &ChaosPolynomial) -> Vec<HomogeneousPart> {
    q.decompose()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub k: Vec<usize>,
    pub alpha: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// Wire form `{"d": .., "terms": [{"k": [..], "alpha": [..], "re": .., "im": ..}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosJson {
    pub d: usize,
    pub terms: Vec<TermJson>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_group, root_of_unity};

    fn full(k: &[usize]) -> FullIndex {
        FullIndex::new(k.to_vec()).unwrap()
    }

    fn rademacher(m: usize) -> CharacterSystem {
        let g = make_group(&vec![2; m]).unwrap();
        let exps: Vec<Vec<usize>> = (0..m).map(|i| (0..m).map(|j| usize::from(i == j)).collect()).collect();
        CharacterSystem::from_exponents(&g, &exps).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let t = enumerate_tetrahedral(3, 2).unwrap();
        assert_eq!(t, vec![full(&[0, 1]), full(&[0, 2]), full(&[1, 2])]);
        assert_eq!(enumerate_tetrahedral(4, 4).unwrap(), vec![full(&[0, 1, 2, 3])]);
        assert_eq!(enumerate_tetrahedral(5, 2).unwrap().len(), 10);
        assert_eq!(enumerate_tetrahedral(2, 3).unwrap_err(), Error::DegreeExceedsSystem { d: 3, m: 2 });

        let p = enumerate_polynomial(3, 2).unwrap();
        assert_eq!(p.len(), 6);
        assert!(p.contains(&full(&[0, 0])) && p.contains(&full(&[2, 2])));
        assert_eq!(enumerate_polynomial(1, 3).unwrap(), vec![full(&[0, 0, 0])]);
        assert_eq!(enumerate_polynomial(2, 3).unwrap().len(), 4);
    }

    #[test]
    fn compress_examples() {
        let c = compress(&full(&[1, 1, 3]));
        assert_eq!((c.s(), c.bases(), c.exponents()), (2, &[1, 3][..], &[2, 1][..]));
        let c = compress(&full(&[0, 1, 2]));
        assert_eq!(c.exponents(), &[1, 1, 1]);
        let c = compress(&full(&[2, 2, 2, 2]));
        assert_eq!((c.s(), c.exponents()), (1, &[4][..]));
        assert_eq!(expand(&c), full(&[2, 2, 2, 2]));
    }

    #[test]
    fn invalid_indices() {
        assert!(FullIndex::new(vec![2, 1]).is_err());
        assert!(CompressedIndex::new(vec![1, 1], vec![1, 1]).is_err());
        assert!(CompressedIndex::new(vec![0], vec![0]).is_err());
        let sys = rademacher(3);
        let mut q = ChaosPolynomial::new(&sys, 2).unwrap();
        assert!(q.insert(CompressedIndex::new(vec![0], vec![3]).unwrap(), 1.0.into()).is_err());
        assert!(q.insert(CompressedIndex::new(vec![5], vec![2]).unwrap(), 1.0.into()).is_err());
    }

    #[test]
    fn compressed_order_follows_full_order() {
        let mut idx: Vec<CompressedIndex> = enumerate_polynomial(4, 3).unwrap().iter().map(compress).collect();
        idx.reverse();
        idx.sort();
        let back: Vec<FullIndex> = idx.iter().map(expand).collect();
        assert_eq!(back, enumerate_polynomial(4, 3).unwrap());
    }

    #[test]
    fn evaluate_examples() {
        let g = make_group(&[3]).unwrap();
        let sys = CharacterSystem::from_exponents(&g, &[vec![1]]).unwrap();
        let q = ChaosPolynomial::from_terms(&sys, 2, [(full(&[0, 0]), Complex64::new(1.0, 0.0))]).unwrap();
        let v = q.evaluate(&g.element(&[1]).unwrap()).unwrap();
        assert!((v - root_of_unity(2, 3)).norm() < 1e-15);

        let zero = ChaosPolynomial::constant(&sys, 2, ChaosKind::Polynomial, 0.0.into()).unwrap();
        assert!(zero.evaluate_all().iter().all(|v| v.norm() == 0.0));

        let sys = rademacher(3);
        let q = ChaosPolynomial::constant(&sys, 1, ChaosKind::Polynomial, 1.0.into()).unwrap();
        let g = sys.group();
        let v = q.evaluate(&g.element(&[1, 1, 0]).unwrap()).unwrap();
        assert!((v + 1.0).norm() < 1e-15);
        let all = q.evaluate_all();
        for e in g.elements() {
            assert!((all[e.index()] - q.evaluate(&e).unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn evaluate_rejects_foreign_element() {
        let sys = rademacher(2);
        let q = ChaosPolynomial::constant(&sys, 1, ChaosKind::Polynomial, 1.0.into()).unwrap();
        assert_eq!(q.evaluate(&make_group(&[3]).unwrap().zero()), Err(Error::GroupMismatch));
    }

    #[test]
    fn decompose_examples() {
        let g = make_group(&[11]).unwrap();
        let sys = CharacterSystem::from_exponents(&g, &[vec![1], vec![3]]).unwrap();
        let q = ChaosPolynomial::from_terms(&sys, 2, [(full(&[0, 0]), 1.0.into()), (full(&[0, 1]), 2.0.into())])
            .unwrap();
        let parts = q.decompose();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].poly.coefficient(&CompressedIndex::new(vec![0], vec![2]).unwrap()), 1.0.into());
        assert_eq!(parts[0].poly.len(), 1);
        assert_eq!(parts[1].poly.coefficient(&CompressedIndex::new(vec![0, 1], vec![1, 1]).unwrap()), 2.0.into());
        assert_eq!(parts[1].poly.len(), 1);

        let sys = rademacher(4);
        let tet = ChaosPolynomial::constant(&sys, 3, ChaosKind::Tetrahedral, 1.0.into()).unwrap();
        let parts = tet.decompose();
        assert!(parts[0].poly.is_empty() && parts[1].poly.is_empty());
        assert_eq!(parts[2].poly, tet);

        let lin = ChaosPolynomial::constant(&sys, 1, ChaosKind::Polynomial, 1.0.into()).unwrap();
        let parts = lin.decompose();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].poly, lin);
    }

    #[test]
    fn json_wire_form() {
        let g = make_group(&[11]).unwrap();
        let sys = CharacterSystem::from_exponents(&g, &[vec![1], vec![3]]).unwrap();
        let q = ChaosPolynomial::from_terms(&sys, 2, [(full(&[0, 1]), Complex64::new(2.0, -0.5))]).unwrap();
        let s = serde_json::to_string(&q.to_json()).unwrap();
        assert_eq!(s, r#"{"d":2,"terms":[{"k":[0,1],"alpha":[1,1],"re":2.0,"im":-0.5}]}"#);
        let back = ChaosPolynomial::from_json(&sys, &serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, q);
    }
}

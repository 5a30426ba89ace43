//! Riesz-product measures on a d-dissociated system and the extraction
//! identities they give for chaos polynomials.
//!
//! * `rho = prod_i [1 + (1/2d)(sum_{k=1}^d gamma_i^k + sum_{k in S'} gamma_i^{-k})]`
//! * `rho_y`, the same product with every power modulated by a generalized
//!   Rademacher function of base `2d + 1`
//! * `nu_s = c_0 delta_0 + sum_j c_j rho^{*j}`, whose transform is the
//!   indicator of `s`-fold products among `j`-fold products, `1 <= j <= d`
//!
//! All products are finite (one factor per system character), so every
//! identity below is exact up to floating point.
//!
//! The closed-form coefficient laws need every character order above `2d`
//! and the system to be `2d`-dissociated: two exponent choices in
//! `{-d..d}^m` producing the same character differ by a tuple in
//! `{-2d..2d}^m`. Operations relying on those laws check both.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::chaos::{ChaosPolynomial, CompressedIndex};
use crate::dissociation::{check_dissociated, CharacterSystem};
use crate::error::{Error, Result};
use crate::group::{convolve, fourier, root_of_unity, Character, DensityMeasure, FiniteAbelianGroup, FourierTable};

/// `k in 1..=d` with `gamma^{-k}` different from every `gamma^j`, `j in 1..=d`.
pub fn sigma_prime_set(gamma: &Character, d: usize) -> BTreeSet<usize> {
    let powers: Vec<Character> = (1..=d).map(|j| gamma.pow(j as i64)).collect();
    (1..=d).filter(|&k| !powers.contains(&gamma.pow(-(k as i64)))).collect()
}

/// `k in 1..=d` except those with some `j < k` and `gamma^{-k} = gamma^j`.
pub fn sigma_double_prime_set(gamma: &Character, d: usize) -> BTreeSet<usize> {
    (1..=d)
        .filter(|&k| {
            let inv = gamma.pow(-(k as i64));
            !(1..k).any(|j| gamma.pow(j as i64) == inv)
        })
        .collect()
}

/// Fails with `CollapsingPower` when some character has order `<= d`.
pub fn check_factor_orders(system: &CharacterSystem, d: usize) -> Result<()> {
    for (index, chi) in system.characters().iter().enumerate() {
        let order = chi.order();
        if order <= d {
            return Err(Error::CollapsingPower { index, order, d });
        }
    }
    Ok(())
}

pub fn require_dissociated(system: &CharacterSystem, level: usize) -> Result<()> {
    let report = check_dissociated(system, level)?;
    match report.witness {
        None => Ok(()),
        Some(witness) => Err(Error::NotDissociated { level, witness }),
    }
}

/// Preconditions of the closed-form coefficient laws: orders `> 2d` and
/// `2d`-dissociation.
pub fn require_exact_law(system: &CharacterSystem, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    for (index, chi) in system.characters().iter().enumerate() {
        let order = chi.order();
        if order <= 2 * d {
            return Err(Error::DegenerateOrder { index, order, bound: 2 * d });
        }
    }
    require_dissociated(system, 2 * d)
}

/// `prod over factors of (1 + sum_terms c * chi)`, pointwise.
fn product_density(group: &FiniteAbelianGroup, factors: &[Vec<(Character, Complex64)>]) -> DensityMeasure {
    let mut values = vec![Complex64::new(1.0, 0.0); group.size()];
    let mut factor = vec![Complex64::new(0.0, 0.0); group.size()];
    for terms in factors {
        factor.iter_mut().for_each(|v| *v = Complex64::new(1.0, 0.0));
        for (chi, c) in terms {
            for (v, t) in factor.iter_mut().zip(chi.phase_table()) {
                *v += c * group.root(t);
            }
        }
        values.iter_mut().zip(&factor).for_each(|(v, f)| *v *= f);
    }
    DensityMeasure::new(group, values).expect("length matches")
}

fn riesz_factors(system: &CharacterSystem, d: usize) -> Vec<Vec<(Character, Complex64)>> {
    let w = Complex64::new(1.0 / (2 * d) as f64, 0.0);
    system
        .characters()
        .iter()
        .map(|gamma| {
            let mut terms: Vec<(Character, Complex64)> = (1..=d).map(|k| (gamma.pow(k as i64), w)).collect();
            terms.extend(sigma_prime_set(gamma, d).into_iter().map(|k| (gamma.pow(-(k as i64)), w)));
            terms
        })
        .collect()
}

/// Riesz product density after checking d-dissociation.
pub fn riesz_density(system: &CharacterSystem, d: usize) -> Result<DensityMeasure> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    require_dissociated(system, d)?;
    riesz_density_unchecked(system, d)
}

/// Riesz product density without the dissociation check.
pub fn riesz_density_unchecked(system: &CharacterSystem, d: usize) -> Result<DensityMeasure> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    check_factor_orders(system, d)?;
    Ok(product_density(system.group(), &riesz_factors(system, d)))
}

fn check_product_spec(system: &CharacterSystem, d: usize, factors: &[(usize, i64)]) -> Result<()> {
    for (i, &(k, a)) in factors.iter().enumerate() {
        if k >= system.len() {
            return Err(Error::InvalidIndex(format!("base {k} outside a system of size {}", system.len())));
        }
        if a == 0 || a.unsigned_abs() as usize > d {
            return Err(Error::InvalidIndex(format!("exponent {a} outside +-1..+-{d}")));
        }
        if factors[..i].iter().any(|&(j, _)| j == k) {
            return Err(Error::InvalidIndex(format!("base {k} repeated")));
        }
    }
    Ok(())
}

/// Character `prod gamma_k^a` for `(k, a)` pairs.
pub fn product_character(system: &CharacterSystem, factors: &[(usize, i64)]) -> Character {
    factors.iter().fold(system.group().trivial_character(), |acc, &(k, a)| {
        acc.mul(&system.get(k).pow(a)).expect("same group")
    })
}

/// `rho-hat` on the `s`-fold product `prod gamma_{k_i}^{a_i}`, `1 <= |a_i| <= d`:
/// `(2d)^{-s}`, or 1 on the trivial (empty) product.
pub fn riesz_fourier_expected(system: &CharacterSystem, d: usize, factors: &[(usize, i64)]) -> Result<f64> {
    check_product_spec(system, d, factors)?;
    require_exact_law(system, d)?;
    Ok((2.0 * d as f64).powi(-(factors.len() as i32)))
}

/// For each character (by enumeration index), `Some(s)` if it is an
/// `s`-fold product `prod gamma_{k_i}^{a_i}` with `1 <= |a_i| <= d`, else
/// `None`. The trivial character is the 0-fold product.
pub fn product_spectrum(system: &CharacterSystem, d: usize) -> Result<Vec<Option<usize>>> {
    require_exact_law(system, d)?;
    let group = system.group();
    let span = 2 * d + 1;
    let m = system.len();
    let needed = (span as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if needed > crate::dissociation::DEFAULT_BUDGET {
        return Err(Error::BudgetExceeded { needed, budget: crate::dissociation::DEFAULT_BUDGET });
    }
    let mut out = vec![None; group.size()];
    let mut tuple = vec![0usize; m];
    loop {
        let factors: Vec<(usize, i64)> =
            tuple.iter().enumerate().filter(|(_, &t)| t != d).map(|(k, &t)| (k, t as i64 - d as i64)).collect();
        out[product_character(system, &factors).index()] = Some(factors.len());
        let mut i = 0;
        while i < m && tuple[i] + 1 == span {
            tuple[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
        tuple[i] += 1;
    }
    Ok(out)
}

/// Digits of `y` in `Z_{2d+1}`, one per system character.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModulationPoint {
    base: usize,
    digits: Vec<usize>,
}

impl ModulationPoint {
    pub fn new(d: usize, digits: Vec<usize>) -> Result<Self> {
        let base = 2 * d + 1;
        if let Some(&v) = digits.iter().find(|&&v| v >= base) {
            return Err(Error::InvalidArgument(format!("digit {v} outside Z_{base}")));
        }
        Ok(Self { base, digits })
    }

    pub fn zero(d: usize, m: usize) -> Self {
        Self { base: 2 * d + 1, digits: vec![0; m] }
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    /// `R_i^k(y) = omega_{2d+1}^{k y_i}`.
    pub fn rademacher_pow(&self, i: usize, k: i64) -> Complex64 {
        let b = self.base as i64;
        root_of_unity((k.rem_euclid(b) * self.digits[i] as i64).rem_euclid(b) as usize, self.base)
    }

    fn check(&self, system: &CharacterSystem, d: usize) -> Result<()> {
        if self.base != 2 * d + 1 || self.digits.len() != system.len() {
            return Err(Error::InvalidArgument(format!(
                "modulation point over Z_{} with {} digits does not fit d = {d}, m = {}",
                self.base,
                self.digits.len(),
                system.len()
            )));
        }
        Ok(())
    }
}

/// `rho_y`, checked for d-dissociation.
pub fn modulated_riesz_density(system: &CharacterSystem, d: usize, y: &ModulationPoint) -> Result<DensityMeasure> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    require_dissociated(system, d)?;
    modulated_riesz_density_unchecked(system, d, y)
}

pub fn modulated_riesz_density_unchecked(
    system: &CharacterSystem,
    d: usize,
    y: &ModulationPoint,
) -> Result<DensityMeasure> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    check_factor_orders(system, d)?;
    y.check(system, d)?;
    let w = 1.0 / (2 * d) as f64;
    let factors: Vec<Vec<(Character, Complex64)>> = system
        .characters()
        .iter()
        .enumerate()
        .map(|(i, gamma)| {
            sigma_double_prime_set(gamma, d)
                .into_iter()
                .flat_map(|k| {
                    let k = k as i64;
                    [(gamma.pow(k), y.rademacher_pow(i, k) * w), (gamma.pow(-k), y.rademacher_pow(i, -k) * w)]
                })
                .collect()
        })
        .collect();
    Ok(product_density(system.group(), &factors))
}

/// Per-factor `(alpha, alpha')` and whether the duplicate-power rule fired.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExponentProfile {
    pub alpha: Vec<usize>,
    pub alpha_prime: Vec<usize>,
    pub fired: Vec<bool>,
}

/// `alpha'_i = alpha_i` unless some `j < alpha_i` has
/// `gamma_{k_i}^{-alpha_i} = gamma_{k_i}^j`, in which case `2d + 1 - alpha_i`.
pub fn alpha_prime(system: &CharacterSystem, idx: &CompressedIndex, d: usize) -> Result<ExponentProfile> {
    let mut profile = ExponentProfile { alpha: Vec::new(), alpha_prime: Vec::new(), fired: Vec::new() };
    for (&k, &a) in idx.bases().iter().zip(idx.exponents()) {
        if k >= system.len() {
            return Err(Error::InvalidIndex(format!("base {k} outside a system of size {}", system.len())));
        }
        if a == 0 || a > d {
            return Err(Error::InvalidIndex(format!("exponent {a} outside 1..={d}")));
        }
        let gamma = system.get(k);
        let inv = gamma.pow(-(a as i64));
        let fired = (1..a).any(|j| gamma.pow(j as i64) == inv);
        profile.alpha.push(a);
        profile.alpha_prime.push(if fired { 2 * d + 1 - a } else { a });
        profile.fired.push(fired);
    }
    Ok(profile)
}

/// `rho_y-hat` on `prod gamma_{k_i}^{alpha_i}`: `prod R_{k_i}^{alpha'_i}(y) / (2d)^s`.
pub fn modulated_fourier_expected(
    system: &CharacterSystem,
    d: usize,
    idx: &CompressedIndex,
    y: &ModulationPoint,
) -> Result<Complex64> {
    require_exact_law(system, d)?;
    y.check(system, d)?;
    let profile = alpha_prime(system, idx, d)?;
    let num: Complex64 =
        idx.bases().iter().zip(&profile.alpha_prime).map(|(&k, &ap)| y.rademacher_pow(k, ap as i64)).product();
    Ok(num / (2.0 * d as f64).powi(idx.s() as i32))
}

/// Coefficients of `nu_s = c_0 delta_0 + c_1 rho + ... + c_d rho^{*d}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NuSpec {
    pub d: usize,
    pub s: usize,
    /// `c_0..c_d`.
    pub coefficients: Vec<f64>,
    /// `C_s = sum |c_i|`.
    pub variation_bound: f64,
    /// Max residual of the linear system.
    pub residual: f64,
}

/// Solves `sum_{j=1}^d c_j x_i^j = [i = s]` at nodes `x_i = (2d)^{-i}`,
/// `i = 1..d`, with `c_0 = 0`.
///
/// The solution is the polynomial `P(x) = (x / x_s) prod_{i != s} (x - x_i) / (x_s - x_i)`
/// (vanishing at 0, Lagrange elsewhere); its monomial coefficients are the `c_j`.
pub fn nu_coefficients(d: usize, s: usize) -> Result<NuSpec> {
    if d == 0 {
        return Err(Error::ZeroDegree);
    }
    if s == 0 || s > d {
        return Err(Error::InvalidHomogeneity { s, d });
    }
    let nodes: Vec<f64> = (1..=d).map(|i| (2.0 * d as f64).powi(-(i as i32))).collect();
    let xs = nodes[s - 1];
    // poly[j] is the coefficient of x^j
    let mut poly = vec![0.0, 1.0 / xs];
    for (i, &xi) in nodes.iter().enumerate() {
        if i == s - 1 {
            continue;
        }
        let scale = 1.0 / (xs - xi);
        let mut next = vec![0.0; poly.len() + 1];
        for (j, &p) in poly.iter().enumerate() {
            next[j + 1] += p * scale;
            next[j] -= p * xi * scale;
        }
        poly = next;
    }
    debug_assert_eq!(poly.len(), d + 1);
    let residual = nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lhs: f64 = (1..=d).map(|j| poly[j] * x.powi(j as i32)).sum();
            (lhs - if i + 1 == s { 1.0 } else { 0.0 }).abs()
        })
        .fold(0.0, f64::max);
    let variation_bound = poly.iter().map(|c| c.abs()).sum();
    Ok(NuSpec { d, s, coefficients: poly, variation_bound, residual })
}

/// `max_s C_s`.
pub fn max_variation_bound(d: usize) -> Result<f64> {
    (1..=d).map(|s| nu_coefficients(d, s).map(|n| n.variation_bound)).try_fold(0.0, |m: f64, c| c.map(|c| m.max(c)))
}

fn nu_from_rho(rho_hat: &FourierTable, spec: &NuSpec) -> DensityMeasure {
    let coeffs: Vec<Complex64> = rho_hat
        .coeffs()
        .iter()
        .map(|&r| {
            let mut acc = Complex64::new(spec.coefficients[0], 0.0);
            let mut pow = Complex64::new(1.0, 0.0);
            for &c in &spec.coefficients[1..] {
                pow *= r;
                acc += pow * c;
            }
            acc
        })
        .collect();
    FourierTable::new(rho_hat.group(), coeffs).expect("length matches").inverse()
}

/// Density of `nu_s`, built through the convolution theorem.
pub fn nu_density(system: &CharacterSystem, d: usize, s: usize) -> Result<DensityMeasure> {
    let spec = nu_coefficients(d, s)?;
    require_exact_law(system, d)?;
    let rho = riesz_density_unchecked(system, d)?;
    Ok(nu_from_rho(&fourier(&rho), &spec))
}

fn check_s(q: &ChaosPolynomial, s: usize) -> Result<()> {
    if s == 0 || s > q.degree() {
        return Err(Error::InvalidHomogeneity { s, d: q.degree() });
    }
    Ok(())
}

/// `Q * nu_s`, which equals `Q^(s)` pointwise.
pub fn chaos_extract(q: &ChaosPolynomial, s: usize) -> Result<Vec<Complex64>> {
    check_s(q, s)?;
    let nu = nu_density(q.system(), q.degree(), s)?;
    Ok(convolve(&q.to_density(), &nu)?.into_values())
}

/// `Q_y^(s)`: the terms of `Q^(s)` with coefficients multiplied by
/// `prod R_{k_i}^{-alpha'_i}(y)`.
pub fn modulated_part(q: &ChaosPolynomial, s: usize, y: &ModulationPoint) -> Result<ChaosPolynomial> {
    check_s(q, s)?;
    let d = q.degree();
    y.check(q.system(), d)?;
    let part = q.decompose().swap_remove(s - 1).poly;
    let mut coeffs = Vec::with_capacity(part.len());
    for (idx, c) in part.terms() {
        let profile = alpha_prime(q.system(), idx, d)?;
        let r: Complex64 =
            idx.bases().iter().zip(&profile.alpha_prime).map(|(&k, &ap)| y.rademacher_pow(k, -(ap as i64))).product();
        coeffs.push(c * r);
    }
    part.with_coefficients(&coeffs)
}

/// `Q_y^(s) * rho_y`, which equals `Q^(s) / (2d)^s` pointwise.
pub fn modulated_extract(q: &ChaosPolynomial, s: usize, y: &ModulationPoint) -> Result<Vec<Complex64>> {
    check_s(q, s)?;
    require_exact_law(q.system(), q.degree())?;
    let qy = modulated_part(q, s, y)?;
    let rho_y = modulated_riesz_density_unchecked(q.system(), q.degree(), y)?;
    Ok(convolve(&qy.to_density(), &rho_y)?.into_values())
}

/// Default cap on the number of modulation points averaged in
/// [`modulated_extract_expectation`].
pub const EXPECTATION_BUDGET: u128 = 20_000;

/// `E_y [Q_y^(s) * rho_y]` over all `y in Z_{2d+1}^m`, for systems outside the
/// nondegenerate regime. Needs only d-dissociation and orders `> d`.
pub fn modulated_extract_expectation(q: &ChaosPolynomial, s: usize) -> Result<Vec<Complex64>> {
    check_s(q, s)?;
    let (system, d) = (q.system(), q.degree());
    require_dissociated(system, d)?;
    check_factor_orders(system, d)?;
    let base = 2 * d + 1;
    let m = system.len();
    let needed = (base as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if needed > EXPECTATION_BUDGET {
        return Err(Error::BudgetExceeded { needed, budget: EXPECTATION_BUDGET });
    }
    let n = system.group().size();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let mut digits = vec![0usize; m];
    loop {
        let y = ModulationPoint { base, digits: digits.clone() };
        let qy = modulated_part(q, s, &y)?;
        let rho_y = modulated_riesz_density_unchecked(system, d, &y)?;
        let conv = convolve(&qy.to_density(), &rho_y)?;
        acc.iter_mut().zip(conv.values()).for_each(|(a, v)| *a += v);
        let mut pos = m;
        loop {
            if pos == 0 {
                let scale = 1.0 / needed as f64;
                return Ok(acc.into_iter().map(|v| v * scale).collect());
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < base {
                break;
            }
            digits[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{ChaosKind, FullIndex};
    use crate::group::{make_group, max_abs_diff};

    fn cyclic(m: usize, exps: &[usize]) -> CharacterSystem {
        let g = make_group(&[m]).unwrap();
        CharacterSystem::from_exponents(&g, &exps.iter().map(|&a| vec![a]).collect::<Vec<_>>()).unwrap()
    }

    /// Two order-9 characters on `Z_9 x Z_9`, 4-dissociated.
    fn two_order_nine() -> CharacterSystem {
        let g = make_group(&[9, 9]).unwrap();
        CharacterSystem::from_exponents(&g, &[vec![1, 0], vec![0, 1]]).unwrap()
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn sigma_prime_examples() {
        let z9 = make_group(&[9]).unwrap();
        assert_eq!(sigma_prime_set(&z9.character(&[1]).unwrap(), 2), set(&[1, 2]));
        let z2 = make_group(&[2]).unwrap();
        assert_eq!(sigma_prime_set(&z2.character(&[1]).unwrap(), 1), set(&[]));
        let z4 = make_group(&[4]).unwrap();
        assert_eq!(sigma_prime_set(&z4.character(&[1]).unwrap(), 2), set(&[1]));
        assert_eq!(sigma_double_prime_set(&z4.character(&[1]).unwrap(), 2), set(&[1, 2]));
        let z3 = make_group(&[3]).unwrap();
        assert_eq!(sigma_double_prime_set(&z3.character(&[1]).unwrap(), 2), set(&[1]));
    }

    #[test]
    fn riesz_density_examples() {
        let rho = riesz_density(&cyclic(4, &[1]), 1).unwrap();
        let want = [2.0, 1.0, 0.0, 1.0];
        for (v, w) in rho.values().iter().zip(want) {
            assert!((v - w).norm() < 1e-15);
        }

        let empty = CharacterSystem::new(&make_group(&[5]).unwrap(), vec![]).unwrap();
        assert_eq!(riesz_density(&empty, 2).unwrap(), DensityMeasure::haar(&make_group(&[5]).unwrap()));

        let g = make_group(&[2, 2]).unwrap();
        let sys = CharacterSystem::from_exponents(&g, &[vec![1, 0], vec![0, 1]]).unwrap();
        let rho = riesz_density(&sys, 1).unwrap();
        let want = [9.0 / 4.0, 3.0 / 4.0, 3.0 / 4.0, 1.0 / 4.0];
        for (v, w) in rho.values().iter().zip(want) {
            assert!((v - w).norm() < 1e-15);
        }
        assert!((rho.mass() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn riesz_density_errors() {
        let err = riesz_density(&cyclic(5, &[1, 2]), 2).unwrap_err();
        assert_eq!(err, Error::NotDissociated { level: 2, witness: vec![-2, 1] });
        assert_eq!(
            riesz_density(&cyclic(2, &[1]), 2).unwrap_err(),
            Error::CollapsingPower { index: 0, order: 2, d: 2 }
        );
    }

    #[test]
    fn riesz_fourier_expected_examples() {
        let sys = cyclic(4, &[1]);
        assert_eq!(riesz_fourier_expected(&sys, 1, &[(0, 1)]).unwrap(), 0.5);
        assert_eq!(riesz_fourier_expected(&sys, 1, &[(0, -1)]).unwrap(), 0.5);
        assert!(matches!(
            riesz_fourier_expected(&sys, 2, &[(0, 1)]),
            Err(Error::DegenerateOrder { index: 0, order: 4, bound: 4 })
        ));
        let sys = two_order_nine();
        assert_eq!(riesz_fourier_expected(&sys, 2, &[(0, 1), (1, 2)]).unwrap(), 1.0 / 16.0);
        assert_eq!(riesz_fourier_expected(&sys, 2, &[]).unwrap(), 1.0);
        let t = fourier(&riesz_density(&sys, 2).unwrap());
        let chi = product_character(&sys, &[(0, 1), (1, 2)]);
        assert!((t.get(&chi).unwrap() - 1.0 / 16.0).norm() < 1e-12);
        assert!(riesz_fourier_expected(&sys, 2, &[(0, 3)]).is_err());
    }

    #[test]
    fn exact_law_rejects_d_but_not_2d_dissociated() {
        // {1, 2} in Z_101 is 1-dissociated, yet rho-hat(gamma_1) = 3/4
        let sys = cyclic(101, &[1, 2]);
        assert!(riesz_density(&sys, 1).is_ok());
        let t = fourier(&riesz_density(&sys, 1).unwrap());
        assert!((t.at(1) - 0.75).norm() < 1e-12);
        assert!(matches!(riesz_fourier_expected(&sys, 1, &[(0, 1)]), Err(Error::NotDissociated { level: 2, .. })));
    }

    #[test]
    fn modulated_examples() {
        let sys = two_order_nine();
        let y0 = ModulationPoint::zero(2, 2);
        let a = modulated_riesz_density(&sys, 2, &y0).unwrap();
        let b = riesz_density(&sys, 2).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);

        let sys = cyclic(9, &[1]);
        let y = ModulationPoint::new(2, vec![1]).unwrap();
        let t = fourier(&modulated_riesz_density(&sys, 2, &y).unwrap());
        let want = root_of_unity(2, 5) / 4.0;
        assert!((t.at(2) - want).norm() < 1e-14);
        assert!((t.at(0) - 1.0).norm() < 1e-14);
        let idx = CompressedIndex::new(vec![0], vec![2]).unwrap();
        assert!((modulated_fourier_expected(&sys, 2, &idx, &y).unwrap() - want).norm() < 1e-15);
        assert!(ModulationPoint::new(2, vec![5]).is_err());
    }

    #[test]
    fn modulated_density_has_unit_variation() {
        let sys = two_order_nine();
        for digits in [[0, 0], [1, 4], [3, 2]] {
            let y = ModulationPoint::new(2, digits.to_vec()).unwrap();
            let rho = modulated_riesz_density(&sys, 2, &y).unwrap();
            assert!((rho.mass() - 1.0).norm() < 1e-12);
            assert!((rho.total_variation() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_prime_examples() {
        let p = alpha_prime(&cyclic(9, &[1]), &CompressedIndex::new(vec![0], vec![2]).unwrap(), 2).unwrap();
        assert_eq!((p.alpha_prime[0], p.fired[0]), (2, false));
        let p = alpha_prime(&cyclic(3, &[1]), &CompressedIndex::new(vec![0], vec![2]).unwrap(), 2).unwrap();
        assert_eq!((p.alpha_prime[0], p.fired[0]), (3, true));
        let p = alpha_prime(&cyclic(4, &[1]), &CompressedIndex::new(vec![0], vec![2]).unwrap(), 2).unwrap();
        assert_eq!((p.alpha_prime[0], p.fired[0]), (2, false));
    }

    /// Independent route: Gaussian elimination with partial pivoting.
    fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    #[test]
    fn nu_coefficients_examples() {
        let nu = nu_coefficients(1, 1).unwrap();
        assert_eq!(nu.coefficients, vec![0.0, 2.0]);
        assert_eq!(nu.variation_bound, 2.0);

        // [[1/4, 1/16], [1/16, 1/256]] c = (1, 0)  ->  c = (-4/3, 64/3)
        let nu = nu_coefficients(2, 1).unwrap();
        assert!((nu.coefficients[1] + 4.0 / 3.0).abs() < 1e-12);
        assert!((nu.coefficients[2] - 64.0 / 3.0).abs() < 1e-12);
        assert!((nu.variation_bound - 68.0 / 3.0).abs() < 1e-12);

        for d in 1..=4 {
            for s in 1..=d {
                let nu = nu_coefficients(d, s).unwrap();
                assert_eq!(nu.coefficients[0], 0.0);
                assert!(nu.residual <= 1e-10, "d={d} s={s} residual={}", nu.residual);
                let x: Vec<f64> = (1..=d).map(|i| (2.0 * d as f64).powi(-(i as i32))).collect();
                let a: Vec<Vec<f64>> = x.iter().map(|&xi| (1..=d).map(|j| xi.powi(j as i32)).collect()).collect();
                let b: Vec<f64> = (1..=d).map(|i| if i == s { 1.0 } else { 0.0 }).collect();
                if d > 3 {
                    // the dense solve loses digits once nodes reach (2d)^{-d^2}
                    continue;
                }
                let oracle = solve_dense(a, b);
                for (c, o) in nu.coefficients[1..].iter().zip(&oracle) {
                    assert!((c - o).abs() <= 1e-8 * o.abs().max(1.0), "d={d} s={s}: {c} vs {o}");
                }
            }
        }
        assert_eq!(nu_coefficients(2, 3).unwrap_err(), Error::InvalidHomogeneity { s: 3, d: 2 });
    }

    #[test]
    fn nu_density_examples() {
        let sys = cyclic(5, &[1]);
        let nu = nu_density(&sys, 1, 1).unwrap();
        let rho = riesz_density(&sys, 1).unwrap();
        assert!(nu.max_abs_diff(&rho.scale(2.0.into())) < 1e-12);
        let t = fourier(&nu);
        assert!((t.at(1) - 1.0).norm() < 1e-12 && (t.at(4) - 1.0).norm() < 1e-12);

        let sys = two_order_nine();
        let t = fourier(&nu_density(&sys, 2, 2).unwrap());
        assert!((t.get(&product_character(&sys, &[(0, 1), (1, 1)])).unwrap() - 1.0).norm() < 1e-9);
        assert!(t.get(&product_character(&sys, &[(0, 1)])).unwrap().norm() < 1e-9);
        assert!(matches!(nu_density(&cyclic(4, &[1]), 2, 1), Err(Error::DegenerateOrder { .. })));
    }

    #[test]
    fn extraction_examples() {
        let sys = two_order_nine();
        let tet = ChaosPolynomial::constant(&sys, 2, ChaosKind::Tetrahedral, Complex64::new(1.0, 0.5)).unwrap();
        let got = chaos_extract(&tet, 2).unwrap();
        assert!(max_abs_diff(&got, &tet.evaluate_all()) < 1e-10);

        let g = make_group(&[7, 7, 7]).unwrap();
        let sys3 = CharacterSystem::from_exponents(&g, &[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        let ones = ChaosPolynomial::from_terms(
            &sys3,
            3,
            [(FullIndex::new(vec![0, 0, 0]).unwrap(), 1.0.into()), (FullIndex::new(vec![2, 2, 2]).unwrap(), 2.0.into())],
        )
        .unwrap();
        assert!(chaos_extract(&ones, 2).unwrap().iter().all(|v| v.norm() < 1e-9));

        let zero = ChaosPolynomial::new(&sys, 2).unwrap();
        assert!(chaos_extract(&zero, 1).unwrap().iter().all(|v| v.norm() < 1e-12));

        let full = ChaosPolynomial::constant(&sys, 2, ChaosKind::Polynomial, 1.0.into()).unwrap();
        let part = full.decompose()[1].evaluate_all();
        let got = modulated_extract(&full, 2, &ModulationPoint::zero(2, 2)).unwrap();
        assert!(max_abs_diff(&got, &part.iter().map(|v| v / 16.0).collect::<Vec<_>>()) < 1e-10);
        let zero_y = modulated_extract(&zero, 2, &ModulationPoint::new(2, vec![3, 1]).unwrap()).unwrap();
        assert!(zero_y.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn modulated_extract_rejects_degenerate() {
        let sys = cyclic(4, &[1]);
        let q = ChaosPolynomial::constant(&sys, 2, ChaosKind::Polynomial, 1.0.into()).unwrap();
        assert!(matches!(
            modulated_extract(&q, 1, &ModulationPoint::zero(2, 1)),
            Err(Error::DegenerateOrder { order: 4, bound: 4, .. })
        ));
        assert_eq!(modulated_extract_expectation(&q, 1).unwrap().len(), 4);
    }

    #[test]
    fn spectrum_matches_fourier_law() {
        let sys = two_order_nine();
        for d in 1..=2 {
            let spec = product_spectrum(&sys, d).unwrap();
            let rho_hat = fourier(&riesz_density(&sys, d).unwrap());
            assert_eq!(spec.iter().filter(|s| s.is_some()).count(), (2 * d + 1).pow(2));
            for (c, s) in rho_hat.coeffs().iter().zip(&spec) {
                let want = s.map_or(0.0, |s| (2.0 * d as f64).powi(-(s as i32)));
                assert!((c - want).norm() < 1e-12);
            }
        }
    }
}

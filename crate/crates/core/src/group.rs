//! Finite abelian groups `Z_{m_1} x ... x Z_{m_r}`, their characters, and the
//! Fourier transform and convolution against normalized Haar measure.
//!
//! Elements and characters share one enumeration: mixed-radix digit vectors in
//! lexicographic order, first coordinate most significant. The character with
//! exponent vector `a` evaluates as `prod_i exp(2 pi i a_i g_i / m_i)`, computed
//! as a single lookup into a table of `L`-th roots of unity where `L` is the
//! group exponent, so equal phases always produce bit-identical values.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on `|G|`.
pub const DEFAULT_SIZE_LIMIT: usize = 1 << 20;

struct GroupInner {
    orders: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
    /// lcm of the orders.
    exponent: usize,
    /// `exponent / m_i`, maps a phase in `Z_{m_i}` into `Z_exponent`.
    scales: Vec<usize>,
    roots: Vec<Complex64>,
}

#[derive(Clone)]
pub struct FiniteAbelianGroup {
    inner: Arc<GroupInner>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn root_of_unity(t: usize, n: usize) -> Complex64 {
    let theta = 2.0 * PI * (t as f64) / (n as f64);
    Complex64::new(theta.cos(), theta.sin())
}

/// Builds `Z_{m_1} x ... x Z_{m_r}` under the default size limit.
pub fn make_group(orders: &[usize]) -> Result<FiniteAbelianGroup> {
    FiniteAbelianGroup::with_limit(orders, DEFAULT_SIZE_LIMIT)
}

impl FiniteAbelianGroup {
    pub fn new(orders: &[usize]) -> Result<Self> {
        make_group(orders)
    }

    pub fn with_limit(orders: &[usize], limit: usize) -> Result<Self> {
        if let Some(&m) = orders.iter().find(|&&m| m < 2) {
            return Err(Error::OrderTooSmall(m));
        }
        let size: u128 = orders.iter().map(|&m| m as u128).product();
        if size > limit as u128 {
            return Err(Error::SizeLimitExceeded { size, limit });
        }
        let size = size as usize;
        let mut strides = vec![1usize; orders.len()];
        for i in (0..orders.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * orders[i + 1];
        }
        let exponent = orders.iter().fold(1usize, |l, &m| l / gcd(l, m) * m);
        let scales = orders.iter().map(|&m| exponent / m).collect();
        let roots = (0..exponent).map(|t| root_of_unity(t, exponent)).collect();
        Ok(Self {
            inner: Arc::new(GroupInner {
                orders: orders.to_vec(),
                strides,
                size,
                exponent,
                scales,
                roots,
            }),
        })
    }

    pub fn orders(&self) -> &[usize] {
        &self.inner.orders
    }

    pub fn rank(&self) -> usize {
        self.inner.orders.len()
    }

    pub fn size(&self) -> usize {
        self.inner.size
    }

    /// Least common multiple of the cyclic orders.
    pub fn exponent(&self) -> usize {
        self.inner.exponent
    }

    pub(crate) fn root(&self, phase: usize) -> Complex64 {
        self.inner.roots[phase]
    }

    pub fn digits_of(&self, index: usize) -> Vec<usize> {
        let mut rem = index;
        self.inner
            .strides
            .iter()
            .zip(&self.inner.orders)
            .map(|(&s, &m)| {
                let g = rem / s;
                rem %= s;
                debug_assert!(g < m);
                g
            })
            .collect()
    }

    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        self.check_digits(digits)?;
        Ok(digits.iter().zip(&self.inner.strides).map(|(g, s)| g * s).sum())
    }

    fn check_digits(&self, digits: &[usize]) -> Result<()> {
        if digits.len() != self.rank() {
            return Err(Error::RankMismatch { expected: self.rank(), got: digits.len() });
        }
        for (i, (&g, &m)) in digits.iter().zip(self.orders()).enumerate() {
            if g >= m {
                return Err(Error::DigitOutOfRange { coordinate: i, value: g, order: m });
            }
        }
        Ok(())
    }

    pub fn element(&self, digits: &[usize]) -> Result<GroupElement> {
        self.check_digits(digits)?;
        Ok(GroupElement { group: self.clone(), digits: digits.to_vec() })
    }

    pub fn element_at(&self, index: usize) -> GroupElement {
        GroupElement { group: self.clone(), digits: self.digits_of(index) }
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement { group: self.clone(), digits: vec![0; self.rank()] }
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.size()).map(move |i| self.element_at(i))
    }

    pub fn character(&self, exponents: &[usize]) -> Result<Character> {
        self.check_digits(exponents)?;
        Ok(Character { group: self.clone(), exponents: exponents.to_vec() })
    }

    pub fn character_at(&self, index: usize) -> Character {
        Character { group: self.clone(), exponents: self.digits_of(index) }
    }

    pub fn trivial_character(&self) -> Character {
        Character { group: self.clone(), exponents: vec![0; self.rank()] }
    }

    pub fn characters(&self) -> impl Iterator<Item = Character> + '_ {
        (0..self.size()).map(move |i| self.character_at(i))
    }

    /// Index of `x - z`.
    pub(crate) fn sub_index(&self, x: usize, z: usize) -> usize {
        let (xs, zs) = (self.digits_of(x), self.digits_of(z));
        xs.iter()
            .zip(&zs)
            .zip(self.orders())
            .zip(&self.inner.strides)
            .map(|(((&a, &b), &m), &s)| ((a + m - b) % m) * s)
            .sum()
    }

    /// Digitwise sum of two exponent (or digit) vectors, written into `out`.
    pub(crate) fn add_digits(&self, a: &[usize], b: &[usize], out: &mut [usize]) {
        for i in 0..a.len() {
            out[i] = (a[i] + b[i]) % self.inner.orders[i];
        }
    }

    pub(crate) fn same(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.orders == other.inner.orders
    }
}

impl PartialEq for FiniteAbelianGroup {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

impl Eq for FiniteAbelianGroup {}

impl fmt::Debug for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z{:?}", self.orders())
    }
}

impl Serialize for FiniteAbelianGroup {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.orders().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteAbelianGroup {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let orders = Vec::<usize>::deserialize(d)?;
        make_group(&orders).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct GroupElement {
    group: FiniteAbelianGroup,
    digits: Vec<usize>,
}

impl GroupElement {
    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    pub fn index(&self) -> usize {
        self.digits.iter().zip(&self.group.inner.strides).map(|(g, s)| g * s).sum()
    }

    pub fn add(&self, other: &GroupElement) -> Result<GroupElement> {
        if !self.group.same(&other.group) {
            return Err(Error::GroupMismatch);
        }
        let mut digits = vec![0; self.digits.len()];
        self.group.add_digits(&self.digits, &other.digits, &mut digits);
        Ok(GroupElement { group: self.group.clone(), digits })
    }

    pub fn neg(&self) -> GroupElement {
        let digits = self
            .digits
            .iter()
            .zip(self.group.orders())
            .map(|(&g, &m)| (m - g) % m)
            .collect();
        GroupElement { group: self.group.clone(), digits }
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{:?}", self.digits)
    }
}

/// A character `chi_a` of a finite abelian group.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Character {
    group: FiniteAbelianGroup,
    exponents: Vec<usize>,
}

impl std::hash::Hash for FiniteAbelianGroup {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.orders().hash(state)
    }
}

impl Character {
    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    /// Position in the dual enumeration.
    pub fn index(&self) -> usize {
        self.exponents.iter().zip(&self.group.inner.strides).map(|(a, s)| a * s).sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.iter().all(|&a| a == 0)
    }

    /// Phase of `chi(g)` as an element of `Z_L`, `L` the group exponent.
    pub fn phase(&self, digits: &[usize]) -> usize {
        let l = self.group.exponent();
        let mut t = 0usize;
        let inner = &self.group.inner;
        for (((&a, &g), &sc), &m) in self.exponents.iter().zip(digits).zip(&inner.scales).zip(&inner.orders) {
            t = (t + (a * g % m) * sc) % l;
        }
        t
    }

    pub fn eval(&self, g: &GroupElement) -> Result<Complex64> {
        if !self.group.same(&g.group) {
            return Err(Error::GroupMismatch);
        }
        Ok(self.group.root(self.phase(&g.digits)))
    }

    /// Phases at every element, in enumeration order.
    pub fn phase_table(&self) -> Vec<usize> {
        let l = self.group.exponent();
        let mut phases = vec![0usize];
        for ((&a, &m), &sc) in self.exponents.iter().zip(self.group.orders()).zip(&self.group.inner.scales) {
            let w = (a * sc) % l;
            let mut next = Vec::with_capacity(phases.len() * m);
            for &p in &phases {
                for g in 0..m {
                    next.push((p + g * w) % l);
                }
            }
            phases = next;
        }
        phases
    }

    /// Values at every element, in enumeration order.
    pub fn values(&self) -> Vec<Complex64> {
        self.phase_table().into_iter().map(|t| self.group.root(t)).collect()
    }

    pub fn mul(&self, other: &Character) -> Result<Character> {
        if !self.group.same(&other.group) {
            return Err(Error::GroupMismatch);
        }
        let mut exponents = vec![0; self.exponents.len()];
        self.group.add_digits(&self.exponents, &other.exponents, &mut exponents);
        Ok(Character { group: self.group.clone(), exponents })
    }

    /// `chi^k`; negative `k` allowed.
    pub fn pow(&self, k: i64) -> Character {
        let exponents = self
            .exponents
            .iter()
            .zip(self.group.orders())
            .map(|(&a, &m)| {
                let m = m as i64;
                ((a as i64 * k.rem_euclid(m)).rem_euclid(m)) as usize
            })
            .collect();
        Character { group: self.group.clone(), exponents }
    }

    pub fn conj(&self) -> Character {
        self.pow(-1)
    }

    /// Least `t >= 1` with `chi^t` trivial.
    pub fn order(&self) -> usize {
        self.exponents
            .iter()
            .zip(self.group.orders())
            .map(|(&a, &m)| m / gcd(a, m))
            .fold(1, |l, t| l / gcd(l, t) * t)
    }
}

impl fmt::Debug for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi{:?}", self.exponents)
    }
}

pub fn char_eval(chi: &Character, g: &GroupElement) -> Result<Complex64> {
    chi.eval(g)
}

pub fn char_mul(a: &Character, b: &Character) -> Result<Character> {
    a.mul(b)
}

pub fn char_pow(chi: &Character, k: i64) -> Character {
    chi.pow(k)
}

pub fn char_order(chi: &Character) -> usize {
    chi.order()
}

/// A complex measure on `G` given by its density against normalized Haar
/// measure: every point carries mass `value / |G|`.
#[derive(Clone, PartialEq)]
pub struct DensityMeasure {
    group: FiniteAbelianGroup,
    values: Vec<Complex64>,
}

impl DensityMeasure {
    pub fn new(group: &FiniteAbelianGroup, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != group.size() {
            return Err(Error::LengthMismatch { expected: group.size(), got: values.len() });
        }
        Ok(Self { group: group.clone(), values })
    }

    pub fn from_fn(group: &FiniteAbelianGroup, mut f: impl FnMut(usize) -> Complex64) -> Self {
        let values = (0..group.size()).map(&mut f).collect();
        Self { group: group.clone(), values }
    }

    /// Normalized Haar measure.
    pub fn haar(group: &FiniteAbelianGroup) -> Self {
        Self { group: group.clone(), values: vec![Complex64::new(1.0, 0.0); group.size()] }
    }

    /// Dirac mass at the identity.
    pub fn delta0(group: &FiniteAbelianGroup) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); group.size()];
        values[0] = Complex64::new(group.size() as f64, 0.0);
        Self { group: group.clone(), values }
    }

    pub fn from_character(chi: &Character) -> Self {
        Self { group: chi.group().clone(), values: chi.values() }
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn mass(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn total_variation(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() / self.values.len() as f64
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        self.max_abs_imag() <= tol && self.min_real() >= -tol && (self.mass() - 1.0).norm() <= tol
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { group: self.group.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn pointwise_mul(&self, other: &Self) -> Result<Self> {
        if !self.group.same(&other.group) {
            return Err(Error::GroupMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Self { group: self.group.clone(), values })
    }

    /// Values as `[re, im]` pairs in enumeration order.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.values.iter().map(|v| [v.re, v.im]).collect()
    }

    pub fn from_pairs(group: &FiniteAbelianGroup, pairs: &[[f64; 2]]) -> Result<Self> {
        Self::new(group, pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.values, &other.values)
    }
}

impl fmt::Debug for DensityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMeasure").field("group", &self.group).field("values", &self.values).finish()
    }
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Fourier coefficients indexed by the dual enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTable {
    group: FiniteAbelianGroup,
    coeffs: Vec<Complex64>,
}

impl FourierTable {
    pub fn new(group: &FiniteAbelianGroup, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != group.size() {
            return Err(Error::LengthMismatch { expected: group.size(), got: coeffs.len() });
        }
        Ok(Self { group: group.clone(), coeffs })
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, chi: &Character) -> Result<Complex64> {
        if !self.group.same(chi.group()) {
            return Err(Error::GroupMismatch);
        }
        Ok(self.coeffs[chi.index()])
    }

    pub fn at(&self, index: usize) -> Complex64 {
        self.coeffs[index]
    }

    /// `f(g) = sum_chi fhat(chi) chi(g)`.
    pub fn inverse(&self) -> DensityMeasure {
        let mut values = self.coeffs.clone();
        transform_axes(&self.group, &mut values, true);
        DensityMeasure { group: self.group.clone(), values }
    }
}

/// One DFT per coordinate axis. Forward uses `exp(-2 pi i a g / m)`.
fn transform_axes(group: &FiniteAbelianGroup, values: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let n = group.size();
    for (axis, &m) in group.orders().iter().enumerate() {
        let stride = group.inner.strides[axis];
        let fft = if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        let block = stride * m;
        for base in (0..n).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = values[start + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    values[start + j * stride] = *v;
                }
            }
        }
    }
}

/// `fhat(chi) = (1/|G|) sum_g f(g) conj(chi(g))` via per-axis FFTs.
pub fn fourier(f: &DensityMeasure) -> FourierTable {
    let mut values = f.values.clone();
    transform_axes(&f.group, &mut values, false);
    let n = f.group.size() as f64;
    values.iter_mut().for_each(|v| *v /= n);
    FourierTable { group: f.group.clone(), coeffs: values }
}

/// Direct `O(|G|^2)` transform; reference path for [`fourier`].
pub fn fourier_naive(f: &DensityMeasure) -> FourierTable {
    let group = &f.group;
    let n = group.size();
    let coeffs = (0..n)
        .map(|a| {
            let chi = group.character_at(a);
            let phases = chi.phase_table();
            let s: Complex64 = f.values.iter().zip(&phases).map(|(v, &t)| v * group.root(t).conj()).sum();
            s / n as f64
        })
        .collect();
    FourierTable { group: group.clone(), coeffs }
}

pub fn inverse_fourier(table: &FourierTable) -> DensityMeasure {
    table.inverse()
}

/// `(f * h)(x) = (1/|G|) sum_z f(x - z) h(z)`, computed through the
/// convolution theorem.
pub fn convolve(f: &DensityMeasure, h: &DensityMeasure) -> Result<DensityMeasure> {
    if !f.group.same(&h.group) {
        return Err(Error::GroupMismatch);
    }
    let (ff, hh) = (fourier(f), fourier(h));
    let coeffs = ff.coeffs.iter().zip(&hh.coeffs).map(|(a, b)| a * b).collect();
    Ok(FourierTable { group: f.group.clone(), coeffs }.inverse())
}

/// Direct `O(|G|^2)` convolution; reference path for [`convolve`].
pub fn convolve_naive(f: &DensityMeasure, h: &DensityMeasure) -> Result<DensityMeasure> {
    if !f.group.same(&h.group) {
        return Err(Error::GroupMismatch);
    }
    let g = &f.group;
    let n = g.size();
    let values = (0..n)
        .map(|x| {
            let s: Complex64 = (0..n).map(|z| f.values[g.sub_index(x, z)] * h.values[z]).sum();
            s / n as f64
        })
        .collect();
    Ok(DensityMeasure { group: g.clone(), values })
}

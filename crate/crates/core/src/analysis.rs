//! Norms, the Khinchin and Sidon functionals, and empirical estimation of
//! the constants in
//!
//! * `||Q||_q <= sqrt(d) (2d)^d C ||A||_2` (q-lacunarity)
//! * `||A||_{2d/(d+1)} <= ((2d)^d C / c) d^{(d+1)/(2d)} ||Q||_inf` (Sidon)
//!
//! Estimates are maxima over independent trials. Trial `t` draws from a
//! ChaCha stream keyed by `(seed, t)`, so serial and parallel runs agree
//! bit for bit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::chaos::{ChaosKind, ChaosPolynomial};
use crate::dissociation::CharacterSystem;
use crate::error::{Error, Result};
use crate::riesz::{max_variation_bound, require_dissociated};

/// `((1/|G|) sum |f|^q)^{1/q}`, or `max |f|` for `q = inf`.
pub fn lq_norm(values: &[Complex64], q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidQ(q));
    }
    if values.is_empty() {
        return Ok(0.0);
    }
    if q.is_infinite() {
        return Ok(values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let mean = values.iter().map(|v| v.norm().powf(q)).sum::<f64>() / values.len() as f64;
    Ok(mean.powf(1.0 / q))
}

/// `(sum |a_i|^p)^{1/p}`.
pub fn lp_coeff_norm(coeffs: &[Complex64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidP(p));
    }
    if p.is_infinite() {
        return Ok(coeffs.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    Ok(coeffs.iter().map(|v| v.norm().powf(p)).sum::<f64>().powf(1.0 / p))
}

/// `2d / (d + 1)`.
pub fn sidon_exponent(d: usize) -> f64 {
    2.0 * d as f64 / (d as f64 + 1.0)
}

/// `||Q||_q / ||A||_2`, `q > 2`.
pub fn khinchin_ratio(poly: &ChaosPolynomial, q: f64) -> Result<f64> {
    if q.is_nan() || q <= 2.0 {
        return Err(Error::InvalidQ(q));
    }
    if poly.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    Ok(lq_norm(&poly.evaluate_all(), q)? / poly.l2_norm())
}

/// `||A||_{2d/(d+1)} / ||Q||_inf`.
pub fn sidon_ratio(poly: &ChaosPolynomial) -> Result<f64> {
    sidon_ratio_with_p(poly, sidon_exponent(poly.degree()))
}

/// `||A||_p / ||Q||_inf`; infinite when distinct terms cancel identically.
pub fn sidon_ratio_with_p(poly: &ChaosPolynomial, p: f64) -> Result<f64> {
    if poly.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let num = lp_coeff_norm(&poly.coefficients(), p)?;
    let den = lq_norm(&poly.evaluate_all(), f64::INFINITY)?;
    Ok(if den == 0.0 { f64::INFINITY } else { num / den })
}

fn even_q(q: f64) -> Result<i32> {
    if q == 4.0 || q == 6.0 || q == 8.0 {
        Ok(q as i32)
    } else {
        Err(Error::UnsupportedQ(q))
    }
}

/// Term characters tabulated over the group, `T x |G|`.
#[derive(Clone, Debug)]
pub struct ChaosBasis {
    rows: Vec<Vec<Complex64>>,
    size: usize,
}

impl ChaosBasis {
    pub fn new(poly: &ChaosPolynomial) -> Self {
        Self { rows: poly.basis_values(), size: poly.system().group().size() }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let size = rows.first().map_or(0, Vec::len);
        Self { rows, size }
    }

    pub fn terms(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }

    pub fn combine(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.size];
        for (row, c) in self.rows.iter().zip(coeffs) {
            for (v, b) in out.iter_mut().zip(row) {
                *v += c * b;
            }
        }
        out
    }

    /// `||Q||_q^q` for integer `q`.
    fn lq_pow(values: &[Complex64], q: i32) -> f64 {
        values.iter().map(|v| v.norm_sqr().powi(q / 2)).sum::<f64>() / values.len() as f64
    }

    /// Gradient of `||Q||_q^q` over `(re, im)` of each coefficient, packed as
    /// complex numbers `d/d re + i d/d im`.
    fn grad_pow(&self, values: &[Complex64], q: i32) -> Vec<Complex64> {
        let n = values.len() as f64;
        let weights: Vec<Complex64> =
            values.iter().map(|v| v.conj() * (q as f64 * v.norm_sqr().powi(q / 2 - 1) / n)).collect();
        self.rows
            .iter()
            .map(|row| {
                let s: Complex64 = row.iter().zip(&weights).map(|(b, w)| w * b).sum();
                Complex64::new(s.re, -s.im)
            })
            .collect()
    }
}

/// Gradient of `||Q||_q^q`, `q in {4, 6, 8}`, in term order. Entry `t` is
/// `d/d re(A_t) + i d/d im(A_t)`.
pub fn grad_lq_q(poly: &ChaosPolynomial, q: f64) -> Result<Vec<Complex64>> {
    let q = even_q(q)?;
    let basis = ChaosBasis::new(poly);
    let coeffs = poly.coefficients();
    Ok(basis.grad_pow(&basis.combine(&coeffs), q))
}

/// `||Q||_q^q` for the same packing as [`grad_lq_q`].
pub fn lq_pow_objective(poly: &ChaosPolynomial, q: f64) -> Result<f64> {
    let q = even_q(q)?;
    Ok(ChaosBasis::lq_pow(&poly.evaluate_all(), q))
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|c| *c /= n);
    }
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn gaussian_unit(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> =
        (0..len).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    normalize(&mut v);
    v
}

/// Chaos of `kind` on `system` with unit-`l_2` complex Gaussian coefficients.
pub fn random_polynomial(system: &CharacterSystem, d: usize, kind: ChaosKind, rng: &mut impl Rng) -> Result<ChaosPolynomial> {
    let template = ChaosPolynomial::constant(system, d, kind, Complex64::new(1.0, 0.0))?;
    let coeffs = gaussian_unit(rng, template.len());
    template.with_coefficients(&coeffs)
}

/// Result of one projected ascent run.
#[derive(Clone, Debug)]
pub struct AscentRun {
    pub coeffs: Vec<Complex64>,
    pub ratio: f64,
    /// Ratio after every accepted step, starting with the initial point.
    pub trajectory: Vec<f64>,
}

/// Projected gradient ascent of `||Q||_q` on the unit `l_2` sphere.
///
/// Moves along the normalized tangent gradient with step 0.1, halving on
/// non-improvement; stops when an accepted step gains less than `tol`, the
/// step underflows, or `max_steps` iterations pass.
pub fn khinchin_ascent(basis: &ChaosBasis, start: &[Complex64], q: f64, max_steps: usize, tol: f64) -> Result<AscentRun> {
    let qi = even_q(q)?;
    let mut a = start.to_vec();
    normalize(&mut a);
    let mut values = basis.combine(&a);
    let mut ratio = ChaosBasis::lq_pow(&values, qi).powf(1.0 / q);
    let mut trajectory = vec![ratio];
    let mut step = 0.1;
    for _ in 0..max_steps {
        let g = basis.grad_pow(&values, qi);
        // tangent projection: g - <g, a> a with the real inner product
        let radial: f64 = g.iter().zip(&a).map(|(gi, ai)| gi.re * ai.re + gi.im * ai.im).sum();
        let tangent: Vec<Complex64> = g.iter().zip(&a).map(|(gi, ai)| gi - ai * radial).collect();
        let tn = tangent.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if tn == 0.0 || !tn.is_finite() {
            break;
        }
        let mut cand: Vec<Complex64> = a.iter().zip(&tangent).map(|(ai, ti)| ai + ti * (step / tn)).collect();
        normalize(&mut cand);
        let cand_values = basis.combine(&cand);
        let cand_ratio = ChaosBasis::lq_pow(&cand_values, qi).powf(1.0 / q);
        if cand_ratio > ratio {
            let gain = cand_ratio - ratio;
            a = cand;
            values = cand_values;
            ratio = cand_ratio;
            trajectory.push(ratio);
            if gain < tol {
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    Ok(AscentRun { coeffs: a, ratio, trajectory })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Khinchin,
    Sidon,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantEstimate {
    pub kind: EstimateKind,
    pub d: usize,
    /// `q` for Khinchin, `p` for Sidon.
    pub exponent: f64,
    /// System size.
    pub m: usize,
    pub terms: usize,
    pub chaos: ChaosKind,
    pub estimate: f64,
    /// Maximizing coefficients as `[re, im]`, in term order.
    pub maximizer: Vec<[f64; 2]>,
    pub best_trial: usize,
    pub trials: usize,
    pub seed: u64,
    pub per_trial: Vec<f64>,
    /// Upper bound implied by the model constant, when one was supplied.
    pub ceiling: Option<f64>,
}

impl ConstantEstimate {
    pub fn respects_ceiling(&self) -> bool {
        self.ceiling.is_none_or(|c| self.estimate <= c)
    }
}

/// `sqrt(d) (2d)^d C kappa` with `C = max_s C_s`.
pub fn khinchin_ceiling(d: usize, kappa_model: f64) -> Result<f64> {
    Ok((d as f64).sqrt() * (2.0 * d as f64).powi(d as i32) * max_variation_bound(d)? * kappa_model)
}

/// `(2d)^d C / c * d^{(d+1)/(2d)}` with `C = max_s C_s`.
pub fn sidon_ceiling(d: usize, c_model: f64) -> Result<f64> {
    if c_model <= 0.0 || c_model.is_nan() {
        return Err(Error::InvalidArgument(format!("model constant c = {c_model} must be positive")));
    }
    let df = d as f64;
    Ok((2.0 * df).powi(d as i32) * max_variation_bound(d)? / c_model * df.powf((df + 1.0) / (2.0 * df)))
}

#[derive(Clone, Debug)]
pub struct KhinchinConfig {
    pub q: f64,
    pub trials: usize,
    pub seed: u64,
    pub chaos: ChaosKind,
    pub max_steps: usize,
    pub tol: f64,
    pub kappa_model: Option<f64>,
}

impl KhinchinConfig {
    pub fn new(q: f64, trials: usize, seed: u64) -> Self {
        Self { q, trials, seed, chaos: ChaosKind::Polynomial, max_steps: 500, tol: 1e-9, kappa_model: None }
    }
}

fn best_of(per_trial: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in per_trial.iter().enumerate() {
        if v > per_trial[best] {
            best = i;
        }
    }
    best
}

fn to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

/// Max of `||Q||_q / ||A||_2` over trials of the chosen chaos on `system`.
pub fn estimate_khinchin_constant(system: &CharacterSystem, d: usize, cfg: &KhinchinConfig) -> Result<ConstantEstimate> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if cfg.q.is_nan() || cfg.q <= 2.0 {
        return Err(Error::InvalidQ(cfg.q));
    }
    require_dissociated(system, d)?;
    let template = ChaosPolynomial::constant(system, d, cfg.chaos, Complex64::new(1.0, 0.0))?;
    let basis = ChaosBasis::new(&template);
    let ascend = even_q(cfg.q).is_ok();
    let runs: Vec<Result<(f64, Vec<Complex64>)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let start = gaussian_unit(&mut rng, basis.terms());
            if ascend {
                let run = khinchin_ascent(&basis, &start, cfg.q, cfg.max_steps, cfg.tol)?;
                Ok((run.ratio, run.coeffs))
            } else {
                Ok((lq_norm(&basis.combine(&start), cfg.q)?, start))
            }
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let per_trial: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let best = best_of(&per_trial);
    let ceiling = cfg.kappa_model.map(|k| khinchin_ceiling(d, k)).transpose()?;
    Ok(ConstantEstimate {
        kind: EstimateKind::Khinchin,
        d,
        exponent: cfg.q,
        m: system.len(),
        terms: basis.terms(),
        chaos: cfg.chaos,
        estimate: per_trial[best],
        maximizer: to_pairs(&runs[best].1),
        best_trial: best,
        trials: cfg.trials,
        seed: cfg.seed,
        per_trial,
        ceiling,
    })
}

#[derive(Clone, Debug)]
pub struct SidonConfig {
    /// Defaults to `2d / (d + 1)`.
    pub p: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub chaos: ChaosKind,
    pub max_sweeps: usize,
    /// Perturb-and-restart rounds after the first local optimum; each
    /// re-phases a random eighth of the coefficients.
    pub kicks: usize,
    /// Number of equally spaced phases tried per coordinate.
    pub phase_grid: usize,
    pub c_model: Option<f64>,
}

impl SidonConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { p: None, trials, seed, chaos: ChaosKind::Polynomial, max_sweeps: 50, kicks: 8, phase_grid: 24, c_model: None }
    }
}

/// Result of one phase search.
#[derive(Clone, Debug)]
pub struct PhaseSearch {
    pub coeffs: Vec<Complex64>,
    pub sup_norm: f64,
    /// `||Q||_inf` after each accepted move, starting with the initial point.
    pub trajectory: Vec<f64>,
}

/// Coordinate-wise phase search minimizing `||Q||_inf` over unimodular
/// coefficients. Only strict improvements are accepted.
pub fn sidon_phase_search(basis: &ChaosBasis, start: &[Complex64], phase_grid: usize, max_sweeps: usize) -> PhaseSearch {
    let mut a = start.to_vec();
    let mut values = basis.combine(&a);
    let sup = |v: &[Complex64]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut current = sup(&values);
    let mut trajectory = vec![current];
    let grid: Vec<Complex64> =
        (0..phase_grid).map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / phase_grid as f64)).collect();
    for _ in 0..max_sweeps {
        let mut improved = false;
        for (t, row) in basis.rows().iter().enumerate() {
            let mut best: Option<(f64, Complex64)> = None;
            for &cand in &grid {
                let delta = cand - a[t];
                if delta.norm() < 1e-12 {
                    continue;
                }
                let m = values.iter().zip(row).map(|(v, b)| (v + delta * b).norm()).fold(0.0, f64::max);
                if best.is_none_or(|(bm, _)| m < bm) {
                    best = Some((m, cand));
                }
            }
            if let Some((m, cand)) = best {
                if m < current - 1e-12 {
                    let delta = cand - a[t];
                    values.iter_mut().zip(row).for_each(|(v, b)| *v += delta * b);
                    a[t] = cand;
                    // recompute from the updated values to avoid drift in the bookkeeping
                    current = sup(&values);
                    trajectory.push(current);
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    PhaseSearch { coeffs: a, sup_norm: current, trajectory }
}

/// Max of `||A||_p / ||Q||_inf` over trials: even trials start from random
/// signs, odd trials from random phases, each followed by a phase search.
pub fn estimate_sidon_constant(system: &CharacterSystem, d: usize, cfg: &SidonConfig) -> Result<ConstantEstimate> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if cfg.phase_grid < 2 {
        return Err(Error::InvalidArgument("phase grid needs at least 2 points".into()));
    }
    let p = cfg.p.unwrap_or_else(|| sidon_exponent(d));
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidP(p));
    }
    require_dissociated(system, d)?;
    let template = ChaosPolynomial::constant(system, d, cfg.chaos, Complex64::new(1.0, 0.0))?;
    let basis = ChaosBasis::new(&template);
    let runs: Vec<(f64, Vec<Complex64>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let start: Vec<Complex64> = (0..basis.terms())
                .map(|_| {
                    if t % 2 == 0 {
                        Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0)
                    } else {
                        Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
                    }
                })
                .collect();
            let mut search = sidon_phase_search(&basis, &start, cfg.phase_grid, cfg.max_sweeps);
            let kicked = basis.terms().div_ceil(8);
            for _ in 0..cfg.kicks {
                let mut next = search.coeffs.clone();
                for _ in 0..kicked {
                    let t = rng.gen_range(0..next.len());
                    next[t] = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
                }
                let cand = sidon_phase_search(&basis, &next, cfg.phase_grid, cfg.max_sweeps);
                if cand.sup_norm < search.sup_norm - 1e-12 {
                    search = cand;
                }
            }
            let num = lp_coeff_norm(&search.coeffs, p).expect("p validated");
            let ratio = if search.sup_norm == 0.0 { f64::INFINITY } else { num / search.sup_norm };
            (ratio, search.coeffs)
        })
        .collect();
    let per_trial: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let best = best_of(&per_trial);
    let ceiling = cfg.c_model.map(|c| sidon_ceiling(d, c)).transpose()?;
    Ok(ConstantEstimate {
        kind: EstimateKind::Sidon,
        d,
        exponent: p,
        m: system.len(),
        terms: basis.terms(),
        chaos: cfg.chaos,
        estimate: per_trial[best],
        maximizer: to_pairs(&runs[best].1),
        best_trial: best,
        trials: cfg.trials,
        seed: cfg.seed,
        per_trial,
        ceiling,
    })
}

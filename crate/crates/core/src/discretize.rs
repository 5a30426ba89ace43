//! Weighted point sets that discretize the `L_q` norm on a chaos subspace,
//! and random-subset scans of how the frame constants degrade with the
//! number of points.
//!
//! `C_1` and `C_2` are measured over random probe coefficient vectors, so
//! they bound the true frame constants from above and below respectively.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{gaussian_unit, ChaosBasis};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct DiscretizationScheme {
    /// Element indices in enumeration order; repeats allowed.
    pub points: Vec<usize>,
    pub weights: Vec<f64>,
    pub q: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl DiscretizationScheme {
    pub fn new(points: Vec<usize>, weights: Vec<f64>, q: f64) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch { expected: points.len(), got: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < 0.0) {
            return Err(Error::InvalidArgument(format!("negative weight {w}")));
        }
        if q.is_nan() || q < 1.0 || q.is_infinite() {
            return Err(Error::InvalidQ(q));
        }
        Ok(Self { points, weights, q, c1: None, c2: None })
    }

    /// Uniform weights `1/m`.
    pub fn uniform(points: Vec<usize>, q: f64) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let n = points.len();
        Self::new(points, vec![w; n], q)
    }

    /// Every element once, weight `1/|G|`.
    pub fn full(size: usize, q: f64) -> Result<Self> {
        Self::uniform((0..size).collect(), q)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn discrete_norm(&self, values: &[Complex64]) -> f64 {
        let s: f64 = self.points.iter().zip(&self.weights).map(|(&i, w)| w * values[i].norm().powf(self.q)).sum();
        s.powf(1.0 / self.q)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn true_norm(values: &[Complex64], q: f64) -> f64 {
    (values.iter().map(|v| v.norm().powf(q)).sum::<f64>() / values.len() as f64).powf(1.0 / q)
}

/// A nonzero coefficient vector whose combination vanishes on `points`, if
/// the restricted basis matrix has a kernel.
pub fn null_probe(basis: &ChaosBasis, points: &[usize]) -> Option<Vec<Complex64>> {
    let n = basis.terms();
    // rows = points, columns = basis functions
    let mut mat: Vec<Vec<Complex64>> = points.iter().map(|&p| basis.rows().iter().map(|r| r[p]).collect()).collect();
    let scale = mat.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let eps = 1e-10 * scale;
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(best) = (row..mat.len()).max_by(|&a, &b| mat[a][col].norm().total_cmp(&mat[b][col].norm())) else {
            break;
        };
        if mat[best][col].norm() <= eps {
            continue;
        }
        mat.swap(row, best);
        let inv = 1.0 / mat[row][col];
        mat[row].iter_mut().for_each(|v| *v *= inv);
        let pivot_row = mat[row].clone();
        for (r, other) in mat.iter_mut().enumerate() {
            if r != row {
                let f = other[col];
                if f.norm() > 0.0 {
                    other.iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == mat.len() {
            break;
        }
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    a[free] = Complex64::new(1.0, 0.0);
    for (r, &pc) in pivots.iter().enumerate() {
        a[pc] = -mat[r][free];
    }
    Some(a)
}

/// `(C_1, C_2)` as min and max of discrete over true `L_q` norm across
/// `probes` Gaussian coefficient vectors, plus a kernel probe when one exists.
pub fn evaluate_scheme(basis: &ChaosBasis, scheme: &DiscretizationScheme, probes: usize, seed: u64) -> Result<(f64, f64)> {
    if scheme.is_empty() {
        return Err(Error::EmptyScheme);
    }
    if probes == 0 {
        return Err(Error::InvalidArgument("probes must be at least 1".into()));
    }
    if basis.terms() == 0 {
        return Err(Error::ZeroPolynomial);
    }
    let mut rng = rng_for(seed, 0);
    let mut vectors: Vec<Vec<Complex64>> = (0..probes).map(|_| gaussian_unit(&mut rng, basis.terms())).collect();
    if let Some(a) = null_probe(basis, &scheme.points) {
        vectors.push(a);
    }
    let ratios: Vec<f64> = vectors
        .par_iter()
        .map(|a| {
            let values = basis.combine(a);
            scheme.discrete_norm(&values) / true_norm(&values, scheme.q)
        })
        .collect();
    let c1 = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = ratios.iter().copied().fold(0.0, f64::max);
    Ok((c1, c2))
}

/// `m` points drawn uniformly: without replacement when `m <= |G|`, else
/// `floor(m/|G|)` full copies plus a random subset for the remainder.
pub fn random_points(size: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let copies = m / size;
    let mut pts: Vec<usize> = (0..copies).flat_map(|_| 0..size).collect();
    pts.extend(sample(rng, size, m % size));
    pts.sort_unstable();
    pts
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub m: usize,
    pub trial: usize,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary {
    pub m: usize,
    pub median_c1: f64,
    pub median_c2: f64,
    pub worst_c1: f64,
    pub worst_c2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanTable {
    pub q: f64,
    pub n: usize,
    pub seed: u64,
    pub trials: usize,
    pub probes: usize,
    pub rows: Vec<ScanRow>,
    pub summary: Vec<ScanSummary>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Random uniform-weight schemes of each size in `m_grid`, `trials` each.
/// Rows come out sorted by `m`, then trial.
pub fn scan_point_counts(basis: &ChaosBasis, q: f64, m_grid: &[usize], trials: usize, probes: usize, seed: u64) -> Result<ScanTable> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let size = basis.rows().first().map_or(0, Vec::len);
    let mut grid = m_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.first() == Some(&0) {
        return Err(Error::EmptyScheme);
    }
    let jobs: Vec<(usize, usize)> = grid.iter().flat_map(|&m| (0..trials).map(move |t| (m, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(m, t)| {
            // one stream per (m, trial); the probe seed is shared so every
            // scheme is judged on the same probes
            let mut rng = rng_for(seed, 1 + (m as u64) * (trials as u64) + t as u64);
            let scheme = DiscretizationScheme::uniform(random_points(size, m, &mut rng), q)?;
            let (c1, c2) = evaluate_scheme(basis, &scheme, probes, seed)?;
            Ok(ScanRow { m, trial: t, c1, c2 })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = grid
        .iter()
        .map(|&m| {
            let c1: Vec<f64> = rows.iter().filter(|r| r.m == m).map(|r| r.c1).collect();
            let c2: Vec<f64> = rows.iter().filter(|r| r.m == m).map(|r| r.c2).collect();
            ScanSummary {
                m,
                worst_c1: c1.iter().copied().fold(f64::INFINITY, f64::min),
                worst_c2: c2.iter().copied().fold(0.0, f64::max),
                median_c1: median(c1),
                median_c2: median(c2),
            }
        })
        .collect();
    Ok(ScanTable { q, n: basis.terms(), seed, trials, probes, rows, summary })
}

/// Heuristic nonnegative weights fitted so that `sum_i w_i |f(xi_i)|^q`
/// matches `||f||_q^q` on the probe set, by projected gradient on the
/// least-squares residual. No optimality guarantee.
pub fn fit_weights_nnls(basis: &ChaosBasis, points: &[usize], q: f64, probes: usize, seed: u64) -> Result<DiscretizationScheme> {
    if points.is_empty() {
        return Err(Error::EmptyScheme);
    }
    let mut rng = rng_for(seed, 0);
    let rows: Vec<Vec<f64>> = (0..probes.max(1))
        .map(|_| {
            let a = gaussian_unit(&mut rng, basis.terms());
            let values = basis.combine(&a);
            let total = true_norm(&values, q).powf(q);
            points.iter().map(|&i| values[i].norm().powf(q) / total).collect()
        })
        .collect();
    let lip: f64 = rows.iter().flatten().map(|v| v * v).sum::<f64>().max(1e-300);
    let mut w = vec![1.0 / points.len() as f64; points.len()];
    for _ in 0..2000 {
        let mut grad = vec![0.0; w.len()];
        for row in &rows {
            let r: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
            grad.iter_mut().zip(row).for_each(|(g, a)| *g += r * a);
        }
        w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi = (*wi - g / lip).max(0.0));
    }
    DiscretizationScheme::new(points.to_vec(), w, q)
}

/// Median `C_1` against `m`, with a dashed marker at `N^{q/2}`.
pub fn scan_svg(table: &ScanTable) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let marker = (table.n as f64).powf(table.q / 2.0);
    let max_m = table.summary.iter().map(|s| s.m as f64).fold(marker, f64::max).max(1.0);
    let x = |m: f64| pad + (w - 2.0 * pad) * m / max_m;
    let y = |c: f64| h - pad - (h - 2.0 * pad) * c.clamp(0.0, 1.2) / 1.2;
    let pts: Vec<String> = table.summary.iter().map(|s| format!("{:.2},{:.2}", x(s.m as f64), y(s.median_c1))).collect();
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    out += &format!(
        "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - pad,
        w - pad,
        h - pad,
        h - pad
    );
    out += &format!("<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n", pts.join(" "));
    for s in &table.summary {
        out += &format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n", x(s.m as f64), y(s.median_c1));
    }
    out += &format!(
        "<line x1=\"{0:.2}\" y1=\"{pad}\" x2=\"{0:.2}\" y2=\"{1}\" stroke=\"crimson\" stroke-dasharray=\"6,4\"/>\n",
        x(marker),
        h - pad
    );
    out += &format!("<text x=\"{:.2}\" y=\"{}\" font-size=\"12\">N^(q/2) = {marker}</text>\n", x(marker) + 4.0, pad + 12.0);
    out += &format!("<text x=\"{}\" y=\"{}\" font-size=\"12\">m</text>\n", w / 2.0, h - 15.0);
    out += &format!("<text x=\"10\" y=\"{}\" font-size=\"12\">median C1</text>\n", h / 2.0);
    out += "</svg>\n";
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{ChaosKind, ChaosPolynomial};
    use crate::dissociation::rademacher_system;

    fn basis_n6() -> ChaosBasis {
        let sys = rademacher_system(2, 4).unwrap();
        let t = ChaosPolynomial::constant(&sys, 2, ChaosKind::Tetrahedral, Complex64::new(1.0, 0.0)).unwrap();
        ChaosBasis::new(&t)
    }

    #[test]
    fn full_scheme_is_exact() {
        let b = basis_n6();
        for q in [2.0, 4.0, 6.0, 3.5] {
            let (c1, c2) = evaluate_scheme(&b, &DiscretizationScheme::full(16, q).unwrap(), 20, 3).unwrap();
            assert!((c1 - 1.0).abs() < 1e-12 && (c2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_has_zero_c1() {
        let b = basis_n6();
        let (c1, c2) = evaluate_scheme(&b, &DiscretizationScheme::uniform(vec![5], 4.0).unwrap(), 10, 1).unwrap();
        assert!(c1 < 1e-12);
        assert!(c2 > 0.0);
    }

    #[test]
    fn errors() {
        let b = basis_n6();
        let empty = DiscretizationScheme::uniform(vec![], 4.0).unwrap();
        assert_eq!(evaluate_scheme(&b, &empty, 1, 0).unwrap_err(), Error::EmptyScheme);
        assert!(DiscretizationScheme::new(vec![0], vec![-1.0], 4.0).is_err());
    }

    #[test]
    fn scan_has_exact_full_row_and_is_reproducible() {
        let b = basis_n6();
        let a = scan_point_counts(&b, 4.0, &[6, 16, 36], 3, 16, 9).unwrap();
        let again = scan_point_counts(&b, 4.0, &[36, 6, 16], 3, 16, 9).unwrap();
        assert_eq!(format!("{:?}", a.rows), format!("{:?}", again.rows));
        for r in a.rows.iter().filter(|r| r.m == 16) {
            assert!((r.c1 - 1.0).abs() < 1e-12 && (r.c2 - 1.0).abs() < 1e-12);
        }
        assert!(a.rows.iter().all(|r| r.c1 <= r.c2));
        assert!(scan_svg(&a).contains("polyline"));
    }

    #[test]
    fn oversampled_points_cover_group() {
        let mut rng = rng_for(0, 0);
        let pts = random_points(16, 36, &mut rng);
        assert_eq!(pts.len(), 36);
        for i in 0..16 {
            assert!(pts.iter().filter(|&&p| p == i).count() >= 2);
        }
    }

    #[test]
    fn nnls_keeps_weights_nonnegative() {
        let b = basis_n6();
        let s = fit_weights_nnls(&b, &(0..16).collect::<Vec<_>>(), 4.0, 12, 2).unwrap();
        assert!(s.weights.iter().all(|w| *w >= 0.0));
        let (c1, c2) = evaluate_scheme(&b, &s, 12, 2).unwrap();
        assert!(c1 > 0.5 && c2 < 1.5);
    }
}

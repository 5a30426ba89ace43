//! Command-line driver. Every run is determined by a JSON config (plus an
//! optional `--seed` override); each output file carries the version and a
//! SHA-256 of the effective config.
//!
//! Exit status: 0 on success, 1 when a checked property fails, 2 on config
//! or module errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    estimate_khinchin_constant, estimate_sidon_constant, khinchin_ceiling, lq_norm, random_polynomial, sidon_ceiling,
    sidon_exponent, trial_rng, ChaosBasis, ConstantEstimate, KhinchinConfig, SidonConfig,
};
use crate::chaos::{ChaosKind, ChaosPolynomial};
use crate::discretize::{evaluate_scheme, fit_weights_nnls, random_points, scan_point_counts, scan_svg};
use crate::dissociation::{
    check_dissociated, hadamard_trig_system, rademacher_system, vc_system_from_digit_sets, CharacterSystem,
};
use crate::error::{Error, Result};
use crate::group::{fourier, make_group, max_abs_diff};
use crate::riesz::{
    chaos_extract, modulated_extract, modulated_extract_expectation, nu_coefficients, nu_density, product_spectrum,
    require_exact_law, riesz_density, ModulationPoint,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "lacuna", version, about = "Polynomial chaos over dissociated character systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Also write SVG plots where available.
    #[arg(long, global = true)]
    pub svg: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckDissociated,
    RieszReport,
    NuSolve,
    ExtractVerify,
    Khinchin,
    Sidon,
    DiscretizeScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckDissociated => "check-dissociated",
            Command::RieszReport => "riesz-report",
            Command::NuSolve => "nu-solve",
            Command::ExtractVerify => "extract-verify",
            Command::Khinchin => "khinchin",
            Command::Sidon => "sidon",
            Command::DiscretizeScan => "discretize-scan",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Explicit { orders: Vec<usize>, characters: Vec<Vec<usize>> },
    Hadamard { ratio: usize, count: usize, modulus: usize },
    VcStaircase { p: usize, rank: usize, sets: Vec<Vec<usize>>, values: Vec<Vec<usize>> },
    Rademacher { p: usize, count: usize },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Shorthand for an explicit system, together with `characters`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characters: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chaos: Option<ChaosKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_model: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidon_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    /// Random polynomials drawn by extract-verify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomials: Option<usize>,
    /// Modulation points per polynomial in extract-verify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_samples: Option<usize>,
    #[serde(default)]
    pub expectation: bool,
    #[serde(default)]
    pub nnls: bool,
}

pub const DEFAULT_KAPPA_MODEL: f64 = 10.0;
pub const DEFAULT_SIDON_C: f64 = 0.1;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.to_string()));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if self.system.is_some() && (self.orders.is_some() || self.characters.is_some()) {
            return bad("give either `system` or `orders`/`characters`, not both");
        }
        if self.orders.is_some() != self.characters.is_some() {
            return bad("`orders` and `characters` go together");
        }
        if self.trials == Some(0) {
            return bad("trials must be at least 1");
        }
        if self.probes == Some(0) || self.polynomials == Some(0) || self.y_samples == Some(0) {
            return bad("probes, polynomials and y_samples must be at least 1");
        }
        if let Some(k) = self.kappa_model {
            if k.is_nan() || k <= 0.0 {
                return bad("kappa_model must be positive");
            }
        }
        if let Some(c) = self.sidon_c {
            if c.is_nan() || c <= 0.0 {
                return bad("sidon_c must be positive");
            }
        }
        Ok(())
    }

    pub fn has_system(&self) -> bool {
        self.system.is_some() || self.orders.is_some()
    }

    pub fn build_system(&self) -> Result<CharacterSystem> {
        match (&self.system, &self.orders, &self.characters) {
            (Some(spec), _, _) => build_spec(spec, self.d),
            (None, Some(orders), Some(chars)) => {
                build_spec(&SystemSpec::Explicit { orders: orders.clone(), characters: chars.clone() }, self.d)
            }
            _ => Err(Error::ConfigInvalid("no character system given".into())),
        }
    }

    pub fn chaos_kind(&self) -> ChaosKind {
        self.chaos.unwrap_or_default()
    }

    fn trials_or(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }
}

fn build_spec(spec: &SystemSpec, d: usize) -> Result<CharacterSystem> {
    match spec {
        SystemSpec::Explicit { orders, characters } => {
            let g = make_group(orders)?;
            CharacterSystem::from_exponents(&g, characters)
        }
        SystemSpec::Hadamard { ratio, count, modulus } => hadamard_trig_system(*ratio, *count, *modulus, d),
        SystemSpec::VcStaircase { p, rank, sets, values } => vc_system_from_digit_sets(*p, *rank, sets, values),
        SystemSpec::Rademacher { p, count } => rademacher_system(*p, *count),
    }
}

/// SHA-256 of the subcommand name and the canonical config JSON.
pub fn config_hash(command: Command, cfg: &RunConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let mut h = Sha256::new();
    h.update(command.name().as_bytes());
    h.update(b"\n");
    h.update(canonical.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Run {
    command: Command,
    cfg: RunConfig,
    hash: String,
    out: PathBuf,
    svg: bool,
    violations: Vec<String>,
    files: Vec<PathBuf>,
}

impl Run {
    fn header(&self) -> Value {
        json!({
            "version": VERSION,
            "command": self.command.name(),
            "config_hash": self.hash,
            "config": self.cfg,
        })
    }

    fn write_json(&mut self, name: &str, body: Value) -> Result<()> {
        let mut doc = self.header();
        doc["result"] = body;
        doc["violations"] = json!(self.violations);
        let path = self.out.join(name);
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        self.files.push(path);
        Ok(())
    }

    /// RFC 4180 body preceded by `#` comment lines echoing the config.
    fn write_csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.out.join(name);
        let mut buf: Vec<u8> = Vec::new();
        writeln!(buf, "# lacuna {VERSION} {}", self.command.name())?;
        writeln!(buf, "# config_hash {}", self.hash)?;
        writeln!(buf, "# config {}", serde_json::to_string(&self.cfg)?)?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(columns)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        fs::write(&path, buf)?;
        self.files.push(path);
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.out.join(name);
        let body = format!("<!-- lacuna {VERSION} config_hash {} -->\n{text}", self.hash);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    fn violate(&mut self, msg: String) {
        self.violations.push(msg);
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub violations: Vec<String>,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Runs one subcommand against a parsed config.
pub fn run(command: Command, cfg: RunConfig, out: &Path, svg: bool) -> Result<Outcome> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let hash = config_hash(command, &cfg);
    let mut run = Run { command, cfg, hash, out: out.to_path_buf(), svg, violations: Vec::new(), files: Vec::new() };
    let summary = match command {
        Command::CheckDissociated => cmd_check(&mut run)?,
        Command::RieszReport => cmd_riesz(&mut run)?,
        Command::NuSolve => cmd_nu(&mut run)?,
        Command::ExtractVerify => cmd_extract(&mut run)?,
        Command::Khinchin => cmd_khinchin(&mut run)?,
        Command::Sidon => cmd_sidon(&mut run)?,
        Command::DiscretizeScan => cmd_discretize(&mut run)?,
    };
    Ok(Outcome { violations: run.violations, files: run.files, summary })
}

fn cmd_check(run: &mut Run) -> Result<String> {
    let sys = run.cfg.build_system()?;
    let report = check_dissociated(&sys, run.cfg.d)?;
    let summary = format!("{}-dissociated: {}", report.d, report.dissociated);
    run.write_json(
        "check_dissociated.json",
        json!({ "orders": sys.group().orders(), "characters": sys.exponent_vectors(), "report": report }),
    )?;
    Ok(summary)
}

fn complex_rows(values: &[Complex64]) -> Vec<Vec<String>> {
    values.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_f64(v.re), fmt_f64(v.im)]).collect()
}

fn cmd_riesz(run: &mut Run) -> Result<String> {
    let sys = run.cfg.build_system()?;
    let d = run.cfg.d;
    let rho = riesz_density(&sys, d)?;
    let table = fourier(&rho);
    let probability = rho.is_probability(1e-10);
    if !probability {
        run.violate(format!(
            "density is not a probability density (min {}, imag {}, mass {})",
            rho.min_real(),
            rho.max_abs_imag(),
            rho.mass()
        ));
    }
    let law = match require_exact_law(&sys, d) {
        Ok(()) => {
            let spectrum = product_spectrum(&sys, d)?;
            let err = table
                .coeffs()
                .iter()
                .zip(&spectrum)
                .map(|(c, s)| (c - s.map_or(0.0, |s| (2.0 * d as f64).powi(-(s as i32)))).norm())
                .fold(0.0, f64::max);
            if err > 1e-9 {
                run.violate(format!("Fourier law off by {err}"));
            }
            json!({ "checked": true, "max_error": err })
        }
        Err(e) => json!({ "checked": false, "reason": e.to_string() }),
    };
    run.write_csv("riesz_density.csv", &["element", "re", "im"], &complex_rows(rho.values()))?;
    run.write_csv("riesz_fourier.csv", &["character", "re", "im"], &complex_rows(table.coeffs()))?;
    let mass = rho.mass();
    run.write_json(
        "riesz_report.json",
        json!({
            "group_size": sys.group().size(),
            "mass": [mass.re, mass.im],
            "min_real": rho.min_real(),
            "max_abs_imag": rho.max_abs_imag(),
            "total_variation": rho.total_variation(),
            "is_probability": probability,
            "fourier_law": law,
        }),
    )?;
    Ok(format!("riesz density on |G| = {}: probability = {probability}", sys.group().size()))
}

fn cmd_nu(run: &mut Run) -> Result<String> {
    let d = run.cfg.d;
    let ss: Vec<usize> = match run.cfg.s {
        Some(s) => vec![s],
        None => (1..=d).collect(),
    };
    let system = if run.cfg.has_system() { Some(run.cfg.build_system()?) } else { None };
    let mut specs = Vec::new();
    for &s in &ss {
        let spec = nu_coefficients(d, s)?;
        let mut record = json!(spec);
        if let Some(sys) = &system {
            let nu = nu_density(sys, d, s)?;
            let tv = nu.total_variation();
            let spectrum = product_spectrum(sys, d)?;
            let law_err = fourier(&nu)
                .coeffs()
                .iter()
                .zip(&spectrum)
                .filter(|(_, j)| j.is_none_or(|j| (1..=d).contains(&j)))
                .map(|(c, j)| (c - if *j == Some(s) { 1.0 } else { 0.0 }).norm())
                .fold(0.0, f64::max);
            if law_err > 1e-8 {
                run.violate(format!("s = {s}: indicator law off by {law_err}"));
            }
            if tv > spec.variation_bound * (1.0 + 1e-9) {
                run.violate(format!("s = {s}: total variation {tv} exceeds C_s = {}", spec.variation_bound));
            }
            record["measured_total_variation"] = json!(tv);
            record["indicator_law_error"] = json!(law_err);
        }
        specs.push(record);
    }
    run.write_json("nu_solve.json", json!({ "d": d, "nu": specs }))?;
    Ok(format!("solved {} coefficient vector(s) for d = {d}", ss.len()))
}

fn cmd_extract(run: &mut Run) -> Result<String> {
    let sys = run.cfg.build_system()?;
    let d = run.cfg.d;
    let kind = run.cfg.chaos_kind();
    let q = run.cfg.q.unwrap_or(4.0);
    let kappa = run.cfg.kappa_model.unwrap_or(DEFAULT_KAPPA_MODEL);
    let ceiling = khinchin_ceiling(d, kappa)?;
    let polys = run.cfg.polynomials.unwrap_or(10);
    let ys = run.cfg.y_samples.unwrap_or(10);
    let expectation = run.cfg.expectation;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let (mut worst_nu, mut worst_rho, mut worst_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for t in 0..polys {
        let mut rng = trial_rng(run.cfg.seed, t);
        let poly = random_polynomial(&sys, d, kind, &mut rng)?;
        let parts = poly.decompose();
        let ratio = lq_norm(&poly.evaluate_all(), q)? / poly.l2_norm();
        worst_ratio = worst_ratio.max(ratio);
        if ratio > ceiling {
            run.violate(format!("polynomial {t}: ||Q||_q / ||A||_2 = {ratio} exceeds {ceiling}"));
        }
        let mut errs_nu = Vec::new();
        let mut errs_rho = Vec::new();
        for part in &parts {
            let s = part.s;
            let target = part.evaluate_all();
            let scaled: Vec<Complex64> = target.iter().map(|v| v / (2.0 * d as f64).powi(s as i32)).collect();
            if expectation {
                let err = max_abs_diff(&modulated_extract_expectation(&poly, s)?, &scaled);
                rows.push(vec![t.to_string(), s.to_string(), "expectation".into(), fmt_f64(err)]);
                errs_rho.push(err);
                continue;
            }
            let err = max_abs_diff(&chaos_extract(&poly, s)?, &target);
            rows.push(vec![t.to_string(), s.to_string(), "nu".into(), fmt_f64(err)]);
            errs_nu.push(err);
            for yi in 0..ys {
                let digits: Vec<usize> = (0..sys.len()).map(|_| rng.gen_range(0..2 * d + 1)).collect();
                let y = ModulationPoint::new(d, digits)?;
                let err = max_abs_diff(&modulated_extract(&poly, s, &y)?, &scaled);
                rows.push(vec![t.to_string(), s.to_string(), format!("y{yi}"), fmt_f64(err)]);
                errs_rho.push(err);
            }
        }
        let mx = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        worst_nu = worst_nu.max(mx(&errs_nu));
        worst_rho = worst_rho.max(mx(&errs_rho));
        records.push(json!({ "polynomial": t, "terms": poly.len(), "khinchin_ratio": ratio,
                             "max_nu_error": mx(&errs_nu), "max_rho_error": mx(&errs_rho) }));
    }
    if !expectation {
        if worst_nu > 1e-8 {
            run.violate(format!("Q * nu_s differs from Q^(s) by {worst_nu}"));
        }
        if worst_rho > 1e-8 {
            run.violate(format!("Q_y^(s) * rho_y differs from Q^(s)/(2d)^s by {worst_rho}"));
        }
    }
    run.write_csv("extract_verify.csv", &["polynomial", "s", "check", "max_error"], &rows)?;
    run.write_json(
        "extract_verify.json",
        json!({
            "mode": if expectation { "expectation" } else { "pointwise" },
            "q": q,
            "kappa_model": kappa,
            "khinchin_ceiling": ceiling,
            "max_khinchin_ratio": worst_ratio,
            "max_nu_error": worst_nu,
            "max_rho_error": worst_rho,
            "polynomials": records,
        }),
    )?;
    Ok(format!("{polys} polynomial(s): nu error {worst_nu:.3e}, rho error {worst_rho:.3e}"))
}

fn estimate_row(e: &ConstantEstimate) -> Vec<String> {
    vec![
        serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        e.d.to_string(),
        fmt_f64(e.exponent),
        e.m.to_string(),
        fmt_f64(e.estimate),
        e.seed.to_string(),
    ]
}

const ESTIMATE_COLUMNS: [&str; 6] = ["kind", "d", "exponent", "m", "estimate", "seed"];

fn cmd_khinchin(run: &mut Run) -> Result<String> {
    let sys = run.cfg.build_system()?;
    let d = run.cfg.d;
    let cfg = KhinchinConfig {
        chaos: run.cfg.chaos_kind(),
        kappa_model: Some(run.cfg.kappa_model.unwrap_or(DEFAULT_KAPPA_MODEL)),
        ..KhinchinConfig::new(run.cfg.q.unwrap_or(4.0), run.cfg.trials_or(8), run.cfg.seed)
    };
    let est = estimate_khinchin_constant(&sys, d, &cfg)?;
    if !est.respects_ceiling() {
        run.violate(format!("estimate {} exceeds ceiling {:?}", est.estimate, est.ceiling));
    }
    run.write_csv("khinchin.csv", &ESTIMATE_COLUMNS, &[estimate_row(&est)])?;
    let summary = format!("khinchin estimate {:.6} (q = {})", est.estimate, est.exponent);
    run.write_json("khinchin.json", json!(est))?;
    Ok(summary)
}

fn cmd_sidon(run: &mut Run) -> Result<String> {
    let d = run.cfg.d;
    let trials = run.cfg.trials_or(8);
    let c = run.cfg.sidon_c.unwrap_or(DEFAULT_SIDON_C);
    let mut rows = Vec::new();
    let mut body = json!({ "sidon_c": c, "ceiling": sidon_ceiling(d, c)? });
    if run.cfg.has_system() {
        let sys = run.cfg.build_system()?;
        let cfg = SidonConfig {
            p: run.cfg.p,
            chaos: run.cfg.chaos_kind(),
            c_model: Some(c),
            ..SidonConfig::new(trials, run.cfg.seed)
        };
        let est = estimate_sidon_constant(&sys, d, &cfg)?;
        if !est.respects_ceiling() {
            run.violate(format!("estimate {} exceeds ceiling {:?}", est.estimate, est.ceiling));
        }
        rows.push(estimate_row(&est));
        body["estimate"] = json!(est);
    }
    if let Some(grid) = run.cfg.m_grid.clone() {
        let p = run.cfg.p.unwrap_or_else(|| sidon_exponent(d));
        let mut study = Vec::new();
        let mut sharp_rows = Vec::new();
        for &m in &grid {
            let sys = rademacher_system(2, m)?;
            let cfg = SidonConfig {
                p: Some(p),
                chaos: ChaosKind::Tetrahedral,
                c_model: Some(c),
                ..SidonConfig::new(trials, run.cfg.seed)
            };
            let est = estimate_sidon_constant(&sys, d, &cfg)?;
            sharp_rows.push(vec![m.to_string(), fmt_f64(p), fmt_f64(est.estimate), est.terms.to_string()]);
            study.push(json!({ "m": m, "terms": est.terms, "estimate": est.estimate }));
        }
        run.write_csv("sidon_sharpness.csv", &["m", "p", "estimate", "terms"], &sharp_rows)?;
        body["sharpness"] = json!({ "p": p, "chaos": "tetrahedral", "rows": study });
    }
    if !run.cfg.has_system() && run.cfg.m_grid.is_none() {
        return Err(Error::ConfigInvalid("sidon needs a system or an m_grid".into()));
    }
    if !rows.is_empty() {
        run.write_csv("sidon.csv", &ESTIMATE_COLUMNS, &rows)?;
    }
    run.write_json("sidon.json", body)?;
    Ok("sidon estimates written".into())
}

fn cmd_discretize(run: &mut Run) -> Result<String> {
    let sys = run.cfg.build_system()?;
    let d = run.cfg.d;
    let q = run.cfg.q.unwrap_or(4.0);
    let trials = run.cfg.trials_or(32);
    let probes = run.cfg.probes.unwrap_or(64);
    let seed = run.cfg.seed;
    let template = ChaosPolynomial::constant(&sys, d, run.cfg.chaos_kind(), Complex64::new(1.0, 0.0))?;
    let basis = ChaosBasis::new(&template);
    let n = basis.terms();
    let grid = match &run.cfg.m_grid {
        Some(g) => g.clone(),
        None => {
            let target = (n as f64).powf(q / 2.0).round() as usize;
            vec![n, 2 * n, target, 2 * target]
        }
    };
    let table = scan_point_counts(&basis, q, &grid, trials, probes, seed)?;
    if let Some(r) = table.rows.iter().find(|r| r.c1 > r.c2) {
        run.violate(format!("m = {}, trial {}: C1 > C2", r.m, r.trial));
    }
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.trial.to_string(),
                fmt_f64(r.c1),
                fmt_f64(r.c2),
                fmt_f64(q),
                n.to_string(),
                seed.to_string(),
            ]
        })
        .collect();
    run.write_csv("discretize_scan.csv", &["m", "trial", "C1", "C2", "q", "N", "seed"], &rows)?;
    let mut body = json!({
        "note": "C1 and C2 are probe estimates: upper and lower bounds on the true frame constants",
        "q": q,
        "N": n,
        "N_pow_q_half": (n as f64).powf(q / 2.0),
        "summary": table.summary,
    });
    if run.cfg.nnls {
        let size = sys.group().size();
        let mut fits = Vec::new();
        for &m in &table.summary.iter().map(|s| s.m).collect::<Vec<_>>() {
            let mut rng = trial_rng(seed, m);
            let pts = random_points(size, m, &mut rng);
            let scheme = fit_weights_nnls(&basis, &pts, q, probes, seed)?;
            let (c1, c2) = evaluate_scheme(&basis, &scheme, probes, seed.wrapping_add(1))?;
            fits.push(json!({ "m": m, "C1": c1, "C2": c2 }));
        }
        body["nnls_heuristic"] = json!(fits);
    }
    if run.svg {
        run.write_text("discretize_scan.svg", &scan_svg(&table))?;
    }
    run.write_json("discretize_scan.json", body)?;
    Ok(format!("scanned {} point counts, N = {n}", table.summary.len()))
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::ConfigInvalid("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("LACUNA_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::ConfigInvalid(format!("LACUNA_THREADS = {v:?} is not a count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Parses arguments, runs, prints a summary, returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = load_config(&cli)
        .and_then(|cfg| thread_pool().and_then(|pool| pool.install(|| run(cli.command, cfg, &cli.out, cli.svg))));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.violations.is_empty() {
                0
            } else {
                for v in &outcome.violations {
                    eprintln!("violation: {v}");
                }
                1
            }
        }
        Err(e) => {
            eprintln!("error ({}): {e}", cli.command.name());
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_json(text).unwrap()
    }

    #[test]
    fn config_parsing() {
        let c = cfg(r#"{"system": {"kind": "hadamard", "ratio": 3, "count": 3, "modulus": 1000}, "d": 2}"#);
        assert_eq!(c.build_system().unwrap().len(), 3);
        let c = cfg(r#"{"orders": [5], "characters": [[1], [2]], "d": 1}"#);
        assert_eq!(c.build_system().unwrap().len(), 2);
        assert!(matches!(RunConfig::from_json(r#"{"d": 1, "trials": 0}"#), Err(Error::ConfigInvalid(_))));
        assert!(matches!(RunConfig::from_json(r#"{"d": 1, "bogus": 3}"#), Err(Error::ConfigInvalid(_))));
        assert!(matches!(RunConfig::from_json(r#"{"d": 0}"#), Err(Error::ConfigInvalid(_))));
        assert!(matches!(RunConfig::from_json(r#"{"d": 1, "orders": [5]}"#), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn hash_depends_on_command_and_seed() {
        let mut c = cfg(r#"{"orders": [5], "characters": [[1]], "d": 1}"#);
        let a = config_hash(Command::Khinchin, &c);
        assert_eq!(a.len(), 64);
        assert_ne!(a, config_hash(Command::Sidon, &c));
        c.seed = 1;
        assert_ne!(a, config_hash(Command::Khinchin, &c));
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}

//! Reports behind the command-line tool: the verification battery, the
//! worked examples and intensity sweeps, rendered as text tables, CSV or
//! JSON (schema `v1`).

use std::fmt::Write as _;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::condexp::{CondExp, IndependenceReport};
use crate::error::{Error, Result};
use crate::examples::example;
use crate::lsn::{
    check_independence_shift, conditional_pmf, lsn_bounds, stein_identity_residual, tv_by_block, verify_lsn,
    BernoulliFamily, DiscrepancyReport,
};
use crate::model::{Backend, Model, ModelOptions};
use crate::natset::NatSet;
use crate::product::build_product_model;
use crate::scalar::{parse_rational, Rational, Scalar};
use crate::stein::{check_g_measure, delta, SteinConfig};

pub const SCHEMA_VERSION: &str = "v1";

/// Column order of the verification CSV.
pub const VERIFY_CSV_HEADER: [&str; 11] = [
    "block",
    "set",
    "descriptor",
    "prob",
    "poisson",
    "difference",
    "tv",
    "sup_h",
    "refined",
    "bound_satisfied",
    "refined_satisfied",
];

/// Column order of the sweep CSV.
pub const SWEEP_CSV_HEADER: [&str; 6] = ["lambda", "block", "tv", "sup_h", "refined", "ratio"];

/// Seed of the random member of the default set battery.
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub backend: Backend,
    pub tolerance: f64,
    pub j_max: usize,
    pub seed: u64,
}

impl VerifyOptions {
    pub fn from_model(opts: &ModelOptions) -> Self {
        VerifyOptions {
            backend: opts.backend,
            tolerance: opts.tolerance,
            j_max: opts.j_max,
            seed: DEFAULT_SEED,
        }
    }

    fn stein(&self) -> SteinConfig {
        SteinConfig {
            j_max: self.j_max,
            tolerance: self.tolerance,
            ..SteinConfig::default()
        }
    }
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self::from_model(&ModelOptions::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedSet {
    pub name: String,
    pub set: NatSet,
}

/// The default sets for a sum taking values in `0..=κ`: `∅`, `ℕ₀`, the
/// singletons `0..=κ+2`, the even numbers up to 40, one seeded random subset
/// of `0..=κ+2`, and the complements of all of these (duplicates dropped).
pub fn battery(kappa: usize, seed: u64) -> Vec<NamedSet> {
    let mut base = vec![
        ("empty".to_string(), NatSet::empty()),
        ("all".to_string(), NatSet::all()),
    ];
    for k in 0..=kappa + 2 {
        base.push((format!("single_{k}"), NatSet::singleton(k)));
    }
    base.push(("evens".into(), NatSet::finite((0..=40).step_by(2))));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = NatSet::finite((0..=kappa + 2).filter(|_| rng.gen_bool(0.5)));
    base.push(("random".into(), random));

    let mut out: Vec<NamedSet> = Vec::new();
    let complements: Vec<_> = base.iter().map(|(n, a)| (format!("not_{n}"), a.complement())).collect();
    for (name, set) in base.into_iter().chain(complements) {
        if !out.iter().any(|s| s.set == set) {
            out.push(NamedSet { name, set });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub set: Option<String>,
    pub status: Status,
    /// The measured quantity; the check passes when `value <= limit`.
    pub value: f64,
    pub limit: f64,
    pub detail: Option<String>,
}

impl CheckResult {
    fn measured(check: &str, set: Option<&str>, value: f64, limit: f64) -> Self {
        CheckResult {
            check: check.into(),
            set: set.map(String::from),
            status: if value <= limit { Status::Pass } else { Status::Fail },
            value,
            limit,
            detail: None,
        }
    }

    fn skipped(check: &str, set: Option<&str>, why: &str) -> Self {
        CheckResult {
            check: check.into(),
            set: set.map(String::from),
            status: Status::Skipped,
            value: 0.0,
            limit: 0.0,
            detail: Some(why.into()),
        }
    }

    fn key(&self) -> String {
        match &self.set {
            Some(s) => format!("{}[{s}]", self.check),
            None => self.check.clone(),
        }
    }
}

/// One block and one set of the discrepancy table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub block: usize,
    pub set: String,
    pub descriptor: String,
    pub prob: f64,
    pub poisson: f64,
    pub difference: f64,
    pub tv: f64,
    pub sup_h: f64,
    pub refined: f64,
    pub bound_satisfied: bool,
    pub refined_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: String,
    pub model: String,
    pub backend: Backend,
    pub passed: bool,
    /// `check[set]` for every failed check.
    pub failures: Vec<String>,
    pub independence: IndependenceReport,
    pub checks: Vec<CheckResult>,
    pub rows: Vec<ReportRow>,
}

fn sets_for(model: &Model, kappa: usize, seed: u64, only: Option<&str>) -> Result<Vec<NamedSet>> {
    let mut all = battery(kappa, seed);
    for (name, set) in &model.sets {
        all.retain(|s| s.name != *name);
        all.push(NamedSet {
            name: name.clone(),
            set: set.clone(),
        });
    }
    match only {
        None => Ok(all),
        Some(name) => all
            .into_iter()
            .find(|s| s.name == name)
            .map(|s| vec![s])
            .ok_or_else(|| Error::validation("set", format!("no set named {name:?}"))),
    }
}

/// Runs every check on `model`: conditional independence, normalization of
/// the conditional law, the Stein identity, the increment bound, the
/// measure property of `g`, the factorization under independence, and the
/// finite sum law with its refined bound.
///
/// With `only`, the set-dependent checks use that one set (from the model
/// file or the default battery).
pub fn verify_model(model: &Model, opts: &VerifyOptions, only: Option<&str>) -> Result<VerifyReport> {
    let kappa = conditional_pmf(&model.family)?.max_level();
    let sets = sets_for(model, kappa, opts.seed, only)?;
    match opts.backend {
        Backend::Rational => run_checks(&model.name, &model.family, &sets, opts),
        Backend::Float => run_checks(&model.name, &model.family.to_f64(), &sets, opts),
    }
}

fn run_checks<S: Scalar>(
    name: &str,
    fam: &BernoulliFamily<S>,
    sets: &[NamedSet],
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let tol = opts.tolerance;
    let cfg = opts.stein();
    let mut checks = Vec::new();

    let independence = fam.independence()?;
    let independent = if S::EXACT {
        independence.max_residual == 0.0
    } else {
        independence.max_residual <= tol
    };
    checks.push(CheckResult {
        status: if independent { Status::Pass } else { Status::Fail },
        ..CheckResult::measured("family_conditionally_independent", None, independence.max_residual, tol)
    });

    let pmf_w = conditional_pmf(fam)?;
    let kappa = pmf_w.max_level();
    let space = fam.sigma().space();
    let total = pmf_w
        .levels()
        .iter()
        .try_fold(crate::element::LatticeElement::zero(space), |acc, l| acc.add(l))?;
    let mean = pmf_w
        .levels()
        .iter()
        .enumerate()
        .try_fold(crate::element::LatticeElement::zero(space), |acc, (j, l)| {
            acc.add(&l.scale(&<S as Scalar>::from_usize(j)))
        })?;
    let unit = crate::element::LatticeElement::unit(space);
    let norm = total.distance(&unit)?.to_f64().max(mean.distance(fam.h())?.to_f64());
    checks.push(CheckResult::measured("normalization", None, norm, tol));

    let ff = fam.to_f64();
    let hf = ff.h();
    let gap = hf.map(|x| -(-x).exp_m1());
    let measure_sets = [
        NatSet::singleton(0),
        NatSet::singleton(1),
        NatSet::singleton(2),
        NatSet::cofinite([0, 1, 2]),
    ];
    let mut measure_residual = 0.0f64;
    for n in 1..=kappa + 1 {
        measure_residual = measure_residual.max(check_g_measure(n, hf, &measure_sets, &cfg)?.max());
    }
    checks.push(CheckResult::measured("g_measure", None, measure_residual, tol));

    let bounds_ok = !fam.is_empty();
    let mut rows = Vec::new();
    for ns in sets {
        let (a, label) = (&ns.set, Some(ns.name.as_str()));
        checks.push(CheckResult::measured(
            "stein_identity",
            label,
            stein_identity_residual(fam, a, &cfg)?,
            tol,
        ));

        let mut excess = f64::NEG_INFINITY;
        for j in 1..=kappa + 2 {
            let d = delta(j, hf, a, &cfg)?;
            for p in 0..space.len() {
                excess = excess.max(d.value(p).abs() - gap.value(p));
            }
        }
        checks.push(CheckResult::measured("delta_bound", label, excess.max(0.0), tol));

        if !independent {
            for check in ["independence_shift", "lsn_bound", "lsn_refined"] {
                checks.push(CheckResult::skipped(check, label, "family is not conditionally independent"));
            }
            continue;
        }
        let mut shift = 0.0f64;
        for i in 0..fam.len() {
            for k in 0..=1 {
                shift = shift.max(check_independence_shift(fam, i, k, a, &cfg)?);
            }
        }
        checks.push(CheckResult::measured("independence_shift", label, shift, tol));

        if !bounds_ok {
            for check in ["lsn_bound", "lsn_refined"] {
                checks.push(CheckResult::skipped(check, label, "family is empty"));
            }
            continue;
        }
        let rep = verify_lsn(fam, Some(a))?;
        push_bound_checks(&mut checks, &rep, label, tol, false);
        rows.extend(rows_of(&rep, &ns.name));
    }
    if independent && bounds_ok {
        let rep = verify_lsn(fam, None)?;
        push_bound_checks(&mut checks, &rep, None, tol, true);
        rows.extend(rows_of(&rep, "sup"));
    }
    rows.sort_by(|x, y| (x.block, &x.set).cmp(&(y.block, &y.set)));

    let failures: Vec<String> = checks
        .iter()
        .filter(|c| c.status == Status::Fail)
        .map(CheckResult::key)
        .collect();
    Ok(VerifyReport {
        schema: SCHEMA_VERSION.into(),
        model: name.into(),
        backend: if S::EXACT { Backend::Rational } else { Backend::Float },
        passed: failures.is_empty(),
        failures,
        independence,
        checks,
        rows,
    })
}

fn push_bound_checks(checks: &mut Vec<CheckResult>, rep: &DiscrepancyReport, set: Option<&str>, tol: f64, tv: bool) {
    let measure = |r: &crate::lsn::BlockDiscrepancy| if tv { r.tv } else { r.difference };
    let over_sup = rep.rows.iter().map(|r| measure(r) - r.sup_h).fold(f64::NEG_INFINITY, f64::max);
    let over_refined = rep
        .rows
        .iter()
        .map(|r| measure(r) - r.refined)
        .fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = if tv { ("tv_bound", "tv_refined") } else { ("lsn_bound", "lsn_refined") };
    checks.push(CheckResult::measured(a, set, over_sup.max(0.0), tol));
    checks.push(CheckResult::measured(b, set, over_refined.max(0.0), tol));
}

fn rows_of(rep: &DiscrepancyReport, set_name: &str) -> Vec<ReportRow> {
    rep.rows
        .iter()
        .map(|r| ReportRow {
            block: r.block,
            set: set_name.into(),
            descriptor: r.set.to_string(),
            prob: r.prob,
            poisson: r.poisson,
            difference: if rep.set.is_some() { r.difference } else { r.tv },
            tv: r.tv,
            sup_h: r.sup_h,
            refined: r.refined,
            bound_satisfied: r.bound_satisfied,
            refined_satisfied: r.refined_satisfied,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// examples

/// Conditional quantities of one block, exact on the rational backend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleBlock {
    pub block: usize,
    pub labels: Vec<String>,
    /// `P[B_i | Σ]` on the block, one entry per event.
    pub conditional_probs: Vec<String>,
    /// `E[s | Σ]` on the block.
    pub h: String,
    /// `sup_i P[B_i | Σ]` on the block.
    pub sup_h: String,
    pub tv: f64,
    pub refined: f64,
}

/// `P(B_i ∩ B_j)` against `P(B_i) P(B_j)` without conditioning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairIndependence {
    pub left: String,
    pub right: String,
    pub joint: String,
    pub product: String,
    pub independent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleReport {
    pub schema: String,
    pub example: String,
    pub events: Vec<String>,
    pub blocks: Vec<ExampleBlock>,
    pub unconditional: Vec<PairIndependence>,
    pub verify: VerifyReport,
}

/// Builds example `n` (`k_pairs` pairs for the third) and reports its exact
/// conditional structure together with the verification battery.
pub fn example_report(n: usize, k_pairs: usize, opts: &VerifyOptions) -> Result<ExampleReport> {
    let ex = example(n, k_pairs)?;
    let fam = &ex.family;
    let t = fam.sigma();
    let bounds = lsn_bounds(fam)?;
    let tvs = tv_by_block(fam)?;
    let refined = t.to_f64().block_values(&bounds.refined);
    let hs: Vec<Vec<Rational>> = fam.intensities().iter().map(|h| t.block_values(h)).collect();
    let hv = t.block_values(fam.h());
    let sup = t.block_values(&bounds.sup_h);
    let blocks = (0..t.num_blocks())
        .map(|b| ExampleBlock {
            block: b,
            labels: t.block_labels(b).into_iter().map(String::from).collect(),
            conditional_probs: hs.iter().map(|h| h[b].render()).collect(),
            h: hv[b].render(),
            sup_h: sup[b].render(),
            tv: tvs[b].tv,
            refined: refined[b],
        })
        .collect();

    let whole = CondExp::trivial(t.space());
    let mass = |e: &crate::element::LatticeElement<Rational>| -> Result<Rational> {
        Ok(whole.apply(e)?.value(0).clone() * t.space().total_mass().clone())
    };
    let total = t.space().total_mass().clone();
    let qs = fam.components();
    let mut unconditional = Vec::new();
    for i in 0..qs.len() {
        for j in i + 1..qs.len() {
            let joint = mass(&qs[i].mul(&qs[j])?)?;
            // normalize by the total so a truncated space behaves as a probability
            let product = mass(&qs[i])? * mass(&qs[j])? / total.clone();
            unconditional.push(PairIndependence {
                left: ex.event_names[i].clone(),
                right: ex.event_names[j].clone(),
                independent: joint == product,
                joint: joint.render(),
                product: product.render(),
            });
        }
    }
    let model = Model::new(ex.name.clone(), fam.clone());
    Ok(ExampleReport {
        schema: SCHEMA_VERSION.into(),
        example: ex.name,
        events: ex.event_names,
        blocks,
        unconditional,
        verify: verify_model(&model, opts, None)?,
    })
}

// ---------------------------------------------------------------------------
// sweeps

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: String,
    pub block: usize,
    pub tv: f64,
    pub sup_h: f64,
    pub refined: f64,
    /// `tv / sup_h`, or 0 when `sup_h = 0`.
    pub ratio: f64,
}

/// Parses a comma separated list of rationals such as `1,1/2,0.25`.
pub fn parse_lambdas(text: &str) -> Result<Vec<Rational>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_rational)
        .collect()
}

/// For each `λ`, replaces the family by independent components with
/// `P[q_i | Σ] = λ h_i` on every block (same block masses) and reports the
/// total variation distance against both bounds.
pub fn sweep(fam: &BernoulliFamily<Rational>, lambdas: &[Rational]) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() {
        return Err(Error::GridEmpty);
    }
    let t = fam.sigma();
    let masses: Vec<Rational> = (0..t.num_blocks()).map(|b| t.block_mass(b).clone()).collect();
    let hs: Vec<Vec<Rational>> = fam.intensities().iter().map(|h| t.block_values(h)).collect();
    let mut rows = Vec::new();
    for lambda in lambdas {
        if *lambda <= Rational::zero() {
            return Err(Error::BadProbability(format!("lambda = {lambda} must be positive")));
        }
        let probs: Vec<Vec<Rational>> = hs
            .iter()
            .map(|row| row.iter().map(|p| p * lambda).collect())
            .collect();
        if let Some(p) = probs.iter().flatten().find(|p| **p > Rational::one()) {
            return Err(Error::BadProbability(format!("lambda = {lambda} scales an intensity to {p}")));
        }
        let model = build_product_model(&masses, &probs)?;
        let scaled = &model.family;
        let tvs = tv_by_block(scaled)?;
        let st = scaled.sigma();
        let (sup, refined) = match lsn_bounds(scaled) {
            Ok(b) => (st.block_values(&b.sup_h), st.to_f64().block_values(&b.refined)),
            Err(Error::EmptyFamily) => (vec![Rational::zero(); st.num_blocks()], vec![0.0; st.num_blocks()]),
            Err(e) => return Err(e),
        };
        for b in 0..st.num_blocks() {
            let s = sup[b].to_f64();
            rows.push(SweepRow {
                lambda: lambda.render(),
                block: b,
                tv: tvs[b].tv,
                sup_h: s,
                refined: refined[b],
                ratio: if s > 0.0 { tvs[b].tv / s } else { 0.0 },
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// rendering

/// RFC 4180 CSV with the given header; the header is written even when
/// there are no rows.
pub fn to_csv<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports always serialize")
}

fn flag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

pub fn verify_table(r: &VerifyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model: {}  backend: {:?}", r.model, r.backend);
    let _ = writeln!(
        s,
        "{:>5}  {:<16} {:<18} {:>10} {:>10} {:>10} {:>10} {:>8} {:>10}  bound",
        "block", "set", "A", "P_T[w∈A]", "Po(A;H)", "|diff|", "tv", "sup_h", "refined"
    );
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{:>5}  {:<16} {:<18} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>8.4} {:>10.6}  {}/{}",
            row.block,
            row.set,
            truncate(&row.descriptor, 18),
            row.prob,
            row.poisson,
            row.difference,
            row.tv,
            row.sup_h,
            row.refined,
            flag(row.bound_satisfied),
            flag(row.refined_satisfied),
        );
    }
    let counts = |st: Status| r.checks.iter().filter(|c| c.status == st).count();
    let _ = writeln!(
        s,
        "checks: {} passed, {} failed, {} skipped",
        counts(Status::Pass),
        counts(Status::Fail),
        counts(Status::Skipped)
    );
    for f in &r.failures {
        let _ = writeln!(s, "FAILED {f}");
    }
    s
}

fn truncate(text: &str, width: usize) -> String {
    if text.chars().count() <= width {
        text.to_string()
    } else {
        let head: String = text.chars().take(width - 1).collect();
        format!("{head}…")
    }
}

pub fn example_table(r: &ExampleReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", r.example);
    let _ = writeln!(s, "{:>5}  {:<12} {:>10} {:>8} {:>10} {:>10}  P[B_i|Σ]", "block", "points", "E[s|Σ]", "sup_h", "tv", "refined");
    for b in &r.blocks {
        let _ = writeln!(
            s,
            "{:>5}  {:<12} {:>10} {:>8} {:>10.6} {:>10.6}  {}",
            b.block,
            b.labels.join(","),
            b.h,
            b.sup_h,
            b.tv,
            b.refined,
            b.conditional_probs.join(" ")
        );
    }
    for p in r.unconditional.iter().filter(|p| !p.independent) {
        let _ = writeln!(
            s,
            "unconditionally dependent: P({}∩{}) = {} but P({})P({}) = {}",
            p.left, p.right, p.joint, p.left, p.right, p.product
        );
    }
    s.push('\n');
    s.push_str(&verify_table(&r.verify));
    s
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>8} {:>5} {:>10} {:>8} {:>10} {:>8}", "lambda", "block", "tv", "sup_h", "refined", "ratio");
    for r in rows {
        let _ = writeln!(
            s,
            "{:>8} {:>5} {:>10.6} {:>8.4} {:>10.6} {:>8.4}",
            r.lambda, r.block, r.tv, r.sup_h, r.refined, r.ratio
        );
    }
    s
}

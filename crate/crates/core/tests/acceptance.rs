//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr (bypassing the test harness capture) before asserting.

use std::io::Write;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riesz_stein::condexp::CondExp;
use riesz_stein::convergence::truncated_lsn;
use riesz_stein::element::LatticeElement;
use riesz_stein::examples::{example1, example2, example3, example3_event_count, example3_prefix};
use riesz_stein::lsn::{
    check_component_locality, check_independence_shift, conditional_prob, lsn_bounds, stein_identity_residual,
    tv_by_block, verify_lsn, BernoulliFamily,
};
use riesz_stein::natset::NatSet;
use riesz_stein::poisson::measure;
use riesz_stein::product::{build_product_model, ProductModel};
use riesz_stein::report::{battery, sweep};
use riesz_stein::scalar::{ratio, Rational, Scalar};
use riesz_stein::space::SampleSpace;
use riesz_stein::stein::{
    check_g_measure, delta, g_closed_form_value, g_recurrence_value, g_singleton_additive_value, stein_hg_singleton,
    SteinConfig,
};

const SEED: u64 = 20_240_117;
const MODELS: usize = 200;

fn announce(name: &str, failures: &[String], detail: &str, elapsed: Duration) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut line = format!("[acceptance] {status} {name}: {detail} ({:.2}s)", elapsed.as_secs_f64());
    for f in failures.iter().take(5) {
        line.push_str(&format!("\n[acceptance]      {f}"));
    }
    line.push('\n');
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn finish(name: &str, failures: Vec<String>, detail: String, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    let mut failures = failures;
    if elapsed > budget {
        failures.push(format!("took {:.2}s, budget {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()));
    }
    announce(name, &failures, &detail, elapsed);
    assert!(failures.is_empty(), "{name}: {failures:?}");
}

fn block_vals(fam: &BernoulliFamily<Rational>, e: &LatticeElement<Rational>) -> Vec<Rational> {
    fam.sigma().block_values(e)
}

fn fr(list: &[(i64, i64)]) -> Vec<Rational> {
    list.iter().map(|&(p, q)| ratio(p, q)).collect()
}

fn expect_eq(failures: &mut Vec<String>, what: &str, got: Vec<Rational>, want: Vec<Rational>) {
    if got != want {
        let show = |v: &[Rational]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        failures.push(format!("{what}: got [{}], want [{}]", show(&got), show(&want)));
    }
}

/// A product model with 1..=6 components over 1..=4 blocks; probabilities
/// are rationals with small denominators and include the endpoints.
fn random_model(rng: &mut ChaCha8Rng) -> ProductModel {
    let n = rng.gen_range(1..=6);
    let nb = rng.gen_range(1..=4);
    let weights: Vec<i64> = (0..nb).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = weights.iter().sum();
    let masses: Vec<Rational> = weights.iter().map(|&w| ratio(w, total)).collect();
    let probs = (0..n)
        .map(|_| {
            (0..nb)
                .map(|_| match rng.gen_range(0..10) {
                    0 => ratio(0, 1),
                    1 => ratio(1, 1),
                    _ => {
                        let d = rng.gen_range(2..=12);
                        ratio(rng.gen_range(0..=d), d)
                    }
                })
                .collect()
        })
        .collect::<Vec<Vec<Rational>>>();
    build_product_model(&masses, &probs).expect("random product model")
}

fn seeded_models() -> Vec<ProductModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..MODELS).map(|_| random_model(&mut rng)).collect()
}

fn kappa(fam: &BernoulliFamily<Rational>) -> usize {
    fam.w().values().iter().map(|v| v.to_f64() as usize).max().unwrap_or(0)
}

#[test]
fn example_one_exact() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let fam = example1().family;
    let b = lsn_bounds(&fam).unwrap();
    expect_eq(&mut failures, "P[B1|Σ]", block_vals(&fam, &fam.intensities()[0]), fr(&[(1, 4), (1, 4)]));
    expect_eq(&mut failures, "P[B2|Σ]", block_vals(&fam, &fam.intensities()[1]), fr(&[(0, 1), (1, 1)]));
    expect_eq(&mut failures, "E[s|Σ]", block_vals(&fam, fam.h()), fr(&[(1, 4), (5, 4)]));
    expect_eq(&mut failures, "bound", block_vals(&fam, &b.sup_h), fr(&[(1, 4), (1, 1)]));
    let rep = verify_lsn(&fam, None).unwrap();
    if !rep.bound_satisfied || !rep.independence.is_independent {
        failures.push("finite sum law not satisfied".into());
    }
    finish(
        "example_one_exact",
        failures,
        "P[B1|Σ]=1/4,1/4  P[B2|Σ]=0,1  E[s|Σ]=1/4,5/4  bounds 1/4,1".into(),
        start,
        Duration::from_secs(1),
    );
}

#[test]
fn example_two_exact() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let fam = example2().family;
    let ind = fam.independence().unwrap();
    if !(ind.is_independent && ind.exact && ind.max_residual == 0.0) {
        failures.push(format!("conditional independence residual {}", ind.max_residual));
    }
    let whole = CondExp::trivial(fam.sigma().space());
    let prob = |e: &LatticeElement<Rational>| whole.apply(e).unwrap().value(0).clone();
    let (b1, b2) = (&fam.components()[0], &fam.components()[1]);
    let joint = prob(&b1.mul(b2).unwrap());
    let product = prob(b1) * prob(b2);
    expect_eq(&mut failures, "P(B1), P(B2)", vec![prob(b1), prob(b2)], fr(&[(1, 2), (1, 2)]));
    expect_eq(&mut failures, "P(B1∩B2), P(B1)P(B2)", vec![joint, product], fr(&[(3, 8), (1, 4)]));
    expect_eq(&mut failures, "E[s|Σ]", block_vals(&fam, fam.h()), fr(&[(1, 4), (7, 4)]));
    let b = lsn_bounds(&fam).unwrap();
    expect_eq(&mut failures, "bound", block_vals(&fam, &b.sup_h), fr(&[(1, 4), (1, 1)]));
    finish(
        "example_two_exact",
        failures,
        "conditional residual 0, P(B1∩B2)=3/8 vs 1/4, E[s|Σ]=1/4,7/4, bounds 1/4,1".into(),
        start,
        Duration::from_secs(1),
    );
}

#[test]
fn example_three_truncations() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sets_checked = 0;
    for kp in 2..=8usize {
        let ex = example3(kp).unwrap();
        let fam = &ex.family;
        let t = fam.sigma();
        let sp = t.space();
        let two = Rational::from_integer(2.into());

        // block averages against the pair formula
        let f = LatticeElement::from_fn(sp, |_| ratio(rng.gen_range(-20..=20), rng.gen_range(1..=7)));
        let tf = t.block_averages(&f).unwrap();
        for k in 1..=kp {
            let (odd, even) = (f.value(2 * k - 2).clone(), f.value(2 * k - 1).clone());
            let c = two.pow(k as i32 + 1);
            let want = (ratio(3, 1) * even + c.clone() * odd) / (ratio(3, 1) + c);
            if tf[k - 1] != want {
                failures.push(format!("K={kp}: T f on pair {k} is {} not {want}", tf[k - 1]));
            }
        }

        let hv = t.block_values(fam.h());
        let sup = t.block_values(&lsn_bounds(fam).unwrap().sup_h);
        for k in 1.. {
            // pair {4k−1, 4k} is block 2k−1 (0-based), pair {4k−3, 4k−2} is block 2k−2
            if 2 * k - 2 < kp {
                let b = 2 * k - 2;
                let want = Rational::from_integer((k as i64).into());
                if hv[b] != want || sup[b] != Rational::one() {
                    failures.push(format!("K={kp}: block {b} has H={} sup={}", hv[b], sup[b]));
                }
            }
            if 2 * k > kp {
                break;
            }
            let b = 2 * k - 1;
            let want = ratio(3, 1) / (ratio(3, 1) + two.pow(2 * k as i32 + 1));
            let p_even = t.block_values(&fam.intensities()[2 * k - 1])[b].clone();
            if p_even != want || hv[b] != want || sup[b] != want {
                failures.push(format!("K={kp}: block {b} E[p_2k|Σ]={p_even} H={} sup={}, want {want}", hv[b], sup[b]));
            }
        }

        // s = 0 at 4k−1, 1 at 4k, k at 4k−3 and 4k−2
        for (p, v) in fam.w().values().iter().enumerate() {
            let n = p + 1;
            let want = match n % 4 {
                3 => 0,
                0 => 1,
                _ => n.div_ceil(4) as i64,
            };
            if *v != Rational::from_integer(want.into()) {
                failures.push(format!("K={kp}: s({n}) = {v}, want {want}"));
            }
        }

        let ind = fam.independence().unwrap();
        if !ind.is_independent {
            failures.push(format!("K={kp}: not conditionally independent"));
        }
        for ns in battery(kappa(fam), SEED) {
            let rep = verify_lsn(fam, Some(&ns.set)).unwrap();
            sets_checked += 1;
            if !rep.bound_satisfied {
                failures.push(format!("K={kp}: bound violated for {}", ns.name));
            }
        }
        if !verify_lsn(fam, None).unwrap().bound_satisfied {
            failures.push(format!("K={kp}: total variation exceeds the bound"));
        }
    }
    finish(
        "example_three_truncations",
        failures,
        format!("K=2..8: pair averages, E[p_2k|Σ]=3/(3+2^(2k+1)), s pattern 0/1/k, {sets_checked} set checks"),
        start,
        Duration::from_secs(5),
    );
}

#[test]
fn finite_sum_law_product_models() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut blocks = 0;
    for (m, model) in seeded_models().iter().enumerate() {
        let fam = &model.family;
        let ind = fam.independence().unwrap();
        if !(ind.is_independent && ind.max_residual == 0.0) {
            failures.push(format!("model {m}: independence residual {}", ind.max_residual));
        }
        let t = fam.sigma();
        let b = lsn_bounds(fam).unwrap();
        let sup = t.block_values(&b.sup_h);
        let refined = t.to_f64().block_values(&b.refined);
        for row in tv_by_block(fam).unwrap() {
            blocks += 1;
            let s = sup[row.block].to_f64();
            let r = refined[row.block];
            if row.tv > s + 1e-9 || row.tv > r + 1e-9 {
                failures.push(format!("model {m} block {}: tv {} sup {s} refined {r}", row.block, row.tv));
            }
            if s > 0.0 {
                worst = worst.max(row.tv / s);
            }
        }
    }
    finish(
        "finite_sum_law_product_models",
        failures,
        format!("{MODELS} models, {blocks} blocks, max tv/sup_h = {worst:.4}"),
        start,
        Duration::from_secs(60),
    );
}

#[test]
fn stein_identity_battery() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let cfg = SteinConfig::default();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (m, model) in seeded_models().iter().enumerate() {
        let fam = &model.family;
        for ns in battery(kappa(fam), SEED + m as u64) {
            let r = stein_identity_residual(fam, &ns.set, &cfg).unwrap();
            cases += 1;
            worst = worst.max(r);
            if r > 1e-9 {
                failures.push(format!("model {m}, {}: residual {r:e}", ns.name));
            }
        }
    }
    finish(
        "stein_identity_battery",
        failures,
        format!("{cases} model/set pairs, max residual {worst:.2e}"),
        start,
        Duration::from_secs(120),
    );
}

fn random_natset(rng: &mut ChaCha8Rng, top: usize) -> NatSet {
    let base: Vec<usize> = (0..=top).filter(|_| rng.gen_bool(0.3)).collect();
    NatSet::from_parts(base, rng.gen_bool(0.5))
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[test]
fn evaluator_cross_validation() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst_sa, mut worst_cf) = (0.0f64, 0.0f64);
    let (mut n_sa, mut n_cf) = (0, 0);
    for _ in 0..1500 {
        let j = rng.gen_range(1..=20);
        let h = 10f64.powf(rng.gen_range(-3.0..=1.0));
        let a = random_natset(&mut rng, 25);
        let r = g_recurrence_value(j, h, &a);
        let s = g_singleton_additive_value(j, h, &a);
        let e = rel(r, s);
        n_sa += 1;
        worst_sa = worst_sa.max(e);
        if e > 1e-9 {
            failures.push(format!("recurrence vs singleton: j={j} h={h} A={a} {r:e} {s:e}"));
        }
        if j <= 12 && h >= 0.5 {
            let c = g_closed_form_value(j, h, &a);
            let e = rel(r, c);
            n_cf += 1;
            worst_cf = worst_cf.max(e);
            if e > 1e-6 {
                failures.push(format!("recurrence vs closed form: j={j} h={h} A={a} {r:e} {c:e}"));
            }
        }
    }
    finish(
        "evaluator_cross_validation",
        failures,
        format!("{n_sa} singleton comparisons (max rel {worst_sa:.1e}), {n_cf} closed-form comparisons (max rel {worst_cf:.1e})"),
        start,
        Duration::from_secs(120),
    );
}

/// A block-constant `H` with values in `(0, 5]` on a random partition.
fn random_h(rng: &mut ChaCha8Rng) -> (CondExp<f64>, LatticeElement<f64>) {
    let n = rng.gen_range(2..=6);
    let sp = SampleSpace::new((0..n).map(|i| format!("p{i}")).collect(), vec![1.0 / n as f64; n]).unwrap();
    let nb = rng.gen_range(1..=n);
    let blocks: Vec<Vec<usize>> = (0..nb).map(|b| (0..n).filter(|p| p % nb == b).collect()).collect();
    let t = CondExp::new(&sp, blocks).unwrap();
    let values: Vec<f64> = (0..nb).map(|_| rng.gen_range(0.01..=5.0)).collect();
    let h = t.from_block_values(&values);
    (t, h)
}

#[test]
fn structural_identities() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cfg = SteinConfig::default();
    const CASES: usize = 100;
    let note = |failures: &mut Vec<String>, ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };

    // measure property of A ↦ g(n, H, A)
    for c in 0..CASES {
        let (_, h) = random_h(&mut rng);
        let n = rng.gen_range(1..=15);
        let k = rng.gen_range(0..=8);
        let sets = [NatSet::singleton(k), NatSet::finite([k + 1, k + 3]), NatSet::finite([k + 2])];
        let r = check_g_measure(n, &h, &sets, &cfg).unwrap();
        note(&mut failures, r.max() <= 1e-9, format!("measure case {c}: {r:?}"));
    }

    // signs and monotonicity of H g(j, H, {i})
    for c in 0..CASES {
        let (_, h) = random_h(&mut rng);
        let i = rng.gen_range(0..=10);
        let hg: Vec<LatticeElement<f64>> = (1..=i + 10).map(|j| stein_hg_singleton(j, i, &h, &cfg).unwrap()).collect();
        for p in 0..h.len() {
            for j in 1..=i + 10 {
                let v = *hg[j - 1].value(p);
                let tol = 1e-12 * v.abs().max(1e-300);
                if j <= i {
                    note(&mut failures, v <= 0.0, format!("case {c}: Hg({j},{i}) = {v} > 0"));
                }
                if j > i {
                    note(&mut failures, v >= 0.0, format!("case {c}: Hg({j},{i}) = {v} < 0"));
                }
                if j >= 2 && j != i + 1 {
                    let prev = *hg[j - 2].value(p);
                    note(&mut failures, v <= prev + tol, format!("case {c}: Hg not decreasing at j={j}, i={i}"));
                }
            }
            // H g(j, H, {j−1}) = u − Po(N(j−1); H)
            let j = i + 1;
            let want = 1.0 - measure(&NatSet::up_to(j - 1), *h.value(p));
            let got = *hg[j - 1].value(p);
            note(&mut failures, (got - want).abs() <= 1e-9, format!("case {c}: Hg({j},{i}) = {got}, want {want}"));
        }
    }

    // |Δ(j, H, A)| ≤ u − e^{−H}
    for c in 0..CASES {
        let (_, h) = random_h(&mut rng);
        let j = rng.gen_range(1..=20);
        let a = random_natset(&mut rng, 25);
        let d = delta(j, &h, &a, &cfg).unwrap();
        for p in 0..h.len() {
            let bound = -(-h.value(p)).exp_m1();
            note(&mut failures, d.value(p).abs() <= bound + 1e-12, format!("case {c}: |Δ({j},{a})| > u − e^(−H)"));
        }
    }

    // band domination and the averaging property, exactly
    for c in 0..CASES {
        let model = random_model(&mut rng);
        let t = &model.sigma;
        let sp = &model.space;
        let f = LatticeElement::from_fn(sp, |_| {
            if rng.gen_bool(0.4) {
                Rational::zero()
            } else {
                ratio(rng.gen_range(1..=9), rng.gen_range(1..=5))
            }
        });
        note(&mut failures, t.check_band_domination(&f).unwrap(), format!("case {c}: P_f u ≰ P_Tf u"));
        let g = LatticeElement::from_fn(sp, |_| ratio(rng.gen_range(-9..=9), rng.gen_range(1..=5)));
        let tg = t.apply(&g).unwrap();
        let r = t.check_averaging(&tg, &f).unwrap();
        note(&mut failures, r.is_zero(), format!("case {c}: averaging residual {r}"));
    }

    // locality of g and the factorization under independence
    for (c, model) in seeded_models().iter().take(CASES).enumerate() {
        let fam = &model.family;
        let a = random_natset(&mut rng, kappa(fam) + 2);
        let q = LatticeElement::indicator(&model.space, &(0..model.space.len()).filter(|_| rng.gen_bool(0.5)).collect::<Vec<_>>());
        let loc = check_component_locality(fam, &q, &a, &cfg).unwrap();
        note(&mut failures, loc <= 1e-9, format!("case {c}: locality residual {loc:e}"));
        let i = rng.gen_range(0..fam.len());
        let k = rng.gen_range(0..=2);
        let s = check_independence_shift(fam, i, k, &a, &cfg).unwrap();
        note(&mut failures, s <= 1e-9, format!("case {c}: factorization residual {s:e} (i={i}, k={k}, A={a})"));
    }

    finish(
        "structural_identities",
        failures,
        format!("{CASES} cases each: measure, singleton signs/monotonicity, increment bound, band domination, averaging, locality, factorization"),
        start,
        Duration::from_secs(120),
    );
}

#[test]
fn classical_trivial_partition() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let lambdas: Vec<Rational> = [1, 2, 4, 8, 16].iter().map(|&d| ratio(1, d)).collect();
    let mut rows = 0;
    for m in 0..50 {
        let n = rng.gen_range(1..=6);
        let probs: Vec<Vec<Rational>> = (0..n).map(|_| vec![ratio(rng.gen_range(0..=10), 10)]).collect();
        let model = build_product_model(&[Rational::one()], &probs).unwrap();
        let fam = &model.family;
        let max_p = probs.iter().map(|p| p[0].clone()).fold(Rational::zero(), |a, b| if b > a { b } else { a });
        let sup = lsn_bounds(fam).unwrap().sup_h;
        if sup.values().iter().any(|v| *v != max_p) {
            failures.push(format!("model {m}: bound {} is not max p = {max_p}", sup.value(0)));
        }
        for row in sweep(fam, &lambdas).unwrap() {
            rows += 1;
            if row.tv > row.sup_h + 1e-9 || row.tv > row.refined + 1e-9 {
                failures.push(format!("model {m} λ={}: tv {} > bound {}", row.lambda, row.tv, row.sup_h));
            }
        }
    }
    finish(
        "classical_trivial_partition",
        failures,
        format!("50 one-block models: bound = max p_i exactly; {rows} sweep rows within bounds"),
        start,
        Duration::from_secs(30),
    );
}

#[test]
fn example_three_convergence() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut prev_probs: Vec<(NatSet, std::collections::HashMap<String, f64>)> = Vec::new();
    let mut cross: Vec<Vec<f64>> = Vec::new();
    for kp in 2..=8usize {
        let events = example3_event_count(kp);
        let full = example3(kp).unwrap().family;
        let sets = battery(kappa(&full), SEED);
        let mut probs_here = Vec::new();
        let mut diffs_here = Vec::new();
        for ns in &sets {
            let rep = truncated_lsn(|n| example3_prefix(kp, n), &ns.set, events + 2, 1e-6).unwrap();
            runs += 1;
            if !rep.converged || rep.converged_at.is_none_or(|n| n > events) {
                failures.push(format!("K={kp} {}: converged_at {:?} with {events} events", ns.name, rep.converged_at));
            }
            if !rep.bound_holds {
                failures.push(format!("K={kp} {}: bound fails at some truncation", ns.name));
            }
            // once stabilized, differences stay below the threshold and do not grow
            let from = rep.converged_at.unwrap_or(1);
            let tail: Vec<f64> = rep.levels[from..].iter().filter_map(|l| l.difference).collect();
            if tail.windows(2).any(|w| w[1] > w[0]) || tail.iter().any(|&d| d >= 1e-6) {
                failures.push(format!("K={kp} {}: differences after stabilization {tail:?}", ns.name));
            }

            let p = conditional_prob(&full, &ns.set).unwrap();
            let labels = full.sigma().space().labels();
            let map: std::collections::HashMap<String, f64> =
                labels.iter().enumerate().map(|(i, l)| (l.clone(), p.value(i).to_f64())).collect();
            if let Some((_, old)) = prev_probs.iter().find(|(s, _)| *s == ns.set) {
                let d = map
                    .iter()
                    .filter_map(|(l, v)| old.get(l).map(|o| (v - o).abs()))
                    .fold(0.0, f64::max);
                diffs_here.push(d);
            }
            probs_here.push((ns.set.clone(), map));
        }
        prev_probs = probs_here;
        cross.push(diffs_here);
    }
    // across K, the retained blocks never change
    let worst_cross = cross.iter().flatten().copied().fold(0.0, f64::max);
    if worst_cross >= 1e-6 {
        failures.push(format!("P_T[s_K ∈ A] moved by {worst_cross:e} on retained points"));
    }
    finish(
        "example_three_convergence",
        failures,
        format!("K=2..8, {runs} truncation runs; cross-K change on retained points {worst_cross:.1e}"),
        start,
        Duration::from_secs(60),
    );
}

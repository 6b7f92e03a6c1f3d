//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use multibranch::critpoints::{
    brute_force_oracle, canonicalize, dedup_pairs, find_critical_points, gamma_family_for, morse_partition,
    pair_set_distance, predict_branches, Completeness, CriticalPoint, GammaFamily, SearchConfig,
};
use multibranch::pdeverify::{build_laplacian, continuation_run, VerificationReport, VerifyConfig};
use multibranch::reduced::{BasisSampler, QuadratureSpec, QuarticTensor, ReducedFunctional};
use multibranch::report::{run_prediction, PredictionOutcome};
use multibranch::spectrum::{locate_group, parse_rational, DomainSpec, GroupTarget};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>, failures: &mut Vec<String>) -> bool {
    if !ok {
        failures.push(detail.into());
    }
    ok
}

fn finish(failures: Vec<String>, summary: String) -> Outcome {
    if failures.is_empty() {
        Outcome { ok: true, detail: summary }
    } else {
        Outcome {
            ok: false,
            detail: format!("{summary}; failed: {}", failures.join("; ")),
        }
    }
}

fn predict(domain: &DomainSpec, target: GroupTarget) -> PredictionOutcome {
    run_prediction(domain, &target, 3.0, &SearchConfig::default()).unwrap()
}

fn verify(domain: &DomainSpec, target: GroupTarget, n: usize, out: &PredictionOutcome, cfg: &VerifyConfig) -> VerificationReport {
    let group = locate_group(domain, &target).unwrap().group;
    let dp = build_laplacian(domain, &group, &vec![n; domain.dimension()]).unwrap();
    continuation_run(&dp, &out.prediction, cfg).unwrap()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn criterion_1(square_runs: &mut Vec<VerificationReport>) -> Outcome {
    let mut f = Vec::new();
    let t = Instant::now();
    let d = DomainSpec::square_pi();
    let out = predict(&d, GroupTarget::Index(1));
    let pr = &out.prediction;
    check(pr.pair_count == 1, format!("pairs {}", pr.pair_count), &mut f);
    check(pr.solution_morse_indices() == vec![1], format!("morse {:?}", pr.solution_morse_indices()), &mut f);
    let a0 = (9.0 / (4.0 * PI * PI)).powf(-0.5);
    let rep = verify(&d, GroupTarget::Index(1), 64, &out, &VerifyConfig::for_gap(out.gap));
    let elapsed = t.elapsed();
    let b = &rep.branches[0];
    let last = b.records.last().map(|r| (r.epsilon, r.a_lambda[0]));
    let a_err = last.map(|(_, a)| (a.abs() - a0).abs());
    check(last.map(|l| l.0) == Some(0.0125), "smallest ε is not 0.0125", &mut f);
    check(a_err.is_some_and(|e| e <= 0.1 * a0), format!("|a - a0| = {a_err:?}"), &mut f);
    check(b.phi_order.is_some_and(|o| o >= 0.9), format!("phi order {:?}", b.phi_order), &mut f);
    check(rep.passed, "verdict failed", &mut f);
    check(elapsed < Duration::from_secs(10), format!("runtime {elapsed:?}"), &mut f);
    let summary = format!(
        "square λ1: 1 pair, index 1; |a-a0|/a0 = {:.2e} at ε = 0.0125 on 64², phi order {:.3}, {:.2?}",
        a_err.unwrap_or(f64::NAN) / a0,
        b.phi_order.unwrap_or(f64::NAN),
        elapsed
    );
    square_runs.push(rep);
    finish(f, summary)
}

fn criterion_2() -> Outcome {
    let mut f = Vec::new();
    let d = DomainSpec::square_pi();
    let g = locate_group(&d, &GroupTarget::Index(2)).unwrap().group;
    let func = ReducedFunctional::for_group(&g, &d, 3.0).unwrap();
    let cfg = SearchConfig::default();
    let search = find_critical_points(&func, &cfg).points;
    let oracle = brute_force_oracle(&func, &cfg).unwrap();
    let fam = gamma_family_for(&func.quartic_tensor(), 1e-12).unwrap();
    let gamma = dedup_pairs(fam.solutions(cfg.degeneracy_rel), cfg.dedup_radius);
    check(search.len() == 4, format!("pairs {}", search.len()), &mut f);
    check(sorted(search.iter().map(|p| p.morse_index).collect()) == vec![1, 1, 2, 2], "critical-point indices", &mut f);
    let pred = predict_branches(&g, 3.0, &search, Completeness::OracleCertified, cfg.dedup_radius);
    check(sorted(pred.solution_morse_indices()) == vec![2, 2, 3, 3], "solution indices", &mut f);
    let d_or = pair_set_distance(&search, &oracle);
    let d_ga = pair_set_distance(&search, &gamma);
    check(d_or <= 1e-6 && d_ga <= 1e-6, format!("set distances {d_or:e}, {d_ga:e}"), &mut f);
    let g1 = fam.gammas[0];
    let g2 = fam.gammas[1];
    let at = |a: [f64; 2]| CriticalPoint::classify(&func, &DVector::from_column_slice(&a), 1e-8).hess_eigs;
    let h1 = at([g1, 0.0]);
    let h2 = at([g2, g2]);
    check(close(&h1, &[-2.0, -1.0 / 3.0], 1e-8), format!("hess at (γ1,0) {h1:?}"), &mut f);
    check(close(&h2, &[-2.0, 2.0 / 7.0], 1e-8), format!("hess at (γ2,γ2) {h2:?}"), &mut f);
    check((fam.alpha / fam.beta - 2.25).abs() < 1e-12, "α/β", &mut f);
    finish(
        f,
        format!("square λ=5: 4 pairs, m {{2,2,1,1}}, m+j-1 {{3,3,2,2}}, oracle {d_or:.1e}, γ-family {d_ga:.1e}, Hessians exact"),
    )
}

fn criterion_3() -> Outcome {
    let mut f = Vec::new();
    let d = DomainSpec::parse(&["pi^2", "3*pi^2"]).unwrap();
    let target = GroupTarget::Exact(parse_rational("28/3").unwrap());
    let out = predict(&d, target.clone());
    let g = locate_group(&d, &target).unwrap().group;
    check(g.multiplicity == 3, format!("k = {}", g.multiplicity), &mut f);
    let func = ReducedFunctional::for_group(&g, &d, 3.0).unwrap();
    let cfg = SearchConfig::default();
    let search = find_critical_points(&func, &cfg).points;
    let part = morse_partition(&search, 3);
    check(search.len() == 13, format!("pairs {}", search.len()), &mut f);
    check(part == vec![0, 4, 6, 3], format!("partition {part:?}"), &mut f);
    // A1..A3 have one nonzero coordinate (index 3), A4..A9 two (index 2), A10..A13 three (index 1)
    let by_support = search.iter().all(|p| {
        let s = p.a.iter().filter(|x| x.abs() > 1e-9).count();
        p.morse_index == 4 - s
    });
    check(by_support, "support/index table", &mut f);
    let fam = gamma_family_for(&func.quartic_tensor(), 1e-12).unwrap();
    let gamma = dedup_pairs(fam.solutions(cfg.degeneracy_rel), cfg.dedup_radius);
    let d_ga = pair_set_distance(&search, &gamma);
    let d_or = out.oracle_distance.unwrap_or(f64::INFINITY);
    check(d_ga <= 1e-6, format!("γ-family distance {d_ga:e}"), &mut f);
    check(d_or <= 1e-6, format!("oracle distance {d_or:e}"), &mut f);
    check(out.prediction.pair_count == 13, "prediction count", &mut f);
    finish(
        f,
        format!(
            "rectangle L²=π², M²=3π², λ=28/3 (j={}, modes {:?}): 13 pairs, 3/6/4, oracle {d_or:.1e}",
            g.index_j,
            g.modes.iter().map(|m| m.indices.clone()).collect::<Vec<_>>()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut f = Vec::new();
    let t = Instant::now();
    let d = DomainSpec::cube_pi();
    let g = locate_group(&d, &GroupTarget::Index(2)).unwrap().group;
    let tq = QuarticTensor::from_sampler(&BasisSampler::new(&g, &d, QuadratureSpec::default()));
    let pi3 = PI.powi(3);
    let (alpha, beta) = (tq.get(0, 0, 0, 0), tq.get(0, 0, 1, 1));
    check((alpha - 27.0 / (8.0 * pi3)).abs() <= 1e-10, format!("α = {alpha}"), &mut f);
    check((beta - 3.0 / (2.0 * pi3)).abs() <= 1e-10, format!("β = {beta}"), &mut f);
    let out = predict(&d, GroupTarget::Index(2));
    let mut part = vec![0; 4];
    for p in &out.prediction.pairs {
        part[p.morse_index] += 1;
    }
    check(out.prediction.pair_count == 13, "pairs", &mut f);
    check(part == vec![0, 4, 6, 3], format!("partition {part:?}"), &mut f);
    let mut cfg = VerifyConfig::for_gap(out.gap);
    cfg.epsilons = vec![0.05];
    cfg.compute_morse = false;
    let rep = verify(&d, GroupTarget::Index(2), 33, &out, &cfg);
    let elapsed = t.elapsed();
    check(rep.distinct_solutions == 13 && rep.all_distinct, format!("distinct {}", rep.distinct_solutions), &mut f);
    check(elapsed < Duration::from_secs(600), format!("runtime {elapsed:?}"), &mut f);
    finish(
        f,
        format!("cube λ2=6: α, β to 1e-10 by quadrature, 13 pairs 3/6/4, 13 distinct solutions on 33³ at ε=0.05, {elapsed:.2?}"),
    )
}

fn criterion_5(runs: &[VerificationReport]) -> Outcome {
    let mut f = Vec::new();
    let mut orders = Vec::new();
    for r in runs {
        for b in &r.branches {
            let ok = b.records.len() == 4 && b.phi_order.is_some_and(|o| o >= 0.9);
            check(ok, format!("j={} pair {}: order {:?}", r.j, b.pair, b.phi_order), &mut f);
            orders.push(b.phi_order.unwrap_or(f64::NAN));
        }
    }
    let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
    finish(f, format!("{} branches, min phi order {min:.3} over ε ∈ {{0.1,…,0.0125}}", orders.len()))
}

fn criterion_6(square5: &VerificationReport) -> Outcome {
    let mut f = Vec::new();
    let mut worst: f64 = 0.0;
    for b in &square5.branches {
        let e = b.transfer_rel_error.unwrap_or(f64::INFINITY);
        worst = worst.max(e);
        check(e <= 0.05, format!("pair {}: scaled μ {:?} vs Λ {:?}", b.pair, b.transfer_scaled, b.hessian_eigs), &mut f);
        check(
            close(&b.transfer_literal, &b.transfer_scaled.iter().rev().map(|x| -x).collect::<Vec<_>>(), 1e-9),
            "literal quantity is not the negated scaled one",
            &mut f,
        );
    }
    finish(f, format!("square λ=5: max rel. error of μ·λ/ε vs Hessian spectrum {worst:.2e} at ε=0.0125"))
}

fn fd_grad(f: &ReducedFunctional, a: &DVector<f64>) -> DVector<f64> {
    let h = 1e-6;
    DVector::from_fn(a.len(), |i, _| {
        let mut p = a.clone();
        let mut m = a.clone();
        p[i] += h;
        m[i] -= h;
        (f.value(&p) - f.value(&m)) / (2.0 * h)
    })
}

fn criterion_7() -> Outcome {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = DomainSpec::square_pi();
    let c = DomainSpec::cube_pi();
    let g2 = locate_group(&d, &GroupTarget::Index(2)).unwrap().group;
    let c2 = locate_group(&c, &GroupTarget::Index(2)).unwrap().group;
    let exact = ReducedFunctional::exact_quartic(&g2, &d);
    let quad3 = ReducedFunctional::quadrature(&g2, &d, 3.0, QuadratureSpec::default()).unwrap();
    let quad25 = ReducedFunctional::quadrature(&c2, &c, 2.5, QuadratureSpec::default()).unwrap();
    let cube_exact = ReducedFunctional::exact_quartic(&c2, &c);
    let cube_quad = ReducedFunctional::quadrature(&c2, &c, 3.0, QuadratureSpec::default()).unwrap();
    let (mut even, mut grad, mut hsym, mut hfd, mut backend) = (true, true, true, true, true);
    for _ in 0..100 {
        for f in [&exact, &quad3, &quad25] {
            let a = DVector::from_fn(f.k(), |_, _| rng.gen_range(-3.0..3.0));
            even &= (f.value(&a) - f.value(&-&a)).abs() <= 1e-12 * (1.0 + f.value(&a).abs());
            let gr = f.gradient(&a);
            grad &= (&gr - fd_grad(f, &a)).norm() <= 1e-6 * (1.0 + gr.norm());
            let h = f.hessian(&a);
            hsym &= (&h - h.transpose()).amax() <= 1e-12 * (1.0 + h.amax());
            let step = 1e-6;
            let fd = nalgebra::DMatrix::from_fn(f.k(), f.k(), |i, j| {
                let mut p = a.clone();
                let mut m = a.clone();
                p[j] += step;
                m[j] -= step;
                (f.gradient(&p)[i] - f.gradient(&m)[i]) / (2.0 * step)
            });
            hfd &= (&h - fd).amax() <= 1e-5 * (1.0 + h.amax());
        }
        for (e, q) in [(&exact, &quad3), (&cube_exact, &cube_quad)] {
            let a = DVector::from_fn(e.k(), |_, _| rng.gen_range(-3.0..3.0));
            backend &= (e.value(&a) - q.value(&a)).abs() <= 1e-9 * (1.0 + e.value(&a).abs());
            backend &= (e.gradient(&a) - q.gradient(&a)).amax() <= 1e-9 * (1.0 + e.gradient(&a).amax());
        }
    }
    check(even, "evenness", &mut fails);
    check(grad, "gradient vs FD", &mut fails);
    check(hsym, "Hessian symmetry", &mut fails);
    check(hfd, "Hessian vs FD", &mut fails);
    check(backend, "backend agreement", &mut fails);

    let mut count_law = true;
    for k in 1..=4 {
        for _ in 0..3 {
            let beta = rng.gen_range(0.2..1.0);
            let alpha = beta * rng.gen_range(1.0..2.9);
            let f = ReducedFunctional::from_tensor(QuarticTensor::rect_pattern(k, alpha, beta));
            let pts = find_critical_points(&f, &SearchConfig::default()).points;
            let fam = dedup_pairs(GammaFamily::new(alpha, beta, k).solutions(1e-8), 1e-6);
            count_law &= pts.len() == (3usize.pow(k as u32) - 1) / 2 && pair_set_distance(&pts, &fam) <= 1e-6;
        }
    }
    check(count_law, "count law (3^k-1)/2, k = 1..4", &mut fails);

    let pts = GammaFamily::new(9.0, 4.0, 3).solutions(1e-8);
    let base = predict_branches(&c2, 3.0, &pts, Completeness::Conjectured, 1e-6);
    let mut canon = true;
    for _ in 0..20 {
        let flipped: Vec<CriticalPoint> = pts
            .iter()
            .map(|p| if rng.gen_bool(0.5) { p.negated() } else { p.clone() })
            .collect();
        canon &= predict_branches(&c2, 3.0, &flipped, Completeness::Conjectured, 1e-6) == base;
    }
    for p in &pts {
        let neg: Vec<f64> = p.a.iter().map(|x| -x).collect();
        canon &= canonicalize(&p.a, 1e-9) == canonicalize(&neg, 1e-9);
    }
    check(canon, "sign canonicalization", &mut fails);

    let t = QuarticTensor::exact(&c2, &c);
    let k = t.k();
    let mut perm = true;
    for i in 0..k {
        for h in 0..k {
            for l in 0..k {
                for m in 0..k {
                    let v = t.get(i, h, l, m);
                    for q in [[h, i, l, m], [i, l, h, m], [i, h, m, l], [m, l, h, i], [l, m, i, h]] {
                        perm &= t.get(q[0], q[1], q[2], q[3]) == v;
                    }
                }
            }
        }
    }
    check(perm, "tensor permutation symmetry", &mut fails);
    finish(
        fails,
        "evenness, gradient/Hessian FD (1e-6/1e-5), symmetry, backends (1e-9), count law k=1..4, canonicalization, tensor symmetry".into(),
    )
}

fn criterion_8() -> Outcome {
    let mut f = Vec::new();
    let mut notes = Vec::new();
    for (sides, target) in [
        (["pi^2", "pi^2"], GroupTarget::Index(2)),
        (["pi^2", "3*pi^2"], GroupTarget::Exact(parse_rational("28/3").unwrap())),
    ] {
        let d = DomainSpec::parse(&sides).unwrap();
        let out = predict(&d, target);
        let Some(c) = out.coefficient_check else {
            check(false, format!("{d}: no coefficient check"), &mut f);
            continue;
        };
        let l = d.lengths();
        check(c.magnitude_differs, format!("{d}: discrepancy not flagged"), &mut f);
        check((c.alpha - 9.0 / (4.0 * l[0] * l[1])).abs() <= 1e-12, format!("{d}: α = {}", c.alpha), &mut f);
        check(c.ratio_agrees && (c.ratio - 2.25).abs() <= 1e-10, format!("{d}: ratio {}", c.ratio), &mut f);
        notes.push(format!("α/β = {:.12}", c.ratio));
    }
    finish(f, format!("α = 9/(4LM) flagged against 9LM/64; {}", notes.join(", ")))
}

fn main() {
    let start = Instant::now();
    let mut runs = Vec::new();
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    results.push((1, criterion_1(&mut runs)));
    results.push((2, criterion_2()));
    results.push((3, criterion_3()));
    results.push((4, criterion_4()));

    let d = DomainSpec::square_pi();
    let out5 = predict(&d, GroupTarget::Index(2));
    let square5 = verify(&d, GroupTarget::Index(2), 64, &out5, &VerifyConfig::for_gap(out5.gap));
    runs.push(square5.clone());
    results.push((5, criterion_5(&runs)));
    results.push((6, criterion_6(&square5)));
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));

    let mut failed = 0;
    for (n, o) in &results {
        println!("{} criterion {n}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1?}",
        results.len() - failed,
        results.len(),
        start.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

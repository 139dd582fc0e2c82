//! Acceptance suite: nine criteria, one pass/fail line each. Runs without the libtest
//! harness so the lines always print; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use parabolic_core::functors::{
    pullback_bundle, pullback_parabolic, pushforward_parabolic, Branch, CoverProfile,
};
use parabolic_core::harness::{
    capture, example_direct, example_pull, gen_parabolic_point, replay, run_suite, strip_timing,
    trial_instance, verify, Instance, Mutation, Suite, TrialConfig,
};
use parabolic_core::pairing::PairingKind;
use parabolic_core::parabolic::WeightMultiset;
use parabolic_core::rootstack::GradedModule;
use parabolic_core::scenario::Scenario;
use parabolic_core::{Error, Field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    ok: bool,
    note: String,
}

fn pass(note: impl Into<String>) -> Verdict {
    Verdict {
        ok: true,
        note: note.into(),
    }
}

fn fail(note: impl Into<String>) -> Verdict {
    Verdict {
        ok: false,
        note: note.into(),
    }
}

fn within(note: String, elapsed: Duration, limit: Duration) -> Verdict {
    if elapsed <= limit {
        pass(format!("{note} in {:.1}s", elapsed.as_secs_f64()))
    } else {
        fail(format!(
            "{note} but took {:.1}s (limit {}s)",
            elapsed.as_secs_f64(),
            limit.as_secs()
        ))
    }
}

fn fields() -> [Field; 2] {
    [Field::Rational, Field::prime(101).unwrap()]
}

/// Weight multiset as plain rationals, so the laws below never touch library weight code.
fn ratios(w: &WeightMultiset) -> BTreeMap<Ratio<i64>, usize> {
    w.iter().map(|(x, &m)| (x.as_ratio(), m)).collect()
}

fn frac(x: Ratio<i64>) -> Ratio<i64> {
    x - Ratio::from_integer(x.floor().to_integer())
}

fn c1_round_trip() -> Verdict {
    let start = Instant::now();
    let mut g = ChaCha8Rng::seed_from_u64(SEED);
    let mut count = 0;
    for i in 0..500 {
        let field = fields()[i % 2];
        let n = g.gen_range(1..=4);
        let r = g.gen_range(1..=8);
        let e = gen_parabolic_point(&mut g, field, n, r);
        let m = GradedModule::from_parabolic(&e);
        if m.to_parabolic() != e || GradedModule::from_parabolic(&m.to_parabolic()) != m {
            return fail(format!(
                "instance {i} (n={n}, r={r}, {field:?}) does not round trip"
            ));
        }
        count += 1;
    }
    within(
        format!("{count}/500 chains (n<=4, r<=8, both fields) round trip"),
        start.elapsed(),
        Duration::from_secs(30),
    )
}

fn suite_run(
    suite: Suite,
    field: Field,
    trials: usize,
) -> Result<(parabolic_core::harness::TrialReport, TrialConfig), Verdict> {
    let cfg = TrialConfig {
        field,
        ..TrialConfig::new(SEED, trials)
    };
    let report = run_suite(suite, &cfg).map_err(|e| fail(format!("harness error: {e}")))?;
    if !report.all_passed() {
        let first = report.results.iter().find(|r| r.verdict != "pass").unwrap();
        return Err(fail(format!(
            "{}/{} passed; trial {}: {}",
            report.passed, report.trials, first.index, first.detail
        )));
    }
    if !report.coverage.meets_floor() {
        return Err(fail(format!(
            "coverage floor missed: {:?}",
            report.coverage
        )));
    }
    Ok((report, cfg))
}

fn c2_direct() -> Verdict {
    let start = Instant::now();
    let (report, _) = match suite_run(Suite::Direct, Field::Rational, 200) {
        Ok(x) => x,
        Err(v) => return v,
    };
    let ex = verify(&Instance::Direct(example_direct(Field::Rational)), None);
    if !ex.pass || !ex.summary.contains("weights={0:1 1/4:2 1/2:1 3/4:2}") {
        return fail(format!(
            "worked s=4 example: {} / {}",
            ex.detail, ex.summary
        ));
    }
    within(
        format!(
            "{}/200 trials including naturality; s=4 example gives {{0,1/4,1/4,1/2,3/4,3/4}}",
            report.passed
        ),
        start.elapsed(),
        Duration::from_secs(120),
    )
}

fn c3_pull() -> Verdict {
    let start = Instant::now();
    let (report, _) = match suite_run(Suite::Pull, Field::Rational, 200) {
        Ok(x) => x,
        Err(v) => return v,
    };
    let ex = verify(&Instance::Pull(example_pull(Field::Rational)), None);
    if !ex.pass || !ex.summary.contains("-> {1/3:1 2/3:1}") {
        return fail(format!(
            "worked s=6 example: {} / {}",
            ex.detail, ex.summary
        ));
    }
    within(
        format!(
            "{}/200 trials including splitting independence; s=6, e=2 example gives {{1/3,2/3}}",
            report.passed
        ),
        start.elapsed(),
        Duration::from_secs(120),
    )
}

/// The laws recomputed from the instances of (2) and (3) with plain rational arithmetic.
fn c4_weight_laws() -> Verdict {
    let cfg = TrialConfig::new(SEED, 200);
    let mut checked = 0;
    for i in 0..200 {
        let Instance::Direct(d) = trial_instance(Suite::Direct, &cfg, i) else {
            unreachable!()
        };
        let pts: Vec<_> = d.branches.iter().map(GradedModule::to_parabolic).collect();
        let pushed = pushforward_parabolic(&d.profile, &pts).unwrap();
        let mut want: BTreeMap<Ratio<i64>, usize> = BTreeMap::new();
        for (b, p) in d.profile.branches().iter().zip(&pts) {
            for (alpha, m) in ratios(&p.weights()) {
                for l in 0..b.e as i64 {
                    *want.entry((alpha + l) / b.e as i64).or_default() += m;
                }
            }
        }
        if ratios(&pushed.weights()) != want {
            return fail(format!(
                "direct trial {i}: pushforward weights break the (α+l)/e law"
            ));
        }
        checked += 1;
    }
    for i in 0..200 {
        let Instance::Pull(p) = trial_instance(Suite::Pull, &cfg, i) else {
            unreachable!()
        };
        let e = p.profile.branch(&p.branch).unwrap().e as i64;
        let f = p.target.to_parabolic();
        let pulled = pullback_parabolic(&p.profile, &f, &p.branch).unwrap();
        let mut want: BTreeMap<Ratio<i64>, usize> = BTreeMap::new();
        let mut twist = 0;
        for (alpha, m) in ratios(&f.weights()) {
            let x = alpha * e;
            *want.entry(frac(x)).or_default() += m;
            twist += x.floor().to_integer() * m as i64;
        }
        if ratios(&pulled.point.weights()) != want || pulled.total_twist() != twist {
            return fail(format!(
                "pull trial {i}: weights or twist break the {{αe}}, ⌊αe⌋ law"
            ));
        }
        checked += 1;
    }
    pass(format!("{checked}/400 trials match both laws exactly"))
}

fn c5_admissibility() -> Verdict {
    let cfg = TrialConfig::new(SEED, 200);
    let mut profiles = 0;
    for suite in [Suite::Direct, Suite::Pull, Suite::Corollaries] {
        for i in 0..200 {
            let inst = trial_instance(suite, &cfg, i);
            let p = match &inst {
                Instance::Direct(d) => &d.profile,
                Instance::Pull(p) => &p.profile,
                Instance::Corollary(c) => &c.profile,
                Instance::Degree(_) => unreachable!(),
            };
            if p.branches().iter().any(|b| b.r * b.e != p.target_order()) {
                return fail(format!(
                    "{suite:?} trial {i} generated an inadmissible profile"
                ));
            }
            profiles += 1;
        }
    }
    let q = Field::Rational;
    let br = |e: u32, r: u32| Branch {
        label: "x".into(),
        e,
        r,
        u: q.one(),
    };
    let cases: Vec<(u32, Vec<Branch>)> = vec![
        (4, vec![br(3, 1)]),
        (4, vec![br(2, 1)]),
        (6, vec![br(2, 2)]),
        (6, vec![br(4, 2)]),
        (1, vec![br(2, 1)]),
        (12, vec![br(5, 2)]),
        (12, vec![br(3, 3)]),
        (9, vec![br(3, 2)]),
        (
            8,
            vec![
                br(2, 4),
                Branch {
                    label: "z".into(),
                    e: 3,
                    r: 2,
                    u: q.one(),
                },
            ],
        ),
        (10, vec![br(1, 1)]),
        (5, vec![br(1, 6)]),
        (7, vec![br(7, 7)]),
    ];
    let mut rejected = 0;
    for (s, branches) in &cases {
        match CoverProfile::new(*s, branches.clone(), true) {
            Err(Error::InadmissibleProfile { s: got, .. }) if got == *s => rejected += 1,
            other => return fail(format!("s={s} {branches:?} gave {other:?}")),
        }
    }
    pass(format!(
        "{profiles}/600 generated profiles admissible; {rejected}/{} inadmissible profiles rejected",
        cases.len()
    ))
}

fn c6_degree() -> Verdict {
    let cfg = TrialConfig::new(SEED, 50);
    let report = match run_suite(Suite::Degree, &cfg) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    if !report.all_passed() {
        return fail(format!("{}/50 scenarios passed", report.passed));
    }
    // direct evaluation: pardeg(f^*F) = deg f * pardeg(F), and Σ e_x = deg f per point
    for i in 0..50 {
        let Instance::Degree(d) = trial_instance(Suite::Degree, &cfg, i) else {
            unreachable!()
        };
        for p in d.cover.profiles.values() {
            if p.local_degree() != d.cover.degree {
                return fail(format!("scenario {i}: Σe != deg f"));
            }
        }
        let pulled = pullback_bundle(&d.bundle, &d.cover).unwrap();
        if pulled.parabolic_degree() != d.bundle.parabolic_degree() * d.cover.degree as i64 {
            return fail(format!("scenario {i}: degree not multiplied"));
        }
    }
    pass("50/50 line-bundle scenarios: pardeg(f*F) = deg f * pardeg(F)")
}

fn c7_corollaries() -> Verdict {
    let start = Instant::now();
    let (report, cfg) = match suite_run(Suite::Corollaries, Field::Rational, 200) {
        Ok(x) => x,
        Err(v) => return v,
    };
    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    for i in 0..200 {
        let Instance::Corollary(c) = trial_instance(Suite::Corollaries, &cfg, i) else {
            unreachable!()
        };
        *kinds.entry(c.kind.name()).or_default() += 1;
    }
    let sym = kinds
        .get(PairingKind::Antisymmetric.name())
        .copied()
        .unwrap_or(0);
    let orth = kinds
        .get(PairingKind::Symmetric.name())
        .copied()
        .unwrap_or(0);
    if sym < 100 || orth < 100 {
        return fail(format!(
            "only {sym} symplectic and {orth} orthogonal instances"
        ));
    }
    within(
        format!(
            "{}/200 trials ({sym} symplectic, {orth} orthogonal) under pullback and pushforward",
            report.passed
        ),
        start.elapsed(),
        Duration::from_secs(120),
    )
}

fn c8_mutations() -> Verdict {
    let mut detected = 0;
    for m in Mutation::ALL {
        let cfg = TrialConfig {
            mutation: Some(m),
            ..TrialConfig::new(SEED, 5)
        };
        for i in 0..5 {
            let inst = trial_instance(m.suite(), &cfg, i);
            let out = verify(&inst, Some(m));
            if out.pass {
                return fail(format!("{} trial {i} not detected", m.name()));
            }
            let text = capture(&inst, Some(m), &out).to_text();
            let replayed = Scenario::parse(&text).and_then(|s| replay(&s));
            match replayed {
                Ok(r) if r.reproduced => detected += 1,
                Ok(r) => return fail(format!("{} trial {i} replays as {:?}", m.name(), r.outcome)),
                Err(e) => return fail(format!("{} trial {i} replay error: {e}", m.name())),
            }
        }
    }
    pass(format!(
        "{detected}/20 corruptions detected with replayable counterexamples"
    ))
}

fn c9_determinism() -> Verdict {
    for suite in Suite::ALL {
        for field in fields() {
            let cfg = TrialConfig {
                field,
                ..TrialConfig::new(SEED + 9, 12)
            };
            let text = || {
                let mut v = serde_json::to_value(run_suite(suite, &cfg).unwrap()).unwrap();
                strip_timing(&mut v);
                serde_json::to_string_pretty(&v).unwrap()
            };
            if text() != text() {
                return fail(format!("{suite:?} over {field:?} differs between runs"));
            }
        }
    }
    let cfg = TrialConfig {
        mutation: Some(Mutation::TransposedGrading),
        ..TrialConfig::new(SEED, 3)
    };
    let report = run_suite(Suite::Direct, &cfg).unwrap();
    let Some(ce) = report.counterexample else {
        return fail("mutated run captured no counterexample");
    };
    match Scenario::parse(&ce.to_text()).and_then(|s| replay(&s)) {
        Ok(r) if r.reproduced => pass("identical configs give identical reports modulo timing; captured counterexample replays"),
        other => fail(format!("replay: {other:?}")),
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 round trip", c1_round_trip),
        ("2 direct image", c2_direct),
        ("3 pullback", c3_pull),
        ("4 weight laws", c4_weight_laws),
        ("5 admissibility", c5_admissibility),
        ("6 degree multiplicativity", c6_degree),
        ("7 pairings", c7_corollaries),
        ("8 mutation sensitivity", c8_mutations),
        ("9 determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let v = run();
        println!(
            "{} criterion {name}: {}",
            if v.ok { "PASS" } else { "FAIL" },
            v.note
        );
        failed += (!v.ok) as usize;
    }
    println!("acceptance: {}/9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

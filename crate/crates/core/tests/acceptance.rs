//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//!     cargo test -p pruned-polar --test acceptance

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use pruned_polar::codec::{encode, ScDecoder, TernarySymbol};
use pruned_polar::interval::{certify_inequality, inequality_lhs, Interval};
use pruned_polar::sim::{exact_error_enumeration, monte_carlo, sample_tau, sweep_exact};
use pruned_polar::tree::{default_depth, epsilon_for_depth, NodeId};
use pruned_polar::{CodeSpec64, ErasureRate64, Outcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// E[tau] for z0 = 0.382, eps = 2^(-n/5), n = 0..=25, as published.
const PUBLISHED_E_TAU: [f64; 26] = [
    0.0,
    0.0,
    1.5,
    2.75,
    3.375,
    4.5625,
    5.125,
    5.828125,
    6.5234375,
    6.96875,
    7.90625,
    8.3544921875,
    8.7314453125,
    9.26879882812,
    9.63500976562,
    9.91046142578,
    10.3467407227,
    10.6794891357,
    10.9180297852,
    11.3841133118,
    11.5504550934,
    11.7551832199,
    11.9149127007,
    12.0850632191,
    12.255657196,
    12.4046368599,
];

type Check<'a> = Box<dyn FnOnce() -> Verdict + 'a>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn e(z: f64) -> ErasureRate64 {
    ErasureRate64::new(z).unwrap()
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pruned-polar"))
}

fn preorder(spec: &CodeSpec64) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    let mut stack = vec![NodeId::ROOT];
    while let Some(id) = stack.pop() {
        let node = spec.tree().node(id);
        out.push((node.z().to_f64(), node.is_leaf()));
        if let Some((f, s)) = node.children() {
            stack.push(s);
            stack.push(f);
        }
    }
    out
}

fn criterion_1() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tree.json");
    let start = Instant::now();
    let status = binary()
        .args(["construct", "--z0", "0.5", "--epsilon", "0.8", "--n", "3", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    let text = std::fs::read_to_string(&path).unwrap();
    let spec = CodeSpec64::from_json(&text).unwrap();
    let expected = vec![
        (0.5, false),
        (0.75, false),
        (0.9375, true),
        (0.5625, false),
        (0.80859375, true),
        (0.31640625, true),
        (0.25, false),
        (0.4375, false),
        (0.68359375, true),
        (0.19140625, true),
        (0.0625, true),
    ];
    let golden = include_str!("data/worked_example.json");
    let ok = status.status.success()
        && preorder(&spec) == expected
        && text == golden
        && elapsed < Duration::from_secs(1);
    verdict(
        ok,
        format!("11 nodes bit-exact, matches golden file, {:.3} s", elapsed.as_secs_f64()),
    )
}

fn e_tau_mismatches(z0: f64) -> Vec<(u32, f64, f64)> {
    sweep_exact(&e(z0), 0..=25)
        .unwrap()
        .into_iter()
        .filter_map(|row| {
            let want = PUBLISHED_E_TAU[row.n as usize];
            ((row.e_tau - want).abs() > 1e-6).then_some((row.n, row.e_tau, want))
        })
        .collect()
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let literal = e_tau_mismatches(0.382);
    let elapsed = start.elapsed();
    let golden = e_tau_mismatches((3.0 - 5f64.sqrt()) / 2.0);
    let rows: Vec<String> = literal.iter().map(|(n, got, _)| format!("n={n}:{got}")).collect();
    verdict(
        literal.is_empty() && elapsed < Duration::from_secs(10),
        format!(
            "z0 = 0.382: {}/26 rows within 1e-6 [off: {}]; z0 = (3-sqrt5)/2: {}/26 within 1e-6; {:.2} s",
            26 - literal.len(),
            rows.join(" "),
            26 - golden.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3_certificate() -> Verdict {
    let start = Instant::now();
    let out = binary()
        .args(["verify", "--lo", "0.9", "--hi", "1", "--subdivisions", "100000", "--format", "json"])
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let library = certify_inequality(0.9, 1.0, 100_000).unwrap();
    let ok = out.status.code() == Some(0)
        && json["verified"] == serde_json::Value::Bool(true)
        && library.verified
        && elapsed < Duration::from_secs(5);
    verdict(
        ok,
        format!(
            "[0.9, 1] in 100000 pieces verified, max upper bound {}, {:.3} s",
            library.max_upper,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3_scalar() -> Verdict {
    let at_stated = inequality_lhs(0.999930450125367);
    let transposed = inequality_lhs(0.9864109898636828);
    verdict(
        (at_stated - 0.9864109898636828).abs() <= 1e-9,
        format!(
            "f(0.999930450125367) = {at_stated}, expected 0.9864109898636828; \
             transposed f(0.9864109898636828) = {transposed} (|diff from 0.999930450125367| = {:.1e})",
            (transposed - 0.999930450125367).abs()
        ),
    )
}

fn random_default_specs(count: usize, seed: u64) -> Vec<(f64, f64, CodeSpec64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // default n <= 22 exactly when eps >= 2^(-22/5)
    let eps_min = epsilon_for_depth(22);
    (0..count)
        .map(|_| {
            let z0 = rng.random_range(0.0..=1.0);
            let eps = rng.random_range(eps_min..1.0);
            let spec = CodeSpec64::grow(e(z0), eps, None).unwrap();
            assert!(spec.n() <= 22 && spec.n() == default_depth(eps).unwrap());
            (z0, eps, spec)
        })
        .collect()
}

fn criterion_4(specs: &[(f64, f64, CodeSpec64)]) -> Verdict {
    let mut worst_mass = 0f64;
    let mut worst_conservation = 0f64;
    for (z0, _, spec) in specs {
        worst_mass = worst_mass.max((spec.tree().leaf_mass() - 1.0).abs());
        worst_conservation = worst_conservation.max((spec.tree().leaf_erasure_mass() - z0).abs());
    }
    verdict(
        worst_mass <= 1e-12 && worst_conservation <= 1e-12,
        format!(
            "{} random specs: max |sum 2^-d - 1| = {worst_mass:.1e}, max |sum 2^-d z - z0| = {worst_conservation:.1e}",
            specs.len()
        ),
    )
}

fn criterion_5(specs: &[(f64, f64, CodeSpec64)]) -> Verdict {
    let bound_ok = specs.iter().all(|(_, eps, spec)| spec.p_bound() <= eps);
    let spec = CodeSpec64::grow(e(0.382), 0.25, Some(10)).unwrap();
    let trials = 100_000;
    let report = monte_carlo(&spec, trials, 0x0500).unwrap();
    let p = *spec.p_bound();
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let rate = report.block_error_rate();
    verdict(
        bound_ok && rate <= p + 3.0 * sigma,
        format!(
            "p_bound <= eps on {} specs: {bound_ok}; MC rate {rate} vs p_bound {p} + 3 sigma {:.2e}",
            specs.len(),
            3.0 * sigma
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut seen = BTreeSet::new();
    let mut specs = Vec::new();
    for z0 in [0.1, 0.382, 0.5, 0.8] {
        let mut candidates = Vec::new();
        for n in 0..=3u32 {
            for eps in [epsilon_for_depth(n), 0.3, 0.6, 0.9] {
                candidates.push(CodeSpec64::grow(e(z0), eps, Some(n)).unwrap());
            }
        }
        for eps in [0.7, 0.8, 0.9, 0.95] {
            candidates.push(CodeSpec64::grow(e(z0), eps, None).unwrap());
        }
        for spec in candidates.into_iter().filter(|s| s.n() <= 3) {
            let classes: Vec<_> = spec.tree().leaves().map(|l| spec.tree().node(l).class()).collect();
            if seen.insert(format!("{z0}|{}|{:?}|{:?}", spec.n(), preorder(&spec), classes)) {
                specs.push(spec);
            }
        }
    }
    let trials = 1_000_000u64;
    let mut failures = Vec::new();
    let mut worst = 0f64;
    for (i, spec) in specs.iter().enumerate() {
        let exact = exact_error_enumeration(spec).unwrap();
        let mc = monte_carlo(spec, trials, 0x0600 + i as u64).unwrap().block_error_rate();
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        let z = if sigma > 0.0 { (mc - exact).abs() / sigma } else if mc == exact { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
        if z > 3.0 || exact > *spec.p_bound() {
            failures.push(format!("z0={} n={} eps={}", spec.z0(), spec.n(), spec.epsilon()));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} distinct specs, worst |MC - exact| = {worst:.2} sigma, exact <= p_bound everywhere{}",
            specs.len(),
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0700);
    let mut round_trips = 0;
    let mut pairs = 0;
    let mut ok = true;
    for k in 0..20 {
        // cycle through depths so the largest specs reach N = 4096
        let n = if k < 2 { 12 } else { rng.random_range(0..=12) };
        let z0 = rng.random_range(0.0..=1.0);
        let eps = rng.random_range(0.05..1.5);
        let spec = CodeSpec64::grow(e(z0), eps, Some(n)).unwrap();
        let mut decoder = ScDecoder::new(&spec).unwrap();
        let len = decoder.layout().len();
        let dim = decoder.layout().dimension();
        for _ in 0..1000 {
            let info: Vec<u8> = (0..dim).map(|_| rng.random_range(0..2)).collect();
            let x = encode(&spec, &decoder.layout().place(&info).unwrap()).unwrap();
            let y: Vec<_> = x.iter().map(|&b| TernarySymbol::from_bit(b)).collect();
            let out = decoder.decode(&y).unwrap();
            ok &= out.outcome == Outcome::Success && out.info_bits == info;
            round_trips += 1;
        }
        for _ in 0..500 {
            let u: Vec<u8> = (0..len).map(|_| rng.random_range(0..2)).collect();
            let v: Vec<u8> = (0..len).map(|_| rng.random_range(0..2)).collect();
            let w: Vec<u8> = u.iter().zip(&v).map(|(a, b)| a ^ b).collect();
            let (xu, xv, xw) = (encode(&spec, &u).unwrap(), encode(&spec, &v).unwrap(), encode(&spec, &w).unwrap());
            ok &= xu.iter().zip(&xv).map(|(a, b)| a ^ b).eq(xw.iter().copied());
            pairs += 1;
        }
    }
    verdict(ok, format!("{round_trips} noiseless round trips on 20 specs (N up to 4096), {pairs} linearity pairs"))
}

fn criterion_8() -> Verdict {
    let rows = sweep_exact(&e(0.382), 10..=25).unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r.e_tau / f64::from(r.n)).collect();
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    let sample = sample_tau(&e(0.382), epsilon_for_depth(40), 40, 1000, 0x0800).unwrap();
    verdict(
        decreasing && (13.0..=15.5).contains(&sample.mean),
        format!(
            "E[tau]/n strictly decreasing on [10, 25]: {decreasing} ({:.3} -> {:.3}); sample mean at n = 40: {}",
            ratios[0],
            ratios[ratios.len() - 1],
            sample.mean
        ),
    )
}

fn criterion_9() -> Verdict {
    const CHECKS: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0900);
    let mut draw = |lo: f64, hi: f64| {
        let a: f64 = rng.random_range(lo..hi);
        let b: f64 = rng.random_range(lo..hi);
        let iv = Interval::new(a.min(b), a.max(b)).unwrap();
        let t: f64 = rng.random_range(0.0..=1.0);
        let x = (iv.lo() + t * (iv.hi() - iv.lo())).clamp(iv.lo(), iv.hi());
        (iv, x)
    };
    let mut failures = [0usize; 6];
    for _ in 0..CHECKS {
        let (a, x) = draw(-100.0, 100.0);
        let (b, y) = draw(-100.0, 100.0);
        failures[0] += usize::from(!(a + b).contains(x + y));
        failures[1] += usize::from(!(a - b).contains(x - y));
        failures[2] += usize::from(!(a * b).contains(x * y));
        let (d, w) = loop {
            let (d, w) = draw(-100.0, 100.0);
            if !d.contains_zero() {
                break (d, w);
            }
        };
        failures[3] += usize::from(!a.checked_div(d).unwrap().contains(x / w));
        let (p, s) = draw(1e-6, 1e6);
        failures[4] += usize::from(!p.log2().unwrap().contains(s.log2()));
        let (h, t) = draw(1e-9, 0.5);
        let h2 = -t * t.log2() - (1.0 - t) * (1.0 - t).log2();
        failures[5] += usize::from(!h.h2().unwrap().contains(h2));
    }
    let names = ["add", "sub", "mul", "div", "log2", "h2"];
    let detail: Vec<String> = names.iter().zip(failures).map(|(n, f)| format!("{n} {}/{CHECKS}", CHECKS - f)).collect();
    verdict(failures.iter().all(|&f| f == 0), detail.join(", "))
}

fn main() {
    let specs = random_default_specs(100, 0x0400);
    let criteria: Vec<(&str, Check)> = vec![
        ("1  golden tree (construct --z0 0.5 --epsilon 0.8 --n 3)", Box::new(criterion_1)),
        ("2  E[tau] table, z0 = 0.382, n = 0..25, tol 1e-6", Box::new(criterion_2)),
        ("3a certify [0.9, 1] with 100000 subintervals", Box::new(criterion_3_certificate)),
        ("3b f(0.999930450125367) = 0.9864109898636828 +- 1e-9", Box::new(criterion_3_scalar)),
        ("4  conservation and leaf mass, tol 1e-12", Box::new(|| criterion_4(&specs))),
        ("5  union bound and Monte Carlo <= p_bound + 3 sigma", Box::new(|| criterion_5(&specs))),
        ("6  enumeration vs 1e6-trial Monte Carlo within 3 sigma", Box::new(criterion_6)),
        ("7  codec round trips and linearity", Box::new(criterion_7)),
        ("8  complexity trend and sampled tau at n = 40", Box::new(criterion_8)),
        ("9  interval enclosure, 1e5 checks per operator", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let v = check();
        failed += usize::from(!v.pass);
        println!("[{}] criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

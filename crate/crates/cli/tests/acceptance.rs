//! Acceptance suite. Prints one PASS/FAIL line per criterion with the
//! measured value and wall time, then exits non-zero if any criterion failed.
//!
//!     cargo test -p meshpref-cli --test acceptance

#[path = "../../core/tests/common/mod.rs"]
mod oracles;

use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use meshpref_core::analysis::{
    aggregate_report, circular_triads, kruskal_wallis, mann_whitney_u, ranksum_z, wilcoxon_signed_rank, Grouping, Method, Tournament,
};
use meshpref_core::decimate::{decimate, geometric_error};
use meshpref_core::mesh::validate;
use meshpref_core::observer::{simulate_many, simulate_session, ObserverModel, SimulationConfig};
use meshpref_core::protocol::{
    full_factorial, pair_outcome, read_jsonl, write_jsonl, ExperimentDesign, MeshLevel, SessionLog, Shading, Stimulus, DEFAULT_PROMPT,
};
use meshpref_core::scalar::rational_to_f64;
use meshpref_core::shapes::{icosphere, scan_like};
use meshpref_core::{Mesh, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Suite {
    failed: Vec<&'static str>,
}

impl Suite {
    fn check(&mut self, name: &'static str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = o.pass && in_time;
        let time_note = if in_time {
            String::new()
        } else {
            format!(" over the {} s budget", budget.as_secs())
        };
        println!(
            "{} {name}: {} [{:.2} s{time_note}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
        let _ = std::io::stdout().flush();
        if !pass {
            self.failed.push(name);
        }
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ladder_levels() -> Vec<MeshLevel> {
    [1_000, 5_000, 10_000, 20_000]
        .iter()
        .map(|&q| MeshLevel {
            name: format!("a_{q}"),
            mesh_ref: format!("a_{q}.obj"),
            texture_ref: None,
            quality: q,
        })
        .collect()
}

fn four_levels() -> Arc<ExperimentDesign> {
    Arc::new(ExperimentDesign::new(full_factorial(&ladder_levels(), &[Shading::Unlit]), DEFAULT_PROMPT).unwrap())
}

fn factorial() -> Arc<ExperimentDesign> {
    Arc::new(
        ExperimentDesign::new(
            full_factorial(&ladder_levels(), &[Shading::Unlit, Shading::LambertDiffuse]),
            DEFAULT_PROMPT,
        )
        .unwrap(),
    )
}

fn presentations(log: &SessionLog) -> usize {
    log.state().history().len()
}

fn bounds() -> Outcome {
    let cfg = SimulationConfig::default();
    let models = [
        ObserverModel::Deterministic,
        ObserverModel::Guesser,
        ObserverModel::Logistic { beta: 0.5 },
        ObserverModel::Logistic { beta: 3.0 },
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (design, pairs, lo, hi) in [(four_levels(), 6, 12, 18), (factorial(), 28, 56, 84)] {
        let mut seen = (usize::MAX, 0);
        for (k, model) in models.iter().enumerate() {
            for log in simulate_many(model, design.clone(), 250, 1000 + k as u64, &cfg) {
                let p = presentations(&log);
                seen = (seen.0.min(p), seen.1.max(p));
            }
        }
        pass &= design.pairs().len() == pairs && lo <= seen.0 && seen.1 <= hi;
        detail.push(format!(
            "n={}: {} pairs, presentations {}..={} (bounds {lo}..={hi})",
            design.len(),
            design.pairs().len(),
            seen.0,
            seen.1
        ));
    }
    outcome(pass, detail.join("; "))
}

fn worked_examples() -> Outcome {
    let full = pair_outcome(2, 0).unwrap();
    let split = pair_outcome(2, 1).unwrap();
    let exact = full == Rational::from_integer(1) && split == Rational::new(1, 3);
    // the paper prints 0.333
    let decimal = (rational_to_f64(split) - 1.0 / 3.0).abs() < 1e-12 && (rational_to_f64(split) - 0.333).abs() < 5e-4;
    outcome(
        exact && decimal,
        format!("ps(2,0) = {full}, ps(2,1) = {split} = {:.12}", rational_to_f64(split)),
    )
}

fn score_bound() -> Outcome {
    let design = four_levels();
    let log = simulate_session(&ObserverModel::Deterministic, design, 7, &SimulationConfig::default());
    let mut scores: Vec<Rational> = log.state().scores().unwrap();
    scores.sort_by(|a, b| b.cmp(a));
    let expect: Vec<Rational> = [3, 1, -1, -3].iter().map(|&v| Rational::from_integer(v)).collect();
    let shown: Vec<String> = scores.iter().map(|s| s.to_string()).collect();
    outcome(
        scores == expect && scores[0] == Rational::from_integer(3),
        format!("Σps = ({})", shown.join(", ")),
    )
}

fn triads() -> Outcome {
    let mut checked = 0u64;
    for n in 0..=5usize {
        let edges = n * n.saturating_sub(1) / 2;
        for code in 0..1u64 << edges {
            let beats = oracles::tournament(n, code);
            let t = Tournament::new(n, beats.clone()).unwrap();
            if circular_triads(&t).count != oracles::cyclic_triples(n, &beats) {
                return outcome(false, format!("mismatch at n={n}, tournament {code}"));
            }
            checked += 1;
        }
    }
    outcome(true, format!("{checked} tournaments with n ≤ 5 agree"))
}

fn wilcoxon_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases = 0;
    for m in 1..=12 {
        for _ in 0..40 {
            let d: Vec<f64> = (0..m).map(|_| rng.random_range(-5i32..=5) as f64).collect();
            let zeros = vec![0.0; m];
            let (v, p) = oracles::signed_rank_enumerated(&d);
            match wilcoxon_signed_rank(&d, &zeros) {
                Ok(r) => {
                    if r.method != Method::Exact || r.value != v || r.p_value.to_bits() != p.to_bits() {
                        return outcome(false, format!("{d:?}: got V={} p={}, enumeration V={v} p={p}", r.value, r.p_value));
                    }
                    cases += 1;
                }
                Err(_) if d.iter().all(|x| *x == 0.0) => {}
                Err(e) => return outcome(false, format!("{d:?}: {e}")),
            }
        }
    }
    outcome(true, format!("{cases} samples with m ≤ 12 match bit for bit"))
}

/// Largest |normal − exact| p over every attainable U for untied samples.
fn ranksum_gap(na: usize, nb: usize) -> f64 {
    let counts = oracles::u_distribution(na, nb);
    let mut worst: f64 = 0.0;
    for s in oracles::subsets(na + nb, na) {
        let a: Vec<f64> = s.iter().map(|&i| i as f64).collect();
        let b: Vec<f64> = (0..na + nb).filter(|i| !s.contains(i)).map(|i| i as f64).collect();
        let u = mann_whitney_u(&a, &b) as usize;
        let approx = ranksum_z(&a, &b).unwrap().p_value;
        worst = worst.max((approx - oracles::u_exact_p(&counts, u, na, nb)).abs());
    }
    worst
}

fn ranksum_within(sizes: std::ops::RangeInclusive<usize>) -> Outcome {
    let mut worst = (0.0, 0, 0);
    for na in sizes.clone() {
        for nb in sizes.clone() {
            let gap = ranksum_gap(na, nb);
            if gap > worst.0 {
                worst = (gap, na, nb);
            }
        }
    }
    outcome(
        worst.0 <= 0.03,
        format!("max |Δp| = {:.4} at sizes {}×{} (tolerance 0.03)", worst.0, worst.1, worst.2),
    )
}

fn kruskal_wallis_null() -> Outcome {
    let runs = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let p: Vec<f64> = (0..runs)
        .map(|_| {
            let groups: Vec<Vec<f64>> = (0..3).map(|_| (0..15).map(|_| rng.random::<f64>()).collect()).collect();
            kruskal_wallis(&groups).unwrap().p_value
        })
        .collect();
    let d = oracles::ks_uniform(p);
    outcome(
        d <= 0.02,
        format!("KS distance {d:.4} over {runs} null runs of 3 × 15 (tolerance 0.02)"),
    )
}

fn guesser_null() -> Outcome {
    let design = factorial();
    let logs = simulate_many(&ObserverModel::Guesser, design.clone(), 1000, 77, &SimulationConfig::default());
    let repeated: usize = logs.iter().map(|l| l.state().repetition_count()).sum();
    let rate = repeated as f64 / (logs.len() * design.pairs().len()) as f64;
    let report = aggregate_report(&logs, Grouping::None).unwrap();
    let r = report.groups[0].pearson.as_ref().map(|t| t.value).unwrap_or(f64::NAN);
    outcome(
        (rate - 0.5).abs() <= 0.05 && r.abs() < 0.1,
        format!("tie-break rate {rate:.4} (0.50 ± 0.05), aggregate r = {r:.4} (|r| < 0.1) over 1000 sessions"),
    )
}

fn random_design(rng: &mut ChaCha8Rng) -> Arc<ExperimentDesign> {
    let n = rng.random_range(2..=8usize);
    let stimuli = (0..n)
        .map(|i| Stimulus {
            id: format!("s{i}"),
            mesh_ref: format!("s{i}.obj"),
            texture_ref: None,
            quality: rng.random_range(1..=4u32) * 1000,
            shading: if rng.random::<bool>() {
                Shading::Unlit
            } else {
                Shading::LambertDiffuse
            },
        })
        .collect();
    Arc::new(ExperimentDesign::new(stimuli, DEFAULT_PROMPT).unwrap())
}

fn replay_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cfg = SimulationConfig::default();
    let mut prefixes = 0;
    for trial in 0..100 {
        let design = random_design(&mut rng);
        let model = match rng.random_range(0..4) {
            0 => ObserverModel::Deterministic,
            1 => ObserverModel::Guesser,
            2 => ObserverModel::Logistic {
                beta: rng.random_range(0.0..4.0),
            },
            _ => ObserverModel::ShadingMasked {
                beta: rng.random_range(0.0..4.0),
                unlit: rng.random_range(0.2..1.5),
                lambert: rng.random_range(0.2..1.5),
            },
        };
        let log = simulate_session(&model, design, rng.random(), &cfg);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, log.events()).unwrap();
        let events = read_jsonl(buf.as_slice()).unwrap();
        if SessionLog::replay(&events).ok().as_ref() != Some(&log) {
            return outcome(false, format!("trial {trial}: full replay differs"));
        }
        // fold events one at a time as the reference for every prefix
        let mut folded = SessionLog::replay(&events[..1]).unwrap();
        for k in 1..=events.len() {
            if k > 1 {
                folded.apply(events[k - 1].kind.clone()).unwrap();
            }
            match SessionLog::replay(&events[..k]) {
                Ok(prefix) if prefix == folded && prefix.state() == folded.state() => prefixes += 1,
                _ => return outcome(false, format!("trial {trial}: prefix of {k} events differs")),
            }
        }
        if folded != log {
            return outcome(false, format!("trial {trial}: folded log differs"));
        }
    }
    outcome(true, format!("100 triples, {prefixes} prefixes reproduce the state exactly"))
}

fn icosphere_to_320() -> Outcome {
    let sphere: Mesh = icosphere(3, 1.0);
    let out = decimate(&sphere, 320).unwrap();
    let report = validate(&out.mesh);
    outcome(
        sphere.triangle_count() == 1280 && out.mesh.triangle_count() == 320 && report.is_watertight && report.is_valid(),
        format!(
            "{} → {} triangles, watertight = {}",
            sphere.triangle_count(),
            out.mesh.triangle_count(),
            report.is_watertight
        ),
    )
}

fn ladder_monotone() -> Outcome {
    let scan: Mesh = scan_like(6);
    let mut errors = Vec::new();
    for target in [1_000, 5_000, 10_000, 20_000] {
        let out = decimate(&scan, target).unwrap();
        errors.push(geometric_error(&scan, &out.mesh, 20_000, 5).unwrap().mean);
    }
    let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.3e}")).collect();
    outcome(
        scan.triangle_count() >= 40_000 && monotone,
        format!(
            "{} faces; mean error at 1K/5K/10K/20K = {}",
            scan.triangle_count(),
            shown.join(", ")
        ),
    )
}

fn pipeline_equivalence() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let design = factorial();
    std::fs::write(dir.path().join("design.json"), serde_json::to_vec(&*design).unwrap()).unwrap();
    let bin = env!("CARGO_BIN_EXE_meshpref");
    let sim = Command::new(bin)
        .args([
            "simulate",
            "--design",
            "design.json",
            "--model",
            "logistic",
            "--beta",
            "1.5",
            "--reps",
            "100",
            "--seed",
            "42",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    let mut analyze = Command::new(bin)
        .args(["analyze", "--input", "-", "--group-by", "shading", "--format", "json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    analyze.stdin.take().unwrap().write_all(&sim.stdout).unwrap();
    let via_cli = analyze.wait_with_output().unwrap();

    let logs = simulate_many(
        &ObserverModel::Logistic { beta: 1.5 },
        design,
        100,
        42,
        &SimulationConfig::default(),
    );
    let library = aggregate_report(&logs, Grouping::Shading).unwrap().to_json();
    let same = sim.status.success() && via_cli.status.success() && via_cli.stdout == library.as_bytes();
    outcome(same, format!("{} report bytes, identical = {same}", library.len()))
}

fn main() {
    let mut suite = Suite { failed: Vec::new() };
    suite.check("pair and presentation bounds", secs(1), bounds);
    suite.check("preference score worked examples", secs(1), worked_examples);
    suite.check("score bound for four levels", secs(1), score_bound);
    suite.check("circular triads exhaustive", secs(10), triads);
    let stats_start = Instant::now();
    suite.check("wilcoxon exact against enumeration", secs(60), wilcoxon_enumeration);
    suite.check("rank-sum normal p against exact U, sizes 1..=8", secs(60), || ranksum_within(1..=8));
    println!("     (sizes 5..=8 only: {})", ranksum_within(5..=8).detail);
    suite.check("kruskal-wallis null calibration", secs(60), kruskal_wallis_null);
    suite.check("statistics total time", secs(60), || {
        let t = stats_start.elapsed();
        outcome(
            t <= secs(60),
            format!("{:.2} s for the statistics criteria (budget 60 s)", t.as_secs_f64()),
        )
    });
    suite.check("guesser null behaviour", secs(60), guesser_null);
    suite.check("replay determinism", secs(30), replay_determinism);
    suite.check("icosphere 1280 to 320", secs(60), icosphere_to_320);
    suite.check("decimation ladder monotone", secs(60), ladder_monotone);
    suite.check("pipeline equivalence", secs(10), pipeline_equivalence);

    println!();
    if suite.failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("{} failed: {}", suite.failed.len(), suite.failed.join(", "));
        std::process::exit(1);
    }
}

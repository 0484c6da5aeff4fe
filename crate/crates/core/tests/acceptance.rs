//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the PASS/FAIL lines are always printed.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use sentience::audit::{apply_ablation, audit_sentience, Ablation, AuditResult};
use sentience::envs::{EnvKind, EnvSpec};
use sentience::fixtures::{bayes_toy, gaussian_generator, gaussian_tuples, separable_reps};
use sentience::harness::{build_agent, run, RunConfig};
use sentience::perception::{grad_check, Activation, EncoderParams, Loss, TrainConfig};
use sentience::reality::fuse;
use sentience::rng::RngStream;
use sentience::simspace::{validate_metric, SimilaritySpace};
use sentience::taggers::{classification_accuracy, train_discriminator, train_supervised, Discriminator, DiscriminatorConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn config(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(root().join(format!("../../configs/{name}.toml"))).unwrap();
    RunConfig::from_toml(&text).unwrap()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradients() -> Outcome {
    let acts = [Activation::Tanh, Activation::Relu, Activation::Identity];
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let mut rng = RngStream::new(i, "acceptance/gradcheck");
        let depth = 1 + rng.index(3);
        let dims: Vec<usize> = (0..=depth).map(|_| 1 + rng.index(5)).collect();
        let layer_acts: Vec<Activation> = (0..depth).map(|_| acts[rng.index(3)]).collect();
        let mut p = EncoderParams::init(&dims, &layer_acts, &mut rng).map_err(|e| e.to_string())?;
        // init leaves biases at zero, which can park a ReLU exactly on its kink
        for layer in &mut p.layers {
            layer.biases.iter_mut().for_each(|b| *b = rng.uniform(-0.5, 0.5));
        }
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let y: Vec<f64> = (0..dims[depth]).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let err = grad_check(&p, (&x, &y), 1e-5, Loss::Mse).map_err(|e| e.to_string())?;
        worst = worst.max(err);
    }
    check(worst < 1e-4, format!("worst relative error {worst:.2e} over 20 networks"))
}

fn metric_axioms() -> Outcome {
    let mut rng = RngStream::new(2, "acceptance/metric");
    let mut violations = 0;
    for dim in 2..=16 {
        let r = validate_metric(&SimilaritySpace::continuous("x", dim), 1000, &mut rng).map_err(|e| e.to_string())?;
        violations += r.violations;
    }
    let names: Vec<String> = (0..20).map(|i| format!("n{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut edges = Vec::new();
    for i in 1..20 {
        edges.push((refs[i - 1], refs[i], rng.uniform(0.1, 3.0)));
    }
    for _ in 0..30 {
        let (a, b) = (rng.index(20), rng.index(20));
        if a != b {
            edges.push((refs[a], refs[b], rng.uniform(0.1, 3.0)));
        }
    }
    let g = SimilaritySpace::graph("g", &refs, &edges).map_err(|e| e.to_string())?;
    let r = validate_metric(&g, 3, &mut rng).map_err(|e| e.to_string())?;
    violations += r.violations;
    check(violations == 0, format!("{violations} violations; 15 x 1000 Euclidean triples + {} graph triples", r.triples_checked))
}

fn fusion_algebra() -> Outcome {
    let mut rng = RngStream::new(3, "acceptance/fusion");
    let mut failures = 0;
    for _ in 0..10_000 {
        let dim = 1 + rng.index(4);
        let m1: Vec<f64> = (0..dim).map(|_| rng.uniform(-1e3, 1e3)).collect();
        let m2: Vec<f64> = (0..dim).map(|_| rng.uniform(-1e3, 1e3)).collect();
        let p1 = 10f64.powf(rng.uniform(-6.0, 6.0));
        let p2 = 10f64.powf(rng.uniform(-6.0, 6.0));
        let ab = fuse((&m1, p1), (&m2, p2)).map_err(|e| e.to_string())?;
        let ba = fuse((&m2, p2), (&m1, p1)).map_err(|e| e.to_string())?;
        let between = ab.0.iter().zip(m1.iter().zip(&m2)).all(|(f, (a, b))| a.min(*b) <= *f && *f <= a.max(*b));
        if ab != ba || ab.1 != p1 + p2 || !between {
            failures += 1;
        }
    }
    check(failures == 0, format!("{failures} failures in 10000 random fusions"))
}

fn assertoric_persistence() -> Outcome {
    let r = run(&config("illusion")).map_err(|e| e.to_string())?;
    let last = r.traces.last().ok_or("no traces")?;
    let belief = last.beliefs.iter().find(|b| b.variable == "lengths").ok_or("no belief")?;
    let believed_diff = belief.mean[0] - belief.mean[1];
    let tail = &r.traces[r.traces.len() - 50..];
    let min_percept_diff = tail
        .iter()
        .map(|t| {
            let v = &t.channel("visual").expect("visual channel").rep;
            v[0] - v[1]
        })
        .fold(f64::INFINITY, f64::min);
    let always_different = r.traces.iter().all(|t| t.channel("visual").is_some_and(|c| c.percept_choice == "different"));
    check(
        believed_diff.abs() < 0.05 && min_percept_diff > 0.2 && always_different,
        format!(
            "belief difference {believed_diff:.4}, min percept difference over last 50 steps {min_percept_diff:.3}, \
             percept always \"different\": {always_different}"
        ),
    )
}

fn hallucination_detection() -> Outcome {
    let m = run(&config("hallucination")).map_err(|e| e.to_string())?.metrics;
    let auc = m.tagger_auc.ok_or("no AUC")?;
    let data = separable_reps(3, 400);
    let (train, held_out) = data.split_at(300);
    let init = EncoderParams::init(&[2, 1], &[Activation::Identity], &mut RngStream::new(3, "acceptance/sup-init"))
        .map_err(|e| e.to_string())?;
    let cfg = TrainConfig { learning_rate: 0.1, epochs: 50, seed: 3, ..TrainConfig::default() };
    let est = train_supervised(&init, train, &cfg).map_err(|e| e.to_string())?;
    let acc = classification_accuracy(&est, held_out).map_err(|e| e.to_string())?;
    check(auc > 0.9 && acc > 0.9, format!("temporal AUC {auc:.4}, supervised held-out accuracy {acc:.3}"))
}

fn bayes_equivalence() -> Outcome {
    // Oracle: normalized densities multiplied directly, no logs.
    let pdf = |x: f64, m: f64, prec: f64| (prec / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * prec * (x - m).powi(2)).exp();
    let posterior = |latent: f64, rep: f64| pdf(latent, 0.0, 4.0) * pdf(rep, 2.0 * latent + 0.5, 4.0);
    let b = bayes_toy();
    let grid: Vec<Vec<f64>> = (0..101).map(|i| vec![-2.0 + 0.04 * i as f64]).collect();
    let mut mismatches = 0;
    let reps: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
    for rep in &reps {
        let got = b.argmax_on_grid(&grid, &[*rep]).map_err(|e| e.to_string())?;
        let want = (0..grid.len()).fold(0, |best, i| if posterior(grid[i][0], *rep) > posterior(grid[best][0], *rep) { i } else { best });
        if got != want {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches} argmax mismatches over {} observations", reps.len()))
}

fn discriminator_sanity() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let real = gaussian_tuples(seed, 0.0, 1.0, 1000, 2);
        let g = gaussian_generator(0.0, 1.0, 2, 1);
        let init = EncoderParams::init(&[2, 1], &[Activation::Identity], &mut RngStream::new(seed, "acceptance/d"))
            .map_err(|e| e.to_string())?;
        let d0 = Discriminator::new(init).map_err(|e| e.to_string())?;
        let cfg = DiscriminatorConfig { train: TrainConfig { epochs: 20, seed, ..TrainConfig::default() }, ..DiscriminatorConfig::default() };
        let out = train_discriminator(&d0, &g, &real, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max((out.holdout_accuracy - 0.5).abs());
    }
    let real = gaussian_tuples(5, 2.0, 0.5, 500, 1);
    let g = gaussian_generator(-2.0, 0.5, 1, 1);
    let d0 = Discriminator::new(EncoderParams::zeros(&[1, 1], &[Activation::Identity]).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let cfg = DiscriminatorConfig { train: TrainConfig { epochs: 30, seed: 5, ..TrainConfig::default() }, ..DiscriminatorConfig::default() };
    let sep = train_discriminator(&d0, &g, &real, &cfg).map_err(|e| e.to_string())?.holdout_accuracy;
    check(
        worst <= 0.1 && sep > 0.95,
        format!("identical: max |acc - 0.5| {worst:.3} over 50 seeds; separated: accuracy {sep:.3}"),
    )
}

fn sub_checks(r: &AuditResult) -> [bool; 6] {
    let (a, q) = (&r.assertoric, &r.qualitative);
    [a.dominance_pass, a.persistence_pass, q.immediate, q.self_grounded, q.metric_valid, q.distinctive]
}

fn audit_matrix() -> Outcome {
    let target = |a: Ablation| match a {
        Ablation::GateDominanceRemoved => 0,
        Ablation::TagGatedSilencing => 1,
        Ablation::ExternalTableProfiles => 3,
        Ablation::CollapsedSpace => 5,
    };
    let mut first: Option<Vec<[bool; 6]>> = None;
    for seed in 13..23 {
        let mut cfg = config("pain");
        cfg.seed = seed;
        let section = cfg.audit.clone().ok_or("pain config has no audit")?;
        let mut params = section.params.clone();
        params.seed = seed;
        let agent = build_agent(&cfg).map_err(|e| e.to_string())?;
        let intact = audit_sentience(&agent, &section.channel, &params).map_err(|e| e.to_string())?;
        if !intact.verdict {
            return Err(format!("seed {seed}: intact channel fails the audit"));
        }
        let mut row = vec![sub_checks(&intact)];
        for ablation in Ablation::ALL {
            let ablated = apply_ablation(&agent, &section.channel, ablation).map_err(|e| e.to_string())?;
            let r = audit_sentience(&ablated, &section.channel, &params).map_err(|e| e.to_string())?;
            let checks = sub_checks(&r);
            let flipped: Vec<usize> = (0..6).filter(|&i| !checks[i]).collect();
            if flipped != [target(ablation)] || r.verdict {
                return Err(format!("seed {seed}: {} flipped sub-checks {flipped:?}", ablation.name()));
            }
            row.push(checks);
        }
        match &first {
            None => first = Some(row),
            Some(f) if *f != row => return Err(format!("seed {seed}: verdicts differ from seed 13")),
            _ => {}
        }
    }
    Ok("intact passes; each ablation flips only its target; identical over seeds 13..22".into())
}

fn determinism() -> Outcome {
    for name in ["minimal", "illusion", "hallucination", "pain"] {
        let cfg = config(name);
        let a = run(&cfg).map_err(|e| e.to_string())?.to_json();
        let b = run(&cfg).map_err(|e| e.to_string())?.to_json();
        if a != b {
            return Err(format!("{name}: records differ"));
        }
    }
    // Episodes with equal specs must match too, independently of the agent.
    let spec = EnvSpec { rho: 0.2, ..EnvSpec::new(EnvKind::Hallucination, 200, 11) };
    let same = sentience::envs::gen_episode(&spec).map_err(|e| e.to_string())?
        == sentience::envs::gen_episode(&spec).map_err(|e| e.to_string())?;
    check(same, "four shipped configs give byte-identical records on re-run".into())
}

fn cli_contract() -> Outcome {
    let out_root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = |n: &str| root().join(format!("../../configs/{n}.toml")).display().to_string();
    let sentience = |args: &[&str]| -> Result<String, String> {
        let o = Command::new(env!("CARGO_BIN_EXE_sentience"))
            .args(args)
            .env("SENTIENCE_OUTPUT_ROOT", out_root.path())
            .output()
            .map_err(|e| e.to_string())?;
        if o.status.success() {
            Ok(String::from_utf8_lossy(&o.stdout).into_owned())
        } else {
            Err(format!("{args:?} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))
        }
    };
    for name in ["minimal", "illusion", "hallucination", "pain"] {
        sentience(&["run", &cfg(name)])?;
    }
    sentience(&["sweep", &cfg("minimal"), "--grid", "env.sigma=0.0,0.1"])?;
    sentience(&["audit", &cfg("pain"), "--channel", "pain"])?;
    sentience(&["report", &out_root.path().display().to_string()])?;

    let golden = |f: &str| std::fs::read_to_string(root().join("tests/golden").join(f)).map_err(|e| e.to_string());
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| e.to_string());
    let csv = read(&out_root.path().join("metrics.csv"))?;
    let header_ok = csv.lines().next() == Some(golden("metrics_header.csv")?.trim_end());
    let record_ok = read(&out_root.path().join("minimal/cell-000/record.json")).is_ok()
        && read(&out_root.path().join("minimal/record.json"))? == golden("minimal_record.json")?;
    check(header_ok && record_ok, format!("verbs exit 0; header golden match {header_ok}; pinned record match {record_ok}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient correctness", gradients, Some(Duration::from_secs(10))),
        ("metric axioms", metric_axioms, Some(Duration::from_secs(5))),
        ("fusion algebra", fusion_algebra, None),
        ("assertoric persistence (illusion)", assertoric_persistence, Some(Duration::from_secs(30))),
        ("hallucination detection", hallucination_detection, Some(Duration::from_secs(60))),
        ("bayesian scorer equivalence", bayes_equivalence, None),
        ("discriminator sanity", discriminator_sanity, None),
        ("audit matrix", audit_matrix, None),
        ("determinism", determinism, None),
        ("cli contract", cli_contract, None),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(d), Some(l)) if elapsed > *l => Err(format!("{d}; took {elapsed:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += outcome.is_err() as usize;
        println!("{tag} {:>2} {name}: {detail} [{elapsed:.2?}]", i + 1);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}

use brinklab_cli::report::parse_tsv;
use brinklab_cli::{run_experiment_with_threads, DensitySpec, EventKind, ExperimentConfig, ExperimentKind, GridSpec};
use std::process::Command;

fn base(kind: ExperimentKind, n_list: Vec<usize>, trials: usize) -> ExperimentConfig {
    let text = format!("kind = \"{kind}\"\nseed = 7\nn_list = {n_list:?}\ntrials = {trials}\n");
    ExperimentConfig::from_toml(&text).unwrap()
}

#[test]
fn events_with_zero_trials_names_the_constraint() {
    let err = ExperimentConfig::from_toml("kind = \"events\"\nseed = 1\nn_list = [100]\ntrials = 0\n").unwrap_err();
    assert!(err.to_string().contains("trials ≥ 30"), "{err}");
}

#[test]
fn validation_names_fields() {
    let bad = [
        ("kind = \"events\"\nseed = 1\nn_list = [100, 100]\n", "n_list"),
        ("kind = \"events\"\nseed = 1\nn_list = [100]\nlambda = 1.5\n", "lambda"),
        ("kind = \"eta-moments\"\nseed = 1\nn_list = [100]\nkappa = -3.0\n", "kappa"),
        ("kind = \"w2-rates\"\nseed = 1\nn_list = [100000]\n", "n_list"),
        ("kind = \"hneg1\"\nseed = 1\nn_list = [100]\n[grid]\nn = 48\n", "grid"),
        ("kind = \"events\"\nseed = 1\nn_list = [100]\nbogus = 3\n", "config"),
    ];
    for (text, field) in bad {
        let err = ExperimentConfig::from_toml(text).unwrap_err();
        assert_eq!(err.field, field, "{text}: {err}");
    }
}

#[test]
fn config_round_trips() {
    let mut c = base(ExperimentKind::BrinkmanGap, vec![100, 200], 3);
    c.density = DensitySpec::Grid {
        lo: [0.0; 3],
        hi: [1.0, 2.0, 0.5],
        dims: [2, 1, 1],
        weights: vec![0.1 + 0.2, 1.0 / 3.0],
    };
    c.grid = GridSpec { n: 32, side: Some(5.5) };
    c.lambda = 0.123456789012345;
    c.output = Some("out/x".into());
    let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.hash(), c.hash());
}

#[test]
fn hash_tracks_every_field() {
    let c = base(ExperimentKind::Events, vec![100, 200], 30);
    let h = c.hash();
    let mut variants: Vec<ExperimentConfig> = Vec::new();
    let mut push = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut v = c.clone();
        f(&mut v);
        variants.push(v);
    };
    push(&|v| v.kind = ExperimentKind::NnScaling);
    push(&|v| v.seed = 8);
    push(&|v| v.n_list = vec![100, 201]);
    push(&|v| v.trials = 31);
    push(&|v| v.alpha = 2.4);
    push(&|v| v.beta = 1.1);
    push(&|v| v.lambda = 0.31);
    push(&|v| v.m_eta = 0.9);
    push(&|v| v.kappa = 2.0);
    push(&|v| v.particle_radius = 0.1);
    push(&|v| v.eta = 0.05);
    push(&|v| v.ref_factor = 8);
    push(&|v| v.event = EventKind::Smeared);
    push(&|v| {
        v.density = DensitySpec::UniformBall {
            center: [0.0; 3],
            radius: 1.0,
        }
    });
    push(&|v| v.grid.n = 128);
    push(&|v| v.grid.side = Some(4.0));
    push(&|v| v.output = Some("r".into()));
    let mut seen = std::collections::HashSet::new();
    seen.insert(h);
    for v in &variants {
        assert!(seen.insert(v.hash()), "{v:?}");
    }
}

fn assert_thread_independent(c: &ExperimentConfig) {
    let one = run_experiment_with_threads(c, 1).unwrap();
    let eight = run_experiment_with_threads(c, 8).unwrap();
    assert_eq!(one.to_tsv(), eight.to_tsv(), "{}", c.kind);
    assert_eq!(one.to_json(), eight.to_json(), "{}", c.kind);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    assert_thread_independent(&base(ExperimentKind::Events, vec![200, 400], 40));
    assert_thread_independent(&base(ExperimentKind::NnScaling, vec![100, 200, 400], 20));
    assert_thread_independent(&base(ExperimentKind::W2Rates, vec![16, 32, 64], 6));
    assert_thread_independent(&base(ExperimentKind::EtaMoments, vec![100, 1000], 200));
    let mut h = base(ExperimentKind::Hneg1, vec![64, 128], 3);
    h.grid.n = 32;
    assert_thread_independent(&h);
    assert_thread_independent(&base(ExperimentKind::BrinkmanGap, vec![50, 100], 2));
    assert_thread_independent(&base(ExperimentKind::Corrector, vec![4096, 32768, 262144], 2));
    let mut r = base(ExperimentKind::Resistance, vec![0, 1], 2);
    r.particle_radius = 1.0;
    assert_thread_independent(&r);
}

#[test]
fn tsv_rows_parse_back() {
    let rep = run_experiment_with_threads(&base(ExperimentKind::NnScaling, vec![100, 200, 400], 10), 2).unwrap();
    let rows = parse_tsv(&rep.to_tsv()).unwrap();
    assert_eq!(rows.len(), rep.rows.len());
    for ((hash, r), orig) in rows.iter().zip(&rep.rows) {
        assert_eq!(hash, &rep.provenance.config_hash);
        assert_eq!(r, orig);
    }
    assert_eq!(
        brinklab_cli::report::compute_fits(&rows.into_iter().map(|r| r.1).collect::<Vec<_>>()),
        rep.fits
    );
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_brinklab"))
}

#[test]
fn binary_exit_codes() {
    let dir = std::env::temp_dir().join(format!("brinklab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "kind = \"events\"\nseed = 1\nn_list = [100]\ntrials = 0\n").unwrap();
    let out = bin().args(["validate", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials ≥ 30"));

    // a 12-vertex sphere misses the 2% drag target
    let coarse = dir.join("coarse.toml");
    std::fs::write(&coarse, "kind = \"resistance\"\nseed = 1\nn_list = [0]\nparticle_radius = 1.0\n").unwrap();
    let status = bin().args(["--threads", "1", "run", coarse.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let status = bin().args(["run", "--strict", coarse.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(3));
    assert!(dir.join("coarse.tsv").exists() && dir.join("coarse.json").exists());

    let out = bin().args(["report", dir.join("coarse.tsv").to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let good = dir.join("nn.toml");
    std::fs::write(&good, "kind = \"nn-scaling\"\nseed = 1\nn_list = [100, 200]\ntrials = 5\n").unwrap();
    let out = bin().args(["oracle", "--strict", good.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    std::fs::remove_dir_all(&dir).unwrap();
}

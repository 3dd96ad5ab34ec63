//! Output files are reproducible from their own header.

use std::fs;
use std::path::Path;

use antijam::harness::{config_from_csv_header, run_eval, run_fig1, run_fig2, run_train, ExperimentConfig};

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn train_and_eval_rerun_from_header() {
    let cfg = ExperimentConfig::parse(
        "seed = 9\nchain.n = 5\nchain.h_tilde = 0.75\nagent.architecture = recurrent\nrecurrent.train_slots = 1500\neval.slots = 20000\n",
    )
    .unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_eval(&cfg, Some(a.path())).unwrap();
    let replay = config_from_csv_header(&read(a.path(), "eval.csv")).unwrap();
    assert_eq!(replay, cfg);
    run_eval(&replay, Some(b.path())).unwrap();
    for name in ["train_log.csv", "eval.csv", "agent.params"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn sweeps_rerun_from_header_independent_of_workers() {
    let cfg = ExperimentConfig::parse(
        "seeds = 1, 2\nfig1.n = 5\nfig1.h_values = 0.8\nfig1.combos = mlp:double-q, recurrent:mellowmax\n\
         mlp.train_slots = 2000\nrecurrent.train_slots = 1500\n\
         fig2.n_values = 5\nfig2.h_values = 0.7, 0.9\nfig2.train_slots = 1500\nfig2.eval_slots = 10000\n",
    )
    .unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_fig1(&cfg, Some(a.path()), 1).unwrap();
    run_fig2(&cfg, Some(a.path()), 1).unwrap();
    let replay = config_from_csv_header(&read(a.path(), "fig2.csv")).unwrap();
    run_fig1(&replay, Some(b.path()), 3).unwrap();
    run_fig2(&replay, Some(b.path()), 3).unwrap();
    for name in ["fig1.csv", "fig1_final.csv", "fig2.csv", "fig2_summary.csv", "fig1.svg", "fig2.svg"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn train_log_header_round_trips() {
    let cfg = ExperimentConfig::parse("chain.n = 7\nagent.architecture = mlp\nmlp.train_slots = 1200\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_train(&cfg, Some(dir.path())).unwrap();
    let log = read(dir.path(), "train_log.csv");
    assert!(log.starts_with("# antijam train\n"));
    assert_eq!(config_from_csv_header(&log).unwrap(), cfg);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::Digest;

fn heco(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heco"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("HECO_OUT")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bundled() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn missing_energy_is_named() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(t.path(), "a.toml", "kind = \"bound-states\"\n");
    let o = heco(t.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("E_i_meV"), "{}", stderr(&o));
}

#[test]
fn every_unknown_key_is_reported() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(
        t.path(),
        "a.toml",
        "kind = \"hardwall-intensity\"\nE_i_meV = 10.0\nenergy = 3\n[grid]\nnx = 64\ndx_A = 0.1\n[propagation.absorber]\nwidth_A = 2\n",
    );
    let o = heco(t.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for key in ["`energy`", "`grid.dx_A`", "`propagation.absorber.width_A`"] {
        assert!(err.contains(key), "{key} missing from: {err}");
    }
}

#[test]
fn range_violations_are_listed_together() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(
        t.path(),
        "a.toml",
        "kind = \"tdse-propagate\"\nE_i_meV = -1.0\n[grid]\nnx = 100\n[propagation]\ndt_ps = 0.0\n",
    );
    let o = heco(t.path(), &["check", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for key in ["E_i_meV", "grid.nx", "propagation.dt_ps"] {
        assert!(err.contains(key), "{key} missing from: {err}");
    }
}

#[test]
fn unknown_figure_lists_the_known_ones() {
    let t = tempfile::tempdir().unwrap();
    let o = heco(t.path(), &["reproduce", "fig99"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for id in ["fig2a", "fig4a", "fig5", "fig7", "fig9", "fig10"] {
        assert!(err.contains(id), "{id} missing from: {err}");
    }
}

#[test]
fn effective_configs_round_trip() {
    let t = tempfile::tempdir().unwrap();
    let configs = bundled();
    assert!(configs.len() >= 10);
    for cfg in configs {
        let first = heco(t.path(), &["check", cfg.to_str().unwrap()]);
        assert!(first.status.success(), "{}: {}", cfg.display(), stderr(&first));
        let effective = write(t.path(), "effective.toml", std::str::from_utf8(&first.stdout).unwrap());
        let second = heco(t.path(), &["check", effective.to_str().unwrap()]);
        assert!(second.status.success(), "{}", stderr(&second));
        assert_eq!(first.stdout, second.stdout, "{}", cfg.display());
    }
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn repeated_runs_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(
        t.path(),
        "n.toml",
        "kind = \"newton-rainbows\"\nE_i_meV = 10.0\n[scan]\nsamples = 61\nvariants = [\"Full\", \"RepulsiveAdsorbate\"]\n[newton]\nstop_when_trapped = true\n",
    );
    let runs: Vec<_> = [("a", "1"), ("b", "2")]
        .iter()
        .map(|(d, threads)| {
            let out = t.path().join(d);
            let o = heco(&out, &["--threads", threads, "run", cfg.to_str().unwrap()]);
            assert!(o.status.success(), "{}", stderr(&o));
            artifacts(&out.join("newton-rainbows"))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].iter().any(|(n, _)| n.ends_with("full_rainbows.csv")));

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(t.path().join("a/newton-rainbows/manifest.json")).unwrap()).unwrap();
    let listed = manifest["artifacts"].as_array().unwrap();
    assert_eq!(listed.len(), runs[0].len() - 1, "every artifact but config.toml is listed");
    for a in listed {
        let data = std::fs::read(t.path().join("a/newton-rainbows").join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), hex::encode(sha2::Sha256::digest(&data)));
    }
}

#[test]
fn born_seeding_follows_the_seed() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(
        t.path(),
        "b.toml",
        "kind = \"bohm-trajectories\"\nE_i_meV = 10.0\nseed = 11\n\
         [grid]\nx_min_A = -27.0\nx_max_A = 27.0\nz_min_A = -13.0\nz_max_A = 51.0\nnx = 512\nnz = 512\n\
         [packet]\nn_gaussians = 100\n[propagation]\ndt_ps = 5e-4\nt_end_ps = 0.01\n[bohm]\nseeding = \"born-random\"\nn_born = 2000\ndensity_bins = 16\n",
    );
    let run = |dir: &str, extra: &[&str]| {
        let out = t.path().join(dir);
        let mut args: Vec<&str> = extra.to_vec();
        args.extend(["run", cfg.to_str().unwrap()]);
        let o = heco(&out, &args);
        assert!(o.status.success(), "{}", stderr(&o));
        artifacts(&out.join("bohm-trajectories"))
    };
    let a = run("a", &[]);
    let b = run("b", &["--seed", "11"]);
    let c = run("c", &["--seed", "12"]);
    assert_eq!(a, b);
    let paths = |r: &[(String, Vec<u8>)]| r.iter().find(|(n, _)| n.ends_with("paths.csv")).unwrap().1.clone();
    assert_ne!(paths(&a), paths(&c));
    assert!(a.iter().any(|(n, _)| n.ends_with("density_check.json")));
}

#[test]
fn config_flag_runs_without_a_subcommand() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(t.path(), "b.toml", "kind = \"bound-states\"\nE_i_meV = 10.0\nlabel = \"levels\"\n");
    let o = heco(t.path(), &["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(t.path().join("levels/levels_levels.csv").exists());
    let o = heco(t.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_flag_beats_the_environment() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(t.path(), "b.toml", "kind = \"bound-states\"\nE_i_meV = 10.0\n");
    let env_out = t.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_heco"))
        .args(["run", cfg.to_str().unwrap()])
        .env("HECO_OUT", &env_out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_out.join("bound-states/manifest.json").exists());
    let flag_out = t.path().join("flag");
    let o = Command::new(env!("CARGO_BIN_EXE_heco"))
        .arg("--out")
        .arg(&flag_out)
        .args(["run", cfg.to_str().unwrap()])
        .env("HECO_OUT", t.path().join("ignored"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag_out.join("bound-states/manifest.json").exists());
    assert!(!t.path().join("ignored").exists());
}

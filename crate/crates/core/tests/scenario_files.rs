use std::path::Path;

use nhbdi_core::{Format, Scenario};

fn shipped() -> Vec<std::path::PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut v: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn shipped_scenarios_load() {
    let files = shipped();
    assert!(files.len() >= 5);
    for f in &files {
        let sc = Scenario::from_path(f).unwrap();
        assert_eq!(sc.t_end, 500.0);
        assert_eq!(sc.i0, 1);
    }
}

#[test]
fn presets_match_the_constructors() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for (file, d, nu) in [
        ("running_example_d0.toml", 0.0, 0.0),
        ("running_example_d5.toml", 5.0, 0.0),
        ("running_example_d10.toml", 10.0, 0.0),
        ("running_example.toml", 10.0, 0.0),
        ("running_example_bdi.toml", 10.0, 0.2),
    ] {
        let sc = Scenario::from_path(dir.join(file)).unwrap();
        assert_eq!(sc, Scenario::running_example(d, nu, 1), "{file}");
    }
}

#[test]
fn written_files_reparse_identically() {
    let tmp = tempfile::tempdir().unwrap();
    for f in shipped() {
        let sc = Scenario::from_path(&f).unwrap();
        for ext in ["json", "toml"] {
            let out = tmp.path().join(format!("copy.{ext}"));
            sc.write_to(&out).unwrap();
            assert_eq!(Scenario::from_path(&out).unwrap(), sc, "{} via {ext}", f.display());
        }
    }
}

#[test]
fn extension_decides_the_format() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = Scenario::running_example(5.0, 0.2, 3);
    let json = tmp.path().join("a.json");
    std::fs::write(&json, sc.dump(Format::Json).unwrap()).unwrap();
    assert_eq!(Scenario::from_path(&json).unwrap(), sc);
    let wrong = tmp.path().join("a.yaml");
    std::fs::write(&wrong, "").unwrap();
    assert!(Scenario::from_path(&wrong).is_err());
}

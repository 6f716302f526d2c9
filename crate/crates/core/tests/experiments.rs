use std::fs;
use std::path::Path;

use tripartite_dce::experiments::{preset, run_preset, verify_preset};
use tripartite_dce::Error;

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "svg"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    for id in ["table1", "fig4"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let first = run_preset(id, a.path()).unwrap();
        run_preset(id, b.path()).unwrap();
        let (sa, sb) = (snapshot(&a.path().join(id)), snapshot(&b.path().join(id)));
        assert_eq!(sa.len(), preset(id).unwrap().expected_files().len());
        assert_eq!(sa, sb, "{id} output differs between runs");
        assert_eq!(first.files.len(), sa.len());
    }
}

#[test]
fn report_lists_cited_targets() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("table2", dir.path()).unwrap();
    let entries = verify_preset("table2", dir.path()).unwrap();
    assert_eq!(entries.len(), 14);
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("table2/report.json")).unwrap()).unwrap();
    let list = json.as_array().unwrap();
    assert_eq!(list.len(), 14);
    for item in list {
        for key in ["target", "cited", "measured", "tolerance", "pass"] {
            assert!(item.get(key).is_some(), "missing {key}");
        }
        assert!(!item["cited"].as_str().unwrap().is_empty());
    }
    let row = entries.iter().find(|e| e.target.contains("analytic") && e.target.ends_with("= 1.5")).unwrap();
    assert!(row.pass && row.measured <= 0.02);
}

#[test]
fn verify_without_outputs_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(verify_preset("fig1", dir.path()), Err(Error::MissingOutput(_))));
    assert!(run_preset("fig9", dir.path()).is_err());
}

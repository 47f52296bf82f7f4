use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use boolens::synth::{generate, SourceSpec, SynthSpec};
use boolens_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { boolens_string_free(s) };
    out
}

fn parse(text: &str) -> *mut BoolensExpr {
    let c = CString::new(text).unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { boolens_expr_parse(c.as_ptr(), &mut e) }, BoolensStatus::Ok);
    e
}

#[test]
fn expression_round_trip() {
    let e = parse("A ∧ (B ∨ C)");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { boolens_expr_to_string(e, &mut s) }, BoolensStatus::Ok);
    assert_eq!(take(s), "(A&(B|C))");
    assert_eq!(unsafe { boolens_expr_leaf_count(e) }, 3);
    unsafe { boolens_expr_free(e) };
}

#[test]
fn evaluate_bits() {
    let e = parse("A|B");
    let names = [CString::new("A").unwrap(), CString::new("B").unwrap()];
    let bits = [CString::new("1100").unwrap(), CString::new("0110").unwrap()];
    let np: Vec<*const c_char> = names.iter().map(|c| c.as_ptr()).collect();
    let bp: Vec<*const c_char> = bits.iter().map(|c| c.as_ptr()).collect();
    let mut out = ptr::null_mut();
    let st = unsafe { boolens_expr_evaluate_bits(e, np.as_ptr(), bp.as_ptr(), 2, &mut out) };
    assert_eq!(st, BoolensStatus::Ok);
    assert_eq!(take(out), "1110");
    // unbound leaf
    let st = unsafe { boolens_expr_evaluate_bits(e, np.as_ptr(), bp.as_ptr(), 1, &mut out) };
    assert_eq!(st, BoolensStatus::Validation);
    assert!(take(boolens_last_error()).contains('B'));
    unsafe { boolens_expr_free(e) };
}

#[test]
fn error_codes() {
    let mut e = ptr::null_mut();
    let bad = CString::new("(A&B").unwrap();
    assert_eq!(unsafe { boolens_expr_parse(bad.as_ptr(), &mut e) }, BoolensStatus::Parse);
    assert!(e.is_null());
    assert_eq!(unsafe { boolens_expr_parse(ptr::null(), &mut e) }, BoolensStatus::NullPointer);
    let not_utf8 = [0xffu8, 0];
    assert_eq!(
        unsafe { boolens_expr_parse(not_utf8.as_ptr() as *const c_char, &mut e) },
        BoolensStatus::Utf8
    );
    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(unsafe { boolens_bernoulli_ci(0.5, 0, 1.96, &mut lo, &mut hi) }, BoolensStatus::Validation);
    assert_eq!(unsafe { boolens_bernoulli_ci(0.8, 400, 1.96, &mut lo, &mut hi) }, BoolensStatus::Ok);
    assert!((lo - 0.7608).abs() < 1e-12 && (hi - 0.8392).abs() < 1e-12);
    assert!(boolens_last_error().is_null());
}

#[test]
fn counts() {
    let got: Vec<u64> = (2..=5)
        .map(|k| {
            let mut n = 0;
            assert_eq!(unsafe { boolens_semantic_count(k, &mut n) }, BoolensStatus::Ok);
            n
        })
        .collect();
    assert_eq!(got, vec![2, 8, 52, 472]);
}

#[test]
fn store_score_and_search() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = SourceSpec::named("A");
    a.miss_rate = 0.3;
    let spec = SynthSpec {
        n_docs: 10,
        doc_length: 400,
        sources: vec![a, SourceSpec::named("B")],
        seed: 3,
        ..Default::default()
    };
    let files = generate(&spec).unwrap().write(dir.path()).unwrap();
    let cfg = format!(
        "[corpus]\nmanifest = {:?}\ngold = {:?}\nsemgroups = {:?}\n\n[systems]\nA = {:?}\nB = {:?}\n",
        files.manifest, files.gold, files.semgroups, files.systems[0].1, files.systems[1].1
    );
    let cfg_path = dir.path().join("config.toml");
    std::fs::write(&cfg_path, cfg).unwrap();
    let p = CString::new(cfg_path.to_str().unwrap()).unwrap();
    let mut store = ptr::null_mut();
    assert_eq!(unsafe { boolens_store_open(p.as_ptr(), 1, &mut store) }, BoolensStatus::Ok);
    assert_eq!(unsafe { boolens_store_num_documents(store) }, 10);

    let e = parse("B");
    let mut m = BoolensMetrics::default();
    assert_eq!(unsafe { boolens_store_score(store, e, ptr::null(), &mut m) }, BoolensStatus::Ok);
    assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    let g = CString::new("Nonexistent").unwrap();
    assert_eq!(unsafe { boolens_store_score(store, e, g.as_ptr(), &mut m) }, BoolensStatus::Validation);
    unsafe { boolens_expr_free(e) };

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { boolens_store_search_json(store, ptr::null(), 3, &mut json) }, BoolensStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    // A is a subset of B = gold, so (A|B) ties B at F1 = 1 and wins on the string tiebreak
    assert_eq!(v["top_f1"][0]["expression"], "(A|B)");
    assert_eq!(v["top_f1"][1]["expression"], "B");
    assert_eq!(v["top_f1"][1]["metrics"]["f1"], 1.0);
    assert_eq!(v["evaluated"], 4);
    unsafe { boolens_store_free(store) };

    let missing = CString::new(dir.path().join("absent.toml").to_str().unwrap()).unwrap();
    let mut s2 = ptr::null_mut();
    assert_eq!(unsafe { boolens_store_open(missing.as_ptr(), 1, &mut s2) }, BoolensStatus::Io);
}

#[test]
fn header_lists_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/boolens.h")).unwrap();
    for f in [
        "boolens_expr_parse",
        "boolens_expr_evaluate_bits",
        "boolens_store_open",
        "boolens_store_search_json",
        "boolens_last_error",
        "BOOLENS_STATUS_UNSUPPORTED = 4",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let exe = std::env::current_exe().unwrap();
    let target = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = target.join("libboolens_ffi.a");
    assert!(lib.is_file(), "static library not found at {}", lib.display());
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("run cc");
    assert!(status.success());
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}

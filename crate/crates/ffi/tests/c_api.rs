use std::ffi::{c_char, CStr, CString};
use std::ptr;

use candrefine_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = candrefine_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    candrefine_string_free(s);
    out
}

#[test]
fn edit_distance_both_granularities() {
    let (a, b) = (c("the cat sat"), c("the cats sat"));
    let mut d = 99usize;
    unsafe {
        assert_eq!(
            candrefine_edit_distance(a.as_ptr(), b.as_ptr(), CandrefineGranularity::Token as i32, &mut d),
            CandrefineStatus::Ok
        );
        assert_eq!(d, 1);
        assert_eq!(
            candrefine_edit_distance(a.as_ptr(), b.as_ptr(), CandrefineGranularity::Character as i32, &mut d),
            CandrefineStatus::Ok
        );
        assert_eq!(d, 1);
        assert_eq!(
            candrefine_edit_distance(a.as_ptr(), b.as_ptr(), 7, &mut d),
            CandrefineStatus::InvalidArgument
        );
    }
    assert!(last_error().contains("granularity"));
}

#[test]
fn null_and_bad_utf8_are_reported() {
    let a = c("x");
    let mut d = 0usize;
    let bad = [0xffu8, 0xfe, 0];
    unsafe {
        assert_eq!(
            candrefine_edit_distance(ptr::null(), a.as_ptr(), 0, &mut d),
            CandrefineStatus::NullPointer
        );
        assert_eq!(
            candrefine_edit_distance(a.as_ptr(), a.as_ptr(), 0, ptr::null_mut()),
            CandrefineStatus::NullPointer
        );
        let mut s = 0.0;
        assert_eq!(
            candrefine_sim_lcs(bad.as_ptr() as *const c_char, a.as_ptr(), &mut s),
            CandrefineStatus::InvalidUtf8
        );
        assert!(candrefine_pool_new(ptr::null()).is_null());
        assert_eq!(candrefine_pool_len(ptr::null()), 0);
        candrefine_pool_free(ptr::null_mut());
        candrefine_m2_free(ptr::null_mut());
        candrefine_string_free(ptr::null_mut());
    }
}

#[test]
fn sim_lcs_value() {
    let (a, b) = (c("a b c d"), c("a c d"));
    let mut s = 0.0;
    unsafe { assert_eq!(candrefine_sim_lcs(a.as_ptr(), b.as_ptr(), &mut s), CandrefineStatus::Ok) };
    assert!((s - 6.0 / 7.0).abs() < 1e-12);
}

#[test]
fn pool_selection() {
    unsafe {
        let src = c("she go home");
        let pool = candrefine_pool_new(src.as_ptr());
        for t in ["she go home", "she goes home", "she goes home", "she went home"] {
            let t = c(t);
            assert_eq!(candrefine_pool_push(pool, t.as_ptr()), CandrefineStatus::Ok);
        }
        assert_eq!(candrefine_pool_len(pool), 4);

        let mut idx = -5i64;
        let mut text = ptr::null_mut();
        assert_eq!(
            candrefine_pool_select(pool, CandrefineMethod::Greedy as i32, &mut idx, &mut text),
            CandrefineStatus::Ok
        );
        assert_eq!((idx, take(text)), (0, "she go home".to_string()));

        assert_eq!(
            candrefine_pool_select(pool, CandrefineMethod::Mbrd as i32, &mut idx, &mut text),
            CandrefineStatus::Ok
        );
        assert_eq!((idx, take(text)), (1, "she goes home".to_string()));

        assert_eq!(
            candrefine_pool_select(pool, CandrefineMethod::OracleRank as i32, &mut idx, &mut text),
            CandrefineStatus::MissingTarget
        );
        let target = c("she went home");
        candrefine_pool_set_target(pool, target.as_ptr());
        assert_eq!(
            candrefine_pool_select(pool, CandrefineMethod::OracleRank as i32, &mut idx, &mut text),
            CandrefineStatus::Ok
        );
        assert_eq!((idx, take(text)), (3, "she went home".to_string()));

        assert_eq!(
            candrefine_pool_select(pool, CandrefineMethod::OracleCombine as i32, &mut idx, &mut text),
            CandrefineStatus::Ok
        );
        assert_eq!((idx, take(text)), (-1, "she went home".to_string()));

        assert_eq!(
            candrefine_pool_select(pool, 42, &mut idx, &mut text),
            CandrefineStatus::InvalidArgument
        );
        candrefine_pool_free(pool);
    }
}

#[test]
fn empty_pool_is_too_small() {
    unsafe {
        let src = c("x");
        let pool = candrefine_pool_new(src.as_ptr());
        let mut idx = 0i64;
        let mut text = ptr::null_mut();
        assert_eq!(
            candrefine_pool_select(pool, CandrefineMethod::Mbrd as i32, &mut idx, &mut text),
            CandrefineStatus::PoolTooSmall
        );
        assert!(text.is_null());
        candrefine_pool_free(pool);
    }
}

const GOLD: &str = "S he go to school .\nA 1 2|||SVA|||goes|||REQUIRED|||-NONE-|||0\n\nS I like dogs .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n";

#[test]
fn m2_parse_and_score() {
    unsafe {
        let text = c(GOLD);
        let mut doc = ptr::null_mut();
        assert_eq!(candrefine_m2_parse(text.as_ptr(), &mut doc), CandrefineStatus::Ok);
        assert_eq!(candrefine_m2_len(doc), 2);

        let hyps = [c("he goes to school ."), c("I like the dogs .")];
        let ptrs: Vec<*const c_char> = hyps.iter().map(|h| h.as_ptr()).collect();
        let mut prf = CandrefinePrf::default();
        assert_eq!(candrefine_m2_score(doc, ptrs.as_ptr(), 2, &mut prf), CandrefineStatus::Ok);
        assert_eq!((prf.tp, prf.fp, prf.fn_), (1, 1, 0));
        assert!((prf.precision - 0.5).abs() < 1e-12);
        assert!((prf.recall - 1.0).abs() < 1e-12);

        assert_eq!(
            candrefine_m2_score(doc, ptrs.as_ptr(), 1, &mut prf),
            CandrefineStatus::CorpusMismatch
        );
        candrefine_m2_free(doc);

        let bad = c("A 1 2|||x|||y|||REQUIRED|||-NONE-|||0\n");
        assert_eq!(candrefine_m2_parse(bad.as_ptr(), &mut doc), CandrefineStatus::ParseError);

        let missing = c("/nonexistent/gold.m2");
        assert_eq!(candrefine_m2_read(missing.as_ptr(), &mut doc), CandrefineStatus::IoError);
    }
}

#[test]
fn m2_read_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gold.m2");
    std::fs::write(&path, GOLD).unwrap();
    let p = c(path.to_str().unwrap());
    unsafe {
        let mut doc = ptr::null_mut();
        assert_eq!(candrefine_m2_read(p.as_ptr(), &mut doc), CandrefineStatus::Ok);
        assert_eq!(candrefine_m2_len(doc), 2);
        candrefine_m2_free(doc);
    }
}

#[test]
fn rouge_values() {
    let (h, r) = (c("the cat sat on the mat"), c("the cat was on the mat"));
    let mut prf = CandrefinePrf::default();
    unsafe {
        assert_eq!(candrefine_rouge_n(h.as_ptr(), r.as_ptr(), 2, &mut prf), CandrefineStatus::Ok);
        assert!((prf.f_beta - 0.6).abs() < 1e-12);
        assert_eq!(candrefine_rouge_n(h.as_ptr(), r.as_ptr(), 0, &mut prf), CandrefineStatus::InvalidArgument);
        let (h, r) = (c("a c d"), c("a b c d"));
        assert_eq!(candrefine_rouge_l(h.as_ptr(), r.as_ptr(), &mut prf), CandrefineStatus::Ok);
        assert!((prf.f_beta - 6.0 / 7.0).abs() < 1e-12);
    }
}

#[test]
fn f_beta_from_counts() {
    let mut f = 0.0;
    unsafe {
        assert_eq!(candrefine_f_beta(6, 2, 1, 0.5, &mut f), CandrefineStatus::Ok);
        assert!((f - 10.0 / 13.0).abs() < 1e-12);
        assert_eq!(candrefine_f_beta(-1, 0, 0, 0.5, &mut f), CandrefineStatus::InvalidArgument);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/candrefine.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for needle in ["CANDREFINE_STATUS_OK = 0", "CANDREFINE_METHOD_ORACLE_COMBINE = 3", "typedef struct CandrefinePool CandrefinePool"] {
        assert!(header.contains(needle), "{needle}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Ok(cc) = std::env::var("CC").or_else(|_| which("cc")) else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libcandrefine_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let manifest = env!("CARGO_MANIFEST_DIR");
    let status = std::process::Command::new(cc)
        .arg(format!("{manifest}/tests/smoke.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}

fn which(name: &str) -> Result<String, ()> {
    std::env::var_os("PATH")
        .and_then(|paths| {
            std::env::split_paths(&paths)
                .map(|p| p.join(name))
                .find(|p| p.is_file())
        })
        .map(|p| p.to_string_lossy().into_owned())
        .ok_or(())
}

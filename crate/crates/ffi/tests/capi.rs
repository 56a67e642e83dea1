use std::ffi::{CStr, CString};
use std::ptr;

use fo_enum_ffi::*;

const DOC: &str = "rel E 2\nnode a\nnode b\nnode c\nfact E a b\nfact E b a\nfact E b c\nfact E c b\n";

fn load(doc: &str) -> *mut FoStructure {
    let text = CString::new(doc).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { fo_structure_load(text.as_ptr(), &mut s) }, FoStatus::Ok);
    s
}

fn prepare(s: *const FoStructure, q: &str, radius: u64, degree: usize) -> Result<*mut FoQuery, FoStatus> {
    let q = CString::new(q).unwrap();
    let mut out = ptr::null_mut();
    match unsafe { fo_query_prepare(s, q.as_ptr(), radius, degree, &mut out) } {
        FoStatus::Ok => Ok(out),
        e => Err(e),
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fo_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn enumerate_through_handles() {
    let s = load(DOC);
    assert_eq!(unsafe { fo_structure_size(s) }, 3);
    let q = prepare(s, "E(x,y)", 0, 2).unwrap();
    // the query keeps the structure alive
    unsafe { fo_structure_free(s) };
    assert_eq!(unsafe { fo_query_arity(q) }, 2);
    assert!(unsafe { fo_query_preprocess_steps(q) } > 0);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { fo_cursor_open(q, &mut c) }, FoStatus::Ok);
    unsafe { fo_query_free(q) };
    let mut buf = [0u32; 2];
    let mut has = false;
    let mut got = Vec::new();
    loop {
        assert_eq!(unsafe { fo_cursor_next(c, buf.as_mut_ptr(), buf.len(), &mut has) }, FoStatus::Ok);
        if !has {
            break;
        }
        got.push(buf);
    }
    assert_eq!(got, vec![[0, 1], [1, 0], [1, 2], [2, 1]]);
    assert_eq!(unsafe { fo_cursor_emitted(c) }, 4);
    unsafe { fo_cursor_free(c) };
}

#[test]
fn error_codes() {
    let bad = CString::new("rel E 2\nfact E a b\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { fo_structure_load(bad.as_ptr(), &mut s) }, FoStatus::Parse);
    assert!(last_error().contains("undeclared element"));
    assert_eq!(unsafe { fo_structure_load(ptr::null(), &mut s) }, FoStatus::NullPointer);
    let invalid = [0xffu8, 0];
    assert_eq!(unsafe { fo_structure_load(invalid.as_ptr().cast(), &mut s) }, FoStatus::InvalidUtf8);

    let s = load(DOC);
    assert_eq!(prepare(s, "E(x,", 0, 0).unwrap_err(), FoStatus::Parse);
    assert_eq!(prepare(s, "E(x,y)", 0, 1).unwrap_err(), FoStatus::Precondition);
    assert!(last_error().contains("degree"));
    assert_eq!(prepare(ptr::null(), "E(x,y)", 0, 0).unwrap_err(), FoStatus::NullPointer);

    let q = prepare(s, "E(x,y)", 1, 0).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { fo_cursor_open(q, &mut c) }, FoStatus::Ok);
    let mut one = [0u32; 1];
    let mut has = false;
    assert_eq!(unsafe { fo_cursor_next(c, one.as_mut_ptr(), 1, &mut has) }, FoStatus::Buffer);
    assert_eq!(unsafe { fo_cursor_next(c, ptr::null_mut(), 2, &mut has) }, FoStatus::Buffer);
    unsafe {
        fo_cursor_free(c);
        fo_query_free(q);
        fo_structure_free(s);
        fo_cursor_free(ptr::null_mut());
    }
}

#[test]
fn element_names() {
    let s = load(DOC);
    let mut buf = [0 as std::ffi::c_char; 8];
    let mut needed = 0usize;
    assert_eq!(unsafe { fo_structure_element_name(s, 1, buf.as_mut_ptr(), buf.len(), &mut needed) }, FoStatus::Ok);
    assert_eq!(needed, 2);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "b");
    assert_eq!(unsafe { fo_structure_element_name(s, 1, buf.as_mut_ptr(), 1, &mut needed) }, FoStatus::Buffer);
    assert_eq!(unsafe { fo_structure_element_name(s, 9, buf.as_mut_ptr(), buf.len(), &mut needed) }, FoStatus::Precondition);
    unsafe { fo_structure_free(s) };
}

#[test]
fn sentence_yields_one_empty_answer() {
    let s = load(DOC);
    let q = prepare(s, "exists x exists y E(x,y)", 0, 0).unwrap();
    assert_eq!(unsafe { fo_query_arity(q) }, 0);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { fo_cursor_open(q, &mut c) }, FoStatus::Ok);
    let mut has = false;
    assert_eq!(unsafe { fo_cursor_next(c, ptr::null_mut(), 0, &mut has) }, FoStatus::Ok);
    assert!(has);
    assert_eq!(unsafe { fo_cursor_next(c, ptr::null_mut(), 0, &mut has) }, FoStatus::Ok);
    assert!(!has);
    unsafe {
        fo_cursor_free(c);
        fo_query_free(q);
        fo_structure_free(s);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/fo_enum.h");
    for name in [
        "fo_last_error_message",
        "fo_structure_load",
        "fo_structure_size",
        "fo_structure_element_name",
        "fo_structure_free",
        "fo_query_prepare",
        "fo_query_arity",
        "fo_query_preprocess_steps",
        "fo_query_free",
        "fo_cursor_open",
        "fo_cursor_next",
        "fo_cursor_emitted",
        "fo_cursor_free",
        "FO_STATUS_BUFFER = -4",
        "typedef struct FoCursor FoCursor;",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    let dir = std::env::temp_dir().join(format!("fo-enum-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"fo_enum.h\"\nint main(void) { FoStructure *s = 0; return fo_structure_load(\"\", &s) == FO_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    // skipped when there is no C compiler
    if let Ok(o) = std::process::Command::new(&cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include]).arg(&src).output() {
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
}

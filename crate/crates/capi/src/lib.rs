//! C ABI over the tree-embedding library.
//!
//! Hosts and trees are opaque handles created from the same text formats
//! the CLI reads; results come back as JSON strings allocated by this
//! library and released with [`tm_string_free`]. Functions return
//! [`TmStatus`]: zero for success, 3/4 for the not-found and budget
//! verdicts, negative codes for errors (details via [`tm_last_error`]).

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use libc::c_char;

use treembed::constants::Constants;
use treembed::dense::{dense_decomposition, expand, find_dense_seed};
use treembed::embed::{greedy_embed, AnchorConstraint, Traversal};
use treembed::graph::{validate_embedding, Embedding, Graph};
use treembed::num::parse_ratio;
use treembed::oracle::{brute_force_embed_counted, OracleVerdict};
use treembed::pipeline::{theorem1_embed, theorem2_embed};
use treembed::scan::scan_conjecture;
use treembed::tree::{bipartition, leaf_profile, separator, stable_set_s, Tree};

/// Status and error codes shared by every call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TmStatus {
    Ok = 0,
    /// The embedding attempt finished without an embedding.
    NotFound = 3,
    /// The exhaustive search ran out of budget.
    BudgetExceeded = 4,
    ErrParse = -1,
    ErrInvalid = -2,
    ErrSize = -3,
    ErrInternal = -4,
    ErrNull = -5,
    ErrUtf8 = -6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn code_of(e: &treembed::Error) -> TmStatus {
    match e {
        treembed::Error::Parse(_) => TmStatus::ErrParse,
        treembed::Error::InvalidInput(_) => TmStatus::ErrInvalid,
        treembed::Error::SizeLimit(_) => TmStatus::ErrSize,
        treembed::Error::Internal(_) => TmStatus::ErrInternal,
        treembed::Error::Io(_) => TmStatus::ErrInvalid,
    }
}

/// Message for the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a `tm_*` function and not freed yet.
#[no_mangle]
pub unsafe extern "C" fn tm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

pub struct TmGraph {
    inner: Graph,
}

pub struct TmTree {
    inner: Tree,
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, TmStatus> {
    if ptr.is_null() {
        set_error("null pointer");
        return Err(TmStatus::ErrNull);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        TmStatus::ErrUtf8
    })
}

fn give_string(out: *mut *mut c_char, text: String) -> TmStatus {
    if out.is_null() {
        set_error("null output pointer");
        return TmStatus::ErrNull;
    }
    let cleaned: String = text.chars().filter(|&c| c != '\0').collect();
    match CString::new(cleaned) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            TmStatus::Ok
        }
        Err(_) => {
            set_error("result contained an interior NUL");
            TmStatus::ErrInternal
        }
    }
}

fn guarded(body: impl FnOnce() -> TmStatus) -> TmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            TmStatus::ErrInternal
        }
    }
}

/// Parses an edge-list host graph (`n e` header, then `u v` lines).
///
/// # Safety
/// `text` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_graph_parse(text: *const c_char, out: *mut *mut TmGraph) -> TmStatus {
    guarded(|| {
        let text = match read_str(text) {
            Ok(t) => t,
            Err(code) => return code,
        };
        if out.is_null() {
            set_error("null output pointer");
            return TmStatus::ErrNull;
        }
        match Graph::parse_edge_list(text) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(TmGraph { inner: g }));
                TmStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                code_of(&e)
            }
        }
    })
}

/// Parses a tree (`n` header, `n-1` edges, optional `root r` line).
///
/// # Safety
/// `text` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_tree_parse(text: *const c_char, out: *mut *mut TmTree) -> TmStatus {
    guarded(|| {
        let text = match read_str(text) {
            Ok(t) => t,
            Err(code) => return code,
        };
        if out.is_null() {
            set_error("null output pointer");
            return TmStatus::ErrNull;
        }
        match Tree::parse_text(text) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(TmTree { inner: t }));
                TmStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                code_of(&e)
            }
        }
    })
}

/// # Safety
/// `g` must come from [`tm_graph_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tm_graph_free(g: *mut TmGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `t` must come from [`tm_tree_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tm_tree_free(t: *mut TmTree) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Vertex count, or -1 on a null handle.
///
/// # Safety
/// `g` must be a live graph handle or null.
#[no_mangle]
pub unsafe extern "C" fn tm_graph_n(g: *const TmGraph) -> i64 {
    if g.is_null() {
        return -1;
    }
    (*g).inner.n() as i64
}

/// # Safety
/// `t` must be a live tree handle or null.
#[no_mangle]
pub unsafe extern "C" fn tm_tree_n(t: *const TmTree) -> i64 {
    if t.is_null() {
        return -1;
    }
    (*t).inner.n() as i64
}

#[derive(serde::Serialize)]
struct EmbedJson {
    tree_n: usize,
    map: Vec<Option<usize>>,
    status: String,
    stuck_at: Option<usize>,
}

/// Embeds the tree into the host. `method` is one of `auto`, `theorem1`,
/// `theorem2`, `greedy`, `brute`; `constants` is an optional key=value
/// block (the same format the CLI reads). Writes an embedding JSON and
/// returns 0 (found), 3 (not found) or 4 (budget exhausted).
///
/// # Safety
/// `tree` and `graph` must be live handles; `method` NUL-terminated;
/// `constants` NUL-terminated or null; `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_embed(
    tree: *const TmTree,
    graph: *const TmGraph,
    method: *const c_char,
    constants: *const c_char,
    seed: u64,
    budget: u64,
    json_out: *mut *mut c_char,
) -> TmStatus {
    guarded(|| {
        if tree.is_null() || graph.is_null() {
            set_error("null handle");
            return TmStatus::ErrNull;
        }
        let t = &(*tree).inner;
        let g = &(*graph).inner;
        let method = match read_str(method) {
            Ok(s) => s,
            Err(code) => return code,
        };
        let consts = match constants.is_null() {
            true => Constants::defaults(t.edge_count()),
            false => {
                let text = match read_str(constants) {
                    Ok(s) => s,
                    Err(code) => return code,
                };
                match Constants::parse(text) {
                    Ok(c) => c,
                    Err(e) => {
                        set_error(&e.to_string());
                        return code_of(&e);
                    }
                }
            }
        };
        let emit = |status: &str, map: Option<&Embedding>, stuck_at: Option<usize>| EmbedJson {
            tree_n: t.n(),
            map: match map {
                Some(f) => f.as_slice().to_vec(),
                None => vec![None; t.n()],
            },
            status: status.to_string(),
            stuck_at,
        };
        let outcome = match method {
            "greedy" => Some(greedy_embed(
                t,
                g,
                &AnchorConstraint::none(),
                Traversal::Bfs,
            )),
            "theorem1" => Some(theorem1_embed(t, g, &consts).map(|p| p.outcome)),
            "theorem2" => Some(theorem2_embed(t, g, &consts, seed).map(|p| p.outcome)),
            "auto" => match theorem2_embed(t, g, &consts, seed) {
                Ok(p) if p.outcome.is_success() => Some(Ok(p.outcome)),
                Ok(_) => None,
                Err(e) => Some(Err(e)),
            },
            "brute" => None,
            other => {
                set_error(&format!("unknown method '{other}'"));
                return TmStatus::ErrInvalid;
            }
        };
        match outcome {
            Some(Ok(out)) => {
                let status = if out.is_success() { "success" } else { "stuck" };
                let json = emit(status, Some(&out.map), out.stuck_at);
                let code = give_string(json_out, serde_json::to_string(&json).unwrap());
                if code != TmStatus::Ok {
                    return code;
                }
                if out.is_success() {
                    TmStatus::Ok
                } else {
                    TmStatus::NotFound
                }
            }
            Some(Err(e)) => {
                set_error(&e.to_string());
                code_of(&e)
            }
            None => {
                let (verdict, _) = brute_force_embed_counted(t, g, budget);
                match verdict {
                    OracleVerdict::Found(f) => {
                        let json = emit("success", Some(&f), None);
                        let code = give_string(json_out, serde_json::to_string(&json).unwrap());
                        if code != TmStatus::Ok {
                            code
                        } else {
                            TmStatus::Ok
                        }
                    }
                    OracleVerdict::None => {
                        let json = emit("none", None, None);
                        let code = give_string(json_out, serde_json::to_string(&json).unwrap());
                        if code != TmStatus::Ok {
                            code
                        } else {
                            TmStatus::NotFound
                        }
                    }
                    OracleVerdict::BudgetExceeded => {
                        let json = emit("budget_exceeded", None, None);
                        let code = give_string(json_out, serde_json::to_string(&json).unwrap());
                        if code != TmStatus::Ok {
                            code
                        } else {
                            TmStatus::BudgetExceeded
                        }
                    }
                }
            }
        }
    })
}

/// Validates an embedding JSON (either a bare map array or an object with
/// a `map` field). Returns 0 when the map is a complete valid embedding,
/// 3 otherwise; the full report lands in `json_out`.
///
/// # Safety
/// Handles live, strings NUL-terminated, `json_out` valid.
#[no_mangle]
pub unsafe extern "C" fn tm_validate(
    tree: *const TmTree,
    graph: *const TmGraph,
    embedding_json: *const c_char,
    json_out: *mut *mut c_char,
) -> TmStatus {
    guarded(|| {
        if tree.is_null() || graph.is_null() {
            set_error("null handle");
            return TmStatus::ErrNull;
        }
        let t = &(*tree).inner;
        let g = &(*graph).inner;
        let text = match read_str(embedding_json) {
            Ok(s) => s,
            Err(code) => return code,
        };
        let value: serde_json::Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => {
                set_error(&format!("embedding JSON: {e}"));
                return TmStatus::ErrParse;
            }
        };
        let map_value = value.get("map").cloned().unwrap_or(value);
        let raw: Vec<Option<usize>> = match serde_json::from_value(map_value) {
            Ok(v) => v,
            Err(e) => {
                set_error(&format!("embedding map: {e}"));
                return TmStatus::ErrParse;
            }
        };
        let mut f = Embedding::new(raw.len());
        for (v, img) in raw.iter().enumerate() {
            if let Some(h) = img {
                f.set(v, *h);
            }
        }
        let report = validate_embedding(t, g, &f);
        let ok = report.complete_valid;
        let code = give_string(json_out, serde_json::to_string(&report).unwrap());
        if code != TmStatus::Ok {
            return code;
        }
        if ok {
            TmStatus::Ok
        } else {
            TmStatus::NotFound
        }
    })
}

/// Separator, stable set, bipartition and leaf profile of a tree as JSON.
///
/// # Safety
/// `tree` live, `json_out` valid.
#[no_mangle]
pub unsafe extern "C" fn tm_analyze_tree(
    tree: *const TmTree,
    json_out: *mut *mut c_char,
) -> TmStatus {
    guarded(|| {
        if tree.is_null() {
            set_error("null handle");
            return TmStatus::ErrNull;
        }
        let t = &(*tree).inner;
        let root = t.root().unwrap_or(0);
        let stable = if t.n() >= 2 {
            match stable_set_s(t, root) {
                Ok(s) => Some(s),
                Err(e) => {
                    set_error(&e.to_string());
                    return code_of(&e);
                }
            }
        } else {
            None
        };
        let leaves = if t.n() >= 2 {
            leaf_profile(t).ok().map(|(total, max, at)| {
                serde_json::json!({
                    "total_leaves": total,
                    "max_leaf_children": max,
                    "argmax_vertex": at,
                })
            })
        } else {
            None
        };
        let out = serde_json::json!({
            "n": t.n(),
            "root": root,
            "separator": separator(t),
            "stable_set": stable,
            "bipartition": bipartition(t),
            "leaf_profile": leaves,
        });
        give_string(json_out, out.to_string())
    })
}

/// Dense-structure report: `mode` is `seed` or `decompose`; `alpha` is a
/// rational like `0.2` or `1/5`.
///
/// # Safety
/// `graph` live, strings NUL-terminated, `json_out` valid.
#[no_mangle]
pub unsafe extern "C" fn tm_detect_dense(
    graph: *const TmGraph,
    m: usize,
    alpha: *const c_char,
    mode: *const c_char,
    json_out: *mut *mut c_char,
) -> TmStatus {
    guarded(|| {
        if graph.is_null() {
            set_error("null handle");
            return TmStatus::ErrNull;
        }
        let g = &(*graph).inner;
        let alpha = match read_str(alpha).and_then(|s| {
            parse_ratio(s).map_err(|e| {
                set_error(&e.to_string());
                TmStatus::ErrParse
            })
        }) {
            Ok(a) => a,
            Err(code) => return code,
        };
        let mode = match read_str(mode) {
            Ok(s) => s,
            Err(code) => return code,
        };
        let text = match mode {
            "seed" => match find_dense_seed(g, m, alpha) {
                Ok((seed, failures)) => {
                    let expanded = seed.map(|w| expand(&w, g));
                    serde_json::json!({
                        "witness": expanded,
                        "failed_candidates": failures.len(),
                    })
                    .to_string()
                }
                Err(e) => {
                    set_error(&e.to_string());
                    return code_of(&e);
                }
            },
            "decompose" => match dense_decomposition(g, m, alpha) {
                Ok(result) => serde_json::to_string(&result).unwrap(),
                Err(e) => {
                    set_error(&e.to_string());
                    return code_of(&e);
                }
            },
            other => {
                set_error(&format!("unknown mode '{other}'"));
                return TmStatus::ErrInvalid;
            }
        };
        give_string(json_out, text)
    })
}

/// Runs a conjecture scan and writes the report JSON.
///
/// # Safety
/// `json_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_scan(
    m: usize,
    hosts: usize,
    seed: u64,
    budget: u64,
    json_out: *mut *mut c_char,
) -> TmStatus {
    guarded(|| match scan_conjecture(m, hosts, seed, budget) {
        Ok(report) => give_string(json_out, serde_json::to_string(&report).unwrap()),
        Err(e) => {
            set_error(&e.to_string());
            code_of(&e)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    unsafe fn take_string(ptr: *mut c_char) -> String {
        let s = CStr::from_ptr(ptr).to_str().unwrap().to_string();
        tm_string_free(ptr);
        s
    }

    #[test]
    fn parse_embed_validate_round_trip() {
        unsafe {
            let gtext = cstr("4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
            let ttext = cstr("4\n0 1\n1 2\n2 3\n");
            let mut g: *mut TmGraph = std::ptr::null_mut();
            let mut t: *mut TmTree = std::ptr::null_mut();
            assert!(tm_graph_parse(gtext.as_ptr(), &mut g) == TmStatus::Ok);
            assert!(tm_tree_parse(ttext.as_ptr(), &mut t) == TmStatus::Ok);
            assert_eq!(tm_graph_n(g), 4);
            assert_eq!(tm_tree_n(t), 4);

            let method = cstr("greedy");
            let mut json: *mut c_char = std::ptr::null_mut();
            let code = tm_embed(t, g, method.as_ptr(), std::ptr::null(), 0, 1000, &mut json);
            assert!(code == TmStatus::Ok);
            let embedding = take_string(json);
            assert!(embedding.contains("\"status\":\"success\""));

            let emb_c = cstr(&embedding);
            let mut report: *mut c_char = std::ptr::null_mut();
            let code = tm_validate(t, g, emb_c.as_ptr(), &mut report);
            assert!(code == TmStatus::Ok);
            let report = take_string(report);
            assert!(report.contains("\"complete_valid\":true"));

            tm_graph_free(g);
            tm_tree_free(t);
        }
    }

    #[test]
    fn brute_not_found_reports_three() {
        unsafe {
            let gtext = cstr("5 5\n0 1\n1 2\n2 3\n3 4\n0 4\n");
            let ttext = cstr("5\n0 1\n0 2\n0 3\n0 4\n");
            let mut g: *mut TmGraph = std::ptr::null_mut();
            let mut t: *mut TmTree = std::ptr::null_mut();
            assert!(tm_graph_parse(gtext.as_ptr(), &mut g) == TmStatus::Ok);
            assert!(tm_tree_parse(ttext.as_ptr(), &mut t) == TmStatus::Ok);
            let method = cstr("brute");
            let mut json: *mut c_char = std::ptr::null_mut();
            let code = tm_embed(
                t,
                g,
                method.as_ptr(),
                std::ptr::null(),
                0,
                1_000_000,
                &mut json,
            );
            assert!(code == TmStatus::NotFound);
            let text = take_string(json);
            assert!(text.contains("\"status\":\"none\""));
            tm_graph_free(g);
            tm_tree_free(t);
        }
    }

    #[test]
    fn errors_set_messages() {
        unsafe {
            let bad = cstr("not a graph");
            let mut g: *mut TmGraph = std::ptr::null_mut();
            let code = tm_graph_parse(bad.as_ptr(), &mut g);
            assert!(code == TmStatus::ErrParse);
            let msg = CStr::from_ptr(tm_last_error()).to_str().unwrap();
            assert!(!msg.is_empty());

            let code = tm_graph_parse(std::ptr::null(), &mut g);
            assert!(code == TmStatus::ErrNull);
        }
    }

    #[test]
    fn analyze_and_detect() {
        unsafe {
            let ttext = cstr("5\n0 1\n0 2\n0 3\n0 4\n");
            let mut t: *mut TmTree = std::ptr::null_mut();
            assert!(tm_tree_parse(ttext.as_ptr(), &mut t) == TmStatus::Ok);
            let mut json: *mut c_char = std::ptr::null_mut();
            assert!(tm_analyze_tree(t, &mut json) == TmStatus::Ok);
            let text = take_string(json);
            assert!(text.contains("\"separator\""));
            tm_tree_free(t);

            let gtext = cstr(&treembed::Graph::complete(13).to_edge_list());
            let mut g: *mut TmGraph = std::ptr::null_mut();
            assert!(tm_graph_parse(gtext.as_ptr(), &mut g) == TmStatus::Ok);
            let alpha = cstr("0.2");
            let mode = cstr("seed");
            let mut json: *mut c_char = std::ptr::null_mut();
            assert!(
                tm_detect_dense(g, 12, alpha.as_ptr(), mode.as_ptr(), &mut json) == TmStatus::Ok
            );
            let text = take_string(json);
            assert!(text.contains("clique_dense"));
            tm_graph_free(g);
        }
    }
}

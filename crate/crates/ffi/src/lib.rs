//! C ABI over `mqe-core`.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `_free`. Fallible functions return an [`MqeStatus`]; the message of the
//! last failure on the calling thread is available from
//! [`mqe_last_error_message`]. Panics are caught at the boundary and
//! reported as [`MqeStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mqe_core::error::MqeError;
use mqe_core::geometry::Provenance;
use mqe_core::{build_mqe, observables, theory, UserSet};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MqeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericFailure = 3,
    ReconstructionFailure = 4,
    OutOfRange = 5,
    Internal = 6,
}

/// Set of user positions.
pub struct MqeUserSet(UserSet);

/// Built MQE network.
pub struct MqeNetwork(mqe_core::MqeNetwork);

/// Pair-averaged observables of a network.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MqeObservables {
    pub q_star: f64,
    pub l_star: f64,
    pub l_star_budget: f64,
    pub q_min: f64,
    pub rho: f64,
    pub efficiency: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &MqeError) -> MqeStatus {
    match err {
        MqeError::NumericFailure(_) => MqeStatus::NumericFailure,
        MqeError::ReconstructionFailure { .. } => MqeStatus::ReconstructionFailure,
        _ => MqeStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), (MqeStatus, String)>>(f: F) -> MqeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MqeStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside mqe".into());
            MqeStatus::Internal
        }
    }
}

fn core<T>(r: mqe_core::error::Result<T>) -> Result<T, (MqeStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (MqeStatus, String) {
    (MqeStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mqe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Samples `n` users uniformly in a `side x side` square.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mqe_users_sample(
    n: usize,
    side: f64,
    lambda0: f64,
    seed: u64,
    out: *mut *mut MqeUserSet,
) -> MqeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let set = core(UserSet::sample(n, side, lambda0, seed))?;
        *out = Box::into_raw(Box::new(MqeUserSet(set)));
        Ok(())
    })
}

/// Users from `n` interleaved `x, y` coordinates (`2 n` doubles).
///
/// # Safety
/// `coords` must point to `2 * n` readable doubles and `out` to writable
/// storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mqe_users_from_coords(
    coords: *const f64,
    n: usize,
    side: f64,
    lambda0: f64,
    out: *mut *mut MqeUserSet,
) -> MqeStatus {
    guard(|| {
        if coords.is_null() {
            return Err(null("coords"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let flat = std::slice::from_raw_parts(coords, 2 * n);
        let pts = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let set = core(UserSet::new(pts, side, lambda0, Provenance::Explicit))?;
        *out = Box::into_raw(Box::new(MqeUserSet(set)));
        Ok(())
    })
}

/// Number of users, or 0 for a null handle.
///
/// # Safety
/// `users` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mqe_users_len(users: *const MqeUserSet) -> usize {
    users.as_ref().map_or(0, |u| u.0.len())
}

/// Copies the coordinates of user `i` into `xy[0..2]`.
///
/// # Safety
/// `users` must be a live handle and `xy` must point to 2 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mqe_users_point(users: *const MqeUserSet, i: usize, xy: *mut f64) -> MqeStatus {
    guard(|| {
        let u = users.as_ref().ok_or_else(|| null("users"))?;
        if xy.is_null() {
            return Err(null("xy"));
        }
        let p = u.0.points().get(i).ok_or((MqeStatus::OutOfRange, format!("user {i} out of range")))?;
        *xy = p[0];
        *xy.add(1) = p[1];
        Ok(())
    })
}

/// # Safety
/// `users` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn mqe_users_free(users: *mut MqeUserSet) {
    if !users.is_null() {
        drop(Box::from_raw(users));
    }
}

/// Builds the MQE network for trade-off `alpha` and eavesdropping
/// probability `p`. `users` is not consumed.
///
/// # Safety
/// `users` must be a live handle and `out` writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mqe_network_build(
    users: *const MqeUserSet,
    alpha: f64,
    p: f64,
    out: *mut *mut MqeNetwork,
) -> MqeStatus {
    guard(|| {
        let u = users.as_ref().ok_or_else(|| null("users"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let net = core(build_mqe(&u.0, alpha, p))?;
        *out = Box::into_raw(Box::new(MqeNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn mqe_network_free(net: *mut MqeNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of links, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mqe_network_edge_count(net: *const MqeNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.edges().len())
}

/// Writes up to `capacity` links as `i, j` pairs into `pairs[0..2 capacity]`
/// and the total link count into `written`.
///
/// # Safety
/// `net` must be a live handle, `pairs` must point to `2 * capacity`
/// writable `usize`s and `written` to one.
#[no_mangle]
pub unsafe extern "C" fn mqe_network_edges(
    net: *const MqeNetwork,
    pairs: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> MqeStatus {
    guard(|| {
        let n = net.as_ref().ok_or_else(|| null("net"))?;
        if written.is_null() || (pairs.is_null() && capacity > 0) {
            return Err(null("output buffer"));
        }
        let edges = n.0.edges();
        for (k, &(i, j)) in edges.iter().take(capacity).enumerate() {
            *pairs.add(2 * k) = i;
            *pairs.add(2 * k + 1) = j;
        }
        *written = edges.len();
        Ok(())
    })
}

/// Writes the stored `a -> b` path into `nodes[0..capacity]` and its node
/// count into `len`. When `capacity < *len` nothing is written to `nodes`.
///
/// # Safety
/// `net` must be a live handle, `nodes` must point to `capacity` writable
/// `usize`s and `len` to one.
#[no_mangle]
pub unsafe extern "C" fn mqe_network_path(
    net: *const MqeNetwork,
    a: usize,
    b: usize,
    nodes: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> MqeStatus {
    guard(|| {
        let n = net.as_ref().ok_or_else(|| null("net"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        let size = n.0.len();
        if a >= size || b >= size || a == b {
            return Err((MqeStatus::OutOfRange, format!("bad pair ({a}, {b}) for {size} users")));
        }
        let path = n.0.path_nodes(a, b);
        *len = path.len();
        if capacity >= path.len() {
            if nodes.is_null() {
                return Err(null("nodes"));
            }
            ptr::copy_nonoverlapping(path.as_ptr(), nodes, path.len());
        }
        Ok(())
    })
}

/// Capacitance, budget and efficiency of the `a -> b` path.
///
/// # Safety
/// `net` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn mqe_network_pair(
    net: *const MqeNetwork,
    a: usize,
    b: usize,
    capacitance: *mut f64,
    m_star: *mut usize,
    efficiency: *mut f64,
) -> MqeStatus {
    guard(|| {
        let n = net.as_ref().ok_or_else(|| null("net"))?;
        let size = n.0.len();
        if a >= size || b >= size || a == b {
            return Err((MqeStatus::OutOfRange, format!("bad pair ({a}, {b}) for {size} users")));
        }
        if let Some(c) = capacitance.as_mut() {
            *c = n.0.pair_capacitance(a, b);
        }
        if let Some(m) = m_star.as_mut() {
            *m = n.0.m_star(a, b);
        }
        if let Some(e) = efficiency.as_mut() {
            *e = n.0.pair_efficiency(a, b);
        }
        Ok(())
    })
}

/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mqe_network_observables(net: *const MqeNetwork, out: *mut MqeObservables) -> MqeStatus {
    guard(|| {
        let n = net.as_ref().ok_or_else(|| null("net"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let o = observables(&n.0);
        *out = MqeObservables {
            q_star: o.q_star,
            l_star: o.l_star,
            l_star_budget: o.l_star_budget,
            q_min: o.q_min,
            rho: o.rho,
            efficiency: o.efficiency,
        };
        Ok(())
    })
}

fn scalar(out: *mut f64, f: impl FnOnce() -> mqe_core::error::Result<f64>) -> MqeStatus {
    guard(|| {
        // SAFETY: callers of the exported wrappers guarantee `out` is null or writable.
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = core(f())?;
        Ok(())
    })
}

/// Capacitance of a link of length `d`, in bits per use.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mqe_link_capacitance(d: f64, lambda0: f64, out: *mut f64) -> MqeStatus {
    scalar(out, || mqe_core::link_capacitance(d, lambda0))
}

/// Trade-off value at which the `m - 1 -> m` relay transition happens for
/// short links.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mqe_alpha_c_step(m: usize, p: f64, out: *mut f64) -> MqeStatus {
    scalar(out, || theory::alpha_c_step(m, p))
}

/// Mean direct-link capacitance of uniform users in a square of side
/// `l_over_lambda`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mqe_q_fc(l_over_lambda: f64, out: *mut f64) -> MqeStatus {
    scalar(out, || theory::q_fc(l_over_lambda))
}

/// Bottleneck capacitance of the maximum spanning tree of `n` users.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mqe_q_mst(n: usize, l_over_lambda: f64, out: *mut f64) -> MqeStatus {
    scalar(out, || theory::q_mst(n, l_over_lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&MqeError::NumericFailure("x".into())), MqeStatus::NumericFailure);
        assert_eq!(status_of(&MqeError::InvalidArgument("x".into())), MqeStatus::InvalidArgument);
    }

    #[test]
    fn error_message_is_thread_local() {
        let mut v = 0.0;
        assert_eq!(unsafe { mqe_link_capacitance(-1.0, 1.0, &mut v) }, MqeStatus::InvalidArgument);
        let msg = unsafe { CStr::from_ptr(mqe_last_error_message()) }.to_str().unwrap().to_owned();
        assert!(!msg.is_empty());
        std::thread::spawn(|| assert!(mqe_last_error_message().is_null())).join().unwrap();
    }
}

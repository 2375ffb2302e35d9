//! Ferromagnetic fixed points: positive solutions of `F(u) = u` off M1.
//!
//! With `v_i = sqrt(u_i)` the fixed-point system reads
//!
//! ```text
//! v1 = alpha (b v1^2 + v2^2 / b)      v3 = (v1^2 / b + b v2^2) / alpha
//! v2 = (b v3^2 + v4^2 / b) / alpha    v4 = alpha (v3^2 / b + b v4^2)
//! ```
//!
//! The first equation gives `v2(v1)`, the third `v3(v1)`, and the fourth is
//! a quadratic in `v4` with two branches. What remains is one scalar
//! equation in `v1` on the bounded interval `(0, 1/(alpha b))`, scanned on
//! both branches and polished with Newton's method on the full system.
//! Every solution off M1 obeys `v1 + v4 = phi(v2 + v3)`, which
//! [`closure_residual`] expresses in terms of the free sum `C = v2 + v3`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    f_map_raw, m1_residual, m2_residual, max_norm, phi, BoltzmannParams, StateVector,
};

/// Acceptance bound on `|F(u) - u| / |u|` and on the M2 residual.
pub const ACCEPT_TOL: f64 = 1e-9;
/// Minimum distance from M1 for a ferromagnetic candidate.
pub const MIN_M1_DISTANCE: f64 = 1e-3;
/// Components below this fraction of `|u|` mark a degenerate candidate.
pub const DEGENERATE_FRACTION: f64 = 1e-12;
/// Scan points per end of the two-ended geometric `v1` grid.
pub const GRID_POINTS_PER_END: usize = 2048;
/// Smallest relative offset from either end of the `v1` interval.
const GRID_EDGE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M2Candidate {
    /// The free sum `v2 + v3`.
    pub c: f64,
    /// Square roots of the components of `u`.
    pub v: [f64; 4],
    pub u: StateVector,
    /// `|F(u) - u| / |u|` in the max-norm.
    pub full_residual: f64,
    /// Set when the point was added as the spin flip of another solution
    /// rather than found by the scan.
    pub flip_partner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M2Report {
    /// Accepted candidates sorted by `(c, v1)`.
    pub candidates: Vec<M2Candidate>,
    /// Polished fixed points within [`MIN_M1_DISTANCE`] of M1 but not on it.
    pub near_m1: usize,
    /// Fixed points off M1 rejected for a component below
    /// [`DEGENERATE_FRACTION`] of the norm (deep in the ordered phase).
    pub degenerate: usize,
    /// Sign changes whose polish did not meet [`ACCEPT_TOL`].
    pub unresolved: usize,
}

/// `v2 = sqrt(b (v1 / alpha - b v1^2))`; `None` when the radicand is negative.
pub fn v2_from_v1(p: &BoltzmannParams, v1: f64) -> Option<f64> {
    let rad = p.b() * (v1 / p.alpha() - p.b() * v1 * v1);
    (rad >= 0.0).then(|| rad.sqrt())
}

/// Residual `v2 - (b v3^2 + v4^2 / b) / alpha` of the second fixed-point
/// equation after setting `v2 = v2_from_v1`, `v3 = C - v2` and
/// `v4 = phi(C) - v1`.
pub fn closure_residual(p: &BoltzmannParams, c: f64, v1: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("C = {c} is not a positive number")));
    }
    if !(v1 > 0.0) {
        return Err(Error::Domain(format!("v1 = {v1} is not positive")));
    }
    let phi_c = phi(p, c).map_err(|e| Error::Domain(e.to_string()))?;
    let v2 =
        v2_from_v1(p, v1).ok_or_else(|| Error::Domain(format!("v1 = {v1} exceeds 1/(alpha b)")))?;
    let v3 = c - v2;
    let v4 = phi_c - v1;
    if v3 < 0.0 || v4 < 0.0 {
        return Err(Error::Domain(format!(
            "negative component: v3 = {v3}, v4 = {v4}"
        )));
    }
    let (alpha, b) = (p.alpha(), p.b());
    Ok(v2 - (b * v3 * v3 + v4 * v4 / b) / alpha)
}

/// Branch of the quadratic for `v4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Minus,
    Plus,
}

/// `v` built from `v1` by the first, third and fourth equations.
fn eliminate(p: &BoltzmannParams, v1: f64, branch: Branch) -> Option<[f64; 4]> {
    let (alpha, b) = (p.alpha(), p.b());
    let v2 = v2_from_v1(p, v1)?;
    let v3 = (v1 * v1 / b + b * v2 * v2) / alpha;
    // alpha b v4^2 - v4 + alpha v3^2 / b = 0
    let disc = 1.0 - 4.0 * alpha * alpha * v3 * v3;
    if !(disc >= 0.0) {
        return None;
    }
    let s = disc.sqrt();
    let v4 = match branch {
        // small root in cancellation-free form
        Branch::Minus => 2.0 * alpha * v3 * v3 / (b * (1.0 + s)),
        Branch::Plus => (1.0 + s) / (2.0 * alpha * b),
    };
    Some([v1, v2, v3, v4])
}

fn second_equation(p: &BoltzmannParams, v: &[f64; 4]) -> f64 {
    v[1] - (p.b() * v[2] * v[2] + v[3] * v[3] / p.b()) / p.alpha()
}

fn system(p: &BoltzmannParams, v: &Vector4<f64>) -> Vector4<f64> {
    let (alpha, b) = (p.alpha(), p.b());
    let ib = 1.0 / b;
    Vector4::new(
        v[0] - alpha * (b * v[0] * v[0] + ib * v[1] * v[1]),
        v[1] - (b * v[2] * v[2] + ib * v[3] * v[3]) / alpha,
        v[2] - (ib * v[0] * v[0] + b * v[1] * v[1]) / alpha,
        v[3] - alpha * (ib * v[2] * v[2] + b * v[3] * v[3]),
    )
}

fn jacobian(p: &BoltzmannParams, v: &Vector4<f64>) -> Matrix4<f64> {
    let (alpha, b) = (p.alpha(), p.b());
    let ib = 1.0 / b;
    let (ia, two) = (1.0 / alpha, 2.0);
    Matrix4::new(
        1.0 - two * alpha * b * v[0],
        -two * alpha * ib * v[1],
        0.0,
        0.0,
        0.0,
        1.0,
        -two * ia * b * v[2],
        -two * ia * ib * v[3],
        -two * ia * ib * v[0],
        -two * ia * b * v[1],
        1.0,
        0.0,
        0.0,
        0.0,
        -two * alpha * ib * v[2],
        1.0 - two * alpha * b * v[3],
    )
}

/// Newton's method on the four square-root equations.
fn newton_polish(p: &BoltzmannParams, v0: [f64; 4]) -> Option<[f64; 4]> {
    let mut v = Vector4::from(v0);
    let scale = v.amax();
    for _ in 0..50 {
        let g = system(p, &v);
        let step = jacobian(p, &v).lu().solve(&g)?;
        v -= step;
        if !v.iter().all(|x| x.is_finite()) {
            return None;
        }
        if step.amax() <= 1e-16 * scale.max(v.amax()) {
            break;
        }
    }
    Some([v[0], v[1], v[2], v[3]])
}

/// Relative max-norm residual `|F(u) - u| / |u|`.
pub fn full_residual(p: &BoltzmannParams, u: &StateVector) -> f64 {
    let a = u.as_array();
    let fu = f_map_raw(p, &a);
    let d = fu
        .iter()
        .zip(&a)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    d / max_norm(&a)
}

/// Two-ended geometric grid over `(0, hi)`, ascending.
fn v1_grid(hi: f64) -> Vec<f64> {
    let n = GRID_POINTS_PER_END;
    let ratio = (0.5 / GRID_EDGE).powf(1.0 / (n - 1) as f64);
    let low: Vec<f64> = (0..n).map(|k| GRID_EDGE * ratio.powi(k as i32)).collect();
    let mut t = low.clone();
    t.extend(low.iter().rev().skip(1).map(|s| 1.0 - s));
    t.into_iter().map(|s| s * hi).collect()
}

fn bisect(p: &BoltzmannParams, branch: Branch, mut lo: f64, mut hi: f64) -> Option<f64> {
    let sign = |x: f64| eliminate(p, x, branch).map(|v| second_equation(p, &v));
    let mut f_lo = sign(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = sign(mid)?;
        if f_mid == 0.0 {
            return Some(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Starting vectors for the Newton polish: sign changes of the reduced
/// equation on each branch, plus branch junctions where the reduced
/// equation changes sign across the fold.
fn seeds(p: &BoltzmannParams) -> Vec<[f64; 4]> {
    let grid = v1_grid(1.0 / (p.alpha() * p.b()));
    let mut out = Vec::new();
    let eval = |x: f64, br: Branch| eliminate(p, x, br).map(|v| (v, second_equation(p, &v)));

    for branch in [Branch::Minus, Branch::Plus] {
        let mut prev: Option<(f64, f64)> = None;
        for &x in &grid {
            let cur = eval(x, branch).map(|(_, r)| r);
            if let (Some((x0, r0)), Some(r1)) = (prev, cur) {
                if r1 == 0.0 || (r0 > 0.0) != (r1 > 0.0) {
                    if let Some(root) = bisect(p, branch, x0, x) {
                        if let Some((v, _)) = eval(root, branch) {
                            out.push(v);
                        }
                    }
                }
            }
            prev = cur.map(|r| (x, r));
        }
    }

    // fold points: feasibility of the v4 quadratic switches between grid nodes
    for w in grid.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let f0 = eliminate(p, x0, Branch::Minus).is_some();
        let f1 = eliminate(p, x1, Branch::Minus).is_some();
        if f0 == f1 {
            continue;
        }
        let (mut inside, mut outside) = if f0 { (x0, x1) } else { (x1, x0) };
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if eliminate(p, mid, Branch::Minus).is_some() {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        if let (Some((vm, rm)), Some((_, rp))) =
            (eval(inside, Branch::Minus), eval(inside, Branch::Plus))
        {
            if (rm > 0.0) != (rp > 0.0) {
                out.push(vm);
            }
        }
    }
    out
}

fn candidate(p: &BoltzmannParams, v: [f64; 4], flip_partner: bool) -> Option<M2Candidate> {
    if !v.iter().all(|x| *x > 0.0 && x.is_finite()) {
        return None;
    }
    let u = StateVector::from_array(v.map(|x| x * x)).ok()?;
    Some(M2Candidate {
        c: v[1] + v[2],
        v,
        u,
        full_residual: full_residual(p, &u),
        flip_partner,
    })
}

fn is_degenerate(c: &M2Candidate) -> bool {
    let norm = c.u.max_norm();
    c.u.as_array()
        .iter()
        .any(|x| *x < DEGENERATE_FRACTION * norm)
}

fn accepted(p: &BoltzmannParams, c: &M2Candidate) -> bool {
    c.full_residual <= ACCEPT_TOL
        && m1_residual(&c.u) > MIN_M1_DISTANCE
        && !is_degenerate(c)
        && m2_residual(p, &c.u).is_ok_and(|r| r <= ACCEPT_TOL)
}

fn same_point(a: &M2Candidate, b: &M2Candidate) -> bool {
    let (x, y) = (a.u.as_array(), b.u.as_array());
    let scale = a.u.max_norm().max(b.u.max_norm());
    x.iter().zip(&y).all(|(s, t)| (s - t).abs() <= 1e-7 * scale)
}

/// All ferromagnetic fixed points together with scan diagnostics.
pub fn solve_m2_report(p: &BoltzmannParams) -> M2Report {
    let mut found: Vec<M2Candidate> = Vec::new();
    let (mut near_m1, mut degenerate, mut unresolved) = (0, 0, 0);
    let mut degenerate_seen: Vec<M2Candidate> = Vec::new();

    for seed in seeds(p) {
        let Some(c) = newton_polish(p, seed).and_then(|v| candidate(p, v, false)) else {
            unresolved += 1;
            continue;
        };
        if c.full_residual > ACCEPT_TOL {
            unresolved += 1;
            continue;
        }
        let dist = m1_residual(&c.u);
        if dist <= MIN_M1_DISTANCE {
            // the symmetric fixed points are expected roots; only count stragglers
            if dist > 1e-8 {
                near_m1 += 1;
            }
            continue;
        }
        if is_degenerate(&c) {
            if !degenerate_seen.iter().any(|f| same_point(f, &c)) {
                degenerate += 1;
                degenerate_seen.push(c);
            }
            continue;
        }
        if !accepted(p, &c) {
            unresolved += 1;
            continue;
        }
        if !found.iter().any(|f| same_point(f, &c)) {
            found.push(c);
        }
    }

    let partners: Vec<M2Candidate> = found
        .iter()
        .filter_map(|c| {
            let [v1, v2, v3, v4] = c.v;
            newton_polish(p, [v4, v3, v2, v1]).and_then(|v| candidate(p, v, true))
        })
        .collect();
    for c in partners {
        if accepted(p, &c) && !found.iter().any(|f| same_point(f, &c)) {
            found.push(c);
        }
    }

    found.sort_by(|x, y| x.c.total_cmp(&y.c).then(x.v[0].total_cmp(&y.v[0])));
    M2Report {
        candidates: found,
        near_m1,
        degenerate,
        unresolved,
    }
}

/// Ferromagnetic fixed points of `F`; empty when none exist.
pub fn solve_m2_fixed_points(p: &BoltzmannParams) -> Vec<M2Candidate> {
    solve_m2_report(p).candidates
}

/// Index of the candidate whose direction matches `u` to `rel_tol`.
pub fn match_direction(candidates: &[M2Candidate], u: &StateVector, rel_tol: f64) -> Option<usize> {
    let target = u.as_array();
    let tn = max_norm(&target);
    candidates.iter().position(|c| {
        let w = c.u.as_array();
        let wn = max_norm(&w);
        w.iter()
            .zip(&target)
            .all(|(x, y)| (x / wn - y / tn).abs() <= rel_tol)
    })
}

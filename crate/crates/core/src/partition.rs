//! Partition functions of finite trees.
//!
//! The tree of depth `n` is rooted, the root has two children and every
//! vertex above generation `n` has two children. `Z_n` follows from the
//! branch weights by `Z_n = (u1 + u2)^2 + (u3 + u4)^2`, with
//! `u^(n+1) = F(u^(n))` and the free-boundary start `u^(1) = (a, 1/a, 1/a, a)`.
//! [`brute_force_partition`] sums over every configuration and is the
//! reference the recurrence is tested against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::m1::LIFT_TOL;
use crate::model::{
    apply_f_map, f_map_raw, max_norm, scalar_f, scalar_g, BoltzmannParams, Couplings, StateVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn value(self) -> i32 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }
}

/// Rooted binary tree in heap order: vertex `i` has children `2i+1`, `2i+2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiniteTree {
    depth: usize,
}

impl FiniteTree {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 || depth > 24 {
            return Err(Error::InvalidInput(format!(
                "tree depth must lie in 1..=24, got {depth}"
            )));
        }
        Ok(FiniteTree { depth })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `|W_k| = 2^k`.
    pub fn generation_size(&self, k: usize) -> usize {
        1 << k
    }

    /// `|V_n| = 2^(n+1) - 1`, root included.
    pub fn vertex_count(&self) -> usize {
        (1 << (self.depth + 1)) - 1
    }

    /// Direct successors `S(x)`; empty in the last generation.
    pub fn successors(&self, x: usize) -> Vec<usize> {
        let first = 2 * x + 1;
        if first < self.vertex_count() {
            vec![first, first + 1]
        } else {
            vec![]
        }
    }

    /// Parent-child edges.
    pub fn nn_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.vertex_count())
            .flat_map(|x| self.successors(x).into_iter().map(move |y| (x, y)))
            .collect()
    }

    /// Prolonged next-nearest pairs: a vertex and each of its grandchildren.
    pub fn nnn_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.vertex_count())
            .flat_map(|x| {
                self.successors(x)
                    .into_iter()
                    .flat_map(|y| self.successors(y))
                    .map(move |z| (x, z))
            })
            .collect()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Largest depth accepted by [`brute_force_partition`] (32768 configurations).
pub const BRUTE_FORCE_MAX_DEPTH: usize = 3;

fn brute_force_sum(c: &Couplings, n: usize, root_up_only: bool) -> Result<f64> {
    c.validate()?;
    if !(1..=BRUTE_FORCE_MAX_DEPTH).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "brute-force enumeration supports depth 1..={BRUTE_FORCE_MAX_DEPTH}, got {n}"
        )));
    }
    let tree = FiniteTree::new(n)?;
    let nn = tree.nn_pairs();
    let nnn = tree.nnn_pairs();
    let beta = c.beta();
    let count: u32 = 1 << tree.vertex_count();
    let spin = |sigma: u32, i: usize| if sigma >> i & 1 == 1 { 1.0 } else { -1.0 };

    let mut total = CompensatedSum::default();
    for sigma in 0..count {
        // bit 0 is the root; bit set means spin up
        if root_up_only && sigma & 1 == 0 {
            continue;
        }
        let e_nn: f64 = nn
            .iter()
            .map(|&(x, y)| spin(sigma, x) * spin(sigma, y))
            .sum();
        let e_nnn: f64 = nnn
            .iter()
            .map(|&(x, y)| spin(sigma, x) * spin(sigma, y))
            .sum();
        // exp(-beta H) with H = -J1 sum_nn - J2 sum_nnn
        let w = (beta * (c.j1 * e_nn + c.j2 * e_nnn)).exp();
        if !w.is_finite() {
            return Err(Error::Range(format!("Boltzmann weight overflow at {c:?}")));
        }
        total.add(w);
    }
    Ok(total.value())
}

/// Exhaustive sum of `exp(-beta H)` over all spin configurations of the
/// depth-`n` tree, `n <= 3`.
pub fn brute_force_partition(c: &Couplings, n: usize) -> Result<f64> {
    brute_force_sum(c, n, false)
}

/// Same enumeration restricted to configurations with the root up, doubled.
pub fn brute_force_partition_root_up(c: &Couplings, n: usize) -> Result<f64> {
    Ok(2.0 * brute_force_sum(c, n, true)?)
}

/// Branch weights `u^(n)` indexed by the spins of a branch's top two vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchWeights {
    pub generation: usize,
    pub weights: StateVector,
}

impl BranchWeights {
    /// Weight for (top spin, second spin): `u1 = (+,+)`, `u2 = (+,-)`,
    /// `u3 = (-,+)`, `u4 = (-,-)`.
    pub fn get(&self, top: Spin, second: Spin) -> f64 {
        let idx = match (top, second) {
            (Spin::Up, Spin::Up) => 0,
            (Spin::Up, Spin::Down) => 1,
            (Spin::Down, Spin::Up) => 2,
            (Spin::Down, Spin::Down) => 3,
        };
        self.weights[idx]
    }
}

/// `u^(1) = (a, 1/a, 1/a, a)`: the single top bond of a depth-1 branch.
pub fn initial_branch_weights(p: &BoltzmannParams) -> BranchWeights {
    let a = p.a();
    BranchWeights {
        generation: 1,
        weights: StateVector::from_raw([a, 1.0 / a, 1.0 / a, a]),
    }
}

/// `(u1 + u2)^2 + (u3 + u4)^2`.
pub fn partition_from_weights(u: &StateVector) -> f64 {
    let s = u[0] + u[1];
    let t = u[2] + u[3];
    s * s + t * t
}

/// `Z_n` by iterating the recurrence without rescaling.
///
/// Fails with a range error once the weights overflow; use
/// [`partition_recurrence_log`] for deep trees.
pub fn partition_recurrence(p: &BoltzmannParams, n: usize) -> Result<(f64, BranchWeights)> {
    if n == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let overflow = |n| Error::Range(format!("Z_{n} overflows; use the log-scaled recurrence"));
    let mut u = initial_branch_weights(p).weights;
    for _ in 1..n {
        u = apply_f_map(p, &u).map_err(|_| overflow(n))?;
    }
    let z = partition_from_weights(&u);
    if !z.is_finite() {
        return Err(overflow(n));
    }
    Ok((
        z,
        BranchWeights {
            generation: n,
            weights: u,
        },
    ))
}

/// `Z_n` carried in log form, with `u^(n) = exp(log_scale) * weights` and
/// `weights` normalized to unit max-norm.
///
/// `log Z_n` grows like `2^n` and exceeds the double range beyond about
/// 1020 generations, where `log_z` and `log_scale` become infinite;
/// `log_z_per_vertex` stays finite at every depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPartition {
    pub generation: usize,
    pub log_z: f64,
    pub log_z_per_vertex: f64,
    pub weights: StateVector,
    pub log_scale: f64,
}

pub fn partition_recurrence_log(p: &BoltzmannParams, n: usize) -> Result<LogPartition> {
    if n == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let mut u = initial_branch_weights(p).weights.as_array();
    let m = max_norm(&u);
    u = u.map(|x| x / m);
    // log_scale / 2^(k-1) after generation k: F(e^L w) = e^(2L) F(w)
    let mut scale_density = m.ln();
    let mut weight = 1.0f64;
    for _ in 1..n {
        let next = f_map_raw(p, &u);
        let m = max_norm(&next);
        u = next.map(|x| x / m);
        weight *= 0.5;
        scale_density += weight * m.ln();
    }
    let weights = StateVector::from_raw(u);
    let log_p = partition_from_weights(&weights).ln();
    // |V_n| = 2^(n+1) - 1 and log Z_n = 2^n scale_density + log_p
    let top = 2f64.powi(n.min(2000) as i32);
    let vertices = 2.0 * top - 1.0;
    let log_z = top * scale_density + log_p;
    let log_z_per_vertex =
        scale_density / (2.0 - 0.5f64.powi(n.min(2000) as i32)) + log_p / vertices;
    if !log_z_per_vertex.is_finite() {
        return Err(Error::Range(format!("log Z_{n} per vertex is not finite")));
    }
    Ok(LogPartition {
        generation: n,
        log_z,
        log_z_per_vertex,
        weights,
        log_scale: top * scale_density / 2.0,
    })
}

/// Closed form for `Z_n(y)` along a 2-periodic orbit of `F` on M1.
///
/// Depends on `n` only through its parity: even `n` uses `y`, odd `n`
/// uses `f(y)`.
pub fn periodic_partition(p: &BoltzmannParams, y: f64, n: usize) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidInput(format!(
            "ratio must be positive, got {y}"
        )));
    }
    let residual = (scalar_g(p, y) - y).abs();
    let tol = LIFT_TOL * y.max(1.0);
    if !(residual <= tol) {
        return Err(Error::NotOnOrbit {
            what: "2-cycle",
            residual,
            tolerance: tol,
        });
    }
    let (a, b) = (p.a(), p.b());
    let yy = if n.is_multiple_of(2) {
        y
    } else {
        scalar_f(p, y)
    };
    let first = (a * b * (b + 1.0 / (b * yy)).powi(2) + (1.0 / b + b / yy).powi(2) / (a * b))
        .powf(-2.0 / 3.0);
    let second = a.powf(2.0 / 3.0)
        * ((a / b) * (b * yy + 1.0 / b).powi(2) + (b / a) * (yy / b + b).powi(2)).powf(-2.0 / 3.0);
    Ok(2.0 * a.powf(-2.0 / 3.0) * (first + second).powi(2))
}

/// `-(1 / (beta |V_n|)) log Z_n`.
pub fn free_energy_density(c: &Couplings, n: usize) -> Result<f64> {
    let p = c.params()?;
    Ok(-c.temperature * partition_recurrence_log(&p, n)?.log_z_per_vertex)
}

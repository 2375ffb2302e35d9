//! Trajectories of the recurrence and the phase they represent.
//!
//! `F` is homogeneous of degree two, so trajectories are followed
//! projectively: every iterate is rescaled to unit max-norm. A fixed
//! direction `F(u) = mu u` rescales to the true fixed point `u / mu`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::m1::{solve_f_fixed_points, two_cycle_quadratic};
use crate::model::{
    f_map_raw, m1_residual, m2_residual, max_diff, max_norm, scalar_f, scalar_g, BoltzmannParams,
    StateVector,
};

/// Iteration and classification controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterationConfig {
    pub max_iter: usize,
    /// Max-norm distance between normalized states counted as equal.
    pub tol: f64,
    /// Iterations before cycle detection starts.
    pub burn_in: usize,
    /// Longest period looked for.
    pub max_period: usize,
    /// Residual bound for M1 / M2 membership of a limit.
    pub classify_tol: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            max_iter: 20_000,
            tol: 1e-12,
            burn_in: 200,
            max_period: 64,
            classify_tol: 1e-6,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 100 {
            return Err(Error::InvalidInput(format!(
                "max_iter must be at least 100, got {}",
                self.max_iter
            )));
        }
        if !(self.tol > 0.0) || !(self.classify_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.max_period < 2 {
            return Err(Error::InvalidInput("max_period must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "period")]
pub enum TrajectoryKind {
    FixedDirection,
    Cycle(usize),
    Aperiodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub kind: TrajectoryKind,
    /// Normalized limit states in iteration order: one for a fixed
    /// direction, `p` for a cycle, the last state when aperiodic.
    pub attractor: Vec<StateVector>,
    pub iterations_used: usize,
    /// Distance that triggered detection (last step size when aperiodic).
    pub residual: f64,
}

impl TrajectoryOutcome {
    /// Iteration index at which `attractor[k]` was produced.
    pub fn attractor_index(&self, k: usize) -> usize {
        self.iterations_used + 1 + k - self.attractor.len()
    }
}

fn normalize_raw(u: [f64; 4]) -> [f64; 4] {
    let m = max_norm(&u);
    u.map(|x| x / m)
}

/// `u / max_i u_i`.
pub fn normalize(u: &StateVector) -> StateVector {
    StateVector::from_raw(normalize_raw(u.as_array()))
}

/// Positive starting state with log-uniform components in `[e^-3, e^3]`.
pub fn random_initial_state(seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = [(); 4].map(|_| rng.random_range(-3.0f64..3.0).exp());
    StateVector::from_raw(u)
}

/// Rescales a fixed direction `F(u) = mu u` to the fixed point `u / mu`.
pub fn fixed_point_from_direction(p: &BoltzmannParams, u: &StateVector) -> StateVector {
    let w = normalize_raw(u.as_array());
    let mu = max_norm(&f_map_raw(p, &w));
    StateVector::from_raw(w.map(|x| x / mu))
}

/// Follows `u <- F(u) / |F(u)|` until it settles on a fixed direction or a
/// cycle, or `max_iter` runs out.
pub fn iterate(
    p: &BoltzmannParams,
    u0: &StateVector,
    cfg: &IterationConfig,
) -> Result<TrajectoryOutcome> {
    cfg.validate()?;
    let mut u = normalize_raw(u0.as_array());
    let mut history: VecDeque<[f64; 4]> = VecDeque::with_capacity(cfg.max_period + 1);
    let mut step = f64::INFINITY;

    for i in 1..=cfg.max_iter {
        let next = normalize_raw(f_map_raw(p, &u));
        step = max_diff(&next, &u);
        if step <= cfg.tol {
            return Ok(TrajectoryOutcome {
                kind: TrajectoryKind::FixedDirection,
                attractor: vec![StateVector::from_raw(next)],
                iterations_used: i,
                residual: step,
            });
        }
        if history.len() == cfg.max_period {
            history.pop_front();
        }
        history.push_back(u);

        if i >= cfg.burn_in {
            // history holds s_{i-len}, ..., s_{i-1}
            let len = history.len();
            for period in 2..=len {
                let back = history[len - period];
                let d = max_diff(&next, &back);
                if d <= cfg.tol {
                    let mut attractor: Vec<StateVector> = history
                        .iter()
                        .skip(len - period + 1)
                        .map(|s| StateVector::from_raw(*s))
                        .collect();
                    attractor.push(StateVector::from_raw(next));
                    return Ok(TrajectoryOutcome {
                        kind: TrajectoryKind::Cycle(period),
                        attractor,
                        iterations_used: i,
                        residual: d,
                    });
                }
            }
        }
        u = next;
    }

    Ok(TrajectoryOutcome {
        kind: TrajectoryKind::Aperiodic,
        attractor: vec![StateVector::from_raw(u)],
        iterations_used: cfg.max_iter,
        residual: step,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "phase", content = "period")]
pub enum Phase {
    Paramagnetic,
    Ferromagnetic,
    Commensurate(usize),
    Incommensurate,
    /// Fixed direction on neither M1 nor M2.
    FixedDirectionOther,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Paramagnetic => "paramagnetic",
            Phase::Ferromagnetic => "ferromagnetic",
            Phase::Commensurate(_) => "commensurate",
            Phase::Incommensurate => "incommensurate",
            Phase::FixedDirectionOther => "fixed-direction-other",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::Commensurate(p) => write!(f, "commensurate({p})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Classes of trajectories started on M1: attracted to the lift of a
/// fixed point `x` of `f`, or (even iterates) to the lift of a fixed point
/// `y` of `g = f o f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "class")]
pub enum M1Class {
    AsymptoticallyFixed { x: f64 },
    AsymptoticallyPeriodic { y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub phase: Phase,
    pub m1_class: Option<M1Class>,
}

/// Residuals of a trajectory limit against M1 and M2.
///
/// M2 is tested on the rescaled fixed point for a fixed direction, and on
/// the first normalized attractor state otherwise. A pole of `phi` yields
/// `f64::INFINITY`.
pub fn limit_residuals(p: &BoltzmannParams, outcome: &TrajectoryOutcome) -> (f64, f64) {
    let first = outcome.attractor[0];
    let m1 = m1_residual(&first);
    let probe = match outcome.kind {
        TrajectoryKind::FixedDirection => fixed_point_from_direction(p, &first),
        _ => first,
    };
    let m2 = m2_residual(p, &probe).unwrap_or(f64::INFINITY);
    (m1, m2)
}

pub fn classify_phase(
    p: &BoltzmannParams,
    outcome: &TrajectoryOutcome,
    classify_tol: f64,
) -> PhaseLabel {
    match outcome.kind {
        TrajectoryKind::FixedDirection => {
            let (m1, m2) = limit_residuals(p, outcome);
            if m1 <= classify_tol {
                PhaseLabel {
                    phase: Phase::Paramagnetic,
                    m1_class: Some(M1Class::AsymptoticallyFixed {
                        x: outcome.attractor[0].ratio(),
                    }),
                }
            } else if m2 <= classify_tol {
                PhaseLabel {
                    phase: Phase::Ferromagnetic,
                    m1_class: None,
                }
            } else {
                PhaseLabel {
                    phase: Phase::FixedDirectionOther,
                    m1_class: None,
                }
            }
        }
        TrajectoryKind::Cycle(period) => {
            let on_m1 = outcome
                .attractor
                .iter()
                .all(|s| m1_residual(s) <= classify_tol);
            let m1_class = (period == 2 && on_m1).then(|| {
                let even = (0..2)
                    .find(|&k| outcome.attractor_index(k).is_multiple_of(2))
                    .unwrap_or(0);
                M1Class::AsymptoticallyPeriodic {
                    y: outcome.attractor[even].ratio(),
                }
            });
            PhaseLabel {
                phase: Phase::Commensurate(period),
                m1_class,
            }
        }
        TrajectoryKind::Aperiodic => PhaseLabel {
            phase: Phase::Incommensurate,
            m1_class: None,
        },
    }
}

/// Relative distance below which a start counts as sitting on an invariant point.
pub const AMBIGUITY_TOL: f64 = 1e-10;

/// Theorem-3 class of a trajectory started at `u0` on M1.
///
/// For `b > 1` the ratio map `f` is increasing, so the ratio moves
/// monotonically to the next fixed point in the direction of `f(x0) - x0`.
/// For `b < 1` the same holds for `g = f o f` along even iterates.
pub fn m1_attractor_class(p: &BoltzmannParams, u0: &StateVector) -> Result<M1Class> {
    if m1_residual(u0) > 1e-12 {
        return Err(Error::InvalidInput(
            "initial state is not on M1 (u1 = u4, u2 = u3)".into(),
        ));
    }
    let x0 = u0.ratio();
    let fixed = solve_f_fixed_points(p).xs();
    let cycle = two_cycle_quadratic(p).roots;
    for &pt in fixed.iter().chain(&cycle) {
        if (x0 - pt).abs() <= AMBIGUITY_TOL * pt.max(x0) {
            return Err(Error::Ambiguous { x0, point: pt });
        }
    }

    let b = p.b();
    if b == 1.0 {
        return Ok(M1Class::AsymptoticallyFixed { x: p.a() * p.a() });
    }

    let (map, mut targets): (Box<dyn Fn(f64) -> f64>, Vec<f64>) = if b > 1.0 {
        (Box::new(|x| scalar_f(p, x)), fixed)
    } else {
        let mut t = fixed;
        t.extend(cycle);
        (Box::new(|x| scalar_g(p, x)), t)
    };
    targets.sort_by(f64::total_cmp);
    let limit = if map(x0) > x0 {
        targets.iter().copied().find(|&t| t > x0)
    } else {
        targets.iter().rev().copied().find(|&t| t < x0)
    }
    .ok_or_else(|| Error::Range(format!("no invariant point beyond x0 = {x0}")))?;

    Ok(if b > 1.0 {
        M1Class::AsymptoticallyFixed { x: limit }
    } else {
        M1Class::AsymptoticallyPeriodic { y: limit }
    })
}

//! End-to-end verification suite: twelve numbered checks, each comparing
//! a solver against an independent oracle or a closed-form statement.
//!
//! Shared by the `acceptance` test target and the CLI `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::dynamics::{
    classify_phase, fixed_point_from_direction, iterate, normalize, random_initial_state,
    IterationConfig, Phase, TrajectoryKind,
};
use crate::m1::{
    critical_curve, critical_temperature, exclude_higher_periods, lift_fixed, lift_two_cycle,
    nu_thresholds, phase_counts, regime_thresholds, solve_f_fixed_points, two_cycle_quadratic,
    Stability, SADDLE_TOL,
};
use crate::m2::{match_direction, solve_m2_fixed_points};
use crate::model::{
    f_map_raw, max_diff, max_norm, scalar_f, scalar_f_prime, scalar_g, BoltzmannParams, Couplings,
    StateVector,
};
use crate::partition::{brute_force_partition, partition_recurrence, periodic_partition};
use crate::scan::{rows_to_csv, scan, ScanConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> std::result::Result<String, String>;

const CHECKS: [(u8, &str, Check); 12] = [
    (
        1,
        "partition recurrence equals exhaustive enumeration",
        oracle_equivalence,
    ),
    (
        2,
        "fixed-point counts and stability across regimes",
        fixed_point_regimes,
    ),
    (
        3,
        "2-cycle quadratic roots and discriminant",
        two_cycle_roots,
    ),
    (4, "critical temperature", critical_temperature_values),
    (
        5,
        "critical curves annihilate the discriminant",
        critical_curve_consistency,
    ),
    (
        6,
        "monotone convergence of ratio iterations",
        ratio_convergence,
    ),
    (
        7,
        "no periods 3..8 on the symmetric slice",
        higher_period_exclusion,
    ),
    (
        8,
        "lifted points are fixed points and 2-cycles of F",
        lifted_residuals,
    ),
    (
        9,
        "closed-form partition function on 2-cycles",
        periodic_partitions,
    ),
    (
        10,
        "three paramagnetic phases below T_c",
        low_temperature_window,
    ),
    (
        11,
        "trajectory limits match the fixed-point solvers",
        solver_cross_validation,
    ),
    (
        12,
        "worker-count determinism and scale invariance",
        determinism_and_scaling,
    ),
];

/// Runs every check in order. Panics inside a check count as failures.
pub fn run_all() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(id, title, f)| run_one(id, title, f))
        .collect()
}

fn run_one(id: u8, title: &'static str, f: Check) -> CheckOutcome {
    let (passed, detail) = match std::panic::catch_unwind(f) {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("panicked: {msg}"))
        }
    };
    CheckOutcome {
        id,
        title,
        passed,
        detail,
    }
}

/// One line per check: `[PASS] 01 title: detail`.
pub fn format_outcome(o: &CheckOutcome) -> String {
    format!(
        "[{}] {:02} {}: {}",
        if o.passed { "PASS" } else { "FAIL" },
        o.id,
        o.title,
        o.detail
    )
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

fn weights(a: f64, b: f64) -> std::result::Result<BoltzmannParams, String> {
    BoltzmannParams::from_weights(a, b).map_err(|e| e.to_string())
}

fn couplings(
    j1: f64,
    j2: f64,
    t: f64,
) -> std::result::Result<(Couplings, BoltzmannParams), String> {
    let c = Couplings::new(j1, j2, t).map_err(|e| e.to_string())?;
    let p = c.params().map_err(|e| e.to_string())?;
    Ok((c, p))
}

/// `(a, b)` with prescribed `(a~, b~)`.
fn from_tilde(a_tilde: f64, b_tilde: f64) -> std::result::Result<BoltzmannParams, String> {
    let b = b_tilde.powf(0.25);
    weights(1.0 / (a_tilde * b.powi(6)).sqrt(), b)
}

fn relative_f_residual(p: &BoltzmannParams, u: &StateVector, steps: usize) -> f64 {
    let mut w = u.as_array();
    for _ in 0..steps {
        w = f_map_raw(p, &w);
    }
    max_diff(&w, &u.as_array()) / max_norm(&u.as_array())
}

fn oracle_equivalence() -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let j1 = rng.random_range(-2.0..2.0);
        let j2 = rng.random_range(-2.0..2.0);
        let t = rng.random_range(0.2..5.0);
        let (c, p) = couplings(j1, j2, t)?;
        for n in 1..=3 {
            let brute = brute_force_partition(&c, n).map_err(|e| e.to_string())?;
            let (rec, _) = partition_recurrence(&p, n).map_err(|e| e.to_string())?;
            let err = rel(rec, brute);
            worst = worst.max(err);
            ensure(err <= 1e-10, || {
                format!("({j1}, {j2}, {t}) n={n}: recurrence {rec:e} vs enumeration {brute:e}")
            })?;
        }
    }
    Ok(format!("75 comparisons, worst relative error {worst:.2e}"))
}

/// Regime samples: `(p, expected root count)`.
fn regime_samples() -> std::result::Result<Vec<(BoltzmannParams, usize)>, String> {
    let mut out = Vec::new();
    for bt in [1.0, 4.0, 9.0, 9.5, 12.0, 16.0, 25.0] {
        match nu_thresholds(bt) {
            None => {
                for k in 0..50 {
                    let at = 10f64.powf(-6.0 + 8.0 * k as f64 / 49.0);
                    out.push((from_tilde(at, bt)?, 1));
                }
            }
            Some(nu) => {
                let (l1, l2) = (nu.nu1.ln(), nu.nu2.ln());
                out.push((from_tilde(nu.nu1, bt)?, 2));
                out.push((from_tilde(nu.nu2, bt)?, 2));
                for k in 1..=24 {
                    let s = k as f64 / 25.0;
                    out.push((from_tilde((l1 + s * (l2 - l1)).exp(), bt)?, 3));
                }
                for k in 1..=12 {
                    let s = k as f64 / 12.0;
                    out.push((from_tilde((l1 - 4.0 * s).exp(), bt)?, 1));
                    out.push((from_tilde((l2 + 4.0 * s).exp(), bt)?, 1));
                }
            }
        }
    }
    Ok(out)
}

fn fixed_point_regimes() -> std::result::Result<String, String> {
    let samples = regime_samples()?;
    for (p, expected) in &samples {
        let rep = solve_f_fixed_points(p);
        ensure(rep.roots.len() == *expected, || {
            format!(
                "a~={:e} b~={}: {} roots, expected {expected}",
                p.a_tilde(),
                p.b_tilde(),
                rep.roots.len()
            )
        })?;
        for r in &rep.roots {
            ensure(rel(scalar_f(p, r.x), r.x) <= 1e-9, || {
                format!(
                    "a~={:e} b~={}: f(x) != x at {}",
                    p.a_tilde(),
                    p.b_tilde(),
                    r.x
                )
            })?;
            let d = scalar_f_prime(p, r.x).abs();
            let tag_ok = match r.stability {
                Stability::Stable => d < 1.0,
                Stability::Unstable => d > 1.0,
                Stability::SaddleBoundary => *expected == 2 || (d - 1.0).abs() <= SADDLE_TOL,
            };
            ensure(tag_ok, || {
                format!("x={} |f'|={d} tagged {:?}", r.x, r.stability)
            })?;
        }
    }
    Ok(format!(
        "{} (a~, b~) samples, counts and tags consistent",
        samples.len()
    ))
}

fn two_cycle_roots() -> std::result::Result<String, String> {
    let p = weights(1.0, 0.5)?;
    let r = two_cycle_quadratic(&p);
    ensure(r.roots.len() == 2, || {
        format!("b=0.5: {} roots", r.roots.len())
    })?;
    let (xm, xp) = (r.roots[0], r.roots[1]);
    for x in [xm, xp] {
        ensure(rel(scalar_g(&p, x), x) <= 1e-9, || format!("g({x}) != {x}"))?;
    }
    ensure(rel(scalar_f(&p, xp), xm) <= 1e-9, || "f(x+) != x-".into())?;
    ensure(rel(scalar_f(&p, xm), xp) <= 1e-9, || "f(x-) != x+".into())?;
    let r9 = two_cycle_quadratic(&weights(1.0, 0.9)?);
    ensure(r9.roots.is_empty(), || "b=0.9 has 2-cycle roots".into())?;
    let r1 = two_cycle_quadratic(&weights(1.0, 1.0)?);
    ensure(r1.d_factored == 0.0, || {
        format!("b=1: factored D = {:e}", r1.d_factored)
    })?;
    Ok(format!(
        "x- = {xm:.12}, x+ = {xp:.12}; b=0.9 empty; D(b=1) = 0"
    ))
}

fn critical_temperature_values() -> std::result::Result<String, String> {
    let j2 = 3f64.ln() / 2.0;
    let tc = critical_temperature(j2).ok_or("no T_c")?;
    ensure(tc == 1.0, || format!("T_c(ln 3 / 2) = {tc}"))?;
    let mut worst = 0.0f64;
    for j2 in [j2, 0.1, 0.5, 1.0, 2.0, 7.5] {
        let tc = critical_temperature(j2).ok_or("no T_c")?;
        let (_, p) = couplings(1.0, j2, tc)?;
        let err = (p.b_tilde() - 9.0).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12, || {
            format!("j2={j2}: b~ at T_c = {}", p.b_tilde())
        })?;
    }
    Ok(format!("T_c = 1 exactly; |b~(T_c) - 9| <= {worst:.1e}"))
}

fn critical_curve_consistency() -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut worst = 0.0f64;
    let limit = (1.0f64 / 3.0).sqrt().ln();
    for _ in 0..10 {
        let j2 = -rng.random_range(0.2..2.0);
        let beta = rng.random_range(-3.0..limit * 1.01) / j2;
        let s = critical_curve(j2, beta).map_err(|e| e.to_string())?;
        for j1 in [s.j1_plus, s.j1_minus] {
            let j1 = j1.ok_or_else(|| format!("missing branch at j2={j2}, beta={beta}"))?;
            let (_, p) = couplings(j1, j2, 1.0 / beta)?;
            let q = two_cycle_quadratic(&p);
            let ratio = q.d_factored.abs() / (q.b_coef * q.b_coef);
            worst = worst.max(ratio);
            ensure(ratio <= 1e-8, || {
                format!("j2={j2}, beta={beta}, j1={j1}: |D|/B^2 = {ratio:e}")
            })?;
        }
    }
    Ok(format!("20 branch points, worst |D|/B^2 = {worst:.2e}"))
}

fn converge(map: impl Fn(f64) -> f64, mut x: f64) -> (f64, bool) {
    let mut dir = 0.0f64;
    let mut monotone = true;
    for _ in 0..200_000 {
        let next = map(x);
        let step = next - x;
        if step.abs() <= 1e-15 * x.abs() {
            return (next, monotone);
        }
        if dir != 0.0 && step.signum() != dir {
            monotone = false;
        }
        dir = step.signum();
        x = next;
    }
    (x, monotone)
}

fn ratio_convergence() -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut trials = 0;
    for b in [1.2, 2.0, 4.0, 0.2, 0.5] {
        let a = rng.random_range(-1.5f64..1.5).exp();
        let p = weights(a, b)?;
        let fixed = solve_f_fixed_points(&p).xs();
        let mut targets = fixed.clone();
        if b < 1.0 {
            targets.extend(two_cycle_quadratic(&p).roots);
        }
        for _ in 0..100 {
            let x0 = 10f64.powf(rng.random_range(-4.0..4.0));
            let (limit, monotone) = if b > 1.0 {
                converge(|x| scalar_f(&p, x), x0)
            } else {
                converge(|x| scalar_g(&p, x), x0)
            };
            ensure(monotone, || format!("a={a}, b={b}, x0={x0}: not monotone"))?;
            ensure(targets.iter().any(|t| rel(*t, limit) <= 1e-7), || {
                format!("a={a}, b={b}, x0={x0}: limit {limit} not in {targets:?}")
            })?;
            trials += 1;
        }
    }
    Ok(format!("{trials} trajectories monotone and convergent"))
}

fn higher_period_exclusion() -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let mut roots_seen = 0;
    for k in 0..20 {
        let b = if k % 2 == 0 {
            rng.random_range(0.15..0.95)
        } else {
            rng.random_range(1.05..3.0)
        };
        let a = rng.random_range(-1.5f64..1.5).exp();
        let p = weights(a, b)?;
        let rep = exclude_higher_periods(&p, 8).map_err(|e| e.to_string())?;
        ensure(rep.is_clean(), || {
            format!("a={a}, b={b}: {:?}", rep.violations)
        })?;
        roots_seen += rep.scans.iter().map(|s| s.roots.len()).sum::<usize>();
    }
    let cfg = IterationConfig::default();
    let mut unsettled = 0;
    for _ in 0..500 {
        let j1 = rng.random_range(-2.0..2.0);
        let j2 = rng.random_range(-2.0..2.0);
        let t = rng.random_range(0.3..4.0);
        let (_, p) = couplings(j1, j2, t)?;
        let x0 = rng.random_range(-5.0f64..5.0).exp();
        let u0 = StateVector::symmetric(x0).map_err(|e| e.to_string())?;
        let out = iterate(&p, &u0, &cfg).map_err(|e| e.to_string())?;
        match out.kind {
            TrajectoryKind::Cycle(q) => {
                ensure(q == 2, || format!("({j1}, {j2}, {t}) x0={x0}: cycle({q})"))?
            }
            // slow convergence near a period-doubling point, not a long period
            TrajectoryKind::Aperiodic => unsettled += 1,
            TrajectoryKind::FixedDirection => {}
        }
    }
    Ok(format!(
        "20 parameter pairs clean ({roots_seen} period-3..8 roots all fixed or 2-periodic); \
         500 M1 trajectories, none of period 3..8 ({unsettled} still converging)"
    ))
}

/// Parameters with a 2-cycle on M1; `attracting` keeps only cycles with
/// `|g'| < 1`, along which forward iteration does not amplify round-off.
fn two_cycle_samples(
    n: usize,
    seed: u64,
    attracting: bool,
) -> std::result::Result<Vec<BoltzmannParams>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let b = rng.random_range(0.15..0.56);
        let Some((_, hi)) = regime_thresholds(b).star else {
            continue;
        };
        let a2 = hi.powf(rng.random_range(-0.9..0.9));
        let p = weights(a2.sqrt(), b)?;
        let roots = two_cycle_quadratic(&p).roots;
        if roots.len() != 2 {
            continue;
        }
        let multiplier = scalar_f_prime(&p, roots[0]) * scalar_f_prime(&p, roots[1]);
        if !attracting || multiplier.abs() < 1.0 {
            out.push(p);
        }
    }
    Ok(out)
}

fn lifted_residuals() -> std::result::Result<String, String> {
    let mut worst_fixed = 0.0f64;
    let mut count = 0;
    for (p, _) in regime_samples()? {
        for x in solve_f_fixed_points(&p).xs() {
            let u = lift_fixed(&p, x).map_err(|e| e.to_string())?;
            let r = relative_f_residual(&p, &u, 1);
            worst_fixed = worst_fixed.max(r);
            ensure(r <= 1e-9, || {
                format!("a={}, b={}, x={x}: |F(u)-u|/|u| = {r:e}", p.a(), p.b())
            })?;
            count += 1;
        }
    }
    let mut worst_cycle = 0.0f64;
    let mut cycles = 0;
    let mut two = two_cycle_samples(20, 0x5eed_0008, false)?;
    two.push(weights(1.0, 0.5)?);
    for p in two {
        for y in two_cycle_quadratic(&p).roots {
            let u = lift_two_cycle(&p, y).map_err(|e| e.to_string())?;
            let r = relative_f_residual(&p, &u, 2);
            worst_cycle = worst_cycle.max(r);
            ensure(r <= 1e-9, || {
                format!("a={}, b={}, y={y}: |F2(u)-u|/|u| = {r:e}", p.a(), p.b())
            })?;
            cycles += 1;
        }
    }
    Ok(format!(
        "{count} fixed points (worst {worst_fixed:.1e}), {cycles} 2-cycle points (worst {worst_cycle:.1e})"
    ))
}

fn f_map_dd(p: &BoltzmannParams, u: &[TwoFloat; 4]) -> [TwoFloat; 4] {
    let (a, b) = (TwoFloat::from(p.a()), TwoFloat::from(p.b()));
    let [u1, u2, u3, u4] = *u;
    let s1 = b * u1 + u2 / b;
    let s2 = b * u3 + u4 / b;
    let s3 = u1 / b + b * u2;
    let s4 = u3 / b + b * u4;
    [a * s1 * s1, s2 * s2 / a, s3 * s3 / a, a * s4 * s4]
}

fn periodic_partitions() -> std::result::Result<String, String> {
    let mut worst = 0.0f64;
    for p in two_cycle_samples(10, 0x5eed_0009, true)? {
        let roots = two_cycle_quadratic(&p).roots;
        ensure(roots.len() == 2, || {
            format!("a={}, b={}: no 2-cycle", p.a(), p.b())
        })?;
        let y = roots[0];
        let u0 = lift_two_cycle(&p, y).map_err(|e| e.to_string())?.as_array();
        // F doubles relative scale errors, so the orbit is followed in
        // double-double arithmetic
        let mut u = u0.map(TwoFloat::from);
        // F^2(c u) = c^4 F^2(u): rescale the lift onto the exact periodic point
        for _ in 0..3 {
            let w = f_map_dd(&p, &f_map_dd(&p, &u));
            let mu = (w[0] + w[1] + w[2] + w[3]) / (u[0] + u[1] + u[2] + u[3]);
            let mut c = TwoFloat::from(f64::from(mu).powf(-1.0 / 3.0));
            c -= (c * c * c * mu - 1.0) / (c * c * mu * 3.0);
            u = u.map(|x| x * c);
        }
        for n in 0..=20 {
            let (s, t) = (u[0] + u[1], u[2] + u[3]);
            let direct: f64 = (s * s + t * t).into();
            let closed = periodic_partition(&p, y, n).map_err(|e| e.to_string())?;
            let err = rel(direct, closed);
            worst = worst.max(err);
            ensure(err <= 1e-9, || {
                format!("a={}, b={}, n={n}: {direct} vs {closed}", p.a(), p.b())
            })?;
            u = f_map_dd(&p, &u);
        }
    }
    Ok(format!(
        "10 samples x 21 generations, worst relative error {worst:.1e}"
    ))
}

fn low_temperature_window() -> std::result::Result<String, String> {
    let j2 = 1.0;
    let tc = critical_temperature(j2).ok_or("no T_c")?;
    let below = [0.4, 0.7, 1.0, 1.3, 1.6, 1.75, 0.999 * tc];
    let above = [tc, 1.001 * tc, 2.0, 3.0, 5.0];
    for t in below {
        let (c, p) = couplings(0.0, j2, t)?;
        let n = phase_counts(&c).map_err(|e| e.to_string())?.paramagnetic;
        ensure(n == 3, || format!("T={t} < T_c: {n} paramagnetic phases"))?;
        let rep = solve_f_fixed_points(&p);
        let xs = rep.xs();
        ensure(xs.len() == 3, || {
            format!("T={t}: {} fixed points", xs.len())
        })?;
        let stable: Vec<f64> = rep.stable().map(|r| r.x).collect();
        ensure(stable.len() == 2, || {
            format!("T={t}: {} stable roots", stable.len())
        })?;
        let mut reached = Vec::new();
        for x0 in [xs[1] * 0.9, xs[1] / 0.9] {
            let u0 = StateVector::symmetric(x0).map_err(|e| e.to_string())?;
            let out = iterate(&p, &u0, &IterationConfig::default()).map_err(|e| e.to_string())?;
            ensure(out.kind == TrajectoryKind::FixedDirection, || {
                format!("T={t}: {:?}", out.kind)
            })?;
            reached.push(out.attractor[0].ratio());
        }
        ensure(
            rel(reached[0], stable[0]) <= 1e-8 && rel(reached[1], stable[1]) <= 1e-8,
            || format!("T={t}: reached {reached:?}, stable roots {stable:?}"),
        )?;
    }
    for t in above {
        let (c, _) = couplings(0.0, j2, t)?;
        let n = phase_counts(&c).map_err(|e| e.to_string())?.paramagnetic;
        ensure(n == 1, || format!("T={t} >= T_c: {n} paramagnetic phases"))?;
    }
    Ok(format!(
        "j1=0, j2=1, T_c={tc:.6}: 3 phases at {} temperatures below, 1 at {} at or above; both stable roots reached",
        below.len(),
        above.len()
    ))
}

fn solver_cross_validation() -> std::result::Result<String, String> {
    let points = [
        (1.0, 0.0, 1.0),
        (1.0, 0.3, 1.0),
        (0.5, 0.2, 0.7),
        (1.0, 0.5, 1.0),
        (1.0, 0.5, 3.0),
        (1.0, -0.2, 1.0),
        (0.1, 0.05, 10.0),
        (1.0, 0.0, 5.0),
        (0.0, 1.0, 1.0),
        (0.3, 0.8, 1.5),
        (-1.0, 0.3, 2.0),
        (1.5, 0.4, 2.5),
    ];
    let cfg = IterationConfig::default();
    let (mut ferro, mut para) = (0, 0);
    for (j1, j2, t) in points {
        let (_, p) = couplings(j1, j2, t)?;
        let candidates = solve_m2_fixed_points(&p);
        let stable: Vec<f64> = solve_f_fixed_points(&p).stable().map(|r| r.x).collect();
        for seed in 0..8 {
            let out = iterate(&p, &random_initial_state(seed), &cfg).map_err(|e| e.to_string())?;
            match classify_phase(&p, &out, cfg.classify_tol).phase {
                Phase::Ferromagnetic => {
                    let u = normalize(&fixed_point_from_direction(&p, &out.attractor[0]));
                    ensure(match_direction(&candidates, &u, 1e-6).is_some(), || {
                        format!("({j1}, {j2}, {t}) seed {seed}: ferromagnetic limit not among {} candidates", candidates.len())
                    })?;
                    ferro += 1;
                }
                Phase::Paramagnetic => {
                    let x = out.attractor[0].ratio();
                    ensure(stable.iter().any(|s| rel(*s, x) <= 1e-8), || {
                        format!("({j1}, {j2}, {t}) seed {seed}: ratio {x} not a stable root of {stable:?}")
                    })?;
                    para += 1;
                }
                _ => {}
            }
        }
    }
    ensure(ferro > 0 && para > 0, || {
        format!("vacuous: {ferro} ferromagnetic, {para} paramagnetic")
    })?;
    Ok(format!(
        "{ferro} ferromagnetic and {para} paramagnetic limits matched"
    ))
}

fn determinism_and_scaling() -> std::result::Result<String, String> {
    let mut cfg = ScanConfig {
        axes: vec![
            "j2:-1.2:0.8:5"
                .parse()
                .map_err(|e: crate::Error| e.to_string())?,
            "temperature:0.5:2.5:4"
                .parse()
                .map_err(|e: crate::Error| e.to_string())?,
        ],
        seeds: vec![3, 17],
        iteration: IterationConfig {
            max_iter: 4000,
            ..Default::default()
        },
        workers: 1,
        ..Default::default()
    };
    let serial = rows_to_csv(&scan(&cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    cfg.workers = 4;
    let parallel =
        rows_to_csv(&scan(&cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(serial == parallel, || {
        "CSV differs between 1 and 4 workers".into()
    })?;

    let it = IterationConfig::default();
    let mut labels = 0;
    for (j1, j2, t) in [
        (1.0, 0.0, 1.0),
        (1.0, -0.8, 0.5),
        (1.0, -0.55, 1.0),
        (0.0, 1.0, 1.0),
        (1.0, -1.0, 0.4),
    ] {
        let (_, p) = couplings(j1, j2, t)?;
        for seed in 0..4 {
            let u0 = random_initial_state(seed);
            let base = classify_phase(
                &p,
                &iterate(&p, &u0, &it).map_err(|e| e.to_string())?,
                it.classify_tol,
            )
            .phase;
            for lambda in [1e-3, 1e3] {
                let us = u0.scaled(lambda).map_err(|e| e.to_string())?;
                let out = iterate(&p, &us, &it).map_err(|e| e.to_string())?;
                let got = classify_phase(&p, &out, it.classify_tol).phase;
                ensure(got == base, || {
                    format!("({j1}, {j2}, {t}) seed {seed} x{lambda}: {got} vs {base}")
                })?;
                labels += 1;
            }
        }
    }
    Ok(format!(
        "{} CSV bytes identical for 1 and 4 workers; {labels} scaled labels unchanged",
        serial.len()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_lines() {
        let ok = CheckOutcome {
            id: 3,
            title: "t",
            passed: true,
            detail: "d".into(),
        };
        assert_eq!(format_outcome(&ok), "[PASS] 03 t: d");
        let bad = run_one(9, "boom", || panic!("x"));
        assert!(!bad.passed);
        assert!(bad.detail.contains("panicked: x"));
    }

    #[test]
    fn regime_samples_cover_all_counts() {
        let s = regime_samples().unwrap();
        for n in [1, 2, 3] {
            assert!(s.iter().any(|(_, k)| *k == n));
        }
    }
}

//! Analysis on the symmetric slice M1 = {u1 = u4, u2 = u3}.
//!
//! On M1 the recurrence reduces to the ratio map `f`. Fixed points of `f`
//! are the paramagnetic phases, 2-cycles of `f` the 2-commensurate ones.
//! Everything here is closed form or a bracketed one-dimensional root find.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    scalar_f, scalar_f_iter, scalar_f_prime, scalar_g, BoltzmannParams, Couplings, StateVector,
};
use crate::poly::monic_cubic_roots;

/// Fixed-point residual bound, relative to `max(1, x)`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Two roots closer than this (relative) are the same root.
pub const COINCIDENCE_TOL: f64 = 1e-8;
/// Relative distance to `nu_i` or `b*_+-` treated as an exact regime boundary.
pub const BOUNDARY_TOL: f64 = 1e-8;
/// `|f'(x) - 1|` below this is tagged [`Stability::SaddleBoundary`].
pub const SADDLE_TOL: f64 = 1e-8;
/// Residual accepted from callers handing a root back to a lift.
pub const LIFT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    Unstable,
    SaddleBoundary,
}

impl Stability {
    fn from_derivative(d: f64) -> Self {
        if (d.abs() - 1.0).abs() <= SADDLE_TOL {
            Stability::SaddleBoundary
        } else if d.abs() < 1.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub x: f64,
    pub stability: Stability,
    pub derivative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointRegime {
    Unique,
    Two,
    Three,
}

impl FixedPointRegime {
    pub fn count(self) -> usize {
        match self {
            FixedPointRegime::Unique => 1,
            FixedPointRegime::Two => 2,
            FixedPointRegime::Three => 3,
        }
    }
}

/// Positive solutions of `f(x) = x`, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub roots: Vec<FixedPoint>,
    pub regime: FixedPointRegime,
}

impl FixedPointReport {
    pub fn xs(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.x).collect()
    }

    pub fn stable(&self) -> impl Iterator<Item = &FixedPoint> {
        self.roots
            .iter()
            .filter(|r| r.stability == Stability::Stable)
    }
}

/// Critical points `y1 < y2` of `nu(y) = (1/y)((1+y)/(b~+y))^2` and the
/// values `nu1 = nu(y1) < nu2 = nu(y2)` bounding the three-root window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuThresholds {
    pub y1: f64,
    pub y2: f64,
    pub nu1: f64,
    pub nu2: f64,
}

fn nu_of(b_tilde: f64, y: f64) -> f64 {
    let r = (1.0 + y) / (b_tilde + y);
    r * r / y
}

/// Window `(nu1, nu2)` of `a~` with three fixed points; `None` for `b~ <= 9`.
pub fn nu_thresholds(b_tilde: f64) -> Option<NuThresholds> {
    // b~ = 9 evaluated at T = T_c in floating point lands a few ulps off
    if !(b_tilde > 9.0 * (1.0 + 1e-12)) {
        return None;
    }
    // y^2 + (3 - b~) y + b~ = 0, discriminant (b~ - 1)(b~ - 9)
    let disc = (b_tilde - 1.0) * (b_tilde - 9.0);
    let y2 = 0.5 * (b_tilde - 3.0 + disc.sqrt());
    let y1 = b_tilde / y2;
    let (n1, n2) = (nu_of(b_tilde, y1), nu_of(b_tilde, y2));
    Some(NuThresholds {
        y1,
        y2,
        nu1: n1.min(n2),
        nu2: n1.max(n2),
    })
}

fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs())
}

/// Interval `f((0, inf))`; every periodic point of `f` lies in it.
pub fn image_interval(p: &BoltzmannParams) -> (f64, f64) {
    let a2 = p.a() * p.a();
    let (e1, e2) = (a2 / p.b_tilde(), a2 * p.b_tilde());
    (e1.min(e2), e1.max(e2))
}

/// Safeguarded Newton on a bracket where `g` changes sign.
fn bracketed_newton(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    start: Option<f64>,
) -> f64 {
    let g_lo = g(lo);
    if g_lo == 0.0 {
        return lo;
    }
    if g(hi) == 0.0 {
        return hi;
    }
    let lo_positive = g_lo > 0.0;
    let mut x = match start {
        Some(s) if s > lo && s < hi => s,
        _ => (lo * hi).sqrt(),
    };
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if (gx > 0.0) == lo_positive {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let d = dg(x);
        let newton = x - gx / d;
        x = if d != 0.0 && newton > lo && newton < hi && (newton - x).abs() < 0.5 * (hi - lo) {
            newton
        } else if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

/// All positive fixed points of `f` with stability tags.
///
/// In `y = b^2 x` the fixed-point equation reads `a~ = nu(y)`, and
/// `ln(f(x)/x) = ln nu(y) - ln a~`. `nu` is monotone between its critical
/// points, so each monotone piece holds at most one root. Roots of the
/// cleared cubic seed a safeguarded Newton iteration inside each piece.
pub fn solve_f_fixed_points(p: &BoltzmannParams) -> FixedPointReport {
    let (a, b) = (p.a(), p.b());
    let b2 = b * b;
    let tagged = |x: f64| {
        let d = scalar_f_prime(p, x);
        FixedPoint {
            x,
            stability: Stability::from_derivative(d),
            derivative: d,
        }
    };
    if b == 1.0 {
        return FixedPointReport {
            roots: vec![tagged(a * a)],
            regime: FixedPointRegime::Unique,
        };
    }

    let (bt, at) = (p.b_tilde(), p.a_tilde());
    let ln_at = at.ln();
    let g = |y: f64| 2.0 * (1.0 + y).ln() - y.ln() - 2.0 * (bt + y).ln() - ln_at;
    let dg = |y: f64| 2.0 / (1.0 + y) - 1.0 / y - 2.0 / (bt + y);

    // a~ y^3 + (2 a~ b~ - 1) y^2 + (a~ b~^2 - 2) y - 1 = 0
    let seeds: Vec<f64> = monic_cubic_roots(2.0 * bt - 1.0 / at, bt * bt - 2.0 / at, -1.0 / at)
        .into_iter()
        .filter(|y| *y > 0.0)
        .collect();

    let (x_lo, x_hi) = image_interval(p);
    // widen slightly so the bracket ends strictly straddle the roots
    let (y_lo, y_hi) = (b2 * x_lo * (1.0 - 1e-9), b2 * x_hi * (1.0 + 1e-9));

    let solve_piece = |lo: f64, hi: f64| -> Option<f64> {
        let (lo, hi) = (lo.max(y_lo), hi.min(y_hi));
        if !(lo < hi) {
            return None;
        }
        let (g_lo, g_hi) = (g(lo), g(hi));
        if g_lo.signum() == g_hi.signum() && g_lo != 0.0 && g_hi != 0.0 {
            return None;
        }
        let start = seeds.iter().copied().find(|y| *y > lo && *y < hi);
        Some(bracketed_newton(g, dg, lo, hi, start))
    };

    let mut ys: Vec<(f64, bool)> = Vec::with_capacity(3);
    match nu_thresholds(bt) {
        None => ys.extend(solve_piece(y_lo, y_hi).map(|y| (y, false))),
        Some(nu) => {
            if rel_close(at, nu.nu1, BOUNDARY_TOL) {
                ys.push((nu.y1, true));
                ys.extend(solve_piece(nu.y2, y_hi).map(|y| (y, false)));
            } else if rel_close(at, nu.nu2, BOUNDARY_TOL) {
                ys.extend(solve_piece(y_lo, nu.y1).map(|y| (y, false)));
                ys.push((nu.y2, true));
            } else {
                for (lo, hi) in [(y_lo, nu.y1), (nu.y1, nu.y2), (nu.y2, y_hi)] {
                    ys.extend(solve_piece(lo, hi).map(|y| (y, false)));
                }
            }
        }
    }

    let mut roots: Vec<FixedPoint> = ys
        .into_iter()
        .map(|(y, double)| {
            let mut r = tagged(y / b2);
            if double {
                r.stability = Stability::SaddleBoundary;
            }
            r
        })
        .collect();
    roots.sort_by(|l, r| l.x.total_cmp(&r.x));
    roots.dedup_by(|l, r| rel_close(l.x, r.x, COINCIDENCE_TOL));

    let regime = match roots.len() {
        3 => FixedPointRegime::Three,
        2 => FixedPointRegime::Two,
        _ => FixedPointRegime::Unique,
    };
    FixedPointReport { roots, regime }
}

/// Lemma-2 regime predicted from `(a~, b~)` alone.
pub fn predicted_regime(a_tilde: f64, b_tilde: f64) -> FixedPointRegime {
    match nu_thresholds(b_tilde) {
        None => FixedPointRegime::Unique,
        Some(nu) => {
            if rel_close(a_tilde, nu.nu1, BOUNDARY_TOL) || rel_close(a_tilde, nu.nu2, BOUNDARY_TOL)
            {
                FixedPointRegime::Two
            } else if a_tilde > nu.nu1 && a_tilde < nu.nu2 {
                FixedPointRegime::Three
            } else {
                FixedPointRegime::Unique
            }
        }
    }
}

/// Critical values of `a^2` for the 2-cycle (`star`) and for the sign of
/// the linear coefficient `B` (`bold`). Both pairs are reciprocal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// `(b*-, b*+)`, present iff `b <= sqrt(1/3)`.
    pub star: Option<(f64, f64)>,
    /// `(bold b-, bold b+)`, present iff `b <= sqrt(sqrt(2) - 1)`.
    pub bold: Option<(f64, f64)>,
}

/// Closed forms for `b*+-` and bold `b+-`.
pub fn regime_thresholds(b: f64) -> RegimeThresholds {
    let t = b.powi(4);
    let b6 = b.powi(6);

    let star = {
        let s = 9.0 * t - 1.0;
        // snap b = sqrt(1/3) evaluated in floating point onto the boundary
        let s = if s > 0.0 && s <= 1e-12 { 0.0 } else { s };
        if s <= 0.0 {
            let disc = ((t - 1.0).powi(3) * s).max(0.0);
            let plus = (1.0 - 3.0 * t * t - 6.0 * t + disc.sqrt()) / (8.0 * b6);
            // roots of 4 b^6 A^2 + (3 b^8 + 6 b^4 - 1) A + 4 b^6 multiply to 1
            Some((1.0 / plus, plus))
        } else {
            None
        }
    };

    let bold = {
        let threshold = 3.0 - 2.0 * std::f64::consts::SQRT_2;
        if t <= threshold * (1.0 + 1e-12) {
            let rad = ((t - 1.0).powi(2) - 4.0 * t).max(0.0);
            let plus = (1.0 - 4.0 * t - t * t + (1.0 - t) * rad.sqrt()) / (4.0 * b6);
            Some((1.0 / plus, plus))
        } else {
            None
        }
    };

    RegimeThresholds { star, bold }
}

/// The quadratic whose roots are the 2-cycle points of `f`, with its
/// coefficients, discriminant and regime thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCycleReport {
    /// Linear coefficient `B`.
    pub b_coef: f64,
    /// `B^2 - 4 A C` evaluated directly.
    pub d: f64,
    /// `-a^2 (b^4 - 1)^2 (4 b^6 a^4 + (3 b^8 + 6 b^4 - 1) a^2 + 4 b^6)`.
    pub d_factored: f64,
    /// 0, 1 or 2 positive roots, ascending.
    pub roots: Vec<f64>,
    /// True when `a^2` sits on `b*-` or `b*+` and the pair has merged.
    pub at_boundary: bool,
    pub thresholds: RegimeThresholds,
}

/// Coefficients `(A, B, C)` of `A x^2 + B x + C = (f(f(x)) - x) / (f(x) - x)` numerator.
pub fn two_cycle_coefficients(p: &BoltzmannParams) -> (f64, f64, f64) {
    let (a, b) = (p.a(), p.b());
    let a2 = a * a;
    let b2 = b * b;
    let b4 = b2 * b2;
    let b6 = b4 * b2;
    let b8 = b4 * b4;
    let qa = b4 * (1.0 + a2 * b2).powi(2);
    let qb = a2 * (b8 + 2.0 * (1.0 / a2 + a2) * b6 + 4.0 * b4 - 1.0);
    let qc = b4 * (a2 + b2).powi(2);
    (qa, qb, qc)
}

pub fn discriminant_factored(p: &BoltzmannParams) -> f64 {
    let (a, b) = (p.a(), p.b());
    let a2 = a * a;
    let b4 = b.powi(4);
    let b6 = b.powi(6);
    let b8 = b4 * b4;
    -a2 * (b4 - 1.0).powi(2) * (4.0 * b6 * a2 * a2 + (3.0 * b8 + 6.0 * b4 - 1.0) * a2 + 4.0 * b6)
}

pub fn two_cycle_quadratic(p: &BoltzmannParams) -> TwoCycleReport {
    let (qa, qb, qc) = two_cycle_coefficients(p);
    let (a2, b2, b4) = (p.a() * p.a(), p.b() * p.b(), p.b().powi(4));
    let k = 2.0 * b4 * (a2 + b2) * (1.0 + a2 * b2);
    let d = qb * qb - k * k;
    let d_factored = discriminant_factored(p);
    let thresholds = regime_thresholds(p.b());
    let at_boundary = thresholds
        .star
        .is_some_and(|(lo, hi)| rel_close(a2, lo, BOUNDARY_TOL) || rel_close(a2, hi, BOUNDARY_TOL));

    let roots = if qb >= 0.0 {
        vec![]
    } else if at_boundary {
        vec![-qb / (2.0 * qa)]
    } else if d_factored > 0.0 {
        let plus = (-qb + d_factored.sqrt()) / (2.0 * qa);
        let minus = qc / (qa * plus);
        vec![minus, plus]
    } else {
        vec![]
    };

    TwoCycleReport {
        b_coef: qb,
        d,
        d_factored,
        roots,
        at_boundary,
        thresholds,
    }
}

fn check_orbit(what: &'static str, residual: f64, scale: f64) -> Result<()> {
    let tol = LIFT_TOL * scale.max(1.0);
    if residual.is_finite() && residual <= tol {
        Ok(())
    } else {
        Err(Error::NotOnOrbit {
            what,
            residual,
            tolerance: tol,
        })
    }
}

/// Fixed point `u*(x) = (u1, u2, u2, u1)` of `F` above a fixed point `x` of `f`.
pub fn lift_fixed(p: &BoltzmannParams, x: f64) -> Result<StateVector> {
    if !(x > 0.0) {
        return Err(Error::InvalidInput(format!(
            "ratio must be positive, got {x}"
        )));
    }
    check_orbit("fixed-point", (scalar_f(p, x) - x).abs(), x)?;
    let (a, b) = (p.a(), p.b());
    let s1 = b + 1.0 / (b * x);
    let s2 = b + x / b;
    let u1 = 1.0 / (a * s1 * s1);
    let u2 = a / (s2 * s2);
    StateVector::new(u1, u2, u2, u1)
}

/// 2-periodic point `u_per(y)` of `F` above a fixed point `y` of `g = f o f`.
pub fn lift_two_cycle(p: &BoltzmannParams, y: f64) -> Result<StateVector> {
    if !(y > 0.0) {
        return Err(Error::InvalidInput(format!(
            "ratio must be positive, got {y}"
        )));
    }
    check_orbit("2-cycle", (scalar_g(p, y) - y).abs(), y)?;
    let (a, b) = (p.a(), p.b());
    let s1 = b + 1.0 / (b * y);
    let s2 = b / y + 1.0 / b;
    let s3 = b + y / b;
    let s4 = b * y + 1.0 / b;
    let u1 = a.powf(-1.0 / 3.0) * (a * b * s1 * s1 + s2 * s2 / (a * b)).powf(-2.0 / 3.0);
    let u2 = a.powf(1.0 / 3.0) * (b * s3 * s3 / a + a * s4 * s4 / b).powf(-2.0 / 3.0);
    StateVector::new(u1, u2, u2, u1)
}

/// `T_c = 2|J2| / ln 3`; `None` for `J2 = 0`.
pub fn critical_temperature(j2: f64) -> Option<f64> {
    if j2 == 0.0 || !j2.is_finite() {
        None
    } else {
        Some(2.0 * j2.abs() / 3f64.ln())
    }
}

/// `J1` values on the two critical curves `a^2 = b*+-` at fixed `(J2, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCurveSample {
    pub j2: f64,
    pub beta: f64,
    pub j1_plus: Option<f64>,
    pub j1_minus: Option<f64>,
}

/// Requires `J2 < 0`. Above `T_c` both branches are absent.
pub fn critical_curve(j2: f64, beta: f64) -> Result<CriticalCurveSample> {
    if !(j2 < 0.0) || !j2.is_finite() {
        return Err(Error::InvalidInput(format!(
            "critical curves need J2 < 0, got {j2}"
        )));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let b = (j2 * beta).exp();
    let branch = |v: f64| (v > 0.0).then(|| v.ln() / (2.0 * beta));
    let (j1_minus, j1_plus) = match regime_thresholds(b).star {
        Some((lo, hi)) => (branch(lo), branch(hi)),
        None => (None, None),
    };
    Ok(CriticalCurveSample {
        j2,
        beta,
        j1_plus,
        j1_minus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub paramagnetic: u8,
    pub commensurate2: u8,
}

/// Number of paramagnetic and 2-commensurate phases on M1.
///
/// Three paramagnetic phases when `b^3 sqrt(nu1) < 1/a < b^3 sqrt(nu2)`, two
/// on either equality, one otherwise.
pub fn phase_counts(c: &Couplings) -> Result<PhaseCounts> {
    let p = c.params()?;
    let paramagnetic = match nu_thresholds(p.b_tilde()) {
        None => 1,
        Some(nu) => {
            let b3 = p.b().powi(3);
            let inv_a = 1.0 / p.a();
            let (lo, hi) = (b3 * nu.nu1.sqrt(), b3 * nu.nu2.sqrt());
            // the boundary band is BOUNDARY_TOL wide in a~ = (1 / (a b^3))^2
            let band = 0.5 * BOUNDARY_TOL;
            if rel_close(inv_a, lo, band) || rel_close(inv_a, hi, band) {
                2
            } else if lo < inv_a && inv_a < hi {
                3
            } else {
                1
            }
        }
    };
    let commensurate2 = two_cycle_quadratic(&p).roots.len() as u8;
    Ok(PhaseCounts {
        paramagnetic,
        commensurate2,
    })
}

/// Positive roots of `f^period(x) = x` located by a sign scan over the
/// image of `f` and bisection.
pub fn periodic_roots(p: &BoltzmannParams, period: usize) -> Vec<f64> {
    if p.b() == 1.0 {
        return vec![p.a() * p.a()];
    }
    let (lo, hi) = image_interval(p);
    let (lo, hi) = (lo * (1.0 - 1e-9), hi * (1.0 + 1e-9));
    let decades = (hi / lo).log10();
    let n = ((SCAN_POINTS_PER_DECADE as f64 * decades).ceil() as usize).max(SCAN_POINTS_PER_DECADE);
    let ratio = (hi / lo).powf(1.0 / n as f64);
    let h = |x: f64| scalar_f_iter(p, x, period) - x;

    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut h0 = h(x0);
    for k in 1..=n {
        let x1 = if k == n {
            hi
        } else {
            lo * ratio.powi(k as i32)
        };
        let h1 = h(x1);
        if h0 == 0.0 {
            roots.push(x0);
        } else if h1 != 0.0 && (h0 > 0.0) != (h1 > 0.0) {
            roots.push(bisect(&h, x0, x1, h0));
        }
        x0 = x1;
        h0 = h1;
    }
    roots.dedup_by(|l, r| rel_close(*l, *r, COINCIDENCE_TOL));
    roots
}

/// Scan resolution for [`periodic_roots`].
pub const SCAN_POINTS_PER_DECADE: usize = 4096;

fn bisect(h: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, h_lo: f64) -> f64 {
    let lo_positive = h_lo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid);
        if hm == 0.0 {
            return mid;
        }
        if (hm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodScan {
    pub period: usize,
    pub roots: Vec<f64>,
}

/// Outcome of checking that `f` has no periodic points beyond its fixed
/// points and 2-cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodExclusionReport {
    pub fixed_points: Vec<f64>,
    pub two_cycle: Vec<f64>,
    pub scans: Vec<PeriodScan>,
    /// `(period, x)` for every root not matching a known point.
    pub violations: Vec<(usize, f64)>,
}

impl PeriodExclusionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn exclude_higher_periods(
    p: &BoltzmannParams,
    max_period: usize,
) -> Result<PeriodExclusionReport> {
    if !(3..=8).contains(&max_period) {
        return Err(Error::InvalidInput(format!(
            "max_period must lie in 3..=8, got {max_period}"
        )));
    }
    let fixed_points = solve_f_fixed_points(p).xs();
    let two_cycle = two_cycle_quadratic(p).roots;
    let known: Vec<f64> = fixed_points.iter().chain(&two_cycle).copied().collect();

    let mut scans = Vec::new();
    let mut violations = Vec::new();
    for period in 3..=max_period {
        let roots = periodic_roots(p, period);
        for &x in &roots {
            if !known.iter().any(|k| rel_close(x, *k, COINCIDENCE_TOL)) {
                violations.push((period, x));
            }
        }
        scans.push(PeriodScan { period, roots });
    }
    Ok(PeriodExclusionReport {
        fixed_points,
        two_cycle,
        scans,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_f_map, m1_residual};
    use approx::assert_relative_eq;

    fn params(a: f64, b: f64) -> BoltzmannParams {
        BoltzmannParams::from_weights(a, b).unwrap()
    }

    /// Independent count of fixed points: sign changes of f(x) - x on a dense log grid.
    fn scan_count(p: &BoltzmannParams) -> usize {
        let (lo, hi) = image_interval(p);
        let (lo, hi) = (lo * 0.999, hi * 1.001);
        let n = 200_000;
        let mut prev = scalar_f(p, lo) - lo;
        let mut count = 0;
        for k in 1..=n {
            let x = lo * (hi / lo).powf(k as f64 / n as f64);
            let cur = scalar_f(p, x) - x;
            if (cur > 0.0) != (prev > 0.0) {
                count += 1;
            }
            prev = cur;
        }
        count
    }

    #[test]
    fn trivial_point_has_unit_root() {
        let r = solve_f_fixed_points(&params(1.0, 1.0));
        assert_eq!(r.regime, FixedPointRegime::Unique);
        assert_eq!(r.roots[0].x, 1.0);
        assert_eq!(r.roots[0].stability, Stability::Stable);
    }

    #[test]
    fn unique_root_when_b_tilde_at_most_nine() {
        for &b in &[0.3, 0.9, 1.2, 3f64.sqrt()] {
            for k in -20..=20 {
                let a = (k as f64 * 0.25).exp();
                let p = params(a, b);
                let r = solve_f_fixed_points(&p);
                assert_eq!(r.roots.len(), 1, "a={a} b={b}");
                assert_eq!(scan_count(&p), 1);
                let x = r.roots[0].x;
                assert!((scalar_f(&p, x) - x).abs() <= RESIDUAL_TOL * x.max(1.0));
            }
        }
    }

    #[test]
    fn nu_thresholds_at_sixteen() {
        assert!(nu_thresholds(9.0).is_none());
        assert!(nu_thresholds(4.0).is_none());
        let nu = nu_thresholds(16.0).unwrap();
        assert_relative_eq!(nu.y1, (13.0 - 105f64.sqrt()) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(nu.y2, (13.0 + 105f64.sqrt()) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(nu.nu1, nu_of(16.0, nu.y1), max_relative = 1e-15);
        assert!(nu.nu1 < nu.nu2 && nu.nu1 > 0.0);
    }

    #[test]
    fn three_roots_inside_window() {
        let b: f64 = 2.0;
        let nu = nu_thresholds(16.0).unwrap();
        let at = (nu.nu1 * nu.nu2).sqrt();
        // a~ = a^-2 b^-6
        let a = 1.0 / (at * b.powi(6)).sqrt();
        let p = params(a, b);
        let r = solve_f_fixed_points(&p);
        assert_eq!(r.regime, FixedPointRegime::Three);
        assert_eq!(scan_count(&p), 3);
        let st: Vec<_> = r.roots.iter().map(|x| x.stability).collect();
        assert_eq!(
            st,
            vec![Stability::Stable, Stability::Unstable, Stability::Stable]
        );
        for root in &r.roots {
            assert!((scalar_f(&p, root.x) - root.x).abs() <= RESIDUAL_TOL * root.x.max(1.0));
        }
    }

    #[test]
    fn boundary_reports_double_root_once() {
        let b: f64 = 2.0;
        let nu = nu_thresholds(16.0).unwrap();
        for (nu_i, double_first) in [(nu.nu1, true), (nu.nu2, false)] {
            let a = 1.0 / (nu_i * b.powi(6)).sqrt();
            let r = solve_f_fixed_points(&params(a, b));
            assert_eq!(r.regime, FixedPointRegime::Two);
            let idx = if double_first { 0 } else { 1 };
            assert_eq!(r.roots[idx].stability, Stability::SaddleBoundary);
            assert_relative_eq!(r.roots[idx].derivative, 1.0, max_relative = 1e-6);
            assert_eq!(r.roots[1 - idx].stability, Stability::Stable);
        }
    }

    #[test]
    fn two_cycle_at_half() {
        let p = params(1.0, 0.5);
        let rep = two_cycle_quadratic(&p);
        assert!(rep.b_coef < 0.0 && rep.d > 0.0);
        assert_eq!(rep.roots.len(), 2);
        let (xm, xp) = (rep.roots[0], rep.roots[1]);
        for &y in &rep.roots {
            assert!((scalar_g(&p, y) - y).abs() <= RESIDUAL_TOL * y.max(1.0));
            assert!((scalar_f(&p, y) - y).abs() > 1e-3);
        }
        assert_relative_eq!(scalar_f(&p, xp), xm, max_relative = 1e-9);
        assert_relative_eq!(scalar_f(&p, xm), xp, max_relative = 1e-9);
        assert!((scalar_f_prime(&p, xp) * scalar_f_prime(&p, xm)).abs() < 1.0);
        // direct and factored discriminants agree
        assert_relative_eq!(rep.d, rep.d_factored, max_relative = 1e-12);
    }

    #[test]
    fn no_two_cycle_above_threshold_or_at_one() {
        for k in -10..=10 {
            let a = (k as f64 * 0.3).exp();
            assert!(two_cycle_quadratic(&params(a, 0.9)).roots.is_empty());
            let rep = two_cycle_quadratic(&params(a, 1.0));
            assert_eq!(rep.d_factored, 0.0);
            assert!(rep.roots.is_empty());
        }
    }

    #[test]
    fn thresholds_at_half() {
        let th = regime_thresholds(0.5);
        let (lo, hi) = th.star.unwrap();
        // frozen from the closed form evaluated in extended precision
        assert_relative_eq!(lo, 0.10299182845643795, max_relative = 1e-13);
        assert_relative_eq!(hi, 9.709508171543561, max_relative = 1e-13);
        let (blo, bhi) = th.bold.unwrap();
        assert!(blo <= lo && hi <= bhi);

        let th = regime_thresholds((1.0f64 / 3.0).sqrt());
        let (lo, hi) = th.star.unwrap();
        assert_relative_eq!(lo, hi, max_relative = 1e-6);

        assert!(regime_thresholds(0.9).star.is_none());
        assert!(regime_thresholds(0.7).bold.is_none());
        assert!(regime_thresholds(0.6).bold.is_some());
        assert!(regime_thresholds(0.6).star.is_none());
        assert!(regime_thresholds(0.7).star.is_none());
    }

    #[test]
    fn lift_fixed_examples() {
        let p = params(1.0, 1.0);
        let u = lift_fixed(&p, 1.0).unwrap();
        assert_eq!(u.as_array(), [0.25; 4]);
        assert_eq!(apply_f_map(&p, &u).unwrap().as_array(), [0.25; 4]);
        assert!(lift_fixed(&p, 2.0).is_err());

        let nu = nu_thresholds(16.0).unwrap();
        let a = 1.0 / ((nu.nu1 * nu.nu2).sqrt() * 64.0).sqrt();
        let p = params(a, 2.0);
        for x in solve_f_fixed_points(&p).xs() {
            let u = lift_fixed(&p, x).unwrap();
            assert_eq!(m1_residual(&u), 0.0);
            let fu = apply_f_map(&p, &u).unwrap();
            let res = crate::model::max_diff(&fu.as_array(), &u.as_array()) / u.max_norm();
            assert!(res <= 1e-9, "residual {res}");
        }
    }

    #[test]
    fn lift_two_cycle_partner_identity() {
        let p = params(1.0, 0.5);
        let rep = two_cycle_quadratic(&p);
        let xp = rep.roots[1];
        let u = lift_two_cycle(&p, xp).unwrap();
        let fu = apply_f_map(&p, &u).unwrap();
        let ffu = apply_f_map(&p, &fu).unwrap();
        let scale = u.max_norm();
        assert!(crate::model::max_diff(&ffu.as_array(), &u.as_array()) / scale <= 1e-9);
        assert!(crate::model::max_diff(&fu.as_array(), &u.as_array()) / scale > 1e-3);
        let partner = lift_two_cycle(&p, scalar_f(&p, xp)).unwrap();
        assert!(
            crate::model::max_diff(&fu.as_array(), &partner.as_array()) / fu.max_norm() <= 1e-9
        );
        assert!(lift_two_cycle(&p, 2.0).is_err());
    }

    #[test]
    fn critical_temperature_examples() {
        assert_eq!(critical_temperature(3f64.ln() / 2.0), Some(1.0));
        assert_relative_eq!(
            critical_temperature(-3f64.ln()).unwrap(),
            2.0,
            max_relative = 1e-15
        );
        assert_eq!(critical_temperature(0.0), None);
        let j2 = 0.7;
        let tc = critical_temperature(j2).unwrap();
        assert_relative_eq!((4.0 * j2 / tc).exp(), 9.0, max_relative = 1e-12);
    }

    #[test]
    fn critical_curve_inverts_thresholds() {
        // b = 0.5 at beta = 1
        let j2 = 0.5f64.ln();
        let s = critical_curve(j2, 1.0).unwrap();
        let (lo, hi) = regime_thresholds(0.5).star.unwrap();
        assert_relative_eq!((2.0 * s.j1_plus.unwrap()).exp(), hi, max_relative = 1e-12);
        assert_relative_eq!((2.0 * s.j1_minus.unwrap()).exp(), lo, max_relative = 1e-12);
        // closed form J1 = (1/2beta) ln(...) - 3 J2
        let t = 0.5f64.powi(4);
        let explicit = 0.5
            * ((1.0 - 3.0 * t * t - 6.0 * t + ((t - 1.0).powi(3) * (9.0 * t - 1.0)).sqrt()) / 8.0)
                .ln()
            - 3.0 * j2;
        assert_relative_eq!(s.j1_plus.unwrap(), explicit, max_relative = 1e-12);

        assert!(critical_curve(0.3, 1.0).is_err());
        let above = critical_curve(-0.1, 1.0).unwrap();
        assert!(above.j1_plus.is_none() && above.j1_minus.is_none());
    }

    #[test]
    fn phase_counts_examples() {
        let c = Couplings::new(0.4, 1.0, 2.0).unwrap();
        assert_eq!(
            phase_counts(&c).unwrap(),
            PhaseCounts {
                paramagnetic: 1,
                commensurate2: 0
            }
        );
        let c = Couplings::new(0.4, -1.0, 2.0).unwrap();
        let pc = phase_counts(&c).unwrap();
        assert_eq!(pc.paramagnetic, 1);
        assert!(pc.commensurate2 <= 1);
        // b = 0.5, a = 1
        let c = Couplings::new(0.0, 0.5f64.ln(), 1.0).unwrap();
        assert_eq!(phase_counts(&c).unwrap().commensurate2, 2);
    }

    #[test]
    fn exclusion_both_sides_of_one() {
        let rep = exclude_higher_periods(&params(0.8, 2.0), 3).unwrap();
        assert!(rep.is_clean(), "{:?}", rep.violations);
        let rep = exclude_higher_periods(&params(1.0, 0.5), 4).unwrap();
        assert!(rep.is_clean(), "{:?}", rep.violations);
        assert_eq!(rep.scans[1].roots.len(), 3);
        let rep = exclude_higher_periods(&params(1.3, 1.0), 5).unwrap();
        assert!(rep.scans.iter().all(|s| s.roots == vec![1.3 * 1.3]));
        assert!(exclude_higher_periods(&params(1.0, 1.0), 2).is_err());
        assert!(exclude_higher_periods(&params(1.0, 1.0), 9).is_err());
    }

    #[test]
    fn b_star_ordering_inside_bold() {
        for k in 1..60 {
            let b = 0.57 * k as f64 / 60.0;
            let th = regime_thresholds(b);
            let (s_lo, s_hi) = th.star.unwrap();
            assert!(s_lo < s_hi);
            let (b_lo, b_hi) = th.bold.unwrap();
            assert!(
                b_lo <= s_lo * (1.0 + 1e-12) && s_hi <= b_hi * (1.0 + 1e-12),
                "b={b}"
            );
        }
    }
}

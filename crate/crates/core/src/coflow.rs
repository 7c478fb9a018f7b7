//! Modified coflow of the contact Calabi–Yau Ansatz `φ_t = b³ReΥ + ab² η∧ω`,
//! which reduces to `a = εb⁻³` and the scalar ODE
//! `db/dt = ½ ε b⁻⁹ (A b⁵ − ε)`, `b(0) = 1`.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoflowError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("b must be positive, got {0}")]
    NonPositiveB(f64),
    #[error("t = {t} is at or beyond the blow-up time {blowup}")]
    BeyondBlowup { t: f64, blowup: f64 },
    #[error("excluded parameter values: {0}")]
    Excluded(String),
    #[error("trajectory has no finite blow-up time")]
    NoFiniteTime,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzParams {
    /// Initial fiber scale, `φ₀ = ReΥ + ε η∧ω`.
    pub epsilon: f64,
    /// Modification constant.
    #[serde(rename = "A")]
    pub a_mod: f64,
    /// Coefficient of `|∇T|² = c₀ a⁴ b⁻⁸`.
    #[serde(default)]
    pub c0: f64,
    /// `|Rm₀|²` of the transverse metric at `t = 0`.
    #[serde(default)]
    pub rm0_sq: f64,
}

impl AnsatzParams {
    pub fn new(epsilon: f64, a_mod: f64) -> Result<Self, CoflowError> {
        let p = AnsatzParams { epsilon, a_mod, c0: 0.0, rm0_sq: 0.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CoflowError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CoflowError::InvalidParams(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !self.a_mod.is_finite() {
            return Err(CoflowError::InvalidParams("A must be finite".into()));
        }
        if !(self.c0 >= 0.0 && self.rm0_sq >= 0.0) {
            return Err(CoflowError::InvalidParams("c0 and rm0_sq must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzState {
    pub t: f64,
    pub a: f64,
    pub b: f64,
}

impl AnsatzState {
    fn at(t: f64, b: f64, p: &AnsatzParams) -> Self {
        AnsatzState { t, a: p.epsilon * b.powi(-3), b }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Horizon,
    Steady,
    BlowUp,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<AnsatzState>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub termination: Termination,
    /// Extrapolated hitting time of `b = 0` when terminated by blow-up.
    pub blowup_estimate: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &AnsatzState {
        self.states.last().expect("nonempty trajectory")
    }

    /// `d(vol)/dt` with `vol ∝ a b⁶ = ε b³`, per state. Recorded, no sign asserted.
    pub fn volume_rates(&self, p: &AnsatzParams) -> Vec<f64> {
        self.states.iter().map(|s| 3.0 * p.epsilon * s.b * s.b * rhs_unchecked(s.b, p)).collect()
    }
}

fn rhs_unchecked(b: f64, p: &AnsatzParams) -> f64 {
    0.5 * p.epsilon * b.powi(-9) * (p.a_mod * b.powi(5) - p.epsilon)
}

/// `db/dt = ½ ε b⁻⁹ (A b⁵ − ε)`.
pub fn rhs(b: f64, p: &AnsatzParams) -> Result<f64, CoflowError> {
    if !(b > 0.0) {
        return Err(CoflowError::NonPositiveB(b));
    }
    Ok(rhs_unchecked(b, p))
}

/// Integration controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Blow-up guard on `b`.
    pub b_min: f64,
    /// `|db/dt|` below which the state is declared steady.
    pub steady_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rtol: 1e-10, atol: 1e-14, b_min: 1e-4, steady_tol: 1e-14, max_steps: 2_000_000 }
    }
}

// Dormand–Prince 5(4) tableau; the ODE is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One DOPRI5 step of a scalar ODE; `None` if a stage leaves the domain.
fn dopri_step(f: &impl Fn(f64) -> Option<f64>, y: f64, h: f64) -> Option<(f64, f64)> {
    let mut k = [0.0; 7];
    for s in 0..7 {
        let yi = y + h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
        k[s] = f(yi)?;
    }
    let y5 = y + h * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
    let y4 = y + h * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
    Some((y5, (y5 - y4).abs()))
}

struct Scalar {
    t: f64,
    y: f64,
}

/// Adaptive DOPRI5 for `y' = f(y)` until `t_end` or `stop(y)`.
///
/// Returns the accepted points, counts and whether the step size underflowed.
fn adaptive(
    f: impl Fn(f64) -> Option<f64>,
    y0: f64,
    t_end: f64,
    opts: &IntegratorOptions,
    stop: impl Fn(f64) -> bool,
) -> (Vec<Scalar>, usize, usize, bool) {
    let mut out = vec![Scalar { t: 0.0, y: y0 }];
    let (mut t, mut y) = (0.0, y0);
    let mut h = (t_end * 1e-3).min(1e-3);
    let (mut accepted, mut rejected) = (0, 0);
    while t < t_end && accepted + rejected < opts.max_steps {
        if stop(y) {
            return (out, accepted, rejected, false);
        }
        h = h.min(t_end - t);
        if h <= f64::EPSILON * t.abs().max(1e-300) * 4.0 {
            return (out, accepted, rejected, true);
        }
        match dopri_step(&f, y, h) {
            Some((y_new, err)) if y_new.is_finite() => {
                let scale = opts.atol + opts.rtol * y.abs().max(y_new.abs());
                let ratio = err / scale;
                if ratio <= 1.0 {
                    t = if t_end - t - h <= 0.0 { t_end } else { t + h };
                    y = y_new;
                    out.push(Scalar { t, y });
                    accepted += 1;
                }
                else {
                    rejected += 1;
                }
                let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                h *= if ratio <= 1.0 { factor } else { factor.min(1.0) };
            }
            _ => {
                rejected += 1;
                h *= 0.25;
            }
        }
    }
    (out, accepted, rejected, false)
}

/// Hitting time of `u = b¹⁰ = 0` from the last states, where
/// `du/dt = 5ε(A√u − ε)`: a Newton step in `u` from each of the last two
/// states, combined by Richardson extrapolation (error `∝ u^{3/2}`).
fn extrapolate_blowup(states: &[AnsatzState], p: &AnsatzParams) -> f64 {
    let newton = |s: &AnsatzState| {
        let u = s.b.powi(10);
        let du = 5.0 * p.epsilon * (p.a_mod * u.sqrt() - p.epsilon);
        (s.t - u / du, u.powf(1.5))
    };
    let n = states.len();
    let (t2, w2) = newton(&states[n - 1]);
    if n < 2 {
        return t2;
    }
    let (t1, w1) = newton(&states[n - 2]);
    if (w1 - w2).abs() <= f64::MIN_POSITIVE || w1 == 0.0 {
        return t2;
    }
    (t2 * w1 - t1 * w2) / (w1 - w2)
}

/// Integrate the Ansatz ODE from `b(0) = 1`.
pub fn integrate(p: &AnsatzParams, t_end: f64, tol: f64) -> Result<Trajectory, CoflowError> {
    integrate_with(p, t_end, &IntegratorOptions { rtol: tol, ..Default::default() })
}

pub fn integrate_with(p: &AnsatzParams, t_end: f64, opts: &IntegratorOptions) -> Result<Trajectory, CoflowError> {
    p.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(CoflowError::InvalidParams(format!("t_end must be positive, got {t_end}")));
    }
    if rhs_unchecked(1.0, p).abs() < opts.steady_tol {
        // A steady initial state stays put for all time.
        let states = vec![AnsatzState::at(0.0, 1.0, p), AnsatzState::at(t_end, 1.0, p)];
        return Ok(Trajectory { states, accepted_steps: 0, rejected_steps: 0, termination: Termination::Steady, blowup_estimate: None });
    }
    let f = |b: f64| (b > 0.0).then(|| rhs_unchecked(b, p));
    let (pts, accepted, rejected, underflow) = adaptive(f, 1.0, t_end, opts, |b| {
        b < opts.b_min || rhs_unchecked(b, p).abs() < opts.steady_tol
    });
    let states: Vec<AnsatzState> = pts.iter().map(|s| AnsatzState::at(s.t, s.y, p)).collect();
    let last = states.last().expect("initial state");
    let termination = if underflow || last.b < opts.b_min {
        Termination::BlowUp
    } else if last.t < t_end && rhs_unchecked(last.b, p).abs() < opts.steady_tol {
        Termination::Steady
    } else {
        Termination::Horizon
    };
    let blowup_estimate = (termination == Termination::BlowUp).then(|| extrapolate_blowup(&states, p));
    Ok(Trajectory { states, accepted_steps: accepted, rejected_steps: rejected, termination, blowup_estimate })
}

/// Same flow through `u = b¹⁰`, where `du/dt = 5ε(A√u − ε)` is linear for `A = 0`.
pub fn integrate_u(p: &AnsatzParams, t_end: f64, tol: f64) -> Result<Trajectory, CoflowError> {
    p.validate()?;
    let opts = IntegratorOptions { rtol: tol, ..Default::default() };
    let f = |u: f64| (u >= 0.0).then(|| 5.0 * p.epsilon * (p.a_mod * u.sqrt() - p.epsilon));
    let u_min = opts.b_min.powi(10);
    let (pts, accepted, rejected, underflow) = adaptive(f, 1.0, t_end, &opts, |u| u < u_min);
    let states: Vec<AnsatzState> = pts.iter().map(|s| AnsatzState::at(s.t, s.y.max(0.0).powf(0.1), p)).collect();
    let last = states.last().expect("initial state");
    let blown = underflow || last.b < opts.b_min || last.t < t_end;
    let termination = if blown { Termination::BlowUp } else { Termination::Horizon };
    let blowup_estimate = blown.then(|| extrapolate_blowup(&states, p));
    Ok(Trajectory { states, accepted_steps: accepted, rejected_steps: rejected, termination, blowup_estimate })
}

/// `a = ε(1 − 5ε²t)^{−3/10}`, `b = (1 − 5ε²t)^{1/10}` for `A = 0`.
pub fn closed_form_a0(t: f64, epsilon: f64) -> Result<AnsatzState, CoflowError> {
    AnsatzParams::new(epsilon, 0.0)?;
    let s = 1.0 - 5.0 * epsilon * epsilon * t;
    if !(s > 0.0) {
        return Err(CoflowError::BeyondBlowup { t, blowup: 1.0 / (5.0 * epsilon * epsilon) });
    }
    Ok(AnsatzState { t, a: epsilon * s.powf(-0.3), b: s.powf(0.1) })
}

/// `b⁵/5A + ε/5A² ln|Ab⁵ − ε| − ½εt − 1/5A − ε/5A² ln|A − ε|`.
pub fn implicit_residual(state: &AnsatzState, p: &AnsatzParams) -> Result<f64, CoflowError> {
    let (a, e, b) = (p.a_mod, p.epsilon, state.b);
    if a == 0.0 || a == e {
        return Err(CoflowError::Excluded("implicit relation needs A ∉ {0, ε}".into()));
    }
    let b5 = b.powi(5);
    if a * b5 == e {
        return Err(CoflowError::Excluded("A b⁵ = ε".into()));
    }
    let lhs = b5 / (5.0 * a) + e / (5.0 * a * a) * (a * b5 - e).abs().ln();
    let rhs = 0.5 * e * state.t + 1.0 / (5.0 * a) + e / (5.0 * a * a) * (a - e).abs().ln();
    Ok(lhs - rhs)
}

/// Finite blow-up time of `b`, or `∞`.
pub fn blowup_time(p: &AnsatzParams) -> f64 {
    let (a, e) = (p.a_mod, p.epsilon);
    if a == 0.0 {
        1.0 / (5.0 * e * e)
    } else if a < e {
        2.0 / (5.0 * e * a) * (e / a * (e / (e - a)).abs().ln() - 1.0)
    } else {
        f64::INFINITY
    }
}

/// Rows of the regime table, serialized by the behaviour of `b` from `b(0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `A < 0`
    #[serde(rename = "monotonically decreasing")]
    NegativeModification,
    /// `A = 0`
    #[serde(rename = "collapse")]
    Unmodified,
    /// `0 < A < ε`
    #[serde(rename = "decreasing")]
    WeakModification,
    /// `A = ε`
    #[serde(rename = "constant")]
    Balanced,
    /// `A > ε`
    #[serde(rename = "monotonically increasing")]
    StrongModification,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Decreasing,
    Constant,
    Increasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub condition: String,
    /// Positive steady state `(ε/A)^{1/5}`, if one exists.
    pub steady_state: Option<f64>,
    /// Real fifth root `(ε/A)^{1/5}` even when it is not admissible.
    pub formal_steady_state: Option<f64>,
    /// Sign of `d(rhs)/db` at the formal steady state.
    pub formal_stability: Option<Stability>,
    pub monotonicity: Monotonicity,
    pub behaviour: String,
    pub blowup_time: f64,
}

/// Analytic classification of the solution from `b(0) = 1`.
pub fn classify_regime(p: &AnsatzParams) -> RegimeReport {
    let (a, e) = (p.a_mod, p.epsilon);
    let regime = if a < 0.0 {
        Regime::NegativeModification
    } else if a == 0.0 {
        Regime::Unmodified
    } else if a < e {
        Regime::WeakModification
    } else if a == e {
        Regime::Balanced
    } else {
        Regime::StrongModification
    };
    let formal = (a != 0.0).then(|| (e / a).abs().powf(0.2).copysign(e / a));
    // d/db [½ε(A b⁻⁴ − ε b⁻⁹)] at b⁵ = ε/A equals (5/2)A² > 0.
    let formal_stability = formal.map(|b| {
        let slope = 0.5 * e * (-4.0 * a * b.powi(-5) + 9.0 * e * b.powi(-10));
        if slope > 0.0 { Stability::Unstable } else { Stability::Stable }
    });
    let steady_state = formal.filter(|b| *b > 0.0);
    let (condition, monotonicity, behaviour) = match regime {
        Regime::NegativeModification => ("A < 0", Monotonicity::Decreasing, "no admissible steady state; b decreasing, collapses in finite time".to_string()),
        Regime::Unmodified => (
            "A = 0",
            Monotonicity::Decreasing,
            format!("no steady state; b = (1 − 5ε²t)^(1/10) decreasing, collapses at T = {}", blowup_time(p)),
        ),
        Regime::WeakModification => ("0 < A < ε", Monotonicity::Decreasing, "b decreasing away from the steady state, collapses in finite time".to_string()),
        Regime::Balanced => ("A = ε > 0", Monotonicity::Constant, "constant".to_string()),
        Regime::StrongModification => ("0 < ε < A", Monotonicity::Increasing, "monotonically increasing, b → ∞ as t → ∞".to_string()),
    };
    RegimeReport {
        regime,
        condition: condition.to_string(),
        steady_state,
        formal_steady_state: formal,
        formal_stability,
        monotonicity,
        behaviour,
        blowup_time: blowup_time(p),
    }
}

/// Observed monotonicity of `b` along a trajectory.
pub fn observed_monotonicity(traj: &Trajectory) -> Option<Monotonicity> {
    let diffs: Vec<f64> = traj.states.windows(2).map(|w| w[1].b - w[0].b).collect();
    if diffs.iter().all(|d| *d == 0.0) {
        Some(Monotonicity::Constant)
    } else if diffs.iter().all(|d| *d < 0.0) {
        Some(Monotonicity::Decreasing)
    } else if diffs.iter().all(|d| *d > 0.0) {
        Some(Monotonicity::Increasing)
    } else {
        None
    }
}

/// `Λ = b⁻¹⁰ (b¹⁶|Rm₀|² + 2c₀ε⁴ + (15/4)²ε⁴)^{1/2}`.
pub fn lambda_t(state: &AnsatzState, p: &AnsatzParams) -> Result<f64, CoflowError> {
    let b = state.b;
    if !(b > 0.0) {
        return Err(CoflowError::NonPositiveB(b));
    }
    let e4 = p.epsilon.powi(4);
    Ok(b.powi(-10) * (b.powi(16) * p.rm0_sq + 2.0 * p.c0 * e4 + (15.0 / 4.0f64).powi(2) * e4).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularityType {
    #[serde(rename = "Type I")]
    TypeI,
    #[serde(rename = "Type IIa")]
    TypeIIa,
    #[serde(rename = "none")]
    None,
}

/// `None` (no finite blow-up) as the string `"infinity"` in JSON.
pub mod tmax_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Named(String),
    }

    pub fn serialize<S: Serializer>(t: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(v) => Repr::Finite(*v).serialize(s),
            None => Repr::Named("infinity".into()).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Finite(v) => Ok(Some(v)),
            Repr::Named(n) if n == "infinity" => Ok(None),
            Repr::Named(n) => Err(serde::de::Error::custom(format!("expected a number or \"infinity\", got {n:?}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularityReport {
    /// Finite blow-up time, or `None` for `∞`.
    #[serde(rename = "T_max", with = "tmax_serde")]
    pub t_max: Option<f64>,
    #[serde(rename = "type")]
    pub kind: SingularityType,
    /// Largest observed `(T − t)Λ(t)`.
    pub sup_quantity: Option<f64>,
    /// `(t, Λ(t))` along the trajectory.
    pub lambda_series: Vec<(f64, f64)>,
}

/// Remaining times `T − t` below this fraction of `T` are not resolvable in
/// double precision (`t` itself carries an ulp of `T`) and are left out of
/// the `(T − t)Λ` series.
pub const RESOLVABLE_FRACTION: f64 = 1e-8;

/// The reported blow-up time: the analytic value when finite, else the
/// integrator's extrapolated hitting time.
fn trajectory_tmax(traj: &Trajectory, p: &AnsatzParams) -> Option<f64> {
    let analytic = blowup_time(p);
    if analytic.is_finite() {
        Some(analytic)
    } else if traj.termination == Termination::BlowUp {
        traj.blowup_estimate
    } else {
        None
    }
}

/// The `T` paired with `t` in `(T − t)Λ`: the trajectory's own hitting time
/// when it ran into the singularity, so that its phase error cancels.
fn series_tmax(traj: &Trajectory, p: &AnsatzParams) -> Option<f64> {
    match (traj.termination, traj.blowup_estimate) {
        (Termination::BlowUp, Some(t)) => Some(t),
        _ => trajectory_tmax(traj, p),
    }
}

/// `(t, (T − t)Λ(t))` over the resolvable part of the trajectory.
pub fn singularity_series(traj: &Trajectory, p: &AnsatzParams) -> Result<Vec<(f64, f64)>, CoflowError> {
    let t_max = series_tmax(traj, p).ok_or(CoflowError::NoFiniteTime)?;
    traj.states
        .iter()
        .filter(|s| t_max - s.t >= RESOLVABLE_FRACTION * t_max)
        .map(|s| lambda_t(s, p).map(|l| (s.t, (t_max - s.t) * l)))
        .collect()
}

/// `sup (T − t)Λ(t) < ∞` decides Type I, tested on the sampled series: the
/// last decade of `T − t` must be non-increasing or stay within ten times
/// the median of the whole series.
pub fn classify_singularity(traj: &Trajectory, p: &AnsatzParams) -> Result<SingularityReport, CoflowError> {
    let lambda_series: Vec<(f64, f64)> =
        traj.states.iter().map(|s| lambda_t(s, p).map(|l| (s.t, l))).collect::<Result<_, _>>()?;
    let (Some(t_max), Some(t_series)) = (trajectory_tmax(traj, p), series_tmax(traj, p)) else {
        return Ok(SingularityReport { t_max: None, kind: SingularityType::None, sup_quantity: None, lambda_series });
    };
    let series: Vec<(f64, f64)> =
        singularity_series(traj, p)?.into_iter().map(|(t, q)| (t_series - t, q)).collect();
    if series.is_empty() {
        return Err(CoflowError::NoFiniteTime);
    }
    let sup = series.iter().map(|(_, q)| *q).fold(f64::NEG_INFINITY, f64::max);
    let closest = series.iter().map(|(d, _)| *d).fold(f64::INFINITY, f64::min);
    let tail: Vec<f64> = series.iter().filter(|(d, _)| *d <= 10.0 * closest).map(|(_, q)| *q).collect();
    let mut all: Vec<f64> = series.iter().map(|(_, q)| *q).collect();
    all.sort_by(f64::total_cmp);
    let median = all[all.len() / 2];
    let non_increasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let bounded = tail.iter().all(|q| *q <= 10.0 * median);
    let kind = if non_increasing || bounded { SingularityType::TypeI } else { SingularityType::TypeIIa };
    Ok(SingularityReport { t_max: Some(t_max), kind, sup_quantity: Some(sup), lambda_series })
}

pub const CSV_HEADER: [&str; 5] = ["t", "a", "b", "lambda", "T_minus_t_times_lambda"];

/// Trajectory as CSV with header `t,a,b,lambda,T_minus_t_times_lambda`.
/// The last column pairs `t` with the same `T` as [`singularity_series`] and
/// is empty when there is no finite blow-up time.
pub fn write_csv(traj: &Trajectory, p: &AnsatzParams, out: impl Write) -> Result<(), CoflowError> {
    let t_max = series_tmax(traj, p);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in &traj.states {
        let l = lambda_t(s, p)?;
        let q = t_max.map(|tm| ((tm - s.t) * l).to_string()).unwrap_or_default();
        w.write_record([s.t.to_string(), s.a.to_string(), s.b.to_string(), l.to_string(), q])?;
    }
    w.flush()?;
    Ok(())
}

/// Recovered from a trajectory CSV: the states and the parameters that
/// reproduce them.
#[derive(Clone, Debug)]
pub struct CsvTrajectory {
    pub trajectory: Trajectory,
    pub params: AnsatzParams,
}

/// Read a trajectory CSV and recover `(ε, A, c₀, |Rm₀|²)`.
///
/// `ε = a b³` from the first row; `A` by shooting (see [`shoot_modification`]); `c₀` and `|Rm₀|²` by
/// least squares on `Λ²b²⁰ = b¹⁶|Rm₀|² + 2c₀ε⁴ + (15/4)²ε⁴`.
pub fn read_csv(input: impl Read) -> Result<CsvTrajectory, CoflowError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(CoflowError::InvalidParams(format!("unexpected CSV header {headers:?}")));
    }
    let mut rows: Vec<(AnsatzState, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, CoflowError> {
            rec[i].parse().map_err(|_| CoflowError::InvalidParams(format!("bad number {:?}", &rec[i])))
        };
        rows.push((AnsatzState { t: num(0)?, a: num(1)?, b: num(2)? }, num(3)?));
    }
    if rows.len() < 2 {
        return Err(CoflowError::InvalidParams("trajectory needs at least two rows".into()));
    }
    let first = rows[0].0;
    let epsilon = first.a * first.b.powi(3);

    let constant = rows.iter().all(|(s, _)| s.b == first.b);
    let a_mod = if constant { epsilon } else { shoot_modification(&rows, epsilon)? };

    // Normal equations for (rm0_sq, c0).
    let e4 = epsilon.powi(4);
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (s, l) in &rows {
        let y = l * l * s.b.powi(20) - (15.0 / 4.0f64).powi(2) * e4;
        let (x1, x2) = (s.b.powi(16), 2.0 * e4);
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        r1 += x1 * y;
        r2 += x2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    let (rm0_sq, c0) = if det.abs() > 1e-12 * s11 * s22 {
        ((r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det)
    } else {
        (0.0, r2 / s22)
    };
    let clean = |v: f64| if v.abs() < 1e-9 { 0.0 } else { v.max(0.0) };
    let params = AnsatzParams { epsilon, a_mod, c0: clean(c0), rm0_sq: clean(rm0_sq) };
    params.validate()?;

    let states: Vec<AnsatzState> = rows.iter().map(|(s, _)| *s).collect();
    let last = *states.last().expect("rows");
    let termination = if constant {
        Termination::Steady
    } else if last.b < 0.05 && blowup_time(&params).is_finite() {
        Termination::BlowUp
    } else {
        Termination::Horizon
    };
    let n = states.len();
    let blowup_estimate = (termination == Termination::BlowUp).then(|| extrapolate_blowup(&states, &params));
    Ok(CsvTrajectory {
        trajectory: Trajectory { states, accepted_steps: n - 1, rejected_steps: 0, termination, blowup_estimate },
        params,
    })
}

/// `A` such that the flow from `b(0) = 1` hits the recorded `b` at the row
/// farthest from 1 (ignoring rows near collapse). `b(t)` increases with `A`,
/// so bisection applies; results within `1e-6` of `0` or `ε` are snapped.
fn shoot_modification(rows: &[(AnsatzState, f64)], epsilon: f64) -> Result<f64, CoflowError> {
    let target = rows
        .iter()
        .filter(|(s, _)| s.t > 0.0 && s.b > 0.05)
        .max_by(|x, y| (x.0.b - 1.0).abs().total_cmp(&(y.0.b - 1.0).abs()))
        .map(|(s, _)| *s)
        .ok_or_else(|| CoflowError::InvalidParams("no usable row to recover A".into()))?;
    let b_at = |a: f64| -> Result<f64, CoflowError> {
        let traj = integrate(&AnsatzParams::new(epsilon, a)?, target.t, 1e-12)?;
        let last = traj.last();
        Ok(if last.t < target.t { 0.0 } else { last.b })
    };
    let (mut lo, mut hi) = (-epsilon, epsilon);
    while b_at(lo)? > target.b {
        lo *= 2.0;
    }
    while b_at(hi)? < target.b {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * epsilon.max(1.0) {
            break;
        }
        if b_at(mid)? < target.b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    let snap = 1e-6 * epsilon.max(1.0);
    Ok(if a.abs() < snap {
        0.0
    } else if (a - epsilon).abs() < snap {
        epsilon
    } else {
        a
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepEntry {
    pub params: AnsatzParams,
    pub regime: Regime,
    #[serde(rename = "T_max", with = "tmax_serde")]
    pub t_max: Option<f64>,
    #[serde(rename = "type")]
    pub kind: SingularityType,
}

/// Integrate and classify each parameter set in parallel.
pub fn sweep(params: &[AnsatzParams], t_end: f64, tol: f64) -> Result<Vec<SweepEntry>, CoflowError> {
    params
        .par_iter()
        .map(|p| {
            let horizon = t_end.min(blowup_time(p) * 1.5);
            let traj = integrate(p, horizon, tol)?;
            let sing = classify_singularity(&traj, p)?;
            Ok(SweepEntry { params: *p, regime: classify_regime(p).regime, t_max: sing.t_max, kind: sing.kind })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(e: f64, a: f64) -> AnsatzParams {
        AnsatzParams::new(e, a).unwrap()
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(rhs(1.0, &params(1.0, 1.0)).unwrap(), 0.0);
        assert_eq!(rhs(1.0, &params(1.0, 0.0)).unwrap(), -0.5);
        let p = params(1.0, 2.0);
        assert!(rhs(0.5f64.powf(0.2), &p).unwrap().abs() < 1e-13);
        assert!(rhs(0.0, &p).is_err());
        assert!(AnsatzParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_solves_the_ode() {
        let e = 1.3;
        let p = params(e, 0.0);
        let tmax = 1.0 / (5.0 * e * e);
        assert_eq!(closed_form_a0(0.0, e).unwrap(), AnsatzState { t: 0.0, a: e, b: 1.0 });
        for i in 1..20 {
            let t = tmax * i as f64 / 21.0;
            let s = closed_form_a0(t, e).unwrap();
            // d/dt (1 − 5ε²t)^{1/10} = −½ε² (1 − 5ε²t)^{−9/10}
            let db = -0.5 * e * e * (1.0 - 5.0 * e * e * t).powf(-0.9);
            assert!((db - rhs(s.b, &p).unwrap()).abs() < 1e-10 * db.abs().max(1.0));
        }
        assert!(closed_form_a0(tmax, e).is_err());
        let near = closed_form_a0(tmax * (1.0 - 1e-12), e).unwrap();
        assert!(near.b < 0.1 && near.a > 1e3);
    }

    #[test]
    fn conservation_and_monotone_sign() {
        for a in [-1.0, 0.0, 0.5, 2.0] {
            let p = params(1.0, a);
            let traj = integrate(&p, 0.5, 1e-10).unwrap();
            for s in &traj.states {
                assert!((s.a * s.b.powi(3) - 1.0).abs() < 1e-12);
            }
            let expected = classify_regime(&p).monotonicity;
            assert_eq!(observed_monotonicity(&traj), Some(expected), "A = {a}");
        }
    }

    #[test]
    fn implicit_relation_at_start() {
        let p = params(1.0, 0.5);
        assert_eq!(implicit_residual(&AnsatzState::at(0.0, 1.0, &p), &p).unwrap(), 0.0);
        assert!(implicit_residual(&AnsatzState::at(0.0, 1.0, &p), &params(1.0, 0.0)).is_err());
    }

    #[test]
    fn blowup_times() {
        assert_eq!(blowup_time(&params(1.0, 0.0)), 0.2);
        assert_eq!(blowup_time(&params(1.0, 1.0)), f64::INFINITY);
        let p = params(1.0, 0.5);
        let expected = 0.8 * (2.0 * 2f64.ln() - 1.0);
        assert!((blowup_time(&p) - expected).abs() < 1e-15);
        let traj = integrate(&p, 1.0, 1e-10).unwrap();
        assert_eq!(traj.termination, Termination::BlowUp);
        let hit = traj.states.iter().find(|s| s.b < 1e-3).map_or(traj.blowup_estimate.unwrap(), |s| s.t);
        assert!((hit - expected).abs() < 1e-3);
    }

    #[test]
    fn lambda_values() {
        let p = params(1.0, 0.0);
        assert_eq!(lambda_t(&AnsatzState::at(0.0, 1.0, &p), &p).unwrap(), 3.75);
        // The torsion term of Λ² is (|T|²)² with |T|² = (15/4)a²b⁻⁴ and a = εb⁻³.
        let (e, b) = (0.7f64, 0.6f64);
        let a = e * b.powi(-3);
        let t2 = 15.0 / 4.0 * a * a * b.powi(-4);
        assert!((t2 * t2 - (15.0 / 4.0f64).powi(2) * e.powi(4) * b.powi(-20)).abs() < 1e-9 * t2 * t2);
    }

    #[test]
    fn table_rows() {
        let neg = classify_regime(&params(1.0, -1.0));
        assert_eq!(neg.steady_state, None);
        assert_eq!(neg.formal_steady_state, Some(-1.0));
        assert_eq!(neg.monotonicity, Monotonicity::Decreasing);
        let weak = classify_regime(&params(1.0, 0.5));
        assert!(weak.steady_state.unwrap() > 1.0);
        assert_eq!(weak.formal_stability, Some(Stability::Unstable));
        let strong = classify_regime(&params(1.0, 2.0));
        assert!(strong.steady_state.unwrap() < 1.0);
        assert_eq!(strong.monotonicity, Monotonicity::Increasing);
        assert_eq!(classify_regime(&params(1.0, 1.0)).monotonicity, Monotonicity::Constant);
    }

    #[test]
    fn linearization_matches_perturbation() {
        for a in [-1.0, 0.5, 2.0] {
            let p = params(1.0, a);
            let r = classify_regime(&p);
            let b = r.formal_steady_state.unwrap();
            // Outward drift on both sides means unstable.
            let up = rhs_unchecked(b + 1e-3 * b.abs(), &p);
            let down = rhs_unchecked(b - 1e-3 * b.abs(), &p);
            let unstable = up > 0.0 && down < 0.0;
            assert_eq!(r.formal_stability == Some(Stability::Unstable), unstable, "A = {a}");
        }
    }

    #[test]
    fn csv_round_trip_recovers_params() {
        let mut p = params(1.0, 0.5);
        p.c0 = 0.3;
        let traj = integrate(&p, 1.0, 1e-10).unwrap();
        let mut buf = Vec::new();
        write_csv(&traj, &p, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert!((back.params.epsilon - 1.0).abs() < 1e-12);
        assert!((back.params.a_mod - 0.5).abs() < 1e-8, "{:?}", back.params);
        assert!((back.params.c0 - 0.3).abs() < 1e-6);
        assert_eq!(back.trajectory.termination, Termination::BlowUp);
    }

    #[test]
    fn sweep_entries_serialize_infinity() {
        let entries = sweep(&[params(1.0, 0.0), params(1.0, 2.0)], 3.0, 1e-10).unwrap();
        let json = serde_json::to_value(&entries).unwrap();
        assert_eq!(json[0]["T_max"], 0.2);
        assert_eq!(json[0]["type"], "Type I");
        assert_eq!(json[1]["T_max"], "infinity");
        assert_eq!(json[1]["regime"], "monotonically increasing");
        let back: Vec<SweepEntry> = serde_json::from_value(json).unwrap();
        assert_eq!(back[1].t_max, None);
        assert_eq!(back[0].params, entries[0].params);
    }
}

//! Multiaxial fatigue residual-strength degradation, stress-ratio
//! equivalence, and residual-strength-based failure criteria.
//!
//! Degradation is linear in the damage accumulator D = (X - R)^q, so a block
//! of identical cycles can be applied in one shot. The state tracks the
//! current constant-amplitude level explicitly, which makes block application
//! and cycle-by-cycle application bit-identical.

pub mod fit;

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{Criterion, FatigueModeParams, LaminaMaterial, LaminaStrength, Mode};

/// Signed extremes of one ply-frame stress component over a load cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleEntry {
    pub s_max: f64,
    pub s_min: f64,
}

impl CycleEntry {
    /// Stress ratio r = S_min / S_max (undefined at S_max = 0).
    pub fn ratio(&self) -> f64 {
        self.s_min / self.s_max
    }
}

/// Per-mode cycle stress extremes plus the cycle multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleStressSummary {
    pub entries: [Option<CycleEntry>; 9],
    pub count: f64,
}

impl CycleStressSummary {
    pub fn new(count: f64) -> Self {
        CycleStressSummary {
            entries: [None; 9],
            count,
        }
    }

    pub fn set(&mut self, mode: Mode, s_max: f64, s_min: f64) {
        self.entries[mode.index()] = Some(CycleEntry { s_max, s_min });
    }

    pub fn get(&self, mode: Mode) -> Option<CycleEntry> {
        self.entries[mode.index()]
    }
}

/// Residual strength state of one integration point.
///
/// Stores the strength basis X per mode and the damage accumulator
/// D = (X - R)^q; the residual strength is derived. The current
/// constant-amplitude level is tracked as `d_base + n_level * inc_level`, so
/// re-applying the same per-cycle increment accumulates by count instead of
/// by repeated addition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStrengthState {
    x: [f64; 9],
    q: [f64; 9],
    d_base: [f64; 9],
    inc_level: [f64; 9],
    n_level: [f64; 9],
    n_applied: [f64; 9],
}

impl ResidualStrengthState {
    /// Fresh state: R = X for every mode.
    pub fn pristine(material: &LaminaMaterial) -> Self {
        Self::with_strengths(material, &material.strength)
    }

    /// Fresh state with an explicit (possibly degraded) strength basis.
    pub fn with_strengths(material: &LaminaMaterial, strengths: &LaminaStrength) -> Self {
        let mut x = [0.0; 9];
        let mut q = [0.0; 9];
        for mode in Mode::ALL {
            x[mode.index()] = strengths.get(mode);
            q[mode.index()] = material.fatigue(mode).q;
        }
        ResidualStrengthState {
            x,
            q,
            d_base: [0.0; 9],
            inc_level: [0.0; 9],
            n_level: [0.0; 9],
            n_applied: [0.0; 9],
        }
    }

    /// Strength basis X for `mode`.
    pub fn strength(&self, mode: Mode) -> f64 {
        self.x[mode.index()]
    }

    /// Rebases the strength of `mode` (damage transfer). Accumulated
    /// degradation is reset; the new basis becomes the residual strength.
    pub fn rebase_strength(&mut self, mode: Mode, x_new: f64) {
        let i = mode.index();
        self.x[i] = x_new;
        self.d_base[i] = 0.0;
        self.inc_level[i] = 0.0;
        self.n_level[i] = 0.0;
    }

    /// Damage accumulator D = (X - R)^q for `mode`.
    pub fn accumulator(&self, mode: Mode) -> f64 {
        let i = mode.index();
        self.d_base[i] + self.n_level[i] * self.inc_level[i]
    }

    /// Residual strength R(n) for `mode`.
    pub fn residual(&self, mode: Mode) -> f64 {
        let i = mode.index();
        let d = self.accumulator(mode);
        if d == 0.0 {
            return self.x[i];
        }
        self.x[i] - d.powf(1.0 / self.q[i])
    }

    /// Cumulative cycles applied to `mode`.
    pub fn cycles(&self, mode: Mode) -> f64 {
        self.n_applied[mode.index()]
    }

    /// Cumulative strength reduction X - R(n) for `mode` (the SDV14-22
    /// quantity when X is the pristine strength).
    pub fn reduction(&self, mode: Mode) -> f64 {
        self.x[mode.index()] - self.residual(mode)
    }

    /// Binary-stable raw fields, in the order
    /// [x, q, d_base, inc_level, n_level, n_applied].
    pub fn raw_parts(&self) -> [[f64; 9]; 6] {
        [
            self.x,
            self.q,
            self.d_base,
            self.inc_level,
            self.n_level,
            self.n_applied,
        ]
    }

    pub fn from_raw_parts(raw: [[f64; 9]; 6]) -> ResidualStrengthState {
        ResidualStrengthState {
            x: raw[0],
            q: raw[1],
            d_base: raw[2],
            inc_level: raw[3],
            n_level: raw[4],
            n_applied: raw[5],
        }
    }

    fn apply(&mut self, mode: Mode, inc: f64, dn: f64) {
        let i = mode.index();
        if inc == self.inc_level[i] {
            self.n_level[i] += dn;
        } else {
            self.d_base[i] = self.accumulator(mode);
            self.inc_level[i] = inc;
            self.n_level[i] = dn;
        }
        self.n_applied[i] += dn;
    }
}

/// Per-cycle damage accumulator increment C^-1 (S - S0)^-p, with the base
/// clamped at zero below the endurance limit.
pub fn accumulator_increment(params: &FatigueModeParams, s_r0: f64) -> f64 {
    let margin = (s_r0 - params.s0).max(0.0);
    if margin == 0.0 {
        return 0.0;
    }
    margin.powf(-params.p) / params.c
}

/// Transforms a cycle's stress extremes for one mode into the equivalent
/// maximum stress at the mode's reference ratio r0 (modified Goodman).
///
/// The tension branch (r0^2 <= 1) consumes S_max; the compression branch
/// (r0^2 > 1) consumes |S_min|. A cycle whose ratio falls in the opposite
/// regime is a `RegimeMismatch`; a non-positive transform denominator is an
/// `IllPosedTransform`.
pub fn equivalent_stress(entry: &CycleEntry, params: &FatigueModeParams, x: f64) -> Result<f64> {
    let r0 = params.r0;
    if r0 * r0 <= 1.0 {
        // Tension regime.
        if entry.s_max == 0.0 && entry.s_min == 0.0 {
            return Ok(0.0);
        }
        if entry.s_max <= 0.0 {
            return Err(Error::RegimeMismatch {
                r: if entry.s_max != 0.0 { entry.ratio() } else { f64::INFINITY },
                r0,
            });
        }
        let r = entry.ratio();
        if r * r > 1.0 {
            return Err(Error::RegimeMismatch { r, r0 });
        }
        if entry.s_max >= x {
            return Err(Error::StaticOverload {
                s: entry.s_max,
                x,
            });
        }
        if r == r0 {
            return Ok(entry.s_max);
        }
        let denom = (1.0 - r0) * x + (r0 - r) * entry.s_max;
        if denom <= 0.0 {
            return Err(Error::IllPosedTransform {
                r,
                r0,
                s: entry.s_max,
            });
        }
        Ok((1.0 - r) * x * entry.s_max / denom)
    } else {
        // Compression regime.
        if entry.s_max == 0.0 && entry.s_min == 0.0 {
            return Ok(0.0);
        }
        let r = entry.ratio();
        if r * r <= 1.0 {
            return Err(Error::RegimeMismatch { r, r0 });
        }
        let a = entry.s_min.abs();
        if a >= x {
            return Err(Error::StaticOverload { s: a, x });
        }
        if r == r0 {
            return Ok(a);
        }
        let denom = (r0 - 1.0) * r * x - (r0 - r) * a;
        if denom <= 0.0 {
            return Err(Error::IllPosedTransform { r, r0, s: a });
        }
        Ok((r - 1.0) * r0 * x * a / denom)
    }
}

/// Inverse of [`equivalent_stress`]: recovers the cycle extreme at ratio `r`
/// from the equivalent stress at `params.r0`. The transform is symmetric in
/// swapping the (ratio, stress) pairs, so this evaluates the forward formula
/// with the roles exchanged.
pub fn equivalent_stress_inverse(
    s_r0: f64,
    r: f64,
    params: &FatigueModeParams,
    x: f64,
) -> Result<f64> {
    let swapped = FatigueModeParams { r0: r, ..*params };
    // The compression-branch entry carries negative extremes so its ratio
    // reproduces r0.
    let entry = if params.r0 * params.r0 <= 1.0 {
        CycleEntry {
            s_max: s_r0,
            s_min: params.r0 * s_r0,
        }
    } else {
        CycleEntry {
            s_max: -s_r0 / params.r0,
            s_min: -s_r0,
        }
    };
    equivalent_stress(&entry, &swapped, x)
}

/// Applies `dn` cycles at equivalent stress `s_r0` to one mode of `state`.
///
/// At or below the endurance limit the state is unchanged. An equivalent
/// stress at or above the strength basis is a static overload and must be
/// treated as failure by the caller, not degraded.
pub fn degrade(
    state: &mut ResidualStrengthState,
    mode: Mode,
    s_r0: f64,
    params: &FatigueModeParams,
    dn: f64,
) -> Result<()> {
    let x = state.strength(mode);
    if s_r0 >= x {
        return Err(Error::StaticOverload { s: s_r0, x });
    }
    if dn <= 0.0 {
        return Ok(());
    }
    if s_r0 <= params.s0 {
        return Ok(());
    }
    let inc = accumulator_increment(params, s_r0);
    state.apply(mode, inc, dn);
    Ok(())
}

/// Closed-form constant-amplitude accumulation: D(n) = n C^-1 (S - S0)^-p
/// and the matching residual strength R(n).
pub fn closed_form_d(
    n: f64,
    params: &FatigueModeParams,
    x: f64,
    s_r0: f64,
) -> Result<(f64, f64)> {
    if s_r0 >= x {
        return Err(Error::StaticOverload { s: s_r0, x });
    }
    let d = n * accumulator_increment(params, s_r0);
    let r = if d == 0.0 { x } else { x - d.powf(1.0 / params.q) };
    Ok((d, r))
}

/// Constant-amplitude life: the cycle count at which R(N) reaches S_r0.
pub fn life_constant_amplitude(params: &FatigueModeParams, x: f64, s_r0: f64) -> Result<f64> {
    if !(s_r0 > params.s0 && s_r0 < x) {
        return Err(Error::Domain(format!(
            "life requires S0 < S_r0 < X, got S0 = {}, S_r0 = {s_r0}, X = {x}",
            params.s0
        )));
    }
    Ok(params.c * (s_r0 - params.s0).powf(params.p) * (x - s_r0).powf(params.q))
}

/// Outcome of a Table-1 style fatigue check at one integration point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatigueCheckResult {
    /// Activation value per criterion, `Criterion::ALL` order.
    pub activations: [f64; 6],
}

impl FatigueCheckResult {
    pub fn activation(&self, c: Criterion) -> f64 {
        self.activations[c.index()]
    }

    pub fn failed(&self, c: Criterion) -> bool {
        self.activations[c.index()] >= 1.0
    }

    pub fn any_failed(&self) -> bool {
        self.activations.iter().any(|&a| a >= 1.0)
    }
}

/// Residual strength after the current cycle, used as the criterion
/// denominator. Computed through the algebraic identity
/// X - [X - R(n-1)] f = X - [(X - R(n-1))^q + C^-1 (S - S0)^-p]^(1/q) = R(n),
/// which stays finite at R(n-1) = X where the literal f-factor is 0 * inf.
fn denominator(
    state: &ResidualStrengthState,
    mode: Mode,
    summary: &CycleStressSummary,
    params: &FatigueModeParams,
    dn: f64,
) -> Result<Option<f64>> {
    let i = mode.index();
    let entry = match summary.get(mode) {
        Some(e) => e,
        None => return Ok(None),
    };
    let x = state.x[i];
    let s_r0 = match equivalent_stress(&entry, params, x) {
        Ok(s) => s,
        // Opposite-regime cycles do not degrade this mode.
        Err(Error::RegimeMismatch { .. }) => return Ok(Some(state.residual(mode))),
        Err(e) => return Err(e),
    };
    let d_next = state.accumulator(mode) + dn * accumulator_increment(params, s_r0);
    let r_next = if d_next == 0.0 {
        x
    } else {
        x - d_next.powf(1.0 / params.q)
    };
    Ok(Some(r_next))
}

/// Evaluates the fatigue failure criteria with denominators advanced by this
/// cycle's degradation (dn = 1). `state` is the state at n-1.
pub fn fatigue_check(
    stress: &Vector6<f64>,
    state: &ResidualStrengthState,
    summary: &CycleStressSummary,
    material: &LaminaMaterial,
) -> Result<FatigueCheckResult> {
    let mut denoms: [Option<f64>; 9] = [None; 9];
    for mode in Mode::ALL {
        denoms[mode.index()] = denominator(state, mode, summary, material.fatigue(mode), 1.0)?;
    }
    let mut activations = [0.0; 6];
    for c in Criterion::ALL {
        if !c.gate(stress) {
            continue;
        }
        let mut acc = 0.0;
        for &(slot, mode) in c.terms(material.kind) {
            let s = stress[slot];
            if s == 0.0 {
                continue;
            }
            let denom = match denoms[mode.index()] {
                Some(d) => d,
                None => return Err(Error::IncompleteCycleData(mode.label())),
            };
            acc += (s / denom) * (s / denom);
        }
        activations[c.index()] = acc;
    }
    Ok(FatigueCheckResult { activations })
}

/// Evaluates the criteria against the state's current residual strengths
/// (denominators = R as stored). Used after a block's degradation has been
/// applied.
pub fn fatigue_check_current(
    stress: &Vector6<f64>,
    state: &ResidualStrengthState,
    material: &LaminaMaterial,
) -> FatigueCheckResult {
    let mut res: [f64; 9] = [0.0; 9];
    for mode in Mode::ALL {
        res[mode.index()] = state.residual(mode);
    }
    let mut activations = [0.0; 6];
    for c in Criterion::ALL {
        if !c.gate(stress) {
            continue;
        }
        let mut acc = 0.0;
        for &(slot, mode) in c.terms(material.kind) {
            let s = stress[slot];
            if s == 0.0 {
                continue;
            }
            let denom = res[mode.index()];
            acc += (s / denom) * (s / denom);
        }
        activations[c.index()] = acc;
    }
    FatigueCheckResult { activations }
}

/// Literal Table-1 f-factor for one mode. Indeterminate at R(n-1) = X; kept
/// for identity tests against the algebraic denominator.
pub fn f_factor(params: &FatigueModeParams, x: f64, r_prev: f64, s_r0: f64) -> f64 {
    let margin = (s_r0 - params.s0).max(0.0);
    let gap = x - r_prev;
    (gap.powf(-params.q) / (params.c * margin.powf(params.p)) + 1.0).powf(1.0 / params.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::library::MaterialLibrary;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ud() -> LaminaMaterial {
        MaterialLibrary::bundled().0.lamina("ud_lamina").unwrap().clone()
    }

    fn pw() -> LaminaMaterial {
        MaterialLibrary::bundled().0.lamina("pw_lamina").unwrap().clone()
    }

    #[test]
    fn transform_is_identity_at_reference_ratio() {
        let pw = pw();
        let p = pw.fatigue(Mode::T1);
        let entry = CycleEntry {
            s_max: 420.0,
            s_min: 420.0 * p.r0,
        };
        let s = equivalent_stress(&entry, p, pw.strength.x1t).unwrap();
        assert_relative_eq!(s, 420.0, max_relative = 1e-14);

        let pc = pw.fatigue(Mode::C1);
        let entry = CycleEntry {
            s_max: -40.0,
            s_min: -400.0,
        };
        // r = 10 = r0: identity on |S_min|.
        let s = equivalent_stress(&entry, pc, pw.strength.x1c).unwrap();
        assert_relative_eq!(s, 400.0, max_relative = 1e-14);
    }

    #[test]
    fn transform_zero_stress_gives_zero() {
        let pw = pw();
        let entry = CycleEntry { s_max: 0.0, s_min: 0.0 };
        let s = equivalent_stress(&entry, pw.fatigue(Mode::T1), pw.strength.x1t).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn transform_pw_tension_oracle() {
        // Direct evaluation of the tension branch, cross-checked by
        // inverting the transform to recover the input extreme.
        let pw = pw();
        let p = pw.fatigue(Mode::T1);
        let x = pw.strength.x1t;
        let entry = CycleEntry { s_max: 500.0, s_min: 0.0 };
        let s = equivalent_stress(&entry, p, x).unwrap();
        let expected = (1.0 - 0.0) * x * 500.0 / ((1.0 - 0.05) * x + (0.05 - 0.0) * 500.0);
        assert_relative_eq!(s, expected, max_relative = 1e-14);
        assert_relative_eq!(s, 507.03, max_relative = 1e-4);
        let back = equivalent_stress_inverse(s, 0.0, p, x).unwrap();
        assert_relative_eq!(back, 500.0, max_relative = 1e-12);
    }

    #[test]
    fn transform_regime_mismatch_is_flagged() {
        let pw = pw();
        // Compressive cycle against the tension-mode parameters.
        let entry = CycleEntry { s_max: -10.0, s_min: -100.0 };
        let err = equivalent_stress(&entry, pw.fatigue(Mode::T1), pw.strength.x1t).unwrap_err();
        assert!(matches!(err, Error::RegimeMismatch { .. }));
        // Tension-dominated cycle against compression-mode parameters.
        let entry = CycleEntry { s_max: 100.0, s_min: 10.0 };
        let err = equivalent_stress(&entry, pw.fatigue(Mode::C1), pw.strength.x1c).unwrap_err();
        assert!(matches!(err, Error::RegimeMismatch { .. }));
    }

    #[test]
    fn degrade_single_cycle_matches_closed_form() {
        let ud = ud();
        let p = ud.fatigue(Mode::T1);
        let x = ud.strength.x1t;
        let mut state = ResidualStrengthState::pristine(&ud);
        degrade(&mut state, Mode::T1, 1500.0, p, 1.0).unwrap();
        let (_, r1) = closed_form_d(1.0, p, x, 1500.0).unwrap();
        assert_relative_eq!(state.residual(Mode::T1), r1, max_relative = 1e-12);
        // X - R(1) = [C^-1 1500^4.93]^(1/2.89) ~ 10.8 MPa.
        assert_relative_eq!(x - r1, 10.8, max_relative = 0.01);
    }

    #[test]
    fn degrade_zero_cycles_is_identity() {
        let ud = ud();
        let mut state = ResidualStrengthState::pristine(&ud);
        degrade(&mut state, Mode::T1, 1500.0, ud.fatigue(Mode::T1), 0.0).unwrap();
        assert_eq!(state.residual(Mode::T1), ud.strength.x1t);
    }

    #[test]
    fn endurance_boundary_leaves_state_unchanged() {
        let pw = pw();
        let p = pw.fatigue(Mode::T1);
        let mut state = ResidualStrengthState::pristine(&pw);
        degrade(&mut state, Mode::T1, p.s0, p, 1000.0).unwrap();
        assert_eq!(state.residual(Mode::T1), pw.strength.x1t);
    }

    #[test]
    fn overload_is_signalled_not_degraded() {
        let ud = ud();
        let mut state = ResidualStrengthState::pristine(&ud);
        let err = degrade(&mut state, Mode::T1, 2004.0, ud.fatigue(Mode::T1), 1.0).unwrap_err();
        assert!(matches!(err, Error::StaticOverload { .. }));
    }

    #[test]
    fn closed_form_linearity_in_n() {
        let ud = ud();
        let p = ud.fatigue(Mode::T1);
        let (d1, _) = closed_form_d(100.0, p, ud.strength.x1t, 1500.0).unwrap();
        let (d2, _) = closed_form_d(200.0, p, ud.strength.x1t, 1500.0).unwrap();
        assert_relative_eq!(d2, 2.0 * d1, max_relative = 1e-15);
    }

    #[test]
    fn recursion_matches_closed_form_over_1e4_cycles() {
        // Literal R-space recursion (independent oracle) vs the closed form.
        let ud = ud();
        let p = ud.fatigue(Mode::T1);
        let x = ud.strength.x1t;
        let s = 1500.0;
        let inc = accumulator_increment(p, s);
        let mut r_prev = x;
        for _ in 0..10_000 {
            let d = (x - r_prev).powf(p.q) + inc;
            r_prev = x - d.powf(1.0 / p.q);
        }
        let (_, r_closed) = closed_form_d(10_000.0, p, x, s).unwrap();
        assert_relative_eq!(r_prev, r_closed, max_relative = 1e-9);
        let mut state = ResidualStrengthState::pristine(&ud);
        for _ in 0..10_000 {
            degrade(&mut state, Mode::T1, s, p, 1.0).unwrap();
        }
        assert_relative_eq!(state.residual(Mode::T1), r_closed, max_relative = 1e-9);
    }

    #[test]
    fn life_is_consistent_with_accumulation() {
        let ud = ud();
        let p = ud.fatigue(Mode::T1);
        let x = ud.strength.x1t;
        let s = 1500.0;
        let n_f = life_constant_amplitude(p, x, s).unwrap();
        let (d, _) = closed_form_d(n_f, p, x, s).unwrap();
        assert_relative_eq!(d, (x - s).powf(p.q), max_relative = 1e-9);
    }

    #[test]
    fn life_rejects_out_of_range_stress() {
        let ud = ud();
        let p = ud.fatigue(Mode::T1);
        assert!(life_constant_amplitude(p, ud.strength.x1t, 2500.0).is_err());
        let pw = pw();
        let pt = pw.fatigue(Mode::T1);
        assert!(life_constant_amplitude(pt, pw.strength.x1t, pt.s0).is_err());
    }

    #[test]
    fn check_zero_stress_gives_zero_activations() {
        let pw = pw();
        let state = ResidualStrengthState::pristine(&pw);
        let summary = CycleStressSummary::new(1.0);
        let res = fatigue_check(&Vector6::zeros(), &state, &summary, &pw).unwrap();
        assert_eq!(res.activations, [0.0; 6]);
    }

    #[test]
    fn check_at_residual_strength_activates_exactly() {
        let pw = pw();
        let p = pw.fatigue(Mode::T1);
        let x = pw.strength.x1t;
        let s_applied = 550.0;
        let mut summary = CycleStressSummary::new(1.0);
        summary.set(Mode::T1, s_applied, p.r0 * s_applied);
        let state = ResidualStrengthState::pristine(&pw);
        // R(1) for this cycle.
        let (_, r1) = closed_form_d(1.0, p, x, s_applied).unwrap();
        let stress = Vector6::new(r1, 0.0, 0.0, 0.0, 0.0, 0.0);
        let res = fatigue_check(&stress, &state, &summary, &pw).unwrap();
        assert_relative_eq!(res.activation(Criterion::FibreTension), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn check_missing_summary_for_stressed_mode_errors() {
        let pw = pw();
        let state = ResidualStrengthState::pristine(&pw);
        let summary = CycleStressSummary::new(1.0);
        let stress = Vector6::new(100.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let err = fatigue_check(&stress, &state, &summary, &pw).unwrap_err();
        assert!(matches!(err, Error::IncompleteCycleData(_)));
    }

    #[test]
    fn f_factor_identity_holds_once_degraded() {
        let ud = ud();
        let p = ud.fatigue(Mode::T1);
        let x = ud.strength.x1t;
        let s = 1400.0;
        // Put the state at n = 37 cycles, then compare the literal
        // (X - R) f update against the algebraic R(n+1).
        let (_, r_prev) = closed_form_d(37.0, p, x, s).unwrap();
        let f = f_factor(p, x, r_prev, s);
        let literal = x - (x - r_prev) * f;
        let (_, r_next) = closed_form_d(38.0, p, x, s).unwrap();
        assert_relative_eq!(literal, r_next, max_relative = 1e-12);
    }

    #[test]
    fn block_and_cycle_application_are_bit_identical() {
        let ud = ud();
        let p = ud.fatigue(Mode::T1);
        let mut block = ResidualStrengthState::pristine(&ud);
        degrade(&mut block, Mode::T1, 1500.0, p, 1000.0).unwrap();
        let mut cycles = ResidualStrengthState::pristine(&ud);
        for _ in 0..1000 {
            degrade(&mut cycles, Mode::T1, 1500.0, p, 1.0).unwrap();
        }
        assert_eq!(block.residual(Mode::T1).to_bits(), cycles.residual(Mode::T1).to_bits());
        // Split application a + b equals a single a+b application.
        let mut split = ResidualStrengthState::pristine(&ud);
        degrade(&mut split, Mode::T1, 1500.0, p, 400.0).unwrap();
        degrade(&mut split, Mode::T1, 1500.0, p, 600.0).unwrap();
        assert_eq!(block.residual(Mode::T1).to_bits(), split.residual(Mode::T1).to_bits());
    }

    proptest! {
        #[test]
        fn transform_round_trip_tension(r in -1.0..1.0f64, frac in 0.05..0.95f64) {
            let pw = pw();
            let p = pw.fatigue(Mode::T1);
            let x = pw.strength.x1t;
            let s_max = frac * x;
            let entry = CycleEntry { s_max, s_min: r * s_max };
            let s_eq = equivalent_stress(&entry, p, x).unwrap();
            let back = equivalent_stress_inverse(s_eq, r, p, x).unwrap();
            prop_assert!((back - s_max).abs() <= 1e-12 * s_max.abs().max(1.0));
        }

        #[test]
        fn transform_round_trip_compression(r in 1.05..40.0f64, frac in 0.05..0.95f64) {
            let pw = pw();
            let p = pw.fatigue(Mode::C1);
            let x = pw.strength.x1c;
            let s_min = -frac * x;
            let entry = CycleEntry { s_max: s_min / r, s_min };
            let s_eq = equivalent_stress(&entry, p, x).unwrap();
            let back = equivalent_stress_inverse(s_eq, r, p, x).unwrap();
            prop_assert!((back - s_min.abs()).abs() <= 1e-12 * s_min.abs().max(1.0));
        }

        #[test]
        fn f_factor_identity_randomized(
            n_prev in 1.0..5000.0f64,
            s in 1000.0..1900.0f64,
        ) {
            let ud = ud();
            let p = ud.fatigue(Mode::T1);
            let x = ud.strength.x1t;
            let (_, r_prev) = closed_form_d(n_prev, p, x, s).unwrap();
            prop_assume!(r_prev > s);
            let f = f_factor(p, x, r_prev, s);
            let literal = x - (x - r_prev) * f;
            let (_, r_next) = closed_form_d(n_prev + 1.0, p, x, s).unwrap();
            prop_assert!((literal - r_next).abs() <= 1e-12 * r_next.abs());
        }

        #[test]
        fn activation_non_decreasing_in_cycles(n1 in 1.0..200.0f64, extra in 1.0..200.0f64) {
            let ud = ud();
            let p = ud.fatigue(Mode::T1);
            let s = 1500.0;
            let mut st1 = ResidualStrengthState::pristine(&ud);
            degrade(&mut st1, Mode::T1, s, p, n1).unwrap();
            let mut st2 = st1.clone();
            degrade(&mut st2, Mode::T1, s, p, extra).unwrap();
            let stress = Vector6::new(900.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            let a1 = fatigue_check_current(&stress, &st1, &ud).activation(Criterion::FibreTension);
            let a2 = fatigue_check_current(&stress, &st2, &ud).activation(Criterion::FibreTension);
            prop_assert!(a2 >= a1);
        }
    }
}

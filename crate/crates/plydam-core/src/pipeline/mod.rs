//! Three-stage analysis orchestration: pre-fatigue degradation under the
//! loading spectrum, low-velocity impact, and post-impact fatigue with the
//! no-growth life rule, including the damage-transfer steps between stages.

pub mod report;
pub mod state;

use std::collections::BTreeSet;

use nalgebra::Vector6;

use crate::error::{Error, Result};
use crate::fatigue::{
    degrade, equivalent_stress, fatigue_check_current, CycleEntry, ResidualStrengthState,
};
use crate::fem::explicit::{explicit_run, ExplicitConfig, ExplicitOutcome};
use crate::fem::model::{Assembly, PlyMaterials, PointState, RigidImpactor, StateField};
use crate::fem::statics::{force_on_sets, recover_ply_stresses, StaticSolver};
use crate::material::{Criterion, LaminaMaterial, Mode};
use crate::spectrum::{quasi_static_cases, LoadCase, Spectrum};
pub use report::{FootprintReport, LifeReport, PrefatigueReport, FAILED_DAMAGE};
pub use state::{Provenance, StageState, StageTag};

/// Controls for the fatigue-stage cycle engine.
#[derive(Debug, Clone)]
pub struct FatigueRunConfig {
    /// Largest cycle count applied in one shot; 0 leaves blocks whole.
    /// Setting 1 recovers strict cycle-by-cycle execution.
    pub max_block_cycles: f64,
    /// Guard on failure events while splitting one block.
    pub max_failure_events: usize,
}

impl Default for FatigueRunConfig {
    fn default() -> Self {
        FatigueRunConfig {
            max_block_cycles: 0.0,
            max_failure_events: 100_000,
        }
    }
}

/// How pre-fatigue strength loss transfers to the impact stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    /// One degraded material per ply using the ply-wise maximum reduction.
    PlyMax,
    /// Each integration point keeps its own degraded strength basis.
    PerPoint,
}

/// Cached unit responses (one per spectrum channel) for the current damage
/// version.
struct UnitFields {
    version: u64,
    /// Displacement per channel (warm starts for the next rebuild).
    u: Vec<Vec<f64>>,
    /// Ply-frame stress per channel, 8 Gauss points per element.
    stress: Vec<Vec<Vector6<f64>>>,
}

/// Shared engine for the pre-fatigue and fatigue stages.
pub struct FatigueEngine<'a> {
    pub assembly: &'a Assembly,
    solver: StaticSolver,
    units: Option<UnitFields>,
    channel_forces: Vec<Vec<f64>>,
}

impl<'a> FatigueEngine<'a> {
    pub fn new(assembly: &'a Assembly, spectrum: &Spectrum) -> Result<FatigueEngine<'a>> {
        let mut channel_forces = Vec::with_capacity(spectrum.channels.len());
        for ch in &spectrum.channels {
            let f = force_on_sets(
                assembly,
                &[(ch.node_set.as_str(), ch.direction, spectrum.reference_force)],
            )?;
            channel_forces.push(f);
        }
        Ok(FatigueEngine {
            assembly,
            solver: StaticSolver::new(assembly),
            units: None,
            channel_forces,
        })
    }

    fn ensure_units(&mut self, state: &StateField) -> Result<()> {
        if let Some(u) = &self.units {
            if u.version == state.version {
                return Ok(());
            }
        }
        let warm: Vec<Option<Vec<f64>>> = match self.units.take() {
            Some(prev) => prev.u.into_iter().map(Some).collect(),
            None => vec![None; self.channel_forces.len()],
        };
        let mut u_all = Vec::with_capacity(self.channel_forces.len());
        let mut stress_all = Vec::with_capacity(self.channel_forces.len());
        for (f, w) in self.channel_forces.iter().zip(warm) {
            let sol = self.solver.solve(self.assembly, state, f, w.as_deref())?;
            stress_all.push(recover_ply_stresses(self.assembly, state, &sol.u));
            u_all.push(sol.u);
        }
        self.units = Some(UnitFields {
            version: state.version,
            u: u_all,
            stress: stress_all,
        });
        Ok(())
    }

    /// Ply-frame stress field for a channel-factor combination.
    fn combine(&self, factors: &[f64]) -> Vec<Vector6<f64>> {
        let units = self.units.as_ref().expect("units built");
        let n = units.stress[0].len();
        let mut out = vec![Vector6::zeros(); n];
        for (c, &fac) in factors.iter().enumerate() {
            if fac == 0.0 {
                continue;
            }
            for (o, s) in out.iter_mut().zip(&units.stress[c]) {
                *o += *s * fac;
            }
        }
        out
    }

    /// Applies `dn` cycles of the block's stress extremes to every point,
    /// then evaluates the failure criteria against the held case stress.
    /// Returns newly tripped (point, criterion) pairs.
    fn degrade_and_check(
        &self,
        state: &mut StateField,
        peak: &[Vector6<f64>],
        valley: &[Vector6<f64>],
        case: &[Vector6<f64>],
        dn: f64,
    ) -> Result<Vec<(usize, Criterion)>> {
        let assembly = self.assembly;
        let mut failures = Vec::new();
        for e in 0..assembly.n_elements() {
            let mat = assembly.material(e);
            for gp in 0..8 {
                let idx = e * 8 + gp;
                let point = &mut state.points[idx];
                degrade_point_modes(&mut point.rs, mat, &peak[idx], &valley[idx], dn)?;
                let check = fatigue_check_current(&case[idx], &point.rs, mat);
                for c in Criterion::ALL {
                    if check.activations[c.index()] >= 1.0 && !point.fatigue_flags[c.index()] {
                        failures.push((idx, c));
                    }
                }
            }
        }
        Ok(failures)
    }

    /// Executes one cycle block: degradation in one shot (exact, the
    /// accumulator is linear in the cycle count), failure checks at block
    /// end, and on failure a bisection that locates the first failing
    /// cycle within one cycle, drops stiffness there, and re-runs the
    /// remainder against the re-solved stress field.
    pub fn cycle_block_execute(
        &mut self,
        state: &mut StateField,
        case: &LoadCase,
        config: &FatigueRunConfig,
        events: &mut usize,
    ) -> Result<()> {
        let mut remaining = case.count;
        while remaining > 0.0 {
            let dn = if config.max_block_cycles > 0.0 {
                remaining.min(config.max_block_cycles)
            } else {
                remaining
            };
            self.ensure_units(state)?;
            let peak = self.combine(&case.peak_factors);
            let valley = self.combine(&case.valley_factors);
            let case_field = self.combine(&case.case_factors);

            let checkpoint: Vec<PointState> = state.points.clone();
            let failures = self.degrade_and_check(state, &peak, &valley, &case_field, dn)?;
            if failures.is_empty() {
                remaining -= dn;
                continue;
            }

            // Bisect for the first failing cycle; activation grows
            // monotonically with the applied count.
            let mut lo = 0.0f64;
            let mut hi = dn;
            while hi - lo > 1.0 {
                let mid = ((lo + hi) / 2.0).floor().max(lo + 1.0).min(hi - 1.0);
                state.points.clone_from(&checkpoint);
                let fail = !self
                    .degrade_and_check(state, &peak, &valley, &case_field, mid)?
                    .is_empty();
                if fail {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            state.points.clone_from(&checkpoint);
            let failures = self.degrade_and_check(state, &peak, &valley, &case_field, hi)?;
            debug_assert!(!failures.is_empty());
            for &(idx, c) in &failures {
                let p = &mut state.points[idx];
                p.fatigue_flags[c.index()] = true;
                p.damage.raise(c.damage_mode(), FAILED_DAMAGE);
            }
            state.version += 1;
            *events += failures.len().max(1);
            if *events > config.max_failure_events {
                return Err(Error::BisectionOverflow(*events));
            }
            remaining -= hi;
        }
        Ok(())
    }

    /// Runs full spectrum passes; `on_pass` returns false to stop early.
    pub fn run_passes(
        &mut self,
        state: &mut StateField,
        spectrum: &Spectrum,
        n_passes: usize,
        config: &FatigueRunConfig,
        mut on_pass: impl FnMut(usize, &StateField) -> bool,
    ) -> Result<usize> {
        spectrum.validate()?;
        let cases = quasi_static_cases(spectrum);
        let mut events = 0usize;
        for pass in 1..=n_passes {
            for case in &cases {
                self.cycle_block_execute(state, case, config, &mut events)?;
            }
            if !on_pass(pass, state) {
                return Ok(pass);
            }
        }
        Ok(n_passes)
    }
}

/// Applies one cycle's stress extremes to all nine modes of one point:
/// shear modes use extreme absolute values (tension branch); tension modes
/// take cycles with a positive peak and r in [-1, 1]; compression modes
/// take compression-dominated cycles, with mixed cycles beyond r < -1
/// degraded through the infinite-ratio limit of the transform. Cross-regime
/// cycles leave a mode untouched, and a static overload is left to the
/// criterion check rather than degraded.
fn degrade_point_modes(
    rs: &mut ResidualStrengthState,
    mat: &LaminaMaterial,
    peak: &Vector6<f64>,
    valley: &Vector6<f64>,
    dn: f64,
) -> Result<()> {
    for mode in Mode::ALL {
        let slot = mode.stress_slot();
        let a = peak[slot];
        let b = valley[slot];
        let params = mat.fatigue(mode);
        let x = rs.strength(mode);
        let entry = if mode.is_shear() {
            let hi = a.abs().max(b.abs());
            let lo = a.abs().min(b.abs());
            if hi == 0.0 {
                continue;
            }
            Some(CycleEntry {
                s_max: hi,
                s_min: lo,
            })
        } else if mode.is_tension() {
            let s_max = a.max(b);
            let s_min = a.min(b);
            if s_max <= 0.0 || s_min < -s_max {
                None
            } else {
                Some(CycleEntry { s_max, s_min })
            }
        } else {
            let s_max = a.max(b);
            let s_min = a.min(b);
            if s_min >= 0.0 {
                None
            } else if s_max < 0.0 {
                Some(CycleEntry { s_max, s_min })
            } else if -s_min > s_max {
                // Mixed cycle dominated by compression: infinite-ratio
                // limit S = r0 X |S_min| / ((r0 - 1) X + |S_min|).
                let amp = -s_min;
                if amp >= x {
                    continue;
                }
                let s_eq = params.r0 * x * amp / ((params.r0 - 1.0) * x + amp);
                degrade(rs, mode, s_eq, params, dn)?;
                continue;
            } else {
                None
            }
        };
        let Some(entry) = entry else { continue };
        match equivalent_stress(&entry, params, x) {
            Ok(s_eq) => degrade(rs, mode, s_eq, params, dn)?,
            Err(Error::RegimeMismatch { .. }) => {}
            Err(Error::StaticOverload { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Pre-fatigue stage on a pristine model.
pub fn run_prefatigue(
    assembly: &Assembly,
    spectrum: &Spectrum,
    n_spectra: usize,
    config: &FatigueRunConfig,
) -> Result<(StageState, PrefatigueReport)> {
    let mut field = StateField::pristine(assembly);
    if n_spectra > 0 {
        let mut engine = FatigueEngine::new(assembly, spectrum)?;
        engine.run_passes(&mut field, spectrum, n_spectra, config, |_, _| true)?;
    }
    let report = PrefatigueReport::compute(assembly, &field, n_spectra as f64);
    let state = StageState {
        stage: StageTag::PreFatigue,
        provenance: Provenance {
            pristine: n_spectra == 0,
            spectra_applied: n_spectra as f64,
            impact_energy_j: 0.0,
        },
        mesh_hash: assembly.model.mesh.content_hash(),
        field,
    };
    Ok((state, report))
}

/// Builds the degraded per-ply materials and the impact-stage initial state
/// from a pre-fatigue result.
///
/// The default transfer applies the ply-wise maximum strength reduction as
/// one degraded material per ply; the per-point mode keeps each point's own
/// basis instead. Failure flags and applied damage carry over unchanged.
pub fn transfer_prefatigue(
    assembly: &Assembly,
    state: &StageState,
    mode: TransferMode,
) -> Result<(PlyMaterials, StateField)> {
    if state.stage != StageTag::PreFatigue {
        return Err(Error::StageState(format!(
            "transfer_prefatigue expects a pre-fatigue state, got {}",
            state.stage.label()
        )));
    }
    let report =
        PrefatigueReport::compute(assembly, &state.field, state.provenance.spectra_applied);
    let mut per_ply = assembly.plies.per_ply.clone();
    for (ply, mat) in per_ply.iter_mut().enumerate() {
        for m in Mode::ALL {
            let x0 = assembly.plies.pristine_strength[ply].get(m);
            mat.strength.set(m, x0 - report.max_reduction[ply][m.index()]);
        }
    }
    let plies = PlyMaterials {
        per_ply: per_ply.clone(),
        pristine_strength: assembly.plies.pristine_strength.clone(),
    };

    let mut field = state.field.clone();
    match mode {
        TransferMode::PlyMax => {
            for (e, elem) in assembly.model.mesh.elements.iter().enumerate() {
                let mat = &per_ply[elem.ply];
                for gp in 0..8 {
                    let p = &mut field.points[e * 8 + gp];
                    p.rs = ResidualStrengthState::with_strengths(mat, &mat.strength);
                }
            }
        }
        TransferMode::PerPoint => {
            for (e, elem) in assembly.model.mesh.elements.iter().enumerate() {
                let mat = &per_ply[elem.ply];
                let pristine = &assembly.plies.pristine_strength[elem.ply];
                for gp in 0..8 {
                    let p = &mut field.points[e * 8 + gp];
                    let mut basis = *pristine;
                    for m in Mode::ALL {
                        basis.set(m, p.rs.residual(m));
                    }
                    p.rs = ResidualStrengthState::with_strengths(mat, &basis);
                }
            }
        }
    }
    Ok((plies, field))
}

/// Impact-run controls for the pipeline stage.
#[derive(Debug, Clone)]
pub struct ImpactRunConfig {
    pub energy_j: f64,
    pub impactor_mass_kg: f64,
    pub impactor_diameter_mm: f64,
    pub explicit: ExplicitConfig,
    /// Damage level that counts an element into footprint areas.
    pub footprint_threshold: f64,
}

impl ImpactRunConfig {
    pub fn new(energy_j: f64) -> Self {
        ImpactRunConfig {
            energy_j,
            impactor_mass_kg: 5.61,
            impactor_diameter_mm: 16.0,
            explicit: ExplicitConfig::default(),
            footprint_threshold: 0.5,
        }
    }
}

/// Low-velocity impact stage. `assembly` must already carry the
/// transferred (degraded) ply materials; `field` is the transferred state.
pub fn run_lvi(
    assembly: &Assembly,
    field: StateField,
    provenance_in: Provenance,
    config: &ImpactRunConfig,
) -> Result<(StageState, FootprintReport, ExplicitOutcome)> {
    let mesh = &assembly.model.mesh;
    let center = mesh.node_set("CENTER_TOP")?;
    let c = mesh.nodes[center[0]];
    let impactor = RigidImpactor::normal_impact(
        config.impactor_diameter_mm,
        config.impactor_mass_kg,
        config.energy_j,
        c[0],
        c[1],
        c[2],
    );
    let mut field = field;
    let outcome = explicit_run(assembly, &mut field, impactor, &config.explicit, None)?;
    let footprint = FootprintReport::compute(assembly, &field, config.footprint_threshold);
    let state = StageState {
        stage: StageTag::Lvi,
        provenance: Provenance {
            pristine: false,
            spectra_applied: provenance_in.spectra_applied,
            impact_energy_j: provenance_in.impact_energy_j + config.energy_j,
        },
        mesh_hash: mesh.content_hash(),
        field,
    };
    Ok((state, footprint, outcome))
}

/// Fatigue-stage initial conditions from an impact state: fully failed
/// points keep their sudden stiffness reduction (the cap applies at
/// stiffness formation), degraded strengths persist, partial damage carries
/// as-is. Returns the initial failed-element footprint per criterion for
/// the growth rule.
pub fn transfer_lvi(
    assembly: &Assembly,
    state: &StageState,
) -> Result<(StateField, Vec<BTreeSet<usize>>)> {
    if state.stage != StageTag::Lvi {
        return Err(Error::StageState(format!(
            "transfer_lvi expects an impact state, got {}",
            state.stage.label()
        )));
    }
    let field = state.field.clone();
    let footprint = Criterion::ALL
        .iter()
        .map(|&c| report::failed_elements_by_criterion(assembly, &field, c))
        .collect();
    Ok((field, footprint))
}

/// Growth detection for the no-growth rule.
#[derive(Debug, Clone, Default)]
pub struct GrowthRule {
    /// Newly failed elements outside the initial footprint tolerated
    /// before growth is declared (default 0: any new element counts).
    pub new_element_threshold: usize,
}

/// Post-impact fatigue stage with the no-growth life rule. Runs up to
/// `max_spectra` passes; reaching the cap without growth is a runout, not
/// an error.
#[allow(clippy::too_many_arguments)]
pub fn run_fatigue(
    assembly: &Assembly,
    field: StateField,
    initial_footprint: &[BTreeSet<usize>],
    provenance_in: Provenance,
    spectrum: &Spectrum,
    max_spectra: usize,
    config: &FatigueRunConfig,
    growth: &GrowthRule,
) -> Result<(StageState, LifeReport)> {
    let mut field = field;
    let mut engine = FatigueEngine::new(assembly, spectrum)?;
    let mut area_history: Vec<[f64; 6]> = Vec::new();
    let mut growth_onset: Option<usize> = None;
    let mut new_failed = 0usize;
    let passes_run = engine.run_passes(&mut field, spectrum, max_spectra, config, |pass, f| {
        let fp = FootprintReport::compute(assembly, f, FAILED_DAMAGE);
        let mut row = [0.0; 6];
        for c in Criterion::ALL {
            row[c.index()] = fp.areas.iter().map(|a| a[c.index()]).sum();
        }
        area_history.push(row);
        let mut outside = 0usize;
        for c in Criterion::ALL {
            let now = report::failed_elements_by_criterion(assembly, f, c);
            outside += now.difference(&initial_footprint[c.index()]).count();
        }
        if outside > growth.new_element_threshold {
            growth_onset = Some(pass);
            new_failed = outside;
            return false;
        }
        true
    })?;
    let spectra_without_growth = match growth_onset {
        Some(n) => n.saturating_sub(1),
        None => passes_run,
    };
    let report = LifeReport {
        spectra_without_growth,
        growth_onset_spectrum: growth_onset,
        hours_per_spectrum: spectrum.flight_hours_per_pass,
        flight_hours: spectra_without_growth as f64 * spectrum.flight_hours_per_pass,
        runout: growth_onset.is_none(),
        area_history,
        new_failed_elements: new_failed,
    };
    let state = StageState {
        stage: StageTag::Fatigue,
        provenance: Provenance {
            pristine: false,
            spectra_applied: provenance_in.spectra_applied + passes_run as f64,
            impact_energy_j: provenance_in.impact_energy_j,
        },
        mesh_hash: assembly.model.mesh.content_hash(),
        field,
    };
    Ok((state, report))
}

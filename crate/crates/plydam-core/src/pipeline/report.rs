//! Stage reports: per-ply strength reduction, impact damage footprints,
//! and the fatigue life summary.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::fem::model::{Assembly, StateField};
use crate::material::{Criterion, Mode};

/// Damage value treated as a failed point.
pub const FAILED_DAMAGE: f64 = 0.99;

/// Per-ply, per-mode strength-reduction summary (the SDV14-22 view).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrefatigueReport {
    pub spectra_applied: f64,
    /// max_reduction[ply][mode index] in MPa, from the pristine strengths.
    pub max_reduction: Vec<[f64; 9]>,
    pub failed_elements: usize,
}

impl PrefatigueReport {
    pub fn compute(assembly: &Assembly, state: &StateField, spectra_applied: f64) -> Self {
        let nply = assembly.model.mesh.ply_count();
        let mut max_reduction = vec![[0.0; 9]; nply];
        for (e, elem) in assembly.model.mesh.elements.iter().enumerate() {
            let pristine = &assembly.plies.pristine_strength[elem.ply];
            for gp in 0..8 {
                let rs = &state.points[e * 8 + gp].rs;
                for mode in Mode::ALL {
                    let red = pristine.get(mode) - rs.residual(mode);
                    let slot = &mut max_reduction[elem.ply][mode.index()];
                    if red > *slot {
                        *slot = red;
                    }
                }
            }
        }
        PrefatigueReport {
            spectra_applied,
            max_reduction,
            failed_elements: failed_elements_any(assembly, state).len(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("ply");
        for mode in Mode::ALL {
            let _ = write!(out, ",reduction_{}_MPa", mode.label());
        }
        out.push('\n');
        for (p, row) in self.max_reduction.iter().enumerate() {
            let _ = write!(out, "{}", p + 1);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Elements with a failed point (damage at or beyond the cap) on any mode.
pub fn failed_elements_any(assembly: &Assembly, state: &StateField) -> BTreeSet<usize> {
    let mut set = BTreeSet::new();
    for e in 0..assembly.n_elements() {
        'gp: for gp in 0..8 {
            let p = &state.points[e * 8 + gp];
            for d in p.damage.components() {
                if d >= FAILED_DAMAGE {
                    set.insert(e);
                    break 'gp;
                }
            }
        }
    }
    set
}

/// Elements whose given criterion mode is failed at any point.
pub fn failed_elements_by_criterion(
    assembly: &Assembly,
    state: &StateField,
    c: Criterion,
) -> BTreeSet<usize> {
    let mode = c.damage_mode();
    let mut set = BTreeSet::new();
    for e in 0..assembly.n_elements() {
        for gp in 0..8 {
            if state.points[e * 8 + gp].damage.get(mode) >= FAILED_DAMAGE {
                set.insert(e);
                break;
            }
        }
    }
    set
}

/// Impact damage-footprint metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FootprintReport {
    /// Damage level that counts an element as damaged for area purposes.
    pub damage_threshold: f64,
    /// Per ply, per criterion: damaged-element count.
    pub counts: Vec<[usize; 6]>,
    /// Per ply, per criterion: damaged area (mm^2).
    pub areas: Vec<[f64; 6]>,
    /// Union footprint over all plies and criteria, projected on the
    /// laminate plane (mm^2).
    pub projected_area: f64,
    /// Extents of the projected footprint.
    pub extent_x: f64,
    pub extent_y: f64,
}

impl FootprintReport {
    /// Counts elements whose criterion damage reaches `threshold` (0.5 for
    /// the damaged-area convention).
    pub fn compute(assembly: &Assembly, state: &StateField, threshold: f64) -> Self {
        let nply = assembly.model.mesh.ply_count();
        let mut counts = vec![[0usize; 6]; nply];
        let mut areas = vec![[0.0f64; 6]; nply];
        let mut cells: BTreeSet<(i64, i64)> = BTreeSet::new();
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        let mut cell_area = 0.0;
        for (e, elem) in assembly.model.mesh.elements.iter().enumerate() {
            let kit = assembly.kit(e);
            let mut any = false;
            for c in Criterion::ALL {
                let mode = c.damage_mode();
                let mut dmax = 0.0f64;
                for gp in 0..8 {
                    dmax = dmax.max(state.points[e * 8 + gp].damage.get(mode));
                }
                if dmax >= threshold {
                    counts[elem.ply][c.index()] += 1;
                    areas[elem.ply][c.index()] += kit.area_xy;
                    any = true;
                }
            }
            if any {
                // Projected footprint cell from the element centroid.
                let mut cx = 0.0;
                let mut cy = 0.0;
                for &n in &elem.nodes {
                    cx += assembly.model.mesh.nodes[n][0];
                    cy += assembly.model.mesh.nodes[n][1];
                }
                cx /= 8.0;
                cy /= 8.0;
                let key = ((cx * 1.0e6).round() as i64, (cy * 1.0e6).round() as i64);
                if cells.insert(key) {
                    cell_area += kit.area_xy;
                }
                let half = 0.5 * kit.area_xy.sqrt();
                min_x = min_x.min(cx - half);
                max_x = max_x.max(cx + half);
                min_y = min_y.min(cy - half);
                max_y = max_y.max(cy + half);
            }
        }
        let (extent_x, extent_y) = if cells.is_empty() {
            (0.0, 0.0)
        } else {
            (max_x - min_x, max_y - min_y)
        };
        FootprintReport {
            damage_threshold: threshold,
            counts,
            areas,
            projected_area: cell_area,
            extent_x,
            extent_y,
        }
    }

    /// Footprint axis ratio (x extent over y extent); 1 for an empty
    /// footprint.
    pub fn axis_ratio(&self) -> f64 {
        if self.extent_y == 0.0 {
            1.0
        } else {
            self.extent_x / self.extent_y
        }
    }

    /// Total damaged area of one criterion over a set of plies.
    pub fn area_of(&self, c: Criterion, plies: &[usize]) -> f64 {
        plies.iter().map(|&p| self.areas[p][c.index()]).sum()
    }

    pub fn total_area(&self) -> f64 {
        self.areas
            .iter()
            .map(|row| row.iter().sum::<f64>())
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("ply");
        for c in Criterion::ALL {
            let _ = write!(out, ",count_{}", c.label());
        }
        for c in Criterion::ALL {
            let _ = write!(out, ",area_{}_mm2", c.label());
        }
        out.push('\n');
        for p in 0..self.counts.len() {
            let _ = write!(out, "{}", p + 1);
            for c in Criterion::ALL {
                let _ = write!(out, ",{}", self.counts[p][c.index()]);
            }
            for c in Criterion::ALL {
                let _ = write!(out, ",{}", self.areas[p][c.index()]);
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "# projected_area_mm2 = {}, extent_x_mm = {}, extent_y_mm = {}, axis_ratio = {}",
            self.projected_area,
            self.extent_x,
            self.extent_y,
            self.axis_ratio()
        );
        out
    }
}

/// Fatigue life summary under the no-growth rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifeReport {
    /// Full spectrum passes completed without damage growth.
    pub spectra_without_growth: usize,
    /// Pass index (1-based) at which growth was first detected, if any.
    pub growth_onset_spectrum: Option<usize>,
    /// Flight hours represented by one pass.
    pub hours_per_spectrum: f64,
    /// Equivalent flight hours: passes-without-growth times equivalence.
    pub flight_hours: f64,
    /// True when max_spectra elapsed without growth (life is a lower
    /// bound).
    pub runout: bool,
    /// Damaged-area history per pass, per criterion (mm^2).
    pub area_history: Vec<[f64; 6]>,
    /// Newly failed elements outside the initial footprint at onset.
    pub new_failed_elements: usize,
}

impl LifeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("spectrum");
        for c in Criterion::ALL {
            let _ = write!(out, ",area_{}_mm2", c.label());
        }
        out.push('\n');
        for (i, row) in self.area_history.iter().enumerate() {
            let _ = write!(out, "{}", i + 1);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        match self.growth_onset_spectrum {
            Some(n) => {
                let _ = writeln!(
                    s,
                    "damage growth first detected during spectrum pass {n} \
                     ({} new failed elements outside the initial footprint)",
                    self.new_failed_elements
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    "no damage growth detected (runout after {} passes)",
                    self.spectra_without_growth
                );
            }
        }
        let _ = writeln!(
            s,
            "life without growth: {} spectrum passes = {} flight hours{}",
            self.spectra_without_growth,
            self.flight_hours,
            if self.runout { " (lower bound)" } else { "" }
        );
        s
    }
}

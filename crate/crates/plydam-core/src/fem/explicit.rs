//! Explicit central-difference dynamics with analytic rigid-sphere penalty
//! contact and per-step progressive damage.
//!
//! Element work runs in three tiers: pristine elements apply their shared
//! stiffness directly and are screened at the centroid for criterion
//! activation; once an element nears activation it is promoted to the full
//! per-Gauss-point path with strain-envelope damage evolution. Promotion is
//! sticky, so damaged elements always take the full path. All reductions
//! are fixed-order; runs are bit-identical for any worker count.

use nalgebra::{Matrix6, Vector6};
use rayon::prelude::*;

use super::element::gather;
use super::model::{Assembly, PointState, RigidImpactor, StateField};
use crate::error::{Error, Result};
use crate::impact::{lvi_check, SofteningBounds, StrainBounds};
use crate::material::{damaged_stiffness, LaminaStrength, Mode};

/// Controls for one explicit run.
#[derive(Debug, Clone)]
pub struct ExplicitConfig {
    /// Hard cap on simulated time (s).
    pub duration_s: f64,
    /// Stop once the impactor has separated and receded for `ring_down_s`.
    pub stop_on_separation: bool,
    /// Extra simulated time after separation (s).
    pub ring_down_s: f64,
    /// Disables damage evolution (elastic audit runs).
    pub damage_enabled: bool,
    /// Coulomb friction coefficient for all contact.
    pub friction: f64,
    /// Contact penalty as a multiple of the adjacent element's normal
    /// stiffness.
    pub penalty_scale: f64,
    /// Normal contact damping ratio (fraction of critical for the contact
    /// spring / nodal mass pair). Suppresses penalty chatter against
    /// softened surfaces; its work is ledgered as contact dissipation.
    pub contact_damping: f64,
    /// Node set the impactor may touch.
    pub contact_set: String,
    /// Ledger sampling interval in steps (1 = every step).
    pub ledger_every: usize,
    /// Frame callback interval in steps (0 = no frames).
    pub frame_every: usize,
}

impl Default for ExplicitConfig {
    fn default() -> Self {
        ExplicitConfig {
            duration_s: 0.02,
            stop_on_separation: true,
            ring_down_s: 5.0e-4,
            damage_enabled: true,
            friction: 0.3,
            penalty_scale: 10.0,
            contact_damping: 0.2,
            contact_set: "TOP".into(),
            ledger_every: 1,
            frame_every: 0,
        }
    }
}

/// One row of the energy ledger (N.mm).
#[derive(Debug, Clone, Copy)]
pub struct LedgerRow {
    pub time_s: f64,
    pub kinetic_plate: f64,
    pub kinetic_impactor: f64,
    pub internal_work: f64,
    pub elastic_stored: f64,
    pub damage_dissipated: f64,
    pub friction_dissipated: f64,
    pub contact_dissipated: f64,
    pub contact_spring: f64,
    pub contact_force: f64,
    /// |balance - KE0| / KE0.
    pub drift: f64,
}

/// Result of an explicit run. The damage state is advanced in place.
#[derive(Debug)]
pub struct ExplicitOutcome {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub impactor: RigidImpactor,
    pub steps: usize,
    pub time_s: f64,
    pub dt_s: f64,
    pub separated: bool,
    pub peak_contact_force: f64,
    pub max_drift: f64,
    pub ledger: Vec<LedgerRow>,
}

/// Observer invoked at frame cadence with the instantaneous fields.
pub type FrameSink<'a> = dyn FnMut(usize, f64, &[f64], &StateField) + 'a;

struct ActiveData {
    /// Damaged ply-frame constitutive per Gauss point.
    c: [Matrix6<f64>; 8],
    /// Per-point softening bounds on the point's strength basis.
    bounds: [SofteningBounds; 8],
    /// Per-point strength basis snapshot.
    strengths: [LaminaStrength; 8],
}

/// Column-major accumulate f = Ke u straight into the slab slot; measurably
/// faster than the generic matrix-vector product on this hot path.
#[inline]
fn ke_mul(ke: &super::element::ElementStiffness, ue: &super::element::ElementVector) -> [f64; 24] {
    let cols = ke.as_slice();
    let mut acc = [0.0f64; 24];
    for j in 0..24 {
        let x = ue[j];
        let base = 24 * j;
        for (i, a) in acc.iter_mut().enumerate() {
            *a += cols[base + i] * x;
        }
    }
    acc
}

fn strengths_of(point: &PointState) -> LaminaStrength {
    let rs = &point.rs;
    let mut s = LaminaStrength {
        x1t: 0.0,
        x1c: 0.0,
        x2t: 0.0,
        x2c: 0.0,
        x3t: 0.0,
        x3c: 0.0,
        x12: 0.0,
        x13: 0.0,
        x23: 0.0,
    };
    for mode in Mode::ALL {
        s.set(mode, rs.strength(mode));
    }
    s
}

fn point_bounds(
    assembly: &Assembly,
    e: usize,
    strengths: &LaminaStrength,
    clamped: &SofteningBounds,
) -> SofteningBounds {
    // Strength-degraded bounds: eps_o = X'/E, eps_f = 2G/(X' l*). A lower
    // basis only widens the softening range, so the run-start snap-back
    // validation on pristine strengths stays sufficient.
    let mat = assembly.material(e);
    let kit = assembly.kit(e);
    let mut bounds = *clamped;
    for mode in Mode::ALL.iter().take(6).copied() {
        let x = strengths.get(mode);
        let e_mod = mat.elastic.modulus(mode.axis());
        let g = mat.toughness.get(mode).unwrap();
        let eps_o = x / e_mod;
        let mut eps_f = 2.0 * g / (x * kit.l_star);
        if eps_f <= eps_o {
            eps_f = 1.01 * eps_o;
        }
        bounds.bounds[mode.index()] = StrainBounds { eps_o, eps_f };
    }
    bounds
}

/// Runs the explicit stage. Damage accumulates into `state`; the ledger
/// and final kinematics come back in the outcome.
pub fn explicit_run(
    assembly: &Assembly,
    state: &mut StateField,
    impactor: RigidImpactor,
    config: &ExplicitConfig,
    mut frame_sink: Option<&mut FrameSink<'_>>,
) -> Result<ExplicitOutcome> {
    impactor.validate()?;
    let nelem = assembly.n_elements();
    let ndof = assembly.model.n_dof();
    let nodes = &assembly.model.mesh.nodes;

    // Snap-back validation up front (pristine strengths per kit).
    let mut softening: Vec<SofteningBounds> = Vec::with_capacity(assembly.kits.len());
    for kit in &assembly.kits {
        match &kit.softening {
            Ok(s) => softening.push(*s),
            Err(msg) => return Err(Error::Model(msg.clone())),
        }
    }

    // Contact penalty scaled to the adjacent element's normal stiffness per
    // tributary area: k_node = m_node * omega0^2 with
    // omega0^2 = scale * 2 C33 / (rho t^2), so every contact node shares one
    // contact frequency and light corner nodes get proportionally softer
    // springs.
    let mut omega0_sq = 0.0f64;
    for kit in &assembly.kits {
        let thickness = kit.volume / kit.area_xy;
        let rho = assembly.plies.per_ply[kit.ply].elastic.rho;
        omega0_sq = omega0_sq.max(2.0 * kit.c_ply[(2, 2)] / (rho * thickness * thickness));
    }
    omega0_sq *= config.penalty_scale;
    let omega0 = omega0_sq.sqrt();

    let contact_nodes: Vec<usize> = assembly
        .model
        .mesh
        .node_set(&config.contact_set)?
        .to_vec();

    // Stable increment: material CFL and the contact-spring limit.
    let dt_mat = assembly.material_dt();
    let dt_contact = 0.8 * 2.0 / omega0;
    let dt = dt_mat.min(0.9 * dt_contact);
    if dt < 1e-12 {
        return Err(Error::Instability { dt });
    }

    let mut u = vec![0.0; ndof];
    let mut v = vec![0.0; ndof];
    let mut v_old = vec![0.0; ndof];
    let mut f_int = vec![0.0; ndof];
    let mut f_int_prev = vec![0.0; ndof];
    let mut f_con = vec![0.0; ndof];
    let mut friction_forces: Vec<(usize, [f64; 3])> = Vec::new();
    let mut damping_forces: Vec<(usize, [f64; 3])> = Vec::new();
    let mut slab: Vec<[f64; 24]> = vec![[0.0; 24]; nelem];

    let mut imp = impactor;
    let dir0 = {
        let n = (imp.velocity.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if n > 0.0 {
            [
                imp.velocity[0] / n,
                imp.velocity[1] / n,
                imp.velocity[2] / n,
            ]
        } else {
            [0.0, 0.0, -1.0]
        }
    };
    let mut imp_v_old: [f64; 3];

    // Element tiers.
    let mut active: Vec<Option<Box<ActiveData>>> = (0..nelem).map(|_| None).collect();
    let mut countdown: Vec<u8> = vec![0; nelem];
    const ACTIVATE_AT: f64 = 0.2;
    const HOT_AT: f64 = 0.05;
    const COLD_INTERVAL: u8 = 8;

    // Promote elements that already carry damage or latched activations.
    for e in 0..nelem {
        let pts = &state.points[e * 8..e * 8 + 8];
        let carried = pts
            .iter()
            .any(|p| !p.damage.is_zero() || p.lvi.activated.iter().any(|&a| a));
        if carried {
            active[e] = Some(make_active(assembly, e, pts, &softening));
        }
    }

    // Node-to-element incidence for the deterministic parallel scatter.
    let n_nodes = nodes.len();
    let mut inc_off = vec![0u32; n_nodes + 1];
    for e in &assembly.model.mesh.elements {
        for &n in &e.nodes {
            inc_off[n + 1] += 1;
        }
    }
    for i in 0..n_nodes {
        inc_off[i + 1] += inc_off[i];
    }
    let mut inc: Vec<(u32, u8)> = vec![(0, 0); inc_off[n_nodes] as usize];
    {
        let mut cursor = inc_off.clone();
        for (e, elem) in assembly.model.mesh.elements.iter().enumerate() {
            for (l, &n) in elem.nodes.iter().enumerate() {
                inc[cursor[n] as usize] = (e as u32, l as u8);
                cursor[n] += 1;
            }
        }
    }

    let ke0 = imp.kinetic_energy();
    if ke0 <= 0.0 && config.stop_on_separation {
        // A resting impactor never separates; the duration cap governs.
    }

    let mut w_int = 0.0;
    let mut w_fric = 0.0;
    let mut w_damp = 0.0;
    let mut ledger = Vec::new();
    let mut peak_contact = 0.0f64;
    let mut max_drift = 0.0f64;
    let mut last_contact_t = f64::NEG_INFINITY;
    let mut touched = false;
    let mut separated = false;

    let n_steps_cap = (config.duration_s / dt).ceil() as usize;
    let debug_steps = std::env::var_os("PLYDAM_EXPLICIT_DEBUG").is_some();
    let mut step = 0usize;
    let mut time = 0.0f64;
    let version_in = state.version;
    let mut damage_changed = false;

    while step <= n_steps_cap {
        // Internal forces, constitutive update, and centroid screening in
        // one fused element pass. Pristine elements apply their shared
        // stiffness; once the screening activation crosses the promotion
        // threshold the element switches (stickily) to the per-point path.
        let damage_enabled = config.damage_enabled;
        let any_changed: bool = slab
            .par_iter_mut()
            .zip(state.points.par_chunks_mut(8))
            .zip(active.par_iter_mut())
            .zip(countdown.par_iter_mut())
            .enumerate()
            .map(|(e, (((fe, pts), act_slot), cool))| {
                let kit = assembly.kit(e);
                let ue = gather(&u, &assembly.model.mesh.elements[e].nodes);
                match act_slot {
                    None => {
                        *fe = ke_mul(&kit.ke, &ue);
                        if damage_enabled {
                            if *cool == 0 {
                                let eps = kit.b_ply_centroid * ue;
                                let sigma: Vector6<f64> = kit.c_ply * eps;
                                let mat = assembly.material(e);
                                let act = lvi_check(&sigma, &mat.strength, mat.kind);
                                let amax = act.iter().fold(0.0f64, |a, &b| a.max(b));
                                if amax >= ACTIVATE_AT {
                                    *act_slot = Some(make_active(assembly, e, pts, &softening));
                                } else if amax < HOT_AT {
                                    *cool = COLD_INTERVAL - 1;
                                }
                            } else {
                                *cool -= 1;
                            }
                        }
                        false
                    }
                    Some(data) => {
                        let mat = assembly.material(e);
                        let mut fv = nalgebra::SVector::<f64, 24>::zeros();
                        let mut changed = false;
                        for gp in 0..8 {
                            let eps = kit.b_ply[gp] * ue;
                            let p = &mut pts[gp];
                            if damage_enabled {
                                let sigma_trial: Vector6<f64> = data.c[gp] * eps;
                                let act = lvi_check(&sigma_trial, &data.strengths[gp], mat.kind);
                                p.lvi.record_activations(&act);
                                let before = p.lvi.d;
                                p.lvi.evolve([eps[0], eps[1], eps[2]], &data.bounds[gp]);
                                if p.lvi.d != before {
                                    for m in Mode::ALL.iter().take(6).copied() {
                                        p.damage.raise(m, p.lvi.d[m.index()]);
                                    }
                                    data.c[gp] =
                                        damaged_stiffness(&mat.elastic, &p.damage, mat.kind)
                                            .expect("capped damage keeps stiffness SPD");
                                    changed = true;
                                }
                            }
                            let sigma: Vector6<f64> = data.c[gp] * eps;
                            fv.gemv_tr(kit.weight[gp], &kit.b_ply[gp], &sigma, 1.0);
                        }
                        fe.copy_from_slice(fv.as_slice());
                        changed
                    }
                }
            })
            .reduce(|| false, |a, b| a || b);
        if any_changed {
            damage_changed = true;
        }

        // Deterministic node-parallel scatter via the incidence lists,
        // fused with the internal-work trapezoid over the previous
        // increment (u_n - u_{n-1} = v_{n-1/2} dt, the pre-update `v`) and
        // the previous-force bookkeeping. Chunk partial sums are combined
        // in fixed chunk order, independent of the worker count.
        {
            let slab_ref = &slab;
            let inc_ref = &inc;
            let inc_off_ref = &inc_off;
            let v_ref = &v;
            const CHUNK: usize = 1024;
            let partials: Vec<f64> = f_int
                .par_chunks_mut(3 * CHUNK)
                .zip(f_int_prev.par_chunks_mut(3 * CHUNK))
                .enumerate()
                .map(|(chunk_idx, (fi_chunk, fp_chunk))| {
                    let n0 = chunk_idx * CHUNK;
                    let mut dw = 0.0;
                    for (local, fi) in fi_chunk.chunks_exact_mut(3).enumerate() {
                        let n = n0 + local;
                        let mut acc = [0.0f64; 3];
                        for k in inc_off_ref[n]..inc_off_ref[n + 1] {
                            let (e, l) = inc_ref[k as usize];
                            let fe = &slab_ref[e as usize];
                            let base = 3 * l as usize;
                            acc[0] += fe[base];
                            acc[1] += fe[base + 1];
                            acc[2] += fe[base + 2];
                        }
                        let fp = &mut fp_chunk[3 * local..3 * local + 3];
                        for k in 0..3 {
                            dw += 0.5 * (fp[k] + acc[k]) * v_ref[3 * n + k] * dt;
                            fp[k] = acc[k];
                            fi[k] = acc[k];
                        }
                    }
                    dw
                })
                .collect();
            if step > 0 {
                for p in partials {
                    w_int += p;
                }
            }
        }

        // Contact. Friction is Coulomb with a stick cap: the tangential
        // impulse never exceeds what would reverse the relative slip within
        // one step, which suppresses explicit chatter.
        f_con.iter_mut().for_each(|x| *x = 0.0);
        friction_forces.clear();
        damping_forces.clear();
        let mut f_imp = [0.0f64; 3];
        let mut contact_force_mag = 0.0;
        let mut e_spring = 0.0;
        let mut in_contact = false;
        let r = imp.radius_mm;
        const V_EPS: f64 = 1.0e-6; // mm/s, direction regularisation only
        for &n in &contact_nodes {
            let x = [
                nodes[n][0] + u[3 * n],
                nodes[n][1] + u[3 * n + 1],
                nodes[n][2] + u[3 * n + 2],
            ];
            let d = [
                x[0] - imp.position[0],
                x[1] - imp.position[1],
                x[2] - imp.position[2],
            ];
            let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let gap = r - dist;
            if gap <= 0.0 || dist == 0.0 {
                continue;
            }
            in_contact = true;
            let nrm = [d[0] / dist, d[1] / dist, d[2] / dist];
            let k_node = assembly.mass[n] * omega0_sq;
            let fn_mag = k_node * gap;
            e_spring += 0.5 * k_node * gap * gap;
            let vrel = [
                v[3 * n] - imp.velocity[0],
                v[3 * n + 1] - imp.velocity[1],
                v[3 * n + 2] - imp.velocity[2],
            ];
            let vn = vrel[0] * nrm[0] + vrel[1] * nrm[1] + vrel[2] * nrm[2];
            let vt = [
                vrel[0] - vn * nrm[0],
                vrel[1] - vn * nrm[1],
                vrel[2] - vn * nrm[2],
            ];
            let vt_mag = (vt[0] * vt[0] + vt[1] * vt[1] + vt[2] * vt[2]).sqrt();
            // Normal dashpot while closing (vn < 0), ledgered exactly. The
            // impulse is capped so it can never reverse the relative normal
            // velocity within a step.
            if config.contact_damping > 0.0 && vn < 0.0 {
                let c_n = 2.0 * config.contact_damping * assembly.mass[n] * omega0;
                let fd_mag = (-c_n * vn).min(0.9 * assembly.mass[n] * (-vn) / dt);
                let mut fd = [0.0f64; 3];
                for k in 0..3 {
                    fd[k] = fd_mag * nrm[k];
                    f_con[3 * n + k] += fd[k];
                    f_imp[k] -= fd[k];
                }
                damping_forces.push((n, fd));
            }
            let slip_force = config.friction * fn_mag;
            let stick_force = 0.5 * assembly.mass[n] * vt_mag / dt;
            let ft_mag = slip_force.min(stick_force);
            let ft_scale = -ft_mag / (vt_mag + V_EPS);
            let mut ft = [0.0f64; 3];
            for k in 0..3 {
                ft[k] = ft_scale * vt[k];
                let fnode = fn_mag * nrm[k] + ft[k];
                f_con[3 * n + k] += fnode;
                f_imp[k] -= fnode;
            }
            if ft_mag > 0.0 {
                friction_forces.push((n, ft));
            }
            contact_force_mag += fn_mag;
        }
        peak_contact = peak_contact.max(contact_force_mag);
        if in_contact {
            touched = true;
            last_contact_t = time;
        }

        // Node update (velocity and position fused).
        v_old.copy_from_slice(&v);
        {
            let fixed = &assembly.model.fixed;
            let mass = &assembly.mass;
            let f_con_ref = &f_con;
            let f_int_ref = &f_int;
            v.par_chunks_mut(3)
                .zip(u.par_chunks_mut(3))
                .enumerate()
                .for_each(|(n, (vn, un))| {
                    let m = mass[n];
                    for k in 0..3 {
                        let g = 3 * n + k;
                        if fixed[g] {
                            vn[k] = 0.0;
                        } else {
                            let a = (f_con_ref[g] - f_int_ref[g]) / m;
                            vn[k] += a * dt;
                            un[k] += vn[k] * dt;
                        }
                    }
                });
        }

        // Impactor update (same integrator).
        imp_v_old = imp.velocity;
        for k in 0..3 {
            imp.velocity[k] += f_imp[k] / imp.mass_t * dt;
            imp.position[k] += imp.velocity[k] * dt;
        }

        // Interface dissipation from the applied forces and the
        // velocities they produced (forces are piecewise constant over the
        // step, so work = f . v_post dt exactly).
        for &(n, ft) in &friction_forces {
            let mut p = 0.0;
            for k in 0..3 {
                p += ft[k] * (v[3 * n + k] - imp.velocity[k]);
            }
            w_fric -= p * dt;
        }
        for &(n, fd) in &damping_forces {
            let mut p = 0.0;
            for k in 0..3 {
                p += fd[k] * (v[3 * n + k] - imp.velocity[k]);
            }
            w_damp -= p * dt;
        }

        time += dt;
        step += 1;

        // Ledger.
        if step % config.ledger_every.max(1) == 0 || step == 1 {
            let mut ke_plate = 0.0;
            for n in 0..nodes.len() {
                let m = assembly.mass[n];
                for k in 0..3 {
                    let vm = 0.5 * (v[3 * n + k] + v_old[3 * n + k]);
                    ke_plate += 0.5 * m * vm * vm;
                }
            }
            let mut ke_imp = 0.0;
            for k in 0..3 {
                let vm = 0.5 * (imp.velocity[k] + imp_v_old[k]);
                ke_imp += 0.5 * imp.mass_t * vm * vm;
            }
            let elastic_stored = elastic_energy(assembly, &u, &active);
            let damage_dissipated = (w_int - elastic_stored).max(0.0);
            let balance = ke_plate + ke_imp + w_int + w_fric + w_damp + e_spring;
            let drift = if ke0 > 0.0 {
                ((balance - ke0) / ke0).abs()
            } else {
                0.0
            };
            max_drift = max_drift.max(drift);
            ledger.push(LedgerRow {
                time_s: time,
                kinetic_plate: ke_plate,
                kinetic_impactor: ke_imp,
                internal_work: w_int,
                elastic_stored,
                damage_dissipated,
                friction_dissipated: w_fric,
                contact_dissipated: w_damp,
                contact_spring: e_spring,
                contact_force: contact_force_mag,
                drift,
            });
        }

        if config.frame_every > 0 && step % config.frame_every == 0 {
            if let Some(sink) = frame_sink.as_deref_mut() {
                sink(step, time, &u, state);
            }
        }

        if debug_steps && step % 10_000 == 0 {
            let vmax = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            let umax = u.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            let nact = active.iter().filter(|a| a.is_some()).count();
            let dsum: f64 = state
                .points
                .iter()
                .map(|p| p.damage.components().iter().sum::<f64>())
                .sum();
            eprintln!(
                "dbg step {step} t={time:.4e} vmax={vmax:.3e} umax={umax:.3e} active={nact} dsum={dsum:.1} wint={w_int:.1}"
            );
        }

        // Separation: impactor has touched, left contact, and is receding.
        if config.stop_on_separation && touched && !in_contact {
            let receding =
                imp.velocity[0] * dir0[0] + imp.velocity[1] * dir0[1] + imp.velocity[2] * dir0[2];
            if receding < 0.0 && time - last_contact_t >= config.ring_down_s {
                separated = true;
                break;
            }
        }
    }

    if damage_changed {
        state.version = version_in + 1;
    }

    Ok(ExplicitOutcome {
        u,
        v,
        impactor: imp,
        steps: step,
        time_s: time,
        dt_s: dt,
        separated,
        peak_contact_force: peak_contact,
        max_drift,
        ledger,
    })
}

fn make_active(
    assembly: &Assembly,
    e: usize,
    pts: &[PointState],
    softening: &[SofteningBounds],
) -> Box<ActiveData> {
    let kit_id = assembly.elem_kit[e] as usize;
    let mat = assembly.material(e);
    let mut c = [Matrix6::zeros(); 8];
    let mut bounds = [softening[kit_id]; 8];
    let mut strengths = [mat.strength; 8];
    for gp in 0..8 {
        let p = &pts[gp];
        c[gp] = if p.damage.is_zero() {
            assembly.kit(e).c_ply
        } else {
            damaged_stiffness(&mat.elastic, &p.damage, mat.kind)
                .expect("capped damage keeps stiffness SPD")
        };
        strengths[gp] = strengths_of(p);
        bounds[gp] = point_bounds(assembly, e, &strengths[gp], &softening[kit_id]);
    }
    Box::new(ActiveData {
        c,
        bounds,
        strengths,
    })
}

/// Recoverable elastic energy with the secant (damaged) stiffness.
fn elastic_energy(assembly: &Assembly, u: &[f64], active: &[Option<Box<ActiveData>>]) -> f64 {
    let energies: Vec<f64> = (0..assembly.n_elements())
        .into_par_iter()
        .map(|e| {
            let kit = assembly.kit(e);
            let ue = gather(u, &assembly.model.mesh.elements[e].nodes);
            match &active[e] {
                None => {
                    let f = ke_mul(&kit.ke, &ue);
                    0.5 * ue.as_slice().iter().zip(&f).map(|(a, b)| a * b).sum::<f64>()
                }
                Some(data) => {
                    let mut w = 0.0;
                    for gp in 0..8 {
                        let eps = kit.b_ply[gp] * ue;
                        let sigma = data.c[gp] * eps;
                        w += 0.5 * eps.dot(&sigma) * kit.weight[gp];
                    }
                    w
                }
            }
        })
        .collect();
    energies.iter().sum()
}

/// Writes the ledger as CSV.
pub fn ledger_to_csv(rows: &[LedgerRow]) -> String {
    let mut out = String::from(
        "time_s,kinetic_plate,kinetic_impactor,internal_work,elastic_stored,\
         damage_dissipated,friction_dissipated,contact_dissipated,contact_spring,\
         contact_force,drift\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.time_s,
            r.kinetic_plate,
            r.kinetic_impactor,
            r.internal_work,
            r.elastic_stored,
            r.damage_dissipated,
            r.friction_dissipated,
            r.contact_dissipated,
            r.contact_spring,
            r.contact_force,
            r.drift
        ));
    }
    out
}


impl ExplicitOutcome {
    /// The impactor touched the plate and ended up moving away from it.
    pub fn touched_and_rebounded(&self) -> bool {
        self.peak_contact_force > 0.0 && self.separated
    }
}

//! Command implementations and stage sequencing.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use plydam_core::error::{Error, Result};
use plydam_core::fatigue::fit::{fit_params, parse_fit_csv, FitOptions};
use plydam_core::fem::explicit::{ledger_to_csv, ExplicitConfig};
use plydam_core::fem::mesh::{build_plate, read_mesh, write_mesh, Mesh, PlateSpec};
use plydam_core::fem::model::{Assembly, Model, PlyMaterials, StateField};
use plydam_core::fem::statics::{force_on_sets, recover_ply_stresses, StaticSolver};
use plydam_core::fem::vtk::write_vtk_file;
use plydam_core::material::library::{fatigue_map_to_json, MaterialLibrary};
use plydam_core::material::Mode;
use plydam_core::pipeline::{
    run_fatigue, run_lvi, run_prefatigue, transfer_lvi, transfer_prefatigue, FatigueRunConfig,
    GrowthRule, ImpactRunConfig, Provenance, StageState, StageTag,
};
use plydam_core::spectrum::io::{blocks_to_csv, load_spectrum};
use plydam_core::spectrum::Spectrum;

use crate::config::{RunConfig, Stage};
use crate::Command;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::MakePlate {
            stacking,
            span_x_mm,
            span_y_mm,
            element_mm,
            pw_material,
            ud_material,
            pw_thickness_mm,
            ud_thickness_mm,
            out,
        } => {
            let spec = PlateSpec {
                stacking,
                span_x_mm,
                span_y_mm,
                element_mm,
                pw_material,
                ud_material,
                pw_thickness_mm,
                ud_thickness_mm,
            };
            let mesh = build_plate(&spec)?;
            if let Some(dir) = out.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&out, write_mesh(&mesh))?;
            println!(
                "wrote {}: {} nodes, {} elements, {} plies",
                out.display(),
                mesh.nodes.len(),
                mesh.elements.len(),
                mesh.ply_count()
            );
            Ok(())
        }
        Command::Rainflow {
            csv,
            descriptor,
            out,
        } => {
            let spectrum = load_spectrum(&csv, &descriptor)?;
            if let Some(dir) = out.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&out, blocks_to_csv(&spectrum))?;
            println!(
                "wrote {}: {} blocks, {} cycles total",
                out.display(),
                spectrum.blocks.len(),
                spectrum.total_cycles()
            );
            Ok(())
        }
        Command::Static { config } => run_stages(&config, Some(vec![Stage::Static]), None),
        Command::Prefatigue { config } => run_stages(&config, Some(vec![Stage::Prefatigue]), None),
        Command::Impact { config, from_state } => {
            run_stages(&config, Some(vec![Stage::Lvi]), from_state)
        }
        Command::Fatigue { config, from_state } => {
            run_stages(&config, Some(vec![Stage::Fatigue]), Some(from_state))
        }
        Command::Pipeline { config } => run_stages(&config, None, None),
        Command::FitParams {
            csv,
            mode,
            strength_mpa,
            r0,
            fixed_s0_mpa,
            fixed_p,
            out,
        } => {
            let mode = Mode::from_label(&mode)
                .ok_or_else(|| Error::Config(format!("unknown mode '{mode}'")))?;
            let rows = parse_fit_csv(&std::fs::read_to_string(&csv)?)?;
            let data: Vec<_> = rows
                .into_iter()
                .filter(|(m, _)| *m == mode)
                .map(|(_, obs)| obs)
                .collect();
            if data.is_empty() {
                return Err(Error::FitInfeasible(format!(
                    "no rows for mode {} in {}",
                    mode.label(),
                    csv.display()
                )));
            }
            let fitted = fit_params(
                mode,
                strength_mpa,
                r0,
                &data,
                FitOptions {
                    fixed_s0: fixed_s0_mpa,
                    fixed_p,
                },
            )?;
            let text = fatigue_map_to_json(&[fitted]);
            match out {
                Some(path) => {
                    std::fs::write(&path, &text)?;
                    println!("wrote {}", path.display());
                }
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}

struct Job {
    config: RunConfig,
    config_path: PathBuf,
    config_hash: u64,
    library: MaterialLibrary,
    mesh: Mesh,
    spectrum: Option<Spectrum>,
    warnings: Vec<String>,
}

fn fnv_hash(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

fn prepare(config_path: &Path, stage_override: Option<Vec<Stage>>) -> Result<Job> {
    let (mut config, _base) = RunConfig::load(config_path)?;
    if let Some(stages) = stage_override {
        config.stages = stages;
        config.validate()?;
    }
    if config.stages.is_empty() {
        return Err(Error::Config("no stages selected".into()));
    }
    let config_hash = fnv_hash(&std::fs::read(config_path)?);
    let (library, mut warnings) = match &config.material_library {
        Some(path) => MaterialLibrary::from_path(path)?,
        None => MaterialLibrary::bundled(),
    };
    let mesh = match (&config.mesh, &config.plate) {
        (Some(path), None) => read_mesh(path)?,
        (None, Some(plate)) => {
            let mesh = build_plate(&plate.to_spec())?;
            std::fs::create_dir_all(&config.output_dir)?;
            std::fs::write(config.output_dir.join("plate.mesh"), write_mesh(&mesh))?;
            mesh
        }
        _ => unreachable!("validated"),
    };
    let spectrum = match (&config.spectrum_csv, &config.spectrum_descriptor) {
        (Some(csv), Some(desc)) => Some(load_spectrum(csv, desc)?),
        _ => None,
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    warnings.dedup();
    Ok(Job {
        config,
        config_path: config_path.to_path_buf(),
        config_hash,
        library,
        mesh,
        spectrum,
        warnings,
    })
}

fn build_assembly(job: &Job) -> Result<Assembly> {
    let plies = PlyMaterials::uniform(&job.mesh, |name| job.library.lamina(name).cloned())?;
    let mut model = Model::new(job.mesh.clone());
    model.support_edges(job.config.supports)?;
    Assembly::new(model, plies, job.config.clamp_snap_back)
}

fn build_assembly_with(job: &Job, plies: PlyMaterials) -> Result<Assembly> {
    let mut model = Model::new(job.mesh.clone());
    model.support_edges(job.config.supports)?;
    Assembly::new(model, plies, job.config.clamp_snap_back)
}

fn fatigue_run_config(job: &Job) -> FatigueRunConfig {
    FatigueRunConfig {
        max_block_cycles: job.config.block_max_cycles,
        ..Default::default()
    }
}

fn explicit_config(job: &Job) -> ExplicitConfig {
    let lvi = job.config.lvi.as_ref().expect("validated");
    ExplicitConfig {
        duration_s: lvi.duration_s,
        ring_down_s: lvi.ring_down_s,
        friction: lvi.friction,
        ledger_every: lvi.ledger_every_steps.max(1),
        frame_every: lvi.frame_every_steps,
        ..Default::default()
    }
}

fn run_stages(
    config_path: &Path,
    stage_override: Option<Vec<Stage>>,
    from_state: Option<PathBuf>,
) -> Result<()> {
    let t0 = Instant::now();
    let job = prepare(config_path, stage_override)?;
    let outdir = job.config.output_dir.clone();
    std::fs::create_dir_all(&outdir)?;
    let mesh_hash = job.mesh.content_hash();

    let mut assembly = build_assembly(&job)?;
    for w in &assembly.warnings {
        eprintln!("warning: {w}");
    }
    let mut stage_summaries: Vec<serde_json::Value> = Vec::new();

    // Carried state between stages.
    let mut carried: Option<StageState> = match &from_state {
        Some(path) => Some(StageState::load(path, mesh_hash)?),
        None => None,
    };
    let mut carried_footprint: Option<Vec<BTreeSet<usize>>> = None;

    for stage in job.config.stages.clone() {
        match stage {
            Stage::Static => {
                let load = job.config.static_load.as_ref().expect("validated");
                let field = StateField::pristine(&assembly);
                let mut solver = StaticSolver::new(&assembly);
                let f = force_on_sets(
                    &assembly,
                    &[(load.node_set.as_str(), load.direction, load.force_n)],
                )?;
                let sol = solver.solve(&assembly, &field, &f, None)?;
                let stresses = recover_ply_stresses(&assembly, &field, &sol.u);
                write_vtk_file(
                    &outdir.join("static.vtk"),
                    &assembly,
                    &field,
                    &sol.u,
                    Some(&stresses),
                    "static solution",
                )?;
                let umax = sol.u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                println!(
                    "static: residual {:.3e} in {} iterations, max |u| = {:.6} mm",
                    sol.residual, sol.iterations, umax
                );
                stage_summaries.push(json!({
                    "stage": "static",
                    "residual": sol.residual,
                    "iterations": sol.iterations,
                    "max_displacement_mm": umax,
                }));
            }
            Stage::Prefatigue => {
                let spectrum = job.spectrum.as_ref().expect("validated");
                let n = job.config.prefatigue.as_ref().expect("validated").n_spectra;
                let (state, report) =
                    run_prefatigue(&assembly, spectrum, n, &fatigue_run_config(&job))?;
                state.save(&outdir.join("state_prefatigue.pdst"))?;
                std::fs::write(outdir.join("prefatigue_reduction.csv"), report.to_csv())?;
                write_vtk_file(
                    &outdir.join("state_prefatigue.vtk"),
                    &assembly,
                    &state.field,
                    &vec![0.0; assembly.model.n_dof()],
                    None,
                    "pre-fatigue state",
                )?;
                println!(
                    "prefatigue: {n} spectra applied, {} failed elements",
                    report.failed_elements
                );
                stage_summaries.push(json!({
                    "stage": "prefatigue",
                    "spectra": n,
                    "failed_elements": report.failed_elements,
                }));
                carried = Some(state);
            }
            Stage::Lvi => {
                let lvi_cfg = job.config.lvi.as_ref().expect("validated");
                // Transfer from the carried pre-fatigue state, or start
                // pristine.
                let (field, provenance) = match &carried {
                    Some(state) => {
                        state.check_ready_for_impact()?;
                        if state.stage == StageTag::PreFatigue {
                            let (plies, field) =
                                transfer_prefatigue(&assembly, state, job.config.transfer)?;
                            assembly = build_assembly_with(&job, plies)?;
                            (field, state.provenance)
                        } else {
                            (state.field.clone(), state.provenance)
                        }
                    }
                    None => (StateField::pristine(&assembly), Provenance::pristine()),
                };
                let run_cfg = ImpactRunConfig {
                    energy_j: lvi_cfg.energy_j,
                    impactor_mass_kg: lvi_cfg.impactor_mass_kg,
                    impactor_diameter_mm: lvi_cfg.impactor_diameter_mm,
                    explicit: explicit_config(&job),
                    footprint_threshold: lvi_cfg.footprint_threshold,
                };
                let (state, footprint, outcome) = run_lvi(&assembly, field, provenance, &run_cfg)?;
                state.save(&outdir.join("state_lvi.pdst"))?;
                std::fs::write(outdir.join("lvi_footprint.csv"), footprint.to_csv())?;
                std::fs::write(outdir.join("lvi_energy.csv"), ledger_to_csv(&outcome.ledger))?;
                let stresses = recover_ply_stresses(&assembly, &state.field, &outcome.u);
                write_vtk_file(
                    &outdir.join("state_lvi.vtk"),
                    &assembly,
                    &state.field,
                    &outcome.u,
                    Some(&stresses),
                    "post-impact state",
                )?;
                println!(
                    "lvi: {} J, {} steps (dt {:.3e} s), peak contact {:.1} N, \
                     projected footprint {:.1} mm^2, energy drift {:.3}%",
                    lvi_cfg.energy_j,
                    outcome.steps,
                    outcome.dt_s,
                    outcome.peak_contact_force,
                    footprint.projected_area,
                    100.0 * outcome.max_drift
                );
                stage_summaries.push(json!({
                    "stage": "lvi",
                    "energy_J": lvi_cfg.energy_j,
                    "steps": outcome.steps,
                    "dt_s": outcome.dt_s,
                    "separated": outcome.separated,
                    "peak_contact_N": outcome.peak_contact_force,
                    "projected_footprint_mm2": footprint.projected_area,
                    "axis_ratio": footprint.axis_ratio(),
                    "max_energy_drift": outcome.max_drift,
                }));
                carried = Some(state);
                carried_footprint = None;
            }
            Stage::Fatigue => {
                let spectrum = job.spectrum.as_ref().expect("validated");
                let fat_cfg = job.config.fatigue.as_ref().expect("validated");
                let state = carried.take().ok_or_else(|| {
                    Error::StageState(
                        "fatigue stage needs an impact state (run lvi first or pass --from-state)"
                            .into(),
                    )
                })?;
                let (field, footprint) = match carried_footprint.take() {
                    Some(fp) => (state.field.clone(), fp),
                    None => transfer_lvi(&assembly, &state)?,
                };
                let (out_state, life) = run_fatigue(
                    &assembly,
                    field,
                    &footprint,
                    state.provenance,
                    spectrum,
                    fat_cfg.max_spectra,
                    &fatigue_run_config(&job),
                    &GrowthRule {
                        new_element_threshold: fat_cfg.growth_new_elements,
                    },
                )?;
                out_state.save(&outdir.join("state_fatigue.pdst"))?;
                std::fs::write(outdir.join("life_history.csv"), life.to_csv())?;
                std::fs::write(outdir.join("life_summary.txt"), life.summary())?;
                write_vtk_file(
                    &outdir.join("state_fatigue.vtk"),
                    &assembly,
                    &out_state.field,
                    &vec![0.0; assembly.model.n_dof()],
                    None,
                    "post-fatigue state",
                )?;
                print!("fatigue: {}", life.summary());
                stage_summaries.push(json!({
                    "stage": "fatigue",
                    "spectra_without_growth": life.spectra_without_growth,
                    "growth_onset_spectrum": life.growth_onset_spectrum,
                    "flight_hours": life.flight_hours,
                    "runout": life.runout,
                }));
                carried = Some(out_state);
            }
        }
    }

    let manifest = json!({
        "tool": format!("plydam {}", env!("CARGO_PKG_VERSION")),
        "config_path": job.config_path.display().to_string(),
        "config_hash": format!("{:#018x}", job.config_hash),
        "mesh_hash": format!("{:#018x}", mesh_hash),
        "stages": stage_summaries,
        "warnings": job.warnings,
        "wall_time_s": t0.elapsed().as_secs_f64(),
    });
    std::fs::write(
        outdir.join("run_manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}

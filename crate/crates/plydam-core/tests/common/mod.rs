//! Shared fixtures for integration tests: single-element uniaxial models
//! and constant-amplitude spectra.

#![allow(dead_code)]

use std::collections::BTreeMap;

use plydam_core::fem::mesh::{Mesh, MeshElement};
use plydam_core::fem::model::{Assembly, Model, PlyMaterials};
use plydam_core::material::library::MaterialLibrary;
use plydam_core::spectrum::{ChannelMeta, CycleBlock, Spectrum};

/// One unit cube of the given material with roller supports that produce a
/// uniform uniaxial stress under an x-face load. Node sets: "XP" (loaded
/// face).
pub fn uniaxial_cube(material: &str) -> Assembly {
    let nodes = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
    ];
    let elements = vec![MeshElement {
        nodes: [0, 1, 2, 3, 4, 5, 6, 7],
        ply: 0,
        material: material.to_string(),
        angle_deg: 0.0,
    }];
    let mut node_sets = BTreeMap::new();
    node_sets.insert("XP".to_string(), vec![1, 2, 5, 6]);
    node_sets.insert("X0".to_string(), vec![0, 3, 4, 7]);
    node_sets.insert("Y0".to_string(), vec![0, 1, 4, 5]);
    node_sets.insert("Z0".to_string(), vec![0, 1, 2, 3]);
    let mesh = Mesh {
        nodes,
        elements,
        node_sets,
        element_sets: BTreeMap::new(),
    };
    let (lib, _) = MaterialLibrary::bundled();
    let plies = PlyMaterials::uniform(&mesh, |n| lib.lamina(n).cloned()).unwrap();
    let mut model = Model::new(mesh);
    model.fix_set("X0", [true, false, false]).unwrap();
    model.fix_set("Y0", [false, true, false]).unwrap();
    model.fix_set("Z0", [false, false, true]).unwrap();
    Assembly::new(model, plies, true).unwrap()
}

/// Constant-amplitude single-channel spectrum: `count` cycles per pass at
/// (peak, valley) load factors on node set "XP" along +x. The reference
/// force equals the face area, so the peak factor is the peak stress in
/// MPa.
pub fn constant_amplitude_spectrum(
    peak: f64,
    valley: f64,
    count: f64,
    reference_force: f64,
) -> Spectrum {
    Spectrum {
        channels: vec![ChannelMeta {
            id: "axial".into(),
            node_set: "XP".into(),
            direction: [1.0, 0.0, 0.0],
        }],
        blocks: vec![CycleBlock {
            peak: vec![peak],
            valley: vec![valley],
            count,
            r: valley / peak,
        }],
        reference_force,
        flight_hours_per_pass: 1000.0,
    }
}

//! Spectrum input/output: sample CSV plus a JSON sidecar descriptor, and
//! the canonical block listing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{count_cycles, merge_cycles, LoadChannel, Spectrum};
use crate::error::{Error, Result};

/// Sidecar descriptor mapping CSV columns to node sets and directions and
/// declaring the reference force and flight-hour equivalence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumDescriptor {
    #[serde(rename = "reference_force_N")]
    pub reference_force_n: f64,
    pub flight_hours_per_pass: f64,
    pub master_channel: String,
    #[serde(default)]
    pub merge_tolerance: f64,
    pub channels: Vec<ChannelDescriptor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDescriptor {
    pub id: String,
    pub node_set: String,
    pub direction: [f64; 3],
}

/// Parses a sample CSV with columns `time, <channel_1> ... <channel_k>`.
/// The header row names the channels.
pub fn parse_samples_csv(text: &str) -> Result<(Vec<String>, Vec<f64>, Vec<Vec<f64>>)> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Spectrum("empty spectrum CSV".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 2 || !columns[0].eq_ignore_ascii_case("time") {
        return Err(Error::Spectrum(
            "spectrum CSV header must be 'time,<channel>...'".into(),
        ));
    }
    let names: Vec<String> = columns[1..].iter().map(|s| s.to_string()).collect();
    let mut times = Vec::new();
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::Spectrum(format!(
                "row {}: expected {} fields, got {}",
                lineno + 2,
                columns.len(),
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Spectrum(format!("row {}: bad number '{s}'", lineno + 2)))
        };
        times.push(parse(fields[0])?);
        for (i, f) in fields[1..].iter().enumerate() {
            data[i].push(parse(f)?);
        }
    }
    Ok((names, times, data))
}

/// Loads, counts and merges a spectrum from a sample CSV and its
/// descriptor.
pub fn load_spectrum(csv_path: &Path, descriptor_path: &Path) -> Result<Spectrum> {
    let csv_text = std::fs::read_to_string(csv_path)?;
    let desc_text = std::fs::read_to_string(descriptor_path)?;
    let descriptor: SpectrumDescriptor = serde_json::from_str(&desc_text)?;
    build_spectrum(&csv_text, &descriptor)
}

/// Builds a merged spectrum from CSV text and a descriptor.
pub fn build_spectrum(csv_text: &str, descriptor: &SpectrumDescriptor) -> Result<Spectrum> {
    let (names, times, data) = parse_samples_csv(csv_text)?;
    let mut channels = Vec::with_capacity(descriptor.channels.len());
    for cd in &descriptor.channels {
        let col = names
            .iter()
            .position(|n| *n == cd.id)
            .ok_or_else(|| Error::Spectrum(format!("descriptor channel '{}' not in CSV", cd.id)))?;
        channels.push(LoadChannel {
            id: cd.id.clone(),
            node_set: cd.node_set.clone(),
            direction: cd.direction,
            samples: times.iter().copied().zip(data[col].iter().copied()).collect(),
        });
    }
    let master = channels
        .iter()
        .position(|c| c.id == descriptor.master_channel)
        .ok_or_else(|| {
            Error::Spectrum(format!(
                "master channel '{}' not among descriptor channels",
                descriptor.master_channel
            ))
        })?;
    let counted = count_cycles(
        &channels,
        master,
        descriptor.reference_force_n,
        descriptor.flight_hours_per_pass,
    )?;
    merge_cycles(&counted, descriptor.merge_tolerance)
}

/// Canonical block listing: `count, r, peak_<ch>..., valley_<ch>...`.
pub fn blocks_to_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from("count,r");
    for ch in &spectrum.channels {
        out.push_str(&format!(",peak_{}", ch.id));
    }
    for ch in &spectrum.channels {
        out.push_str(&format!(",valley_{}", ch.id));
    }
    out.push('\n');
    for b in &spectrum.blocks {
        out.push_str(&format!("{},{}", b.count, b.r));
        for v in &b.peak {
            out.push_str(&format!(",{v}"));
        }
        for v in &b.valley {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

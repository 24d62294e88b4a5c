//! Load-spectrum handling: rainflow cycle counting on a master channel,
//! merging of near-identical cycles, and quasi-static per-cycle load cases.

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One load application channel of a multipoint coordinated history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadChannel {
    pub id: String,
    /// Node set the channel's force is applied to.
    pub node_set: String,
    /// Unit direction of the applied force.
    pub direction: [f64; 3],
    /// Ordered (time, coefficient) samples; coefficients scale the
    /// spectrum's reference force.
    pub samples: Vec<(f64, f64)>,
}

impl LoadChannel {
    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::Spectrum(format!(
                "channel '{}' needs at least 2 samples",
                self.id
            )));
        }
        for w in self.samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Spectrum(format!(
                    "channel '{}': times must strictly increase ({} then {})",
                    self.id, w[0].0, w[1].0
                )));
            }
        }
        Ok(())
    }
}

/// A counted rainflow cycle on one series. `from`/`to` index the original
/// series samples of the two turning points; `count` is 1 for closed cycles
/// and 0.5 for residue half-cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainflowCycle {
    pub from: usize,
    pub to: usize,
    pub range: f64,
    pub mean: f64,
    pub count: f64,
}

/// Reduces a series to its turning points, returning indices into the
/// original series. Keeps the endpoints; drops flats and monotone middles.
fn turning_points(series: &[f64]) -> Vec<usize> {
    let mut tp = Vec::new();
    let n = series.len();
    if n == 0 {
        return tp;
    }
    tp.push(0);
    for i in 1..n {
        let prev = series[*tp.last().unwrap()];
        if series[i] == prev {
            continue;
        }
        if tp.len() >= 2 {
            let a = series[tp[tp.len() - 2]];
            let b = prev;
            let c = series[i];
            if (b - a).signum() == (c - b).signum() {
                tp.pop();
            }
        }
        tp.push(i);
    }
    // A trailing flat can leave a monotone middle at the end.
    while tp.len() >= 3 {
        let a = series[tp[tp.len() - 3]];
        let b = series[tp[tp.len() - 2]];
        let c = series[tp[tp.len() - 1]];
        if (b - a).signum() == (c - b).signum() {
            let last = tp.pop().unwrap();
            tp.pop();
            tp.push(last);
        } else {
            break;
        }
    }
    tp
}

/// Four-point rainflow count with the residue handled as half-cycles.
///
/// The damage-relevant reversal count is conserved: the counts sum to half
/// the reversal count of the turning-point-reduced series.
pub fn rainflow(series: &[f64]) -> Vec<RainflowCycle> {
    let tp = turning_points(series);
    let mut cycles = Vec::new();
    if tp.len() < 2 {
        return cycles;
    }
    let value = |i: usize| series[i];
    let mut stack: Vec<usize> = Vec::with_capacity(tp.len());
    for &idx in &tp {
        stack.push(idx);
        while stack.len() >= 4 {
            let a = value(stack[stack.len() - 4]);
            let b = value(stack[stack.len() - 3]);
            let c = value(stack[stack.len() - 2]);
            let d = value(stack[stack.len() - 1]);
            let r1 = (b - a).abs();
            let r2 = (c - b).abs();
            let r3 = (d - c).abs();
            if r2 <= r1 && r2 <= r3 {
                let i_b = stack[stack.len() - 3];
                let i_c = stack[stack.len() - 2];
                cycles.push(RainflowCycle {
                    from: i_b,
                    to: i_c,
                    range: r2,
                    mean: 0.5 * (value(i_b) + value(i_c)),
                    count: 1.0,
                });
                stack.remove(stack.len() - 2);
                stack.remove(stack.len() - 2);
            } else {
                break;
            }
        }
    }
    for w in stack.windows(2) {
        cycles.push(RainflowCycle {
            from: w[0],
            to: w[1],
            range: (value(w[1]) - value(w[0])).abs(),
            mean: 0.5 * (value(w[0]) + value(w[1])),
            count: 0.5,
        });
    }
    cycles
}

/// One merged cycle block of a multichannel spectrum. Per channel the peak
/// is the larger and the valley the smaller of the coordinated coefficients
/// at the master cycle's two turning instants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleBlock {
    pub peak: Vec<f64>,
    pub valley: Vec<f64>,
    /// Number of identical cycles (residue halves carry 0.5).
    pub count: f64,
    /// Stress ratio of the master channel, valley/peak.
    pub r: f64,
}

/// Channel attachment metadata kept alongside the counted blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub id: String,
    pub node_set: String,
    pub direction: [f64; 3],
}

/// Counted and merged multichannel loading spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub channels: Vec<ChannelMeta>,
    pub blocks: Vec<CycleBlock>,
    /// Reference force the coefficients scale (N).
    pub reference_force: f64,
    /// Flight hours one pass of the spectrum represents.
    pub flight_hours_per_pass: f64,
}

impl Spectrum {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::Spectrum("spectrum has no blocks".into()));
        }
        for b in &self.blocks {
            if b.peak.len() != self.channels.len() || b.valley.len() != self.channels.len() {
                return Err(Error::Spectrum("block channel count mismatch".into()));
            }
            if b.count <= 0.0 {
                return Err(Error::Spectrum("block count must be positive".into()));
            }
        }
        Ok(())
    }

    /// Total cycle count over all blocks.
    pub fn total_cycles(&self) -> f64 {
        self.blocks.iter().map(|b| b.count).sum()
    }
}

/// Counts cycles on the designated master channel; companion channels
/// contribute their values at the master's turning instants.
pub fn count_cycles(
    channels: &[LoadChannel],
    master: usize,
    reference_force: f64,
    flight_hours_per_pass: f64,
) -> Result<Spectrum> {
    if channels.is_empty() {
        return Err(Error::Spectrum("no channels".into()));
    }
    if master >= channels.len() {
        return Err(Error::Spectrum(format!(
            "master channel index {master} out of range"
        )));
    }
    let n = channels[0].samples.len();
    for ch in channels {
        ch.validate()?;
        if ch.samples.len() != n {
            return Err(Error::Spectrum(format!(
                "channel '{}' sample count differs from master",
                ch.id
            )));
        }
    }
    let master_series: Vec<f64> = channels[master].samples.iter().map(|s| s.1).collect();
    let cycles = rainflow(&master_series);
    let mut blocks = Vec::with_capacity(cycles.len());
    for cyc in cycles {
        let (peak_idx, valley_idx) = if master_series[cyc.from] >= master_series[cyc.to] {
            (cyc.from, cyc.to)
        } else {
            (cyc.to, cyc.from)
        };
        let mut peak = Vec::with_capacity(channels.len());
        let mut valley = Vec::with_capacity(channels.len());
        for ch in channels {
            let a = ch.samples[peak_idx].1;
            let b = ch.samples[valley_idx].1;
            peak.push(a.max(b));
            valley.push(a.min(b));
        }
        let mp = master_series[peak_idx];
        let mv = master_series[valley_idx];
        // IEEE semantics: a zero master peak with a nonzero valley yields
        // an infinite ratio, which still round-trips the pair.
        let r = mv / mp;
        blocks.push(CycleBlock {
            peak,
            valley,
            count: cyc.count,
            r,
        });
    }
    Ok(Spectrum {
        channels: channels
            .iter()
            .map(|c| ChannelMeta {
                id: c.id.clone(),
                node_set: c.node_set.clone(),
                direction: c.direction,
            })
            .collect(),
        blocks,
        reference_force,
        flight_hours_per_pass,
    })
}

/// Merges blocks whose per-channel peaks and valleys agree within
/// `tolerance`; counts are summed, so the total cycle count is conserved.
pub fn merge_cycles(spectrum: &Spectrum, tolerance: f64) -> Result<Spectrum> {
    if tolerance < 0.0 {
        return Err(Error::Spectrum("merge tolerance must be >= 0".into()));
    }
    let close = |a: &[f64], b: &[f64]| -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tolerance)
    };
    let mut merged: Vec<CycleBlock> = Vec::new();
    for b in &spectrum.blocks {
        match merged
            .iter_mut()
            .find(|m| close(&m.peak, &b.peak) && close(&m.valley, &b.valley))
        {
            Some(m) => m.count += b.count,
            None => merged.push(b.clone()),
        }
    }
    Ok(Spectrum {
        channels: spectrum.channels.clone(),
        blocks: merged,
        reference_force: spectrum.reference_force,
        flight_hours_per_pass: spectrum.flight_hours_per_pass,
    })
}

/// Quasi-static load case for one block: per channel, the extreme-magnitude
/// coefficient with its sign, scaled by the reference force. The block's
/// peak/valley factor vectors ride along for per-point stress-ratio
/// evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    /// Per-channel signed extreme coefficient (the held quasi-static load).
    pub case_factors: Vec<f64>,
    pub peak_factors: Vec<f64>,
    pub valley_factors: Vec<f64>,
    /// Master-channel stress ratio of the block.
    pub r: f64,
    pub count: f64,
}

impl LoadCase {
    /// Applied force (N) on channel `i` under the held case.
    pub fn force(&self, spectrum: &Spectrum, i: usize) -> f64 {
        spectrum.reference_force * self.case_factors[i]
    }
}

/// One load case per block, in block order.
pub fn quasi_static_cases(spectrum: &Spectrum) -> Vec<LoadCase> {
    spectrum
        .blocks
        .iter()
        .map(|b| {
            let case_factors = b
                .peak
                .iter()
                .zip(&b.valley)
                .map(|(&p, &v)| if p.abs() >= v.abs() { p } else { v })
                .collect();
            LoadCase {
                case_factors,
                peak_factors: b.peak.clone(),
                valley_factors: b.valley.clone(),
                r: b.r,
                count: b.count,
            }
        })
        .collect()
}

//! Sequence synthesis and noisy simulation for standard and interleaved
//! randomized benchmarking.
//!
//! A standard sequence of length `m` is `m` uniformly random Cliffords
//! followed by the Clifford that inverts their product. An interleaved
//! sequence places the target gate after every random gate, so it holds
//! `2m + 1` gates; `m` always counts random gates only.
//!
//! Noise placement per step:
//!
//! ```text
//! standard:     Λ_i ∘ C_i
//! interleaved:  C ∘ Λ_C ∘ Λ_i ∘ C_i
//! recovery:     Λ_{m+1} ∘ C_{m+1}
//! ```

use std::borrow::Cow;
use std::fmt;
use std::io::{Read, Write};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{self, CliffordElement};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::pauli::{SuperOperator, MAX_DENSE_QUBITS};

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Standard,
    Interleaved(CliffordElement),
}

impl Mode {
    pub fn tag(&self) -> ModeTag {
        match self {
            Mode::Standard => ModeTag::Standard,
            Mode::Interleaved(_) => ModeTag::Interleaved,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeTag {
    Standard,
    Interleaved,
}

impl fmt::Display for ModeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeTag::Standard => "standard",
            ModeTag::Interleaved => "interleaved",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    /// Sequence lengths `m`, strictly increasing, each at least 1.
    pub lengths: Vec<u64>,
    /// Sequences per length (`K`).
    pub sequences: usize,
    pub mode: Mode,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Keep every per-sequence survival (needed for bootstrapping).
    pub retain_raw: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::InvalidConfig("no sequence lengths".into()));
        }
        if self.lengths[0] < 1 {
            return Err(Error::InvalidConfig("sequence lengths must be >= 1".into()));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sequence lengths must be strictly increasing".into(),
            ));
        }
        if self.sequences < 1 {
            return Err(Error::InvalidConfig("need at least one sequence per length".into()));
        }
        if self.noise.qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: self.noise.qubits(),
            });
        }
        if let Mode::Interleaved(target) = &self.mode {
            if target.qubits() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: target.qubits(),
                });
            }
        }
        check_dense(self.n)
    }
}

fn check_dense(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "channel simulation is limited to 3 qubits",
        });
    }
    Ok(())
}

fn check_length(m: u64) -> Result<()> {
    if m < 1 {
        return Err(Error::InvalidConfig("sequence length must be >= 1".into()));
    }
    Ok(())
}

/// `m` random Cliffords followed by the inverse of their product.
pub fn generate_standard_sequence<R: Rng + ?Sized>(
    m: u64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<CliffordElement>> {
    check_length(m)?;
    let mut gates = Vec::with_capacity(m as usize + 1);
    let mut total = CliffordElement::identity(n);
    for _ in 0..m {
        let c = clifford::sample_uniform(n, rng)?;
        total = c.compose(&total)?;
        gates.push(c);
    }
    gates.push(total.inverse());
    Ok(gates)
}

/// `c_1, C, c_2, C, …, c_m, C` followed by the inverse of the whole product.
pub fn generate_interleaved_sequence<R: Rng + ?Sized>(
    m: u64,
    target: &CliffordElement,
    n: usize,
    rng: &mut R,
) -> Result<Vec<CliffordElement>> {
    check_length(m)?;
    if target.qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: target.qubits(),
        });
    }
    let mut gates = Vec::with_capacity(2 * m as usize + 1);
    let mut total = CliffordElement::identity(n);
    for _ in 0..m {
        let c = clifford::sample_uniform(n, rng)?;
        total = target.compose(&c.compose(&total)?)?;
        gates.push(c);
        gates.push(target.clone());
    }
    gates.push(total.inverse());
    Ok(gates)
}

/// Composes a gate list (first gate acts first) into one Clifford.
pub fn compose_sequence(gates: &[CliffordElement]) -> Result<CliffordElement> {
    let n = gates
        .first()
        .map(|g| g.qubits())
        .ok_or_else(|| Error::InvalidConfig("empty sequence".into()))?;
    gates
        .iter()
        .try_fold(CliffordElement::identity(n), |acc, g| g.compose(&acc))
}

fn gate_superoperator(c: &CliffordElement) -> Result<Cow<'static, SuperOperator>> {
    if let Ok(g) = clifford::group(c.qubits()) {
        if let Some(i) = g.index_of(c) {
            return Ok(Cow::Borrowed(&g.superoperators()[i]));
        }
    }
    Ok(Cow::Owned(c.to_superoperator()?))
}

/// Survival probability `Tr[Eψ S(ρψ)]` of one gate sequence.
///
/// In interleaved mode `gates` alternates random gate and target as produced
/// by [`generate_interleaved_sequence`]; the target carries `Λ_C` ahead of its
/// ideal action and no gate error of its own.
pub fn simulate_sequence(gates: &[CliffordElement], noise: &NoiseModel, interleaved: bool) -> Result<f64> {
    let n = noise.qubits();
    check_dense(n)?;
    if gates.is_empty() {
        return Err(Error::InvalidConfig("empty sequence".into()));
    }
    if interleaved && gates.len().is_multiple_of(2) {
        return Err(Error::InvalidConfig(
            "interleaved sequences have an odd number of gates".into(),
        ));
    }
    let mut state: DVector<f64> = noise.prep().coefficients().clone();
    let mut scratch = DVector::zeros(state.len());
    let last = gates.len() - 1;
    for (i, gate) in gates.iter().enumerate() {
        if gate.qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: gate.qubits(),
            });
        }
        let ideal = gate_superoperator(gate)?;
        let is_target = interleaved && i != last && i % 2 == 1;
        if is_target {
            noise.interleaved_error().apply_in_place(&mut state, &mut scratch);
            ideal.apply_in_place(&mut state, &mut scratch);
        } else {
            ideal.apply_in_place(&mut state, &mut scratch);
            noise.gate_error(gate).apply_in_place(&mut state, &mut scratch);
        }
    }
    Ok(noise.meas().coefficients().dot(&state))
}

/// One averaged point of a decay curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub m: u64,
    pub mean: f64,
    /// Sample standard deviation over sequences divided by `sqrt(K)`.
    pub stderr: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDataset {
    pub mode: ModeTag,
    pub points: Vec<DecayPoint>,
    /// Per-sequence survivals, `raw[i]` belonging to `points[i]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<Vec<f64>>>,
}

/// Neumaier-compensated sum in slice order.
pub(crate) fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = compensated_sum(values) / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let squares: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = compensated_sum(&squares) / (k - 1.0);
    (mean, (var / k).sqrt())
}

impl DecayDataset {
    /// Builds averaged points from per-sequence survivals.
    pub fn from_raw(mode: ModeTag, lengths: &[u64], raw: Vec<Vec<f64>>, retain_raw: bool) -> Self {
        let points = lengths
            .iter()
            .zip(&raw)
            .map(|(&m, values)| {
                let (mean, stderr) = mean_and_stderr(values);
                DecayPoint {
                    m,
                    mean,
                    stderr,
                    k: values.len(),
                }
            })
            .collect();
        Self {
            mode,
            points,
            raw: retain_raw.then_some(raw),
        }
    }

    pub fn lengths(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.m).collect()
    }

    /// Writes the `m,mean,stderr,K,mode` CSV form (LF line endings).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(CSV_HEADER).map_err(csv_error)?;
        for p in &self.points {
            w.write_record([
                p.m.to_string(),
                p.mean.to_string(),
                p.stderr.to_string(),
                p.k.to_string(),
                self.mode.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads the CSV form. Errors carry the offending line number.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers().map_err(csv_error)?.clone();
        if header.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::Parse(format!(
                "line 1: expected header '{}', found '{}'",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut points = Vec::new();
        let mut mode = None;
        for row in r.records() {
            let row = row.map_err(csv_error)?;
            let line = row.position().map_or(0, |p| p.line());
            let bad = |what: &str| Error::Parse(format!("line {line}: {what}"));
            let (point, row_mode): (DecayPoint, ModeTag) = (|| -> Option<_> {
                let m = row.get(0)?.parse().ok()?;
                let mean: f64 = row.get(1)?.parse().ok()?;
                let stderr: f64 = row.get(2)?.parse().ok()?;
                let k = row.get(3)?.parse().ok()?;
                let mode = match row.get(4)? {
                    "standard" => ModeTag::Standard,
                    "interleaved" => ModeTag::Interleaved,
                    _ => return None,
                };
                Some((DecayPoint { m, mean, stderr, k }, mode))
            })()
            .ok_or_else(|| bad("malformed row"))?;
            if !point.mean.is_finite() || !point.stderr.is_finite() || point.stderr < 0.0 {
                return Err(bad("mean and stderr must be finite, stderr >= 0"));
            }
            if point.k < 1 {
                return Err(bad("K must be >= 1"));
            }
            if *mode.get_or_insert(row_mode) != row_mode {
                return Err(bad("mixed modes in one file"));
            }
            points.push(point);
        }
        let mode = mode.ok_or_else(|| Error::Parse("no data rows".into()))?;
        Ok(Self {
            mode,
            points,
            raw: None,
        })
    }
}

const CSV_HEADER: [&str; 5] = ["m", "mean", "stderr", "K", "mode"];

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::Parse(format!("line {}: {e}", pos.line())),
        None => Error::Parse(e.to_string()),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the RNG stream for sequence `k` at length `m`.
pub fn cell_seed(master: u64, m: u64, k: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ m) ^ k)
}

/// Generates and simulates `K` sequences per length.
///
/// Each (m, k) cell draws from its own seeded stream and results are
/// aggregated in cell order, so the output does not depend on how rayon
/// schedules the work.
pub fn run_experiment(config: &ExperimentConfig) -> Result<DecayDataset> {
    config.validate()?;
    let k = config.sequences;
    let cells: Vec<(u64, u64)> = config
        .lengths
        .iter()
        .flat_map(|&m| (0..k as u64).map(move |j| (m, j)))
        .collect();
    let survivals = cells
        .par_iter()
        .map(|&(m, j)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(config.seed, m, j));
            match &config.mode {
                Mode::Standard => {
                    let gates = generate_standard_sequence(m, config.n, &mut rng)?;
                    simulate_sequence(&gates, &config.noise, false)
                }
                Mode::Interleaved(target) => {
                    let gates = generate_interleaved_sequence(m, target, config.n, &mut rng)?;
                    simulate_sequence(&gates, &config.noise, true)
                }
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let raw: Vec<Vec<f64>> = survivals.chunks(k).map(<[f64]>::to_vec).collect();
    Ok(DecayDataset::from_raw(
        config.mode.tag(),
        &config.lengths,
        raw,
        config.retain_raw,
    ))
}

/// Runs on a dedicated pool with the given worker count.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: usize) -> Result<DecayDataset> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(config))
}

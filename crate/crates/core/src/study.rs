//! Run configuration files and the workflows built on them.
//!
//! A [`SimulationConfig`] describes one standard run plus any number of
//! interleaved targets sharing the same noise model. [`simulate`] turns it into
//! datasets, [`analyze`] turns a standard/interleaved pair into a
//! [`GateErrorReport`], and [`miscalibration_study`] sweeps an intentional
//! over-rotation of the target gate.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clifford::{self, CliffordElement};
use crate::error::{Error, Result};
use crate::estimate::{theoretical_overrotation_error, GateErrorReport, NoiseClass, SummaryRow};
use crate::fit::{bootstrap_uncertainty, fit, BootstrapSummary, Estimate, FitModel, FitResult};
use crate::gates::Axis;
use crate::noise::{gamma_variation, overrotation, spam_pair, GammaDiagnostic, NoiseModel, NoiseSpec};
use crate::pauli::PauliVector;
use crate::protocol::{
    cell_seed, run_experiment, run_experiment_with_threads, DecayDataset, ExperimentConfig, Mode,
};

fn default_true() -> bool {
    true
}

/// Top-level JSON configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub qubits: usize,
    pub lengths: Vec<u64>,
    /// Sequences per length.
    pub sequences: usize,
    #[serde(default)]
    pub seed: u64,
    /// Run the standard (non-interleaved) experiment.
    #[serde(default = "default_true")]
    pub standard: bool,
    #[serde(default)]
    pub retain_raw: bool,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub interleaved: Vec<InterleavedTarget>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Error after every random gate unless overridden.
    #[serde(default)]
    pub gate: NoiseSpec,
    #[serde(default)]
    pub overrides: Vec<GateOverride>,
    /// Error applied to the ideal prepared state.
    #[serde(default)]
    pub prep: NoiseSpec,
    /// Error applied ahead of the ideal measurement.
    #[serde(default)]
    pub meas: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateOverride {
    /// Gate name or tableau text.
    pub gate: String,
    pub channel: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterleavedTarget {
    /// Output name; defaults to the gate string.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub gate: String,
    /// Error of the target gate itself (`Λ_C`).
    #[serde(default)]
    pub error: NoiseSpec,
}

impl InterleavedTarget {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.gate)
    }
}

/// One experiment to run, with the name used for its output files.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub name: String,
    pub label: Option<String>,
    pub target: Option<String>,
    pub config: ExperimentConfig,
}

/// Seed of the `index`-th dataset of a run; index 0 keeps the master seed.
pub fn dataset_seed(master: u64, index: u64) -> u64 {
    if index == 0 {
        master
    } else {
        cell_seed(master, u64::MAX, index)
    }
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Noise model of the random gates and SPAM, without any target error.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        let n = self.qubits;
        let mut model = NoiseModel::uniform(self.noise.gate.build(n)?)?;
        for o in &self.noise.overrides {
            let gate = CliffordElement::parse_gate(&o.gate, n)?;
            model = model.with_gate_error(gate, o.channel.build(n)?)?;
        }
        let ideal = PauliVector::ground_state(n);
        let (prep, meas) = spam_pair(
            &self.noise.prep.build(n)?,
            &self.noise.meas.build(n)?,
            &ideal,
            &ideal,
        )?;
        model.with_spam(prep, meas)
    }

    /// Every experiment the configuration asks for, in output order.
    pub fn plan(&self) -> Result<Vec<PlannedRun>> {
        let base = self.noise_model()?;
        let experiment = |mode: Mode, noise: NoiseModel, index: u64| ExperimentConfig {
            n: self.qubits,
            lengths: self.lengths.clone(),
            sequences: self.sequences,
            mode,
            noise,
            seed: dataset_seed(self.seed, index),
            retain_raw: self.retain_raw,
        };
        let mut runs = Vec::new();
        if self.standard {
            runs.push(PlannedRun {
                name: "standard".into(),
                label: None,
                target: None,
                config: experiment(Mode::Standard, base.clone(), 0),
            });
        }
        let mut names = HashSet::new();
        for (i, t) in self.interleaved.iter().enumerate() {
            let name = format!("interleaved-{}", file_stem(t.label()));
            if !names.insert(name.clone()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate interleaved label '{}'",
                    t.label()
                )));
            }
            let target = CliffordElement::parse_gate(&t.gate, self.qubits)?;
            let noise = base.clone().with_interleaved_error(t.error.build(self.qubits)?)?;
            runs.push(PlannedRun {
                name,
                label: Some(t.label().to_string()),
                target: Some(t.gate.clone()),
                config: experiment(Mode::Interleaved(target), noise, i as u64 + 1),
            });
        }
        if runs.is_empty() {
            return Err(Error::InvalidConfig("nothing to run".into()));
        }
        for run in &runs {
            run.config.validate()?;
        }
        Ok(runs)
    }

    /// Advisory γ of the random-gate noise; `None` above two qubits.
    pub fn gamma(&self) -> Result<Option<GammaDiagnostic>> {
        if self.qubits > 2 {
            return Ok(None);
        }
        let group = clifford::group(self.qubits)?;
        Ok(Some(gamma_variation(&self.noise_model()?, group.elements())))
    }
}

fn execute(config: &ExperimentConfig, threads: Option<usize>) -> Result<DecayDataset> {
    match threads {
        Some(t) => run_experiment_with_threads(config, t),
        None => run_experiment(config),
    }
}

/// A simulated dataset with the metadata written next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub seed: u64,
    pub config: SimulationConfig,
    pub dataset: DecayDataset,
}

pub fn simulate(config: &SimulationConfig, threads: Option<usize>) -> Result<Vec<DatasetFile>> {
    config
        .plan()?
        .into_iter()
        .map(|run| {
            Ok(DatasetFile {
                dataset: execute(&run.config, threads)?,
                name: run.name,
                label: run.label,
                target: run.target,
                seed: run.config.seed,
                config: config.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    pub config: SimulationConfig,
    /// Output files relative to the manifest's directory.
    pub outputs: Vec<String>,
    /// Advisory: γ² < 2/(m(m+1)) marks where the zeroth-order model is expected to hold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaDiagnostic>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Simulates every planned dataset and writes `<name>.csv`, `<name>.json`
/// and `manifest.json` into `dir`.
pub fn simulate_to_dir(
    config: &SimulationConfig,
    dir: &Path,
    threads: Option<usize>,
) -> Result<RunManifest> {
    let started = now();
    let files = simulate(config, threads)?;
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut outputs = Vec::new();
    for file in &files {
        let csv = format!("{}.csv", file.name);
        write_file(&dir.join(&csv), file.dataset.to_csv_string().as_bytes())?;
        let json = format!("{}.json", file.name);
        let text = serde_json::to_string_pretty(file).expect("dataset serializes") + "\n";
        write_file(&dir.join(&json), text.as_bytes())?;
        outputs.push(csv);
        outputs.push(json);
    }
    let manifest = RunManifest {
        tool: "irb".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        started,
        finished: now(),
        config: config.clone(),
        outputs,
        gamma: config.gamma()?,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}

/// Reads a dataset from CSV, a dataset JSON file, or a bare dataset JSON.
pub fn load_dataset(path: &Path) -> Result<DecayDataset> {
    let open = || fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())));
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if !is_json {
        return DecayDataset::read_csv(open()?)
            .map_err(|e| Error::Parse(format!("{}: {}", path.display(), strip_parse(e))));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if let Ok(file) = serde_json::from_str::<DatasetFile>(&text) {
        return Ok(file.dataset);
    }
    serde_json::from_str::<DecayDataset>(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn strip_parse(e: Error) -> String {
    match e {
        Error::Parse(msg) => msg,
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub model: FitModel,
    pub noise_class: NoiseClass,
    /// Bootstrap resamples; uses covariance uncertainties when absent.
    pub bootstrap: Option<usize>,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            model: FitModel::Zeroth,
            noise_class: NoiseClass::General,
            bootstrap: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub standard_fit: FitResult,
    pub interleaved_fit: FitResult,
    pub report: GateErrorReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard_bootstrap: Option<BootstrapSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interleaved_bootstrap: Option<BootstrapSummary>,
}

fn decay_estimate(
    data: &DecayDataset,
    options: &AnalysisOptions,
    salt: u64,
) -> Result<(FitResult, Option<BootstrapSummary>)> {
    let mut result = fit(data, options.model)?;
    let Some(resamples) = options.bootstrap else {
        return Ok((result, None));
    };
    let summary = bootstrap_uncertainty(data, options.model, resamples, dataset_seed(options.seed, salt))?;
    result.p.stderr = summary.p.stderr;
    result.a.stderr = summary.a.stderr;
    result.b.stderr = summary.b.stderr;
    if let (Some(c), Some(spread)) = (result.c.as_mut(), summary.c) {
        c.stderr = spread.stderr;
    }
    result.uncertainty_method = format!("bootstrap ({resamples} resamples)");
    Ok((result, Some(summary)))
}

/// Fits both decays and combines them into a gate-error report.
pub fn analyze(
    standard: &DecayDataset,
    interleaved: &DecayDataset,
    qubits: usize,
    options: &AnalysisOptions,
) -> Result<Analysis> {
    let (standard_fit, standard_bootstrap) = decay_estimate(standard, options, 1)?;
    let (interleaved_fit, interleaved_bootstrap) = decay_estimate(interleaved, options, 2)?;
    let report = GateErrorReport::new(
        standard_fit.p,
        interleaved_fit.p,
        1usize << qubits,
        options.noise_class,
    )?;
    Ok(Analysis {
        standard_fit,
        interleaved_fit,
        report,
        standard_bootstrap,
        interleaved_bootstrap,
    })
}

/// Fitted curve on every integer `m` up to the longest length, with the
/// measured points alongside. Columns: `m,fit,mean,stderr`.
pub fn curve_csv(fit: &FitResult, data: &DecayDataset) -> String {
    let max_m = data.points.iter().map(|p| p.m).max().unwrap_or(0);
    let mut out = String::from("m,fit,mean,stderr\n");
    for m in 1..=max_m {
        let _ = write!(out, "{m},{}", fit.evaluate(m as f64));
        match data.points.iter().find(|p| p.m == m) {
            Some(p) => {
                let _ = writeln!(out, ",{},{}", p.mean, p.stderr);
            }
            None => out.push_str(",,\n"),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiscalibrationRow {
    pub epsilon: f64,
    pub r_th: f64,
    pub interleaved_fit: FitResult,
    pub report: GateErrorReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiscalibrationStudy {
    pub target: String,
    pub standard_fit: FitResult,
    pub rows: Vec<MiscalibrationRow>,
}

impl MiscalibrationStudy {
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.rows
            .iter()
            .map(|row| SummaryRow {
                label: self.target.clone(),
                epsilon: Some(row.epsilon),
                r_th: Some(row.r_th),
                report: row.report.clone(),
            })
            .collect()
    }
}

/// Interleaved runs of `target` whose error is `overrotation(X, ε)` composed
/// after the target's baseline error from `config`, one per `ε`.
///
/// The standard run is shared by every row; row `i` uses dataset seed `i + 1`.
pub fn miscalibration_study(
    config: &SimulationConfig,
    target: &str,
    epsilons: &[f64],
    options: &AnalysisOptions,
    threads: Option<usize>,
) -> Result<MiscalibrationStudy> {
    if config.qubits != 1 {
        return Err(Error::UnsupportedDimension {
            n: config.qubits,
            reason: "the miscalibration study over-rotates a single qubit",
        });
    }
    if epsilons.is_empty() {
        return Err(Error::InvalidConfig("no over-rotation angles".into()));
    }
    let gate = CliffordElement::parse_gate(target, 1)?;
    let base = config.noise_model()?;
    let baseline = base.gate_error(&gate).clone();
    let experiment = |mode: Mode, noise: NoiseModel, index: u64| ExperimentConfig {
        n: 1,
        lengths: config.lengths.clone(),
        sequences: config.sequences,
        mode,
        noise,
        seed: dataset_seed(config.seed, index),
        retain_raw: config.retain_raw || options.bootstrap.is_some(),
    };
    let standard = execute(&experiment(Mode::Standard, base.clone(), 0), threads)?;
    let (standard_fit, _) = decay_estimate(&standard, options, 1)?;
    let rows = epsilons
        .iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let error = overrotation(Axis::X, epsilon).compose(&baseline)?;
            let noise = base.clone().with_interleaved_error(error)?;
            let run = experiment(Mode::Interleaved(gate.clone()), noise, i as u64 + 1);
            let data = execute(&run, threads)?;
            let (interleaved_fit, _) = decay_estimate(&data, options, i as u64 + 2)?;
            let report = GateErrorReport::new(standard_fit.p, interleaved_fit.p, 2, options.noise_class)?;
            Ok(MiscalibrationRow {
                epsilon,
                r_th: theoretical_overrotation_error(epsilon),
                interleaved_fit,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MiscalibrationStudy {
        target: target.to_string(),
        standard_fit,
        rows,
    })
}

/// Report for directly supplied decay parameters.
pub fn estimate_from_parameters(
    p: Estimate,
    p_interleaved: Estimate,
    qubits: usize,
    class: NoiseClass,
) -> Result<GateErrorReport> {
    GateErrorReport::new(p, p_interleaved, 1usize << qubits, class)
}

/// Path of a dataset output inside `dir`.
pub fn output_path(dir: &Path, name: &str, extension: &str) -> PathBuf {
    dir.join(format!("{name}.{extension}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> SimulationConfig {
        SimulationConfig::from_json(
            r#"{
                "qubits": 1,
                "lengths": [1, 4, 16],
                "sequences": 8,
                "seed": 11,
                "noise": { "gate": { "type": "depolarizing", "p": 0.98 } }
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = minimal();
        assert!(c.standard);
        assert!(!c.retain_raw);
        assert!(c.interleaved.is_empty());
        assert_eq!(c.noise.prep, NoiseSpec::Identity);
        assert_eq!(c.plan().unwrap().len(), 1);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = SimulationConfig::from_json(r#"{"qubits":1,"lengths":[1],"sequences":1,"sead":3}"#);
        assert!(matches!(err, Err(Error::Parse(_))));
    }

    #[test]
    fn config_echo_round_trips() {
        let mut c = minimal();
        c.interleaved.push(InterleavedTarget {
            label: None,
            gate: "X90".into(),
            error: NoiseSpec::Overrotation {
                axis: Axis::X,
                epsilon: 0.1,
            },
        });
        c.noise.overrides.push(GateOverride {
            gate: "H".into(),
            channel: NoiseSpec::Depolarizing { p: 0.9 },
        });
        let echoed = SimulationConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(echoed, c);
        assert_eq!(echoed.plan().unwrap(), c.plan().unwrap());
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut c = minimal();
        for _ in 0..2 {
            c.interleaved.push(InterleavedTarget {
                label: Some("a".into()),
                gate: "X".into(),
                error: NoiseSpec::Identity,
            });
        }
        assert!(matches!(c.plan(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn datasets_use_distinct_seeds() {
        let mut c = minimal();
        c.interleaved.push(InterleavedTarget {
            label: None,
            gate: "X90".into(),
            error: NoiseSpec::Identity,
        });
        let plan = c.plan().unwrap();
        assert_eq!(plan[0].config.seed, 11);
        assert_ne!(plan[1].config.seed, 11);
        assert_eq!(plan[1].name, "interleaved-X90");
    }

    #[test]
    fn curve_has_every_length() {
        let c = minimal();
        let data = &simulate(&c, Some(2)).unwrap()[0].dataset;
        let f = fit(data, FitModel::Zeroth).unwrap();
        let csv = curve_csv(&f, data);
        assert_eq!(csv.lines().count(), 17);
        assert!(csv.lines().nth(1).unwrap().starts_with("1,"));
        assert!(csv.lines().nth(2).unwrap().ends_with(",,"));
    }
}

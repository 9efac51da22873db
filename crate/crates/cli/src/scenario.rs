//! Running configured scenarios and writing their artifacts.

use std::path::{Path, PathBuf};

use halfwave::diagnostics::{compare_samples, energy_drift, EnergyDrift, TraceComparison};
use halfwave::{Format, RunOutput, RunSpec, SumVariant, UpdateMode};
use serde_json::{json, Value};

use crate::audit::{range_audit, AuditReport};
use crate::config::{RawConfig, SimConfig};
use crate::output::{energy_csv, plot_dat, trace_times, traces_csv, write_file};
use crate::CliError;

/// Environment variable that replaces the configured output directory.
pub const OUT_ENV: &str = "HALFWAVE_OUT";

/// Distances of a run from a reference run of the same scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub reference: String,
    pub final_energy_rel: f64,
    /// Largest `|E - E_ref|` over the history, relative to the largest `|E_ref|`.
    pub energy_history_rel: f64,
    pub traces: Vec<(String, TraceComparison)>,
}

impl Comparison {
    pub fn new(reference: &str, run: &RunOutput, baseline: &RunOutput) -> Result<Self, CliError> {
        let (e, r) = (&run.energy.values, &baseline.energy.values);
        let (last, ref_last) = (e.last().copied().unwrap_or(0.0), r.last().copied().unwrap_or(0.0));
        let ref_max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = e.iter().zip(r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let traces = run
            .traces
            .iter()
            .zip(&baseline.traces)
            .map(|(a, b)| Ok((a.label(), compare_samples(&a.samples, &b.samples)?)))
            .collect::<Result<_, halfwave::diagnostics::DiagnosticsError>>()
            .map_err(|e| CliError::Value { key: "compare".into(), message: e.to_string() })?;
        Ok(Comparison {
            reference: reference.to_string(),
            final_energy_rel: if ref_last != 0.0 { (last - ref_last).abs() / ref_last.abs() } else { 0.0 },
            energy_history_rel: if ref_max > 0.0 { worst / ref_max } else { 0.0 },
            traces,
        })
    }

    /// Relative L2 distance of the first trace of `field`.
    pub fn trace_l2(&self, field: &str) -> Option<f64> {
        self.traces.iter().find(|(l, _)| l.split('_').next() == Some(field)).map(|(_, c)| c.l2_rel)
    }

    fn to_json(&self) -> Value {
        let traces: serde_json::Map<String, Value> = self
            .traces
            .iter()
            .map(|(l, c)| {
                (
                    l.clone(),
                    json!({"l2_rel": num(c.l2_rel), "linf_rel": num(c.linf_rel), "correlation": num(c.lag0_correlation)}),
                )
            })
            .collect();
        json!({
            "reference": self.reference,
            "final_energy_rel_diff": num(self.final_energy_rel),
            "energy_history_rel_diff": num(self.energy_history_rel),
            "traces": traces,
        })
    }
}

/// JSON has no infinities or NaN; those become `null`.
fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub label: String,
    pub spec: RunSpec,
    pub output: RunOutput,
    pub drift: Option<EnergyDrift>,
    pub comparison: Option<Comparison>,
    pub dir: PathBuf,
}

impl ScenarioResult {
    pub fn final_energy(&self) -> f64 {
        self.output.energy.last().unwrap_or(0.0)
    }

    fn summary(&self, audit: &AuditReport) -> Value {
        let spec = &self.spec;
        let drift = self.drift.map(|d| {
            json!({
                "window_start": num(spec.source_off_time()),
                "rel_deviation": num(d.rel_deviation),
                "trend_slope": num(d.trend_slope),
                "mean": num(d.mean),
                "samples": d.samples,
            })
        });
        json!({
            "scenario": self.label,
            "equation": spec.equation.to_string(),
            "stencil_precision": spec.stencil_precision.name(),
            "update_precision": spec.update_precision.name(),
            "mode": spec.mode.to_string(),
            "grid": {
                "nx": spec.grid.nx, "ny": spec.grid.ny, "dx": num(spec.grid.dx), "dt": num(spec.grid.dt),
                "nt": spec.grid.nt, "cfl": num(spec.grid.cfl(spec.medium.max_speed())),
            },
            "receivers": spec.receivers.iter().map(|&(i, j)| json!([i, j])).collect::<Vec<_>>(),
            "steps": self.output.steps,
            "energy_samples": self.output.energy.len(),
            "initial_energy": num(self.output.energy.values.first().copied().unwrap_or(0.0)),
            "final_energy": num(self.final_energy()),
            "energy_drift": drift,
            "audit_warnings": audit.problems().map(|e| e.item.clone()).collect::<Vec<_>>(),
            "comparison": self.comparison.as_ref().map(Comparison::to_json),
        })
    }
}

/// Output directory for a scenario, honouring [`OUT_ENV`].
pub fn output_dir(config: &SimConfig) -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| config.output_dir.clone())
}

fn simulate(spec: &RunSpec) -> Result<RunOutput, CliError> {
    let out = halfwave::run(spec)?;
    if out.energy.any_flagged() {
        let t = out.energy.times[out.energy.flags.iter().position(|&f| f).unwrap_or(0)];
        return Err(CliError::NonFiniteEnergy(t));
    }
    Ok(out)
}

fn drift_of(spec: &RunSpec, out: &RunOutput) -> Option<EnergyDrift> {
    energy_drift(&out.energy, spec.source_off_time()).ok()
}

/// Audits, runs and writes one scenario into `dir`. A reference run (given,
/// or requested by the config) adds comparison metrics.
pub fn run_scenario(config: &SimConfig, dir: &Path, reference: Option<(&str, &RunOutput)>) -> Result<ScenarioResult, CliError> {
    let spec = config.materialize()?;
    let audit = range_audit(&spec);
    if audit.has_errors() {
        return Err(CliError::Range(audit));
    }
    let output = simulate(&spec)?;
    let comparison = match (reference, config.reference) {
        (Some((name, r)), _) => Some(Comparison::new(name, &output, r)?),
        (None, Some(format)) => {
            let ref_spec = RunSpec {
                stencil_precision: format,
                update_precision: format,
                mode: UpdateMode::Baseline,
                ..spec.clone()
            };
            let r = simulate(&ref_spec)?;
            Some(Comparison::new(&format!("{format}/{format} baseline"), &output, &r)?)
        }
        (None, None) => None,
    };
    let result = ScenarioResult {
        label: config.name.clone(),
        drift: drift_of(&spec, &output),
        spec,
        output,
        comparison,
        dir: dir.to_path_buf(),
    };
    write_artifacts(&result, &audit)?;
    Ok(result)
}

fn write_artifacts(r: &ScenarioResult, audit: &AuditReport) -> Result<(), CliError> {
    let dir = &r.dir;
    if !r.spec.receivers.is_empty() {
        write_file(&dir.join("traces.csv"), &traces_csv(&r.output))?;
    }
    write_file(&dir.join("energy.csv"), &energy_csv(&r.output.energy))?;
    let summary = serde_json::to_string_pretty(&r.summary(audit)).expect("summary is valid JSON") + "\n";
    write_file(&dir.join("summary.json"), &summary)?;
    let plots = dir.join("plots");
    let times = trace_times(&r.output);
    for t in &r.output.traces {
        write_file(&plots.join(format!("trace_{}.dat", t.label())), &plot_dat(&format!("time {}", t.label()), &times, &t.samples))?;
    }
    let e = &r.output.energy;
    write_file(&plots.join("energy.dat"), &plot_dat("time energy", &e.times, &e.values))?;
    Ok(())
}

/// One member of a reproduction suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub name: &'static str,
    pub stencil: Format,
    pub update: Format,
    pub mode: UpdateMode,
}

const fn variant(name: &'static str, stencil: Format, update: Format, mode: UpdateMode) -> Variant {
    Variant { name, stencil, update, mode }
}

const OP3: UpdateMode = UpdateMode::Compensated(SumVariant::Op3);
const OP6: UpdateMode = UpdateMode::Compensated(SumVariant::Op6);

/// The acoustic figures: FP64, FP16 plain and compensated, and the
/// FP64-stencil/FP16-update ablation in both update modes.
pub const ACOUSTIC_VARIANTS: [Variant; 5] = [
    variant("fp64", Format::Fp64, Format::Fp64, UpdateMode::Baseline),
    variant("fp16-baseline", Format::Fp16, Format::Fp16, UpdateMode::Baseline),
    variant("fp16-op3", Format::Fp16, Format::Fp16, OP3),
    variant("fp64s-fp16u-baseline", Format::Fp64, Format::Fp16, UpdateMode::Baseline),
    variant("fp64s-fp16u-op3", Format::Fp64, Format::Fp16, OP3),
];

pub const ELASTIC_VARIANTS: [Variant; 4] = [
    variant("fp64", Format::Fp64, Format::Fp64, UpdateMode::Baseline),
    variant("fp16-baseline", Format::Fp16, Format::Fp16, UpdateMode::Baseline),
    variant("fp16-op6", Format::Fp16, Format::Fp16, OP6),
    variant("fp16-op3", Format::Fp16, Format::Fp16, OP3),
];

pub fn variants_for(preset: &str) -> Result<&'static [Variant], CliError> {
    match preset {
        "paper-acoustic" | "acoustic" => Ok(&ACOUSTIC_VARIANTS),
        "paper-elastic" | "elastic" => Ok(&ELASTIC_VARIANTS),
        other => Err(CliError::UnknownPreset(other.to_string())),
    }
}

/// Fraction of the run shown either side of the reference peak in the zoom-in plots.
const ZOOM_HALF_WIDTH: f64 = 0.05;

/// Runs every variant of a preset under `root/<scenario>/<variant>/` and
/// writes the figure data to `root/<scenario>/plots/`. The first variant
/// (binary64) is the reference for all comparisons.
pub fn repro(preset: &str, desk: bool, root: &Path, mut progress: impl FnMut(&ScenarioResult)) -> Result<Vec<ScenarioResult>, CliError> {
    let variants = variants_for(preset)?;
    let base = SimConfig::from_raw(&RawConfig::preset(preset, desk)?)?;
    let scenario_dir = root.join(&base.name);
    let mut results: Vec<ScenarioResult> = Vec::new();
    for v in variants {
        let config = SimConfig {
            name: format!("{}/{}", base.name, v.name),
            stencil: v.stencil,
            update: v.update,
            mode: v.mode,
            reference: None,
            ..base.clone()
        };
        let reference = results.first().map(|r| (variants[0].name, &r.output));
        let result = run_scenario(&config, &scenario_dir.join(v.name), reference)?;
        progress(&result);
        results.push(result);
    }
    write_figure_data(&scenario_dir.join("plots"), variants, &results)?;
    let summary: Vec<Value> = results
        .iter()
        .zip(variants)
        .map(|(r, v)| {
            json!({
                "variant": v.name,
                "final_energy": num(r.final_energy()),
                "drift_rel_deviation": r.drift.map(|d| num(d.rel_deviation)),
                "drift_trend_slope": r.drift.map(|d| num(d.trend_slope)),
                "comparison": r.comparison.as_ref().map(Comparison::to_json),
            })
        })
        .collect();
    let text = serde_json::to_string_pretty(&json!({"scenario": base.name, "variants": summary})).expect("valid JSON") + "\n";
    write_file(&scenario_dir.join("summary.json"), &text)?;
    Ok(results)
}

fn write_figure_data(plots: &Path, variants: &[Variant], results: &[ScenarioResult]) -> Result<(), CliError> {
    let Some(reference) = results.first() else { return Ok(()) };
    let times = trace_times(&reference.output);
    let half = ((reference.output.steps as f64 * ZOOM_HALF_WIDTH) as usize).max(1);
    for (r, v) in results.iter().zip(variants) {
        for (t, t_ref) in r.output.traces.iter().zip(&reference.output.traces) {
            let label = t.label();
            write_file(
                &plots.join(format!("trace_{label}_{}.dat", v.name)),
                &plot_dat(&format!("time {label} ({})", v.name), &times, &t.samples),
            )?;
            // Zoom window centred on the reference peak, where precision artefacts are easiest to see.
            let peak = t_ref
                .samples
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(k, m), (i, s)| if s.abs() > m { (i, s.abs()) } else { (k, m) })
                .0;
            let (lo, hi) = (peak.saturating_sub(half), (peak + half).min(times.len()));
            write_file(
                &plots.join(format!("zoom_{label}_{}.dat", v.name)),
                &plot_dat(&format!("time {label} ({}) zoom", v.name), &times[lo..hi], &t.samples[lo..hi]),
            )?;
        }
        let e = &r.output.energy;
        write_file(
            &plots.join(format!("energy_{}.dat", v.name)),
            &plot_dat(&format!("time energy ({})", v.name), &e.times, &e.values),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &Path) -> SimConfig {
        let mut raw = RawConfig::preset("paper-acoustic", true).unwrap();
        for o in ["grid.nx=24", "grid.ny=24", "grid.nt=40", "source.ix=8", "source.iy=8", "receivers.points=12:12, 3:20", "source.delay=0.002"] {
            raw.apply_override(o).unwrap();
        }
        raw.set("output.dir", dir.to_str().unwrap()).unwrap();
        SimConfig::from_raw(&raw).unwrap()
    }

    #[test]
    fn writes_all_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let mut config = small_config(tmp.path());
        config.reference = Some(Format::Fp64);
        let r = run_scenario(&config, tmp.path(), None).unwrap();
        for f in ["traces.csv", "energy.csv", "summary.json", "plots/energy.dat", "plots/trace_P_r1.dat"] {
            assert!(tmp.path().join(f).is_file(), "{f}");
        }
        let csv = std::fs::read_to_string(tmp.path().join("traces.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "step,time,P_r0,P_r1,Vx_r0,Vx_r1,Vy_r0,Vy_r1");
        assert_eq!(csv.lines().count(), 41);
        assert!(!csv.contains('\r'));
        let summary: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["comparison"]["reference"], "fp64/fp64 baseline");
        assert!(r.comparison.unwrap().trace_l2("P").unwrap().is_finite());
    }

    #[test]
    fn no_receivers_means_energy_only() {
        let tmp = tempfile::tempdir().unwrap();
        let mut config = small_config(tmp.path());
        config.receivers.clear();
        run_scenario(&config, tmp.path(), None).unwrap();
        assert!(!tmp.path().join("traces.csv").exists());
        assert!(tmp.path().join("energy.csv").is_file());
    }

    #[test]
    fn range_failure_stops_before_running() {
        let tmp = tempfile::tempdir().unwrap();
        let mut config = small_config(tmp.path());
        config.source.as_mut().unwrap().amplitude = 1e6;
        assert!(matches!(run_scenario(&config, tmp.path(), None), Err(CliError::Range(_))));
        assert!(!tmp.path().join("energy.csv").exists());
    }
}

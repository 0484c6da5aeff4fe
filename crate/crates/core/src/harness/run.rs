use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{build_agent, HarnessError, RunConfig, RECORD_FILE};
use crate::audit::{apply_ablation, audit_sentience, AuditResult};
use crate::cps::StepTrace;
use crate::domain::Origin;
use crate::envs::{gen_episode, GroundTruth};
use crate::stats::{auc, mean, trend_slope};

pub const RECORD_VERSION: &str = concat!("sentience ", env!("CARGO_PKG_VERSION"));

/// Window used for end-of-run summaries.
const TAIL: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub steps: usize,
    /// AUC of the combined tag, external vs internally generated signals.
    pub tagger_auc: Option<f64>,
    pub mean_tag_external: Option<f64>,
    pub mean_tag_internal: Option<f64>,
    /// Combined tag of the metrics channel per step.
    pub tag: Vec<f64>,
    /// Max-abs error of the belief about the metrics variable.
    pub reality_error: Vec<f64>,
    pub final_reality_error: Option<f64>,
    /// Error in the believed difference between the first two components.
    pub final_difference_error: Option<f64>,
    /// `(rep[0] - rep[1]) - (latent[0] - latent[1])` of the metrics channel.
    pub percept_bias: Vec<f64>,
    /// Mean percept bias over the last 50 steps.
    pub final_percept_bias: Option<f64>,
    /// Percept-vs-belief conflict of the metrics channel.
    pub conflict: Vec<f64>,
    /// Least-squares slope of the conflict over the last 50 steps.
    pub conflict_trend: Option<f64>,
    pub decision_counts: BTreeMap<String, usize>,
    pub action_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    /// Ablation name, or `none` for the intact agent.
    pub ablation: String,
    pub result: AuditResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub traces: Vec<StepTrace>,
    pub ground_truth: Vec<GroundTruth>,
    pub metrics: RunMetrics,
    pub audits: Vec<AuditRecord>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(s).map_err(|e| HarnessError::ConfigInvalid(format!("bad run record: {e}")))
    }

    /// Verdict of the intact-agent audit, if one ran.
    pub fn audit(&self) -> Option<&AuditResult> {
        self.audits.iter().find(|a| a.ablation == "none").map(|a| &a.result)
    }
}

fn metrics_channel(cfg: &RunConfig) -> &str {
    cfg.metrics.channel.as_deref().unwrap_or(&cfg.agent.channels[0].id)
}

fn tail_mean(xs: &[f64]) -> Option<f64> {
    mean(&xs[xs.len().saturating_sub(TAIL)..])
}

/// Summary metrics from traces and ground truth alone.
pub fn compute_metrics(traces: &[StepTrace], ground_truth: &[GroundTruth], cfg: &RunConfig) -> RunMetrics {
    let channel = metrics_channel(cfg);
    let env_channels = cfg.env_spec().channels();
    let origin_index = env_channels.iter().position(|c| c == channel);

    let (mut external, mut internal, mut tag) = (Vec::new(), Vec::new(), Vec::new());
    let (mut reality_error, mut difference_error) = (Vec::new(), Vec::new());
    let (mut percept_bias, mut conflict) = (Vec::new(), Vec::new());
    let mut decision_counts = BTreeMap::new();
    let mut action_counts = BTreeMap::new();

    for (trace, gt) in traces.iter().zip(ground_truth) {
        *decision_counts.entry(trace.decision.chosen.clone()).or_insert(0) += 1;
        *action_counts.entry(trace.action.clone()).or_insert(0) += 1;
        let latent = &gt.latent;
        if let Some(var) = &cfg.metrics.variable {
            if let Some(b) = trace.beliefs.iter().find(|b| &b.variable == var) {
                if b.mean.len() == latent.len() {
                    let err = b.mean.iter().zip(latent).map(|(m, l)| (m - l).abs()).fold(0.0, f64::max);
                    reality_error.push(err);
                    if latent.len() >= 2 {
                        difference_error.push(((b.mean[0] - b.mean[1]) - (latent[0] - latent[1])).abs());
                    }
                }
            }
        }
        let Some(ch) = trace.channel(channel) else { continue };
        tag.push(ch.combined_tag);
        if !ch.tags.is_empty() {
            match origin_index.and_then(|i| gt.origins.get(i)) {
                Some(Origin::External) => external.push(ch.combined_tag),
                Some(Origin::InternallyGenerated) => internal.push(ch.combined_tag),
                _ => {}
            }
        }
        if ch.rep.len() >= 2 && latent.len() >= 2 {
            percept_bias.push((ch.rep[0] - ch.rep[1]) - (latent[0] - latent[1]));
        }
        if let Some(c) = ch.reality_conflict {
            conflict.push(c);
        }
    }

    RunMetrics {
        steps: traces.len(),
        tagger_auc: auc(&external, &internal),
        mean_tag_external: mean(&external),
        mean_tag_internal: mean(&internal),
        tag,
        final_reality_error: reality_error.last().copied(),
        reality_error,
        final_difference_error: difference_error.last().copied(),
        final_percept_bias: tail_mean(&percept_bias),
        percept_bias,
        conflict_trend: trend_slope(&conflict[conflict.len().saturating_sub(TAIL)..]),
        conflict,
        decision_counts,
        action_counts,
    }
}

/// Runs one config end to end. Pure: no files are touched.
pub fn run(cfg: &RunConfig) -> Result<RunRecord, HarnessError> {
    cfg.validate()?;
    let built = build_agent(cfg)?;
    let episode = gen_episode(&cfg.env_spec())
        .map_err(|e| HarnessError::ComponentFailure { module: "envs", message: e.to_string() })?;

    let mut agent = built.clone();
    let mut traces = Vec::with_capacity(episode.len());
    for frame in &episode.observations {
        let (_, trace) = agent
            .step(frame)
            .map_err(|e| HarnessError::ComponentFailure { module: "cps", message: e.to_string() })?;
        traces.push(trace);
    }

    let mut audits = Vec::new();
    if let Some(section) = &cfg.audit {
        section.params.validate().map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        let audit_err = |e: crate::audit::AuditError| HarnessError::ComponentFailure { module: "audit", message: e.to_string() };
        let result = audit_sentience(&built, &section.channel, &section.params).map_err(audit_err)?;
        audits.push(AuditRecord { ablation: "none".into(), result });
        for ablation in &section.ablations {
            let ablated = apply_ablation(&built, &section.channel, *ablation).map_err(audit_err)?;
            let result = audit_sentience(&ablated, &section.channel, &section.params).map_err(audit_err)?;
            audits.push(AuditRecord { ablation: ablation.name().into(), result });
        }
    }

    let metrics = compute_metrics(&traces, &episode.ground_truth, cfg);
    Ok(RunRecord {
        version: RECORD_VERSION.into(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        traces,
        ground_truth: episode.ground_truth,
        metrics,
        audits,
    })
}

/// Runs a config and writes `<root>/<output_dir>/record.json` plus plots.
pub fn run_and_write(cfg: &RunConfig, root: &Path) -> Result<(PathBuf, RunRecord), HarnessError> {
    let record = run(cfg)?;
    let dir = root.join(cfg.output_dir());
    write_record(&dir, &record)?;
    Ok((dir, record))
}

pub(crate) fn write_record(dir: &Path, record: &RunRecord) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let path = dir.join(RECORD_FILE);
    std::fs::write(&path, record.to_json()).map_err(HarnessError::io(&path))?;
    super::write_plots(dir, record)
}

//! Board experiments: simulate, record to a bag, analyze.

use std::collections::BTreeMap;

use hmas_core::analysis::{self, side_distances, summarize, AnalysisError, DistanceSeries, Report, SummaryOptions};
use hmas_core::bagfmt::{self, BagRecord};
use hmas_core::geo::DEFAULT_FIX_RATE_HZ;
use hmas_core::rig::{ExperimentKind, ExperimentSpec, RigError, CORNER_IDS};
use hmas_core::{GeodeticCoord, QosProfile, QualifiedName, RtkFix};
use serde::{Deserialize, Serialize};

use crate::bag::{BagError, Recorder};
use crate::bus::{Bus, BusError, Publisher};

/// Topic carrying the experiment description, recorded at stamp 0.
pub const META_TOPIC: &str = "/bench/experiment";
pub const FIX_TOPIC: &str = "gps/fix";
pub const FIX_FILTER: &str = "/*/gps/fix";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Rig(#[from] RigError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Bag(#[from] BagError),
    #[error(transparent)]
    Format(#[from] bagfmt::BagFormatError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("record on {topic} at {stamp}: {reason}")]
    Payload { topic: String, stamp: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub spec: ExperimentSpec,
    /// Convergence window the analysis should skip.
    pub convergence_s: f64,
}

/// Rigs are recorded from power-on for the static scripts, so their first
/// 120 s are treated as settling; moving scripts are judged throughout.
pub fn default_convergence(kind: ExperimentKind) -> f64 {
    match kind {
        ExperimentKind::Static | ExperimentKind::StaticDisturbed => 120.0,
        ExperimentKind::Rotation | ExperimentKind::TranslationSquare => 0.0,
    }
}

/// Runs `spec` through the bus: each rover publishes on `/<rover>/gps/fix`
/// and a lossless recorder captures them. Returns the encoded bag.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<u8>, BenchError> {
    let fixes = spec.simulate()?;
    let bus = Bus::new();
    let recorder = Recorder::new(&bus, &[FIX_FILTER, META_TOPIC])?;

    let harness = bus.create_node("bench", "harness", BTreeMap::new())?;
    let meta = ExperimentMeta {
        spec: spec.clone(),
        convergence_s: default_convergence(spec.kind),
    };
    let meta_json = serde_json::to_vec(&meta).expect("spec serializes");
    harness
        .advertise("experiment", QosProfile::reliable(1))?
        .publish(0.0, &meta_json)?;

    let mut pubs: BTreeMap<&str, Publisher> = BTreeMap::new();
    for id in &spec.rig.rover_ids {
        let node = bus.create_node(id, "gps", BTreeMap::new())?;
        pubs.insert(id, node.advertise(FIX_TOPIC, QosProfile::default())?);
    }
    for f in &fixes {
        pubs[f.rover_id.as_str()].publish(f.stamp, &f.encode())?;
    }
    Ok(recorder.into_bytes()?)
}

/// Fixes and optional experiment description decoded from a bag.
#[derive(Debug, Clone, Default)]
pub struct BagContents {
    pub fixes: BTreeMap<String, Vec<RtkFix>>,
    pub meta: Option<ExperimentMeta>,
}

pub fn read_experiment_bag(records: &[BagRecord]) -> Result<BagContents, BenchError> {
    let meta_topic: QualifiedName = META_TOPIC.parse().expect("valid");
    let mut out = BagContents::default();
    for r in records {
        let fail = |reason: String| BenchError::Payload {
            topic: r.topic.to_string(),
            stamp: r.stamp,
            reason,
        };
        if r.topic == meta_topic {
            out.meta = Some(serde_json::from_slice(&r.payload).map_err(|e| fail(e.to_string()))?);
        } else if r.topic.local() == FIX_TOPIC {
            let fix = RtkFix::decode(&r.payload).map_err(|e| fail(e.to_string()))?;
            out.fixes.entry(fix.rover_id.clone()).or_default().push(fix);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub base: GeodeticCoord,
    pub expected_side: f64,
    /// Rover ids clockwise from the top left.
    pub corners: [String; 4],
    pub fix_rate_hz: f64,
    pub summary: SummaryOptions,
}

impl AnalyzeOptions {
    pub fn new(base: GeodeticCoord, expected_side: f64) -> Self {
        Self {
            base,
            expected_side,
            corners: CORNER_IDS.map(String::from),
            fix_rate_hz: DEFAULT_FIX_RATE_HZ,
            summary: SummaryOptions::default(),
        }
    }

    /// Options matching how `meta` was produced; the caller may override fields.
    pub fn from_meta(meta: &ExperimentMeta) -> Self {
        let spec = &meta.spec;
        let mut o = Self::new(spec.base, spec.rig.side);
        o.corners = spec.rig.rover_ids.clone();
        o.fix_rate_hz = spec.fix_rate_hz;
        o.summary.convergence_s = meta.convergence_s;
        o.summary.windows = spec.window_spans();
        o
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub distances: DistanceSeries,
    pub report: Report,
}

pub fn analyze(fixes: &BTreeMap<String, Vec<RtkFix>>, opts: &AnalyzeOptions) -> Result<Analysis, BenchError> {
    let distances = side_distances(fixes, &opts.corners, &opts.base, opts.fix_rate_hz)?;
    let report = summarize(&distances, opts.expected_side, &opts.summary)?;
    Ok(Analysis { distances, report })
}

/// Board centroid per epoch, in ENU about `base`.
pub fn centroid_path(
    fixes: &BTreeMap<String, Vec<RtkFix>>,
    corners: &[String; 4],
    base: &GeodeticCoord,
) -> Vec<(f64, hmas_core::Vec3)> {
    analysis::centroid_path(fixes, corners, base)
}

/// RMS distance between two centroid paths over their common stamps.
pub fn path_rms_deviation(a: &[(f64, hmas_core::Vec3)], b: &[(f64, hmas_core::Vec3)]) -> Option<f64> {
    let b: BTreeMap<u64, hmas_core::Vec3> = b.iter().map(|&(t, p)| (t.to_bits(), p)).collect();
    let sq: Vec<f64> = a
        .iter()
        .filter_map(|(t, p)| b.get(&t.to_bits()).map(|q| (*p - *q).norm().powi(2)))
        .collect();
    (!sq.is_empty()).then(|| (sq.iter().sum::<f64>() / sq.len() as f64).sqrt())
}

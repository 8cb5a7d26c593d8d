use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::math::{Quat, Vec3};
use super::transform::{FrameId, Transform};
use super::TfError;

/// Seconds of history kept per edge.
pub const DEFAULT_BUFFER_HORIZON: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
struct Sample {
    stamp: f64,
    translation: Vec3,
    rotation: Quat,
}

#[derive(Debug, Clone)]
struct Edge {
    parent: FrameId,
    samples: VecDeque<Sample>,
}

impl Edge {
    fn span(&self) -> (f64, f64) {
        (
            self.samples.front().map_or(f64::NAN, |s| s.stamp),
            self.samples.back().map_or(f64::NAN, |s| s.stamp),
        )
    }

    fn sample_at(&self, child: &FrameId, at: f64) -> Result<Transform, TfError> {
        let (first, last) = self.span();
        if !(at >= first && at <= last) {
            return Err(TfError::OutOfRange {
                child: child.clone(),
                at,
                first,
                last,
            });
        }
        // First sample with stamp >= at.
        let hi = self.samples.partition_point(|s| s.stamp < at);
        let upper = self.samples[hi];
        let (translation, rotation) = if upper.stamp == at {
            (upper.translation, upper.rotation)
        } else {
            let lower = self.samples[hi - 1];
            let alpha = (at - lower.stamp) / (upper.stamp - lower.stamp);
            (
                lower.translation.lerp(upper.translation, alpha),
                lower.rotation.slerp(upper.rotation, alpha),
            )
        };
        Ok(Transform::new(
            self.parent.clone(),
            child.clone(),
            translation,
            rotation,
            at,
        ))
    }
}

/// Forest of timestamped parent→child edges. Each child has at most one parent.
#[derive(Debug, Clone)]
pub struct TransformTree {
    horizon: f64,
    edges: BTreeMap<FrameId, Edge>,
    frames: BTreeSet<FrameId>,
}

impl Default for TransformTree {
    fn default() -> Self {
        Self::new()
    }
}

impl TransformTree {
    pub fn new() -> Self {
        Self::with_horizon(DEFAULT_BUFFER_HORIZON)
    }

    pub fn with_horizon(horizon: f64) -> Self {
        Self {
            horizon,
            edges: BTreeMap::new(),
            frames: BTreeSet::new(),
        }
    }

    pub fn contains(&self, frame: &FrameId) -> bool {
        self.frames.contains(frame)
    }

    pub fn frames(&self) -> impl Iterator<Item = &FrameId> {
        self.frames.iter()
    }

    pub fn parent_of(&self, frame: &FrameId) -> Option<&FrameId> {
        self.edges.get(frame).map(|e| &e.parent)
    }

    /// Newest stamp buffered for the edge ending at `child`.
    pub fn latest_stamp(&self, child: &FrameId) -> Option<f64> {
        self.edges.get(child).map(|e| e.span().1)
    }

    /// Inserts `t` into its child's history. Re-parenting a child discards
    /// the history it had under its previous parent.
    pub fn set_transform(&mut self, t: Transform) -> Result<(), TfError> {
        if !t.rotation.is_unit() {
            return Err(TfError::NonUnitQuaternion(t.rotation.norm()));
        }
        if !t.translation.is_finite() || !t.stamp.is_finite() {
            return Err(TfError::NonFinite);
        }
        if self.is_ancestor_or_self(&t.child, &t.parent) {
            return Err(TfError::Cycle {
                parent: t.parent,
                child: t.child,
            });
        }
        let sample = Sample {
            stamp: t.stamp,
            translation: t.translation,
            rotation: t.rotation.canonical(),
        };
        let horizon = self.horizon;
        match self.edges.get_mut(&t.child) {
            Some(edge) if edge.parent == t.parent => {
                let newest = edge.span().1;
                if t.stamp < newest - horizon {
                    return Err(TfError::TooOld {
                        stamp: t.stamp,
                        newest,
                    });
                }
                let idx = edge.samples.partition_point(|s| s.stamp < t.stamp);
                match edge.samples.get_mut(idx) {
                    Some(s) if s.stamp == t.stamp => *s = sample,
                    _ => edge.samples.insert(idx, sample),
                }
                let newest = edge.span().1;
                while edge.samples.front().is_some_and(|s| s.stamp < newest - horizon) {
                    edge.samples.pop_front();
                }
            }
            _ => {
                let mut samples = VecDeque::new();
                samples.push_back(sample);
                self.edges.insert(
                    t.child.clone(),
                    Edge {
                        parent: t.parent.clone(),
                        samples,
                    },
                );
            }
        }
        self.frames.insert(t.parent);
        self.frames.insert(t.child);
        Ok(())
    }

    /// Whether `ancestor` is `frame` or lies on `frame`'s path to its root.
    fn is_ancestor_or_self(&self, ancestor: &FrameId, frame: &FrameId) -> bool {
        let mut cur = frame;
        loop {
            if cur == ancestor {
                return true;
            }
            match self.edges.get(cur) {
                Some(e) => cur = &e.parent,
                None => return false,
            }
        }
    }

    fn path_to_root(&self, frame: &FrameId) -> Vec<FrameId> {
        let mut path = Vec::new();
        path.push(frame.clone());
        let mut cur = frame;
        while let Some(e) = self.edges.get(cur) {
            path.push(e.parent.clone());
            cur = &e.parent;
        }
        path
    }

    /// `ancestor_T_frame` at time `at`; `None` stands for identity.
    fn chain_up(&self, frame: &FrameId, ancestor: &FrameId, at: f64) -> Result<Option<Transform>, TfError> {
        let mut acc: Option<Transform> = None;
        let mut cur = frame.clone();
        while &cur != ancestor {
            let edge = self.edges.get(&cur).expect("ancestor lies on the path to root");
            let step = edge.sample_at(&cur, at)?;
            acc = Some(match acc {
                None => step,
                Some(a) => step.compose_unchecked(&a),
            });
            cur = edge.parent.clone();
        }
        Ok(acc)
    }

    /// Transform mapping coordinates in `source` into `target` at time `at`,
    /// composed along the unique tree path with per-edge interpolation.
    pub fn lookup(&self, target: &FrameId, source: &FrameId, at: f64) -> Result<Transform, TfError> {
        for f in [target, source] {
            if !self.frames.contains(f) {
                return Err(TfError::UnknownFrame(f.clone()));
            }
        }
        if target == source {
            return Ok(Transform::identity(target.clone(), at));
        }
        let src_path = self.path_to_root(source);
        let tgt_path = self.path_to_root(target);
        let tgt_set: BTreeSet<&FrameId> = tgt_path.iter().collect();
        let lca = src_path
            .iter()
            .find(|f| tgt_set.contains(f))
            .ok_or_else(|| TfError::Disconnected(target.clone(), source.clone()))?
            .clone();

        let lca_t_source = self.chain_up(source, &lca, at)?;
        let lca_t_target = self.chain_up(target, &lca, at)?;
        let out = match (lca_t_target, lca_t_source) {
            (None, Some(s)) => s,
            (Some(t), None) => t.invert(),
            (Some(t), Some(s)) => t.invert().compose_unchecked(&s),
            (None, None) => unreachable!("target != source"),
        };
        Ok(Transform { stamp: at, ..out })
    }

    /// Graphviz rendering of the current edges, one line per parent→child.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tf {\n");
        for (child, edge) in &self.edges {
            let (first, last) = edge.span();
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{} samples, {:.3}..{:.3} s\"];",
                edge.parent,
                child,
                edge.samples.len(),
                first,
                last
            );
        }
        out.push_str("}\n");
        out
    }
}

//! Recording bus traffic to bag files and replaying it.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hmas_core::bagfmt::{self, BagFormatError, BagRecord};
use hmas_core::{QosProfile, QualifiedName};

use crate::bus::{Bus, BusError, NodeHandle, Publisher, Subscription};

pub const RECORDER_NODE: &str = "bag_recorder";
pub const PLAYER_NODE: &str = "bag_player";
/// Namespace owning the recorder node.
pub const RECORDER_NAMESPACE: &str = "hmas";

#[derive(Debug, thiserror::Error)]
pub enum BagError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Format(#[from] BagFormatError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error("replay rate must be positive and finite, got {0}")]
    Rate(f64),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BagError + '_ {
    move |source| BagError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Lossless recorder: one reliable, unbounded pattern subscription.
#[derive(Debug)]
pub struct Recorder {
    node: NodeHandle,
    sub: Subscription,
    records: Vec<BagRecord>,
    sink: Option<(PathBuf, File)>,
}

impl Recorder {
    /// Records in memory; see [`Recorder::into_bytes`].
    pub fn new<S: AsRef<str>>(bus: &Bus, filters: &[S]) -> Result<Self, BagError> {
        let node = bus.create_node(RECORDER_NAMESPACE, RECORDER_NODE, BTreeMap::new())?;
        let sub = match node.subscribe_pattern(filters, QosProfile::lossless()) {
            Ok(s) => s,
            Err(e) => {
                node.close();
                return Err(e.into());
            }
        };
        Ok(Self {
            node,
            sub,
            records: Vec::new(),
            sink: None,
        })
    }

    /// Opens `path` for writing up front so an unwritable sink fails before
    /// anything is recorded.
    pub fn to_file<S: AsRef<str>>(bus: &Bus, filters: &[S], path: &Path) -> Result<Self, BagError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut r = Self::new(bus, filters)?;
        r.sink = Some((path.to_path_buf(), file));
        Ok(r)
    }

    /// Moves pending messages from the bus into the recording.
    pub fn poll(&mut self) -> Result<usize, BagError> {
        let msgs = self.sub.drain()?;
        let n = msgs.len();
        self.records.extend(msgs.into_iter().map(|m| BagRecord {
            topic: m.topic,
            stamp: m.stamp,
            payload: m.payload,
        }));
        Ok(n)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Stops recording and returns the encoded bag.
    pub fn into_bytes(mut self) -> Result<Vec<u8>, BagError> {
        self.poll()?;
        self.node.close();
        Ok(bagfmt::encode(&mut self.records))
    }

    /// Stops recording and writes the bag to the sink given at creation.
    /// Returns the number of records written.
    pub fn finish(mut self) -> Result<usize, BagError> {
        let sink = self.sink.take();
        let n = {
            self.poll()?;
            self.records.len()
        };
        let bytes = self.into_bytes()?;
        if let Some((path, mut file)) = sink {
            file.write_all(&bytes).map_err(io_err(&path))?;
            file.flush().map_err(io_err(&path))?;
        }
        Ok(n)
    }
}

pub fn read_bag(path: &Path) -> Result<Vec<BagRecord>, BagError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(bagfmt::decode(&bytes)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplaySpeed {
    /// Wall-clock gaps are the recorded gaps divided by the factor.
    Rate(f64),
    /// Order preserved, no waiting.
    Fast,
}

/// Republishes `records` on their original topics through one
/// `bag_player` node per namespace. Player nodes are closed on return.
pub fn replay(records: &[BagRecord], bus: &Bus, speed: ReplaySpeed) -> Result<usize, BagError> {
    if let ReplaySpeed::Rate(r) = speed {
        if !(r.is_finite() && r > 0.0) {
            return Err(BagError::Rate(r));
        }
    }
    let mut nodes: BTreeMap<String, NodeHandle> = BTreeMap::new();
    let mut pubs: BTreeMap<QualifiedName, Publisher> = BTreeMap::new();
    let result = (|| {
        let (Some(first), Some(_)) = (records.first(), records.last()) else {
            return Ok(0);
        };
        let t0 = first.stamp;
        let wall0 = Instant::now();
        for rec in records {
            if !pubs.contains_key(&rec.topic) {
                let ns = rec.topic.namespace().to_string();
                if !nodes.contains_key(&ns) {
                    nodes.insert(ns.clone(), bus.create_node(&ns, PLAYER_NODE, BTreeMap::new())?);
                }
                let p = nodes[&ns].advertise(rec.topic.local(), QosProfile::reliable(1))?;
                pubs.insert(rec.topic.clone(), p);
            }
            if let ReplaySpeed::Rate(r) = speed {
                let due = wall0 + Duration::from_secs_f64(((rec.stamp - t0) / r).max(0.0));
                let now = Instant::now();
                if due > now {
                    std::thread::sleep(due - now);
                }
            }
            bus.advance_to(rec.stamp);
            pubs[&rec.topic].publish(rec.stamp, &rec.payload)?;
        }
        Ok(records.len())
    })();
    for n in nodes.values() {
        n.close();
    }
    result
}

#[derive(Debug, Clone, PartialEq)]
pub struct BagInfo {
    pub records: usize,
    pub bytes: usize,
    /// Record count per topic.
    pub topics: BTreeMap<String, usize>,
    pub start: Option<f64>,
    pub end: Option<f64>,
}

impl BagInfo {
    pub fn of(records: &[BagRecord], bytes: usize) -> Self {
        let mut topics = BTreeMap::new();
        for r in records {
            *topics.entry(r.topic.to_string()).or_insert(0) += 1;
        }
        Self {
            records: records.len(),
            bytes,
            topics,
            start: records.first().map(|r| r.stamp),
            end: records.last().map(|r| r.stamp),
        }
    }

    pub fn duration(&self) -> f64 {
        match (self.start, self.end) {
            (Some(s), Some(e)) => e - s,
            _ => 0.0,
        }
    }
}

impl std::fmt::Display for BagInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "records:  {}", self.records)?;
        writeln!(f, "size:     {} bytes", self.bytes)?;
        match (self.start, self.end) {
            (Some(s), Some(e)) => writeln!(f, "span:     {s:.6} .. {e:.6} s ({:.6} s)", e - s)?,
            _ => writeln!(f, "span:     empty")?,
        }
        writeln!(f, "topics:   {}", self.topics.len())?;
        for (t, n) in &self.topics {
            writeln!(f, "  {t}  {n}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn publisher(bus: &Bus, ns: &str, topic: &str) -> Publisher {
        bus.create_node(ns, "driver", BTreeMap::new())
            .unwrap()
            .advertise(topic, QosProfile::default())
            .unwrap()
    }

    #[test]
    fn filter_selects_namespace() {
        let bus = Bus::new();
        let mut rec = Recorder::new(&bus, &["/spot/*"]).unwrap();
        let spot = publisher(&bus, "spot", "gps/fix");
        let anafi = publisher(&bus, "anafi", "gps/fix");
        spot.publish(0.0, b"s").unwrap();
        anafi.publish(0.0, b"a").unwrap();
        rec.poll().unwrap();
        let recs = bagfmt::decode(&rec.into_bytes().unwrap()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].topic.to_string(), "/spot/gps/fix");
    }

    #[test]
    fn no_matches_gives_valid_empty_bag() {
        let bus = Bus::new();
        let rec = Recorder::new(&bus, &["/nobody/*"]).unwrap();
        publisher(&bus, "spot", "t").publish(1.0, b"x").unwrap();
        let bytes = rec.into_bytes().unwrap();
        assert_eq!(bytes, b"HBAG\x01\x00");
    }

    #[test]
    fn recorder_is_lossless_under_burst() {
        let bus = Bus::new();
        let rec = Recorder::new(&bus, &["/**"]).unwrap();
        let p = publisher(&bus, "spot", "gps/fix");
        for i in 0..1000 {
            p.publish(i as f64 * 0.01, &(i as u32).to_le_bytes()).unwrap();
        }
        let recs = bagfmt::decode(&rec.into_bytes().unwrap()).unwrap();
        assert_eq!(recs.len(), 1000);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.payload, (i as u32).to_le_bytes());
        }
        assert!(recs.windows(2).all(|w| w[0].stamp <= w[1].stamp));
    }

    #[test]
    fn recorder_node_is_released() {
        let bus = Bus::new();
        Recorder::new(&bus, &["/**"]).unwrap().into_bytes().unwrap();
        assert!(bus.discover().is_empty());
        Recorder::new(&bus, &["/**"]).unwrap();
    }

    #[test]
    fn unwritable_sink_fails_early() {
        let bus = Bus::new();
        let err = Recorder::to_file(&bus, &["/**"], Path::new("/nonexistent/dir/out.bag")).unwrap_err();
        assert!(matches!(err, BagError::Io { .. }));
        assert!(bus.discover().is_empty());
    }

    #[test]
    fn replay_round_trip_fast() {
        let src = Bus::new();
        let rec = Recorder::new(&src, &["/**"]).unwrap();
        let a = publisher(&src, "spot", "gps/fix");
        let b = publisher(&src, "anafi", "gps/fix");
        for i in 0..50u8 {
            a.publish(f64::from(i), &[i]).unwrap();
            b.publish(f64::from(i) + 0.5, &[i, i]).unwrap();
        }
        let recs = bagfmt::decode(&rec.into_bytes().unwrap()).unwrap();

        let dst = Bus::new();
        let watcher = dst.create_node("hmas", "watch", BTreeMap::new()).unwrap();
        let sa = watcher.subscribe("/spot/gps/fix", QosProfile::reliable(1000)).unwrap();
        let sb = watcher.subscribe("/anafi/gps/fix", QosProfile::reliable(1000)).unwrap();
        assert_eq!(replay(&recs, &dst, ReplaySpeed::Fast).unwrap(), 100);
        let pa: Vec<Vec<u8>> = sa.drain().unwrap().into_iter().map(|m| m.payload).collect();
        let pb: Vec<Vec<u8>> = sb.drain().unwrap().into_iter().map(|m| m.payload).collect();
        assert_eq!(pa, (0..50u8).map(|i| vec![i]).collect::<Vec<_>>());
        assert_eq!(pb, (0..50u8).map(|i| vec![i, i]).collect::<Vec<_>>());
        assert_eq!(dst.discover().nodes.len(), 1);
    }

    #[test]
    fn replay_empty_and_bad_rate() {
        let bus = Bus::new();
        assert_eq!(replay(&[], &bus, ReplaySpeed::Rate(1.0)).unwrap(), 0);
        assert!(matches!(replay(&[], &bus, ReplaySpeed::Rate(0.0)), Err(BagError::Rate(_))));
    }

    #[test]
    fn info_summarizes() {
        let recs = vec![
            BagRecord { topic: "/a/t".parse().unwrap(), stamp: 1.0, payload: vec![] },
            BagRecord { topic: "/b/t".parse().unwrap(), stamp: 2.5, payload: vec![] },
            BagRecord { topic: "/a/t".parse().unwrap(), stamp: 3.0, payload: vec![] },
        ];
        let info = BagInfo::of(&recs, 99);
        assert_eq!(info.records, 3);
        assert_eq!(info.topics["/a/t"], 2);
        assert_eq!(info.duration(), 2.0);
        assert!(info.to_string().contains("/b/t  1"));
    }
}

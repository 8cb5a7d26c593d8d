//! In-process namespaced publish/subscribe bus.
//!
//! One [`Bus`] value is the whole shared substrate: cloning it hands out
//! another reference to the same participant graph. Delivery is pull-based
//! through [`Subscription::take`]; publishing never waits on consumers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, MutexGuard};

use globset::{Glob, GlobSet, GlobSetBuilder};
use hmas_core::name::{validate_relative, NameError};
use hmas_core::{KeepLast, QosProfile, QualifiedName};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const AGENT_NAME_PARAM: &str = "agent_name";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BusError {
    #[error(transparent)]
    Name(#[from] NameError),
    #[error("node {0} already exists")]
    DuplicateNode(QualifiedName),
    #[error("node {0} is not registered")]
    UnknownNode(QualifiedName),
    #[error("{0} is closed")]
    Closed(String),
    #[error("stamp {stamp} on {topic} is earlier than the previous {previous}")]
    StampRegression { topic: QualifiedName, stamp: f64, previous: f64 },
    #[error("invalid stamp {0}")]
    InvalidStamp(f64),
    #[error("invalid topic pattern `{0}`")]
    Pattern(String),
    #[error("drop probability {0} outside [0, 1]")]
    DropProbability(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub topic: QualifiedName,
    pub stamp: f64,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeliveryReport {
    pub matched: usize,
    pub enqueued: usize,
}

/// Participant graph at one instant.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    pub nodes: BTreeSet<QualifiedName>,
    /// Full topic name to publishing nodes.
    pub publishers: BTreeMap<String, BTreeSet<QualifiedName>>,
    /// Full topic name, or glob pattern for pattern subscriptions, to subscribing nodes.
    pub subscribers: BTreeMap<String, BTreeSet<QualifiedName>>,
}

impl Graph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.publishers.is_empty() && self.subscribers.is_empty()
    }

    pub fn namespaces(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(QualifiedName::namespace).collect()
    }
}

/// Seeded loss and latency applied to best-effort deliveries.
#[derive(Debug, Clone)]
pub struct FaultInjector {
    drop_probability: f64,
    latency_s: f64,
    rng: ChaCha8Rng,
}

impl FaultInjector {
    /// One `random_bool(drop_probability)` draw is consumed per best-effort
    /// delivery, in publish order then subscription creation order.
    pub fn new(drop_probability: f64, latency_s: f64, seed: u64) -> Result<Self, BusError> {
        if !(0.0..=1.0).contains(&drop_probability) {
            return Err(BusError::DropProbability(drop_probability));
        }
        Ok(Self {
            drop_probability,
            latency_s: latency_s.max(0.0),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn drops(&mut self) -> bool {
        self.drop_probability > 0.0 && self.rng.random_bool(self.drop_probability)
    }
}

enum Target {
    Topic(QualifiedName),
    Patterns { key: String, set: GlobSet },
}

impl Target {
    fn matches(&self, topic: &QualifiedName) -> bool {
        match self {
            Target::Topic(t) => t == topic,
            Target::Patterns { set, .. } => set.is_match(topic.to_string()),
        }
    }

    fn key(&self) -> String {
        match self {
            Target::Topic(t) => t.to_string(),
            Target::Patterns { key, .. } => key.clone(),
        }
    }
}

struct PubEntry {
    node: QualifiedName,
    topic: QualifiedName,
    qos: QosProfile,
    last_stamp: f64,
}

struct SubEntry {
    node: QualifiedName,
    target: Target,
    qos: QosProfile,
    queue: KeepLast<Message>,
    /// Messages held back by injected latency, with their release time.
    delayed: Vec<(f64, Message)>,
}

#[derive(Default)]
struct State {
    nodes: BTreeMap<QualifiedName, BTreeMap<String, String>>,
    publishers: BTreeMap<u64, PubEntry>,
    subscriptions: BTreeMap<u64, SubEntry>,
    next_id: u64,
    faults: Option<FaultInjector>,
    clock: f64,
}

impl State {
    fn id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }

    fn require_node(&self, node: &QualifiedName) -> Result<(), BusError> {
        if self.nodes.contains_key(node) {
            Ok(())
        } else {
            Err(BusError::UnknownNode(node.clone()))
        }
    }
}

#[derive(Clone, Default)]
pub struct Bus {
    state: Arc<Mutex<State>>,
}

impl std::fmt::Debug for Bus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Bus").finish_non_exhaustive()
    }
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn set_fault_injector(&self, faults: Option<FaultInjector>) {
        self.lock().faults = faults;
    }

    /// Moves the bus clock forward, releasing latency-delayed messages due by `now`.
    pub fn advance_to(&self, now: f64) {
        let mut st = self.lock();
        st.clock = st.clock.max(now);
        let clock = st.clock;
        for sub in st.subscriptions.values_mut() {
            let (due, held): (Vec<_>, Vec<_>) = sub.delayed.drain(..).partition(|(t, _)| *t <= clock);
            sub.delayed = held;
            for (_, m) in due {
                sub.queue.push(m);
            }
        }
    }

    pub fn create_node(
        &self,
        namespace: &str,
        local_name: &str,
        params: BTreeMap<String, String>,
    ) -> Result<NodeHandle, BusError> {
        let name = QualifiedName::new(namespace, local_name)?;
        let mut params = params;
        params.insert(AGENT_NAME_PARAM.to_string(), namespace.to_string());
        let mut st = self.lock();
        if st.nodes.contains_key(&name) {
            return Err(BusError::DuplicateNode(name));
        }
        st.nodes.insert(name.clone(), params.clone());
        Ok(NodeHandle {
            bus: self.clone(),
            name,
            params,
        })
    }

    pub fn discover(&self) -> Graph {
        let st = self.lock();
        let mut g = Graph {
            nodes: st.nodes.keys().cloned().collect(),
            ..Graph::default()
        };
        for p in st.publishers.values() {
            g.publishers.entry(p.topic.to_string()).or_default().insert(p.node.clone());
        }
        for s in st.subscriptions.values() {
            g.subscribers.entry(s.target.key()).or_default().insert(s.node.clone());
        }
        g
    }

    fn publish(&self, id: u64, stamp: f64, payload: &[u8]) -> Result<DeliveryReport, BusError> {
        if !(stamp.is_finite() && stamp >= 0.0) {
            return Err(BusError::InvalidStamp(stamp));
        }
        let mut guard = self.lock();
        let st = &mut *guard;
        let p = st
            .publishers
            .get_mut(&id)
            .ok_or_else(|| BusError::Closed(format!("publisher #{id}")))?;
        if stamp < p.last_stamp {
            return Err(BusError::StampRegression {
                topic: p.topic.clone(),
                stamp,
                previous: p.last_stamp,
            });
        }
        p.last_stamp = stamp;
        let (topic, pub_best_effort) = (p.topic.clone(), p.qos.is_best_effort());

        let mut report = DeliveryReport::default();
        for sub in st.subscriptions.values_mut() {
            if !sub.target.matches(&topic) {
                continue;
            }
            report.matched += 1;
            let lossy = pub_best_effort && sub.qos.is_best_effort();
            let mut latency = 0.0;
            if let (true, Some(f)) = (lossy, st.faults.as_mut()) {
                if f.drops() {
                    continue;
                }
                latency = f.latency_s;
            }
            let msg = Message {
                topic: topic.clone(),
                stamp,
                payload: payload.to_vec(),
            };
            if latency > 0.0 {
                sub.delayed.push((stamp + latency, msg));
            } else {
                sub.queue.push(msg);
            }
            report.enqueued += 1;
        }
        Ok(report)
    }

    fn take(&self, id: u64) -> Result<Option<Message>, BusError> {
        let mut st = self.lock();
        let sub = st
            .subscriptions
            .get_mut(&id)
            .ok_or_else(|| BusError::Closed(format!("subscription #{id}")))?;
        Ok(sub.queue.pop())
    }
}

#[derive(Debug, Clone)]
pub struct NodeHandle {
    bus: Bus,
    name: QualifiedName,
    params: BTreeMap<String, String>,
}

impl NodeHandle {
    pub fn name(&self) -> &QualifiedName {
        &self.name
    }

    pub fn namespace(&self) -> &str {
        self.name.namespace()
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    /// Declares a publisher on `/<namespace>/<topic>`. Absolute names are rejected.
    pub fn advertise(&self, topic: &str, qos: QosProfile) -> Result<Publisher, BusError> {
        validate_relative(topic)?;
        let topic = QualifiedName::new(self.namespace(), topic)?;
        let mut st = self.bus.lock();
        st.require_node(&self.name)?;
        let id = st.id();
        st.publishers.insert(
            id,
            PubEntry {
                node: self.name.clone(),
                topic: topic.clone(),
                qos,
                last_stamp: 0.0,
            },
        );
        Ok(Publisher {
            bus: self.bus.clone(),
            id,
            topic,
        })
    }

    /// Subscribes to a relative topic in this namespace or to any absolute topic.
    pub fn subscribe(&self, topic: &str, qos: QosProfile) -> Result<Subscription, BusError> {
        let topic = QualifiedName::resolve(self.namespace(), topic)?;
        self.add_subscription(Target::Topic(topic), qos)
    }

    /// Subscribes to every topic whose full name matches any of `globs`.
    /// `*` also matches across `/`.
    pub fn subscribe_pattern<S: AsRef<str>>(&self, globs: &[S], qos: QosProfile) -> Result<Subscription, BusError> {
        let mut builder = GlobSetBuilder::new();
        for g in globs {
            let g = g.as_ref();
            builder.add(Glob::new(g).map_err(|_| BusError::Pattern(g.to_string()))?);
        }
        let set = builder.build().map_err(|e| BusError::Pattern(e.to_string()))?;
        let key = globs.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",");
        self.add_subscription(Target::Patterns { key, set }, qos)
    }

    fn add_subscription(&self, target: Target, qos: QosProfile) -> Result<Subscription, BusError> {
        let mut st = self.bus.lock();
        st.require_node(&self.name)?;
        let id = st.id();
        let key = target.key();
        st.subscriptions.insert(
            id,
            SubEntry {
                node: self.name.clone(),
                target,
                qos,
                queue: KeepLast::new(qos.history_depth),
                delayed: Vec::new(),
            },
        );
        Ok(Subscription {
            bus: self.bus.clone(),
            id,
            target: key,
        })
    }

    /// Unregisters the node together with all of its publishers and subscriptions.
    pub fn close(&self) {
        let mut st = self.bus.lock();
        st.nodes.remove(&self.name);
        st.publishers.retain(|_, p| p.node != self.name);
        st.subscriptions.retain(|_, s| s.node != self.name);
    }
}

#[derive(Debug, Clone)]
pub struct Publisher {
    bus: Bus,
    id: u64,
    topic: QualifiedName,
}

impl Publisher {
    pub fn topic(&self) -> &QualifiedName {
        &self.topic
    }

    pub fn publish(&self, stamp: f64, payload: &[u8]) -> Result<DeliveryReport, BusError> {
        self.bus.publish(self.id, stamp, payload)
    }

    pub fn close(&self) {
        self.bus.lock().publishers.remove(&self.id);
    }
}

#[derive(Debug, Clone)]
pub struct Subscription {
    bus: Bus,
    id: u64,
    target: String,
}

impl Subscription {
    /// Topic name or glob this subscription listens on.
    pub fn target(&self) -> &str {
        &self.target
    }

    /// Removes and returns the oldest held message.
    pub fn take(&self) -> Result<Option<Message>, BusError> {
        self.bus.take(self.id)
    }

    /// Takes every held message, oldest first.
    pub fn drain(&self) -> Result<Vec<Message>, BusError> {
        let mut out = Vec::new();
        while let Some(m) = self.take()? {
            out.push(m);
        }
        Ok(out)
    }

    pub fn close(&self) {
        self.bus.lock().subscriptions.remove(&self.id);
    }
}

//! Namespace-qualified names.
//!
//! Every agent owns one namespace; nodes and topics are declared with
//! relative names and resolved into `/<namespace>/<local>`.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NameError {
    #[error("empty name")]
    Empty,
    #[error("invalid segment `{0}`: segments must match [a-z][a-z0-9_]*")]
    BadSegment(String),
    #[error("absolute name `{0}` where a relative name is required")]
    Absolute(String),
    #[error("`{0}` is not a fully qualified name of the form /<namespace>/<local>")]
    NotQualified(String),
}

/// Checks one path segment against `[a-z][a-z0-9_]*`.
pub fn is_valid_segment(seg: &str) -> bool {
    let mut bytes = seg.bytes();
    match bytes.next() {
        Some(b'a'..=b'z') => bytes.all(|b| matches!(b, b'a'..=b'z' | b'0'..=b'9' | b'_')),
        _ => false,
    }
}

/// Validates a namespace: exactly one segment.
pub fn validate_namespace(ns: &str) -> Result<(), NameError> {
    if ns.is_empty() {
        return Err(NameError::Empty);
    }
    if !is_valid_segment(ns) {
        return Err(NameError::BadSegment(ns.to_string()));
    }
    Ok(())
}

/// Validates a relative name: one or more segments separated by `/`, no
/// leading or trailing separator.
pub fn validate_relative(local: &str) -> Result<(), NameError> {
    if local.is_empty() {
        return Err(NameError::Empty);
    }
    if local.starts_with('/') {
        return Err(NameError::Absolute(local.to_string()));
    }
    for seg in local.split('/') {
        if !is_valid_segment(seg) {
            return Err(NameError::BadSegment(seg.to_string()));
        }
    }
    Ok(())
}

/// A fully qualified name `/<namespace>/<local>`.
///
/// Ordering is lexicographic on (namespace, local), which keeps discovery
/// output and recordings deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualifiedName {
    namespace: String,
    local: String,
}

impl QualifiedName {
    pub fn new(namespace: &str, local: &str) -> Result<Self, NameError> {
        validate_namespace(namespace)?;
        validate_relative(local)?;
        Ok(Self {
            namespace: namespace.to_string(),
            local: local.to_string(),
        })
    }

    /// Resolves `name` as seen from `namespace`: absolute names are parsed
    /// as-is, relative ones are prefixed with the namespace.
    pub fn resolve(namespace: &str, name: &str) -> Result<Self, NameError> {
        if name.starts_with('/') {
            name.parse()
        } else {
            Self::new(namespace, name)
        }
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn local(&self) -> &str {
        &self.local
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/{}", self.namespace, self.local)
    }
}

impl FromStr for QualifiedName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rest = s
            .strip_prefix('/')
            .ok_or_else(|| NameError::NotQualified(s.to_string()))?;
        let (ns, local) = rest
            .split_once('/')
            .ok_or_else(|| NameError::NotQualified(s.to_string()))?;
        Self::new(ns, local)
    }
}

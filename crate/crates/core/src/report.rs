//! Flat `key=value` report rendering.
//!
//! Every estimator and bound calculator can serialise itself to one record,
//! one key per line, so sweep scripts can grep results without a parser.

use std::fmt::Display;

#[derive(Debug, Clone, Default)]
pub struct KvReport {
    pairs: Vec<(String, String)>,
}

impl KvReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    /// `None` renders as `na` so records keep a fixed key set.
    pub fn set_option(&mut self, key: &str, value: Option<impl Display>) {
        match value {
            Some(v) => self.set(key, v),
            None => self.set(key, "na"),
        }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Keep shared keys plus those starting with `prefix`; drop keys that
    /// start with any prefix in `exclude`.
    pub fn filtered(&self, exclude: &[&str]) -> KvReport {
        let pairs = self
            .pairs
            .iter()
            .filter(|(k, _)| !exclude.iter().any(|p| k.starts_with(p)))
            .cloned()
            .collect();
        KvReport { pairs }
    }
}

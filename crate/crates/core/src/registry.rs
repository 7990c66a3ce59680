//! Name-keyed registries for interchangeable strategies.
//!
//! Each family of algorithm variants (Lax connections, Iwasawa factorizations,
//! Yang-Baxter operators) is exposed through a trait or constructor signature
//! and registered under a stable name, so configuration files and the CLI can
//! pick a variant at runtime.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub struct Registry<F> {
    kind: &'static str,
    entries: BTreeMap<&'static str, F>,
}

impl<F> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `entry` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, entry: F) -> &mut Self {
        self.entries.insert(name, entry);
        self
    }

    pub fn get(&self, name: &str) -> Result<&F> {
        self.entries.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: self.kind,
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_unknown_name() {
        let mut reg: Registry<fn() -> u32> = Registry::new("answer");
        reg.register("one", || 1).register("two", || 2);
        assert_eq!((reg.get("two").unwrap())(), 2);
        assert_eq!(reg.names(), vec!["one", "two"]);
        let err = reg.get("three").err().unwrap().to_string();
        assert!(err.contains("one, two"), "{err}");
    }
}

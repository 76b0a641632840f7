use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::{Method, SerialPaired, SerialTwoSample, TestProcedure, UsualPaired, UsualTwoSample};
use crate::ar1::{Design, TestKind};
use crate::error::{Error, Result};

/// Test procedures keyed by name.
#[derive(Default)]
pub struct Registry {
    procedures: BTreeMap<String, Box<dyn TestProcedure>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The four serial tests and their four usual analogues.
    pub fn builtin() -> Self {
        let mut reg = Registry::new();
        for design in [Design::Level, Design::Rate] {
            reg.register(Box::new(SerialPaired { design }));
            reg.register(Box::new(SerialTwoSample { design }));
            reg.register(Box::new(UsualPaired { design }));
            reg.register(Box::new(UsualTwoSample { design }));
        }
        reg
    }

    /// Adds a procedure, returning the one it replaced under the same name.
    pub fn register(&mut self, procedure: Box<dyn TestProcedure>) -> Option<Box<dyn TestProcedure>> {
        self.procedures.insert(procedure.name(), procedure)
    }

    pub fn get(&self, name: &str) -> Option<&dyn TestProcedure> {
        self.procedures.get(name).map(|p| p.as_ref())
    }

    pub fn procedure(&self, kind: TestKind, method: Method) -> Result<&dyn TestProcedure> {
        let name = format!("{method}:{kind}");
        self.get(&name)
            .ok_or_else(|| Error::Invalid(format!("no test procedure registered as '{name}'")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.procedures.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.procedures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.procedures.is_empty()
    }
}

/// Shared registry of the built-in procedures.
pub fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(Registry::builtin)
}

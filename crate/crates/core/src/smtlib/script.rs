use std::collections::BTreeMap;

use super::term::{Definition, FunctionSignature, Symbol, Term};
use super::typeck::Env;

/// One top-level SMT-LIB command.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Command {
    SetLogic(String),
    /// `set-info`, `set-option`, `get-info` and `echo`, kept as source text.
    Passthrough(String),
    DeclareSort(Symbol, u32),
    DeclareFun(FunctionSignature),
    DefineFun(Definition),
    Assert(Term),
    CheckSat,
    GetModel,
    GetValue(Vec<Term>),
    Exit,
}

/// A parsed SMT-LIB script. Commands keep their source order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Script {
    pub commands: Vec<Command>,
}

impl Script {
    pub fn new(commands: Vec<Command>) -> Self {
        Script { commands }
    }

    pub fn logic(&self) -> Option<&str> {
        self.commands.iter().find_map(|c| match c {
            Command::SetLogic(l) => Some(l.as_str()),
            _ => None,
        })
    }

    pub fn declarations(&self) -> impl Iterator<Item = &FunctionSignature> {
        self.commands.iter().filter_map(|c| match c {
            Command::DeclareFun(sig) => Some(sig),
            _ => None,
        })
    }

    pub fn definitions(&self) -> impl Iterator<Item = &Definition> {
        self.commands.iter().filter_map(|c| match c {
            Command::DefineFun(d) => Some(d),
            _ => None,
        })
    }

    pub fn assertions(&self) -> impl Iterator<Item = &Term> {
        self.commands.iter().filter_map(|c| match c {
            Command::Assert(t) => Some(t),
            _ => None,
        })
    }

    pub fn assertions_mut(&mut self) -> impl Iterator<Item = &mut Term> {
        self.commands.iter_mut().filter_map(|c| match c {
            Command::Assert(t) => Some(t),
            _ => None,
        })
    }

    /// Definitions by name, for inlining.
    pub fn definition_map(&self) -> BTreeMap<Symbol, Definition> {
        self.definitions()
            .map(|d| (d.signature.name.clone(), d.clone()))
            .collect()
    }

    /// Symbol table of every declared and defined function and sort.
    pub fn env(&self) -> Env {
        let mut env = Env::default();
        for c in &self.commands {
            match c {
                Command::DeclareSort(s, _) => env.add_sort(s.clone()),
                Command::DeclareFun(sig) => env.add_function(sig.clone()),
                Command::DefineFun(d) => env.add_function(d.signature.clone()),
                _ => {}
            }
        }
        env
    }

    pub fn has_get_model(&self) -> bool {
        self.commands.iter().any(|c| matches!(c, Command::GetModel))
    }

    /// Inserts an assertion just before the first query command.
    pub fn push_assertion(&mut self, term: Term) {
        let pos = self
            .commands
            .iter()
            .position(|c| {
                matches!(
                    c,
                    Command::CheckSat | Command::GetModel | Command::GetValue(_) | Command::Exit
                )
            })
            .unwrap_or(self.commands.len());
        self.commands.insert(pos, Command::Assert(term));
    }

    /// Removes all query commands and appends `(check-sat)`, optionally
    /// followed by `(get-model)`.
    pub fn with_query(mut self, get_model: bool) -> Script {
        self.commands.retain(|c| {
            !matches!(
                c,
                Command::CheckSat | Command::GetModel | Command::GetValue(_) | Command::Exit
            )
        });
        self.commands.push(Command::CheckSat);
        if get_model {
            self.commands.push(Command::GetModel);
        }
        self
    }
}

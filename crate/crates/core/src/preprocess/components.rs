use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::union_find::UnionFind;
use crate::smtlib::{uninterpreted_symbols, Command, Env, Script, Symbol, Term};

/// Assertions that share uninterpreted symbols, together with those symbols.
///
/// The ground residue (assertions mentioning no uninterpreted symbol) is a
/// component with an empty function set; it always comes last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: usize,
    pub functions: BTreeSet<Symbol>,
    pub assertions: Vec<Term>,
    /// Positions of `assertions` in the script's assertion list.
    pub assertion_indices: Vec<usize>,
    pub env: Env,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    id: usize,
    functions: Vec<&'a str>,
    assertion_indices: &'a [usize],
    ground_residue: bool,
}

impl Component {
    pub fn is_residue(&self) -> bool {
        self.functions.is_empty()
    }

    /// A stand-alone script: `script`'s logic, sorts and passthrough
    /// commands, the component's declarations and assertions, and
    /// `(check-sat)`.
    pub fn to_script(&self, script: &Script) -> Script {
        let mut out = Vec::new();
        for c in &script.commands {
            match c {
                Command::SetLogic(_) | Command::Passthrough(_) | Command::DeclareSort(..) => out.push(c.clone()),
                Command::DeclareFun(sig) if self.functions.contains(&sig.name) => out.push(c.clone()),
                _ => {}
            }
        }
        out.extend(self.assertions.iter().cloned().map(Command::Assert));
        out.push(Command::CheckSat);
        Script::new(out)
    }

    /// JSON record for a component manifest.
    pub fn manifest_json(&self) -> serde_json::Value {
        serde_json::to_value(ManifestEntry {
            id: self.id,
            functions: self.functions.iter().map(|s| s.as_str()).collect(),
            assertion_indices: &self.assertion_indices,
            ground_residue: self.is_residue(),
        })
        .expect("manifest entry serializes")
    }
}

/// Groups the assertions of an already rewritten script into components
/// whose uninterpreted symbols are pairwise disjoint. Components are ordered
/// by their smallest symbol; the ground residue, if any, is last.
pub fn separate_components(script: &Script) -> Vec<Component> {
    let env = script.env();
    let symbols: Vec<BTreeSet<Symbol>> = script
        .assertions()
        .map(|a| uninterpreted_symbols(a, &env))
        .collect();

    let mut uf = UnionFind::new();
    for syms in &symbols {
        let mut it = syms.iter();
        if let Some(first) = it.next() {
            uf.make_set(first.clone());
            for s in it {
                uf.union(first, s);
            }
        }
    }

    let mut groups: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
    let keys: Vec<Symbol> = uf.keys().cloned().collect();
    for k in keys {
        let root = uf.find(&k);
        groups.entry(root).or_default().insert(k);
    }
    // order by smallest member
    let mut ordered: Vec<(Symbol, BTreeSet<Symbol>)> = groups.into_iter().collect();
    ordered.sort_by(|a, b| a.1.first().cmp(&b.1.first()));
    let slot: BTreeMap<Symbol, usize> = ordered.iter().enumerate().map(|(i, (r, _))| (r.clone(), i)).collect();

    let mut comps: Vec<Component> = ordered
        .into_iter()
        .enumerate()
        .map(|(id, (_, functions))| Component {
            id,
            env: env.restrict(&functions),
            functions,
            assertions: Vec::new(),
            assertion_indices: Vec::new(),
        })
        .collect();
    let mut residue = Component {
        id: comps.len(),
        functions: BTreeSet::new(),
        assertions: Vec::new(),
        assertion_indices: Vec::new(),
        env: env.restrict(&BTreeSet::new()),
    };
    for (i, (a, syms)) in script.assertions().zip(&symbols).enumerate() {
        let target = match syms.first() {
            Some(s) => &mut comps[slot[&uf.find(s)]],
            None => &mut residue,
        };
        target.assertions.push(a.clone());
        target.assertion_indices.push(i);
    }
    if !residue.assertions.is_empty() {
        comps.push(residue);
    }
    comps
}

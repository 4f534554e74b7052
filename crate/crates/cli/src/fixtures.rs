//! Replay fixtures built from known witnesses instead of a live model.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use aquaforte_core::benchgen::BenchManifest;
use aquaforte_core::llm::ReplayStore;
use aquaforte_core::orchestrator::chain_fixture;
use aquaforte_core::smtlib::{parse_script, Command, Definition, Script};
use serde_json::{json, Map, Value};

/// The reply-schema entry for one definition: `(name, {params, body})`.
pub fn definition_reply(def: &Definition) -> (String, Value) {
    let params: Vec<Value> = def.params.iter().map(|(n, s)| json!([n.as_str(), s.to_string()])).collect();
    let entry = json!({
        "params": params,
        "body": def.body.to_string(),
        "reasoning": "known witness",
        "confidence": 1.0,
    });
    (def.signature.name.as_str().to_string(), entry)
}

/// Parses `define-fun` texts into one reply step.
pub fn witness_step(witness: &[String]) -> Result<Value> {
    let mut step = Map::new();
    for text in witness {
        let parsed = parse_script(text).with_context(|| format!("witness {text}"))?;
        let defs: Vec<&Definition> = parsed
            .commands
            .iter()
            .filter_map(|c| match c {
                Command::DefineFun(d) => Some(d),
                _ => None,
            })
            .collect();
        if defs.is_empty() {
            bail!("witness holds no define-fun: {text}");
        }
        for d in defs {
            let (name, entry) = definition_reply(d);
            step.insert(name, entry);
        }
    }
    Ok(Value::Object(step))
}

/// A store answering the first iteration on every manifest instance that
/// has a witness with that witness. Returns the store and the count of
/// instances covered.
pub fn fixtures_from_manifest(manifest_path: &Path) -> Result<(ReplayStore, usize)> {
    let manifest = BenchManifest::load(manifest_path).with_context(|| format!("loading {}", manifest_path.display()))?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut responses = BTreeMap::new();
    let mut covered = 0;
    for entry in &manifest.instances {
        let Some(witness) = &entry.witness else { continue };
        let path = root.join(&entry.file);
        let script = read_script(&path)?;
        let step = witness_step(witness)?;
        let store = chain_fixture(&script, &[step]);
        responses.extend(store.responses().clone());
        covered += 1;
    }
    Ok((ReplayStore::new(responses), covered))
}

pub fn read_script(path: &Path) -> Result<Script> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_script(&text).with_context(|| format!("parsing {}", path.display()))
}

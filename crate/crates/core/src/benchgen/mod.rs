//! Generators for the two benchmark families: sums of three squares, and
//! functional constraints in four categories. Each instance records its
//! expected status and, when one is known by construction, a witness.

mod mfd;
mod poly;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instantiate::Instantiation;
use crate::smtlib::{print_script, Command, FunctionSignature, Script, Sort, Symbol, Term};

pub use mfd::{gen_mfd_instance, MfdCategory, MfdParams};
pub use poly::{monomials, q, Polynomial};

pub const LOGIC: &str = "UFNIRA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Sat,
    Unsat,
    Unknown,
}

impl Expected {
    pub fn as_str(self) -> &'static str {
        match self {
            Expected::Sat => "sat",
            Expected::Unsat => "unsat",
            Expected::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub file: PathBuf,
    pub family: String,
    pub params: serde_json::Value,
    pub expected: Expected,
    /// define-fun texts, one per function, when a witness is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub instances: Vec<ManifestEntry>,
}

impl BenchManifest {
    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// One point of the SOS grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SosParams {
    /// Number of variables, 1 to 3.
    pub n: usize,
    /// Number of source polynomials, 1 to 4.
    pub m: usize,
    pub max_degree: u32,
    pub coef_bound: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SosGrid {
    pub ns: Vec<usize>,
    pub ms: Vec<usize>,
    pub per_cell: usize,
    pub max_degree: u32,
    pub coef_bound: i64,
}

impl Default for SosGrid {
    fn default() -> Self {
        SosGrid { ns: vec![1, 2, 3], ms: vec![1, 2, 3, 4], per_cell: 50, max_degree: 2, coef_bound: 5 }
    }
}

impl SosGrid {
    pub fn cells(&self) -> Vec<SosParams> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &m in &self.ms {
                out.push(SosParams { n, m, max_degree: self.max_degree, coef_bound: self.coef_bound });
            }
        }
        out
    }
}

/// A generated script together with the data behind it.
#[derive(Debug, Clone)]
pub struct Generated {
    pub script: Script,
    pub expected: Expected,
    pub witness: Option<Vec<Instantiation>>,
    pub params: serde_json::Value,
}

pub const SOS_FUNCTIONS: [&str; 3] = ["f_a", "f_b", "f_c"];
const SOS_VARS: [&str; 3] = ["x", "y", "z"];

pub fn sos_variables(n: usize) -> Vec<Symbol> {
    SOS_VARS[..n].iter().map(|v| Symbol::from(*v)).collect()
}

/// Samples `m` source polynomials, expands F = Σ pᵢ², and asks for three
/// functions whose squares sum to F everywhere. With m ≤ 3 the sources
/// padded by zero are a witness; m = 4 is left unknown.
pub fn gen_sos_instance(params: &SosParams, rng: &mut impl Rng) -> Generated {
    assert!((1..=3).contains(&params.n), "n must be 1..=3");
    assert!(params.m >= 1, "m must be positive");
    let vars = sos_variables(params.n);
    let sources: Vec<Polynomial> =
        (0..params.m).map(|_| Polynomial::random(&vars, params.max_degree, params.coef_bound, rng)).collect();
    sos_from_sources(params, sources)
}

/// The SOS instance for fixed source polynomials over `sos_variables(n)`.
pub fn sos_from_sources(params: &SosParams, sources: Vec<Polynomial>) -> Generated {
    let vars = sos_variables(params.n);
    let f = sources.iter().fold(Polynomial::zero(&vars), |acc, p| &acc + &p.square());

    let binder: Vec<(Symbol, Sort)> = vars.iter().map(|v| (v.clone(), Sort::Real)).collect();
    let args: Vec<Term> = vars.iter().map(|v| Term::Var(v.clone())).collect();
    let squares: Vec<Term> = SOS_FUNCTIONS
        .iter()
        .map(|g| {
            let app = Term::app(*g, args.clone());
            Term::op(crate::smtlib::Op::Mul, vec![app.clone(), app])
        })
        .collect();
    let body = Term::eq(Term::op(crate::smtlib::Op::Add, squares), f.to_term());
    let mut commands = vec![Command::SetLogic(LOGIC.into())];
    for g in SOS_FUNCTIONS {
        commands.push(Command::DeclareFun(FunctionSignature {
            name: g.into(),
            arg_sorts: vec![Sort::Real; params.n],
            ret_sort: Sort::Real,
            interpreted: false,
        }));
    }
    commands.push(Command::Assert(Term::forall(binder, body)));
    commands.push(Command::CheckSat);

    let (expected, witness) = if params.m <= 3 {
        let params_x: Vec<(Symbol, Sort)> = (0..params.n).map(|i| (Symbol::new(format!("x{i}")), Sort::Real)).collect();
        let xs: Vec<Term> = params_x.iter().map(|(v, _)| Term::Var(v.clone())).collect();
        let zero = Polynomial::zero(&vars);
        let w = SOS_FUNCTIONS
            .iter()
            .enumerate()
            .map(|(i, g)| Instantiation {
                function: (*g).into(),
                params: params_x.clone(),
                ret_sort: Sort::Real,
                body: sources.get(i).unwrap_or(&zero).to_term_with(&xs),
            })
            .collect();
        (Expected::Sat, Some(w))
    } else {
        (Expected::Unknown, None)
    };
    Generated {
        script: Script::new(commands),
        expected,
        witness,
        params: serde_json::json!({
            "n": params.n,
            "m": params.m,
            "max_degree": params.max_degree,
            "coef_bound": params.coef_bound,
            "sources": sources.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub sos: Option<SosGrid>,
    pub mfd: Option<MfdParams>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, sos: Some(SosGrid::default()), mfd: Some(MfdParams::default()) }
    }
}

/// Per-instance seed: instance `index` of a suite draws from its own
/// stream, so instances do not depend on each other.
pub fn instance_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn write_instance(out_dir: &Path, rel: PathBuf, family: &str, g: Generated, seed: u64) -> io::Result<ManifestEntry> {
    let path = out_dir.join(&rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, print_script(&g.script))?;
    Ok(ManifestEntry {
        file: rel,
        family: family.into(),
        params: g.params,
        expected: g.expected,
        witness: g.witness.map(|w| w.iter().map(|i| i.to_string()).collect()),
        seed,
    })
}

/// Writes every instance of the configured families under `out_dir`,
/// plus `manifest.json`. The output depends only on `config`.
pub fn gen_suite(config: &SuiteConfig, out_dir: &Path) -> io::Result<BenchManifest> {
    fs::create_dir_all(out_dir)?;
    let mut manifest = BenchManifest::default();
    let mut index = 0u64;
    if let Some(grid) = &config.sos {
        for cell in grid.cells() {
            for i in 0..grid.per_cell {
                let seed = instance_seed(config.seed, index);
                index += 1;
                let g = gen_sos_instance(&cell, &mut ChaCha8Rng::seed_from_u64(seed));
                let rel = PathBuf::from(format!("sos/n{}_m{}_{i:03}.smt2", cell.n, cell.m));
                manifest.instances.push(write_instance(out_dir, rel, "sos", g, seed)?);
            }
        }
    }
    if let Some(mfd) = &config.mfd {
        for cat in MfdCategory::ALL {
            for i in 0..mfd.per_category {
                let seed = instance_seed(config.seed, index);
                index += 1;
                let g = gen_mfd_instance(cat, i, mfd, &mut ChaCha8Rng::seed_from_u64(seed));
                let rel = PathBuf::from(format!("mfd/{}_{i:03}.smt2", cat.name()));
                manifest.instances.push(write_instance(out_dir, rel, &format!("mfd-{}", cat.name()), g, seed)?);
            }
        }
    }
    let json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    fs::write(out_dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

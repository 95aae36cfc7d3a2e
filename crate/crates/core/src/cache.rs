//! Versioned JSON cache for solved boundaries.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::{Boundary, SolverSettings};
use crate::error::{Error, Result};
use crate::model::{CostSpec, ModelParams};

pub const CACHE_VERSION: u32 = 1;

#[derive(Serialize)]
struct DigestInput<'a> {
    params: &'a ModelParams,
    cost: &'a CostSpec,
    settings: &'a SolverSettings,
}

/// SHA-256 over the JSON encoding of everything that determines a solve.
pub fn params_digest(params: &ModelParams, cost: &CostSpec, settings: &SolverSettings) -> String {
    let json = serde_json::to_vec(&DigestInput {
        params,
        cost,
        settings,
    })
    .expect("plain structs serialize");
    let hash = Sha256::digest(&json);
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct Record {
    version: u32,
    params_digest: String,
    boundary: Boundary,
}

pub fn save(path: &Path, boundary: &Boundary) -> Result<()> {
    let rec = Record {
        version: CACHE_VERSION,
        params_digest: boundary.params_digest.clone(),
        boundary: boundary.clone(),
    };
    let text = serde_json::to_string_pretty(&rec)?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Boundary> {
    let text = fs::read_to_string(path)?;
    let rec: Record = serde_json::from_str(&text)?;
    if rec.version != CACHE_VERSION {
        return Err(Error::Cache(format!(
            "cache version {} is not supported (expected {CACHE_VERSION})",
            rec.version
        )));
    }
    let b = rec.boundary;
    let recomputed = params_digest(&b.params, &b.cost, &b.settings);
    if rec.params_digest != b.params_digest || recomputed != b.params_digest {
        return Err(Error::Cache("cache digest does not match its contents".into()));
    }
    Ok(b)
}

/// Loads the cache only if it was produced by exactly these inputs.
pub fn load_matching(
    path: &Path,
    params: &ModelParams,
    cost: &CostSpec,
    settings: &SolverSettings,
) -> Result<Option<Boundary>> {
    if !path.exists() {
        return Ok(None);
    }
    let b = load(path)?;
    if b.params_digest == params_digest(params, cost, settings) {
        Ok(Some(b))
    } else {
        Ok(None)
    }
}

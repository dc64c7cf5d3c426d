use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::output::{io, OutDir};
use jeaae_core::Result;

pub const MANIFEST_FILE: &str = "run-manifest.json";

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Everything needed to rerun a subcommand: tool version, the exact
/// arguments, resolved parameters and digests of every input and output.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: &'a str,
    version: &'a str,
    subcommand: &'a str,
    arguments: Vec<String>,
    seed: Option<u64>,
    parameters: &'a Value,
    config_sha256: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_file(path: &Path, shown: String) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| io(path, e))?;
    Ok(FileDigest {
        path: shown,
        sha256: sha256_hex(&bytes),
    })
}

/// Writes the run manifest last, after every other output exists.
pub fn write_manifest(
    out: &mut OutDir,
    subcommand: &str,
    seed: Option<u64>,
    parameters: &impl Serialize,
    inputs: &[&Path],
) -> Result<()> {
    let parameters = serde_json::to_value(parameters).map_err(|e| jeaae_core::Error::Serde(e.to_string()))?;
    let config_sha256 = sha256_hex(parameters.to_string().as_bytes());
    let inputs = inputs
        .iter()
        .map(|p| digest_file(p, p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let outputs = out
        .written()
        .to_vec()
        .into_iter()
        .map(|name| digest_file(&out.root().join(&name), name))
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        tool: "jeaae",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        arguments: std::env::args().skip(1).collect(),
        seed,
        parameters: &parameters,
        config_sha256,
        inputs,
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| jeaae_core::Error::Serde(e.to_string()))?;
    text.push('\n');
    out.write(MANIFEST_FILE, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

//! File IO: archive/snapshot readers (with transparent gzip), atomic
//! artifact writes and sha256 manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flate2::read::GzDecoder;
use serde::Serialize;
use sha2::{Digest, Sha256};

use vpset_core::ingest::{parse_update_line, BgpUpdate, RibTable, UpdateKind};

/// Read a whole file as text, gunzipping `.gz` paths transparently.
pub fn read_text(path: &Path) -> Result<String> {
    let mut file = File::open(path).with_context(|| format!("open {}", path.display()))?;
    let mut text = String::new();
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(file)
            .read_to_string(&mut text)
            .with_context(|| format!("gunzip {}", path.display()))?;
    } else {
        file.read_to_string(&mut text)
            .with_context(|| format!("read {}", path.display()))?;
    }
    Ok(text)
}

/// Parse one archive file of canonical update lines. Blank and `#` lines
/// are skipped.
pub fn read_archive_file(path: &Path) -> Result<Vec<BgpUpdate>> {
    let text = read_text(path)?;
    let mut updates = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let u = parse_update_line(line, i + 1)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        updates.push(u);
    }
    Ok(updates)
}

/// Merge archive files into one stream sorted by (timestamp, vp_id),
/// stably, so same-time updates keep their file order.
pub fn read_archive(paths: &[PathBuf]) -> Result<Vec<BgpUpdate>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_archive_file(p)?);
    }
    all.sort_by(|a, b| (a.timestamp, &a.vp_id).cmp(&(b.timestamp, &b.vp_id)));
    Ok(all)
}

/// Read a RIB snapshot: `#RIB vp_id timestamp` header followed by announce
/// lines in the canonical update format.
pub fn read_snapshot(path: &Path) -> Result<RibTable> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .with_context(|| format!("{}: empty snapshot", path.display()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "#RIB" {
        bail!(
            "{}: expected `#RIB vp_id timestamp` header, got `{header}`",
            path.display()
        );
    }
    let vp_id = parts[1].to_string();
    let as_of: u64 = parts[2]
        .parse()
        .with_context(|| format!("{}: bad snapshot timestamp `{}`", path.display(), parts[2]))?;
    let mut rib = RibTable::new(vp_id.clone(), as_of);
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let u = parse_update_line(line, i + 1)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        if u.kind != UpdateKind::Announce {
            bail!("{}: line {}: snapshots may only contain announcements", path.display(), i + 1);
        }
        if u.vp_id != vp_id {
            bail!(
                "{}: line {}: vp_id {} does not match snapshot header {}",
                path.display(),
                i + 1,
                u.vp_id,
                vp_id
            );
        }
        rib.apply(&u);
    }
    Ok(rib)
}

pub fn read_snapshots(paths: &[PathBuf]) -> Result<BTreeMap<String, RibTable>> {
    let mut out = BTreeMap::new();
    for p in paths {
        let rib = read_snapshot(p)?;
        if out.insert(rib.vp_id.clone(), rib).is_some() {
            bail!("{}: duplicate snapshot for a vp_id", p.display());
        }
    }
    Ok(out)
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let mut file = File::open(path).with_context(|| format!("open {}", path.display()))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

/// Write via a temp file in the same directory plus rename, so a crash
/// never leaves a truncated artifact behind.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact")
    ));
    std::fs::write(&tmp, contents).with_context(|| format!("write {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("rename into {}", path.display()))?;
    Ok(())
}

/// Provenance record written beside every artifact.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub seed: u64,
    /// Input path -> sha256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(stage: &str, seed: u64) -> Self {
        Manifest {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_inputs(&mut self, paths: &[&Path]) -> Result<()> {
        for p in paths {
            self.inputs
                .insert(p.display().to_string(), sha256_hex(p)?);
        }
        Ok(())
    }
}

/// Write an artifact and its `<name>.manifest.json` sidecar atomically.
pub fn write_artifact(
    out_dir: &Path,
    name: &str,
    contents: &str,
    mut manifest: Manifest,
) -> Result<PathBuf> {
    let path = out_dir.join(name);
    atomic_write(&path, contents)?;
    manifest.outputs.push(name.to_string());
    let json = serde_json::to_string_pretty(&manifest)?;
    atomic_write(&out_dir.join(format!("{name}.manifest.json")), &(json + "\n"))?;
    Ok(path)
}

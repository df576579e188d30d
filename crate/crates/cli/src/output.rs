//! CSV and JSON emission. Files carry no timestamps, so a rerun with the
//! same config and seeds reproduces them byte for byte.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Categorize, Category, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where a command writes `<stem>.csv` and `<stem>.json`.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub dir: PathBuf,
    pub stem: String,
}

impl Outputs {
    pub fn resolve(cfg: &RunConfig, command: &str) -> Self {
        Self {
            dir: cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            stem: cfg.output.stem.clone().unwrap_or_else(|| command.to_string()),
        }
    }

    pub fn csv(&self) -> PathBuf {
        self.dir.join(format!("{}.csv", self.stem))
    }

    pub fn summary(&self) -> PathBuf {
        self.dir.join(format!("{}.json", self.stem))
    }
}

/// Renders the metadata header and the CSV body.
pub fn render_csv<R: Serialize>(command: &str, units: &str, cfg: &RunConfig, rows: &[R]) -> CliResult<Vec<u8>> {
    let mut out = format!("# wmpa {command} {VERSION}\n# units: {units}\n# config: {}\n", cfg.echo()).into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).category(Category::Io)?;
    }
    out.extend(w.into_inner().map_err(|e| anyhow::anyhow!("{e}")).category(Category::Io)?);
    Ok(out)
}

#[derive(Serialize)]
struct SummaryDoc<'a, S> {
    command: &'a str,
    version: &'a str,
    units: &'a str,
    config: &'a RunConfig,
    summary: &'a S,
}

pub fn render_summary<S: Serialize>(command: &str, units: &str, cfg: &RunConfig, summary: &S) -> CliResult<Vec<u8>> {
    let doc = SummaryDoc { command, version: VERSION, units, config: cfg, summary };
    let mut out = serde_json::to_vec_pretty(&doc).category(Category::Io)?;
    out.push(b'\n');
    Ok(out)
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| anyhow::anyhow!("creating {}: {e}", dir.display()))
            .category(Category::Io)?;
    }
    std::fs::write(path, bytes)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
        .category(Category::Io)
}

/// Writes both files and reports their paths on stderr.
pub fn emit<R: Serialize, S: Serialize>(
    out: &Outputs,
    command: &str,
    units: &str,
    cfg: &RunConfig,
    rows: &[R],
    summary: &S,
) -> CliResult<()> {
    write(&out.csv(), &render_csv(command, units, cfg, rows)?)?;
    write(&out.summary(), &render_summary(command, units, cfg, summary)?)?;
    eprintln!("wrote {} and {}", out.csv().display(), out.summary().display());
    Ok(())
}

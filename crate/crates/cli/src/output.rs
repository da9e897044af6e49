use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped on every file a run writes.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

impl Meta {
    fn lines(&self) -> [String; 2] {
        [
            format!("{} {} {}", self.tool, self.version, self.command),
            format!("config {} seed {}", self.config_hash, self.seed),
        ]
    }

    /// `#` comment lines, valid in both TOML and our CSV readers.
    pub fn hash_comment(&self) -> String {
        self.lines().iter().map(|l| format!("# {l}\n")).collect()
    }

    pub fn xml_comment(&self) -> String {
        let [a, b] = self.lines();
        format!("<!-- {a}; {b} -->\n")
    }
}

#[derive(Serialize)]
struct Stamped<'a, T> {
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a T,
}

pub struct OutputDir {
    dir: PathBuf,
    pub meta: Meta,
    pub written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path, meta: Meta) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputDir { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Text that another command reads back; provenance goes in comments.
    pub fn write_document(&mut self, name: &str, toml_text: &str) -> Result<PathBuf, CliError> {
        let text = format!("{}{toml_text}", self.meta.hash_comment());
        self.write(name, &text)
    }

    /// A summary with a `[meta]` table.
    pub fn write_summary<T: Serialize>(&mut self, name: &str, body: &T) -> Result<PathBuf, CliError> {
        let stamped = Stamped { meta: &self.meta, body };
        let text = toml::to_string(&stamped).map_err(|e| CliError::Io(format!("cannot serialize {name}: {e}")))?;
        self.write(name, &text)
    }

    pub fn write_csv(&mut self, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
        let text = format!("{}{}", self.meta.hash_comment(), String::from_utf8_lossy(body));
        self.write(name, &text)
    }

    pub fn write_svg(&mut self, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
        let svg = String::from_utf8_lossy(body);
        // The comment goes after the root tag's opening so the file stays a plain SVG.
        let text = match svg.find('>') {
            Some(i) => format!("{}\n{}{}", &svg[..=i], self.meta.xml_comment(), svg[i + 1..].trim_start_matches('\n')),
            None => svg.into_owned(),
        };
        self.write(name, &text)
    }
}

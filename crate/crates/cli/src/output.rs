use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::OutputArgs;

/// Read a config file and hand it to a strict parser.
pub fn load<T>(path: &Path, parse: fn(&str) -> bfly_core::Result<T>) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("{}", path.display()))
}

/// Same, for types with no dedicated parser.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}", path.display()))
}

/// The only place output is written.
pub fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            s.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: &'a T,
}

pub fn json_report<T: Serialize>(manifest: &RunManifest, body: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Wrapped { manifest, body }).expect("report serializes");
    s.push('\n');
    s
}

/// CSV document: manifest line, then `# ` notes, then header and rows.
pub struct Csv {
    preamble: String,
    notes: String,
    body: String,
}

impl Csv {
    pub fn new(manifest: &RunManifest, header: &[&str]) -> Self {
        Csv {
            preamble: manifest.csv_line(),
            notes: String::new(),
            body: header.join(",") + "\n",
        }
    }

    pub fn note(&mut self, line: &str) {
        self.notes.push_str("# ");
        self.notes.push_str(line);
        self.notes.push('\n');
    }

    pub fn row(&mut self, fields: &[String]) {
        self.body.push_str(&fields.join(","));
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        self.preamble + &self.notes + &self.body
    }
}

pub fn manifest_for(sub: &'static str, out: &OutputArgs) -> RunManifest {
    RunManifest::new(sub).output(out.out.as_deref())
}

use std::collections::HashSet;
use std::fmt;
use std::path::{Component, Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::RankLabel;

const HEADER: [&str; 4] = ["path", "severity", "split", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Image path relative to the manifest's directory.
    pub path: String,
    pub severity: RankLabel,
    pub split: Split,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Self {
        Self {
            root: root.into(),
            entries,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn image_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn mask_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(mask_path_for(&entry.path))
    }
}

/// Ground-truth masks sit next to their image: `a/b.ogt` → `a/b.mask.ogt`.
pub fn mask_path_for(image: &str) -> String {
    match image.strip_suffix(".ogt") {
        Some(stem) => format!("{stem}.mask.ogt"),
        None => format!("{image}.mask.ogt"),
    }
}

fn is_plain_relative(p: &str) -> bool {
    let path = Path::new(p);
    !p.is_empty() && path.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

/// Parses and validates a manifest. Row numbers in errors count data rows
/// from 1, header excluded.
pub fn load_manifest(path: &Path, num_classes: usize) -> Result<Manifest> {
    let text = super::read_to_string(path)?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let err = |row: usize, message: String| Error::Manifest {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| err(0, format!("unreadable header: {e}")))?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(err(0, format!("header must be {:?}, found {:?}", HEADER.join(","), header)));
    }

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| err(row, e.to_string()))?;
        let (p, sev, split, seed) = (&record[0], &record[1], &record[2], &record[3]);
        if !is_plain_relative(p) {
            return Err(err(row, format!("path {p:?} must be relative without '..'")));
        }
        if !seen.insert(p.to_string()) {
            return Err(err(row, format!("duplicate path {p:?}")));
        }
        let sev: usize = sev
            .parse()
            .map_err(|_| err(row, format!("severity {sev:?} is not an integer")))?;
        let severity = RankLabel::new(sev, num_classes).map_err(|e| err(row, e.to_string()))?;
        let split = split.parse::<Split>().map_err(|e| err(row, e))?;
        let seed = seed
            .parse::<u64>()
            .map_err(|_| err(row, format!("seed {seed:?} is not a u64")))?;
        if !root.join(p).is_file() {
            return Err(err(row, format!("missing file {}", root.join(p).display())));
        }
        entries.push(ManifestEntry {
            path: p.to_string(),
            severity,
            split,
            seed,
        });
    }
    Ok(Manifest { root, entries })
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("manifest encoding: {e}"));
    w.write_record(HEADER).map_err(csv_err)?;
    for e in entries {
        w.write_record([
            e.path.as_str(),
            &e.severity.value().to_string(),
            e.split.name(),
            &e.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("manifest encoding: {e}")))?;
    super::write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn setup(rows: &str, files: &[&str]) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        for f in files {
            fs::write(dir.path().join(f), b"x").unwrap();
        }
        let path = dir.path().join("manifest.csv");
        fs::write(&path, format!("path,severity,split,seed\n{rows}")).unwrap();
        (dir, path)
    }

    #[test]
    fn well_formed() {
        let (_d, p) = setup("a.ogt,1,train,5\nb.ogt,2,val,6\nc.ogt,3,test,7\n", &["a.ogt", "b.ogt", "c.ogt"]);
        let m = load_manifest(&p, 3).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.entries()[1].severity.value(), 2);
        assert_eq!(m.entries()[2].split, Split::Test);
        assert_eq!(m.split(Split::Train).count(), 1);
    }

    #[test]
    fn duplicate_names_row() {
        let (_d, p) = setup("a.ogt,1,train,5\na.ogt,2,val,6\n", &["a.ogt"]);
        match load_manifest(&p, 3) {
            Err(Error::Manifest { row, message, .. }) => {
                assert_eq!(row, 2);
                assert!(message.contains("duplicate"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn label_out_of_range() {
        let (_d, p) = setup("a.ogt,4,train,5\n", &["a.ogt"]);
        assert!(matches!(load_manifest(&p, 3), Err(Error::Manifest { row: 1, .. })));
    }

    #[test]
    fn missing_file_and_bad_fields() {
        let (_d, p) = setup("a.ogt,1,train,5\nz.ogt,1,train,5\n", &["a.ogt"]);
        assert!(matches!(load_manifest(&p, 3), Err(Error::Manifest { row: 2, .. })));
        let (_d, p) = setup("a.ogt,1,holdout,5\n", &["a.ogt"]);
        assert!(load_manifest(&p, 3).is_err());
        let (_d, p) = setup("../a.ogt,1,train,5\n", &[]);
        assert!(load_manifest(&p, 3).is_err());
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.ogt"), b"x").unwrap();
        let entries = vec![ManifestEntry {
            path: "a.ogt".into(),
            severity: RankLabel::new(3, 3).unwrap(),
            split: Split::Val,
            seed: u64::MAX,
        }];
        let path = dir.path().join("m.csv");
        write_manifest(&path, &entries).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("path,severity,split,seed\na.ogt,3,val,{}\n", u64::MAX));
        assert_eq!(load_manifest(&path, 3).unwrap().entries(), &entries[..]);
    }

    #[test]
    fn mask_naming() {
        assert_eq!(mask_path_for("images/p1.ogt"), "images/p1.mask.ogt");
    }
}

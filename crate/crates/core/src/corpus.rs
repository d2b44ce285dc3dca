//! Benchmark programs shaped after the example profiles: a string scanner with and without an
//! unreachable branch, an echo-like argument processor, a Luhn checksum, and a loop-free
//! advisory controller with and without an unreachable branch.

use std::fs;
use std::path::{Path, PathBuf};

use crate::concolic::Subject;
use crate::lang::{load, Diagnostics};

/// Environment variable naming a corpus directory to use instead of the built-in one.
pub const CORPUS_ENV: &str = "BRANCHCRAWLER_CORPUS";

/// Counts a corpus entry is declared to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Profile {
    pub branches: usize,
    pub unreachable: usize,
    pub loops: usize,
    /// Feasible paths under the precondition.
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: String,
    pub file: String,
    /// Which example profile the program imitates (A, ANU, E, L, T, TNU).
    pub profile: String,
    pub source: String,
    pub precondition: Option<String>,
    pub expected: Option<Profile>,
}

impl CorpusEntry {
    pub fn subject(&self) -> Result<Subject, CorpusError> {
        let program =
            load(&self.source, self.precondition.as_deref()).map_err(|d| CorpusError::Invalid {
                file: self.file.clone(),
                diagnostics: d,
            })?;
        Subject::new(program).map_err(|_| CorpusError::Overflow(self.file.clone()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {diagnostics}")]
    Invalid {
        file: String,
        diagnostics: Diagnostics,
    },
    #[error("{file}:{line}: malformed manifest row")]
    Manifest { file: String, line: usize },
    #[error("{0}: constants overflow the engine width")]
    Overflow(String),
}

const MANIFEST: &str = include_str!("../corpus/corpus.csv");

const SOURCES: [(&str, &str); 6] = [
    ("scan.bc", include_str!("../corpus/scan.bc")),
    ("scan_nu.bc", include_str!("../corpus/scan_nu.bc")),
    ("echo.bc", include_str!("../corpus/echo.bc")),
    ("luhn.bc", include_str!("../corpus/luhn.bc")),
    ("tcas.bc", include_str!("../corpus/tcas.bc")),
    ("tcas_nu.bc", include_str!("../corpus/tcas_nu.bc")),
];

struct Row {
    name: String,
    file: String,
    profile: String,
    expected: Profile,
}

fn parse_manifest(text: &str, origin: &str) -> Result<Vec<Row>, CorpusError> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || CorpusError::Manifest {
            file: origin.to_string(),
            line: n + 1,
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        rows.push(Row {
            name: f[0].to_string(),
            file: f[1].to_string(),
            profile: f[2].to_string(),
            expected: Profile {
                branches: num(f[3])?,
                unreachable: num(f[4])?,
                loops: num(f[5])?,
                paths: num(f[6])?,
            },
        });
    }
    Ok(rows)
}

/// The built-in corpus.
pub fn build_corpus() -> Vec<CorpusEntry> {
    parse_manifest(MANIFEST, "corpus.csv")
        .expect("built-in manifest is well formed")
        .into_iter()
        .map(|r| {
            let source = SOURCES
                .iter()
                .find(|(f, _)| *f == r.file)
                .map(|(_, s)| s.to_string())
                .expect("built-in manifest names a built-in file");
            CorpusEntry {
                name: r.name,
                file: r.file,
                profile: r.profile,
                source,
                precondition: None,
                expected: Some(r.expected),
            }
        })
        .collect()
}

/// Loads a corpus directory: the entries of its `corpus.csv` if present, otherwise every
/// `.bc` file in name order without declared counts.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let read =
        |p: PathBuf| fs::read_to_string(&p).map_err(|source| CorpusError::Io { path: p, source });
    let manifest = dir.join("corpus.csv");
    if manifest.exists() {
        let text = read(manifest.clone())?;
        return parse_manifest(&text, &manifest.display().to_string())?
            .into_iter()
            .map(|r| {
                Ok(CorpusEntry {
                    source: read(dir.join(&r.file))?,
                    name: r.name,
                    file: r.file,
                    profile: r.profile,
                    precondition: None,
                    expected: Some(r.expected),
                })
            })
            .collect();
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bc"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            Ok(CorpusEntry {
                file: p.file_name().unwrap().to_string_lossy().into_owned(),
                profile: "-".to_string(),
                source: read(p)?,
                name,
                precondition: None,
                expected: None,
            })
        })
        .collect()
}

/// The corpus directory named by the environment, or the built-in corpus.
pub fn corpus_from_env() -> Result<Vec<CorpusEntry>, CorpusError> {
    match std::env::var_os(CORPUS_ENV) {
        Some(dir) => load_corpus_dir(Path::new(&dir)),
        None => Ok(build_corpus()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_entries_load() {
        let corpus = build_corpus();
        assert_eq!(corpus.len(), 6);
        for e in &corpus {
            let s = e.subject().unwrap();
            let p = e.expected.unwrap();
            assert_eq!(s.cfg().branch_count(), p.branches, "{}", e.name);
            assert_eq!(s.program().loop_count(), p.loops, "{}", e.name);
        }
    }

    #[test]
    fn profile_rows() {
        let corpus = build_corpus();
        let get = |p: &str| {
            corpus
                .iter()
                .find(|e| e.profile == p)
                .unwrap()
                .expected
                .unwrap()
        };
        assert_eq!(get("T").loops, 0);
        assert_eq!(get("L").unreachable, 2);
        assert_eq!(get("ANU").unreachable, 0);
    }

    #[test]
    fn directory_without_manifest() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.bc"), "fun b(x: int[0..1]) { skip; }").unwrap();
        fs::write(dir.path().join("a.bc"), "fun a(x: int[0..1]) { skip; }").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let c = load_corpus_dir(dir.path()).unwrap();
        assert_eq!(
            c.iter().map(|e| e.name.as_str()).collect::<Vec<_>>(),
            ["a", "b"]
        );
        assert!(c[0].expected.is_none());
    }
}

//! On-disk database: the saved corpus plus its derived tables.
//!
//! A database is a directory holding
//!
//! ```text
//! meta        format line and the corpus checksum
//! corpus.sg   saved corpus
//! index.tsv   inverted index
//! sag.tsv     subject aggregate graph
//! oag.tsv     object aggregate graph
//! pag.tsv     predicate aggregate graph
//! ```
//!
//! Saving writes a sibling temporary directory and renames it into place, so
//! readers never see a half-written database.

use std::fmt::Display;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregates::{
    build_aggregates, Aggregates, ObjectAggregateGraph, PairIndex, PredicateAggregateGraph,
    SubjectAggregateGraph, OAG_HEADER, PAG_HEADER, SAG_HEADER,
};
use crate::corpus::{corpus_bytes, read_saved_corpus, Corpus, CorpusError};
use crate::index::{build_index, InvertedIndex};
use crate::lexicon::Lexicon;

pub const DB_FORMAT: &str = "sgreti-db 1";

const META: &str = "meta";
const CORPUS: &str = "corpus.sg";
const INDEX: &str = "index.tsv";
const SAG: &str = "sag.tsv";
const OAG: &str = "oag.tsv";
const PAG: &str = "pag.tsv";

/// Problems reading one of the tab-separated tables.
#[derive(Debug, Error)]
pub enum TableError {
    #[error("expected header {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TableError {
    pub fn line(line: usize, message: impl Display) -> TableError {
        TableError::Line {
            line,
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Table { path: PathBuf, source: TableError },
    #[error("{path}: {source}")]
    Corpus { path: PathBuf, source: CorpusError },
    #[error("{0}: not a database (bad meta file)")]
    Meta(PathBuf),
    #[error("{0}: corpus checksum does not match meta")]
    Checksum(PathBuf),
    #[error("{0}: stored tables disagree with the corpus")]
    Stale(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub corpus: Corpus,
    pub aggregates: Aggregates,
    pub index: InvertedIndex,
}

impl Database {
    pub fn build(corpus: Corpus) -> Database {
        let aggregates = build_aggregates(&corpus);
        let index = build_index(&corpus);
        Database {
            corpus,
            aggregates,
            index,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DbError + '_ {
    move |source| DbError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_files(dir: &Path, db: &Database) -> Result<(), DbError> {
    fs::create_dir(dir).map_err(io_err(dir))?;
    let corpus = corpus_bytes(&db.corpus);
    let meta = format!(
        "{DB_FORMAT}\ncorpus-sha256 {}\n",
        hex::encode(Sha256::digest(&corpus))
    );
    let files: [(&str, Vec<u8>); 6] = [
        (CORPUS, corpus),
        (INDEX, db.index.to_tsv().into_bytes()),
        (
            SAG,
            db.aggregates.subjects.0.to_tsv(SAG_HEADER).into_bytes(),
        ),
        (OAG, db.aggregates.objects.0.to_tsv(OAG_HEADER).into_bytes()),
        (
            PAG,
            db.aggregates.predicates.0.to_tsv(PAG_HEADER).into_bytes(),
        ),
        // meta last: its presence marks a complete write.
        (META, meta.into_bytes()),
    ];
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Writes `db` to `dir`, replacing any database already there.
pub fn save_database(dir: &Path, db: &Database) -> Result<(), DbError> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => PathBuf::from("."),
    };
    let name = dir
        .file_name()
        .ok_or_else(|| DbError::Meta(dir.to_owned()))?
        .to_string_lossy()
        .into_owned();
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let pid = std::process::id();
    let tmp = parent.join(format!(".{name}.tmp-{pid}"));
    let old = parent.join(format!(".{name}.old-{pid}"));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
    }
    if let Err(e) = write_files(&tmp, db) {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    // A directory cannot be renamed over a non-empty one.
    let replacing = dir.exists();
    if replacing {
        fs::rename(dir, &old).map_err(io_err(dir))?;
    }
    if let Err(source) = fs::rename(&tmp, dir) {
        if replacing {
            let _ = fs::rename(&old, dir);
        }
        let _ = fs::remove_dir_all(&tmp);
        return Err(DbError::Io {
            path: dir.to_owned(),
            source,
        });
    }
    if replacing {
        fs::remove_dir_all(&old).map_err(io_err(&old))?;
    }
    Ok(())
}

fn read_pairs(dir: &Path, name: &str, header: &str) -> Result<PairIndex, DbError> {
    let path = dir.join(name);
    let file = fs::File::open(&path).map_err(io_err(&path))?;
    PairIndex::from_tsv(BufReader::new(file), header)
        .map_err(|source| DbError::Table { path, source })
}

/// Loads a database, checking the corpus checksum, that the stored tables
/// match the corpus and, given a lexicon, that every synset is in it.
pub fn load_database(dir: &Path, lexicon: Option<&Lexicon>) -> Result<Database, DbError> {
    let meta_path = dir.join(META);
    let meta = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let mut lines = meta.lines();
    if lines.next() != Some(DB_FORMAT) {
        return Err(DbError::Meta(meta_path));
    }
    let expected = lines
        .next()
        .and_then(|l| l.strip_prefix("corpus-sha256 "))
        .ok_or_else(|| DbError::Meta(meta_path.clone()))?;

    let corpus_path = dir.join(CORPUS);
    let bytes = fs::read(&corpus_path).map_err(io_err(&corpus_path))?;
    if hex::encode(Sha256::digest(&bytes)) != expected {
        return Err(DbError::Checksum(corpus_path));
    }
    let corpus = read_saved_corpus(bytes.as_slice())
        .and_then(|c| match lexicon {
            Some(lex) => c.validate_synsets(lex).map(|_| c),
            None => Ok(c),
        })
        .map_err(|source| DbError::Corpus {
            path: corpus_path.clone(),
            source,
        })?;

    let index_path = dir.join(INDEX);
    let file = fs::File::open(&index_path).map_err(io_err(&index_path))?;
    let index = InvertedIndex::from_tsv(BufReader::new(file)).map_err(|source| DbError::Table {
        path: index_path,
        source,
    })?;
    let aggregates = Aggregates {
        subjects: SubjectAggregateGraph(read_pairs(dir, SAG, SAG_HEADER)?),
        objects: ObjectAggregateGraph(read_pairs(dir, OAG, OAG_HEADER)?),
        predicates: PredicateAggregateGraph(read_pairs(dir, PAG, PAG_HEADER)?),
    };
    let db = Database {
        corpus,
        aggregates,
        index,
    };
    if db != Database::build(db.corpus.clone()) {
        return Err(DbError::Stale(dir.to_owned()));
    }
    Ok(db)
}

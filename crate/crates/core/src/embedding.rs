//! Token vectors, synset centroids and cosine node distances.

use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

use crate::lexicon::{Lexicon, LexiconError, SynsetId};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("missing `N D` header line")]
    MissingHeader,
    #[error("line 1: malformed header {0:?}")]
    BadHeader(String),
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: component {value:?} is not a finite number")]
    NonNumeric { line: usize, value: String },
    #[error("line {line}: duplicate token {token:?}")]
    DuplicateToken { line: usize, token: String },
    #[error("header declares {declared} rows but file has {found}")]
    RowCount { declared: usize, found: usize },
    #[error("vector dimensions differ ({0} vs {1})")]
    Mismatch(usize, usize),
    #[error("cosine of a zero vector is undefined")]
    ZeroVector,
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense vector of finite components.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Vector {
        debug_assert!(components.iter().all(|c| c.is_finite()));
        Vector(components)
    }

    pub fn zeros(dimension: usize) -> Vector {
        Vector(vec![0.0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    fn add_assign(&mut self, other: &Vector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    fn scale(mut self, factor: f64) -> Vector {
        for c in &mut self.0 {
            *c *= factor;
        }
        self
    }
}

impl From<Vec<f64>> for Vector {
    fn from(components: Vec<f64>) -> Vector {
        Vector::new(components)
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dimension: usize,
    table: HashMap<String, Vector>,
}

impl EmbeddingStore {
    pub fn new(dimension: usize) -> EmbeddingStore {
        assert!(dimension > 0, "embedding dimension must be positive");
        EmbeddingStore {
            dimension,
            table: HashMap::new(),
        }
    }

    /// Inserts a vector, returning `false` when the token was already present.
    pub fn insert(&mut self, token: &str, vector: Vector) -> Result<bool, EmbeddingError> {
        if vector.dimension() != self.dimension {
            return Err(EmbeddingError::Mismatch(vector.dimension(), self.dimension));
        }
        Ok(self.table.insert(token.to_lowercase(), vector).is_none())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Raw table lookup, no compound handling.
    pub fn get(&self, token: &str) -> Option<&Vector> {
        self.table.get(token)
    }

    /// Vector for a word or compound.
    ///
    /// A compound `w1_w2..` present as a joined token gets
    /// `0.5 * (v_w + sum v_wi)`; otherwise the sum of whichever components
    /// are known. Unknown components are skipped.
    pub fn token_vector(&self, token: &str) -> Option<Vector> {
        let token = token.trim().to_lowercase();
        let parts: Vec<&str> = token
            .split(|c: char| c == '_' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        match parts.len() {
            0 => None,
            1 => self.table.get(parts[0]).cloned(),
            _ => {
                let joined = parts.join("_");
                let mut sum: Option<Vector> = None;
                for part in &parts {
                    if let Some(v) = self.table.get(*part) {
                        match &mut sum {
                            Some(acc) => acc.add_assign(v),
                            None => sum = Some(v.clone()),
                        }
                    }
                }
                match (self.table.get(&joined), sum) {
                    (Some(whole), Some(sum)) => {
                        let mut v = whole.clone();
                        v.add_assign(&sum);
                        Some(v.scale(0.5))
                    }
                    (Some(whole), None) => Some(whole.clone().scale(0.5)),
                    (None, sum) => sum,
                }
            }
        }
    }

    /// Centroid of the synset's resolvable lemma vectors.
    pub fn synset_vector(
        &self,
        lexicon: &Lexicon,
        synset: &SynsetId,
    ) -> Result<Option<Vector>, EmbeddingError> {
        let synset = lexicon
            .get(synset)
            .ok_or_else(|| LexiconError::UnknownSynset(synset.to_string()))?;
        let mut sum = Vector::zeros(self.dimension);
        let mut count = 0usize;
        for lemma in &synset.lemmas {
            if let Some(v) = self.token_vector(lemma) {
                sum.add_assign(&v);
                count += 1;
            }
        }
        Ok(match count {
            0 => None,
            1 => Some(sum),
            n => Some(sum.scale(1.0 / n as f64)),
        })
    }
}

pub fn cosine_similarity(u: &Vector, v: &Vector) -> Result<f64, EmbeddingError> {
    if u.dimension() != v.dimension() {
        return Err(EmbeddingError::Mismatch(u.dimension(), v.dimension()));
    }
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    // dot / (|u| |v|) can round just below 1 for identical vectors.
    if u.0 == v.0 {
        return Ok(1.0);
    }
    let dot: f64 = u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// `1 - max(0, cos)`, or 1 when either side has no usable vector.
pub fn node_distance(
    image: Option<&Vector>,
    query: Option<&Vector>,
) -> Result<f64, EmbeddingError> {
    match (image, query) {
        (Some(a), Some(b)) => {
            if a.dimension() != b.dimension() {
                return Err(EmbeddingError::Mismatch(a.dimension(), b.dimension()));
            }
            if a.is_zero() || b.is_zero() {
                return Ok(1.0);
            }
            Ok(1.0 - cosine_similarity(a, b)?.max(0.0))
        }
        _ => Ok(1.0),
    }
}

/// Reads the word2vec text format: a `N D` header then `token c1 .. cD` rows.
pub fn load_embeddings(source: impl BufRead) -> Result<EmbeddingStore, EmbeddingError> {
    let mut lines = source.lines();
    let header = loop {
        match lines.next() {
            None => return Err(EmbeddingError::MissingHeader),
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let mut fields = header.split_whitespace();
    let parse = |f: Option<&str>| f.and_then(|s| s.parse::<usize>().ok());
    let (declared, dimension) = match (parse(fields.next()), parse(fields.next()), fields.next()) {
        (Some(n), Some(d), None) if d > 0 => (n, d),
        _ => return Err(EmbeddingError::BadHeader(header.clone())),
    };

    let mut store = EmbeddingStore::new(dimension);
    let mut rows = 0usize;
    for (n, line) in lines.enumerate() {
        let line = line?;
        let lineno = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-empty line").to_lowercase();
        let mut components = Vec::with_capacity(dimension);
        for field in fields {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => components.push(v),
                _ => {
                    return Err(EmbeddingError::NonNumeric {
                        line: lineno,
                        value: field.to_owned(),
                    })
                }
            }
        }
        if components.len() != dimension {
            return Err(EmbeddingError::DimensionMismatch {
                line: lineno,
                expected: dimension,
                found: components.len(),
            });
        }
        if !store.insert(&token, Vector::new(components))? {
            return Err(EmbeddingError::DuplicateToken {
                line: lineno,
                token,
            });
        }
        rows += 1;
    }
    if rows != declared {
        return Err(EmbeddingError::RowCount {
            declared,
            found: rows,
        });
    }
    Ok(store)
}

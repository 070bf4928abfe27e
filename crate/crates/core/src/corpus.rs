//! Per-image scene graphs: ingest, validation and file persistence.
//!
//! The line format holds one image per line, `|`-separated records:
//!
//! ```text
//! img1|uri=http://example/1.jpg|obj o1 girl.n.01 girl|obj o2 cake.n.03 cake|rel o1 eat.v.01 eating o2
//! ```
//!
//! Fields inside a record are separated by spaces or tabs. `attr` records are
//! accepted and ignored.

pub mod vg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Read, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lexicon::{normalize_term, Lexicon, SynsetId};

pub const CORPUS_FORMAT: &str = "sgreti-corpus 1";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}{}: {message}", image.as_ref().map(|i| format!(" (image {i})")).unwrap_or_default())]
    Record {
        line: usize,
        image: Option<String>,
        message: String,
    },
    #[error("image {image}: relationship references missing node {node}")]
    DanglingNode { image: String, node: String },
    #[error("image {image}: duplicate node id {node}")]
    DuplicateNode { image: String, node: String },
    #[error("duplicate image id {0}")]
    DuplicateImage(String),
    #[error("image {image}: unknown synset {synset}")]
    UnknownSynset { image: String, synset: SynsetId },
    #[error("image {0}: no relationships")]
    NoRelationships(String),
    #[error("image {image}: relationship links node {node} to itself")]
    SelfLoop { image: String, node: String },
    #[error("corpus is empty")]
    Empty,
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error("unsupported corpus format {0:?}")]
    Version(String),
    #[error("corrupt corpus file: {0}")]
    Corruption(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneObject {
    pub node_id: String,
    pub synset: SynsetId,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipInstance {
    pub subject_node: String,
    pub predicate_synset: SynsetId,
    pub predicate_label: String,
    pub object_node: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGraph {
    pub image_id: String,
    pub uri: Option<String>,
    /// Keyed by node id.
    pub objects: BTreeMap<String, SceneObject>,
    /// File order.
    pub relationships: Vec<RelationshipInstance>,
}

/// A relationship with both endpoints resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanonicalInstance<'a> {
    pub relationship: &'a RelationshipInstance,
    pub subject: &'a SceneObject,
    pub object: &'a SceneObject,
}

impl ImageGraph {
    pub fn instances(&self) -> impl Iterator<Item = CanonicalInstance<'_>> {
        self.relationships.iter().map(move |rel| CanonicalInstance {
            relationship: rel,
            subject: &self.objects[&rel.subject_node],
            object: &self.objects[&rel.object_node],
        })
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.relationships.is_empty() {
            return Err(CorpusError::NoRelationships(self.image_id.clone()));
        }
        for rel in &self.relationships {
            for node in [&rel.subject_node, &rel.object_node] {
                if !self.objects.contains_key(node) {
                    return Err(CorpusError::DanglingNode {
                        image: self.image_id.clone(),
                        node: node.clone(),
                    });
                }
            }
            if rel.subject_node == rel.object_node {
                return Err(CorpusError::SelfLoop {
                    image: self.image_id.clone(),
                    node: rel.subject_node.clone(),
                });
            }
        }
        Ok(())
    }

    fn check_synsets(&self, lexicon: &Lexicon) -> Result<(), CorpusError> {
        let synsets = self
            .objects
            .values()
            .map(|o| &o.synset)
            .chain(self.relationships.iter().map(|r| &r.predicate_synset));
        for synset in synsets {
            if !lexicon.contains(synset) {
                return Err(CorpusError::UnknownSynset {
                    image: self.image_id.clone(),
                    synset: synset.clone(),
                });
            }
        }
        Ok(())
    }

    /// Renders the image in the scene-graph line format (no trailing newline).
    pub fn to_line(&self) -> String {
        let mut line = self.image_id.clone();
        if let Some(uri) = &self.uri {
            let _ = write!(line, "|uri={uri}");
        }
        for obj in self.objects.values() {
            let _ = write!(line, "|obj {} {} {}", obj.node_id, obj.synset, obj.label);
        }
        for rel in &self.relationships {
            let _ = write!(
                line,
                "|rel {} {} {} {}",
                rel.subject_node, rel.predicate_synset, rel.predicate_label, rel.object_node
            );
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    images: BTreeMap<String, ImageGraph>,
}

impl Corpus {
    /// Builds a corpus from already parsed images, enforcing the structural
    /// invariants (but not synset membership).
    pub fn from_images(
        images: impl IntoIterator<Item = ImageGraph>,
    ) -> Result<Corpus, CorpusError> {
        let mut map = BTreeMap::new();
        for image in images {
            image.validate()?;
            if map.contains_key(&image.image_id) {
                return Err(CorpusError::DuplicateImage(image.image_id));
            }
            map.insert(image.image_id.clone(), image);
        }
        if map.is_empty() {
            return Err(CorpusError::Empty);
        }
        Ok(Corpus { images: map })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageGraph> {
        self.images.get(image_id)
    }

    /// Images in ascending id order.
    pub fn images(&self) -> impl Iterator<Item = &ImageGraph> {
        self.images.values()
    }

    pub fn relationship_count(&self) -> usize {
        self.images.values().map(|i| i.relationships.len()).sum()
    }

    pub fn canonical_instances(
        &self,
        image_id: &str,
    ) -> Result<Vec<CanonicalInstance<'_>>, CorpusError> {
        self.images
            .get(image_id)
            .map(|img| img.instances().collect())
            .ok_or_else(|| CorpusError::UnknownImage(image_id.to_owned()))
    }

    pub fn validate_synsets(&self, lexicon: &Lexicon) -> Result<(), CorpusError> {
        self.images
            .values()
            .try_for_each(|img| img.check_synsets(lexicon))
    }
}

fn valid_node_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}

/// Parses one scene-graph line. `line` is the 1-based source line number.
pub fn parse_image_line(text: &str, line: usize) -> Result<ImageGraph, CorpusError> {
    let mut records = text.split('|');
    let head = records.next().unwrap_or_default();
    let mut head_fields = head.split_whitespace();
    let mut image_id = head_fields.next().unwrap_or_default();
    if image_id == "image" {
        image_id = head_fields.next().unwrap_or_default();
    }
    let err = |image: Option<&str>, message: String| CorpusError::Record {
        line,
        image: image.map(str::to_owned),
        message,
    };
    if image_id.is_empty() {
        return Err(err(None, "missing image id".into()));
    }
    if image_id.contains(char::is_whitespace) || image_id.contains('=') {
        return Err(err(None, format!("invalid image id {image_id:?}")));
    }
    let mut uri = head_fields.next().map(str::to_owned);
    if head_fields.next().is_some() {
        return Err(err(
            Some(image_id),
            "unexpected fields in image header".into(),
        ));
    }

    let mut objects = BTreeMap::new();
    let mut relationships = Vec::new();
    let synset = |s: &str| {
        SynsetId::new(s).map_err(|_| err(Some(image_id), format!("invalid synset id {s:?}")))
    };
    let node = |s: &str| {
        if valid_node_id(s) {
            Ok(s.to_owned())
        } else {
            Err(err(Some(image_id), format!("invalid node id {s:?}")))
        }
    };
    for record in records {
        let record = record.trim();
        if record.is_empty() {
            continue;
        }
        if let Some(value) = record.strip_prefix("uri=") {
            uri = Some(value.trim().to_owned());
            continue;
        }
        let fields: Vec<&str> = record.split_whitespace().collect();
        match fields[0] {
            "obj" => {
                if fields.len() < 4 {
                    return Err(err(
                        Some(image_id),
                        format!("obj record needs node, synset, label: {record:?}"),
                    ));
                }
                let obj = SceneObject {
                    node_id: node(fields[1])?,
                    synset: synset(fields[2])?,
                    label: normalize_term(&fields[3..].join(" ")),
                };
                if objects.contains_key(&obj.node_id) {
                    return Err(CorpusError::DuplicateNode {
                        image: image_id.to_owned(),
                        node: obj.node_id,
                    });
                }
                objects.insert(obj.node_id.clone(), obj);
            }
            "rel" => {
                if fields.len() < 5 {
                    return Err(err(
                        Some(image_id),
                        format!("rel record needs subject, predicate, label, object: {record:?}"),
                    ));
                }
                let n = fields.len();
                relationships.push(RelationshipInstance {
                    subject_node: node(fields[1])?,
                    predicate_synset: synset(fields[2])?,
                    predicate_label: normalize_term(&fields[3..n - 1].join(" ")),
                    object_node: node(fields[n - 1])?,
                });
            }
            "attr" => {}
            other => {
                return Err(err(
                    Some(image_id),
                    format!("unknown record type {other:?}"),
                ))
            }
        }
    }
    let image = ImageGraph {
        image_id: image_id.to_owned(),
        uri,
        objects,
        relationships,
    };
    image.validate()?;
    Ok(image)
}

fn parse_lines<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Corpus, CorpusError> {
    let mut images: BTreeMap<String, ImageGraph> = BTreeMap::new();
    for (lineno, text) in lines {
        if text.trim().is_empty() || text.trim_start().starts_with('#') {
            continue;
        }
        let image = parse_image_line(text, lineno)?;
        if images.contains_key(&image.image_id) {
            return Err(CorpusError::DuplicateImage(image.image_id));
        }
        images.insert(image.image_id.clone(), image);
    }
    if images.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(Corpus { images })
}

/// Reads scene-graph lines and validates every synset against `lexicon`.
pub fn ingest_scene_graphs(
    mut source: impl BufRead,
    lexicon: &Lexicon,
) -> Result<Corpus, CorpusError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let corpus = parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)))?;
    corpus.validate_synsets(lexicon)?;
    Ok(corpus)
}

/// Serialized corpus bytes: version header, one line per image, checksum.
pub fn corpus_bytes(corpus: &Corpus) -> Vec<u8> {
    let mut body = String::new();
    body.push_str(CORPUS_FORMAT);
    body.push('\n');
    for image in corpus.images.values() {
        body.push_str(&image.to_line());
        body.push('\n');
    }
    let digest = hex::encode(Sha256::digest(body.as_bytes()));
    body.push_str("checksum ");
    body.push_str(&digest);
    body.push('\n');
    body.into_bytes()
}

pub fn save_corpus(corpus: &Corpus, mut sink: impl Write) -> Result<(), CorpusError> {
    sink.write_all(&corpus_bytes(corpus))?;
    sink.flush()?;
    Ok(())
}

/// Reads a saved corpus, checking format and checksum but not synsets.
pub fn read_saved_corpus(mut source: impl Read) -> Result<Corpus, CorpusError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|_| CorpusError::Corruption("not UTF-8".into()))?;
    let first = text.lines().next().unwrap_or_default();
    if first != CORPUS_FORMAT {
        return Err(CorpusError::Version(first.to_owned()));
    }
    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or_else(|| CorpusError::Corruption("missing checksum line".into()))?;
    let (body, trailer) = text.split_at(body_end);
    let expected = trailer
        .strip_prefix("checksum ")
        .map(str::trim_end)
        .ok_or_else(|| CorpusError::Corruption("missing checksum line".into()))?;
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if actual != expected {
        return Err(CorpusError::Corruption("checksum mismatch".into()));
    }
    parse_lines(body.lines().enumerate().skip(1).map(|(i, l)| (i + 1, l)))
}

pub fn load_corpus(source: impl Read, lexicon: &Lexicon) -> Result<Corpus, CorpusError> {
    let corpus = read_saved_corpus(source)?;
    corpus.validate_synsets(lexicon)?;
    Ok(corpus)
}

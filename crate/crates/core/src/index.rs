//! Inverted index from synset triplets to the images (and node pairs) that
//! contain them.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::BufRead;

use serde::Serialize;

use crate::approximator::ApproximateTriplet;
use crate::corpus::Corpus;
use crate::db::TableError;
use crate::lexicon::SynsetId;

pub const INDEX_HEADER: &str = "sgreti-index 1";

/// A synset triplet, ordered lexicographically by (subject, predicate, object).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TripletKey {
    pub subject: SynsetId,
    pub predicate: SynsetId,
    pub object: SynsetId,
}

impl TripletKey {
    pub fn new(subject: SynsetId, predicate: SynsetId, object: SynsetId) -> TripletKey {
        TripletKey {
            subject,
            predicate,
            object,
        }
    }
}

impl fmt::Display for TripletKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} - {} - {}", self.subject, self.predicate, self.object)
    }
}

/// Image node ids of one matching relationship.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Occurrence {
    pub subject_node: String,
    pub object_node: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Posting {
    pub image_id: String,
    /// Relationship file order within the image.
    pub occurrences: Vec<Occurrence>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvertedIndex {
    postings: BTreeMap<TripletKey, Vec<Posting>>,
}

/// Matches of one approximate inside one image.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMatch {
    pub approximate: ApproximateTriplet,
    pub occurrences: Vec<Occurrence>,
}

/// Per image: canonical triplet index -> matching approximates. Triplets
/// without any match are absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageCandidateMap {
    images: BTreeMap<String, BTreeMap<usize, Vec<CandidateMatch>>>,
}

impl ImageCandidateMap {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&BTreeMap<usize, Vec<CandidateMatch>>> {
        self.images.get(image_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeMap<usize, Vec<CandidateMatch>>)> {
        self.images.iter()
    }
}

static NO_POSTINGS: Vec<Posting> = Vec::new();

impl InvertedIndex {
    pub fn len(&self) -> usize {
        self.postings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }

    pub fn postings_for(&self, key: &TripletKey) -> &[Posting] {
        self.postings.get(key).unwrap_or(&NO_POSTINGS)
    }

    pub fn contains(&self, key: &TripletKey) -> bool {
        self.postings.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TripletKey, &Vec<Posting>)> {
        self.postings.iter()
    }

    /// Inverts postings for the given approximates into a per-image map.
    pub fn assemble_candidates<'a>(
        &self,
        approximates: impl IntoIterator<Item = &'a ApproximateTriplet>,
    ) -> ImageCandidateMap {
        let mut map = ImageCandidateMap::default();
        for approx in approximates {
            for posting in self.postings_for(&approx.key) {
                map.images
                    .entry(posting.image_id.clone())
                    .or_default()
                    .entry(approx.source_triplet)
                    .or_default()
                    .push(CandidateMatch {
                        approximate: approx.clone(),
                        occurrences: posting.occurrences.clone(),
                    });
            }
        }
        map
    }

    /// Sorted table: `subject\tpredicate\tobject\timage\tsn:on,sn:on`.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# {INDEX_HEADER}\n");
        for (key, postings) in &self.postings {
            for posting in postings {
                let occ = posting
                    .occurrences
                    .iter()
                    .map(|o| format!("{}:{}", o.subject_node, o.object_node))
                    .collect::<Vec<_>>()
                    .join(",");
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    key.subject, key.predicate, key.object, posting.image_id, occ
                );
            }
        }
        out
    }

    pub fn from_tsv(source: impl BufRead) -> Result<InvertedIndex, TableError> {
        let mut lines = source.lines();
        let first = lines.next().transpose()?.unwrap_or_default();
        if first != format!("# {INDEX_HEADER}") {
            return Err(TableError::Header {
                expected: INDEX_HEADER.to_owned(),
                found: first,
            });
        }
        let mut postings: BTreeMap<TripletKey, Vec<Posting>> = BTreeMap::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            let lineno = n + 2;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(TableError::line(lineno, "expected 5 tab-separated fields"));
            }
            let synset = |s: &str| SynsetId::new(s).map_err(|e| TableError::line(lineno, e));
            let key = TripletKey::new(synset(fields[0])?, synset(fields[1])?, synset(fields[2])?);
            let occurrences = fields[4]
                .split(',')
                .map(|pair| {
                    pair.split_once(':')
                        .filter(|(s, o)| !s.is_empty() && !o.is_empty())
                        .map(|(s, o)| Occurrence {
                            subject_node: s.to_owned(),
                            object_node: o.to_owned(),
                        })
                        .ok_or_else(|| TableError::line(lineno, format!("bad occurrence {pair:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let list = postings.entry(key).or_default();
            if list
                .last()
                .is_some_and(|p| p.image_id.as_str() >= fields[3])
            {
                return Err(TableError::line(lineno, "postings not sorted by image id"));
            }
            list.push(Posting {
                image_id: fields[3].to_owned(),
                occurrences,
            });
        }
        Ok(InvertedIndex { postings })
    }
}

pub fn build_index(corpus: &Corpus) -> InvertedIndex {
    let mut postings: BTreeMap<TripletKey, Vec<Posting>> = BTreeMap::new();
    // Images come in ascending id order, so each posting list stays sorted.
    for image in corpus.images() {
        let mut local: BTreeMap<TripletKey, Vec<Occurrence>> = BTreeMap::new();
        for inst in image.instances() {
            let key = TripletKey::new(
                inst.subject.synset.clone(),
                inst.relationship.predicate_synset.clone(),
                inst.object.synset.clone(),
            );
            local.entry(key).or_default().push(Occurrence {
                subject_node: inst.subject.node_id.clone(),
                object_node: inst.object.node_id.clone(),
            });
        }
        for (key, occurrences) in local {
            postings.entry(key).or_default().push(Posting {
                image_id: image.image_id.clone(),
                occurrences,
            });
        }
    }
    InvertedIndex { postings }
}

//! Subject, object and predicate aggregate graphs.
//!
//! Each graph fixes two roles of a triplet and stores the set of synsets seen
//! in the third role anywhere in the corpus:
//!
//! | graph | key                   | members    |
//! |-------|-----------------------|------------|
//! | SAG   | (predicate, object)   | subjects   |
//! | OAG   | (subject, predicate)  | objects    |
//! | PAG   | (subject, object)     | predicates |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;

use crate::corpus::Corpus;
use crate::db::TableError;
use crate::lexicon::SynsetId;

static EMPTY: BTreeSet<SynsetId> = BTreeSet::new();

/// Pair-keyed synset sets shared by the three aggregate graphs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairIndex {
    entries: BTreeMap<(SynsetId, SynsetId), BTreeSet<SynsetId>>,
}

impl PairIndex {
    fn insert(&mut self, a: &SynsetId, b: &SynsetId, member: &SynsetId) {
        self.entries
            .entry((a.clone(), b.clone()))
            .or_default()
            .insert(member.clone());
    }

    pub fn get(&self, a: &SynsetId, b: &SynsetId) -> &BTreeSet<SynsetId> {
        // BTreeMap lookups need an owned tuple key.
        self.entries.get(&(a.clone(), b.clone())).unwrap_or(&EMPTY)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(SynsetId, SynsetId), &BTreeSet<SynsetId>)> {
        self.entries.iter()
    }

    /// `key1\tkey2\tm1,m2,...`, sorted.
    pub fn to_tsv(&self, header: &str) -> String {
        let mut out = format!("# {header}\n");
        for ((a, b), members) in &self.entries {
            let list = members
                .iter()
                .map(SynsetId::as_str)
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(out, "{a}\t{b}\t{list}");
        }
        out
    }

    pub fn from_tsv(source: impl BufRead, header: &str) -> Result<PairIndex, TableError> {
        let mut index = PairIndex::default();
        let mut lines = source.lines();
        let first = lines.next().transpose()?.unwrap_or_default();
        if first != format!("# {header}") {
            return Err(TableError::Header {
                expected: header.to_owned(),
                found: first,
            });
        }
        for (n, line) in lines.enumerate() {
            let line = line?;
            let lineno = n + 2;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(TableError::line(lineno, "expected 3 tab-separated fields"));
            }
            let a = SynsetId::new(fields[0]).map_err(|e| TableError::line(lineno, e))?;
            let b = SynsetId::new(fields[1]).map_err(|e| TableError::line(lineno, e))?;
            let members = fields[2]
                .split(',')
                .map(SynsetId::new)
                .collect::<Result<BTreeSet<_>, _>>()
                .map_err(|e| TableError::line(lineno, e))?;
            if members.is_empty() {
                return Err(TableError::line(lineno, "empty member list"));
            }
            if index.entries.insert((a, b), members).is_some() {
                return Err(TableError::line(lineno, "duplicate key"));
            }
        }
        Ok(index)
    }
}

/// (subject, predicate) -> objects.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectAggregateGraph(pub PairIndex);

/// (predicate, object) -> subjects.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubjectAggregateGraph(pub PairIndex);

/// (subject, object) -> predicates. Holds every witnessed predicate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredicateAggregateGraph(pub PairIndex);

impl ObjectAggregateGraph {
    pub fn objects_for(&self, subject: &SynsetId, predicate: &SynsetId) -> &BTreeSet<SynsetId> {
        self.0.get(subject, predicate)
    }
}

impl SubjectAggregateGraph {
    pub fn subjects_for(&self, predicate: &SynsetId, object: &SynsetId) -> &BTreeSet<SynsetId> {
        self.0.get(predicate, object)
    }
}

impl PredicateAggregateGraph {
    pub fn predicates_for(&self, subject: &SynsetId, object: &SynsetId) -> &BTreeSet<SynsetId> {
        self.0.get(subject, object)
    }

    /// Predicate-centric view: predicate -> (subject, object) pairs.
    pub fn by_predicate(&self) -> BTreeMap<&SynsetId, BTreeSet<(&SynsetId, &SynsetId)>> {
        let mut out: BTreeMap<&SynsetId, BTreeSet<(&SynsetId, &SynsetId)>> = BTreeMap::new();
        for ((s, o), preds) in self.0.iter() {
            for p in preds {
                out.entry(p).or_default().insert((s, o));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Aggregates {
    pub subjects: SubjectAggregateGraph,
    pub objects: ObjectAggregateGraph,
    pub predicates: PredicateAggregateGraph,
}

pub const SAG_HEADER: &str = "sgreti-sag 1";
pub const OAG_HEADER: &str = "sgreti-oag 1";
pub const PAG_HEADER: &str = "sgreti-pag 1";

impl Aggregates {
    pub fn objects_for(&self, subject: &SynsetId, predicate: &SynsetId) -> &BTreeSet<SynsetId> {
        self.objects.objects_for(subject, predicate)
    }

    pub fn subjects_for(&self, predicate: &SynsetId, object: &SynsetId) -> &BTreeSet<SynsetId> {
        self.subjects.subjects_for(predicate, object)
    }

    pub fn predicates_for(&self, subject: &SynsetId, object: &SynsetId) -> &BTreeSet<SynsetId> {
        self.predicates.predicates_for(subject, object)
    }
}

pub fn build_aggregates(corpus: &Corpus) -> Aggregates {
    let mut agg = Aggregates::default();
    for image in corpus.images() {
        for inst in image.instances() {
            let s = &inst.subject.synset;
            let p = &inst.relationship.predicate_synset;
            let o = &inst.object.synset;
            agg.objects.0.insert(s, p, o);
            agg.subjects.0.insert(p, o, s);
            agg.predicates.0.insert(s, o, p);
        }
    }
    agg
}

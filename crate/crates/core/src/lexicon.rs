//! WordNet-style taxonomy: synsets, lemma lookup, scope expansion and
//! Wu & Palmer similarity.
//!
//! A [`Lexicon`] is immutable once loaded. Depths are counted in nodes along
//! the shortest hypernym path, so every root has depth 1.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("synset {synset} references unknown hypernym {hypernym}")]
    DanglingHypernym {
        synset: SynsetId,
        hypernym: SynsetId,
    },
    #[error("hypernym cycle through {0}")]
    Cycle(SynsetId),
    #[error("duplicate synset {0}")]
    DuplicateSynset(SynsetId),
    #[error("unknown synset {0}")]
    UnknownSynset(String),
    #[error("reference set is empty")]
    EmptyReferences,
    #[error("invalid synset id {0:?}")]
    InvalidId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Part of speech tag as embedded in synset ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    #[serde(rename = "n")]
    Noun,
    #[serde(rename = "v")]
    Verb,
    #[serde(rename = "a")]
    Adjective,
    #[serde(rename = "r")]
    Adverb,
}

impl Pos {
    pub const ALL: [Pos; 4] = [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb];

    pub fn from_tag(tag: char) -> Option<Pos> {
        match tag {
            'n' => Some(Pos::Noun),
            'v' => Some(Pos::Verb),
            'a' => Some(Pos::Adjective),
            'r' => Some(Pos::Adverb),
            _ => None,
        }
    }

    pub fn tag(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adjective => 'a',
            Pos::Adverb => 'r',
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// Synset identifier of the form `lemma.pos.nn`, e.g. `girl.n.01`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SynsetId(String);

impl SynsetId {
    pub fn new(value: &str) -> Result<SynsetId, LexiconError> {
        if is_valid_synset_id(value) {
            Ok(SynsetId(value.to_owned()))
        } else {
            Err(LexiconError::InvalidId(value.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn pos(&self) -> Pos {
        // Validated on construction: `<head>.<pos>.<nn>`.
        let tag = self.0.as_bytes()[self.0.len() - 4] as char;
        Pos::from_tag(tag).expect("validated synset id")
    }
}

fn is_valid_synset_id(value: &str) -> bool {
    let bytes = value.as_bytes();
    if bytes.len() < 6 {
        return false;
    }
    let n = bytes.len();
    let (head, tail) = bytes.split_at(n - 5);
    let tail_ok = tail[0] == b'.'
        && matches!(tail[1], b'n' | b'v' | b'a' | b'r')
        && tail[2] == b'.'
        && tail[3].is_ascii_digit()
        && tail[4].is_ascii_digit();
    tail_ok
        && !head.is_empty()
        && head.iter().all(|&b| {
            b.is_ascii_lowercase() || b.is_ascii_digit() || matches!(b, b'_' | b'.' | b'-')
        })
}

impl FromStr for SynsetId {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SynsetId::new(s)
    }
}

impl TryFrom<String> for SynsetId {
    type Error = LexiconError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        SynsetId::new(&value)
    }
}

impl From<SynsetId> for String {
    fn from(id: SynsetId) -> String {
        id.0
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub id: SynsetId,
    pub pos: Pos,
    pub lemmas: Vec<String>,
    pub hypernyms: Vec<SynsetId>,
}

impl Synset {
    /// Builds a synset, checking the lemma list. `pos` is taken from the id.
    pub fn new(
        id: SynsetId,
        lemmas: Vec<String>,
        hypernyms: Vec<SynsetId>,
    ) -> Result<Synset, String> {
        if lemmas.is_empty() {
            return Err(format!("{id}: empty lemma list"));
        }
        let mut seen = BTreeSet::new();
        for lemma in &lemmas {
            if lemma.is_empty() || lemma.chars().any(|c| c.is_whitespace() || c.is_uppercase()) {
                return Err(format!(
                    "{id}: lemma {lemma:?} must be lowercase without spaces"
                ));
            }
            if !seen.insert(lemma.as_str()) {
                return Err(format!("{id}: duplicate lemma {lemma:?}"));
            }
        }
        let pos = id.pos();
        Ok(Synset {
            id,
            pos,
            lemmas,
            hypernyms,
        })
    }
}

/// How far a lemma lookup is widened in the hierarchy.
///
/// Child and parent expansion go exactly one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Sister,
    SisterChild,
    SisterParent,
    SisterChildParent,
}

impl Scope {
    fn children(self) -> bool {
        matches!(self, Scope::SisterChild | Scope::SisterChildParent)
    }

    fn parents(self) -> bool {
        matches!(self, Scope::SisterParent | Scope::SisterChildParent)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scope::Sister => "sister",
            Scope::SisterChild => "sister-child",
            Scope::SisterParent => "sister-parent",
            Scope::SisterChildParent => "sister-child-parent",
        }
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sister" => Ok(Scope::Sister),
            "sister-child" => Ok(Scope::SisterChild),
            "sister-parent" => Ok(Scope::SisterParent),
            "sister-child-parent" | "all" => Ok(Scope::SisterChildParent),
            other => Err(format!(
                "unknown scope {other:?} (expected sister, sister-child, sister-parent or sister-child-parent)"
            )),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Lowercases a natural-language term and joins its words with `_`.
pub fn normalize_term(term: &str) -> String {
    term.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    synsets: BTreeMap<SynsetId, Synset>,
    hyponyms: HashMap<SynsetId, BTreeSet<SynsetId>>,
    lemma_index: HashMap<(String, Pos), BTreeSet<SynsetId>>,
    depth: HashMap<SynsetId, u32>,
}

impl Lexicon {
    /// Assembles a lexicon, validating references, acyclicity and depths.
    pub fn from_synsets(
        synsets: impl IntoIterator<Item = Synset>,
    ) -> Result<Lexicon, LexiconError> {
        let mut map = BTreeMap::new();
        for synset in synsets {
            if map.contains_key(&synset.id) {
                return Err(LexiconError::DuplicateSynset(synset.id));
            }
            map.insert(synset.id.clone(), synset);
        }

        let mut hyponyms: HashMap<SynsetId, BTreeSet<SynsetId>> = HashMap::new();
        for synset in map.values() {
            for hyper in &synset.hypernyms {
                if !map.contains_key(hyper) {
                    return Err(LexiconError::DanglingHypernym {
                        synset: synset.id.clone(),
                        hypernym: hyper.clone(),
                    });
                }
                hyponyms
                    .entry(hyper.clone())
                    .or_default()
                    .insert(synset.id.clone());
            }
        }

        check_acyclic(&map)?;

        // Multi-source BFS from the roots gives shortest-path depths.
        let mut depth = HashMap::with_capacity(map.len());
        let mut queue = VecDeque::new();
        for synset in map.values().filter(|s| s.hypernyms.is_empty()) {
            depth.insert(synset.id.clone(), 1u32);
            queue.push_back(synset.id.clone());
        }
        while let Some(id) = queue.pop_front() {
            let d = depth[&id];
            if let Some(children) = hyponyms.get(&id) {
                for child in children {
                    if !depth.contains_key(child) {
                        depth.insert(child.clone(), d + 1);
                        queue.push_back(child.clone());
                    }
                }
            }
        }
        debug_assert_eq!(depth.len(), map.len());

        let mut lemma_index: HashMap<(String, Pos), BTreeSet<SynsetId>> = HashMap::new();
        for synset in map.values() {
            for lemma in &synset.lemmas {
                lemma_index
                    .entry((lemma.clone(), synset.pos))
                    .or_default()
                    .insert(synset.id.clone());
            }
        }

        Ok(Lexicon {
            synsets: map,
            hyponyms,
            lemma_index,
            depth,
        })
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn contains(&self, id: &SynsetId) -> bool {
        self.synsets.contains_key(id)
    }

    pub fn get(&self, id: &SynsetId) -> Option<&Synset> {
        self.synsets.get(id)
    }

    pub fn synsets(&self) -> impl Iterator<Item = &Synset> {
        self.synsets.values()
    }

    fn require(&self, id: &SynsetId) -> Result<&Synset, LexiconError> {
        self.synsets
            .get(id)
            .ok_or_else(|| LexiconError::UnknownSynset(id.to_string()))
    }

    pub fn depth(&self, id: &SynsetId) -> Result<u32, LexiconError> {
        self.depth
            .get(id)
            .copied()
            .ok_or_else(|| LexiconError::UnknownSynset(id.to_string()))
    }

    pub fn hypernyms(&self, id: &SynsetId) -> Result<&[SynsetId], LexiconError> {
        Ok(&self.require(id)?.hypernyms)
    }

    pub fn hyponyms(&self, id: &SynsetId) -> Result<Vec<&SynsetId>, LexiconError> {
        self.require(id)?;
        Ok(self
            .hyponyms
            .get(id)
            .map(|s| s.iter().collect())
            .unwrap_or_default())
    }

    /// Exact lemma lookup. Unknown lemmas give an empty set.
    pub fn synsets_for_lemma(&self, lemma: &str, pos: Option<Pos>) -> BTreeSet<SynsetId> {
        let lemma = normalize_term(lemma);
        let mut out = BTreeSet::new();
        let tags: &[Pos] = match &pos {
            Some(p) => std::slice::from_ref(p),
            None => &Pos::ALL,
        };
        for tag in tags {
            if let Some(ids) = self.lemma_index.get(&(lemma.clone(), *tag)) {
                out.extend(ids.iter().cloned());
            }
        }
        out
    }

    /// Lemma lookup for a surface form: exact match first, then the
    /// WordNet detachment rules (`eating` -> `eat`, `plates` -> `plate`).
    pub fn lookup_label(&self, label: &str, pos: Option<Pos>) -> BTreeSet<SynsetId> {
        let lemma = normalize_term(label);
        let exact = self.synsets_for_lemma(&lemma, pos);
        if !exact.is_empty() {
            return exact;
        }
        let tags: &[Pos] = match &pos {
            Some(p) => std::slice::from_ref(p),
            None => &Pos::ALL,
        };
        let mut out = BTreeSet::new();
        for tag in tags {
            for base in base_forms(&lemma, *tag) {
                out.extend(self.synsets_for_lemma(&base, Some(*tag)));
            }
        }
        out
    }

    pub fn expand_scope(
        &self,
        seeds: &BTreeSet<SynsetId>,
        scope: Scope,
    ) -> Result<BTreeSet<SynsetId>, LexiconError> {
        let mut out = BTreeSet::new();
        for seed in seeds {
            let synset = self.require(seed)?;
            out.insert(seed.clone());
            if scope.children() {
                if let Some(children) = self.hyponyms.get(seed) {
                    out.extend(children.iter().cloned());
                }
            }
            if scope.parents() {
                out.extend(synset.hypernyms.iter().cloned());
            }
        }
        Ok(out)
    }

    /// Every ancestor of `id`, itself included.
    pub fn ancestors(&self, id: &SynsetId) -> Result<BTreeSet<&SynsetId>, LexiconError> {
        let start = self.require(id)?;
        let mut seen = BTreeSet::new();
        seen.insert(&start.id);
        let mut stack = vec![start];
        while let Some(synset) = stack.pop() {
            for hyper in &synset.hypernyms {
                if seen.insert(hyper) {
                    stack.push(&self.synsets[hyper]);
                }
            }
        }
        Ok(seen)
    }

    /// Depth of the deepest common ancestor, or `None` when the two synsets
    /// share no ancestor.
    pub fn lcs_depth(&self, a: &SynsetId, b: &SynsetId) -> Result<Option<u32>, LexiconError> {
        let left = self.ancestors(a)?;
        let right = self.ancestors(b)?;
        Ok(left.intersection(&right).map(|id| self.depth[*id]).max())
    }

    pub fn wup_similarity(&self, a: &SynsetId, b: &SynsetId) -> Result<f64, LexiconError> {
        let lcs = match self.lcs_depth(a, b)? {
            Some(d) => d,
            None => return Ok(0.0),
        };
        let da = self.depth[a];
        let db = self.depth[b];
        // With multiple hypernyms an ancestor's shortest depth can exceed a
        // descendant's, so the ratio is capped.
        Ok((2.0 * f64::from(lcs) / f64::from(da + db)).min(1.0))
    }

    pub fn mean_wup(
        &self,
        candidate: &SynsetId,
        references: &BTreeSet<SynsetId>,
    ) -> Result<f64, LexiconError> {
        if references.is_empty() {
            return Err(LexiconError::EmptyReferences);
        }
        let mut total = 0.0;
        for reference in references {
            total += self.wup_similarity(candidate, reference)?;
        }
        Ok(total / references.len() as f64)
    }
}

fn check_acyclic(map: &BTreeMap<SynsetId, Synset>) -> Result<(), LexiconError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    let mut marks: HashMap<&SynsetId, Mark> = HashMap::with_capacity(map.len());
    for root in map.keys() {
        if marks.contains_key(root) {
            continue;
        }
        // (node, index of next hypernym to visit)
        let mut stack: Vec<(&SynsetId, usize)> = vec![(root, 0)];
        marks.insert(root, Mark::Active);
        while let Some((id, next)) = stack.pop() {
            let hypers = &map[id].hypernyms;
            if next < hypers.len() {
                stack.push((id, next + 1));
                let hyper = &hypers[next];
                match marks.get(hyper) {
                    Some(Mark::Active) => return Err(LexiconError::Cycle(hyper.clone())),
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(hyper, Mark::Active);
                        stack.push((hyper, 0));
                    }
                }
            } else {
                marks.insert(id, Mark::Done);
            }
        }
    }
    Ok(())
}

fn base_forms(word: &str, pos: Pos) -> Vec<String> {
    const NOUN: &[(&str, &str)] = &[
        ("s", ""),
        ("ses", "s"),
        ("xes", "x"),
        ("zes", "z"),
        ("ches", "ch"),
        ("shes", "sh"),
        ("men", "man"),
        ("ies", "y"),
    ];
    const VERB: &[(&str, &str)] = &[
        ("s", ""),
        ("ies", "y"),
        ("es", "e"),
        ("es", ""),
        ("ed", "e"),
        ("ed", ""),
        ("ing", "e"),
        ("ing", ""),
    ];
    const ADJ: &[(&str, &str)] = &[("er", ""), ("est", ""), ("er", "e"), ("est", "e")];
    let rules = match pos {
        Pos::Noun => NOUN,
        Pos::Verb => VERB,
        Pos::Adjective => ADJ,
        Pos::Adverb => &[],
    };
    let mut out = Vec::new();
    for (suffix, replacement) in rules {
        if let Some(stem) = word.strip_suffix(suffix) {
            if !stem.is_empty() {
                let base = format!("{stem}{replacement}");
                if !out.contains(&base) {
                    out.push(base);
                }
            }
        }
    }
    // Doubled final consonant: "sitting" -> "sit".
    if pos == Pos::Verb {
        for suffix in ["ing", "ed"] {
            if let Some(stem) = word.strip_suffix(suffix) {
                let b = stem.as_bytes();
                if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] {
                    let base = stem[..stem.len() - 1].to_owned();
                    if !out.contains(&base) {
                        out.push(base);
                    }
                }
            }
        }
    }
    out
}

/// Reads the tab-separated lexicon format:
/// `<synset_id>\t<lemma>[,<lemma>...]\t[<hypernym_id>[,...]]`.
pub fn load_lexicon(source: impl BufRead) -> Result<Lexicon, LexiconError> {
    let mut synsets = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(LexiconError::Malformed {
                line: lineno,
                message: format!(
                    "expected 2 or 3 tab-separated fields, found {}",
                    fields.len()
                ),
            });
        }
        let malformed = |message: String| LexiconError::Malformed {
            line: lineno,
            message,
        };
        let id = SynsetId::new(fields[0].trim())
            .map_err(|_| malformed(format!("invalid synset id {:?}", fields[0])))?;
        let lemmas = fields[1]
            .split(',')
            .map(|l| l.trim().to_owned())
            .collect::<Vec<_>>();
        let hypernyms = match fields.get(2).map(|f| f.trim()) {
            None | Some("") => Vec::new(),
            Some(list) => list
                .split(',')
                .map(|h| {
                    SynsetId::new(h.trim())
                        .map_err(|_| malformed(format!("invalid hypernym id {h:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let synset = Synset::new(id, lemmas, hypernyms).map_err(malformed)?;
        synsets.push(synset);
    }
    Lexicon::from_synsets(synsets)
}

//! Approximate triplet generation.
//!
//! For one canonical triplet the approximator
//!
//! 1. looks up synsets for each role label and widens them by [`Scope`],
//! 2. keeps subjects and objects witnessed by the aggregate graphs in the
//!    context of the other roles' candidates,
//! 3. gathers plausible predicates from the predicate aggregate graph, ranks
//!    them by mean Wu & Palmer similarity to the query predicate's synsets
//!    and keeps the top fraction,
//! 4. emits every combination that actually occurs in the inverted index.
//!
//! Before step 2, a subject or object candidate never seen with any candidate
//! predicate can fall back to the nearest synsets that are, provided the two
//! share an ancestor below the taxonomy root. This is what turns a `woman` query into `girl` matches
//! when the corpus only ever shows girls in that role.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::aggregates::{Aggregates, ObjectAggregateGraph, SubjectAggregateGraph};
use crate::index::{InvertedIndex, TripletKey};
use crate::lexicon::{Lexicon, LexiconError, Pos, Scope, SynsetId};
use crate::querydsl::{CanonicalTriplet, Slot};

#[derive(Debug, Error, PartialEq)]
pub enum ApproxError {
    #[error("predicate keep fraction must be in (0, 1], got {0}")]
    KeepFraction(f64),
    #[error("candidate cap must be at least 1")]
    Cap,
    #[error("no sister predicates to rank against")]
    NoSisterPredicates,
    #[error("{0}")]
    Lexicon(String),
}

impl From<LexiconError> for ApproxError {
    fn from(e: LexiconError) -> Self {
        ApproxError::Lexicon(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    pub subject_scope: Scope,
    pub object_scope: Scope,
    pub predicate_scope: Scope,
    pub predicate_keep_fraction: f64,
    pub max_candidates_per_role: usize,
    /// Let unwitnessed subject/object candidates fall back to their nearest
    /// witnessed relatives.
    pub nearest_witness_backoff: bool,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            subject_scope: Scope::Sister,
            object_scope: Scope::Sister,
            predicate_scope: Scope::SisterChild,
            predicate_keep_fraction: 2.0 / 3.0,
            max_candidates_per_role: 64,
            nearest_witness_backoff: true,
        }
    }
}

impl ApproxConfig {
    pub fn validate(&self) -> Result<(), ApproxError> {
        let f = self.predicate_keep_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(ApproxError::KeepFraction(f));
        }
        if self.max_candidates_per_role == 0 {
            return Err(ApproxError::Cap);
        }
        Ok(())
    }
}

/// Which query slots an approximate's roles stand for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grounding {
    pub subject: Slot,
    pub predicate: Slot,
    pub object: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproximateTriplet {
    pub key: TripletKey,
    pub source_triplet: usize,
    pub grounding: Grounding,
}

impl fmt::Display for ApproximateTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (T{})", self.key, self.source_triplet + 1)
    }
}

/// Everything the approximator saw for one triplet, for `--explain`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ApproxTrace {
    pub subject_candidates: BTreeSet<SynsetId>,
    pub predicate_candidates: BTreeSet<SynsetId>,
    pub object_candidates: BTreeSet<SynsetId>,
    pub sister_predicates: BTreeSet<SynsetId>,
    pub plausible_subjects: BTreeSet<SynsetId>,
    pub plausible_objects: BTreeSet<SynsetId>,
    /// Members of the plausible sets that only entered through back-off.
    pub backoff_subjects: BTreeSet<SynsetId>,
    pub backoff_objects: BTreeSet<SynsetId>,
    pub plausible_predicates: BTreeSet<SynsetId>,
    pub predicate_scores: Vec<(SynsetId, f64)>,
    pub kept_predicates: Vec<SynsetId>,
    /// Approximates with their posting counts (number of images).
    pub approximates: Vec<(TripletKey, usize)>,
}

/// Keeps `seeds` ahead of the rest, each part in id order, up to `cap`.
fn truncate_seeds_first(
    seeds: &BTreeSet<SynsetId>,
    all: BTreeSet<SynsetId>,
    cap: usize,
) -> BTreeSet<SynsetId> {
    if all.len() <= cap {
        return all;
    }
    let mut out: BTreeSet<SynsetId> = seeds
        .iter()
        .filter(|s| all.contains(*s))
        .take(cap)
        .cloned()
        .collect();
    for id in all {
        if out.len() >= cap {
            break;
        }
        out.insert(id);
    }
    out
}

/// Synsets for a role label, widened by `scope` and capped at `cap`.
///
/// `cap` keeps the directly looked-up synsets first, then fills up with
/// expansions in id order.
pub fn role_candidates(
    lexicon: &Lexicon,
    label: &str,
    pos: Option<Pos>,
    scope: Scope,
    cap: usize,
) -> BTreeSet<SynsetId> {
    let seeds = lexicon.lookup_label(label, pos);
    let expanded = lexicon
        .expand_scope(&seeds, scope)
        .expect("looked-up synsets belong to the lexicon");
    truncate_seeds_first(&seeds, expanded, cap)
}

/// Subjects seen with any (predicate, object) candidate pair.
pub fn witnessed_subjects(
    pred_cands: &BTreeSet<SynsetId>,
    obj_cands: &BTreeSet<SynsetId>,
    sag: &SubjectAggregateGraph,
) -> BTreeSet<SynsetId> {
    let mut out = BTreeSet::new();
    for p in pred_cands {
        for o in obj_cands {
            out.extend(sag.subjects_for(p, o).iter().cloned());
        }
    }
    out
}

/// Objects seen with any (subject, predicate) candidate pair.
pub fn witnessed_objects(
    subj_cands: &BTreeSet<SynsetId>,
    pred_cands: &BTreeSet<SynsetId>,
    oag: &ObjectAggregateGraph,
) -> BTreeSet<SynsetId> {
    let mut out = BTreeSet::new();
    for s in subj_cands {
        for p in pred_cands {
            out.extend(oag.objects_for(s, p).iter().cloned());
        }
    }
    out
}

pub fn plausible_subjects(
    cands: &BTreeSet<SynsetId>,
    pred_cands: &BTreeSet<SynsetId>,
    obj_cands: &BTreeSet<SynsetId>,
    sag: &SubjectAggregateGraph,
) -> BTreeSet<SynsetId> {
    let witnessed = witnessed_subjects(pred_cands, obj_cands, sag);
    cands.intersection(&witnessed).cloned().collect()
}

pub fn plausible_objects(
    cands: &BTreeSet<SynsetId>,
    subj_cands: &BTreeSet<SynsetId>,
    pred_cands: &BTreeSet<SynsetId>,
    oag: &ObjectAggregateGraph,
) -> BTreeSet<SynsetId> {
    let witnessed = witnessed_objects(subj_cands, pred_cands, oag);
    cands.intersection(&witnessed).cloned().collect()
}

/// Subjects and objects of any relationship whose predicate is in `predicates`.
pub fn seen_with_predicates(
    aggregates: &Aggregates,
    predicates: &BTreeSet<SynsetId>,
) -> (BTreeSet<SynsetId>, BTreeSet<SynsetId>) {
    let mut subjects = BTreeSet::new();
    let mut objects = BTreeSet::new();
    for ((p, _), members) in aggregates.subjects.0.iter() {
        if predicates.contains(p) {
            subjects.extend(members.iter().cloned());
        }
    }
    for ((_, p), members) in aggregates.objects.0.iter() {
        if predicates.contains(p) {
            objects.extend(members.iter().cloned());
        }
    }
    (subjects, objects)
}

/// For every candidate missing from `witnessed`, the witnessed synsets most
/// similar to it (by WUP, ties kept), restricted to those sharing a non-root
/// ancestor with the candidate.
pub fn nearest_witnessed(
    lexicon: &Lexicon,
    cands: &BTreeSet<SynsetId>,
    witnessed: &BTreeSet<SynsetId>,
) -> Result<BTreeSet<SynsetId>, LexiconError> {
    let mut out = BTreeSet::new();
    for cand in cands.difference(witnessed) {
        let mut best = 0.0f64;
        let mut best_ids: Vec<&SynsetId> = Vec::new();
        for w in witnessed {
            match lexicon.lcs_depth(cand, w)? {
                Some(depth) if depth >= 2 => {}
                _ => continue,
            }
            let score = lexicon.wup_similarity(cand, w)?;
            if score > best {
                best = score;
                best_ids.clear();
                best_ids.push(w);
            } else if score == best {
                best_ids.push(w);
            }
        }
        out.extend(best_ids.into_iter().cloned());
    }
    Ok(out)
}

/// Number of items kept out of `n` for a keep fraction; at least one when
/// `n > 0`.
pub fn kept_count(fraction: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    // Tolerance so that 2/3 * 3 counts as exactly 2.
    let raw = (fraction * n as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Scores each plausible predicate by mean WUP to `sister_predicates`, sorts
/// descending (ties by id) and keeps the top `keep_fraction`.
pub fn rank_predicates(
    lexicon: &Lexicon,
    plausible: &BTreeSet<SynsetId>,
    sister_predicates: &BTreeSet<SynsetId>,
    keep_fraction: f64,
) -> Result<Vec<(SynsetId, f64)>, ApproxError> {
    if sister_predicates.is_empty() {
        return Err(ApproxError::NoSisterPredicates);
    }
    let mut scored = plausible
        .iter()
        .map(|p| Ok((p.clone(), lexicon.mean_wup(p, sister_predicates)?)))
        .collect::<Result<Vec<_>, LexiconError>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(kept_count(keep_fraction, plausible.len()));
    Ok(scored)
}

pub fn generate_approximates(
    triplet: &CanonicalTriplet,
    lexicon: &Lexicon,
    aggregates: &Aggregates,
    index: &InvertedIndex,
    config: &ApproxConfig,
) -> Vec<ApproximateTriplet> {
    generate_approximates_traced(triplet, lexicon, aggregates, index, config).0
}

pub fn generate_approximates_traced(
    triplet: &CanonicalTriplet,
    lexicon: &Lexicon,
    aggregates: &Aggregates,
    index: &InvertedIndex,
    config: &ApproxConfig,
) -> (Vec<ApproximateTriplet>, ApproxTrace) {
    let cap = config.max_candidates_per_role;
    let mut trace = ApproxTrace {
        subject_candidates: role_candidates(
            lexicon,
            &triplet.subject_label,
            Some(Pos::Noun),
            config.subject_scope,
            cap,
        ),
        predicate_candidates: role_candidates(
            lexicon,
            &triplet.predicate_label,
            None,
            config.predicate_scope,
            cap,
        ),
        object_candidates: role_candidates(
            lexicon,
            &triplet.object_label,
            Some(Pos::Noun),
            config.object_scope,
            cap,
        ),
        sister_predicates: lexicon.lookup_label(&triplet.predicate_label, None),
        ..ApproxTrace::default()
    };

    // Back-off widens each noun role against everything seen with the
    // candidate predicates; the aggregate-graph intersection then runs over
    // the widened sets.
    let mut subjects = trace.subject_candidates.clone();
    let mut objects = trace.object_candidates.clone();
    if config.nearest_witness_backoff {
        let nearest = |cands, witnessed| {
            nearest_witnessed(lexicon, cands, witnessed).expect("candidates belong to the lexicon")
        };
        let (seen_subjects, seen_objects) =
            seen_with_predicates(aggregates, &trace.predicate_candidates);
        subjects.extend(nearest(&trace.subject_candidates, &seen_subjects));
        objects.extend(nearest(&trace.object_candidates, &seen_objects));
    }
    let direct_subjects = plausible_subjects(
        &subjects,
        &trace.predicate_candidates,
        &objects,
        &aggregates.subjects,
    );
    let direct_objects = plausible_objects(
        &objects,
        &subjects,
        &trace.predicate_candidates,
        &aggregates.objects,
    );
    trace.backoff_subjects = direct_subjects
        .difference(&trace.subject_candidates)
        .cloned()
        .collect();
    trace.backoff_objects = direct_objects
        .difference(&trace.object_candidates)
        .cloned()
        .collect();
    trace.plausible_subjects =
        truncate_seeds_first(&trace.subject_candidates, direct_subjects, cap);
    trace.plausible_objects = truncate_seeds_first(&trace.object_candidates, direct_objects, cap);

    let mut plausible_predicates = trace.predicate_candidates.clone();
    for s in &trace.plausible_subjects {
        for o in &trace.plausible_objects {
            plausible_predicates.extend(aggregates.predicates_for(s, o).iter().cloned());
        }
    }
    trace.plausible_predicates = plausible_predicates;

    let ranked = match rank_predicates(
        lexicon,
        &trace.plausible_predicates,
        &trace.sister_predicates,
        config.predicate_keep_fraction,
    ) {
        Ok(r) => r,
        Err(_) => return (Vec::new(), trace),
    };
    trace.kept_predicates = ranked.iter().map(|(p, _)| p.clone()).collect();
    trace.predicate_scores = ranked;
    // Scores for the dropped predicates too, for the trace.
    for p in &trace.plausible_predicates {
        if !trace.kept_predicates.contains(p) {
            let score = lexicon.mean_wup(p, &trace.sister_predicates).unwrap_or(0.0);
            trace.predicate_scores.push((p.clone(), score));
        }
    }

    let grounding = Grounding {
        subject: triplet.subject_slot(),
        predicate: triplet.predicate_slot(),
        object: triplet.object_slot(),
    };
    let mut keys = BTreeSet::new();
    for s in &trace.plausible_subjects {
        for p in &trace.kept_predicates {
            // OAG[(s, p)] lists exactly the objects that occur with (s, p).
            for o in aggregates.objects_for(s, p) {
                if trace.plausible_objects.contains(o) {
                    let key = TripletKey::new(s.clone(), p.clone(), o.clone());
                    if index.contains(&key) {
                        keys.insert(key);
                    }
                }
            }
        }
    }
    let approximates: Vec<ApproximateTriplet> = keys
        .into_iter()
        .map(|key| ApproximateTriplet {
            key,
            source_triplet: triplet.index,
            grounding: grounding.clone(),
        })
        .collect();
    trace.approximates = approximates
        .iter()
        .map(|a| (a.key.clone(), index.postings_for(&a.key).len()))
        .collect();
    (approximates, trace)
}

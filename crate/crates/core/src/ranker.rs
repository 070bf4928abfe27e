//! Image scoring and ranking.
//!
//! Per image: every matched approximate occurrence is grounded to the query
//! with embedding distances, occurrences sharing image nodes are collapsed
//! into subgraphs, a greedy cover picks subgraphs until every query triplet
//! is served, and the per-triplet scores are folded into one Euclidean norm.
//! Lower is better.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::approximator::ApproximateTriplet;
use crate::embedding::{node_distance, EmbeddingStore, Vector};
use crate::index::{CandidateMatch, ImageCandidateMap};
use crate::lexicon::{Lexicon, SynsetId};
use crate::querydsl::{CanonicalTriplet, Slot};

/// One approximate occurrence in an image, with per-slot distances.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedPrimitive {
    pub approximate: ApproximateTriplet,
    pub subject_node: String,
    pub object_node: String,
    pub node_distances: BTreeMap<Slot, f64>,
}

impl GroundedPrimitive {
    fn content_key(&self) -> (usize, &SynsetId, &SynsetId, &SynsetId, &str, &str) {
        let k = &self.approximate.key;
        (
            self.approximate.source_triplet,
            &k.subject,
            &k.predicate,
            &k.object,
            &self.subject_node,
            &self.object_node,
        )
    }

    fn slots(&self) -> [Slot; 3] {
        let g = &self.approximate.grounding;
        [g.subject.clone(), g.predicate.clone(), g.object.clone()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedSubgraph {
    pub id: usize,
    pub primitives: Vec<GroundedPrimitive>,
    pub covered_triplets: BTreeSet<usize>,
    /// Slot -> distance; slots of covered triplets with nothing grounded
    /// carry a null node at 1.0.
    pub node_scores: BTreeMap<Slot, f64>,
    /// Query slots of each covered triplet.
    pub triplet_slots: BTreeMap<usize, [Slot; 3]>,
}

impl CollapsedSubgraph {
    pub fn size(&self) -> usize {
        self.covered_triplets.len()
    }

    pub fn total_score(&self) -> f64 {
        self.node_scores.values().sum()
    }

    /// Mean of the node scores over triplet `i`'s three slots.
    pub fn triplet_score(&self, i: usize) -> Option<f64> {
        let slots = self.triplet_slots.get(&i)?;
        let sum: f64 = slots
            .iter()
            .map(|s| self.node_scores.get(s).copied().unwrap_or(1.0))
            .sum();
        Some(sum / 3.0)
    }
}

/// One greedy pick and the triplets it covered first.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverStep<'a> {
    pub subgraph: &'a CollapsedSubgraph,
    pub newly_covered: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub image_id: String,
    pub triplet_scores: Vec<f64>,
    pub image_score: f64,
    /// Ids of the picked subgraphs, in pick order.
    pub selected_subgraphs: Vec<usize>,
    /// The picked subgraphs themselves, for explanations.
    pub explanation: Vec<CollapsedSubgraph>,
}

fn slot_label<'q>(query: &'q [CanonicalTriplet], slot: &Slot) -> Option<&'q str> {
    match slot {
        Slot::Predicate(i) => query
            .iter()
            .find(|t| t.index == *i)
            .map(|t| t.predicate_label.as_str()),
        Slot::Node(h) => query.iter().find_map(|t| {
            if &t.subject_handle == h {
                Some(t.subject_label.as_str())
            } else if &t.object_handle == h {
                Some(t.object_label.as_str())
            } else {
                None
            }
        }),
    }
}

/// One primitive per (approximate, occurrence) in an image's candidate
/// entry. Distances compare the image synset's centroid with the query
/// label's token vector.
pub fn ground_primitives(
    entry: &BTreeMap<usize, Vec<CandidateMatch>>,
    query: &[CanonicalTriplet],
    lexicon: &Lexicon,
    embeddings: &EmbeddingStore,
) -> Vec<GroundedPrimitive> {
    let mut label_vectors: HashMap<Slot, Option<Vector>> = HashMap::new();
    let mut synset_vectors: HashMap<SynsetId, Option<Vector>> = HashMap::new();
    let mut out = Vec::new();
    for matches in entry.values() {
        for m in matches {
            let a = &m.approximate;
            let roles = [
                (&a.grounding.subject, &a.key.subject),
                (&a.grounding.predicate, &a.key.predicate),
                (&a.grounding.object, &a.key.object),
            ];
            let mut distances = BTreeMap::new();
            for (slot, synset) in roles {
                let query_vec = label_vectors.entry(slot.clone()).or_insert_with(|| {
                    slot_label(query, slot).and_then(|l| embeddings.token_vector(l))
                });
                let image_vec = synset_vectors.entry(synset.clone()).or_insert_with(|| {
                    embeddings
                        .synset_vector(lexicon, synset)
                        .expect("indexed synsets belong to the lexicon")
                });
                let d = node_distance(image_vec.as_ref(), query_vec.as_ref())
                    .expect("vectors from one store share a dimension");
                distances.insert(slot.clone(), d);
            }
            for occ in &m.occurrences {
                out.push(GroundedPrimitive {
                    approximate: a.clone(),
                    subject_node: occ.subject_node.clone(),
                    object_node: occ.object_node.clone(),
                    node_distances: distances.clone(),
                });
            }
        }
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Groups primitives connected through shared image nodes. Subgraph ids
/// follow the sorted content of each group, so input order does not matter.
pub fn collapse_subgraphs(primitives: Vec<GroundedPrimitive>) -> Vec<CollapsedSubgraph> {
    let mut primitives = primitives;
    primitives.sort_by(|a, b| a.content_key().cmp(&b.content_key()));
    primitives.dedup_by(|a, b| a.content_key() == b.content_key());

    let mut node_ids: HashMap<&str, usize> = HashMap::new();
    for p in &primitives {
        for node in [p.subject_node.as_str(), p.object_node.as_str()] {
            let next = node_ids.len();
            node_ids.entry(node).or_insert(next);
        }
    }
    let mut parent: Vec<usize> = (0..node_ids.len()).collect();
    for p in &primitives {
        let a = find(&mut parent, node_ids[p.subject_node.as_str()]);
        let b = find(&mut parent, node_ids[p.object_node.as_str()]);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let roots: Vec<usize> = primitives
        .iter()
        .map(|p| find(&mut parent, node_ids[p.subject_node.as_str()]))
        .collect();

    // Primitives are sorted, so groups come out sorted by their first member.
    let mut groups: Vec<Vec<GroundedPrimitive>> = Vec::new();
    let mut group_of: HashMap<usize, usize> = HashMap::new();
    for (p, root) in primitives.into_iter().zip(roots) {
        let g = *group_of.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(p);
    }

    groups
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let mut node_scores: BTreeMap<Slot, f64> = BTreeMap::new();
            let mut triplet_slots = BTreeMap::new();
            for p in &members {
                for (slot, d) in &p.node_distances {
                    node_scores
                        .entry(slot.clone())
                        .and_modify(|best| *best = best.min(*d))
                        .or_insert(*d);
                }
                triplet_slots
                    .entry(p.approximate.source_triplet)
                    .or_insert_with(|| p.slots());
            }
            for slots in triplet_slots.values() {
                for slot in slots {
                    node_scores.entry(slot.clone()).or_insert(1.0);
                }
            }
            CollapsedSubgraph {
                id,
                covered_triplets: triplet_slots.keys().copied().collect(),
                primitives: members,
                node_scores,
                triplet_slots,
            }
        })
        .collect()
}

/// Greedy cover: repeatedly take the subgraph adding the most uncovered
/// triplets, then the smallest total score, then the smallest id.
pub fn select_cover(subgraphs: &[CollapsedSubgraph], n_triplets: usize) -> Vec<CoverStep<'_>> {
    let mut uncovered: BTreeSet<usize> = (0..n_triplets).collect();
    let mut used = vec![false; subgraphs.len()];
    let mut steps = Vec::new();
    while !uncovered.is_empty() {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, s) in subgraphs.iter().enumerate() {
            if used[i] {
                continue;
            }
            let gain = s.covered_triplets.intersection(&uncovered).count();
            if gain == 0 {
                continue;
            }
            let score = s.total_score();
            let better = match best {
                None => true,
                Some((b, bgain, bscore)) => {
                    gain > bgain
                        || (gain == bgain
                            && (score < bscore || (score == bscore && s.id < subgraphs[b].id)))
                }
            };
            if better {
                best = Some((i, gain, score));
            }
        }
        let Some((i, _, _)) = best else { break };
        used[i] = true;
        let newly: BTreeSet<usize> = subgraphs[i]
            .covered_triplets
            .intersection(&uncovered)
            .copied()
            .collect();
        for t in &newly {
            uncovered.remove(t);
        }
        steps.push(CoverStep {
            subgraph: &subgraphs[i],
            newly_covered: newly,
        });
    }
    steps
}

/// `S_i` from the pick that first covered triplet `i`; 1 when uncovered.
pub fn triplet_scores(selection: &[CoverStep<'_>], n_triplets: usize) -> Vec<f64> {
    let mut scores = vec![1.0; n_triplets];
    for step in selection {
        for &t in &step.newly_covered {
            if t < n_triplets {
                scores[t] = step
                    .subgraph
                    .triplet_score(t)
                    .unwrap_or(1.0)
                    .clamp(0.0, 1.0);
            }
        }
    }
    scores
}

pub fn image_score(scores: &[f64]) -> f64 {
    scores.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Ranks every image in the candidate map, best (lowest score) first, ties
/// by image id.
pub fn rank_images(
    candidates: &ImageCandidateMap,
    query: &[CanonicalTriplet],
    lexicon: &Lexicon,
    embeddings: &EmbeddingStore,
    n_triplets: usize,
) -> Vec<RankedResult> {
    let mut results: Vec<RankedResult> = candidates
        .iter()
        .map(|(image_id, entry)| {
            let subgraphs =
                collapse_subgraphs(ground_primitives(entry, query, lexicon, embeddings));
            let selection = select_cover(&subgraphs, n_triplets);
            let scores = triplet_scores(&selection, n_triplets);
            RankedResult {
                image_id: image_id.clone(),
                image_score: image_score(&scores),
                triplet_scores: scores,
                selected_subgraphs: selection.iter().map(|s| s.subgraph.id).collect(),
                explanation: selection.iter().map(|s| s.subgraph.clone()).collect(),
            }
        })
        .collect();
    results.sort_by(|a, b| {
        a.image_score
            .total_cmp(&b.image_score)
            .then_with(|| a.image_id.cmp(&b.image_id))
    });
    results
}

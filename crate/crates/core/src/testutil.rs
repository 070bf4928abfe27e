//! Shared generators for unit tests.

use std::collections::BTreeMap;

use proptest::prelude::*;

use crate::corpus::{Corpus, ImageGraph, RelationshipInstance, SceneObject};
use crate::lexicon::{load_lexicon, Lexicon, SynsetId};

pub const NOUNS: usize = 6;
pub const VERBS: usize = 3;

pub fn noun(i: usize) -> SynsetId {
    SynsetId::new(&format!("thing{i}.n.01")).unwrap()
}

pub fn verb(i: usize) -> SynsetId {
    SynsetId::new(&format!("act{i}.v.01")).unwrap()
}

/// Two-level taxonomy: `entity.n.01` over `thing*`, `act.v.01` over `act*`.
pub fn small_lexicon() -> Lexicon {
    let mut text = String::from("entity.n.01\tentity\t\nact.v.01\tact\t\n");
    for i in 0..NOUNS {
        text.push_str(&format!("thing{i}.n.01\tthing{i}\tentity.n.01\n"));
    }
    for i in 0..VERBS {
        text.push_str(&format!("act{i}.v.01\tact{i}\tact.v.01\n"));
    }
    load_lexicon(text.as_bytes()).unwrap()
}

fn arb_image(max_rels: usize) -> impl Strategy<Value = (Vec<usize>, Vec<(usize, usize, usize)>)> {
    (2usize..5).prop_flat_map(move |n_obj| {
        (
            prop::collection::vec(0..NOUNS, n_obj),
            prop::collection::vec((0..n_obj, 0..VERBS, 1..n_obj), 1..=max_rels),
        )
    })
}

/// Random corpora over [`small_lexicon`].
pub fn arb_corpus(max_images: usize, max_rels: usize) -> impl Strategy<Value = Corpus> {
    prop::collection::vec(arb_image(max_rels), 1..=max_images).prop_map(|images| {
        let graphs = images.into_iter().enumerate().map(|(i, (objs, rels))| {
            let n = objs.len();
            let objects: BTreeMap<String, SceneObject> = objs
                .iter()
                .enumerate()
                .map(|(k, &s)| {
                    let node_id = format!("o{k}");
                    (
                        node_id.clone(),
                        SceneObject {
                            node_id,
                            synset: noun(s),
                            label: format!("thing{s}"),
                        },
                    )
                })
                .collect();
            let relationships = rels
                .into_iter()
                .map(|(s, p, offset)| RelationshipInstance {
                    subject_node: format!("o{s}"),
                    predicate_synset: verb(p),
                    predicate_label: format!("act{p}"),
                    object_node: format!("o{}", (s + offset) % n),
                })
                .collect();
            ImageGraph {
                image_id: format!("i{i:02}"),
                uri: None,
                objects,
                relationships,
            }
        });
        Corpus::from_images(graphs).unwrap()
    })
}

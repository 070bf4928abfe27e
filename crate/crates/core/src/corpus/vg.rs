//! Best-effort conversion of a Visual Genome `scene_graphs.json` export into
//! the scene-graph line format.
//!
//! Each object keeps its first listed synset. Objects without a usable synset
//! are dropped, as are relationships touching them and images left without a
//! relationship.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde_json::Value;
use thiserror::Error;

use super::{ImageGraph, RelationshipInstance, SceneObject};
use crate::lexicon::{normalize_term, Lexicon, SynsetId};

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expected a JSON array of scene graphs")]
    NotAnArray,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConversionStats {
    pub images_written: usize,
    pub images_dropped: usize,
    pub objects_dropped: usize,
    pub relationships_dropped: usize,
}

fn id_string(value: Option<&Value>) -> Option<String> {
    match value? {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        _ => None,
    }
}

fn first_synset(value: Option<&Value>, lexicon: Option<&Lexicon>) -> Option<SynsetId> {
    let first = value?.as_array()?.first()?.as_str()?;
    let id = SynsetId::new(first).ok()?;
    match lexicon {
        Some(lex) if !lex.contains(&id) => None,
        _ => Some(id),
    }
}

fn object_label(obj: &Value) -> String {
    let raw = obj
        .get("names")
        .and_then(|n| n.as_array())
        .and_then(|n| n.first())
        .and_then(|n| n.as_str())
        .or_else(|| obj.get("name").and_then(|n| n.as_str()))
        .unwrap_or("object");
    let label = normalize_term(raw);
    if label.is_empty() {
        "object".to_owned()
    } else {
        label.replace('|', "_")
    }
}

fn endpoint(rel: &Value, key: &str) -> Option<String> {
    id_string(rel.get(format!("{key}_id").as_str()))
        .or_else(|| id_string(rel.get(key).and_then(|o| o.get("object_id"))))
}

/// Converts one scene graph. Returns `None` when nothing usable is left.
pub fn convert_scene_graph(
    graph: &Value,
    lexicon: Option<&Lexicon>,
    stats: &mut ConversionStats,
) -> Option<ImageGraph> {
    let image_id = id_string(graph.get("image_id"))?;
    let mut objects = BTreeMap::new();
    let mut raw_objects: Vec<&Value> = graph
        .get("objects")
        .and_then(|o| o.as_array())
        .map(|o| o.iter().collect())
        .unwrap_or_default();
    // relationships.json style exports nest the endpoint objects.
    if let Some(rels) = graph.get("relationships").and_then(|r| r.as_array()) {
        for rel in rels {
            for key in ["subject", "object"] {
                if let Some(obj) = rel.get(key).filter(|o| o.is_object()) {
                    raw_objects.push(obj);
                }
            }
        }
    }
    let mut seen = HashSet::new();
    for obj in raw_objects {
        let Some(node_id) = id_string(obj.get("object_id")) else {
            stats.objects_dropped += 1;
            continue;
        };
        if !seen.insert(node_id.clone()) {
            continue;
        }
        match first_synset(obj.get("synsets"), lexicon) {
            Some(synset) => {
                objects.insert(
                    node_id.clone(),
                    SceneObject {
                        node_id,
                        synset,
                        label: object_label(obj),
                    },
                );
            }
            None => stats.objects_dropped += 1,
        }
    }

    let mut relationships = Vec::new();
    for rel in graph
        .get("relationships")
        .and_then(|r| r.as_array())
        .map(Vec::as_slice)
        .unwrap_or_default()
    {
        let subject = endpoint(rel, "subject");
        let object = endpoint(rel, "object");
        let predicate = first_synset(rel.get("synsets"), lexicon);
        match (subject, object, predicate) {
            (Some(s), Some(o), Some(p))
                if s != o && objects.contains_key(&s) && objects.contains_key(&o) =>
            {
                let label =
                    normalize_term(rel.get("predicate").and_then(|p| p.as_str()).unwrap_or(""));
                let label = if label.is_empty() {
                    p.as_str().split('.').next().unwrap_or("rel").to_owned()
                } else {
                    label.replace('|', "_")
                };
                relationships.push(RelationshipInstance {
                    subject_node: s,
                    predicate_synset: p,
                    predicate_label: label,
                    object_node: o,
                });
            }
            _ => stats.relationships_dropped += 1,
        }
    }
    if relationships.is_empty() {
        stats.images_dropped += 1;
        return None;
    }
    // Keep only objects that take part in a relationship.
    let used: HashSet<&String> = relationships
        .iter()
        .flat_map(|r| [&r.subject_node, &r.object_node])
        .collect();
    let objects = objects
        .iter()
        .filter(|(k, _)| used.contains(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let uri = graph.get("url").and_then(|u| u.as_str()).map(str::to_owned);
    Some(ImageGraph {
        image_id,
        uri,
        objects,
        relationships,
    })
}

/// Reads a Visual Genome JSON array and writes scene-graph lines.
pub fn convert_visual_genome(
    source: impl Read,
    mut sink: impl Write,
    lexicon: Option<&Lexicon>,
) -> Result<ConversionStats, ConvertError> {
    let value: Value = serde_json::from_reader(source)?;
    let graphs = value.as_array().ok_or(ConvertError::NotAnArray)?;
    let mut stats = ConversionStats::default();
    let mut written = HashSet::new();
    for graph in graphs {
        if let Some(image) = convert_scene_graph(graph, lexicon, &mut stats) {
            if !written.insert(image.image_id.clone()) {
                stats.images_dropped += 1;
                continue;
            }
            writeln!(sink, "{}", image.to_line())?;
            stats.images_written += 1;
        }
    }
    sink.flush()?;
    Ok(stats)
}

//! The query pipeline end to end: parse, approximate, look up, rank.

use crate::approximator::{
    generate_approximates_traced, ApproxConfig, ApproxTrace, ApproximateTriplet,
};
use crate::db::Database;
use crate::embedding::EmbeddingStore;
use crate::lexicon::Lexicon;
use crate::querydsl::{canonical_forms, parse_query, CanonicalTriplet, ParseError, QueryGraph};
use crate::ranker::{rank_images, RankedResult};

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub query: QueryGraph,
    pub triplets: Vec<CanonicalTriplet>,
    /// One per canonical triplet.
    pub traces: Vec<ApproxTrace>,
    pub approximates: Vec<ApproximateTriplet>,
    /// Every image with at least one match, best first.
    pub results: Vec<RankedResult>,
}

pub fn evaluate(
    query_text: &str,
    db: &Database,
    lexicon: &Lexicon,
    embeddings: &EmbeddingStore,
    config: &ApproxConfig,
) -> Result<Evaluation, ParseError> {
    let query = parse_query(query_text)?;
    let triplets = canonical_forms(&query);
    let mut traces = Vec::with_capacity(triplets.len());
    let mut approximates = Vec::new();
    for t in &triplets {
        let (approx, trace) =
            generate_approximates_traced(t, lexicon, &db.aggregates, &db.index, config);
        approximates.extend(approx);
        traces.push(trace);
    }
    let candidates = db.index.assemble_candidates(&approximates);
    let results = rank_images(&candidates, &triplets, lexicon, embeddings, triplets.len());
    Ok(Evaluation {
        query,
        triplets,
        traces,
        approximates,
        results,
    })
}

pub mod aggregates;
pub mod approximator;
pub mod cli;
pub mod corpus;
pub mod db;
pub mod embedding;
pub mod engine;
pub mod index;
pub mod lexicon;
pub mod querydsl;
pub mod ranker;

#[cfg(test)]
pub(crate) mod testutil;

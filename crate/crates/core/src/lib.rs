//! Mention-network mining for tweet corpora: ingestion, @-mention
//! extraction, weighted graph construction, degree statistics, community
//! and tagging-ring detection, and a planted-truth synthetic generator.

pub mod communities;
pub mod corpus;
pub mod graphstats;
pub mod mention;
pub mod netbuild;
pub mod pipeline;
pub mod synthgen;

//! Semantic interpretation of data tables through data profiles.
//!
//! Columns and knowledge-graph data type relations are summarized as fixed
//! length feature vectors, a Siamese network scores column/relation pairs, and
//! the selected mappings are connected into a data graph plan that is emitted
//! as an RML mapping.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod catalog;
pub mod datagen;
pub mod graphgen;
pub mod matcher;
pub mod pipeline;
pub mod profiler;
pub mod rdf;
pub mod rml;
pub mod scalar;
pub mod tabular;

pub use scalar::Scalar;

pub type FeatureVector = profiler::FeatureVector<f64>;
pub type ColumnProfile = profiler::ColumnProfile<f64>;
pub type RelationProfile = profiler::RelationProfile<f64>;
pub type DomainProfile = profiler::DomainProfile<f64>;
pub type SiameseModel = matcher::SiameseModel<f64>;
pub type TrainingPair = matcher::TrainingPair<f64>;
pub type ColumnCandidates = matcher::ColumnCandidates<f64>;
pub type Interpretation = pipeline::Interpretation<f64>;

/// Single-precision variants.
pub mod f32 {
    pub type FeatureVector = crate::profiler::FeatureVector<f32>;
    pub type DomainProfile = crate::profiler::DomainProfile<f32>;
    pub type SiameseModel = crate::matcher::SiameseModel<f32>;
    pub type TrainingPair = crate::matcher::TrainingPair<f32>;
}

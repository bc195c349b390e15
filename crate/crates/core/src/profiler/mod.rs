//! Statistical profiles of table columns and data type relations.
//!
//! Every profile is a [`FeatureVector`] with the fixed layout in [`layout`].
//! Serialized models and semantic profiles depend on that layout, so it is
//! versioned by [`layout::LAYOUT_VERSION`].

pub mod stats;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::rdf::{DomainOntology, GraphIndex, OntologyError, RdfGraph, RelationKey};
use crate::scalar::Scalar;
use crate::tabular::values::{parse_boolean, parse_number, parse_temporal, parse_wkt};
use crate::tabular::{identify_types, CoarseType, ColumnTyping, DataTable, FineType};

/// Index table of the feature vector.
///
/// | slots  | features |
/// |--------|----------|
/// | 0..16  | data type flags, [`FineType`] order |
/// | 16..19 | value count, non-null count, distinct count |
/// | 19..29 | std-dev, mean, skewness, kurtosis, outliers, avg chars, digits, tokens, capitals, specials |
/// | 29..39 | histogram buckets, ascending |
/// | 39..44 | min, q25, q50, q75, max |
/// | 44..53 | deciles d10..d90 |
pub mod layout {
    use std::ops::Range;

    pub const LAYOUT_VERSION: u32 = 1;
    pub const FEATURE_COUNT: usize = 53;
    pub const HISTOGRAM_BUCKETS: usize = 10;

    pub const TYPE_FLAGS: Range<usize> = 0..16;
    pub const VALUE_COUNT: usize = 16;
    pub const NON_NULL_COUNT: usize = 17;
    pub const DISTINCT_COUNT: usize = 18;
    pub const STD_DEV: usize = 19;
    pub const MEAN: usize = 20;
    pub const SKEWNESS: usize = 21;
    pub const KURTOSIS: usize = 22;
    pub const OUTLIER_COUNT: usize = 23;
    pub const AVG_CHARS: usize = 24;
    pub const AVG_DIGITS: usize = 25;
    pub const AVG_TOKENS: usize = 26;
    pub const AVG_CAPITALS: usize = 27;
    pub const AVG_SPECIALS: usize = 28;
    pub const HISTOGRAM: Range<usize> = 29..39;
    pub const QUARTILES: Range<usize> = 39..44;
    pub const DECILES: Range<usize> = 44..53;
    pub const QUANTILES: Range<usize> = 39..53;
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T>([T; layout::FEATURE_COUNT]);

impl<T: Scalar> FeatureVector<T> {
    pub fn zeros() -> Self {
        FeatureVector([T::zero(); layout::FEATURE_COUNT])
    }

    pub fn from_slice(values: &[T]) -> Option<Self> {
        values.try_into().ok().map(FeatureVector)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// Data type tags encoded in the flag block.
    pub fn fine_types(&self) -> BTreeSet<FineType> {
        FineType::ALL
            .into_iter()
            .filter(|f| self.0[f.index()] != T::zero())
            .collect()
    }

    pub fn value_count(&self) -> usize {
        self.0[layout::VALUE_COUNT].to_usize().unwrap_or(0)
    }

    pub fn non_null_count(&self) -> usize {
        self.0[layout::NON_NULL_COUNT].to_usize().unwrap_or(0)
    }

    pub fn distinct_count(&self) -> usize {
        self.0[layout::DISTINCT_COUNT].to_usize().unwrap_or(0)
    }

    pub fn histogram(&self) -> &[T] {
        &self.0[layout::HISTOGRAM]
    }

    pub fn quantiles(&self) -> &[T] {
        &self.0[layout::QUANTILES]
    }

    pub fn cast<U: Scalar>(&self) -> FeatureVector<U> {
        let mut out = FeatureVector::<U>::zeros();
        for (o, v) in out.0.iter_mut().zip(self.0.iter()) {
            *o = U::of(v.as_f64());
        }
        out
    }
}

impl<T> Index<usize> for FeatureVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for FeatureVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("all values are null")]
    AllNull,
    #[error("value {value:?} cannot be read as {coarse}")]
    UnparseableValue { value: String, coarse: CoarseType },
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnProfile<T> {
    pub column_id: String,
    pub column_index: usize,
    pub typing: ColumnTyping,
    pub vector: FeatureVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationProfile<T> {
    pub relation: RelationKey,
    pub typing: ColumnTyping,
    pub vector: FeatureVector<T>,
    /// Instances of the relation's class in the profiled graph.
    pub class_instances: usize,
    /// Instances that carry the relation at least once.
    pub covered_instances: usize,
}

/// Domain knowledge reduced to statistics: no entities or literals are retained.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainProfile<T> {
    pub ontology: DomainOntology,
    pub relation_profiles: BTreeMap<RelationKey, RelationProfile<T>>,
    pub identifying: BTreeSet<RelationKey>,
}

impl<T: Scalar> DomainProfile<T> {
    pub fn is_identifying(&self, key: &RelationKey) -> bool {
        self.identifying.contains(key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileWarning {
    pub subject: String,
    pub message: String,
}

/// Reads one value as a number according to its coarse type.
fn transform_one(value: &str, coarse: CoarseType) -> Option<f64> {
    match coarse {
        CoarseType::Text => Some(value.chars().count() as f64),
        CoarseType::Numeric => parse_number(value),
        CoarseType::Boolean => parse_boolean(value).map(|b| f64::from(u8::from(b))),
        CoarseType::Temporal => parse_temporal(value).map(|t| t.timestamp()),
        CoarseType::Spatial => parse_wkt(value).map(|g| g.measure()),
    }
}

/// Numeric view of the values: lengths for text, 0/1 for booleans, epoch seconds
/// for temporal values, length or area for geometries.
pub fn numeric_transform(values: &[&str], typing: &ColumnTyping) -> Result<Vec<f64>, ProfileError> {
    values
        .iter()
        .map(|v| {
            transform_one(v, typing.coarse).ok_or_else(|| ProfileError::UnparseableValue {
                value: v.to_string(),
                coarse: typing.coarse,
            })
        })
        .collect()
}

fn text_averages<T: Scalar>(values: &[&str], out: &mut FeatureVector<T>) {
    let (mut chars, mut digits, mut tokens, mut capitals, mut specials) = (0, 0, 0, 0, 0);
    for v in values {
        tokens += v.split_whitespace().count();
        for c in v.chars() {
            chars += 1;
            if c.is_ascii_digit() {
                digits += 1;
            }
            if c.is_uppercase() {
                capitals += 1;
            }
            if !c.is_alphanumeric() && !c.is_whitespace() {
                specials += 1;
            }
        }
    }
    let n = T::of_usize(values.len());
    out[layout::AVG_CHARS] = T::of_usize(chars) / n;
    out[layout::AVG_DIGITS] = T::of_usize(digits) / n;
    out[layout::AVG_TOKENS] = T::of_usize(tokens) / n;
    out[layout::AVG_CAPITALS] = T::of_usize(capitals) / n;
    out[layout::AVG_SPECIALS] = T::of_usize(specials) / n;
}

/// Profiles one column or relation. Values failing the typing's parser (at most
/// 10% by construction of the typing) are left out of the numeric statistics.
pub fn compute_feature_vector<T: Scalar>(
    values: &[Option<&str>],
    typing: &ColumnTyping,
) -> Result<FeatureVector<T>, ProfileError> {
    let present: Vec<&str> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(ProfileError::AllNull);
    }
    let mut v = FeatureVector::zeros();
    for f in &typing.fine {
        v[f.index()] = T::one();
    }
    v[layout::VALUE_COUNT] = T::of_usize(values.len());
    v[layout::NON_NULL_COUNT] = T::of_usize(present.len());
    v[layout::DISTINCT_COUNT] = T::of_usize(present.iter().collect::<HashSet<_>>().len());
    text_averages(&present, &mut v);

    let nums: Vec<T> = stats::sorted(
        &present
            .iter()
            .filter_map(|x| transform_one(x, typing.coarse))
            .map(T::of)
            .collect::<Vec<_>>(),
    );
    if nums.is_empty() {
        return Ok(v);
    }
    let m = stats::moments(&nums).expect("non-empty");
    v[layout::STD_DEV] = m.std_dev;
    v[layout::MEAN] = m.mean;
    v[layout::SKEWNESS] = m.skewness;
    v[layout::KURTOSIS] = m.excess_kurtosis;
    let (outliers, kept) = stats::iqr_outliers(&nums);
    v[layout::OUTLIER_COUNT] = T::of_usize(outliers.len());
    if !kept.is_empty() {
        let hist = stats::histogram(&kept, layout::HISTOGRAM_BUCKETS).expect("non-empty");
        for (slot, count) in layout::HISTOGRAM.zip(hist) {
            v[slot] = T::of_usize(count);
        }
    }
    let q = stats::quantiles(&nums).expect("non-empty");
    for (slot, value) in layout::QUANTILES.zip(q) {
        v[slot] = value;
    }
    Ok(v)
}

/// One profile per column; all-null columns are skipped and reported.
pub fn profile_table<T: Scalar>(table: &DataTable) -> (Vec<ColumnProfile<T>>, Vec<ProfileWarning>) {
    let mut profiles = Vec::new();
    let mut warnings = Vec::new();
    for (n, col) in table.columns().iter().enumerate() {
        let values = table.column_values(n);
        let result = identify_types(&values)
            .map_err(|_| ProfileError::AllNull)
            .and_then(|typing| {
                compute_feature_vector(&values, &typing).map(|vector| (typing, vector))
            });
        match result {
            Ok((typing, vector)) => profiles.push(ColumnProfile {
                column_id: col.id.clone(),
                column_index: n,
                typing,
                vector,
            }),
            Err(e) => warnings.push(ProfileWarning {
                subject: col.id.clone(),
                message: e.to_string(),
            }),
        }
    }
    (profiles, warnings)
}

/// Profiles every data type relation of a knowledge graph.
pub fn profile_domain<T: Scalar>(kg: &RdfGraph) -> Result<DomainProfile<T>, ProfileError> {
    let index = GraphIndex::build(kg);
    if index.types.is_empty() {
        return Err(OntologyError::NoTypedEntities.into());
    }
    let ontology = index.ontology();
    let mut relation_profiles = BTreeMap::new();
    let mut identifying = BTreeSet::new();
    for (key, typing) in &ontology.datatype_relations {
        let literals = &index.literals[key];
        let cells: Vec<Option<&str>> = literals
            .values
            .iter()
            .map(|v| (!v.is_empty()).then_some(v.as_str()))
            .collect();
        let profile = RelationProfile {
            relation: key.clone(),
            typing: typing.clone(),
            vector: compute_feature_vector(&cells, typing)?,
            class_instances: index.instance_count(&key.class),
            covered_instances: literals.subjects.len(),
        };
        if is_identifying(&profile) {
            identifying.insert(key.clone());
        }
        relation_profiles.insert(key.clone(), profile);
    }
    Ok(DomainProfile {
        ontology,
        relation_profiles,
        identifying,
    })
}

/// A relation identifies its class when every instance carries it exactly once
/// and the values are unique.
pub fn is_identifying<T: Scalar>(profile: &RelationProfile<T>) -> bool {
    let v = &profile.vector;
    let n = profile.class_instances;
    n > 0
        && v.value_count() == n
        && v.non_null_count() == n
        && v.distinct_count() == n
        && profile.covered_instances == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_turtle;
    use crate::tabular::{parse_table, Dialect};

    fn some<'a>(v: &[&'a str]) -> Vec<Option<&'a str>> {
        v.iter().map(|s| Some(*s)).collect()
    }

    #[test]
    fn transforms() {
        let text = ColumnTyping::new(CoarseType::Text, [FineType::TextOther]);
        assert_eq!(numeric_transform(&["abc", "de"], &text).unwrap(), [3.0, 2.0]);
        let time = ColumnTyping::new(CoarseType::Temporal, [FineType::Time]);
        // 16*3600 + 30*60, 17*3600
        assert_eq!(
            numeric_transform(&["16:30", "17:00"], &time).unwrap(),
            [59400.0, 61200.0]
        );
        let line = ColumnTyping::new(CoarseType::Spatial, [FineType::LineString]);
        assert_eq!(
            numeric_transform(&["LINESTRING(0 0, 3 4)"], &line).unwrap(),
            [5.0]
        );
        let num = ColumnTyping::new(CoarseType::Numeric, [FineType::Integer]);
        assert!(matches!(
            numeric_transform(&["x"], &num),
            Err(ProfileError::UnparseableValue { .. })
        ));
        let b = ColumnTyping::new(CoarseType::Boolean, [FineType::Boolean]);
        assert_eq!(numeric_transform(&["true", "no"], &b).unwrap(), [1.0, 0.0]);
    }

    #[test]
    fn sensor_label_vector() {
        let values = some(&["S1", "S2", "S1"]);
        let typing = identify_types(&values).unwrap();
        let v: FeatureVector<f64> = compute_feature_vector(&values, &typing).unwrap();
        assert_eq!(v[layout::VALUE_COUNT], 3.0);
        assert_eq!(v[layout::NON_NULL_COUNT], 3.0);
        assert_eq!(v[layout::DISTINCT_COUNT], 2.0);
        assert_eq!(v[layout::AVG_CHARS], 2.0);
        assert_eq!(v[layout::AVG_DIGITS], 1.0);
        assert_eq!(v[layout::AVG_CAPITALS], 1.0);
        assert_eq!(v[layout::AVG_TOKENS], 1.0);
        assert_eq!(v[FineType::TextCategorical.index()], 1.0);
        assert_eq!(v.fine_types(), typing.fine);
        // all lengths equal: degenerate spread
        assert_eq!(v[layout::STD_DEV], 0.0);
        assert_eq!(v.histogram()[9], 3.0);
    }

    #[test]
    fn singleton_is_degenerate() {
        let values = some(&["x"]);
        let typing = identify_types(&values).unwrap();
        let v: FeatureVector<f64> = compute_feature_vector(&values, &typing).unwrap();
        assert_eq!(v[layout::STD_DEV], 0.0);
        assert_eq!(v[layout::SKEWNESS], 0.0);
        assert_eq!(v[layout::KURTOSIS], 0.0);
    }

    #[test]
    fn outliers_leave_the_histogram() {
        let values = some(&["1", "2", "3", "4", "100"]);
        let typing = identify_types(&values).unwrap();
        let v: FeatureVector<f64> = compute_feature_vector(&values, &typing).unwrap();
        assert_eq!(v[layout::OUTLIER_COUNT], 1.0);
        // histogram of [1,2,3,4] over [1,4]: indices floor((x-1)*10/3) = 0,3,6,9
        let expected = stats::histogram(&[1.0, 2.0, 3.0, 4.0], 10).unwrap();
        let got: Vec<usize> = v.histogram().iter().map(|x| *x as usize).collect();
        assert_eq!(got, expected);
        assert_eq!(got, [1, 0, 0, 1, 0, 0, 1, 0, 0, 1]);
        assert_eq!(v.quantiles()[4], 100.0);
        assert_eq!(v.quantiles()[0], 1.0);
    }

    #[test]
    fn nulls_count_only_in_value_count() {
        let values = [Some("a"), None, Some("b")];
        let typing = identify_types(&values).unwrap();
        let v: FeatureVector<f64> = compute_feature_vector(&values, &typing).unwrap();
        assert_eq!(v[layout::VALUE_COUNT], 3.0);
        assert_eq!(v[layout::NON_NULL_COUNT], 2.0);
        let typing = ColumnTyping::new(CoarseType::Text, [FineType::TextOther]);
        assert_eq!(
            compute_feature_vector::<f64>(&[None, None], &typing),
            Err(ProfileError::AllNull)
        );
    }

    #[test]
    fn table_profiles_skip_all_null_columns() {
        let t = parse_table(b"a,b\n1,\n2,\n", &Dialect::csv_with_header()).unwrap();
        let (profiles, warnings) = profile_table::<f64>(&t);
        assert_eq!(profiles.len(), 1);
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].subject, "b");
    }

    #[test]
    fn identifying_relations() {
        let g = parse_turtle(
            br#"@prefix e: <http://e/> .
            e:s1 a e:Sensor ; e:label "S1" ; e:kind "a" .
            e:s2 a e:Sensor ; e:label "S2" ; e:kind "a" .
            e:s3 a e:Sensor ; e:label "S3" .
            "#,
        )
        .unwrap();
        let p = profile_domain::<f64>(&g).unwrap();
        let label = RelationKey::new("http://e/Sensor", "http://e/label");
        let kind = RelationKey::new("http://e/Sensor", "http://e/kind");
        assert!(p.is_identifying(&label));
        // present on 2 of 3 instances
        assert!(!p.is_identifying(&kind));
        assert_eq!(p.relation_profiles.len(), 2);
    }

    #[test]
    fn repeated_values_are_not_identifying() {
        let g = parse_turtle(
            br#"@prefix e: <http://e/> .
            e:s1 a e:S ; e:l "x" . e:s2 a e:S ; e:l "x" . e:s3 a e:S ; e:l "y" ."#,
        )
        .unwrap();
        let p = profile_domain::<f64>(&g).unwrap();
        assert!(p.identifying.is_empty());
    }

    #[test]
    fn empty_graph_has_no_profile() {
        assert_eq!(
            profile_domain::<f64>(&RdfGraph::new()),
            Err(ProfileError::Ontology(OntologyError::NoTypedEntities))
        );
    }
}

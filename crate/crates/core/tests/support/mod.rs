#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tabsem::datagen::synthetic::{random_kg, SyntheticConfig};
use tabsem::datagen::{generate_corpus, make_training_pairs, GenConfig, TrainingInstance};
use tabsem::matcher::{load_model, train, TrainConfig};
use tabsem::rdf::{parse_turtle, RdfGraph};
use tabsem::tabular::{parse_table, DataTable, Dialect};
use tabsem::SiameseModel;

pub const SOSA: &str = "http://www.w3.org/ns/sosa/";
pub const TIME: &str = "http://www.w3.org/2006/time#";
pub const SSN_BASE: &str = "https://www.w3.org/TR/vocab-ssn/";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn running_example(file: &str) -> PathBuf {
    fixtures().join("running_example").join(file)
}

pub fn model_path() -> PathBuf {
    fixtures().join("models/weather.model")
}

pub fn turtle(path: &Path) -> RdfGraph {
    parse_turtle(&std::fs::read(path).unwrap()).unwrap()
}

pub fn sky_sensors() -> DataTable {
    parse_table(&std::fs::read(running_example("sky_sensors.tsv")).unwrap(), &Dialect::tsv()).unwrap()
}

pub fn ssn_domain() -> RdfGraph {
    turtle(&running_example("ssn_domain.ttl"))
}

pub fn fixture_model() -> SiameseModel {
    let file = std::fs::File::open(model_path()).unwrap();
    load_model(std::io::BufReader::new(file)).unwrap()
}

/// Corpus behind the committed model: forty splits of the SSN-style graph plus
/// twenty random graphs.
pub fn fixture_corpus() -> Vec<TrainingInstance> {
    let ssn = ssn_domain();
    let mut instances = Vec::new();
    for seed in 0..40 {
        let cfg = GenConfig {
            seed,
            ..Default::default()
        };
        if let Ok(c) = generate_corpus(&ssn, &format!("ssn{seed}"), &cfg) {
            instances.extend(c.instances);
        }
    }
    for seed in 0..20 {
        let cfg = GenConfig {
            seed,
            ..Default::default()
        };
        let kg = random_kg(seed, &SyntheticConfig::default());
        if let Ok(c) = generate_corpus(&kg, &format!("kg{seed}"), &cfg) {
            instances.extend(c.instances);
        }
    }
    instances
}

pub fn train_fixture_model() -> SiameseModel {
    let pairs = make_training_pairs::<f64>(&fixture_corpus(), Some(1)).unwrap();
    let cfg = TrainConfig {
        epochs: 300,
        ..Default::default()
    };
    train(&pairs, &cfg).unwrap().0
}

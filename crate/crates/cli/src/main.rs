use std::collections::BTreeSet;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::LazyLock;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use tabsem::catalog::{export_domain_profile, export_table_profile, import_domain_profile};
use tabsem::datagen::corpus::{read_corpus, write_instance};
use tabsem::datagen::{
    evaluate, extract_pairwise, extract_setbased, generate_corpus, make_training_pairs, DatasetTable,
    GenConfig,
};
use tabsem::graphgen::GraphError;
use tabsem::matcher::{load_model, save_model, train, TrainConfig, DEFAULT_THRESHOLD, MODEL_FORMAT_VERSION};
use tabsem::pipeline::{interpret_table, InterpretError};
use tabsem::profiler::layout::LAYOUT_VERSION;
use tabsem::profiler::{profile_domain, profile_table};
use tabsem::rdf::{parse_turtle, serialize_turtle, RdfGraph};
use tabsem::rml::{emit_rml, materialize, ns, RmlOptions};
use tabsem::tabular::{parse_table, DataTable, Dialect};
use tabsem::{DomainProfile, SiameseModel};

static VERSION: LazyLock<String> = LazyLock::new(|| {
    format!(
        "{} (feature layout {LAYOUT_VERSION}, model format {MODEL_FORMAT_VERSION})",
        env!("CARGO_PKG_VERSION")
    )
});

#[derive(Parser)]
#[command(name = "tabsem", version = VERSION.as_str(), about = "Semantic table interpretation with data profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct TableArgs {
    /// Field delimiter; `tab` or a single character. Defaults to tab for .tsv files, comma otherwise.
    #[arg(long)]
    delimiter: Option<String>,
    /// Whether the first row holds column names. Defaults to false for .tsv files, true otherwise.
    #[arg(long)]
    header: Option<bool>,
}

#[derive(clap::Args)]
struct SeedArg {
    #[arg(long, env = "TAB2KG_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Setting {
    Pairwise,
    SetBased,
}

#[derive(Subcommand)]
enum Command {
    /// Profile the columns of a table and write the semantic profile as Turtle.
    ProfileTable {
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        format: TableArgs,
        /// Dataset IRI; derived from the file name when missing.
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Profile the data type relations of a knowledge graph.
    ProfileDomain {
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Split knowledge graphs and extract training tables from them.
    GenerateTrainingData {
        /// Directory of .ttl knowledge graphs.
        #[arg(long)]
        kgs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        tables_per_kg: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Train a matching model on a generated corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        #[arg(long, default_value_t = 100)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 256)]
        hidden_dim: usize,
        #[arg(long, default_value_t = 100)]
        patience: usize,
        /// Subsample negatives to the number of positives per table.
        #[arg(long)]
        balance: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Map a table onto a domain profile and emit RML.
    Interpret {
        table: PathBuf,
        #[arg(long)]
        domain_profile: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also apply the mapping and write the resulting graph here.
        #[arg(long)]
        materialize: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value = ns::EX)]
        base_iri: String,
        #[command(flatten)]
        format: TableArgs,
    },
    /// Evaluate a model on tables with known mappings.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        setting: Setting,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<InterpretError>() {
        Some(InterpretError::Graph(GraphError::UnmappableColumn(_) | GraphError::DisconnectedOntology(_))) => 3,
        _ => 2,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::ProfileTable {
            table,
            out,
            format,
            dataset,
        } => {
            let data = read_table(&table, &format)?;
            let (profiles, warnings) = profile_table::<f64>(&data);
            for w in warnings {
                eprintln!("warning: column {}: {}", w.subject, w.message);
            }
            let dataset = dataset.unwrap_or_else(|| dataset_iri(&table));
            write_atomic(&out, &serialize_turtle(&export_table_profile(&profiles, &dataset)))
        }
        Command::ProfileDomain { graph, out, dataset } => {
            let kg = read_turtle(&graph)?;
            let profile = profile_domain::<f64>(&kg).with_context(|| format!("profiling {}", graph.display()))?;
            let dataset = dataset.unwrap_or_else(|| dataset_iri(&graph));
            write_atomic(&out, &serialize_turtle(&export_domain_profile(&profile, &dataset)))
        }
        Command::GenerateTrainingData {
            kgs,
            out,
            k,
            delta,
            tables_per_kg,
            seed,
        } => {
            let config = GenConfig {
                k,
                delta,
                seed: seed.seed,
                tables_per_kg,
                ..Default::default()
            };
            config.validate()?;
            generate(&kgs, &out, &config)
        }
        Command::Train {
            corpus,
            out,
            epochs,
            batch_size,
            lr,
            hidden_dim,
            patience,
            balance,
            seed,
        } => {
            let config = TrainConfig {
                epochs,
                batch_size,
                learning_rate: lr,
                patience,
                hidden_dim,
                seed: seed.seed,
                ..Default::default()
            };
            config.validate()?;
            let (entries, rejected) = read_corpus(&corpus)?;
            report_rejected(&rejected);
            let instances = entries
                .into_iter()
                .map(|e| e.into_instance())
                .collect::<Result<Vec<_>, _>>()?;
            let pairs = make_training_pairs::<f64>(&instances, balance.then_some(seed.seed))?;
            let (model, history) = train(&pairs, &config)?;
            if let (Some(best), Some(last)) = (history.best_epoch, history.epochs.last()) {
                eprintln!(
                    "{} pairs, {} epochs, best epoch {best}, validation accuracy {:.4}",
                    pairs.len(),
                    history.epochs.len(),
                    last.best_val_accuracy
                );
            }
            let mut buf = Vec::new();
            save_model(&model, &mut buf)?;
            write_atomic(&out, std::str::from_utf8(&buf)?)
        }
        Command::Interpret {
            table,
            domain_profile,
            model,
            out,
            materialize: materialized,
            threshold,
            base_iri,
            format,
        } => {
            let dialect = dialect_for(&table, &format)?;
            let data = read_table(&table, &format)?;
            let domain: DomainProfile = import_domain_profile(&read_turtle(&domain_profile)?)
                .with_context(|| format!("reading {}", domain_profile.display()))?;
            let model = read_model(&model)?;
            let result = interpret_table(&data, &domain, &model, threshold)?;
            for w in &result.warnings {
                eprintln!("warning: column {} left unmapped: {}", w.subject, w.message);
            }
            let options = RmlOptions {
                base_iri,
                source_path: table.display().to_string(),
                dialect,
                ..Default::default()
            };
            let rml = emit_rml(&result.plan, &data, &options)?;
            write_atomic(&out, &serialize_turtle(&rml))?;
            if let Some(path) = materialized {
                let m = materialize(&rml, &data)?;
                for w in &m.warnings {
                    eprintln!("warning: row {} ({}): {}", w.row, w.triples_map, w.message);
                }
                write_atomic(&path, &serialize_turtle(&m.graph))?;
            }
            Ok(())
        }
        Command::Evaluate {
            corpus,
            model,
            setting,
            report,
            threshold,
        } => {
            let model = read_model(&model)?;
            let (entries, mut rejected) = read_corpus(&corpus)?;
            let dataset: Vec<DatasetTable> = entries.into_iter().map(DatasetTable::from).collect();
            let cases = match setting {
                Setting::Pairwise => {
                    let mut x = extract_pairwise(&dataset);
                    rejected.append(&mut x.rejected);
                    x.cases
                }
                Setting::SetBased => {
                    let mut x = extract_setbased(&dataset);
                    rejected.append(&mut x.rejected);
                    for (class, why) in &x.dropped_groups {
                        eprintln!("dropped group {class}: {}", why.code());
                    }
                    x.groups.into_iter().flat_map(|g| g.cases).collect()
                }
            };
            report_rejected(&rejected);
            let result = evaluate(&model, &cases, threshold);
            write_atomic(&report, &result.to_csv())?;
            println!("instances\t{}", result.instances.len());
            println!("accuracy_rod\t{:.4}", result.accuracy_rod);
            println!("accuracy_roc\t{:.4}", result.accuracy_roc);
            println!("accuracy\t{:.4}", result.accuracy);
            Ok(())
        }
    }
}

fn generate(kgs: &Path, out: &Path, config: &GenConfig) -> Result<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(kgs)
        .with_context(|| format!("reading {}", kgs.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "ttl"));
    files.sort();
    if files.is_empty() {
        bail!("no .ttl files in {}", kgs.display());
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut rejected = Vec::new();
    let mut written = 0;
    for (i, file) in files.iter().enumerate() {
        let kg = read_turtle(file)?;
        let name = file.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let kg_config = GenConfig {
            seed: config.seed.wrapping_add(i as u64),
            ..config.clone()
        };
        let corpus = match generate_corpus(&kg, &name, &kg_config) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("skipping {}: {e}", file.display());
                continue;
            }
        };
        for instance in &corpus.instances {
            write_instance(out, instance)?;
            written += 1;
        }
        rejected.extend(corpus.rejected);
    }
    let log: String = rejected.iter().map(|(n, r)| format!("{n}\t{r}\n")).collect();
    write_atomic(&out.join("rejected.tsv"), &log)?;
    eprintln!("{written} tables written, {} rejected", rejected.len());
    Ok(())
}

fn report_rejected(rejected: &[(String, tabsem::datagen::FilterReason)]) {
    let reasons: BTreeSet<_> = rejected.iter().collect();
    for (name, reason) in reasons {
        eprintln!("rejected {name}: {reason}");
    }
}

fn dataset_iri(path: &Path) -> String {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    format!("http://example.org/dataset/{}", tabsem::rml::percent_encode(&stem))
}

fn is_tsv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv"))
}

fn dialect_for(path: &Path, args: &TableArgs) -> Result<Dialect> {
    let delimiter = match args.delimiter.as_deref() {
        None if is_tsv(path) => '\t',
        None => ',',
        Some("tab" | "\\t") => '\t',
        Some(d) => {
            let mut chars = d.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => bail!("delimiter must be a single character, got {d:?}"),
            }
        }
    };
    Ok(Dialect {
        delimiter,
        has_header: args.header.unwrap_or(!is_tsv(path)),
        ..Dialect::default()
    })
}

fn read_table(path: &Path, args: &TableArgs) -> Result<DataTable> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_table(&bytes, &dialect_for(path, args)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_turtle(path: &Path) -> Result<RdfGraph> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_turtle(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn read_model(path: &Path) -> Result<SiameseModel> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    load_model(BufReader::new(file)).with_context(|| format!("loading {}", path.display()))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("writing {}", path.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;
use traitlex::commonsense::{self, Catalog, ModelBank, QuestionnaireResponse, N_ITEMS};
use traitlex::corpus::{self, AdjectiveLexicon, CorpusStore, FilterPolicy, Trait};
use traitlex::eval::{self, ConfusionMatrix, EvalReport};
use traitlex::fsio;
use traitlex::ml::{self, Algorithm, Dataset, Hyperparams, Prediction, TargetKind, TrainConfig, TrainedModel};
use traitlex::pdfmodel::{self, BinningScheme};
use traitlex::synth::{self, GeneratorSpec};

use crate::args::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] traitlex::Error),
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn version_string() -> String {
    format!(
        "{} (formats: store v{}, pdf model v{}, ml model v{}, catalog v{}, model bank v{})",
        env!("CARGO_PKG_VERSION"),
        corpus::STORE_FORMAT_VERSION,
        pdfmodel::PDF_MODEL_FORMAT_VERSION,
        ml::ML_MODEL_FORMAT_VERSION,
        commonsense::CATALOG_FORMAT_VERSION,
        commonsense::BANK_FORMAT_VERSION,
    )
}

fn write(path: &Path, text: &str) -> Result<()> {
    Ok(fsio::write_atomic(path, text.as_bytes())?)
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(traitlex::Error::from)? + "\n";
    write(path, &text)
}

/// `<file>.run.json` next to a file output.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn write_manifest(path: &Path, cmd: &Command, outputs: &[PathBuf], summary: Value) -> Result<()> {
    let m = json!({
        "tool": "traitlex",
        "version": version_string(),
        "subcommand": cmd.name(),
        "config": cmd,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "summary": summary,
    });
    write_json(path, &m)
}

fn parse_trait(s: &str) -> Result<Trait> {
    s.parse().map_err(|e: traitlex::Error| usage(e.to_string()))
}

fn binning(b: &BinningArgs) -> Result<(Trait, BinningScheme)> {
    let scheme = BinningScheme::new(b.lo, b.hi, b.bins).map_err(|e| usage(e.to_string()))?;
    Ok((parse_trait(&b.trait_)?, scheme))
}

fn resolve_policy(p: &PolicyArgs, default: FilterPolicy) -> Result<FilterPolicy> {
    let mut policy = match &p.policy {
        Some(name) => FilterPolicy::preset(name)
            .ok_or_else(|| usage(format!("unknown policy preset {name:?} (expected ingest-default or pdf-stage)")))?,
        None => default,
    };
    if let Some(v) = p.min_words {
        policy.min_words = v;
    }
    if let Some(v) = p.max_words {
        policy.max_words = Some(v);
    }
    if let Some(v) = &p.lang {
        policy.required_lang = Some(v.clone());
    }
    if let Some(v) = p.min_adjective_freq {
        policy.min_adjective_total_freq = v;
    }
    policy.validate().map_err(|e| usage(e.to_string()))?;
    Ok(policy)
}

fn hyperparams(path: &Option<PathBuf>) -> Result<Hyperparams> {
    match path {
        None => Ok(Hyperparams::default()),
        Some(p) => {
            let text = fsio::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Data(traitlex::Error::Malformed {
                    source_name: p.display().to_string(),
                    line: e.line(),
                    message: e.to_string(),
                })
            })
        }
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm> {
    s.parse().map_err(|e: traitlex::Error| {
        let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
        usage(format!("{e} (expected one of {})", names.join(", ")))
    })
}

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Ingest(a) => ingest(cmd, a),
        Command::Distribution(a) => distribution(cmd, a),
        Command::PdfBuild(a) => pdf_build(cmd, a),
        Command::PdfPredict(a) => pdf_predict(cmd, a),
        Command::PdfEval(a) => pdf_eval(cmd, a),
        Command::MlTrain(a) => ml_train(cmd, a),
        Command::MlEval(a) => ml_eval(cmd, a),
        Command::CsTrain(a) => cs_train(cmd, a),
        Command::CsPredict(a) => cs_predict(cmd, a),
        Command::Synth(a) => synth_cmd(cmd, a),
    }
}

fn ingest(cmd: &Command, a: &IngestArgs) -> Result<()> {
    let policy = resolve_policy(&a.policy, FilterPolicy::ingest_default())?;
    let lexicon = match &a.lexicon {
        Some(p) => AdjectiveLexicon::load(p)?,
        None => AdjectiveLexicon::bundled(),
    };
    let (store, report) = corpus::ingest(&a.input, &lexicon, &policy)?;
    corpus::persist(&store, &a.out)?;
    let rejections = a.out.join("rejections.csv");
    write(&rejections, &report.rejections_csv())?;
    write_manifest(
        &a.out.join("run.json"),
        cmd,
        &[a.out.clone(), rejections],
        json!({
            "resolved_policy": policy,
            "read": report.read,
            "accepted": report.accepted,
            "rejected": report.rejected.len(),
            "dropped_adjectives": report.dropped_adjectives.len(),
            "adjectives": store.adjectives().len(),
        }),
    )
}

fn distribution(cmd: &Command, a: &DistributionArgs) -> Result<()> {
    let t = parse_trait(&a.trait_)?;
    if a.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    let store = corpus::load(&a.corpus)?;
    let d = eval::score_distribution(&store, t, a.bins)?;
    write(&a.out, &eval::distribution_csv(&d))?;
    write_manifest(&sidecar(&a.out, ".run.json"), cmd, &[a.out.clone()], json!({ "samples": store.len() }))
}

fn pdf_build(cmd: &Command, a: &PdfBuildArgs) -> Result<()> {
    let (t, scheme) = binning(&a.binning)?;
    if !(a.alpha >= 0.0 && a.alpha.is_finite()) {
        return Err(usage("--alpha must be a finite non-negative number"));
    }
    let store = corpus::load(&a.corpus)?;
    let model = pdfmodel::build_model(&store, t, scheme, a.min_word_freq, a.alpha)?;
    pdfmodel::serialize_model(&model, &a.out)?;
    write_manifest(
        &sidecar(&a.out, ".run.json"),
        cmd,
        &[a.out.clone()],
        json!({ "samples": model.n_samples(), "words": model.pdfs().len(), "g": model.g() }),
    )
}

fn predict_all(
    model: &pdfmodel::PdfPersonalityModel,
    store: &CorpusStore,
    policy: &FilterPolicy,
) -> Result<(Vec<(String, pdfmodel::PdfPrediction)>, Vec<(String, String)>)> {
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for s in store.samples() {
        match pdfmodel::predict(model, s, policy) {
            Ok(p) => ok.push((s.id.clone(), p)),
            Err(e @ (traitlex::Error::Rejected { .. } | traitlex::Error::NoInformativeMass)) => {
                skipped.push((s.id.clone(), e.to_string()))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((ok, skipped))
}

fn skipped_csv(rows: &[(String, String)]) -> String {
    let mut out = String::from("sample_id,reason\n");
    for (id, r) in rows {
        out.push_str(&format!("{id},\"{}\"\n", r.replace('"', "\"\"")));
    }
    out
}

fn pdf_predict(cmd: &Command, a: &PdfPredictArgs) -> Result<()> {
    let policy = resolve_policy(&a.policy, FilterPolicy::pdf_stage())?;
    let model = pdfmodel::load_model(&a.model)?;
    let store = corpus::load(&a.corpus)?;
    let (rows, skipped) = predict_all(&model, &store, &policy)?;
    write(&a.out, &pdfmodel::predictions_csv(rows.iter().map(|(id, p)| (id.as_str(), p)))?)?;
    let skipped_path = sidecar(&a.out, ".skipped.csv");
    write(&skipped_path, &skipped_csv(&skipped))?;
    write_manifest(
        &sidecar(&a.out, ".run.json"),
        cmd,
        &[a.out.clone(), skipped_path],
        json!({ "resolved_policy": policy, "predicted": rows.len(), "skipped": skipped.len() }),
    )
}

fn pdf_eval(cmd: &Command, a: &PdfEvalArgs) -> Result<()> {
    let policy = resolve_policy(&a.policy, FilterPolicy::pdf_stage())?;
    let thresholds = a.thresholds.clone().unwrap_or_else(eval::default_thresholds);
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(usage("--thresholds must be finite numbers"));
    }
    let model = pdfmodel::load_model(&a.model)?;
    let store = corpus::load(&a.corpus)?;
    let e = eval::evaluate_pdf(&model, &store, &policy, a.margin, &thresholds)?;
    let d = &a.out_dir;
    let outputs = [d.join("report.csv"), d.join("curve.csv"), d.join("predictions.csv"), d.join("skipped.csv")];
    write(&outputs[0], &e.report.to_csv())?;
    write(&outputs[1], &eval::curve_csv(&e.curve))?;
    write(&outputs[2], &e.rows_csv())?;
    write(&outputs[3], &skipped_csv(&e.skipped))?;
    write_manifest(
        &d.join("run.json"),
        cmd,
        &outputs,
        json!({ "resolved_policy": policy, "thresholds": thresholds, "report": e.report, "skipped": e.skipped.len() }),
    )
}

/// Loads the dataset named by `a`. Store input is labelled by bin index
/// (class) or raw score.
fn load_data(a: &DataArgs) -> Result<(Dataset, bool)> {
    let kind = match a.target {
        Target::Class => TargetKind::Class,
        Target::Score => TargetKind::Score,
    };
    match (&a.data, &a.corpus) {
        (Some(p), None) => Ok((Dataset::read_csv(p, kind)?, false)),
        (None, Some(dir)) => {
            let (t, scheme) = binning(&a.binning)?;
            let store = corpus::load(dir)?;
            let full = Dataset::from_store(&store, t, &scheme)?;
            let ds = match a.target {
                Target::Class => full.class_only().expect("store datasets carry classes"),
                Target::Score => Dataset::new(
                    full.feature_names().to_vec(),
                    full.x().to_vec(),
                    None,
                    full.y_score().map(<[f64]>::to_vec),
                )?,
            };
            Ok((ds, true))
        }
        _ => Err(usage("exactly one of --data or --corpus is required")),
    }
}

fn ml_train(cmd: &Command, a: &MlTrainArgs) -> Result<()> {
    let algorithm = parse_algorithm(&a.algorithm)?;
    let config = TrainConfig {
        algorithm,
        seed: a.seed,
        hyperparams: hyperparams(&a.hyperparams)?,
    };
    let (mut ds, from_store) = load_data(&a.data)?;
    let mut shaping = Value::Null;
    if from_store {
        let (selected, threshold) = ml::select_features_by_frequency(&ds, a.feature_fraction)?;
        let covered = ml::filter_datapoints_by_coverage(&selected, a.coverage_fraction)?;
        shaping = json!({
            "feature_threshold": threshold,
            "features": covered.n_cols(),
            "rows": covered.n_rows(),
            "rows_before": ds.n_rows(),
        });
        ds = covered;
    }
    let model = ml::train(&config, &ds)?;
    model.save(&a.out)?;
    let mut outputs = vec![a.out.clone()];
    let mut cv_summary = Value::Null;
    if let Some(k) = a.k {
        let cv = eval::cross_validate(&config, &ds, k, a.seed)?;
        let mut csv = String::from("fold,accuracy\n");
        for (i, acc) in cv.fold_accuracies.iter().enumerate() {
            csv.push_str(&format!("{i},{acc:.6}\n"));
        }
        csv.push_str(&format!("mean,{:.6}\n", cv.mean_accuracy));
        let p = sidecar(&a.out, ".cv.csv");
        write(&p, &csv)?;
        outputs.push(p);
        cv_summary = json!(cv.mean_accuracy);
    }
    write_manifest(
        &sidecar(&a.out, ".run.json"),
        cmd,
        &outputs,
        json!({ "train_config": config, "rows": ds.n_rows(), "features": ds.n_cols(), "shaping": shaping, "cv_mean_accuracy": cv_summary }),
    )
}

/// Reorders `ds` to `names`; absent columns are zero (unseen adjectives).
fn align(ds: &Dataset, names: &[String], zero_fill: bool) -> Result<Dataset> {
    if ds.feature_names() == names {
        return Ok(ds.clone());
    }
    let index: BTreeMap<&str, usize> = ds.feature_names().iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut cols = Vec::with_capacity(names.len());
    for n in names {
        match index.get(n.as_str()) {
            Some(&i) => cols.push(Some(i)),
            None if zero_fill => cols.push(None),
            None => return Err(traitlex::Error::invalid(format!("data has no column {n:?} required by the model")).into()),
        }
    }
    let x = ds
        .x()
        .iter()
        .map(|row| cols.iter().map(|c| c.map_or(0.0, |i| row[i])).collect())
        .collect();
    Ok(Dataset::new(
        names.to_vec(),
        x,
        ds.y_class().map(<[usize]>::to_vec),
        ds.y_score().map(<[f64]>::to_vec),
    )?)
}

fn ml_eval(cmd: &Command, a: &MlEvalArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let (ds, from_store) = load_data(&a.data)?;
    let ds = align(&ds, &model.feature_names, from_store)?;
    let pred = model.predict_dataset(&ds)?;
    let d = &a.out_dir;
    let mut outputs = vec![d.join("report.csv"), d.join("predictions.csv")];
    let mut pcsv = String::from("row,prediction,truth\n");
    let summary;
    match (ds.y_class(), ds.y_score()) {
        (Some(truth), _) => {
            let p: Vec<usize> = pred
                .iter()
                .map(|p| p.class().ok_or_else(|| traitlex::Error::invalid("model predicts scores but the data has class labels")))
                .collect::<std::result::Result<_, _>>()?;
            for (i, (pp, t)) in p.iter().zip(truth).enumerate() {
                pcsv.push_str(&format!("{i},{pp},{t}\n"));
            }
            let acc = ml::accuracy(&p, truth);
            write(&outputs[0], &format!("metric,value\naccuracy,{acc}\nn,{}\n", p.len()))?;
            let n = model.n_classes.max(ds.n_classes());
            let labels: Vec<String> = (0..n).map(|c| c.to_string()).collect();
            let cm = ConfusionMatrix::from_indices(truth, &p, &labels)?;
            let cpath = d.join("confusion.csv");
            write(&cpath, &cm.to_csv()?)?;
            outputs.push(cpath);
            summary = json!({ "accuracy": acc, "n": p.len() });
        }
        (None, Some(truth)) => {
            let p: Vec<f64> = pred
                .iter()
                .map(|p| match p {
                    Prediction::Score(s) => Ok(*s),
                    Prediction::Class(_) => Err(traitlex::Error::invalid("model predicts classes but the data has score labels")),
                })
                .collect::<std::result::Result<_, _>>()?;
            for (i, (pp, t)) in p.iter().zip(truth).enumerate() {
                pcsv.push_str(&format!("{i},{pp},{t}\n"));
            }
            let r = EvalReport::compute(&p, truth, a.margin)?;
            write(&outputs[0], &r.to_csv())?;
            summary = json!(r);
        }
        (None, None) => return Err(traitlex::Error::invalid("data carries no labels").into()),
    }
    write(&outputs[1], &pcsv)?;
    write_manifest(&d.join("run.json"), cmd, &outputs, summary)
}

fn cs_train(cmd: &Command, a: &CsTrainArgs) -> Result<()> {
    let algorithms = match &a.algorithms {
        Some(names) => names.iter().map(|n| parse_algorithm(n.trim())).collect::<Result<Vec<_>>>()?,
        None => Algorithm::ALL.to_vec(),
    };
    if a.k < 2 {
        return Err(usage("--k must be at least 2"));
    }
    let hp = hyperparams(&a.hyperparams)?;
    let configs: Vec<TrainConfig> = algorithms
        .iter()
        .map(|&algorithm| TrainConfig {
            algorithm,
            seed: a.seed,
            hyperparams: hp,
        })
        .collect();
    let catalog = match &a.catalog {
        Some(p) => Catalog::load(p)?,
        None => Catalog::bundled(),
    };
    let text = fsio::read_to_string(&a.survey)?;
    let ingest = commonsense::read_survey_csv(&text, &catalog, &a.survey.display().to_string())?;
    let questions: Vec<_> = catalog
        .questions
        .iter()
        .filter(|q| ingest.survey.answers.contains_key(&q.id))
        .cloned()
        .collect();
    if questions.is_empty() {
        return Err(traitlex::Error::invalid(format!("{}: no answer columns", a.survey.display())).into());
    }
    let out = commonsense::train_all(&ingest.survey, &questions, &configs, a.k, a.seed, a.min_abs_r)?;
    let d = &a.out_dir;
    let outputs = [d.join("bank.json"), d.join("report.csv"), d.join("best.csv"), d.join("rejected.csv")];
    out.bank.save(&outputs[0])?;
    write(&outputs[1], &out.report_csv()?)?;
    write(&outputs[2], &out.best_csv())?;
    let mut rej = String::from("respondent_id,reason\n");
    for (id, r) in &ingest.rejected {
        rej.push_str(&format!("{id},{r}\n"));
    }
    write(&outputs[3], &rej)?;
    write_manifest(
        &d.join("run.json"),
        cmd,
        &outputs,
        json!({
            "respondents": ingest.survey.len(),
            "rejected": ingest.rejected.len(),
            "questions": questions.iter().map(|q| q.id.as_str()).collect::<Vec<_>>(),
            "best": out.bank.best,
        }),
    )
}

fn parse_likert(text: &str, source: &str) -> Result<Vec<u8>> {
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u8>().map_err(|e| traitlex::Error::Malformed {
                source_name: source.into(),
                line: 1,
                message: format!("{t:?}: {e}"),
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(values)
}

fn prompt_likert() -> Result<Vec<u8>> {
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let mut err = io::stderr();
    let mut values = Vec::with_capacity(N_ITEMS);
    while values.len() < N_ITEMS {
        let _ = write!(err, "q{} [1-5]: ", values.len() + 1);
        let _ = err.flush();
        let line = match lines.next() {
            Some(l) => l.map_err(|e| traitlex::Error::invalid(format!("stdin: {e}")))?,
            None => {
                return Err(traitlex::Error::invalid(format!(
                    "stdin closed after {} of {N_ITEMS} answers",
                    values.len()
                ))
                .into())
            }
        };
        match line.trim().parse::<u8>() {
            Ok(v @ 1..=5) => values.push(v),
            _ => {
                let _ = writeln!(err, "enter a whole number from 1 to 5");
            }
        }
    }
    Ok(values)
}

fn cs_predict(cmd: &Command, a: &CsPredictArgs) -> Result<()> {
    let bank = ModelBank::load(&a.model)?;
    let likert = match &a.answers_file {
        Some(p) => parse_likert(&fsio::read_to_string(p)?, &p.display().to_string())?,
        None => prompt_likert()?,
    };
    let response = QuestionnaireResponse::new("respondent", likert)?;
    let answers = bank.predict(&response)?;
    let mut csv = String::from("qid,algorithm,label\n");
    for (qid, label) in &answers {
        csv.push_str(&format!("{qid},{},{label}\n", bank.best[qid]));
    }
    match &a.out {
        Some(out) => {
            write(out, &csv)?;
            write_manifest(&sidecar(out, ".run.json"), cmd, &[out.clone()], json!({ "answers": answers }))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn synth_cmd(cmd: &Command, a: &SynthArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => GeneratorSpec::load(p)?,
        None => {
            let mut s = GeneratorSpec::sliding_window(a.seed, a.samples, a.bins, a.words_per_bin, a.overlap)
                .map_err(|e| usage(e.to_string()))?;
            s.survey = a.respondents.map(synth::threshold_rule_survey);
            s
        }
    };
    let d = &a.out_dir;
    let mut outputs = vec![d.join("spec.json")];
    write(&outputs[0], &(spec.to_json()? + "\n"))?;
    let mut summary = json!({ "generator": spec.generator_info() });
    if spec.n_samples > 0 {
        let c = synth::generate_corpus(&spec)?;
        let dir = d.join("corpus");
        corpus::persist(&c.store, &dir)?;
        write(&d.join("lexicon.txt"), &c.lexicon.to_text())?;
        let mut truth = String::from("sample_id,bin,score\n");
        for (s, k) in c.store.samples().iter().zip(&c.truth) {
            truth.push_str(&format!("{},{k},{}\n", s.id, s.score(spec.trait_).unwrap_or(f64::NAN)));
        }
        write(&d.join("truth.csv"), &truth)?;
        outputs.extend([dir, d.join("lexicon.txt"), d.join("truth.csv")]);
        summary["samples"] = json!(c.store.len());
    }
    if spec.survey.is_some() {
        let s = synth::generate_survey(&spec)?;
        write(&d.join("survey.csv"), &commonsense::survey_to_csv(&s.survey)?)?;
        write(&d.join("catalog.json"), &(s.catalog.to_json()? + "\n"))?;
        outputs.extend([d.join("survey.csv"), d.join("catalog.json")]);
        summary["respondents"] = json!(s.survey.len());
    }
    write_manifest(&d.join("run.json"), cmd, &outputs, summary)
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};

use eo_instruct::baseline::{adapt_all, AdapterConfig, PerImagePrediction};
use eo_instruct::eval::{evaluate, Evaluation};
use eo_instruct::fixtures::{generate, source_descriptors, FixtureConfig};
use eo_instruct::ingest::{ingest_source, SourceDescriptor, SourceKind};
use eo_instruct::jsonl::{read_jsonl, to_jsonl};
use eo_instruct::metrics::{render_table, sort_reports, MetricName, MetricReport};
use eo_instruct::respond::{oracle_respond, OracleSpec, Prediction};
use eo_instruct::rng::record_rng;
use eo_instruct::taskgen::{emit_corpus, ConversationRecord, GenConfig, MixSpec};

use crate::{
    AdaptArgs, BuildArgs, Cli, Command, EvalArgs, FixturesArgs, MetricChoice, OracleArgs,
    OracleModeArg, ReportArgs, ReportFormat,
};

pub fn run(cli: &Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be positive");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    pool.install(|| match &cli.command {
        Command::Build(a) => build(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
        Command::Fixtures(a) => fixtures(a),
        Command::Oracle(a) => oracle(a),
        Command::Adapt(a) => adapt(a),
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn read_corpus(path: &Path) -> Result<Vec<ConversationRecord>> {
    Ok(read_jsonl(path)?)
}

fn parse_source(spec: &str, split: &str) -> Result<SourceDescriptor> {
    let (kind, path) = spec
        .split_once('=')
        .with_context(|| format!("source `{spec}` is not KIND=PATH"))?;
    let kind: SourceKind = kind.trim().parse()?;
    Ok(SourceDescriptor::new(
        kind,
        PathBuf::from(path.trim()),
        split,
    ))
}

fn descriptors(a: &BuildArgs) -> Result<Vec<SourceDescriptor>> {
    let mut out = Vec::new();
    if let Some(root) = &a.fixtures {
        out.extend(
            source_descriptors(root, &a.split)
                .into_iter()
                .filter(|d| d.split_dir().is_dir()),
        );
    }
    for s in &a.sources {
        let d = parse_source(s, &a.split)?;
        out.retain(|o: &SourceDescriptor| o.kind != d.kind);
        out.push(d);
    }
    if out.is_empty() {
        bail!("no sources given; pass --source KIND=PATH or --fixtures DIR");
    }
    out.sort_by_key(|d| d.kind);
    Ok(out)
}

fn build(a: &BuildArgs) -> Result<()> {
    let mut cfg = GenConfig::new(a.seed);
    cfg.max_images = a.max_images;
    cfg.metadata_prob = a.metadata_prob;
    cfg.subseq_prob = a.subseq_prob;
    cfg.pair_fmow = !a.no_pair_fmow;
    if let Some(m) = &a.mix {
        cfg.mix = m.parse::<MixSpec>()?;
    }
    cfg.validate()?;
    let mut outputs = Vec::new();
    for d in descriptors(a)? {
        let out = ingest_source(&d).with_context(|| format!("ingesting {}", d.kind))?;
        info!(
            "ingested {}: {} scenes, {} records, {} skipped for missing images, {} empty tiles dropped",
            d.kind,
            out.stats.scenes,
            out.stats.records,
            out.stats.skipped_missing_image,
            out.stats.empty_tiles_dropped
        );
        outputs.push(out);
    }
    let corpus = emit_corpus(&outputs, &cfg)?;
    write(&a.out, &corpus.to_jsonl())?;
    let manifest = a
        .manifest
        .clone()
        .unwrap_or_else(|| a.out.with_extension("manifest.json"));
    let text = serde_json::to_string_pretty(&corpus.manifest)? + "\n";
    write(&manifest, &text)?;
    info!(
        "wrote {} records to {} and manifest to {}",
        corpus.records.len(),
        a.out.display(),
        manifest.display()
    );
    Ok(())
}

fn keep_metric(r: &MetricReport, choices: &[MetricChoice]) -> bool {
    choices.is_empty()
        || choices.iter().any(|c| match c {
            MetricChoice::F1 => r.metric == MetricName::F1,
            MetricChoice::Accuracy => r.metric == MetricName::Accuracy,
        })
}

fn eval(a: &EvalArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let preds: Vec<Prediction> = read_jsonl(&a.predictions)?;
    let mut ev = evaluate(&corpus, &preds)?;
    ev.reports.retain(|r| keep_metric(r, &a.metrics));
    let c = &ev.coverage;
    info!(
        "matched {} of {} records; {} unmatched predictions; {} parse diagnostics",
        c.matched,
        c.records,
        c.unmatched.len(),
        c.diagnostics
    );
    if c.missing > 0 {
        warn!(
            "{} records had no prediction and were scored as empty responses",
            c.missing
        );
    }
    if let Some(out) = &a.out {
        write(out, &(serde_json::to_string_pretty(&ev)? + "\n"))?;
    }
    emit(&render_table(&ev.reports))
}

fn report(a: &ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    for p in &a.inputs {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let ev: Evaluation =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        reports.extend(ev.reports);
    }
    if reports.is_empty() {
        bail!("no reports in the given files");
    }
    sort_reports(&mut reports);
    match a.format {
        ReportFormat::Text => emit(&render_table(&reports)),
        ReportFormat::Json => emit(&(serde_json::to_string_pretty(&reports)? + "\n")),
    }
}

fn fixtures(a: &FixturesArgs) -> Result<()> {
    let mut cfg = FixtureConfig::new(a.seed, a.scenes);
    cfg.split = a.split.clone();
    cfg.single_examples = a.single.unwrap_or(a.scenes);
    if let Some(s) = a.damage_size {
        cfg.damage_size = s;
        cfg.building_change_size = s;
    }
    if let Some(s) = a.urban_size {
        cfg.urban_size = s;
    }
    let summary = generate(&a.out, &cfg)?;
    for (kind, s) in &summary.sources {
        info!("{kind}: {} scenes, {} labels", s.scenes, s.labels);
    }
    info!("fixture tree written to {}", a.out.display());
    Ok(())
}

fn oracle(a: &OracleArgs) -> Result<()> {
    let spec = match a.mode {
        OracleModeArg::Perfect => OracleSpec::perfect(),
        OracleModeArg::Noisy => OracleSpec::noisy(a.jitter, a.flip_rate, a.miss_rate)?,
        OracleModeArg::Constant => {
            OracleSpec::constant(a.text.clone().context("constant mode needs --text")?)
        }
    };
    let corpus = read_corpus(&a.corpus)?;
    let preds: Vec<Prediction> = corpus
        .iter()
        .map(|r| {
            let mut rng = record_rng(a.seed, &format!("oracle:{}", r.id));
            Prediction::text(r.id.clone(), oracle_respond(r, &spec, &mut rng))
        })
        .collect();
    write(&a.out, &to_jsonl(&preds))?;
    info!("wrote {} responses to {}", preds.len(), a.out.display());
    Ok(())
}

fn adapt(a: &AdaptArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let per_image: Vec<PerImagePrediction> = read_jsonl(&a.per_image)?;
    let cfg = AdapterConfig { min_iou: a.min_iou };
    let preds = adapt_all(&corpus, &per_image, &cfg)?;
    write(&a.out, &to_jsonl(&preds))?;
    info!(
        "wrote {} temporal predictions to {}",
        preds.len(),
        a.out.display()
    );
    Ok(())
}

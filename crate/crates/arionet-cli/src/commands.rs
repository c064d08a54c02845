//! Subcommand implementations. Every artifact is written to a temp file
//! and renamed into place so interrupted runs never leave partial output.

use crate::config::RunConfig;
use crate::synth::{make_synthetic_dataset, SynthSpec};
use crate::wav::{decode_wav, resample_linear};
use crate::CliError;
use arionet_eval::{
    classifier_bytes, embed_all, fit_forest, forest_predict_batch, frame_distribution_stats,
    metrics, pitch_class_correlation, read_classifier, stratified_split, ClassifierModel,
    ConfusionMatrix, EvalReport, ForestConfig,
};
use arionet_model::{
    pretrain, split_context_target, train_temporal, Encoder, TemporalPredictor,
};
use arionet_pipeline::{
    parse_manifest, read_store, run_extraction, store_bytes, FeatureStore, RecordingInput,
};
use arionet_rng::Rng;
use arionet_tensor::{checkpoint_bytes, load_checkpoint_into};
use std::fmt::Write as _;
use std::path::Path;

/// Write bytes beside the destination and atomically rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp_name = path
        .file_name()
        .ok_or_else(|| CliError::Validation(format!("output path {path:?} has no file name")))?
        .to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| CliError::Runtime(format!("write {tmp:?}: {e}")))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Runtime(format!("rename {tmp:?} -> {path:?}: {e}")))?;
    Ok(())
}

fn load_store(path: &Path) -> Result<FeatureStore, CliError> {
    read_store(path).map_err(|e| CliError::Runtime(format!("read store {path:?}: {e}")))
}

/// Build the encoder at configured size and fill it from a checkpoint.
fn load_encoder(cfg: &RunConfig, checkpoint: &Path) -> Result<Encoder, CliError> {
    let mut rng = Rng::seed_from_u64(0);
    let encoder = Encoder::new(cfg.encoder_config(), &mut rng)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    load_checkpoint_into(checkpoint, &encoder.params)
        .map_err(|e| CliError::Runtime(format!("load encoder {checkpoint:?}: {e}")))?;
    Ok(encoder)
}

fn load_temporal(cfg: &RunConfig, checkpoint: &Path) -> Result<TemporalPredictor, CliError> {
    let mut rng = Rng::seed_from_u64(0);
    let predictor = TemporalPredictor::new(cfg.temporal_config(), &mut rng)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    load_checkpoint_into(checkpoint, &predictor.params)
        .map_err(|e| CliError::Runtime(format!("load temporal model {checkpoint:?}: {e}")))?;
    Ok(predictor)
}

pub fn cmd_synth(out: &Path, species: usize, recordings: usize, cfg: &RunConfig) -> Result<(), CliError> {
    let spec = SynthSpec {
        species,
        recordings_per: recordings,
        seed: cfg.seed,
        sample_rate: cfg.sample_rate,
    };
    let manifest = make_synthetic_dataset(out, &spec)?;
    println!(
        "wrote {} recordings for {} species under {}",
        species * recordings,
        species,
        out.display()
    );
    println!("manifest: {}", manifest.display());
    Ok(())
}

/// Decode every manifest row (paths resolved relative to the manifest's
/// directory), resample to the configured rate, and run extraction.
pub fn cmd_extract(manifest_path: &Path, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| CliError::Runtime(format!("read manifest {manifest_path:?}: {e}")))?;
    let manifest =
        parse_manifest(&text).map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
    if manifest.rows.is_empty() {
        return Err(CliError::Runtime("manifest has no rows".into()));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let mut recordings = Vec::with_capacity(manifest.rows.len());
    for row in &manifest.rows {
        let path = if row.path.is_absolute() {
            row.path.clone()
        } else {
            base.join(&row.path)
        };
        let decoded =
            decode_wav(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        recordings.push(RecordingInput {
            waveform: resample_linear(&decoded, cfg.sample_rate),
            species: row.species.clone(),
        });
    }

    let (store, summary) = run_extraction(&recordings, &cfg.extract_config())
        .map_err(|e| CliError::Runtime(format!("extraction: {e}")))?;
    write_atomic(out, &store_bytes(&store))?;

    println!(
        "window: {} samples ({:.3} s)",
        summary.window,
        summary.window as f64 / cfg.sample_rate as f64
    );
    println!("windows per species:");
    for (name, count) in &summary.windows_per_species {
        println!("  {name}  {count}");
    }
    println!("skipped segments (under {} chroma frames): {}", cfg.chroma_min_frames, summary.skipped_segments);
    for name in &summary.excluded_species {
        eprintln!("warning: species \"{name}\" excluded (no valid windows)");
    }
    println!("store: {} ({} records)", out.display(), store.records.len());
    Ok(())
}

pub fn cmd_pretrain(
    store_path: &Path,
    cfg: &RunConfig,
    out: &Path,
    trace: Option<&Path>,
) -> Result<(), CliError> {
    let store = load_store(store_path)?;
    let chromas = store.chromas();
    let outcome = pretrain(&chromas, &cfg.pretrain_config())
        .map_err(|e| CliError::Runtime(format!("pretraining: {e}")))?;

    if let Some(clamped) = outcome.clamped_batch {
        eprintln!(
            "warning: batch {} clamped to dataset size {clamped}",
            cfg.batch
        );
    }
    for (epoch, (loss, cos)) in outcome
        .epoch_losses
        .iter()
        .zip(&outcome.epoch_positive_cosine)
        .enumerate()
    {
        println!("epoch {epoch}  mean_loss {loss:.6}  positive_cosine {cos:.4}");
    }

    write_atomic(out, &checkpoint_bytes(&outcome.encoder.params))?;
    if let Some(trace_path) = trace {
        let mut csv = String::from("epoch,mean_loss\n");
        for (epoch, loss) in outcome.epoch_losses.iter().enumerate() {
            let _ = writeln!(csv, "{epoch},{loss}");
        }
        write_atomic(trace_path, csv.as_bytes())?;
    }
    println!("checkpoint: {}", out.display());
    Ok(())
}

pub fn cmd_train_temporal(
    store_path: &Path,
    cfg: &RunConfig,
    out: &Path,
    trace: Option<&Path>,
) -> Result<(), CliError> {
    let store = load_store(store_path)?;
    let chromas = store.chromas();
    let outcome = train_temporal(&chromas, &cfg.temporal_config())
        .map_err(|e| CliError::Runtime(format!("temporal training: {e}")))?;

    if let Some(clamped) = outcome.clamped_batch {
        eprintln!(
            "warning: batch {} clamped to training-set size {clamped}",
            cfg.tmp_batch
        );
    }
    for (epoch, t) in outcome.traces.iter().enumerate() {
        println!(
            "epoch {epoch}  train_mse {:.6}  val_mse {:.6}  val_cosine {:.4}  val_mae {:.5}",
            t.train_mse, t.val_mse, t.val_cosine, t.val_mae
        );
    }
    if outcome.stopped_early {
        println!(
            "early stop after {} epochs (patience {})",
            outcome.traces.len(),
            cfg.patience
        );
    }

    write_atomic(out, &checkpoint_bytes(&outcome.predictor.params))?;
    if let Some(trace_path) = trace {
        let mut csv = String::from("epoch,train_mse,val_mse,val_cosine\n");
        for (epoch, t) in outcome.traces.iter().enumerate() {
            let _ = writeln!(csv, "{epoch},{},{},{}", t.train_mse, t.val_mse, t.val_cosine);
        }
        write_atomic(trace_path, csv.as_bytes())?;
    }
    println!("checkpoint: {}", out.display());
    Ok(())
}

pub fn cmd_classify(
    store_path: &Path,
    encoder_path: &Path,
    cfg: &RunConfig,
    out: &Path,
) -> Result<(), CliError> {
    let store = load_store(store_path)?;
    let encoder = load_encoder(cfg, encoder_path)?;
    let (rows, labels) =
        embed_all(&store, &encoder).map_err(|e| CliError::Runtime(e.to_string()))?;
    let (train_idx, test_idx) = stratified_split(&labels, cfg.test_fraction, cfg.seed);
    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| rows[i].clone()).collect();
    let train_y: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
    let forest = fit_forest(
        &train_x,
        &train_y,
        &ForestConfig {
            trees: cfg.trees,
            seed: cfg.seed,
            max_features: None,
        },
    )
    .map_err(|e| CliError::Runtime(format!("random forest: {e}")))?;
    let model = ClassifierModel {
        forest,
        split_seed: cfg.seed,
        test_fraction: cfg.test_fraction,
    };
    write_atomic(out, &classifier_bytes(&model))?;
    println!(
        "fitted {} trees on {} embeddings ({} held out)",
        cfg.trees,
        train_idx.len(),
        test_idx.len()
    );
    println!("model: {}", out.display());
    Ok(())
}

fn report_csv(report: &EvalReport, species: &[String]) -> String {
    let mut csv = String::from("metric,value\n");
    let mut row = |name: &str, value: f64| {
        let _ = writeln!(csv, "{name},{value}");
    };
    row("accuracy", report.accuracy);
    row("macro_precision", report.macro_precision);
    row("macro_recall", report.macro_recall);
    row("macro_f1", report.macro_f1);
    row("macro_specificity", report.macro_specificity);
    row("macro_npv", report.macro_npv);
    row("macro_fpr", report.macro_fpr);
    row("macro_fdr", report.macro_fdr);
    row("macro_fnr", report.macro_fnr);
    row("mcc", report.mcc);
    row("kappa", report.kappa);
    row("label_mae", report.label_mae);
    for (name, m) in species.iter().zip(&report.per_class) {
        let _ = writeln!(csv, "{name}.precision,{}", m.precision);
        let _ = writeln!(csv, "{name}.recall,{}", m.recall);
        let _ = writeln!(csv, "{name}.f1,{}", m.f1);
        let _ = writeln!(csv, "{name}.specificity,{}", m.specificity);
    }
    csv
}

fn print_report(report: &EvalReport, species: &[String]) {
    println!("accuracy        {:.4}", report.accuracy);
    println!("macro precision {:.4}", report.macro_precision);
    println!("macro recall    {:.4}", report.macro_recall);
    println!("macro f1        {:.4}", report.macro_f1);
    println!("macro specificity {:.4}", report.macro_specificity);
    println!("macro npv       {:.4}", report.macro_npv);
    println!("macro fpr       {:.4}", report.macro_fpr);
    println!("macro fdr       {:.4}", report.macro_fdr);
    println!("macro fnr       {:.4}", report.macro_fnr);
    println!("mcc             {:.4}", report.mcc);
    println!("kappa           {:.4}", report.kappa);
    println!("label mae       {:.4}", report.label_mae);
    println!("per-class f1:");
    for (name, m) in species.iter().zip(&report.per_class) {
        println!("  {name}  {:.4}", m.f1);
    }
}

pub fn cmd_evaluate(
    store_path: &Path,
    encoder_path: &Path,
    model_path: &Path,
    cfg: &RunConfig,
    report_path: &Path,
) -> Result<(), CliError> {
    let store = load_store(store_path)?;
    let encoder = load_encoder(cfg, encoder_path)?;
    let model = read_classifier(model_path)
        .map_err(|e| CliError::Runtime(format!("read model {model_path:?}: {e}")))?;
    let (rows, labels) =
        embed_all(&store, &encoder).map_err(|e| CliError::Runtime(e.to_string()))?;

    // The model remembers its split so evaluation sees the same holdout.
    let (_, test_idx) = stratified_split(&labels, model.test_fraction, model.split_seed);
    let test_x: Vec<Vec<f64>> = test_idx.iter().map(|&i| rows[i].clone()).collect();
    let truth: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
    let predicted = forest_predict_batch(&model.forest, &test_x)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let cm = ConfusionMatrix::from_labels(&truth, &predicted, store.species_names.len())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let report = metrics(&cm).map_err(|e| CliError::Runtime(e.to_string()))?;

    write_atomic(report_path, report_csv(&report, &store.species_names).as_bytes())?;
    print_report(&report, &store.species_names);
    println!("report: {}", report_path.display());
    Ok(())
}

pub fn cmd_embed(
    store_path: &Path,
    encoder_path: &Path,
    cfg: &RunConfig,
    out: &Path,
) -> Result<(), CliError> {
    let store = load_store(store_path)?;
    let encoder = load_encoder(cfg, encoder_path)?;
    let (rows, labels) =
        embed_all(&store, &encoder).map_err(|e| CliError::Runtime(e.to_string()))?;

    let dim = rows.first().map_or(0, |r| r.len());
    let mut csv = String::from("segment_id,species");
    for i in 0..dim {
        let _ = write!(csv, ",e{i}");
    }
    csv.push('\n');
    for ((record, row), &label) in store.records.iter().zip(&rows).zip(&labels) {
        let _ = write!(csv, "{},{}", record.segment_id, store.species_name(label as u32));
        for v in row {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    write_atomic(out, csv.as_bytes())?;
    println!("embeddings: {} ({} rows, {} dims)", out.display(), rows.len(), dim);
    Ok(())
}

pub fn cmd_predict_frames(
    store_path: &Path,
    temporal_path: &Path,
    cfg: &RunConfig,
    out: &Path,
) -> Result<(), CliError> {
    let store = load_store(store_path)?;
    let predictor = load_temporal(cfg, temporal_path)?;

    let mut csv = String::from("segment_id,species,correlation,orig_mean,pred_mean,orig_max,pred_max\n");
    let mut original_frames: Vec<Vec<f64>> = Vec::new();
    let mut predicted_frames: Vec<Vec<f64>> = Vec::new();
    for record in &store.records {
        let (ctx, fut) = split_context_target(&record.chroma, cfg.context, cfg.horizon)
            .map_err(|e| CliError::Runtime(format!("segment {}: {e}", record.segment_id)))?;
        let pred = predictor
            .predict_values(&ctx)
            .map_err(|e| CliError::Runtime(e.to_string()))?;

        // Per-frame columns, averaged over the horizon.
        let mut correlations = Vec::new();
        let mut stats = (0.0f64, 0.0f64, f64::NEG_INFINITY, f64::NEG_INFINITY);
        let k = cfg.horizon;
        for c in 0..k {
            let orig_col: Vec<f64> = fut.iter().map(|row| row[c]).collect();
            let pred_col: Vec<f64> = pred.iter().map(|row| row[c]).collect();
            if let Ok(r) = pitch_class_correlation(&orig_col, &pred_col) {
                correlations.push(r);
            }
            stats.0 += orig_col.iter().sum::<f64>() / 12.0;
            stats.1 += pred_col.iter().sum::<f64>() / 12.0;
            stats.2 = stats.2.max(orig_col.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            stats.3 = stats.3.max(pred_col.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            original_frames.push(orig_col);
            predicted_frames.push(pred_col);
        }
        let correlation = if correlations.is_empty() {
            "undefined".to_string()
        } else {
            format!("{}", correlations.iter().sum::<f64>() / correlations.len() as f64)
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            record.segment_id,
            store.species_name(record.species_id),
            correlation,
            stats.0 / k as f64,
            stats.1 / k as f64,
            stats.2,
            stats.3
        );
    }
    write_atomic(out, csv.as_bytes())?;

    let report = frame_distribution_stats(&original_frames, &predicted_frames)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "original:  mean {:.4} ± {:.4}   max {:.4} ± {:.4}",
        report.original.mean_of_means,
        report.original.std_of_means,
        report.original.mean_of_maxes,
        report.original.std_of_maxes
    );
    println!(
        "predicted: mean {:.4} ± {:.4}   max {:.4} ± {:.4}",
        report.predicted.mean_of_means,
        report.predicted.std_of_means,
        report.predicted.mean_of_maxes,
        report.predicted.std_of_maxes
    );
    println!(
        "deltas: mean {:.2}%  std {:.2}%  max {:.2}%",
        report.mean_delta_pct, report.std_delta_pct, report.max_delta_pct
    );
    println!("per-example stats: {}", out.display());
    Ok(())
}


//! One function per pipeline stage. Each reads its inputs, writes its
//! artifacts under `<out>/<stage>/` and finishes with a manifest.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ethcast_core::eval::{build_report, evaluate_predictions, write_predictions_csv, RunRecord};
use ethcast_core::market::{
    assemble_features, ingest_csv, normalize_price, normalize_volume, pearson_matrix,
    read_snapshot, write_csv, write_snapshot, CoinSeries, LoadReport, MarketInputs, PriceField,
};
use ethcast_core::model::{load_checkpoint, save_checkpoint, train as fit};
use ethcast_core::sentiment::{
    aggregate_daily, ingest_triplets, write_daily_csv, DailySentiment, Rejection,
};
use ethcast_core::synth::{generate, SynthConfig};
use ethcast_core::{FeatureConfig, WindowedDataset};
use log::{info, warn};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::manifest::{sha256_hex, ManifestBuilder};

pub const DATASET_FILE: &str = "dataset.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const RUN_FILE: &str = "run.json";
pub const REPORT_FILE: &str = "report.txt";
pub const REPORT_CSV_FILE: &str = "report.csv";

pub struct Pipeline {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
}

/// Attaches the stage name to any error raised inside `f`.
pub fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().with_context(|| format!("stage `{name}` failed"))
}

fn stage_dir(out: &Path, parts: &[&str]) -> Result<PathBuf> {
    let dir = parts.iter().fold(out.to_path_buf(), |d, p| d.join(p));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

fn load_coin(path: &Path) -> Result<(CoinSeries, LoadReport)> {
    let (series, report) = ingest_csv(path)?;
    if report.dropped_missing > 0 || report.duplicates > 0 {
        warn!(
            "{}: dropped {} incomplete rows, replaced {} duplicate dates",
            series.symbol, report.dropped_missing, report.duplicates
        );
    }
    Ok((series, report))
}

fn load_daily(
    path: &Path,
    cfg: &ExperimentConfig,
) -> Result<(Vec<DailySentiment>, usize, Vec<Rejection>)> {
    let file = ingest_triplets(path)?;
    let daily = aggregate_daily(&file.records, &cfg.sentiment)?;
    Ok((daily, file.records.len(), file.rejected))
}

#[derive(Serialize)]
struct SentimentSummary {
    records: usize,
    days: usize,
    rejected: Vec<Rejection>,
}

#[derive(Serialize)]
struct IngestReport {
    coins: Vec<LoadReport>,
    sentiment: Option<SentimentSummary>,
}

#[derive(Serialize)]
struct FeaturizeReport<'a> {
    assembly: &'a ethcast_core::market::AssemblyReport,
    coins: Vec<LoadReport>,
    sentiment_rejected: usize,
}

#[derive(Serialize)]
struct TrainSummary {
    best_epoch: usize,
    steps: usize,
    parameter_count: usize,
    final_train_loss: Option<f64>,
    best_validation_loss: Option<f64>,
}

impl Pipeline {
    pub fn new(cfg: ExperimentConfig, out: PathBuf) -> Self {
        Self { cfg, out }
    }

    fn manifest(
        &self,
        dir: &Path,
        stage: &str,
        configuration: Option<FeatureConfig>,
    ) -> ManifestBuilder {
        ManifestBuilder::new(
            &self.out,
            dir,
            stage,
            configuration.map(|c| c.to_string()),
            self.cfg.train.seed,
            self.cfg.echo(),
        )
    }

    pub fn featurize_dir(&self, c: FeatureConfig) -> PathBuf {
        self.out.join("featurize").join(c.to_string())
    }

    pub fn train_dir(&self, c: FeatureConfig) -> PathBuf {
        self.out.join("train").join(c.to_string())
    }

    pub fn evaluate_dir(&self, c: FeatureConfig) -> PathBuf {
        self.out.join("evaluate").join(c.to_string())
    }

    /// Validates and cleans every configured input file.
    pub fn ingest(&self) -> Result<()> {
        let data = &self.cfg.data;
        if data.eth.is_none() {
            bail!("missing input: no ETH price series configured (set data.eth or pass --eth)");
        }
        let dir = stage_dir(&self.out, &["ingest"])?;
        let mut manifest = self.manifest(&dir, "ingest", None);
        let mut coins = Vec::new();
        for (_, path) in data.coins() {
            let (series, report) = load_coin(path)?;
            manifest.input(path)?;
            let name = format!("{}.csv", series.symbol);
            write_csv(&series, create(&dir.join(&name))?)?;
            manifest.output(&name)?;

            let price = normalize_price(&series)?;
            let volume = normalize_volume(&series).ok();
            let norm_name = format!("{}.normalized.csv", series.symbol);
            let mut w = create(&dir.join(&norm_name))?;
            writeln!(w, "date,close_normalized,volume_normalized")?;
            for (k, row) in series.rows.iter().enumerate() {
                let v = volume
                    .as_ref()
                    .map_or(String::from("n/a"), |v| v.values[k].to_string());
                writeln!(w, "{},{},{v}", row.date, price.values[k])?;
            }
            w.flush()?;
            manifest.output(&norm_name)?;
            println!(
                "ingest: {} rows kept of {} from {}",
                report.rows_kept,
                report.rows_read,
                path.display()
            );
            coins.push(report);
        }
        let sentiment = match &data.sentiment {
            Some(path) => {
                let (daily, records, rejected) = load_daily(path, &self.cfg)?;
                manifest.input(path)?;
                write_daily_csv(&daily, create(&dir.join("sentiment_daily.csv"))?)?;
                manifest.output("sentiment_daily.csv")?;
                println!(
                    "ingest: {records} sentiment records over {} days, {} rejected",
                    daily.len(),
                    rejected.len()
                );
                Some(SentimentSummary {
                    records,
                    days: daily.len(),
                    rejected,
                })
            }
            None => None,
        };
        write_json(
            &dir.join("load_report.json"),
            &IngestReport { coins, sentiment },
        )?;
        manifest.output("load_report.json")?;
        manifest.write()?;
        Ok(())
    }

    /// Pairwise Pearson matrices of closes and volumes.
    pub fn correlate(&self) -> Result<()> {
        let files = self.cfg.data.coins();
        if files.len() < 2 {
            bail!(
                "correlation needs at least two coin files, {} configured",
                files.len()
            );
        }
        let dir = stage_dir(&self.out, &["correlate"])?;
        let mut manifest = self.manifest(&dir, "correlate", None);
        let mut series = Vec::new();
        for (_, path) in &files {
            series.push(load_coin(path)?.0);
            manifest.input(path)?;
        }
        for (field, name) in [
            (PriceField::Close, "correlation_close.csv"),
            (PriceField::Volume, "correlation_volume.csv"),
        ] {
            let matrix = pearson_matrix(&series, field)?;
            fs::write(dir.join(name), matrix.to_csv())?;
            manifest.output(name)?;
            if field == PriceField::Close {
                for i in 0..matrix.len() {
                    for j in i + 1..matrix.len() {
                        let r = matrix
                            .get(i, j)
                            .map_or("n/a".to_string(), |r| format!("{r:.3}"));
                        println!(
                            "correlate: {}-{} close r = {r}",
                            matrix.symbols[i], matrix.symbols[j]
                        );
                    }
                }
            }
        }
        manifest.write()?;
        Ok(())
    }

    /// Aligns, normalizes and windows the inputs for one configuration.
    pub fn featurize(&self, c: FeatureConfig) -> Result<PathBuf> {
        self.cfg.preflight(c)?;
        let data = &self.cfg.data;
        let dir = stage_dir(&self.out, &["featurize", &c.to_string()])?;
        let mut manifest = self.manifest(&dir, "featurize", Some(c));
        let mut load = |path: &Option<PathBuf>| -> Result<Option<(CoinSeries, LoadReport)>> {
            match path {
                Some(p) => {
                    manifest.input(p)?;
                    Ok(Some(load_coin(p)?))
                }
                None => Ok(None),
            }
        };
        let eth = load(&data.eth)?.context("ETH series")?;
        let (ada, dot) = if c.needs_cross_assets() {
            (load(&data.ada)?, load(&data.dot)?)
        } else {
            (None, None)
        };
        let (daily, rejected) = if c.needs_sentiment() {
            let path = data.sentiment.as_deref().context("sentiment file")?;
            manifest.input(path)?;
            let (daily, _, rejected) = load_daily(path, &self.cfg)?;
            (Some(daily), rejected.len())
        } else {
            (None, 0)
        };
        let inputs = MarketInputs {
            eth: &eth.0,
            ada: ada.as_ref().map(|s| &s.0),
            dot: dot.as_ref().map(|s| &s.0),
        };
        let (ds, assembly) = assemble_features(&inputs, daily.as_deref(), c, &self.cfg.features)?;
        let path = dir.join(DATASET_FILE);
        let mut w = create(&path)?;
        write_snapshot(&ds, &mut w)?;
        w.flush()?;
        manifest.output(DATASET_FILE)?;
        let coins = [Some(&eth), ada.as_ref(), dot.as_ref()]
            .into_iter()
            .flatten()
            .map(|s| s.1.clone())
            .collect();
        write_json(
            &dir.join("assembly.json"),
            &FeaturizeReport {
                assembly: &assembly,
                coins,
                sentiment_rejected: rejected,
            },
        )?;
        manifest.output("assembly.json")?;
        manifest.write()?;
        println!(
            "featurize {c}: {} rows, {} train / {} test targets, {} sentiment days filled, {} dropped",
            assembly.rows,
            assembly.train_targets,
            assembly.test_targets,
            assembly.sentiment_filled_days,
            assembly.sentiment_dropped_days
        );
        Ok(path)
    }

    fn read_dataset(path: &Path, c: FeatureConfig) -> Result<WindowedDataset> {
        let file =
            File::open(path).with_context(|| format!("opening dataset {}", path.display()))?;
        let ds = read_snapshot(BufReader::new(file))
            .with_context(|| format!("reading dataset {}", path.display()))?;
        if let Some(found) = ds.configuration {
            if found != c {
                bail!(
                    "dataset {} holds configuration {found}, expected {c}",
                    path.display()
                );
            }
        }
        Ok(ds)
    }

    /// Trains on `dataset`, or on a fresh featurization when none is given.
    pub fn train(&self, c: FeatureConfig, dataset: Option<&Path>) -> Result<PathBuf> {
        let dataset = match dataset {
            Some(p) => p.to_path_buf(),
            None => stage("featurize", || self.featurize(c))?,
        };
        let ds = Self::read_dataset(&dataset, c)?;
        let mcfg = ethcast_core::ModelConfig {
            window_len: ds.window,
            num_features: ds.num_features(),
            ..self.cfg.model.clone()
        };
        let dir = stage_dir(&self.out, &["train", &c.to_string()])?;
        let mut manifest = self.manifest(&dir, "train", Some(c));
        manifest.input(&dataset)?;
        info!("training configuration {c}");
        let outcome = fit(&ds, &mcfg, &self.cfg.train)?;
        let ckpt = dir.join(CHECKPOINT_FILE);
        save_checkpoint(
            &ckpt,
            &outcome.model,
            self.cfg.train.seed,
            outcome.best_epoch as u64,
        )?;
        manifest.output(CHECKPOINT_FILE)?;

        let mut w = create(&dir.join("history.csv"))?;
        writeln!(w, "epoch,train_loss,validation_loss")?;
        for (k, t) in outcome.history.train.iter().enumerate() {
            let v = outcome
                .history
                .validation
                .get(k)
                .map_or(String::new(), |v| v.to_string());
            writeln!(w, "{},{t},{v}", k + 1)?;
        }
        w.flush()?;
        manifest.output("history.csv")?;
        let summary = TrainSummary {
            best_epoch: outcome.best_epoch,
            steps: outcome.steps,
            parameter_count: outcome.model.parameter_count(),
            final_train_loss: outcome.history.train.last().copied(),
            best_validation_loss: outcome.history.validation.iter().copied().reduce(f64::min),
        };
        write_json(&dir.join("summary.json"), &summary)?;
        manifest.output("summary.json")?;
        manifest.write()?;
        println!(
            "train {c}: {} epochs, {} steps, best epoch {}, {} parameters",
            outcome.history.train.len(),
            outcome.steps,
            outcome.best_epoch,
            summary.parameter_count
        );
        Ok(ckpt)
    }

    /// Scores a trained checkpoint on the test split.
    pub fn evaluate(
        &self,
        c: FeatureConfig,
        checkpoint: Option<&Path>,
        dataset: Option<&Path>,
    ) -> Result<RunRecord> {
        let dataset = dataset.map_or_else(
            || self.featurize_dir(c).join(DATASET_FILE),
            Path::to_path_buf,
        );
        let checkpoint = checkpoint.map_or_else(
            || self.train_dir(c).join(CHECKPOINT_FILE),
            Path::to_path_buf,
        );
        for (what, p, producer) in [
            ("dataset", &dataset, "featurize"),
            ("checkpoint", &checkpoint, "train"),
        ] {
            if !p.is_file() {
                bail!(
                    "missing input: {what} {} not found (run `{producer}` first)",
                    p.display()
                );
            }
        }
        let ds = Self::read_dataset(&dataset, c)?;
        let ckpt = load_checkpoint(&checkpoint)?;
        let mc = ckpt.model.config();
        if mc.num_features != ds.num_features() || mc.window_len != ds.window {
            bail!(
                "checkpoint expects windows of {}x{}, dataset has {}x{}",
                mc.window_len,
                mc.num_features,
                ds.window,
                ds.num_features()
            );
        }
        let test: Vec<usize> = (ds.split_index..ds.len()).collect();
        let (x, _) = ds.batch(&test);
        let predicted = ckpt.model.predict(&x, 256)?;
        let (points, normalized, denormalized) = evaluate_predictions(&ds, &predicted)?;
        if !normalized.rmse.is_finite() || !normalized.mape_percent.is_finite() {
            bail!("non-finite metrics for configuration {c}");
        }

        let dir = stage_dir(&self.out, &["evaluate", &c.to_string()])?;
        let mut manifest = self.manifest(&dir, "evaluate", Some(c));
        manifest.input(&dataset)?;
        manifest.input(&checkpoint)?;
        let snapshot = fs::read(&dataset)?;
        let mut w = create(&dir.join(PREDICTIONS_FILE))?;
        write_predictions_csv(&points, &mut w)?;
        w.flush()?;
        manifest.output(PREDICTIONS_FILE)?;
        let run = RunRecord {
            configuration: c,
            seed: ckpt.seed,
            data_hash: sha256_hex(&snapshot)[..12].to_string(),
            best_epoch: ckpt.epoch as usize,
            normalized,
            denormalized,
            test_len: points.len(),
        };
        write_json(&dir.join(RUN_FILE), &run)?;
        manifest.output(RUN_FILE)?;
        manifest.write()?;
        println!(
            "evaluate {c}: rmse {:.6} mse {:.6} mape {:.2}% over {} test days",
            normalized.rmse,
            normalized.mse,
            normalized.mape_percent,
            points.len()
        );
        Ok(run)
    }

    /// Comparison table from every evaluated configuration.
    pub fn report(&self) -> Result<String> {
        let dir = stage_dir(&self.out, &["report"])?;
        let mut manifest = self.manifest(&dir, "report", None);
        let mut runs = Vec::new();
        for &c in &self.cfg.configurations {
            let path = self.evaluate_dir(c).join(RUN_FILE);
            if !path.is_file() {
                warn!(
                    "no evaluated run for configuration {c} at {}",
                    path.display()
                );
                continue;
            }
            let text = fs::read_to_string(&path)?;
            runs.push(
                serde_json::from_str::<RunRecord>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?,
            );
            manifest.input(&path)?;
        }
        if runs.is_empty() {
            bail!(
                "missing input: no evaluated runs under {} (run `evaluate` first)",
                self.out.join("evaluate").display()
            );
        }
        let report = build_report(&runs, self.cfg.train.seed, &self.cfg.echo())?;
        let table = report.render_table();
        fs::write(dir.join(REPORT_FILE), &table)?;
        manifest.output(REPORT_FILE)?;
        fs::write(dir.join(REPORT_CSV_FILE), report.to_csv())?;
        manifest.output(REPORT_CSV_FILE)?;
        manifest.write()?;
        Ok(table)
    }

    /// Every stage for every configured feature set, then the report.
    pub fn run_all(&self) -> Result<String> {
        stage("preflight", || {
            self.cfg
                .configurations
                .iter()
                .try_for_each(|&c| self.cfg.preflight(c))
        })?;
        stage("ingest", || self.ingest())?;
        if self.cfg.data.coins().len() >= 2 {
            stage("correlate", || self.correlate())?;
        }
        for &c in &self.cfg.configurations {
            let dataset = stage("featurize", || self.featurize(c))?;
            stage("train", || self.train(c, Some(&dataset)))?;
            stage("evaluate", || self.evaluate(c, None, None))?;
        }
        stage("report", || self.report())
    }
}

/// Writes a synthetic market and post set in the input formats.
pub fn synth(dir: &Path, cfg: &SynthConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let market = generate(cfg);
    let mut written = Vec::new();
    for series in [&market.eth, &market.btc, &market.ada, &market.dot] {
        let path = dir.join(format!("{}.csv", series.symbol));
        let mut w = create(&path)?;
        write_csv(series, &mut w)?;
        w.flush()?;
        written.push(path);
    }
    let path = dir.join("sentiment.jsonl");
    let mut w = create(&path)?;
    ethcast_core::sentiment::write_triplets(&market.posts, &mut w)?;
    w.flush()?;
    written.push(path);
    Ok(written)
}

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scheme};
use super::report::{emit_reports, CurvePoint, HourPoint, ResultRow, ResultTable, RunReport, VariancePoint};
use crate::cleanse::{clean_fraction, label_samples, rr_filter, write_report, LabeledSample};
use crate::datapipe::{resized_pixels, AugmentConfig, BinaryTask, DatasetKind, DatasetSplits, TaskId, TaskSizes, ENCODER_SIDE, VICTIM_SIDE};
use crate::error::{Error, Result};
use crate::qnnaas::{fluctuation_study, QnnService, QueryTensor, VictimModel};
use crate::rng;
use crate::simcore::ParamCircuit;
use crate::trainers::{
    labelled_inputs, one_hot, BarlowConfig, pretrain_qenc, train_base, train_classifier, train_qleak, train_victim, with_mixup,
    Pretrained, SubstituteModel, TrainLog,
};

/// Settings an encoder checkpoint was produced with, stored next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EncoderRecord {
    source: TaskId,
    seed: u64,
    data_dir: PathBuf,
    source_images: usize,
    barlow: BarlowConfig,
    augment: AugmentConfig,
    loss_history: Vec<f64>,
}

/// What a victim job hands to the query and training stages.
struct TaskView {
    victim: VictimModel,
    victim_log: TrainLog,
    test4: Vec<(Vec<f64>, usize)>,
    test16: Vec<(Vec<f64>, usize)>,
    query4: Vec<Vec<f64>>,
    query16: Vec<Vec<f64>>,
    query_truth: Vec<usize>,
}

/// How far a job runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Depth {
    Query,
    Clean,
    Train,
}

type Views = BTreeMap<(TaskId, u64), Arc<TaskView>>;
type Encoders = BTreeMap<(TaskId, u64), Arc<Pretrained>>;

/// Experiment runner with a bounded worker pool. Victims and pretrained
/// encoders are deterministic in (config, seed), so one runner reuses them
/// across calls.
pub struct Harness {
    cfg: ExperimentConfig,
    pool: rayon::ThreadPool,
    views: Mutex<Views>,
    encoders: Mutex<Encoders>,
}

fn losses_to_curve(task: TaskId, seed: u64, series: &str, losses: &[f64]) -> Vec<CurvePoint> {
    losses
        .iter()
        .enumerate()
        .map(|(e, &loss)| CurvePoint {
            task: task.to_string(),
            seed,
            series: series.to_string(),
            epoch: e + 1,
            loss,
        })
        .collect()
}

fn write_csv_file(path: &Path, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    f(BufWriter::new(File::create(path)?))
}

/// Runs every job, keeps the successful reports in job order and fails if any job failed.
fn collect_jobs(results: Vec<Result<RunReport>>) -> (RunReport, Option<Error>) {
    let total = results.len();
    let mut merged = RunReport::default();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rep) => merged.merge(rep),
            Err(e) => failures.push(e),
        }
    }
    let err = (!failures.is_empty()).then(|| {
        let failed = failures.len();
        Error::Jobs {
            failed,
            total,
            first: Box::new(failures.swap_remove(0)),
        }
    });
    (merged, err)
}

impl Harness {
    pub fn new(cfg: ExperimentConfig, jobs: usize) -> Result<Self> {
        cfg.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Argument(format!("worker pool: {e}")))?;
        Ok(Self {
            cfg,
            pool,
            views: Mutex::default(),
            encoders: Mutex::default(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    fn job_seed(seed: u64, task: TaskId) -> u64 {
        rng::derive_seed(seed, &[rng::tag(&task.to_string())])
    }

    fn job_dir(&self, task: TaskId, seed: u64) -> PathBuf {
        self.cfg.out_dir.join(task.to_string()).join(format!("seed-{seed}"))
    }

    fn task_seed_pairs(&self) -> Vec<(TaskId, u64)> {
        self.cfg
            .tasks
            .iter()
            .flat_map(|&t| self.cfg.seeds.iter().map(move |&s| (t, s)))
            .collect()
    }

    fn load_datasets(&self, with_sources: bool) -> Result<BTreeMap<DatasetKind, DatasetSplits>> {
        let mut kinds: BTreeSet<DatasetKind> = self.cfg.tasks.iter().map(|t| t.dataset).collect();
        if with_sources {
            kinds.extend(self.cfg.tasks.iter().map(|t| self.cfg.pretrain.source_for(*t).dataset));
        }
        kinds
            .into_iter()
            .map(|k| Ok((k, DatasetSplits::load(&self.cfg.data_dir, k)?)))
            .collect::<Result<_>>()
            .map_err(|e: Error| e.in_stage("load-data"))
    }

    fn prepare_task(&self, data: &BTreeMap<DatasetKind, DatasetSplits>, task: TaskId, seed: u64) -> Result<TaskView> {
        let js = Self::job_seed(seed, task);
        let bt = BinaryTask::build(task, &data[&task.dataset], self.cfg.sizes, js)?;
        let (victim, victim_log) = train_victim(&bt, &self.cfg.victim, js)?;
        let dir = self.job_dir(task, seed);
        fs::create_dir_all(&dir)?;
        victim.save(dir.join("victim.json"))?;
        write_csv_file(&dir.join("victim_log.csv"), |w| victim_log.write_csv(w))?;

        let n = self.cfg.query.samples;
        let queried = &bt.public[..n];
        Ok(TaskView {
            test4: labelled_inputs(&bt.test, VICTIM_SIDE)?,
            test16: labelled_inputs(&bt.test, ENCODER_SIDE)?,
            query4: resized_pixels(queried, VICTIM_SIDE)?,
            query16: resized_pixels(queried, ENCODER_SIDE)?,
            query_truth: queried.iter().map(|s| s.label.unwrap_or(usize::MAX)).collect(),
            victim,
            victim_log,
        })
    }

    fn prepare_tasks(&self, data: &BTreeMap<DatasetKind, DatasetSplits>) -> Result<Views> {
        let pairs = self.task_seed_pairs();
        let missing: Vec<(TaskId, u64)> = {
            let cache = self.views.lock().expect("victim cache poisoned");
            pairs.iter().copied().filter(|k| !cache.contains_key(k)).collect()
        };
        let fresh = missing
            .par_iter()
            .map(|&(t, s)| self.prepare_task(data, t, s).map_err(|e| e.in_stage("train-victim")))
            .collect::<Result<Vec<_>>>()?;
        let mut cache = self.views.lock().expect("victim cache poisoned");
        cache.extend(missing.into_iter().zip(fresh.into_iter().map(Arc::new)));
        Ok(pairs.into_iter().map(|k| (k, Arc::clone(&cache[&k]))).collect())
    }

    fn encoder_dir(&self, source: TaskId, seed: u64) -> PathBuf {
        self.cfg.out_dir.join("encoders").join(format!("{source}-seed-{seed}"))
    }

    fn encoder_record(&self, source: TaskId, seed: u64) -> EncoderRecord {
        EncoderRecord {
            source,
            seed,
            data_dir: self.cfg.data_dir.clone(),
            source_images: self.cfg.pretrain.source_images,
            barlow: self.cfg.pretrain.barlow.clone(),
            augment: self.cfg.pretrain.augment,
            loss_history: Vec::new(),
        }
    }

    /// A checkpoint written by an earlier run with identical pretraining settings.
    fn cached_encoder(&self, source: TaskId, seed: u64) -> Option<Pretrained> {
        let dir = self.encoder_dir(source, seed);
        let text = fs::read_to_string(dir.join("encoder.json")).ok()?;
        let mut stored: EncoderRecord = serde_json::from_str(&text).ok()?;
        let loss_history = std::mem::take(&mut stored.loss_history);
        if stored != self.encoder_record(source, seed) {
            return None;
        }
        let qenc = ParamCircuit::load(dir.join("qenc.json")).ok()?;
        Some(Pretrained { qenc, loss_history })
    }

    fn pretrain_one(&self, data: &BTreeMap<DatasetKind, DatasetSplits>, source: TaskId, seed: u64) -> Result<Pretrained> {
        if let Some(p) = self.cached_encoder(source, seed) {
            return Ok(p);
        }
        let n = self.cfg.pretrain.source_images;
        let sizes = TaskSizes { train: n, test: 0, public: 0 };
        let ss = rng::derive_seed(seed, &[rng::tag("source"), rng::tag(&source.to_string())]);
        let pool = BinaryTask::build(source, &data[&source.dataset], sizes, ss)?;
        let mut aug = self.cfg.pretrain.augment;
        aug.rng_seed = rng::derive_seed(ss, &[rng::tag("augment"), aug.rng_seed]);
        let out = pretrain_qenc(&pool.train, &self.cfg.pretrain.barlow, &aug, ss)?;
        let dir = self.encoder_dir(source, seed);
        fs::create_dir_all(&dir)?;
        out.qenc.save(dir.join("qenc.json"))?;
        write_csv_file(&dir.join("pretrain_loss.csv"), |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["epoch", "loss"])?;
            for (e, l) in out.loss_history.iter().enumerate() {
                w.write_record([(e + 1).to_string(), l.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?;
        let record = EncoderRecord {
            loss_history: out.loss_history.clone(),
            ..self.encoder_record(source, seed)
        };
        fs::write(dir.join("encoder.json"), serde_json::to_string_pretty(&record)?)?;
        Ok(out)
    }

    fn prepare_encoders(&self, data: &BTreeMap<DatasetKind, DatasetSplits>) -> Result<Encoders> {
        let keys: BTreeSet<(TaskId, u64)> = self
            .task_seed_pairs()
            .into_iter()
            .map(|(t, s)| (self.cfg.pretrain.source_for(t), s))
            .collect();
        let missing: Vec<(TaskId, u64)> = {
            let cache = self.encoders.lock().expect("encoder cache poisoned");
            keys.iter().copied().filter(|k| !cache.contains_key(k)).collect()
        };
        let fresh = missing
            .par_iter()
            .map(|&(src, s)| self.pretrain_one(data, src, s).map_err(|e| e.in_stage("pretrain")))
            .collect::<Result<Vec<_>>>()?;
        let mut cache = self.encoders.lock().expect("encoder cache poisoned");
        cache.extend(missing.into_iter().zip(fresh.into_iter().map(Arc::new)));
        Ok(keys.into_iter().map(|k| (k, Arc::clone(&cache[&k]))).collect())
    }

    fn query_stage(&self, view: &TaskView, task: TaskId, seed: u64, rounds: usize, dir: &Path) -> Result<QueryTensor> {
        let js = Self::job_seed(seed, task);
        let schedule = self.cfg.noise.schedule(view.victim.circuit.num_qubits(), rng::derive_seed(js, &[rng::tag("noise")]))?;
        let mut service = QnnService::new(view.victim.clone(), schedule, self.cfg.noise.effective_shots())?;
        let tensor = service.multi_round_query(&view.query4, rounds, self.cfg.query.phase)?;
        fs::create_dir_all(dir)?;
        write_csv_file(&dir.join("ledger.csv"), |w| service.ledger().write_csv(w))?;
        if service.ledger().total_labels() != rounds * view.query4.len() {
            return Err(Error::Service("ledger total disagrees with n·m".into()));
        }
        Ok(tensor)
    }

    fn fluctuation_points(&self, view: &TaskView, task: TaskId, seed: u64) -> Result<Vec<HourPoint>> {
        let js = Self::job_seed(seed, task);
        let schedule = self.cfg.noise.schedule(view.victim.circuit.num_qubits(), rng::derive_seed(js, &[rng::tag("noise")]))?;
        let acc = fluctuation_study(&view.victim, &view.test4, &schedule, &self.cfg.fluctuation_hours)?;
        Ok(self
            .cfg
            .fluctuation_hours
            .iter()
            .zip(acc)
            .map(|(&hour, accuracy)| HourPoint {
                task: task.to_string(),
                seed,
                hour,
                accuracy,
            })
            .collect())
    }

    #[allow(clippy::too_many_arguments)]
    fn job(
        &self,
        view: &TaskView,
        encoders: &Encoders,
        task: TaskId,
        seed: u64,
        rounds: usize,
        schemes: &[Scheme],
        rr_grid: &[f64],
        depth: Depth,
        dir: &Path,
    ) -> Result<RunReport> {
        let js = Self::job_seed(seed, task);
        let mut report = RunReport::default();
        let tensor = self.query_stage(view, task, seed, rounds, dir).map_err(|e| e.in_stage("query"))?;
        if depth == Depth::Query {
            return Ok(report);
        }

        let labeled: Vec<LabeledSample> = label_samples(&view.query4, &tensor).map_err(|e| e.in_stage("clean"))?;
        let truth = &view.query_truth;
        report.variances = labeled
            .iter()
            .map(|s| VariancePoint {
                task: task.to_string(),
                seed,
                sample_index: s.sample_index,
                score: s.score,
                correct: truth[s.sample_index] == s.hard_label,
            })
            .collect();
        let mut cleaned = Vec::new();
        for &rr in rr_grid {
            let c = rr_filter(&labeled, rr).map_err(|e| e.in_stage("clean"))?;
            write_csv_file(&dir.join(format!("cleaning_rr{rr:.1}.csv")), |w| {
                write_report(w, &labeled, &c, Some(truth))
            })?;
            cleaned.push((rr, c));
        }
        if depth == Depth::Clean {
            return Ok(report);
        }

        let labels_used = tensor.rounds() * tensor.samples();
        let all_clean = clean_fraction(&labeled, truth);
        let row = |scheme, rr, accuracy, clean| ResultRow {
            task: task.to_string(),
            scheme,
            rr,
            rounds,
            seed,
            accuracy,
            clean_fraction: clean,
            query_labels: labels_used,
        };
        let raw4: Vec<(Vec<f64>, Vec<f64>)> = labeled
            .iter()
            .map(|s| (view.query4[s.sample_index].clone(), one_hot(s.hard_label, 2)))
            .collect();

        if schemes.contains(&Scheme::Base) {
            let (model, log) = train_base(&raw4, &self.cfg.baseline, rng::derive_seed(js, &[rng::tag("base")]), None)
                .map_err(|e| e.in_stage("baseline"))?;
            report.curves.extend(losses_to_curve(task, seed, "base", &log.losses()));
            report.table.rows.push(row(Scheme::Base, 1.0, model.accuracy(&view.test4)?, all_clean));
        }
        if schemes.contains(&Scheme::Qleak) {
            let (ens, _) = train_qleak(&raw4, self.cfg.committee, &self.cfg.baseline, rng::derive_seed(js, &[rng::tag("qleak")]))
                .map_err(|e| e.in_stage("baseline"))?;
            report.table.rows.push(row(Scheme::Qleak, 1.0, ens.accuracy(&view.test4)?, all_clean));
        }
        if schemes.contains(&Scheme::Copyqnn) {
            let source = self.cfg.pretrain.source_for(task);
            let enc = encoders
                .get(&(source, seed))
                .ok_or_else(|| Error::Argument(format!("no encoder pretrained on {source}")).in_stage("pretrain"))?;
            report.curves.extend(losses_to_curve(task, seed, "barlow", &enc.loss_history));
            for (rr, c) in &cleaned {
                let train16: Vec<(Vec<f64>, Vec<f64>)> = c
                    .retained
                    .iter()
                    .map(|s| (view.query16[s.sample_index].clone(), one_hot(s.hard_label, 2)))
                    .collect();
                let ks = rng::derive_seed(js, &[rng::tag("copyqnn"), rr.to_bits()]);
                let train16 = with_mixup(&train16, self.cfg.mixup.copies, self.cfg.mixup.alpha, ks)
                    .map_err(|e| e.in_stage("transfer"))?;
                let mut model = SubstituteModel::new(enc.qenc.clone(), 2, self.cfg.classifier.logit_scale, ks)?;
                let log = train_classifier(&mut model, &train16, &self.cfg.classifier, ks, None)
                    .map_err(|e| e.in_stage("transfer"))?;
                report.curves.extend(losses_to_curve(task, seed, &format!("classifier-rr{rr:.1}"), &log.losses()));
                let acc = model.accuracy(&view.test16).map_err(|e| e.in_stage("evaluate"))?;
                report.table.rows.push(row(Scheme::Copyqnn, *rr, acc, clean_fraction(&c.retained, truth)));
            }
        }
        Ok(report)
    }

    fn run_depth(&self, schemes: &[Scheme], depth: Depth, rounds_list: &[usize], rr_grid: &[f64]) -> Result<RunReport> {
        self.pool.install(|| {
            let needs_encoder = depth == Depth::Train && schemes.contains(&Scheme::Copyqnn);
            let data = self.load_datasets(needs_encoder)?;
            let views = self.prepare_tasks(&data)?;
            let encoders = if needs_encoder { self.prepare_encoders(&data)? } else { BTreeMap::new() };
            drop(data);

            let mut specs = Vec::new();
            for (&(task, seed), view) in &views {
                for &m in rounds_list {
                    let dir = if rounds_list.len() > 1 {
                        self.job_dir(task, seed).join(format!("m-{m}"))
                    } else {
                        self.job_dir(task, seed)
                    };
                    specs.push((task, seed, view, m, dir));
                }
            }
            let results: Vec<Result<RunReport>> = specs
                .par_iter()
                .map(|(task, seed, view, m, dir)| {
                    self.job(view, &encoders, *task, *seed, *m, schemes, rr_grid, depth, dir)
                })
                .collect();
            let (mut merged, err) = collect_jobs(results);
            if rounds_list.len() == 1 && depth == Depth::Train {
                for (&(task, seed), view) in &views {
                    merged.hours.extend(self.fluctuation_points(view, task, seed)?);
                    merged.curves.extend(losses_to_curve(task, seed, "victim", &view.victim_log.losses()));
                }
            }
            merged.table = std::mem::take(&mut merged.table).sorted();
            match err {
                Some(e) => {
                    // keep what finished so partial runs can be inspected
                    emit_reports(&merged, &self.cfg.rr_grid, self.cfg.query.rounds, &self.cfg.out_dir)?;
                    Err(e)
                }
                None => Ok(merged),
            }
        })
    }

    /// Trains and checkpoints every (task, seed) victim.
    pub fn train_victims(&self) -> Result<RunReport> {
        self.pool.install(|| {
            let data = self.load_datasets(false)?;
            let views = self.prepare_tasks(&data)?;
            let mut report = RunReport::default();
            for ((task, seed), v) in &views {
                report.curves.extend(losses_to_curve(*task, *seed, "victim", &v.victim_log.losses()));
            }
            Ok(report)
        })
    }

    /// Victims plus multi-round querying; writes each job's ledger.
    pub fn query(&self) -> Result<RunReport> {
        self.run_depth(&[], Depth::Query, &[self.cfg.query.rounds], &[])
    }

    /// Querying plus label derivation and RR filtering; writes cleaning reports.
    pub fn clean(&self) -> Result<RunReport> {
        self.run_depth(&[], Depth::Clean, &[self.cfg.query.rounds], &self.cfg.rr_grid)
    }

    /// Contrastive pretraining of every encoder the configured tasks need.
    pub fn pretrain(&self) -> Result<RunReport> {
        self.pool.install(|| {
            let data = self.load_datasets(true)?;
            let enc = self.prepare_encoders(&data)?;
            let mut report = RunReport::default();
            for ((src, seed), p) in &enc {
                report.curves.extend(losses_to_curve(*src, *seed, "barlow", &p.loss_history));
            }
            Ok(report)
        })
    }

    /// Full pipeline for `schemes` over the configured RR grid; emits reports.
    pub fn run(&self, schemes: &[Scheme]) -> Result<RunReport> {
        let report = self.run_depth(schemes, Depth::Train, &[self.cfg.query.rounds], &self.cfg.rr_grid)?;
        emit_reports(&report, &self.cfg.rr_grid, self.cfg.query.rounds, &self.cfg.out_dir)?;
        Ok(report)
    }

    /// CopyQNN at the headline RR for every query-round count in `grid`.
    pub fn sweep_rounds(&self, grid: &[usize]) -> Result<RunReport> {
        if let Some(m) = grid.iter().find(|m| **m < 2) {
            return Err(Error::UndefinedVariance { rounds: *m });
        }
        let report = self.run_depth(&[Scheme::Copyqnn], Depth::Train, grid, &[self.cfg.headline_rr])?;
        let dir = self.cfg.out_dir.join("rounds");
        emit_reports(&report, &[self.cfg.headline_rr], self.cfg.query.rounds, &dir)?;
        write_csv_file(&dir.join("rounds_summary.csv"), |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["rounds", "mean_accuracy", "runs"])?;
            for (m, acc, runs) in rounds_summary(&report.table) {
                w.write_record([m.to_string(), acc.to_string(), runs.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?;
        Ok(report)
    }

    /// Victim accuracy at each configured hour under the configured noise.
    pub fn fluctuation(&self) -> Result<Vec<HourPoint>> {
        self.pool.install(|| {
            let data = self.load_datasets(false)?;
            let views = self.prepare_tasks(&data)?;
            let mut points = Vec::new();
            for (&(task, seed), v) in &views {
                points.extend(self.fluctuation_points(v, task, seed).map_err(|e| e.in_stage("fluctuation"))?);
            }
            fs::create_dir_all(&self.cfg.out_dir)?;
            write_csv_file(&self.cfg.out_dir.join("accuracy_vs_hour.csv"), |w| {
                let mut w = csv::Writer::from_writer(w);
                for p in &points {
                    w.serialize(p)?;
                }
                w.flush()?;
                Ok(())
            })?;
            Ok(points)
        })
    }
}

/// Mean accuracy and number of runs per query-round count.
pub fn rounds_summary(table: &ResultTable) -> Vec<(usize, f64, usize)> {
    let mut by: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in &table.rows {
        let e = by.entry(r.rounds).or_default();
        e.0 += r.accuracy;
        e.1 += 1;
    }
    by.into_iter().map(|(m, (s, k))| (m, s / k as f64, k)).collect()
}

/// Full extraction pipeline for every scheme in the config, with reports.
pub fn run_pipeline(cfg: &ExperimentConfig, jobs: usize) -> Result<RunReport> {
    let h = Harness::new(cfg.clone(), jobs)?;
    h.run(&cfg.schemes)
}

/// Alias of [`run_pipeline`]: every scheme over the whole RR grid.
pub fn sweep_rr(cfg: &ExperimentConfig, jobs: usize) -> Result<RunReport> {
    run_pipeline(cfg, jobs)
}

/// One pipeline per query-round count in `grid`.
pub fn sweep_rounds(cfg: &ExperimentConfig, grid: &[usize], jobs: usize) -> Result<RunReport> {
    Harness::new(cfg.clone(), jobs)?.sweep_rounds(grid)
}

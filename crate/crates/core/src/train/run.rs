//! The training loop: deterministic, early-stopped, best-checkpoint restoring.

use super::backward::backward;
use super::loss::{accuracy, cross_entropy_loss, log10_mse, mse_loss, LossKind, MetricKind};
use super::optim::AdamState;
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::nn::forward::forward_trace;
use crate::nn::{model_forward, Model, PreparedGraph, Readout};
use crate::scalar::{Mat, Real};
use crate::tasks::{TaskInstance, TaskKind, Targets};
use serde::Serialize;
use std::fmt::Write as _;

/// One batch compiled into a union graph with aligned targets.
struct CompiledBatch<T> {
    prep: PreparedGraph<T>,
    x: Mat<T>,
    target: CompiledTarget<T>,
    /// Number of dataset items (graphs, or masked nodes for node tasks).
    weight: usize,
}

enum CompiledTarget<T> {
    /// Labels aligned with output rows plus the rows that contribute.
    Classes { labels: Vec<usize>, rows: Vec<usize> },
    /// Real targets aligned with the full output.
    Reals(Mat<T>),
}

impl<T: Real> CompiledBatch<T> {
    fn loss_and_grad(&self, output: &Mat<T>, loss: LossKind) -> Result<(T, Mat<T>)> {
        match (&self.target, loss) {
            (CompiledTarget::Classes { labels, rows }, LossKind::CrossEntropy) => {
                cross_entropy_loss(output, labels, Some(rows))
            }
            (CompiledTarget::Reals(t), LossKind::Mse) => mse_loss(output, t),
            _ => Err(Error::Config(
                "loss kind does not match the task's target type".into(),
            )),
        }
    }

    fn metric(&self, output: &Mat<T>, metric: MetricKind) -> Result<f64> {
        match (&self.target, metric) {
            (CompiledTarget::Classes { labels, rows }, MetricKind::Accuracy) => {
                Ok(accuracy(output, labels, Some(rows)))
            }
            (CompiledTarget::Reals(t), MetricKind::Log10Mse) => log10_mse(output, t),
            _ => Err(Error::Config(
                "metric kind does not match the task's target type".into(),
            )),
        }
    }
}

/// Compiles one split of a task into batches.
fn compile_split<T: Real>(
    task: &TaskInstance<T>,
    model: &Model<T>,
    indices: &[usize],
    batch_size: usize,
) -> Result<Vec<CompiledBatch<T>>> {
    if indices.is_empty() {
        return Err(Error::invalid("empty split"));
    }
    match task.kind {
        TaskKind::NodeClassification => {
            // single graph; the split indexes nodes
            let labels = match &task.targets {
                Targets::NodeClasses(l) => l.clone(),
                _ => return Err(Error::invalid("expected node classes")),
            };
            let prep = PreparedGraph::for_model(task.graphs[0].clone(), model)?;
            Ok(vec![CompiledBatch {
                prep,
                x: task.features[0].clone(),
                target: CompiledTarget::Classes {
                    labels,
                    rows: indices.to_vec(),
                },
                weight: indices.len(),
            }])
        }
        TaskKind::RingTransfer => {
            let labels_all = match &task.targets {
                Targets::GraphClasses(l) => l,
                _ => return Err(Error::invalid("expected graph classes")),
            };
            let eval_node = task
                .eval_node
                .ok_or_else(|| Error::invalid("ring task without eval node"))?;
            compile_graph_batches(task, model, indices, batch_size, |batch, prep| {
                let rows: Vec<usize> = (0..batch.len())
                    .map(|i| prep.pooling.offsets[i] + eval_node)
                    .collect();
                let mut labels = vec![0usize; prep.graph.node_count()];
                for (i, &gidx) in batch.iter().enumerate() {
                    labels[rows[i]] = labels_all[gidx];
                }
                Ok(CompiledTarget::Classes { labels, rows })
            })
        }
        TaskKind::GraphRegression => {
            let ys = match &task.targets {
                Targets::GraphReals(y) => y.clone(),
                _ => return Err(Error::invalid("expected graph targets")),
            };
            compile_graph_batches(task, model, indices, batch_size, |batch, _prep| {
                let t = Mat::from_fn(batch.len(), 1, |i, _| ys[batch[i]]);
                Ok(CompiledTarget::Reals(t))
            })
        }
        TaskKind::NodeRegression => {
            let ys = match &task.targets {
                Targets::NodeReals(y) => y.clone(),
                _ => return Err(Error::invalid("expected node targets")),
            };
            compile_graph_batches(task, model, indices, batch_size, |batch, prep| {
                let mut t = Mat::zeros(prep.graph.node_count(), 1);
                for (i, &gidx) in batch.iter().enumerate() {
                    let lo = prep.pooling.offsets[i];
                    for r in 0..ys[gidx].len() {
                        t[(lo + r, 0)] = ys[gidx][r];
                    }
                }
                Ok(CompiledTarget::Reals(t))
            })
        }
    }
}

fn compile_graph_batches<T: Real>(
    task: &TaskInstance<T>,
    model: &Model<T>,
    indices: &[usize],
    batch_size: usize,
    mut make_target: impl FnMut(&[usize], &PreparedGraph<T>) -> Result<CompiledTarget<T>>,
) -> Result<Vec<CompiledBatch<T>>> {
    let chunk = if batch_size == 0 { indices.len() } else { batch_size };
    let hops = model.hops();
    let mut batches = Vec::new();
    for batch in indices.chunks(chunk) {
        let graphs: Vec<&crate::graph::Graph> = batch.iter().map(|&i| &task.graphs[i]).collect();
        let prep = PreparedGraph::union(&graphs, &hops)?;
        let mut x = Mat::zeros(prep.graph.node_count(), task.feature_dim());
        for (i, &gidx) in batch.iter().enumerate() {
            let lo = prep.pooling.offsets[i];
            let f = &task.features[gidx];
            for r in 0..f.nrows() {
                for c in 0..f.ncols() {
                    x[(lo + r, c)] = f[(r, c)];
                }
            }
        }
        let target = make_target(batch, &prep)?;
        batches.push(CompiledBatch {
            prep,
            x,
            target,
            weight: batch.len(),
        });
    }
    Ok(batches)
}

fn evaluate<T: Real>(
    model: &Model<T>,
    batches: &[CompiledBatch<T>],
    metric: MetricKind,
) -> Result<f64> {
    let mut acc = 0.0;
    let mut total = 0usize;
    for b in batches {
        let (out, _) = model_forward(model, &b.prep, &b.x, false)?;
        acc += b.metric(&out, metric)? * b.weight as f64;
        total += b.weight;
    }
    Ok(acc / total.max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
    pub test_metric: f64,
    pub grad_norm_first_layer: f64,
    pub grad_norm_last_layer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    /// Test metric of the restored best-validation checkpoint.
    pub test_metric: f64,
}

impl TrainHistory {
    /// CSV with one row per epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epoch,train_loss,val_metric,test_metric,grad_norm_first_layer,grad_norm_last_layer\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch,
                r.train_loss,
                r.val_metric,
                r.test_metric,
                r.grad_norm_first_layer,
                r.grad_norm_last_layer
            );
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "epochs_run": self.records.len(),
            "best_epoch": self.best_epoch,
            "best_val_metric": self.best_val_metric,
            "test_metric": self.test_metric,
        }))
        .expect("summary serializes")
    }
}

/// Trains `model` on the task's train split, early-stopping on the val
/// split, restoring the best checkpoint, and evaluating it on the test
/// split. Deterministic for fixed config and seeds.
pub fn train_loop<T: Real>(
    model: &mut Model<T>,
    task: &TaskInstance<T>,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    cfg.validate()?;
    task.validate()?;
    let train = compile_split(task, model, &task.splits.train, cfg.batch_size)?;
    let val = compile_split(task, model, &task.splits.val, 0)?;
    let test = compile_split(task, model, &task.splits.test, 0)?;
    let mut optimizer = AdamState::new();
    let mut best_val = cfg.metric.worst();
    let mut best_epoch = 0usize;
    let mut best_params = model.clone();
    let mut since_best = 0usize;
    let mut records = Vec::new();
    let depth = model.depth();
    for epoch in 0..cfg.max_epochs {
        let mut train_loss = 0.0;
        let mut total_weight = 0usize;
        let mut grad_first = 0.0;
        let mut grad_last = 0.0;
        for b in &train {
            let trace = forward_trace(model, &b.prep, &b.x)?;
            let (loss, grad_out) = b.loss_and_grad(&trace.output, cfg.loss)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "training loss diverged at epoch {epoch}"
                )));
            }
            let bundle = backward(model, &b.prep, &trace, &grad_out)?;
            if depth > 0 {
                grad_first = bundle.layer_weight_norm(0);
                grad_last = bundle.layer_weight_norm(depth - 1);
            }
            optimizer.step(
                model,
                &bundle,
                cfg.optimizer,
                cfg.learning_rate,
                cfg.weight_decay,
            )?;
            train_loss += loss.as_f64() * b.weight as f64;
            total_weight += b.weight;
        }
        train_loss /= total_weight.max(1) as f64;
        let val_metric = evaluate(model, &val, cfg.metric)?;
        let test_metric = evaluate(model, &test, cfg.metric)?;
        records.push(EpochRecord {
            epoch,
            train_loss,
            val_metric,
            test_metric,
            grad_norm_first_layer: grad_first,
            grad_norm_last_layer: grad_last,
        });
        if cfg.metric.improves(val_metric, best_val) {
            best_val = val_metric;
            best_epoch = epoch;
            best_params = model.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }
    *model = best_params;
    let test_metric = evaluate(model, &test, cfg.metric)?;
    Ok(TrainHistory {
        records,
        best_epoch,
        best_val_metric: best_val,
        test_metric,
    })
}

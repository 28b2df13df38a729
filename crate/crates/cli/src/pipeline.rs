//! The staged experiment: ingest → correlate → select → split → scale →
//! train → evaluate.

use std::collections::BTreeMap;
use std::time::Instant;

use qweather_core::circuits::z_feature_map;
use qweather_core::models::{
    accuracy, build_dense_baseline, dense_train, mse, qnn_train, vqc_train, Prediction, QnnModel, QnnTemplate, Targets,
    Task, TrainOptions, VqcClassifier,
};
use qweather_core::optim::CobylaOptions;
use qweather_core::par;
use qweather_core::qkernel::{
    default_gamma, dual_objective, fidelity_cross_kernel, fidelity_kernel_matrix, ovr_predict, ovr_train,
    rbf_cross_kernel, rbf_kernel_matrix, svm_predict, svm_train, KernelMatrix,
};
use qweather_core::recurrent::{sliding_windows, train_sequence_model, SequenceModel, SequenceTrainOptions};
use qweather_core::weather::{
    bin_target, correlate, load_csv, scale, select_features, split_index, synth_generate, BinMode, Dataset,
    IngestionReport, ScaleMethod, Scaling, TIME_FORMAT,
};
use serde::Serialize;

use crate::config::{DataSource, ExperimentConfig, ModelKind};
use crate::error::{AtStage, HarnessError, Stage};
use crate::report::{
    ExperimentReport, Metrics, ParameterCount, PredictionRow, RunArtifacts, SolverSummary, SplitMetrics, Timing,
};

/// Load the configured data source.
pub fn ingest(data: &DataSource, target: &str) -> Result<(Dataset, IngestionReport), HarnessError> {
    match data {
        DataSource::Synth { seed, n } => {
            let ds = synth_generate(*seed, *n).at(Stage::Ingest)?;
            let ds = Dataset::new(ds.time, ds.columns, target).at(Stage::Ingest)?;
            let rep = IngestionReport { rows_read: ds.len(), rows_dropped: 0, columns: ds.column_names() };
            Ok((ds, rep))
        }
        DataSource::Csv(path) => load_csv(path, target).at(Stage::Ingest),
    }
}

/// Model output on one sample: a scaled value or a label with scores.
#[derive(Clone, Debug)]
enum Output {
    Value(f64),
    Class(usize, Vec<f64>),
}

impl From<Prediction> for Output {
    fn from(p: Prediction) -> Self {
        match p {
            Prediction::Value(v) => Output::Value(v),
            Prediction::Class { label, probabilities } => Output::Class(label, probabilities),
        }
    }
}

struct Trained {
    train: Vec<Output>,
    test: Vec<Output>,
    loss_history: Vec<f64>,
    parameters: ParameterCount,
    architecture: BTreeMap<String, String>,
    model_json: String,
    solver: Vec<SolverSummary>,
    score_kind: Option<&'static str>,
    kernel_csv: Option<Vec<u8>>,
}

impl Trained {
    fn new(train: Vec<Output>, test: Vec<Output>, parameters: ParameterCount, model_json: String) -> Self {
        Trained {
            train,
            test,
            loss_history: Vec::new(),
            parameters,
            architecture: BTreeMap::new(),
            model_json,
            solver: Vec::new(),
            score_kind: None,
            kernel_csv: None,
        }
    }

    fn describe(mut self, pairs: &[(&str, String)]) -> Self {
        for (k, v) in pairs {
            self.architecture.insert(k.to_string(), v.clone());
        }
        self
    }
}

/// Rows, labels and targets handed to a model trainer.
struct Prepared<'a> {
    x_train: &'a [Vec<f64>],
    x_test: &'a [Vec<f64>],
    labels_train: &'a [usize],
    y_train: &'a [f64],
}

const ADAM: &str = "adam(beta1=0.9, beta2=0.999, eps=1e-8)";

fn outputs(preds: Vec<Prediction>) -> Vec<Output> {
    preds.into_iter().map(Output::from).collect()
}

fn circuit_count(n: usize) -> ParameterCount {
    ParameterCount { total: n, circuit: n, classical: 0, dual: None }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("model serializes")
}

fn task_targets<'a>(task: Task, p: &Prepared<'a>) -> Targets<'a> {
    if task.is_classification() {
        Targets::Labels(p.labels_train)
    } else {
        Targets::Values(p.y_train)
    }
}

fn train_qnn(cfg: &ExperimentConfig, p: &Prepared<'_>) -> Result<Trained, HarnessError> {
    let template = if cfg.model == ModelKind::QnnIsing { QnnTemplate::Ising } else { QnnTemplate::Sel };
    let d = p.x_train[0].len();
    let layers = cfg.layers.expect("resolved");
    let mut model = QnnModel::new(template, d, layers, cfg.task, cfg.seed.expect("resolved")).at(Stage::Train)?;
    let opts = TrainOptions { epochs: cfg.epochs.expect("resolved"), learning_rate: cfg.lr.expect("resolved") };
    let history = qnn_train(&mut model, p.x_train, task_targets(cfg.task, p), &opts).at(Stage::Train)?;
    let train = outputs(model.predict_batch(p.x_train).at(Stage::Evaluate)?);
    let test = outputs(model.predict_batch(p.x_test).at(Stage::Evaluate)?);
    let layout = model.circuit().layout().clone();
    let head = match cfg.task {
        Task::Regression => "affine map of <Z0> from [-1, 1] to the target range",
        Task::Binary => "p1 = (1 - <Z0>) / 2",
        Task::Ternary => "softmax(<Z0>, <Z1>, <Z2>)",
    };
    let mut t = Trained::new(train, test, circuit_count(model.n_params()), model.to_json().at(Stage::Train)?)
        .describe(&[
            ("circuit", format!("{}{:?}", layout.template, layout.shape)),
            ("encoding", "data reuploading RY(x)".into()),
            ("head", head.into()),
            ("gradient", "parameter-shift".into()),
            ("optimizer", format!("{ADAM}, full batch")),
            ("loss", if cfg.task.is_classification() { "cross-entropy" } else { "mse" }.into()),
        ]);
    t.loss_history = history;
    t.score_kind = cfg.task.is_classification().then_some("probability");
    Ok(t)
}

fn train_nn(cfg: &ExperimentConfig, p: &Prepared<'_>) -> Result<Trained, HarnessError> {
    let d = p.x_train[0].len();
    let budget = cfg.budget.expect("filled after selection");
    let mut net = build_dense_baseline(budget, d, cfg.task, cfg.seed.expect("resolved")).at(Stage::Config)?;
    let opts = TrainOptions { epochs: cfg.epochs.expect("resolved"), learning_rate: cfg.lr.expect("resolved") };
    let history = dense_train(&mut net, p.x_train, task_targets(cfg.task, p), &opts).at(Stage::Train)?;
    let train = outputs(net.predict_batch(p.x_train).at(Stage::Evaluate)?);
    let test = outputs(net.predict_batch(p.x_test).at(Stage::Evaluate)?);
    let n = net.count_params();
    let arch = format!(
        "{d} -> {} tanh -> {}{}",
        net.hidden,
        net.outputs,
        if net.output_bias { " (bias)" } else { " (no bias)" }
    );
    let mut t = Trained::new(
        train,
        test,
        ParameterCount { total: n, circuit: 0, classical: n, dual: None },
        net.to_json().at(Stage::Train)?,
    )
    .describe(&[("network", arch), ("optimizer", format!("{ADAM}, full batch"))]);
    t.loss_history = history;
    t.score_kind = cfg.task.is_classification().then_some("probability");
    Ok(t)
}

fn train_vqc(cfg: &ExperimentConfig, p: &Prepared<'_>) -> Result<Trained, HarnessError> {
    let d = p.x_train[0].len();
    let mut clf = VqcClassifier::standard(d, cfg.task.n_classes(), cfg.seed.expect("resolved")).at(Stage::Config)?;
    let opts = CobylaOptions { max_iters: cfg.iters.expect("resolved"), ..CobylaOptions::default() };
    let history = vqc_train(&mut clf, p.x_train, p.labels_train, &opts).at(Stage::Train)?;
    let train = outputs(clf.predict_batch(p.x_train).at(Stage::Evaluate)?);
    let test = outputs(clf.predict_batch(p.x_test).at(Stage::Evaluate)?);
    let mut t = Trained::new(train, test, circuit_count(clf.n_params()), clf.to_json().at(Stage::Train)?).describe(&[
        ("feature_map", "zz_feature_map(reps=1, linear)".into()),
        ("ansatz", "real_amplitudes(reps=3, linear)".into()),
        ("readout", format!("{:?}", clf.readout_rule).to_lowercase()),
        (
            "optimizer",
            format!("cobyla(initial_radius={}, end_radius={})", opts.initial_radius, opts.end_radius),
        ),
        ("loss", "cross-entropy".into()),
    ]);
    t.loss_history = history;
    t.score_kind = Some("probability");
    Ok(t)
}

#[derive(Serialize)]
struct KernelModelDocument<'a, M: Serialize> {
    kernel: String,
    train_features: &'a [Vec<f64>],
    model: M,
}

fn train_kernel(cfg: &mut ExperimentConfig, applied: &mut Vec<String>, p: &Prepared<'_>) -> Result<Trained, HarnessError> {
    let c = cfg.c.expect("resolved");
    let tol = cfg.tol.expect("resolved");
    let d = p.x_train[0].len();
    let (k, test_rows): (KernelMatrix, Vec<Vec<f64>>) = if cfg.model == ModelKind::Qsvm {
        let fm = z_feature_map(d, 1).at(Stage::Config)?;
        let k = fidelity_kernel_matrix(p.x_train, &fm).at(Stage::Train)?;
        (k, fidelity_cross_kernel(p.x_test, p.x_train, &fm).at(Stage::Evaluate)?)
    } else {
        if cfg.gamma.is_none() {
            cfg.gamma = Some(default_gamma(p.x_train));
            applied.push("gamma".into());
        }
        let gamma = cfg.gamma.expect("filled");
        let k = rbf_kernel_matrix(p.x_train, gamma).at(Stage::Train)?;
        (k, rbf_cross_kernel(p.x_test, p.x_train, gamma).at(Stage::Evaluate)?)
    };
    let n = k.size();
    let train_rows: Vec<Vec<f64>> = (0..n).map(|i| k.row(i)).collect();
    let descriptor = k.source.descriptor.clone();
    let (train, test, solver, model_json) = if cfg.task == Task::Binary {
        let y: Vec<i8> = p.labels_train.iter().map(|&l| if l == 1 { 1 } else { -1 }).collect();
        let model = svm_train(&k, &y, c, tol).at(Stage::Train)?;
        let predict = |rows: &[Vec<f64>]| -> Result<Vec<Output>, HarnessError> {
            rows.iter()
                .map(|r| {
                    let (label, dv) = svm_predict(&model, r).at(Stage::Evaluate)?;
                    Ok(Output::Class(usize::from(label == 1), vec![dv]))
                })
                .collect()
        };
        let (train, test) = (predict(&train_rows)?, predict(&test_rows)?);
        let summary = SolverSummary {
            class: None,
            iterations: model.iterations,
            kkt_gap: model.kkt_gap,
            n_support: model.support_indices.len(),
            dual_objective: dual_objective(&k, &y, &model.alphas()),
        };
        let json = to_json(&KernelModelDocument { kernel: descriptor.clone(), train_features: p.x_train, model: &model });
        (train, test, vec![summary], json)
    } else {
        let model = ovr_train(&k, p.labels_train, c, tol).at(Stage::Train)?;
        let predict = |rows: &[Vec<f64>]| -> Result<Vec<Output>, HarnessError> {
            rows.iter()
                .map(|r| {
                    let label = ovr_predict(&model, r).at(Stage::Evaluate)?;
                    Ok(Output::Class(label, model.decisions(r).at(Stage::Evaluate)?))
                })
                .collect()
        };
        let (train, test) = (predict(&train_rows)?, predict(&test_rows)?);
        let solver = model
            .classes
            .iter()
            .zip(&model.models)
            .map(|(&cls, m)| {
                let y: Vec<i8> = p.labels_train.iter().map(|&l| if l == cls { 1 } else { -1 }).collect();
                SolverSummary {
                    class: Some(cls),
                    iterations: m.iterations,
                    kkt_gap: m.kkt_gap,
                    n_support: m.support_indices.len(),
                    dual_objective: dual_objective(&k, &y, &m.alphas()),
                }
            })
            .collect();
        let json = to_json(&KernelModelDocument { kernel: descriptor.clone(), train_features: p.x_train, model: &model });
        (train, test, solver, json)
    };
    let dual: usize = solver.iter().map(|s: &SolverSummary| s.n_support).sum();
    let kernel_csv = if cfg.export_kernel == Some(true) {
        let mut buf = Vec::new();
        k.write_csv(&mut buf).at(Stage::Train)?;
        Some(buf)
    } else {
        None
    };
    let mut t = Trained::new(train, test, ParameterCount { total: dual, circuit: 0, classical: 0, dual: Some(dual) }, model_json)
        .describe(&[
            ("kernel", descriptor),
            ("solver", "smo, maximal violating pair".into()),
            (
                "multiclass",
                if cfg.task == Task::Ternary { "one-vs-rest" } else { "binary" }.into(),
            ),
        ]);
    t.solver = solver;
    t.score_kind = Some("decision");
    t.kernel_csv = kernel_csv;
    Ok(t)
}

struct Windows {
    train: Vec<Vec<Vec<f64>>>,
    test: Vec<Vec<Vec<f64>>>,
}

fn train_recurrent(cfg: &ExperimentConfig, w: &Windows, y_train: &[f64]) -> Result<Trained, HarnessError> {
    let d = w.train[0][0].len();
    let seed = cfg.seed.expect("resolved");
    let hidden = cfg.hidden.expect("resolved");
    let mut model = match cfg.model {
        ModelKind::Qlstm => SequenceModel::qlstm(d, hidden, cfg.layers.expect("resolved"), seed),
        ModelKind::Qgru => SequenceModel::qgru(d, hidden, cfg.layers.expect("resolved"), seed),
        ModelKind::Lstm => SequenceModel::lstm(d, hidden, seed),
        ModelKind::Gru => SequenceModel::gru(d, hidden, seed),
        other => unreachable!("{other} is not recurrent"),
    }
    .at(Stage::Config)?;
    let opts = SequenceTrainOptions {
        epochs: cfg.epochs.expect("resolved"),
        learning_rate: cfg.lr.expect("resolved"),
        batch_size: cfg.batch_size.expect("resolved"),
        seed,
    };
    let history = train_sequence_model(&mut model, &w.train, y_train, &opts).at(Stage::Train)?;
    let predict = |ws: &[Vec<Vec<f64>>]| -> Result<Vec<Output>, HarnessError> {
        let v = par::try_map_range(ws.len(), |i| model.predict(&ws[i])).at(Stage::Evaluate)?;
        Ok(v.into_iter().map(Output::Value).collect())
    };
    let (train, test) = (predict(&w.train)?, predict(&w.test)?);
    let total = model.count_params();
    let circuit = model.circuit_params();
    let cell = if model.kind.is_quantum() {
        format!("{} qubits, {} vqc layers, hidden {hidden}", hidden, cfg.layers.expect("resolved"))
    } else {
        format!("hidden {hidden}, dual bias")
    };
    let mut t = Trained::new(
        train,
        test,
        ParameterCount { total, circuit, classical: total - circuit, dual: None },
        model.to_json().at(Stage::Train)?,
    )
    .describe(&[
        ("cell", cell),
        ("head", "affine hidden -> 1".into()),
        ("window", format!("{} steps, stride 1, target at the last step", cfg.window.expect("resolved"))),
        ("optimizer", format!("{ADAM}, shuffled mini-batches")),
        ("loss", "mse".into()),
    ]);
    t.loss_history = history;
    Ok(t)
}

fn labels_of(out: &[Output]) -> Vec<usize> {
    out.iter()
        .map(|o| match o {
            Output::Class(l, _) => *l,
            Output::Value(_) => unreachable!("classification output"),
        })
        .collect()
}

fn values_of(out: &[Output]) -> Vec<f64> {
    out.iter()
        .map(|o| match o {
            Output::Value(v) => *v,
            Output::Class(..) => unreachable!("regression output"),
        })
        .collect()
}

fn regression_metrics(pred: &[f64], actual_scaled: &[f64], scaling: &Scaling, actual_k: &[f64]) -> SplitMetrics {
    let pred_k: Vec<f64> = pred.iter().map(|&v| scaling.inverse(v)).collect();
    SplitMetrics { accuracy: None, mse_scaled: Some(mse(pred, actual_scaled)), mse_original: Some(mse(&pred_k, actual_k)) }
}

/// Execute one experiment. Nothing is written; see [`crate::execute`].
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts, HarnessError> {
    let start = Instant::now();
    let mut stages = BTreeMap::new();
    let mut lap = {
        let mut last = Instant::now();
        move |name: &str, stages: &mut BTreeMap<String, f64>| {
            let now = Instant::now();
            stages.insert(name.to_string(), (now - last).as_secs_f64());
            last = now;
        }
    };

    let (mut cfg, mut applied) = config.resolve()?;
    let target = cfg.target.clone().expect("resolved");
    let (ds, ingestion) = ingest(&cfg.data, &target)?;
    lap("ingest", &mut stages);

    let correlations = correlate(&ds).at(Stage::Correlate)?;
    let features = select_features(&correlations, cfg.selection.expect("resolved")).at(Stage::Select)?;
    lap("correlate", &mut stages);

    let n = ds.len();
    let k = split_index(n, cfg.split.expect("resolved")).at(Stage::Split)?;
    let scaled = scale(&ds, &features, cfg.scaling.expect("resolved"), 0..k).at(Stage::Scale)?;
    let scaled = if cfg.task == Task::Regression {
        scale(&scaled, std::slice::from_ref(&target), ScaleMethod::Standard, 0..k).at(Stage::Scale)?
    } else {
        scaled
    };
    let x = scaled.matrix(&features).at(Stage::Scale)?;
    let raw_target = ds.target().values.clone();
    let target_col = scaled.target();
    let y_scaled = target_col.values.clone();
    let target_scaling = target_col.scaling;
    let labels = match cfg.task {
        Task::Binary => bin_target(&raw_target, BinMode::Binary).at(Stage::Scale)?,
        Task::Ternary => bin_target(&raw_target, BinMode::Ternary).at(Stage::Scale)?,
        Task::Regression => Vec::new(),
    };
    lap("scale", &mut stages);

    if cfg.model == ModelKind::Nn && cfg.budget.is_none() {
        let budget = match features.len() {
            3 => 21,
            4 => 48,
            d => return Err(HarnessError::Config(format!("no default parameter budget for {d} features; set `budget`"))),
        };
        cfg.budget = Some(budget);
        applied.push("budget".into());
    }

    // Sample rows for train and test, and the trained model.
    let (train_rows, test_rows, trained) = if cfg.model.is_recurrent() {
        let w = cfg.window.expect("resolved");
        if k < w {
            return Err(HarnessError::Stage {
                stage: Stage::Split,
                source: qweather_core::Error::InvalidArgument(format!("{k} training rows cannot fill a window of {w}")),
            });
        }
        let all = sliding_windows(&x, w).at(Stage::Split)?;
        let train_rows: Vec<usize> = (w - 1..k).collect();
        let test_rows: Vec<usize> = (k..n).collect();
        let windows = Windows {
            train: train_rows.iter().map(|&t| all[t + 1 - w].clone()).collect(),
            test: test_rows.iter().map(|&t| all[t + 1 - w].clone()).collect(),
        };
        let y_train: Vec<f64> = train_rows.iter().map(|&t| y_scaled[t]).collect();
        let trained = train_recurrent(&cfg, &windows, &y_train)?;
        (train_rows, test_rows, trained)
    } else {
        let labels_train = if labels.is_empty() { &[][..] } else { &labels[..k] };
        let prepared = Prepared {
            x_train: &x[..k],
            x_test: &x[k..],
            labels_train,
            y_train: &y_scaled[..k],
        };
        let trained = match cfg.model {
            ModelKind::QnnIsing | ModelKind::QnnSel => train_qnn(&cfg, &prepared)?,
            ModelKind::Nn => train_nn(&cfg, &prepared)?,
            ModelKind::Vqc => train_vqc(&cfg, &prepared)?,
            ModelKind::Qsvm | ModelKind::Svc => train_kernel(&mut cfg, &mut applied, &prepared)?,
            other => unreachable!("{other} handled above"),
        };
        ((0..k).collect(), (k..n).collect(), trained)
    };
    lap("train", &mut stages);

    let pick = |rows: &[usize], v: &[f64]| -> Vec<f64> { rows.iter().map(|&r| v[r]).collect() };
    let metrics = if cfg.task.is_classification() {
        let acc = |rows: &[usize], out: &[Output]| {
            let actual: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
            SplitMetrics { accuracy: Some(accuracy(&labels_of(out), &actual)), ..SplitMetrics::default() }
        };
        Metrics { train: acc(&train_rows, &trained.train), test: acc(&test_rows, &trained.test) }
    } else {
        let m = |rows: &[usize], out: &[Output]| {
            regression_metrics(&values_of(out), &pick(rows, &y_scaled), &target_scaling, &pick(rows, &raw_target))
        };
        Metrics { train: m(&train_rows, &trained.train), test: m(&test_rows, &trained.test) }
    };
    let predictions = test_rows
        .iter()
        .zip(&trained.test)
        .map(|(&r, o)| {
            let time = ds.time[r].format(TIME_FORMAT).to_string();
            match o {
                Output::Value(v) => {
                    PredictionRow { time, actual: raw_target[r], predicted: target_scaling.inverse(*v), scores: Vec::new() }
                }
                Output::Class(l, s) => {
                    PredictionRow { time, actual: labels[r] as f64, predicted: *l as f64, scores: s.clone() }
                }
            }
        })
        .collect();
    lap("evaluate", &mut stages);

    let report = ExperimentReport {
        config: cfg,
        defaults_applied: applied,
        architecture: trained.architecture,
        features,
        ingestion,
        correlations,
        n_train: train_rows.len(),
        n_test: test_rows.len(),
        metrics,
        parameters: trained.parameters,
        loss_history: trained.loss_history,
        solver: trained.solver,
        score_kind: trained.score_kind.map(str::to_string),
        predictions,
    };
    Ok(RunArtifacts {
        report,
        model_json: trained.model_json,
        kernel_csv: trained.kernel_csv,
        timing: Timing { wall_time_s: start.elapsed().as_secs_f64(), stages },
    })
}

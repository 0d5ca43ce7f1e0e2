use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::baselines::{baseline_curve, BaselineKind, CurvePoint};
use super::libsvm::load_libsvm;
use super::synth::{synth_lasso, LambdaMaxRule, SynthLassoParams};
use crate::approx::{solve_approx_dfw, CenterSchedule};
use crate::dfw::{solve_dfw, DfwConfig, ExecutionMode, Partition, PartitionScheme};
use crate::error::{Error, Result};
use crate::fw::{solve_fw_from, RunTrace, SolverConfig, StepRule};
use crate::netsim::{BroadcastStrategy, Topology, TopologySpec};
use crate::objectives::{
    mean_pairwise_distance, AtomMatrix, BaseKernel, Column, Domain, Iterate, KernelSpec, Objective,
    ObjectiveKind,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Centralized Frank-Wolfe.
    #[default]
    Solve,
    Dfw,
    Approx,
    Baseline,
}

/// Everything needed to reproduce a run. Field names double as the keys of
/// the TOML config file and the long CLI flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// `lasso`, `svm` or `adaboost`.
    pub objective: String,
    /// `synth:D:N:SA:SALPHA`, `identity:D` or `libsvm:PATH`.
    pub dataset: String,
    /// Read LIBSVM files one atom per feature.
    pub transpose: bool,
    pub topology: String,
    /// `contiguous`, `random[:SEED]` or `unbalanced:FRACTION[:SEED]`.
    pub partition: String,
    /// `flood`, `tree` or `star`.
    pub strategy: String,
    pub hub_holds_atoms: bool,
    pub allow_empty: bool,
    pub epsilon: f64,
    pub max_iter: usize,
    pub step: StepRule,
    pub beta: Option<f64>,
    pub simplex: bool,
    pub drop: Option<f64>,
    pub seed: u64,
    pub centers: String,
    pub certify: bool,
    /// `random` or `localfw`.
    pub baseline: String,
    pub baseline_m: Vec<usize>,
    pub temperature: f64,
    /// `linear` or `rbf`.
    pub kernel: String,
    pub sigma: Option<f64>,
    pub svm_c: f64,
    pub lambda_rule: LambdaMaxRule,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Solve,
            objective: "lasso".into(),
            dataset: "synth:100:200:0.1:0.05".into(),
            transpose: false,
            topology: "star:5".into(),
            partition: "random".into(),
            strategy: "tree".into(),
            hub_holds_atoms: false,
            allow_empty: false,
            epsilon: 1e-4,
            max_iter: 10_000,
            step: StepRule::Harmonic,
            beta: None,
            simplex: false,
            drop: None,
            seed: 0,
            centers: "fixed:auto-balance".into(),
            certify: false,
            baseline: "random".into(),
            baseline_m: vec![1, 2, 4, 8],
            temperature: 1.0,
            kernel: "rbf".into(),
            sigma: None,
            svm_c: 1.0,
            lambda_rule: LambdaMaxRule::Correlation,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }

    pub fn partition_scheme(&self) -> Result<PartitionScheme> {
        match self.partition.split(':').collect::<Vec<_>>().as_slice() {
            ["random"] => Ok(PartitionScheme::UniformRandom { seed: self.seed }),
            ["unbalanced", frac] => Ok(PartitionScheme::Unbalanced {
                fraction: frac
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad fraction {frac:?}")))?,
                seed: self.seed,
            }),
            _ => self.partition.parse(),
        }
    }

    fn solver(&self) -> Result<SolverConfig> {
        SolverConfig::new(self.epsilon, self.max_iter, self.step)
    }

    /// Parses and checks every field without running anything.
    pub fn validate(&self) -> Result<()> {
        self.solver()?;
        self.topology.parse::<TopologySpec>()?;
        self.partition_scheme()?;
        self.strategy.parse::<BroadcastStrategy>()?;
        self.centers.parse::<CenterSchedule>()?;
        self.dataset.parse::<DatasetSpec>()?;
        if !["lasso", "svm", "adaboost"].contains(&self.objective.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "unknown objective {:?}",
                self.objective
            )));
        }
        if let Some(b) = self.beta {
            Domain::l1(b)?;
        }
        if self.beta.is_some() && self.simplex {
            return Err(Error::InvalidParameter(
                "--beta and --simplex are exclusive".into(),
            ));
        }
        if let Some(p) = self.drop {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "drop must be in [0, 1), got {p}"
                )));
            }
            if self.mode != Mode::Dfw {
                return Err(Error::InvalidParameter(
                    "--drop applies to dfw runs only".into(),
                ));
            }
        }
        if self.mode == Mode::Baseline {
            self.baseline_kind()?;
            if self.baseline_m.is_empty() || self.baseline_m.contains(&0) {
                return Err(Error::InvalidParameter(
                    "baseline_m needs positive entries".into(),
                ));
            }
        }
        Ok(())
    }

    fn baseline_kind(&self) -> Result<BaselineKind> {
        match self.baseline.as_str() {
            "random" => Ok(BaselineKind::Random { seed: self.seed }),
            other => other.parse(),
        }
    }
}

/// Where the atoms come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    Synth(SynthLassoParams),
    /// `A = I_d`, the quadratic `‖α‖²` under a zero target.
    Identity(usize),
    Libsvm(PathBuf),
}

impl FromStr for DatasetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "unknown dataset {s:?}; expected synth:D:N:SA:SALPHA, identity:D or libsvm:PATH"
            ))
        };
        if let Some(path) = s.strip_prefix("libsvm:") {
            return Ok(Self::Libsvm(PathBuf::from(path)));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["identity", d] => Ok(Self::Identity(d.parse().map_err(|_| bad())?)),
            ["synth", d, n, sa, salpha] => Ok(Self::Synth(SynthLassoParams::new(
                d.parse().map_err(|_| bad())?,
                n.parse().map_err(|_| bad())?,
                sa.parse().map_err(|_| bad())?,
                salpha.parse().map_err(|_| bad())?,
                0,
            ))),
            _ => Err(bad()),
        }
    }
}

/// A loaded problem instance.
#[derive(Clone, Debug)]
pub struct Problem {
    pub kind: ObjectiveKind,
    pub atoms: AtomMatrix,
    pub domain: Domain,
    pub lambda_max: Option<f64>,
}

/// Builds the objective, atoms and domain described by `cfg`.
pub fn load_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let spec: DatasetSpec = cfg.dataset.parse()?;
    let (atoms, target, suggested_beta, lambda_max) = match spec {
        DatasetSpec::Synth(mut params) => {
            params.seed = cfg.seed;
            let s = synth_lasso(&params, cfg.lambda_rule)?;
            (s.atoms, Some(s.target), Some(s.beta), Some(s.lambda_max))
        }
        DatasetSpec::Identity(d) => (AtomMatrix::identity(d)?, Some(vec![0.0; d]), None, None),
        DatasetSpec::Libsvm(path) => {
            let (atoms, labels) = load_libsvm(&path, cfg.transpose)?;
            let target = cfg.transpose.then_some(labels);
            (atoms, target, None, None)
        }
    };
    let kind = match cfg.objective.as_str() {
        "lasso" => ObjectiveKind::Lasso {
            target: target.clone().ok_or_else(|| {
                Error::InvalidParameter(
                    "LASSO needs a target: use --transpose with LIBSVM data".into(),
                )
            })?,
        },
        "svm" => {
            if atoms.labels().is_none() {
                return Err(Error::InvalidParameter(
                    "the SVM needs labelled examples: a LIBSVM file without --transpose".into(),
                ));
            }
            let base = match cfg.kernel.as_str() {
                "linear" => BaseKernel::Linear,
                "rbf" => BaseKernel::Rbf {
                    sigma: cfg
                        .sigma
                        .unwrap_or_else(|| mean_pairwise_distance(&atoms, 1000)),
                },
                other => return Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
            };
            ObjectiveKind::SvmDual {
                kernel: KernelSpec::new(base, cfg.svm_c)?,
            }
        }
        "adaboost" => ObjectiveKind::Adaboost {
            temperature: cfg.temperature,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown objective {other:?}"
            )))
        }
    };
    // boosting margins: row i of A is scaled by its label
    let atoms = match (&kind, cfg.transpose, &target) {
        (ObjectiveKind::Adaboost { .. }, true, Some(y)) => scale_rows(&atoms, y)?,
        _ => atoms,
    };
    let domain = if cfg.simplex {
        Domain::Simplex
    } else {
        Domain::l1(cfg.beta.or(suggested_beta).unwrap_or(1.0))?
    };
    Ok(Problem {
        kind,
        atoms,
        domain,
        lambda_max,
    })
}

fn scale_rows(atoms: &AtomMatrix, y: &[f64]) -> Result<AtomMatrix> {
    let dim = atoms.dim();
    let columns = atoms
        .columns()
        .iter()
        .map(|c| Column::from_pairs(dim, c.entries().map(|(i, v)| (i, v * y[i])).collect()))
        .collect::<Result<Vec<_>>>()?;
    AtomMatrix::new(dim, columns)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub objective: String,
    pub final_objective: f64,
    pub final_gap: f64,
    pub epsilon: f64,
    pub converged: bool,
    pub rounds: usize,
    pub total_reals: u64,
    pub support: usize,
    pub nodes: usize,
    /// Mean of the nodes' final objectives (runs with message drops).
    pub average_objective: Option<f64>,
    pub lambda_max: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub summary: Summary,
    pub trace: RunTrace,
    pub node_objectives: Option<Vec<Vec<f64>>>,
    pub curve: Option<Vec<CurvePoint>>,
}

/// Runs the experiment and, when `cfg.out` is set, writes `trace.csv`,
/// `summary.json` (and `curve.csv` for baselines) there.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let problem = load_problem(cfg)?;
    let spec: TopologySpec = cfg.topology.parse()?;
    let topo = Topology::from_spec(&spec)?;
    let partition = Partition::for_topology(
        &cfg.partition_scheme()?,
        problem.atoms.n_atoms(),
        &topo,
        cfg.hub_holds_atoms,
        cfg.allow_empty,
    )?;
    let solver = cfg.solver()?;
    let strategy: BroadcastStrategy = cfg.strategy.parse()?;
    let Problem {
        kind,
        atoms,
        domain,
        lambda_max,
    } = problem;

    let (trace, total_reals, node_objectives, curve) = match cfg.mode {
        Mode::Solve => {
            let start = Iterate::start(domain);
            let mut obj = Objective::central(kind.clone(), &atoms, &start)?;
            let trace = solve_fw_from(&mut obj, start, &solver, |j| partition.owner(j))?;
            (trace, 0, None, None)
        }
        Mode::Dfw => {
            let mode = match cfg.drop {
                Some(p) => ExecutionMode::Drop { p, seed: cfg.seed },
                None => ExecutionMode::Sync,
            };
            let config = DfwConfig {
                solver,
                strategy,
                mode,
            };
            let out = solve_dfw(kind.clone(), &atoms, domain, partition, topo, &config)?;
            (out.trace, out.ledger.total(), out.node_objectives, None)
        }
        Mode::Approx => {
            let schedule: CenterSchedule = cfg.centers.parse()?;
            let config = DfwConfig::sync(solver, strategy);
            let out = solve_approx_dfw(
                kind.clone(),
                &atoms,
                domain,
                partition,
                topo,
                &config,
                schedule,
                cfg.certify,
            )?;
            if let Some(c) = out.certificates.iter().find(|c| !c.holds()) {
                return Err(Error::Protocol(format!(
                    "selection error {:e} exceeds its bound {:e} in round {}",
                    c.delta, c.bound, c.iter
                )));
            }
            let total = out.outcome.ledger.total();
            (out.outcome.trace, total, None, None)
        }
        Mode::Baseline => {
            let baseline = cfg.baseline_kind()?;
            let curve = baseline_curve(
                baseline,
                &kind,
                &atoms,
                domain,
                &partition,
                &cfg.baseline_m,
                &solver,
            )?;
            let last_m = *cfg.baseline_m.last().expect("validated nonempty");
            let (point, trace) = super::baselines::run_baseline(
                baseline, &kind, &atoms, domain, &partition, last_m, &solver,
            )?;
            (trace, point.cum_reals, None, Some(curve))
        }
    };

    let last = trace.last();
    let summary = Summary {
        mode: cfg.mode,
        objective: kind.name().into(),
        final_objective: last.objective,
        final_gap: last.gap,
        epsilon: cfg.epsilon,
        converged: trace.converged,
        rounds: trace.steps(),
        total_reals,
        support: trace.final_iterate.support_len(),
        nodes: spec.nodes,
        average_objective: node_objectives
            .as_ref()
            .and_then(|rows| rows.last())
            .map(|v| v.iter().sum::<f64>() / v.len() as f64),
        lambda_max,
        beta: match domain {
            Domain::L1Ball { beta } => Some(beta),
            Domain::Simplex => None,
        },
    };
    let report = ExperimentReport {
        summary,
        trace,
        node_objectives,
        curve,
    };
    if let Some(dir) = &cfg.out {
        write_report(dir, &report)?;
    }
    Ok(report)
}

pub const TRACE_COLUMNS: [&str; 7] = [
    "iter",
    "selected_atom",
    "owner_node",
    "objective",
    "gap",
    "cum_reals",
    "wallclock_ns",
];

/// Writes the trace rows; per-node objective columns follow when present.
pub fn write_trace(
    out: impl std::io::Write,
    trace: &RunTrace,
    node_objectives: Option<&[Vec<f64>]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = TRACE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let n_nodes = node_objectives
        .and_then(|rows| rows.first())
        .map_or(0, |r| r.len());
    header.extend((0..n_nodes).map(|i| format!("node{i}_objective")));
    w.write_record(&header)?;
    for (k, r) in trace.records.iter().enumerate() {
        let mut row = vec![
            r.iter.to_string(),
            r.atom.to_string(),
            r.owner.to_string(),
            r.objective.to_string(),
            r.gap.to_string(),
            r.cum_reals.to_string(),
            r.elapsed_ns.to_string(),
        ];
        if let Some(rows) = node_objectives {
            row.extend(rows[k].iter().map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trace(
        fs::File::create(dir.join("trace.csv"))?,
        &report.trace,
        report.node_objectives.as_deref(),
    )?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&report.summary)?,
    )?;
    if let Some(curve) = &report.curve {
        let mut w = csv::Writer::from_path(dir.join("curve.csv"))?;
        for p in curve {
            w.serialize(p)?;
        }
        w.flush()?;
    }
    Ok(())
}

//! REINFORCE with a moving-average baseline over the sampling controller,
//! including exact backpropagation through time from cached activations.

use crate::agent::{sample_scheme, AgentParams, SampleTrace};
use crate::agent::{GATE_CANDIDATE, GATE_FORGET, GATE_INPUT, GATE_OUTPUT};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, EvalResult};
use crate::matrix::{PrefixIndex, SparseMatrix};
use crate::scheme::{parse_diagonal, parse_fill, FillMode, GridSpec, MappingScheme};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Keeps the sampling stream distinct from the weight-init stream.
const SAMPLER_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// First/second-moment adaptive rule, bias-corrected, epsilon 1e-8.
    Adam,
    /// Plain stochastic gradient descent, for ablation.
    Sgd,
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Reward weight on coverage; `1 - alpha` weighs the area complement.
    pub alpha: f64,
    pub epochs: usize,
    /// Samples per update (the `M` of the sampled gradient estimator).
    pub batch: usize,
    pub lr: f64,
    /// Baseline EMA decay.
    pub decay: f64,
    /// Grid cell size.
    pub grid: usize,
    /// Fill grade count.
    pub grades: usize,
    pub hidden: usize,
    pub seed: u64,
    /// Global-norm gradient clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub optimizer: Optimizer,
    pub tie_heads: bool,
}

impl TrainConfig {
    pub fn new(grid: usize, grades: usize, alpha: f64, epochs: usize, seed: u64) -> Self {
        Self {
            alpha,
            epochs,
            batch: 1,
            lr: 1e-3,
            decay: 0.95,
            grid,
            grades,
            hidden: 10,
            seed,
            clip_norm: Some(5.0),
            optimizer: Optimizer::Adam,
            tie_heads: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Argument(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if self.batch < 1 {
            return Err(Error::Argument("batch must be at least 1".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::Argument(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(Error::Argument(format!(
                "decay {} outside [0, 1)",
                self.decay
            )));
        }
        if let Some(c) = self.clip_norm {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::Argument(format!("clip norm {c} must be positive")));
            }
        }
        Ok(())
    }
}

/// One history row; batch means when `M > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub coverage: f64,
    pub area: f64,
    pub reward: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, Default)]
struct OptState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

/// Mutable training-loop state carried between updates.
#[derive(Debug, Clone)]
pub struct TrainerState {
    /// Exponential moving average of observed rewards, initialized to 0.
    pub baseline: f64,
    pub epoch: usize,
    /// Best complete-coverage scheme seen so far (minimal area).
    pub best_full: Option<(MappingScheme, EvalResult)>,
    /// Highest-reward scheme seen so far, regardless of coverage.
    pub best_any: Option<(MappingScheme, EvalResult)>,
    pub history: Vec<EpochStats>,
    opt: OptState,
}

impl TrainerState {
    pub fn new() -> Self {
        Self {
            baseline: 0.0,
            epoch: 0,
            best_full: None,
            best_any: None,
            history: Vec::new(),
            opt: OptState::default(),
        }
    }

    fn observe(&mut self, scheme: &MappingScheme, eval: &EvalResult) {
        if eval.coverage == 1.0 {
            let better = match &self.best_full {
                None => true,
                Some((cur, _)) => scheme.total_area() < cur.total_area(),
            };
            if better {
                self.best_full = Some((scheme.clone(), *eval));
            }
        }
        let better_any = match &self.best_any {
            None => true,
            Some((_, cur)) => eval.reward > cur.reward,
        };
        if better_any {
            self.best_any = Some((scheme.clone(), *eval));
        }
    }
}

impl Default for TrainerState {
    fn default() -> Self {
        Self::new()
    }
}

// -- gradients --------------------------------------------------------------

/// Adds `scale * d(trace.log_prob)/d(theta)` into `grads`
/// (length [`AgentParams::trainable_len`]); x0/h0/c0 are constants.
pub(crate) fn accumulate_grad_scaled(
    p: &AgentParams,
    trace: &SampleTrace,
    scale: f64,
    grads: &mut [f64],
) -> Result<()> {
    let expected = trace.diagonal.0.len() + trace.fills.0.len();
    if trace.steps.len() != expected {
        return Err(Error::Argument(format!(
            "trace cache has {} steps, actions imply {expected}",
            trace.steps.len()
        )));
    }
    let hn = p.hidden();
    let mut dh_next = vec![0.0; hn];
    let mut dc_next = vec![0.0; hn];

    for step in trace.steps.iter().rev() {
        if step.h.len() != hn {
            return Err(Error::Argument(
                "trace cache does not match agent shape".into(),
            ));
        }
        let mut dh = dh_next.clone();
        let mut dc = dc_next.clone();

        // head: d log p(action) / d logits = indicator - probs
        let (w_off, b_off, classes) = p.head_off(step.kind, step.step);
        let head_w = p.head_w(step.kind, step.step);
        for r in 0..classes {
            let dlogit = scale * (if r == step.action { 1.0 } else { 0.0 } - step.probs[r]);
            grads[b_off + r] += dlogit;
            for k in 0..hn {
                grads[w_off + r * hn + k] += dlogit * step.h[k];
                dh[k] += dlogit * head_w[r * hn + k];
            }
        }

        // cell backward
        let mut da = [vec![0.0; hn], vec![0.0; hn], vec![0.0; hn], vec![0.0; hn]];
        for k in 0..hn {
            let do_k = dh[k] * step.tanh_c[k];
            da[GATE_OUTPUT][k] = do_k * step.o[k] * (1.0 - step.o[k]);
            dc[k] += dh[k] * step.o[k] * (1.0 - step.tanh_c[k] * step.tanh_c[k]);
            let df = dc[k] * step.c_prev[k];
            da[GATE_FORGET][k] = df * step.f[k] * (1.0 - step.f[k]);
            let di = dc[k] * step.g[k];
            da[GATE_INPUT][k] = di * step.i[k] * (1.0 - step.i[k]);
            let dg = dc[k] * step.i[k];
            da[GATE_CANDIDATE][k] = dg * (1.0 - step.g[k] * step.g[k]);
        }

        let mut dh_prev = vec![0.0; hn];
        let mut dx = vec![0.0; hn];
        for gate in [GATE_FORGET, GATE_INPUT, GATE_CANDIDATE, GATE_OUTPUT] {
            let w = p.gate_w(gate);
            let w_base = p.gate_w_off(gate);
            let b_base = p.gate_b_off(gate);
            for r in 0..hn {
                let a = da[gate][r];
                if a == 0.0 {
                    continue;
                }
                grads[b_base + r] += a;
                let row = r * 2 * hn;
                for k in 0..hn {
                    grads[w_base + row + k] += a * step.h_prev[k];
                    grads[w_base + row + hn + k] += a * step.x[k];
                    dh_prev[k] += a * w[row + k];
                    dx[k] += a * w[row + hn + k];
                }
            }
        }

        // the previous step's output is both this step's input and its
        // hidden state, so both flows land on the same vector
        for k in 0..hn {
            dh_next[k] = dh_prev[k] + dx[k];
            dc_next[k] = dc[k] * step.f[k];
        }
    }
    Ok(())
}

/// Exact reverse-mode gradient of a trace's log-probability with respect to
/// every trainable parameter.
pub fn grad_log_prob(p: &AgentParams, trace: &SampleTrace) -> Result<Vec<f64>> {
    let mut grads = vec![0.0; p.trainable_len()];
    accumulate_grad_scaled(p, trace, 1.0, &mut grads)?;
    Ok(grads)
}

// -- updates ------------------------------------------------------------

fn apply_optimizer(params: &mut AgentParams, grads: &[f64], cfg: &TrainConfig, opt: &mut OptState) {
    let n = grads.len();
    match cfg.optimizer {
        Optimizer::Sgd => {
            let theta = params.theta_mut();
            for k in 0..n {
                theta[k] -= cfg.lr * grads[k];
            }
        }
        Optimizer::Adam => {
            const BETA1: f64 = 0.9;
            const BETA2: f64 = 0.999;
            const EPS: f64 = 1e-8;
            if opt.m.is_empty() {
                opt.m = vec![0.0; n];
                opt.v = vec![0.0; n];
            }
            opt.t += 1;
            let bc1 = 1.0 - BETA1.powi(opt.t as i32);
            let bc2 = 1.0 - BETA2.powi(opt.t as i32);
            let theta = params.theta_mut();
            for k in 0..n {
                opt.m[k] = BETA1 * opt.m[k] + (1.0 - BETA1) * grads[k];
                opt.v[k] = BETA2 * opt.v[k] + (1.0 - BETA2) * grads[k] * grads[k];
                let mhat = opt.m[k] / bc1;
                let vhat = opt.v[k] / bc2;
                theta[k] -= cfg.lr * mhat / (vhat.sqrt() + EPS);
            }
        }
    }
}

/// One policy-gradient step over a batch of traces.
///
/// The baseline moves first (`decay * baseline + (1 - decay) * mean reward`),
/// then each sample's advantage is taken against the updated baseline, and
/// the gradient of `sum(-log_prob * adv) / M` descends through the optimizer
/// after optional global-norm clipping.
pub fn reinforce_update(
    params: &mut AgentParams,
    traces: &[SampleTrace],
    rewards: &[f64],
    st: &mut TrainerState,
    cfg: &TrainConfig,
) -> Result<()> {
    if traces.is_empty() || traces.len() != rewards.len() {
        return Err(Error::Argument(format!(
            "batch of {} traces with {} rewards",
            traces.len(),
            rewards.len()
        )));
    }
    if let Some(bad) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(Error::NonFinite(format!(
            "reward {bad} at epoch {} (baseline {}, rewards {rewards:?})",
            st.epoch, st.baseline
        )));
    }
    let m = traces.len() as f64;
    let mean_reward: f64 = rewards.iter().sum::<f64>() / m;
    st.baseline = cfg.decay * st.baseline + (1.0 - cfg.decay) * mean_reward;

    let mut grads = vec![0.0; params.trainable_len()];
    for (trace, &r) in traces.iter().zip(rewards) {
        let adv = r - st.baseline;
        // loss = -log_prob * adv / M
        accumulate_grad_scaled(params, trace, -adv / m, &mut grads)?;
    }
    if let Some(bad) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!(
            "gradient component {bad} at epoch {} (baseline {}, rewards {rewards:?})",
            st.epoch, st.baseline
        )));
    }
    if let Some(cap) = cfg.clip_norm {
        let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > cap {
            let s = cap / norm;
            for g in grads.iter_mut() {
                *g *= s;
            }
        }
    }
    apply_optimizer(params, &grads, cfg, &mut st.opt);
    if let Some(bad) = params.theta().iter().position(|w| !w.is_finite()) {
        return Err(Error::NonFinite(format!(
            "parameter {bad} left the finite range at epoch {}",
            st.epoch
        )));
    }
    st.epoch += 1;
    Ok(())
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best_scheme: MappingScheme,
    pub best_eval: EvalResult,
    pub history: Vec<EpochStats>,
    pub params: AgentParams,
    /// True when `best_scheme` covers every nonzero.
    pub complete: bool,
}

/// Full training loop over a matrix: sample, parse, evaluate, update.
///
/// Returns the best-ever complete-coverage scheme (minimal area), falling
/// back to the highest-reward sample when coverage 1 was never reached.
/// Deterministic for a fixed `(matrix, config)`.
pub fn train(m: &SparseMatrix, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_observer(m, cfg, |_, _| Ok(()))
}

/// As [`train`], invoking `observer(epoch, params)` after every update so
/// callers can checkpoint on their own schedule.
pub fn train_with_observer<F>(
    m: &SparseMatrix,
    cfg: &TrainConfig,
    mut observer: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &AgentParams) -> Result<()>,
{
    cfg.validate()?;
    if cfg.epochs == 0 {
        return Err(Error::NoSamples);
    }
    let idx = PrefixIndex::new(m)?;
    let grid = GridSpec::new(m.dim(), cfg.grid)?;
    let n_steps = grid.n_decisions().max(1);
    let mut params =
        AgentParams::init_with(cfg.hidden, cfg.grades, n_steps, cfg.seed, cfg.tie_heads)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SAMPLER_STREAM);
    let mut st = TrainerState::new();
    let fill_mode = FillMode::Dynamic { grades: cfg.grades };

    for epoch in 0..cfg.epochs {
        let mut traces = Vec::with_capacity(cfg.batch);
        let mut rewards = Vec::with_capacity(cfg.batch);
        let (mut cov_sum, mut area_sum, mut reward_sum) = (0.0, 0.0, 0.0);
        for _ in 0..cfg.batch {
            let trace = sample_scheme(&params, &grid, &mut rng)?;
            let diag = parse_diagonal(&trace.diagonal, &grid)?;
            let fills = parse_fill(&trace.fills, &diag, fill_mode)?;
            let scheme = MappingScheme {
                dim: m.dim(),
                diag_blocks: diag,
                fill_blocks: fills,
            };
            let eval = evaluate(&scheme, &idx, cfg.alpha)?;
            st.observe(&scheme, &eval);
            cov_sum += eval.coverage;
            area_sum += eval.area;
            reward_sum += eval.reward;
            rewards.push(eval.reward);
            traces.push(trace);
        }
        reinforce_update(&mut params, &traces, &rewards, &mut st, cfg)?;
        let mb = cfg.batch as f64;
        st.history.push(EpochStats {
            epoch,
            coverage: cov_sum / mb,
            area: area_sum / mb,
            reward: reward_sum / mb,
            baseline: st.baseline,
        });
        if (epoch + 1) % 5000 == 0 {
            log::info!(
                "epoch {}: coverage {:.3}, area {:.3}, baseline {:.4}",
                epoch + 1,
                cov_sum / mb,
                area_sum / mb,
                st.baseline
            );
        }
        observer(epoch, &params)?;
    }

    let complete = st.best_full.is_some();
    let (best_scheme, best_eval) = st
        .best_full
        .or(st.best_any)
        .expect("at least one epoch sampled");
    Ok(TrainOutcome {
        best_scheme,
        best_eval,
        history: st.history,
        params,
        complete,
    })
}

/// Renders history as `epoch,coverage,area,reward,baseline` CSV, keeping
/// every `stride`-th row (plus the last).
pub fn curves_csv(history: &[EpochStats], stride: usize) -> String {
    let stride = stride.max(1);
    let mut out = String::from("epoch,coverage,area,reward,baseline\n");
    for (i, row) in history.iter().enumerate() {
        if i % stride == 0 || i + 1 == history.len() {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                row.epoch, row.coverage, row.area, row.reward, row.baseline
            ));
        }
    }
    out
}

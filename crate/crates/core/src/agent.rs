//! The sampling controller: a single LSTM cell with per-step classification
//! heads that autoregressively emits diagonal decisions and, whenever a new
//! block is started, a fill grade for the gap it opens.
//!
//! The cell output feeds both the recurrent state and the next step's input.
//! Every sampled action's probability is accumulated into the trace's
//! log-probability, and all activations are cached so the trainer can run
//! exact backpropagation through time.

use crate::error::{Error, Result};
use crate::scheme::{DiagonalActions, FillActions, GridSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const INIT_SCALE: f64 = 0.08;
const CHECKPOINT_VERSION: u32 = 1;

/// Gate order used throughout the flat parameter buffer.
pub(crate) const GATE_FORGET: usize = 0;
pub(crate) const GATE_INPUT: usize = 1;
pub(crate) const GATE_CANDIDATE: usize = 2;
pub(crate) const GATE_OUTPUT: usize = 3;

/// Which classification head a step consulted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Diagonal,
    Fill,
}

/// Controller parameters in one flat buffer.
///
/// Layout: the four gate weight matrices (`H x 2H`, input size equals the
/// hidden size) each followed by their bias, then one head block per
/// decision step (diagonal `2 x H` weights + bias, fill `G x H` weights +
/// bias), then the fixed initial input, hidden, and cell vectors. The
/// initial vectors are drawn once at init and are not trained.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    hidden: usize,
    grades: usize,
    n_steps: usize,
    seed: u64,
    tied: bool,
    theta: Vec<f64>,
}

impl AgentParams {
    /// Draws every parameter uniformly from `[-0.08, 0.08]` with a seeded
    /// generator; per-step heads are untied.
    pub fn init(hidden: usize, grades: usize, n_steps: usize, seed: u64) -> Result<Self> {
        Self::init_with(hidden, grades, n_steps, seed, false)
    }

    /// As [`AgentParams::init`], optionally sharing one head pair across
    /// all steps.
    pub fn init_with(
        hidden: usize,
        grades: usize,
        n_steps: usize,
        seed: u64,
        tied: bool,
    ) -> Result<Self> {
        let mut p = Self::shaped(hidden, grades, n_steps, seed, tied)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in p.theta.iter_mut() {
            *w = (rng.gen::<f64>() * 2.0 - 1.0) * INIT_SCALE;
        }
        Ok(p)
    }

    /// All-zero parameters: every head is exactly uniform and the hidden
    /// state stays zero. Useful as a reference policy.
    pub fn zeroed(hidden: usize, grades: usize, n_steps: usize) -> Self {
        Self::shaped(hidden, grades, n_steps, 0, false).expect("valid shapes")
    }

    fn shaped(hidden: usize, grades: usize, n_steps: usize, seed: u64, tied: bool) -> Result<Self> {
        if hidden < 1 {
            return Err(Error::Argument("hidden size must be at least 1".into()));
        }
        if grades < 2 {
            return Err(Error::Argument("grade count must be at least 2".into()));
        }
        if n_steps < 1 {
            return Err(Error::Argument("step count must be at least 1".into()));
        }
        let mut p = Self {
            hidden,
            grades,
            n_steps,
            seed,
            tied,
            theta: Vec::new(),
        };
        p.theta = vec![0.0; p.total_len()];
        Ok(p)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn grades(&self) -> usize {
        self.grades
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tied(&self) -> bool {
        self.tied
    }

    // -- flat layout ------------------------------------------------------

    fn gate_w_len(&self) -> usize {
        self.hidden * 2 * self.hidden
    }

    fn gates_len(&self) -> usize {
        4 * (self.gate_w_len() + self.hidden)
    }

    fn head_len(&self) -> usize {
        2 * self.hidden + 2 + self.grades * self.hidden + self.grades
    }

    fn stored_heads(&self) -> usize {
        if self.tied {
            1
        } else {
            self.n_steps
        }
    }

    /// Length of the trainable prefix (everything except x0/h0/c0).
    pub fn trainable_len(&self) -> usize {
        self.gates_len() + self.stored_heads() * self.head_len()
    }

    fn total_len(&self) -> usize {
        self.trainable_len() + 3 * self.hidden
    }

    pub(crate) fn gate_w_off(&self, gate: usize) -> usize {
        gate * (self.gate_w_len() + self.hidden)
    }

    pub(crate) fn gate_b_off(&self, gate: usize) -> usize {
        self.gate_w_off(gate) + self.gate_w_len()
    }

    fn head_base(&self, t: usize) -> usize {
        let slot = if self.tied { 0 } else { t };
        self.gates_len() + slot * self.head_len()
    }

    pub(crate) fn head_off(&self, kind: HeadKind, t: usize) -> (usize, usize, usize) {
        // returns (w offset, b offset, class count)
        let base = self.head_base(t);
        match kind {
            HeadKind::Diagonal => (base, base + 2 * self.hidden, 2),
            HeadKind::Fill => {
                let w = base + 2 * self.hidden + 2;
                (w, w + self.grades * self.hidden, self.grades)
            }
        }
    }

    pub(crate) fn gate_w(&self, gate: usize) -> &[f64] {
        let o = self.gate_w_off(gate);
        &self.theta[o..o + self.gate_w_len()]
    }

    pub(crate) fn gate_b(&self, gate: usize) -> &[f64] {
        let o = self.gate_b_off(gate);
        &self.theta[o..o + self.hidden]
    }

    pub(crate) fn head_w(&self, kind: HeadKind, t: usize) -> &[f64] {
        let (w, _, classes) = self.head_off(kind, t);
        &self.theta[w..w + classes * self.hidden]
    }

    pub(crate) fn head_b(&self, kind: HeadKind, t: usize) -> &[f64] {
        let (_, b, classes) = self.head_off(kind, t);
        &self.theta[b..b + classes]
    }

    pub fn x0(&self) -> &[f64] {
        let o = self.trainable_len();
        &self.theta[o..o + self.hidden]
    }

    pub fn h0(&self) -> &[f64] {
        let o = self.trainable_len() + self.hidden;
        &self.theta[o..o + self.hidden]
    }

    pub fn c0(&self) -> &[f64] {
        let o = self.trainable_len() + 2 * self.hidden;
        &self.theta[o..o + self.hidden]
    }

    /// Full flat buffer (trainable prefix then x0/h0/c0).
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    // -- checkpointing ----------------------------------------------------

    /// Versioned JSON checkpoint; round-trips bit-exactly.
    pub fn to_checkpoint_json(&self) -> String {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            hidden: self.hidden,
            grades: self.grades,
            n_steps: self.n_steps,
            seed: self.seed,
            tied: self.tied,
            theta: self.theta.clone(),
        };
        serde_json::to_string(&file).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Argument(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        let mut p = Self::shaped(file.hidden, file.grades, file.n_steps, file.seed, file.tied)?;
        if file.theta.len() != p.total_len() {
            return Err(Error::Argument(format!(
                "checkpoint has {} weights, shapes require {}",
                file.theta.len(),
                p.total_len()
            )));
        }
        p.theta = file.theta;
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    hidden: usize,
    grades: usize,
    n_steps: usize,
    seed: u64,
    tied: bool,
    theta: Vec<f64>,
}

/// Recurrent state of the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct LSTMState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out = W[:, :H] h + W[:, H:] x + b` for a row-major `H x 2H` gate matrix.
fn gate_preact(w: &[f64], b: &[f64], h_prev: &[f64], x: &[f64], out: &mut [f64]) {
    let hn = h_prev.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * 2 * hn..(r + 1) * 2 * hn];
        let mut acc = b[r];
        for k in 0..hn {
            acc += row[k] * h_prev[k] + row[hn + k] * x[k];
        }
        *o = acc;
    }
}

/// Intermediate values of one cell application, kept for backprop.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub kind: HeadKind,
    /// Decision-step index the consulted head belongs to.
    pub step: usize,
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
    pub probs: Vec<f64>,
    pub action: usize,
}

fn cell_forward(p: &AgentParams, x: &[f64], state: &LSTMState) -> StepCache {
    let hn = p.hidden();
    let mut f = vec![0.0; hn];
    let mut i = vec![0.0; hn];
    let mut g = vec![0.0; hn];
    let mut o = vec![0.0; hn];
    gate_preact(
        p.gate_w(GATE_FORGET),
        p.gate_b(GATE_FORGET),
        &state.h,
        x,
        &mut f,
    );
    gate_preact(
        p.gate_w(GATE_INPUT),
        p.gate_b(GATE_INPUT),
        &state.h,
        x,
        &mut i,
    );
    gate_preact(
        p.gate_w(GATE_CANDIDATE),
        p.gate_b(GATE_CANDIDATE),
        &state.h,
        x,
        &mut g,
    );
    gate_preact(
        p.gate_w(GATE_OUTPUT),
        p.gate_b(GATE_OUTPUT),
        &state.h,
        x,
        &mut o,
    );
    for v in f.iter_mut() {
        *v = sigmoid(*v);
    }
    for v in i.iter_mut() {
        *v = sigmoid(*v);
    }
    for v in g.iter_mut() {
        *v = v.tanh();
    }
    for v in o.iter_mut() {
        *v = sigmoid(*v);
    }
    let c: Vec<f64> = (0..hn).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..hn).map(|k| o[k] * tanh_c[k]).collect();
    StepCache {
        kind: HeadKind::Diagonal,
        step: 0,
        x: x.to_vec(),
        h_prev: state.h.clone(),
        c_prev: state.c.clone(),
        f,
        i,
        g,
        o,
        c,
        tanh_c,
        h,
        probs: Vec::new(),
        action: 0,
    }
}

/// One LSTM cell application with the standard gate equations.
pub fn lstm_step(p: &AgentParams, x: &[f64], state: &LSTMState) -> Result<LSTMState> {
    let hn = p.hidden();
    if x.len() != hn || state.h.len() != hn || state.c.len() != hn {
        return Err(Error::Argument(format!(
            "expected vectors of length {hn}, got x={}, h={}, c={}",
            x.len(),
            state.h.len(),
            state.c.len()
        )));
    }
    let cache = cell_forward(p, x, state);
    Ok(LSTMState {
        h: cache.h,
        c: cache.c,
    })
}

/// Class distribution of the step-`t` head on hidden vector `h`:
/// `softmax(W h + b)` with max-subtraction for stability.
pub fn head_probs(p: &AgentParams, t: usize, kind: HeadKind, h: &[f64]) -> Result<Vec<f64>> {
    if t >= p.n_steps() {
        return Err(Error::Argument(format!(
            "step {t} out of range for {} decision steps",
            p.n_steps()
        )));
    }
    if h.len() != p.hidden() {
        return Err(Error::Argument(format!(
            "hidden vector length {} != {}",
            h.len(),
            p.hidden()
        )));
    }
    let w = p.head_w(kind, t);
    let b = p.head_b(kind, t);
    let classes = b.len();
    let hn = p.hidden();
    let mut logits = vec![0.0; classes];
    for (r, l) in logits.iter_mut().enumerate() {
        let row = &w[r * hn..(r + 1) * hn];
        *l = b[r] + row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = probs.iter().sum();
    for v in probs.iter_mut() {
        *v /= sum;
    }
    Ok(probs)
}

/// One sampled episode: the emitted actions, their accumulated
/// log-probability, and the cached activations for backprop.
#[derive(Debug, Clone)]
pub struct SampleTrace {
    pub diagonal: DiagonalActions,
    pub fills: FillActions,
    pub log_prob: f64,
    pub steps: Vec<StepCache>,
}

fn run_episode<F>(p: &AgentParams, g: &GridSpec, mut pick: F) -> Result<SampleTrace>
where
    F: FnMut(HeadKind, usize, &[f64]) -> Result<usize>,
{
    let nd = g.n_decisions();
    if p.n_steps() < nd {
        return Err(Error::Argument(format!(
            "agent with {} steps cannot drive a grid needing {nd}",
            p.n_steps()
        )));
    }
    let mut state = LSTMState {
        h: p.h0().to_vec(),
        c: p.c0().to_vec(),
    };
    let mut x = p.x0().to_vec();
    let mut bits = Vec::with_capacity(nd);
    let mut grades = Vec::new();
    let mut log_prob = 0.0;
    let mut steps = Vec::new();

    for t in 0..nd {
        let mut cache = cell_forward(p, &x, &state);
        let probs = head_probs(p, t, HeadKind::Diagonal, &cache.h)?;
        let action = pick(HeadKind::Diagonal, t, &probs)?;
        log_prob += probs[action].ln();
        state = LSTMState {
            h: cache.h.clone(),
            c: cache.c.clone(),
        };
        x = cache.h.clone();
        cache.kind = HeadKind::Diagonal;
        cache.step = t;
        cache.probs = probs;
        cache.action = action;
        steps.push(cache);
        bits.push(action as u8);

        // a 0 opens a gap, so the fill grade is decided on an extra step
        if action == 0 {
            let mut cache = cell_forward(p, &x, &state);
            let probs = head_probs(p, t, HeadKind::Fill, &cache.h)?;
            let grade = pick(HeadKind::Fill, t, &probs)?;
            log_prob += probs[grade].ln();
            state = LSTMState {
                h: cache.h.clone(),
                c: cache.c.clone(),
            };
            x = cache.h.clone();
            cache.kind = HeadKind::Fill;
            cache.step = t;
            cache.probs = probs;
            cache.action = grade;
            steps.push(cache);
            grades.push(grade);
        }
    }

    Ok(SampleTrace {
        diagonal: DiagonalActions(bits),
        fills: FillActions(grades),
        log_prob,
        steps,
    })
}

/// Samples one episode by multinomial draws from each head distribution.
pub fn sample_scheme<R: Rng>(p: &AgentParams, g: &GridSpec, rng: &mut R) -> Result<SampleTrace> {
    run_episode(p, g, |_, _, probs| {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (idx, &pr) in probs.iter().enumerate() {
            acc += pr;
            if u < acc {
                return Ok(idx);
            }
        }
        Ok(probs.len() - 1)
    })
}

/// Teacher-forced log-probability of a full action pair; replays the exact
/// visitation order of [`sample_scheme`].
pub fn log_prob_of(
    p: &AgentParams,
    diagonal: &DiagonalActions,
    fills: &FillActions,
    g: &GridSpec,
) -> Result<f64> {
    if diagonal.0.len() != g.n_decisions() {
        return Err(Error::Argument(format!(
            "{} diagonal actions for {} decision points",
            diagonal.0.len(),
            g.n_decisions()
        )));
    }
    if fills.0.len() != diagonal.zeros() {
        return Err(Error::Argument(format!(
            "{} fill actions for {} gaps",
            fills.0.len(),
            diagonal.zeros()
        )));
    }
    let mut d_iter = diagonal.0.iter();
    let mut z_iter = fills.0.iter();
    let trace = run_episode(p, g, |kind, _, probs| {
        let a = match kind {
            HeadKind::Diagonal => *d_iter.next().expect("length checked") as usize,
            HeadKind::Fill => *z_iter.next().expect("masking checked"),
        };
        if a >= probs.len() {
            return Err(Error::Argument(format!(
                "action {a} out of range for a {}-way head",
                probs.len()
            )));
        }
        Ok(a)
    })?;
    Ok(trace.log_prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = AgentParams::init(6, 3, 4, 42).unwrap();
        let b = AgentParams::init(6, 3, 4, 42).unwrap();
        assert_eq!(a, b);
        let c = AgentParams::init(6, 3, 4, 43).unwrap();
        assert_ne!(a, c);
        assert!(a.theta().iter().all(|w| w.abs() <= INIT_SCALE));
    }

    #[test]
    fn zero_params_give_zero_state() {
        let p = AgentParams::zeroed(5, 3, 2);
        let s0 = LSTMState {
            h: vec![0.0; 5],
            c: vec![0.0; 5],
        };
        let s1 = lstm_step(&p, &[0.0; 5], &s0).unwrap();
        assert!(s1.h.iter().all(|&v| v == 0.0));
        assert!(s1.c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_weights_halve_cell_state() {
        let p = AgentParams::zeroed(3, 2, 1);
        let v = vec![0.8, -1.2, 2.5];
        let s0 = LSTMState {
            h: vec![0.0; 3],
            c: v.clone(),
        };
        let s1 = lstm_step(&p, &[0.0; 3], &s0).unwrap();
        for (k, &vk) in v.iter().enumerate() {
            assert!((s1.c[k] - 0.5 * vk).abs() < 1e-15);
            assert!((s1.h[k] - 0.5 * (0.5 * vk).tanh()).abs() < 1e-15);
        }
    }

    /// Re-derives the six gate equations with scalar loops, reading the
    /// weights through the public layout accessors.
    fn scalar_reference_step(p: &AgentParams, x: &[f64], s: &LSTMState) -> LSTMState {
        let hn = p.hidden();
        let act = |gate: usize, row: usize| {
            let w = p.gate_w(gate);
            let mut a = p.gate_b(gate)[row];
            for k in 0..hn {
                a += w[row * 2 * hn + k] * s.h[k];
                a += w[row * 2 * hn + hn + k] * x[k];
            }
            a
        };
        let mut h = vec![0.0; hn];
        let mut c = vec![0.0; hn];
        for r in 0..hn {
            let f = 1.0 / (1.0 + (-act(GATE_FORGET, r)).exp());
            let i = 1.0 / (1.0 + (-act(GATE_INPUT, r)).exp());
            let g = act(GATE_CANDIDATE, r).tanh();
            let o = 1.0 / (1.0 + (-act(GATE_OUTPUT, r)).exp());
            c[r] = f * s.c[r] + i * g;
            h[r] = o * c[r].tanh();
        }
        LSTMState { h, c }
    }

    #[test]
    fn cell_matches_scalar_recomputation() {
        let p = AgentParams::init(3, 4, 2, 7).unwrap();
        let x = vec![0.3, -0.9, 0.5];
        let s = LSTMState {
            h: vec![0.1, 0.2, -0.4],
            c: vec![-1.0, 0.6, 0.0],
        };
        let got = lstm_step(&p, &x, &s).unwrap();
        let want = scalar_reference_step(&p, &x, &s);
        for k in 0..3 {
            assert!((got.h[k] - want.h[k]).abs() < 1e-14);
            assert!((got.c[k] - want.c[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn lstm_step_checks_dimensions() {
        let p = AgentParams::zeroed(3, 2, 1);
        let s = LSTMState {
            h: vec![0.0; 3],
            c: vec![0.0; 3],
        };
        assert!(lstm_step(&p, &[0.0; 2], &s).is_err());
    }

    #[test]
    fn zero_head_is_uniform() {
        let p = AgentParams::zeroed(4, 5, 3);
        let probs = head_probs(&p, 1, HeadKind::Fill, &[0.3, 0.1, -0.2, 0.9]).unwrap();
        for v in probs {
            assert!((v - 0.2).abs() < 1e-15);
        }
        assert!(head_probs(&p, 3, HeadKind::Fill, &[0.0; 4]).is_err());
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let mut p = AgentParams::zeroed(1, 2, 1);
        // diagonal head bias [1000, 0]
        let (_, b_off, _) = p.head_off(HeadKind::Diagonal, 0);
        p.theta_mut()[b_off] = 1000.0;
        let probs = head_probs(&p, 0, HeadKind::Diagonal, &[0.0]).unwrap();
        assert!(probs[0] > 1.0 - 1e-12);
        assert!(probs[1] >= 0.0 && probs[1] < 1e-12);
    }

    #[test]
    fn degenerate_grid_yields_empty_trace() {
        let p = AgentParams::init(4, 3, 1, 0).unwrap();
        let g = GridSpec::new(8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = sample_scheme(&p, &g, &mut rng).unwrap();
        assert!(t.diagonal.0.is_empty());
        assert!(t.fills.0.is_empty());
        assert_eq!(t.log_prob, 0.0);
    }

    #[test]
    fn uniform_policy_bit_frequencies() {
        let p = AgentParams::zeroed(4, 3, 3);
        let g = GridSpec::new(8, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000usize;
        let mut zero_counts = [0usize; 3];
        for _ in 0..n {
            let t = sample_scheme(&p, &g, &mut rng).unwrap();
            for (j, &b) in t.diagonal.0.iter().enumerate() {
                if b == 0 {
                    zero_counts[j] += 1;
                }
            }
        }
        for (j, &cnt) in zero_counts.iter().enumerate() {
            let freq = cnt as f64 / n as f64;
            assert!((freq - 0.5).abs() < 0.01, "bit {j}: {freq}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = AgentParams::init(5, 4, 6, 9).unwrap();
        let g = GridSpec::new(14, 2).unwrap();
        let a = sample_scheme(&p, &g, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_scheme(&p, &g, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.diagonal, b.diagonal);
        assert_eq!(a.fills, b.fills);
        assert_eq!(a.log_prob, b.log_prob);
    }

    #[test]
    fn log_prob_matches_sampled_traces() {
        let p = AgentParams::init(5, 3, 7, 21).unwrap();
        let g = GridSpec::new(16, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let t = sample_scheme(&p, &g, &mut rng).unwrap();
            let lp = log_prob_of(&p, &t.diagonal, &t.fills, &g).unwrap();
            assert_eq!(lp, t.log_prob);
            assert!(t.log_prob <= 0.0);
            assert_eq!(t.fills.0.len(), t.diagonal.zeros());
        }
    }

    #[test]
    fn uniform_log_prob_product() {
        let p = AgentParams::zeroed(4, 4, 3);
        let g = GridSpec::new(8, 2).unwrap();
        let lp = log_prob_of(
            &p,
            &DiagonalActions(vec![1, 0, 1]),
            &FillActions(vec![2]),
            &g,
        )
        .unwrap();
        let want = 3.0 * 0.5f64.ln() + 0.25f64.ln();
        assert!((lp - want).abs() < 1e-12);
    }

    #[test]
    fn log_prob_rejects_bad_masking() {
        let p = AgentParams::zeroed(4, 4, 3);
        let g = GridSpec::new(8, 2).unwrap();
        assert!(log_prob_of(
            &p,
            &DiagonalActions(vec![1, 0, 1]),
            &FillActions(vec![]),
            &g
        )
        .is_err());
        assert!(log_prob_of(
            &p,
            &DiagonalActions(vec![1, 1, 1]),
            &FillActions(vec![0]),
            &g
        )
        .is_err());
        assert!(log_prob_of(
            &p,
            &DiagonalActions(vec![0, 1, 1]),
            &FillActions(vec![9]),
            &g
        )
        .is_err());
    }

    /// Recursively enumerates the generative tree and sums sequence
    /// probabilities; independent of the iterator used by the oracle module.
    fn total_probability(p: &AgentParams, g: &GridSpec) -> f64 {
        fn recurse(
            p: &AgentParams,
            g: &GridSpec,
            bits: &mut Vec<u8>,
            grades: &mut Vec<usize>,
        ) -> f64 {
            if bits.len() == g.n_decisions() {
                return log_prob_of(
                    p,
                    &DiagonalActions(bits.clone()),
                    &FillActions(grades.clone()),
                    g,
                )
                .unwrap()
                .exp();
            }
            let mut total = 0.0;
            bits.push(1);
            total += recurse(p, g, bits, grades);
            bits.pop();
            bits.push(0);
            for z in 0..p.grades() {
                grades.push(z);
                total += recurse(p, g, bits, grades);
                grades.pop();
            }
            bits.pop();
            total
        }
        recurse(p, g, &mut Vec::new(), &mut Vec::new())
    }

    #[test]
    fn policy_is_normalized() {
        let p = AgentParams::init(4, 3, 4, 13).unwrap();
        let g = GridSpec::new(10, 2).unwrap();
        let total = total_probability(&p, &g);
        assert!((total - 1.0).abs() < 1e-9, "sum {total}");
    }

    #[test]
    fn checkpoint_round_trips_bit_exact() {
        let p = AgentParams::init(6, 5, 4, 1234).unwrap();
        let text = p.to_checkpoint_json();
        let q = AgentParams::from_checkpoint_json(&text).unwrap();
        assert_eq!(p, q);
        assert!(AgentParams::from_checkpoint_json("{}").is_err());
    }

    #[test]
    fn tied_heads_share_parameters() {
        let p = AgentParams::init_with(4, 3, 5, 8, true).unwrap();
        assert_eq!(p.head_w(HeadKind::Fill, 0), p.head_w(HeadKind::Fill, 4));
        let q = AgentParams::init(4, 3, 5, 8).unwrap();
        assert!(q.trainable_len() > p.trainable_len());
    }

    proptest! {
        #[test]
        fn head_probs_normalize(seed in 0u64..200) {
            let p = AgentParams::init(5, 4, 2, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
            let h: Vec<f64> = (0..5).map(|_| rand::Rng::gen::<f64>(&mut rng) * 4.0 - 2.0).collect();
            let probs = head_probs(&p, 1, HeadKind::Fill, &h).unwrap();
            let sum: f64 = probs.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(probs.iter().all(|&v| v > 0.0));
        }
    }
}

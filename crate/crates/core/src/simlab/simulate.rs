//! Small-blocklength simulation of the Poisson-matching schemes: lossy
//! source coding, Wyner-Ziv, channel coding with cost and Gelfand-Pinsker.
//!
//! Every scheme is run through one engine over three sequences: the
//! observed sequence `s` (source or state), the codeword `v` drawn from a
//! conditional type class given `s`, and the decoder's view `w` drawn
//! memorylessly from `P(w | s, v)`. Source schemes search `(m, v)` at the
//! encoder and `v` given `m` at the decoder; channel schemes draw `m`,
//! search `v` given `m` at the encoder and `(m, v)` at the decoder.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{ArgMin, Codebook, ENUMERATION_LIMIT};
use super::gcc::{deviation_from_tables, gcc_counts, symbol_counts};
use super::pml::{draw_index, SOURCE_SALT};
use crate::error::{Error, Result};
use crate::gm::Zeta;
use crate::numeric::{ln_factorial, wilson_interval};
use crate::rdsolver::{capacity_cost, CodingInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeKind {
    LossySC,
    WynerZiv,
    ChannelCost,
    GelfandPinsker,
}

impl SchemeKind {
    pub fn of(instance: &CodingInstance) -> Result<SchemeKind> {
        Ok(match instance {
            CodingInstance::LossySC(_) => SchemeKind::LossySC,
            CodingInstance::WynerZiv(_) => SchemeKind::WynerZiv,
            CodingInstance::ChannelCost(_) => SchemeKind::ChannelCost,
            CodingInstance::GelfandPinsker(_) => SchemeKind::GelfandPinsker,
            other => {
                return Err(Error::Unsupported(format!("no simulator for {}", other.variant_name())));
            }
        })
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub scheme: SchemeKind,
    pub n: usize,
    /// Bits per symbol; the codebook has `floor(2^{n rate})` messages.
    pub rate: f64,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Test distortion (or cost) against `level + 1/n` instead of `level`.
    #[serde(default = "default_true")]
    pub delta_slack: bool,
    /// Lossy source coding only: code `n - ceil(log2 n)` symbols and
    /// reproduce the rest greedily, paying `log2 |Z|` bits for each.
    #[serde(default)]
    pub tail_repair: bool,
    #[serde(default)]
    pub trace: bool,
    /// Rows of the linear perturbation map, shape `(|S||V|, |S|)`; zero
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<Vec<f64>>>,
    pub instance: CodingInstance,
}

impl SimConfig {
    pub fn new(instance: CodingInstance, n: usize, rate: f64, trials: u64, seed: u64) -> Result<SimConfig> {
        Ok(SimConfig {
            scheme: SchemeKind::of(&instance)?,
            n,
            rate,
            trials,
            seed,
            delta_slack: true,
            tail_repair: false,
            trace: false,
            zeta: None,
            instance,
        })
    }

    /// `floor(2^{n rate})`, at least one.
    pub fn messages(&self) -> u64 {
        let m = (self.n as f64 * self.rate).exp2().floor();
        if m >= u64::MAX as f64 {
            u64::MAX
        } else {
            (m as u64).max(1)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    /// Per-symbol rate density of the encoded pair: `iota(V;S) - iota(V;W)`
    /// for source schemes, `iota(V;W) - iota(V;S)` for channel schemes.
    pub iota: f64,
    /// Block distortion (source schemes) or block cost (channel schemes).
    pub distortion: f64,
    pub error: bool,
    pub infeasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub scheme: SchemeKind,
    pub n: usize,
    pub rate: f64,
    pub messages: u64,
    pub trials: u64,
    pub excess_or_error_count: u64,
    pub infeasible_count: u64,
    pub error_rate: f64,
    pub wilson_interval: (f64, f64),
    pub empirical_rate_used: f64,
    /// Distortion or cost threshold actually tested.
    pub threshold: f64,
    /// Largest `sqrt(n) * max|G_{S,V} - (G_S o P_{V|S} + P_S o zeta(G_S))|`
    /// over feasible trials: the measured deviation constant.
    pub gcc_deviation_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TrialRecord>>,
}

impl SimResult {
    pub fn wilson_radius(&self) -> f64 {
        0.5 * (self.wilson_interval.1 - self.wilson_interval.0)
    }
}

enum Goal {
    Source { decoder: Vec<usize>, distortion: Vec<f64>, nz: usize },
    Channel { cost: Vec<f64> },
}

struct Plan {
    ns: usize,
    nv: usize,
    nw: usize,
    ps: Vec<f64>,
    kernel: Vec<f64>,
    side: Vec<f64>,
    goal: Goal,
    zeta: Zeta,
    n: usize,
    n_code: usize,
    messages: u64,
    space: u64,
    threshold: f64,
    seed: u64,
    iota_vs: Vec<f64>,
    iota_vw: Vec<f64>,
    weight_cache: Mutex<HashMap<Vec<u16>, f64>>,
    target_cache: Mutex<HashMap<Vec<u16>, Option<Vec<usize>>>>,
}

struct Outcome {
    record: TrialRecord,
    deviation: f64,
}

impl Plan {
    fn build(cfg: &SimConfig) -> Result<Plan> {
        if cfg.n == 0 {
            return Err(Error::InvalidInput("blocklength must be at least 1".into()));
        }
        if !(cfg.rate >= 0.0) || !cfg.rate.is_finite() {
            return Err(Error::Domain(format!("rate {} must be finite and nonnegative", cfg.rate)));
        }
        let kind = SchemeKind::of(&cfg.instance)?;
        if kind != cfg.scheme {
            return Err(Error::InvalidInput(format!("scheme {:?} does not match instance {:?}", cfg.scheme, kind)));
        }
        if cfg.tail_repair && kind != SchemeKind::LossySC {
            return Err(Error::Unsupported("tail repair applies to lossy source coding only".into()));
        }
        cfg.instance.validate()?;
        let (ns, nv, nw, ps, kernel, side, goal, level) = match &cfg.instance {
            CodingInstance::LossySC(l) => {
                let l = l.solved()?;
                let tc = l.test_channel.as_ref().expect("solved instance has a test channel");
                let (ns, nz) = (tc.from_alphabet().size(), tc.to_alphabet().size());
                let distortion = (0..ns * nz).map(|i| l.distortion.get(&[i / nz, i % nz])).collect();
                let goal = Goal::Source { decoder: (0..nz).collect(), distortion, nz };
                (ns, nz, 1, l.source.mass().to_vec(), tc.rows().to_vec(), vec![1.0; ns * nz], goal, l.level)
            }
            CodingInstance::WynerZiv(w) => {
                let w = w.normalized()?;
                let (ns, nv, nw) = (w.source.len(), w.aux.to_alphabet().size(), w.side_channel.to_alphabet().size());
                let nz = w.decoder.output().size();
                let side = (0..ns * nv * nw).map(|i| w.side_channel.get(i / (nv * nw), i % nw)).collect();
                let decoder = (0..nv * nw).map(|i| w.decoder.apply(&[i / nw, i % nw])).collect();
                let distortion = (0..ns * nz).map(|i| w.distortion.get(&[i / nz, i % nz])).collect();
                let goal = Goal::Source { decoder, distortion, nz };
                (ns, nv, nw, w.source.mass().to_vec(), w.aux.rows().to_vec(), side, goal, w.level)
            }
            CodingInstance::ChannelCost(c) => {
                let c = c.normalized()?;
                let input = match &c.input {
                    Some(p) => p.clone(),
                    None => capacity_cost(&c.channel, &c.cost, c.budget)?.input,
                };
                let (nv, nw) = (c.channel.from_alphabet().size(), c.channel.to_alphabet().size());
                let cost = c.cost.values().to_vec();
                (1, nv, nw, vec![1.0], input.mass().to_vec(), c.channel.rows().to_vec(), Goal::Channel { cost }, c.budget)
            }
            CodingInstance::GelfandPinsker(g) => {
                let (state, aux, eff, cost) = g.effective()?;
                let (ns, nv) = (state.len(), aux.to_alphabet().size());
                let nw = eff.domain()[2].size();
                let goal = Goal::Channel { cost: cost.values().to_vec() };
                (ns, nv, nw, state.mass().to_vec(), aux.rows().to_vec(), eff.values().to_vec(), goal, g.budget)
            }
            _ => unreachable!("scheme kind checked above"),
        };
        let zeta = match &cfg.zeta {
            None => Zeta::zero(ns, nv),
            Some(rows) => {
                if rows.len() != ns * nv || rows.iter().any(|r| r.len() != ns) {
                    return Err(Error::Shape(format!("zeta must be {}x{}", ns * nv, ns)));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Zeta::Affine { matrix: DMatrix::from_row_slice(ns * nv, ns, &flat), offset: DVector::zeros(ns * nv) }
            }
        };
        let tail = if cfg.tail_repair { (cfg.n as f64).log2().ceil() as usize } else { 0 };
        if tail >= cfg.n {
            return Err(Error::InvalidInput(format!("blocklength {} too short for tail repair", cfg.n)));
        }
        let n_code = cfg.n - tail;
        let messages = cfg.messages();
        let space = (nv as f64).powi(n_code as i32);
        let size = messages as f64 * space;
        if size > ENUMERATION_LIMIT as f64 {
            return Err(Error::EnumerationBound { size, limit: ENUMERATION_LIMIT as f64 });
        }

        let pv: Vec<f64> = (0..nv).map(|v| (0..ns).map(|s| ps[s] * kernel[s * nv + v]).sum()).collect();
        let mut pvw = vec![0.0; nv * nw];
        for s in 0..ns {
            for v in 0..nv {
                for w in 0..nw {
                    pvw[v * nw + w] += ps[s] * kernel[s * nv + v] * side[(s * nv + v) * nw + w];
                }
            }
        }
        let pw: Vec<f64> = (0..nw).map(|w| (0..nv).map(|v| pvw[v * nw + w]).sum()).collect();
        let iota_vs = (0..ns * nv).map(|i| (kernel[i] / pv[i % nv]).log2()).collect();
        let iota_vw = (0..nv * nw).map(|i| (pvw[i] / (pw[i % nw] * pv[i / nw])).log2()).collect();

        Ok(Plan {
            ns,
            nv,
            nw,
            ps,
            kernel,
            side,
            goal,
            zeta,
            n: cfg.n,
            n_code,
            messages,
            space: space as u64,
            threshold: level + if cfg.delta_slack { 1.0 / cfg.n as f64 } else { 0.0 },
            seed: cfg.seed,
            iota_vs,
            iota_vw,
            weight_cache: Mutex::new(HashMap::new()),
            target_cache: Mutex::new(HashMap::new()),
        })
    }

    fn target(&self, s_counts: &[usize]) -> Option<Vec<usize>> {
        let key: Vec<u16> = s_counts.iter().map(|&c| c as u16).collect();
        if let Some(t) = self.target_cache.lock().unwrap().get(&key) {
            return t.clone();
        }
        let t = gcc_counts(&self.ps, &self.kernel, self.nv, &self.zeta, s_counts).ok();
        self.target_cache.lock().unwrap().insert(key, t.clone());
        t
    }

    /// `ln P(v^n, w^n)` under the scheme's codeword law, a function of the
    /// joint type of `(v^n, w^n)` only: sums over the joint types of `s^n`
    /// consistent with it.
    fn log_weight(&self, cells: &[u16]) -> f64 {
        if let Some(&v) = self.weight_cache.lock().unwrap().get(cells) {
            return v;
        }
        let mut split = vec![0usize; self.ns * cells.len()];
        let mut terms = Vec::new();
        self.enumerate_splits(cells, 0, &mut split, &mut terms);
        let value = log_sum_exp(&terms);
        self.weight_cache.lock().unwrap().insert(cells.to_vec(), value);
        value
    }

    // split[cell * ns + s] = number of positions with state s in that cell.
    fn enumerate_splits(&self, cells: &[u16], cell: usize, split: &mut [usize], terms: &mut Vec<f64>) {
        if cell == cells.len() {
            if let Some(t) = self.leaf_term(cells, split) {
                terms.push(t);
            }
            return;
        }
        self.distribute(cells, cell, 0, cells[cell] as usize, split, terms);
    }

    fn distribute(&self, cells: &[u16], cell: usize, s: usize, left: usize, split: &mut [usize], terms: &mut Vec<f64>) {
        let ns = self.ns;
        if s + 1 == ns {
            split[cell * ns + s] = left;
            self.enumerate_splits(cells, cell + 1, split, terms);
            return;
        }
        for c in 0..=left {
            split[cell * ns + s] = c;
            self.distribute(cells, cell, s + 1, left - c, split, terms);
        }
    }

    fn leaf_term(&self, cells: &[u16], split: &[usize]) -> Option<f64> {
        let (ns, nv, nw) = (self.ns, self.nv, self.nw);
        let mut s_counts = vec![0usize; ns];
        let mut sv = vec![0usize; ns * nv];
        let mut term = 0.0;
        for cell in 0..cells.len() {
            let (v, w) = (cell / nw, cell % nw);
            term += ln_factorial(cells[cell] as u64);
            for s in 0..ns {
                let c = split[cell * ns + s];
                if c == 0 {
                    continue;
                }
                let p = self.side[(s * nv + v) * nw + w];
                if p <= 0.0 {
                    return None;
                }
                term += c as f64 * p.ln() - ln_factorial(c as u64);
                s_counts[s] += c;
                sv[s * nv + v] += c;
            }
        }
        for s in 0..ns {
            if s_counts[s] > 0 {
                if self.ps[s] <= 0.0 {
                    return None;
                }
                term += s_counts[s] as f64 * self.ps[s].ln();
            }
        }
        let target = self.target(&s_counts)?;
        if target != sv {
            return None;
        }
        for s in 0..ns {
            term -= ln_factorial(s_counts[s] as u64);
            for v in 0..nv {
                term += ln_factorial(target[s * nv + v] as u64);
            }
        }
        Some(term)
    }

    fn digits(&self, mut rank: u64, out: &mut [usize]) {
        for d in out.iter_mut().rev() {
            *d = (rank % self.nv as u64) as usize;
            rank /= self.nv as u64;
        }
    }

    fn cells_of(&self, v: &[usize], w: &[usize]) -> Vec<u16> {
        let mut cells = vec![0u16; self.nv * self.nw];
        for (&a, &b) in v.iter().zip(w) {
            cells[a * self.nw + b] += 1;
        }
        cells
    }

    /// `ln P(v, w)` for every codeword rank given the decoder's view `w`.
    fn decoder_log_weights(&self, w: &[usize]) -> Vec<f64> {
        let mut local: HashMap<Vec<u16>, f64> = HashMap::new();
        let mut v = vec![0usize; self.n_code];
        (0..self.space)
            .map(|rank| {
                self.digits(rank, &mut v);
                let cells = self.cells_of(&v, w);
                *local.entry(cells).or_insert_with_key(|c| self.log_weight(c))
            })
            .collect()
    }

    fn run_trial(&self, trial: u64) -> Result<Outcome> {
        let (ns, nv, nw) = (self.ns, self.nv, self.nw);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ SOURCE_SALT);
        rng.set_stream(trial);
        let book = Codebook::new(self.seed, trial, self.messages * self.space)?;
        let s: Vec<usize> = (0..self.n).map(|_| draw_index(&self.ps, &mut rng)).collect();
        let s_code = &s[..self.n_code];
        let message = match self.goal {
            Goal::Channel { .. } => rng.gen_range(0..self.messages),
            Goal::Source { .. } => 0,
        };
        let s_counts = symbol_counts(s_code, ns)?;
        let infeasible = |trial| Outcome {
            record: TrialRecord { trial, iota: f64::NAN, distortion: f64::NAN, error: true, infeasible: true },
            deviation: 0.0,
        };
        let Some(target) = self.target(&s_counts) else { return Ok(infeasible(trial)) };

        // Encoder: uniform weights over the conditional type class, so the
        // selection is the smallest score in the class.
        let mut v = vec![0usize; self.n_code];
        let in_class = |rank: u64, v: &mut [usize]| {
            self.digits(rank, v);
            let mut c = vec![0usize; ns * nv];
            for (&a, &b) in s_code.iter().zip(v.iter()) {
                c[a * nv + b] += 1;
            }
            c == target
        };
        let class: Vec<u64> = (0..self.space).filter(|&r| in_class(r, &mut v)).collect();
        let searched = match self.goal {
            Goal::Source { .. } => 0..self.messages,
            Goal::Channel { .. } => message..message + 1,
        };
        let mut enc = ArgMin::empty();
        for m in searched {
            let keys = class.iter().map(|&r| m * self.space + r);
            for (key, score) in keys.clone().zip(book.scores_at(keys)) {
                enc.offer_value(key, score);
            }
        }
        let (sent, rank) = (enc.key / self.space, enc.key % self.space);
        self.digits(rank, &mut v);
        let deviation = deviation_from_tables(&self.ps, &self.kernel, nv, &self.zeta, s_code, &v)? * (self.n_code as f64).sqrt();

        let w: Vec<usize> = s_code
            .iter()
            .zip(&v)
            .map(|(&a, &b)| draw_index(&self.side[(a * nv + b) * nw..(a * nv + b + 1) * nw], &mut rng))
            .collect();
        let log_w = self.decoder_log_weights(&w);
        let decoded_messages = match self.goal {
            Goal::Source { .. } => sent..sent + 1,
            Goal::Channel { .. } => 0..self.messages,
        };
        let mut dec = ArgMin::empty();
        for m in decoded_messages {
            for (rank, score) in book.scores_from(m * self.space).take(self.space as usize).enumerate() {
                let lw = log_w[rank];
                if lw > f64::NEG_INFINITY {
                    dec.offer_value(m * self.space + rank as u64, score.ln() - lw);
                }
            }
        }
        if !dec.found() {
            return Err(Error::Domain("decoder found no codeword with positive weight".into()));
        }
        let mut v_hat = vec![0usize; self.n_code];
        self.digits(dec.key % self.space, &mut v_hat);

        let density: f64 = s_code
            .iter()
            .zip(&v)
            .zip(&w)
            .map(|((&a, &b), &c)| self.iota_vs[a * nv + b] - self.iota_vw[b * nw + c])
            .sum::<f64>()
            / self.n_code as f64;
        let record = match &self.goal {
            Goal::Source { decoder, distortion, nz } => {
                let mut total: f64 = s_code
                    .iter()
                    .zip(&v_hat)
                    .zip(&w)
                    .map(|((&a, &b), &c)| distortion[a * nz + decoder[b * nw + c]])
                    .sum();
                for &a in &s[self.n_code..] {
                    total += distortion[a * nz..(a + 1) * nz].iter().copied().fold(f64::INFINITY, f64::min);
                }
                let d = total / self.n as f64;
                TrialRecord { trial, iota: density, distortion: d, error: d > self.threshold + 1e-12, infeasible: false }
            }
            Goal::Channel { cost } => {
                let c = s_code.iter().zip(&v).map(|(&a, &b)| cost[a * nv + b]).sum::<f64>() / self.n as f64;
                let wrong = dec.key / self.space != message;
                TrialRecord { trial, iota: -density, distortion: c, error: wrong || c > self.threshold + 1e-12, infeasible: false }
            }
        };
        Ok(Outcome { record, deviation })
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// Runs `config.trials` independent trials, each with its own codebook
/// stream; results are identical for identical configurations.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    let plan = Plan::build(config)?;
    let outcomes: Vec<Outcome> = (0..config.trials).into_par_iter().map(|t| plan.run_trial(t)).collect::<Result<_>>()?;
    let errors = outcomes.iter().filter(|o| o.record.error).count() as u64;
    let infeasible = outcomes.iter().filter(|o| o.record.infeasible).count() as u64;
    let deviation = outcomes.iter().map(|o| o.deviation).fold(0.0, f64::max);
    let mut rate_used = (plan.messages as f64).log2();
    if let Goal::Source { nz, .. } = plan.goal {
        rate_used += (plan.n - plan.n_code) as f64 * (nz as f64).log2();
    }
    Ok(SimResult {
        scheme: config.scheme,
        n: config.n,
        rate: config.rate,
        messages: plan.messages,
        trials: config.trials,
        excess_or_error_count: errors,
        infeasible_count: infeasible,
        error_rate: if config.trials == 0 { 0.0 } else { errors as f64 / config.trials as f64 },
        wilson_interval: wilson_interval(errors, config.trials),
        empirical_rate_used: rate_used / config.n as f64,
        threshold: plan.threshold,
        gcc_deviation_constant: deviation,
        trace: config.trace.then(|| outcomes.into_iter().map(|o| o.record).collect()),
    })
}

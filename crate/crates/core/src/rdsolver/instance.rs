use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::probkit::{
    cond_info_density, expectation, info_density, Alphabet, CondKernel, ProbVec, RealFunc,
};

use super::blahut::blahut_arimoto_rd;

/// Deterministic map from a product of alphabets to an output alphabet,
/// indexed row-major over the inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderMap {
    inputs: Vec<Alphabet>,
    output: Alphabet,
    map: Vec<usize>,
}

impl DecoderMap {
    pub fn new(inputs: Vec<Alphabet>, output: Alphabet, map: Vec<usize>) -> Result<Self> {
        let len: usize = inputs.iter().map(Alphabet::size).product();
        if map.len() != len {
            return Err(Error::Shape(format!("decoder map has {} entries, expected {len}", map.len())));
        }
        if map.iter().any(|&z| z >= output.size()) {
            return invalid("decoder output index out of range");
        }
        Ok(DecoderMap { inputs, output, map })
    }

    pub fn inputs(&self) -> &[Alphabet] {
        &self.inputs
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, idx: &[usize]) -> usize {
        let flat = idx.iter().zip(&self.inputs).fold(0, |acc, (&i, a)| acc * a.size() + i);
        self.map[flat]
    }

    fn renamed(&self, inputs: &[&str], output: &str) -> Result<DecoderMap> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::Shape(format!("decoder takes {} inputs, expected {}", self.inputs.len(), inputs.len())));
        }
        Ok(DecoderMap {
            inputs: self.inputs.iter().zip(inputs).map(|(a, n)| a.renamed(*n)).collect(),
            output: self.output.renamed(output),
            map: self.map.clone(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct DecoderWire {
    inputs: Vec<Vec<String>>,
    output: Vec<String>,
    map: Vec<usize>,
}

impl Serialize for DecoderMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DecoderWire {
            inputs: self.inputs.iter().map(|a| a.symbols().to_vec()).collect(),
            output: self.output.symbols().to_vec(),
            map: self.map.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DecoderMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = DecoderWire::deserialize(d)?;
        let build = || -> Result<DecoderMap> {
            let inputs = w
                .inputs
                .into_iter()
                .enumerate()
                .map(|(i, s)| Alphabet::new(format!("I{i}"), s))
                .collect::<Result<Vec<_>>>()?;
            DecoderMap::new(inputs, Alphabet::new("O", w.output)?, w.map)
        };
        build().map_err(serde::de::Error::custom)
    }
}

/// Lossy source coding: source `X`, reproduction `Z`, distortion `d(X, Z)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LossySc {
    pub source: ProbVec,
    pub distortion: RealFunc,
    pub level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_channel: Option<CondKernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

/// Wyner-Ziv: source `X`, side information `Y ~ P_{Y|X}` at the decoder,
/// auxiliary `U ~ P_{U|X}`, reproduction `Z = z(U, Y)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WynerZiv {
    pub source: ProbVec,
    pub side_channel: CondKernel,
    pub aux: CondKernel,
    pub decoder: DecoderMap,
    pub distortion: RealFunc,
    pub level: f64,
    pub lambda: f64,
}

/// Wyner-Ziv with a hidden source `F`: the encoder sees `X`, the decoder
/// `Y`, and distortion is measured against `F`. `source` is the joint pmf
/// of `(F, X, Y)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndirectWz {
    pub source: RealFunc,
    pub aux: CondKernel,
    pub decoder: DecoderMap,
    pub distortion: RealFunc,
    pub level: f64,
    pub lambda: f64,
}

/// Indirect Wyner-Ziv with several distortion constraints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiDistortionWz {
    pub source: RealFunc,
    pub aux: CondKernel,
    pub decoder: DecoderMap,
    pub distortions: Vec<RealFunc>,
    pub levels: Vec<f64>,
    pub lambdas: Vec<f64>,
}

/// Heegard-Berger: decoder 1 has no side information and outputs
/// `z1(U1)`; decoder 2 sees `Y` and outputs `z2(U1, U2, Y)`. `aux` is the
/// kernel `P_{U1,U2|X}` on `X x U1 x U2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeegardBerger {
    pub source: ProbVec,
    pub side_channel: CondKernel,
    pub aux: RealFunc,
    pub decoder1: DecoderMap,
    pub decoder2: DecoderMap,
    pub distortion1: RealFunc,
    pub distortion2: RealFunc,
    pub levels: [f64; 2],
    pub lambdas: [f64; 2],
}

/// Point-to-point channel with an input cost constraint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelCost {
    pub channel: CondKernel,
    pub cost: RealFunc,
    pub budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<ProbVec>,
}

/// Gelfand-Pinsker: state `S` known at the encoder, auxiliary
/// `U ~ P_{U|S}`, input `X = x(S, U)`, channel `P_{Y|S,X}` on
/// `S x X x Y`, cost `d(S, X)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GelfandPinsker {
    pub state: ProbVec,
    pub aux: CondKernel,
    pub encoder: DecoderMap,
    pub channel: RealFunc,
    pub cost: RealFunc,
    pub budget: f64,
    pub lambda: f64,
}

/// A coding problem together with its first-order-optimal parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum CodingInstance {
    LossySC(LossySc),
    WynerZiv(WynerZiv),
    IndirectWZ(IndirectWz),
    MultiDistortionWZ(MultiDistortionWz),
    HeegardBerger(HeegardBerger),
    ChannelCost(ChannelCost),
    GelfandPinsker(GelfandPinsker),
}

/// Everything the second-order evaluators need, in one joint table.
///
/// `joint` is the law of all variables; `iota` the rate density whose mean
/// is the first-order rate; `observed` the variables seen by the encoder
/// (`X` or `S`); `controlled` adds the auxiliaries. `aux_kernel` is the
/// optimized kernel on `observed x aux`, the direction of first-order
/// stationarity.
#[derive(Clone, Debug)]
pub struct SideInfoModel {
    pub joint: RealFunc,
    pub iota: RealFunc,
    /// Encoder and decoder parts `iota(U;X)`, `iota(U;Y)` when the rate
    /// density is their difference.
    pub iota_parts: Option<(RealFunc, RealFunc)>,
    pub distortions: Vec<RealFunc>,
    pub lambdas: Vec<f64>,
    pub levels: Vec<f64>,
    pub observed: Vec<String>,
    pub controlled: Vec<String>,
    pub aux_kernel: RealFunc,
    pub aux_names: Vec<String>,
}

impl SideInfoModel {
    pub fn observed_refs(&self) -> Vec<&str> {
        self.observed.iter().map(String::as_str).collect()
    }

    pub fn controlled_refs(&self) -> Vec<&str> {
        self.controlled.iter().map(String::as_str).collect()
    }

    /// First-order rate `E iota`.
    pub fn rate(&self) -> Result<f64> {
        expectation(&self.joint, &self.iota)
    }

    /// `iota + sum_i lambda_i d_i`.
    pub fn lagrangian_density(&self) -> Result<RealFunc> {
        let mut g = self.iota.clone();
        for (d, &l) in self.distortions.iter().zip(&self.lambdas) {
            g = g.add(&d.scale(l))?;
        }
        Ok(g)
    }
}

fn rename_kernel(k: &CondKernel, from: &str, to: &str) -> CondKernel {
    k.renamed(from, to)
}

fn rename_all(f: &RealFunc, names: &[&str]) -> Result<RealFunc> {
    if f.domain().len() != names.len() {
        return Err(Error::Shape(format!("table has {} factors, expected {}", f.domain().len(), names.len())));
    }
    let domain = f.domain().iter().zip(names).map(|(a, n)| a.renamed(*n)).collect();
    RealFunc::new(domain, f.values().to_vec())
}

/// `d(a, z(inputs))` on `a x inputs`.
fn compose_distortion(d: &RealFunc, dec: &DecoderMap) -> Result<RealFunc> {
    let a = d.domain()[0].clone();
    if &d.domain()[1] != dec.output() {
        return Err(Error::Shape("decoder output does not match the distortion's reproduction alphabet".into()));
    }
    let mut dom = vec![a];
    dom.extend(dec.inputs().iter().cloned());
    RealFunc::from_fn(dom, |i| d.get(&[i[0], dec.apply(&i[1..])]))
}

fn check_conditional(f: &RealFunc, n_cond: usize) -> Result<()> {
    let row: usize = f.domain()[n_cond..].iter().map(Alphabet::size).product();
    for r in f.values().chunks(row) {
        let s: f64 = r.iter().sum();
        if (s - 1.0).abs() > crate::probkit::SUM_TOL || r.iter().any(|&v| v < 0.0) {
            return invalid("conditional table rows must be pmfs");
        }
    }
    Ok(())
}

fn check_joint(f: &RealFunc) -> Result<()> {
    if (f.sum() - 1.0).abs() > crate::probkit::SUM_TOL || f.values().iter().any(|&v| v < 0.0) {
        return invalid("joint table is not a pmf");
    }
    Ok(())
}

fn check_lambda(l: f64) -> Result<()> {
    if !(l >= 0.0) || !l.is_finite() {
        return Err(Error::Domain(format!("slope {l} must be finite and nonnegative")));
    }
    Ok(())
}

impl WynerZiv {
    pub(crate) fn normalized(&self) -> Result<WynerZiv> {
        check_lambda(self.lambda)?;
        let source = self.source.renamed("X");
        let side_channel = rename_kernel(&self.side_channel, "X", "Y");
        let aux = rename_kernel(&self.aux, "X", "U");
        let decoder = self.decoder.renamed(&["U", "Y"], "Z")?;
        let distortion = rename_all(&self.distortion, &["X", "Z"])?;
        for (a, b) in [
            (side_channel.from_alphabet(), source.alphabet()),
            (aux.from_alphabet(), source.alphabet()),
            (&decoder.inputs()[0], aux.to_alphabet()),
            (&decoder.inputs()[1], side_channel.to_alphabet()),
            (&distortion.domain()[0], source.alphabet()),
            (&distortion.domain()[1], decoder.output()),
        ] {
            if a != b {
                return Err(Error::Shape(format!("alphabet mismatch on {}", a.name())));
            }
        }
        Ok(WynerZiv { source, side_channel, aux, decoder, distortion, level: self.level, lambda: self.lambda })
    }

    /// Joint law on `X x U x Y`.
    pub fn joint(&self) -> Result<RealFunc> {
        self.source.as_func().semidirect(&self.aux.as_func())?.semidirect(&self.side_channel.as_func())
    }

    pub fn model(&self) -> Result<SideInfoModel> {
        let w = self.normalized()?;
        let joint = w.joint()?;
        let iu_x = info_density(&joint, &["U"], &["X"])?;
        let iu_y = info_density(&joint, &["U"], &["Y"])?;
        let iota = iu_x.sub(&iu_y)?;
        let d = compose_distortion(&w.distortion, &w.decoder)?;
        Ok(SideInfoModel {
            joint,
            iota,
            iota_parts: Some((iu_x, iu_y)),
            distortions: vec![d],
            lambdas: vec![w.lambda],
            levels: vec![w.level],
            observed: vec!["X".into()],
            controlled: vec!["X".into(), "U".into()],
            aux_kernel: w.aux.as_func(),
            aux_names: vec!["U".into()],
        })
    }
}

fn indirect_model(
    source: &RealFunc,
    aux: &CondKernel,
    decoder: &DecoderMap,
    distortions: &[RealFunc],
    levels: Vec<f64>,
    lambdas: Vec<f64>,
) -> Result<SideInfoModel> {
    for &l in &lambdas {
        check_lambda(l)?;
    }
    if distortions.len() != lambdas.len() || levels.len() != lambdas.len() || distortions.is_empty() {
        return Err(Error::Shape("distortions, levels and slopes must have equal nonzero length".into()));
    }
    let src = rename_all(source, &["F", "X", "Y"])?;
    check_joint(&src)?;
    let aux = rename_kernel(aux, "X", "U");
    let dec = decoder.renamed(&["U", "Y"], "Z")?;
    let joint = src.semidirect(&aux.as_func())?;
    let iu_x = info_density(&joint, &["U"], &["X"])?;
    let iu_y = info_density(&joint, &["U"], &["Y"])?;
    let iota = iu_x.sub(&iu_y)?;
    let ds = distortions
        .iter()
        .map(|d| compose_distortion(&rename_all(d, &["F", "Z"])?, &dec))
        .collect::<Result<Vec<_>>>()?;
    Ok(SideInfoModel {
        joint,
        iota,
        iota_parts: Some((iu_x, iu_y)),
        distortions: ds,
        lambdas,
        levels,
        observed: vec!["X".into()],
        controlled: vec!["X".into(), "U".into()],
        aux_kernel: aux.as_func(),
        aux_names: vec!["U".into()],
    })
}

impl HeegardBerger {
    pub fn model(&self) -> Result<SideInfoModel> {
        check_lambda(self.lambdas[0])?;
        check_lambda(self.lambdas[1])?;
        let source = self.source.renamed("X");
        let side = rename_kernel(&self.side_channel, "X", "Y");
        let aux = rename_all(&self.aux, &["X", "U1", "U2"])?;
        check_conditional(&aux, 1)?;
        let dec1 = self.decoder1.renamed(&["U1"], "Z1")?;
        let dec2 = self.decoder2.renamed(&["U1", "U2", "Y"], "Z2")?;
        let d1 = compose_distortion(&rename_all(&self.distortion1, &["X", "Z1"])?, &dec1)?;
        let d2 = compose_distortion(&rename_all(&self.distortion2, &["X", "Z2"])?, &dec2)?;
        let joint = source.as_func().semidirect(&aux)?.semidirect(&side.as_func())?;
        let a = info_density(&joint, &["U1"], &["X"])?;
        let b = cond_info_density(&joint, &["U2"], &["X"], &["U1", "Y"])?;
        let iota = a.add(&b)?;
        Ok(SideInfoModel {
            joint,
            iota,
            iota_parts: None,
            distortions: vec![d1, d2],
            lambdas: self.lambdas.to_vec(),
            levels: self.levels.to_vec(),
            observed: vec!["X".into()],
            controlled: vec!["X".into(), "U1".into(), "U2".into()],
            aux_kernel: aux,
            aux_names: vec!["U1".into(), "U2".into()],
        })
    }
}

impl GelfandPinsker {
    /// Channel seen through the auxiliary: `P(y | s, u) = P(y | s, x(s, u))`
    /// on `S x U x Y`, and the cost `d(s, x(s, u))` on `S x U`.
    pub fn effective(&self) -> Result<(ProbVec, CondKernel, RealFunc, RealFunc)> {
        check_lambda(self.lambda)?;
        let state = self.state.renamed("S");
        let aux = rename_kernel(&self.aux, "S", "U");
        let enc = self.encoder.renamed(&["S", "U"], "X")?;
        let chan = rename_all(&self.channel, &["S", "X", "Y"])?;
        check_conditional(&chan, 2)?;
        let cost = rename_all(&self.cost, &["S", "X"])?;
        if &chan.domain()[1] != enc.output() || &cost.domain()[1] != enc.output() {
            return Err(Error::Shape("encoder output does not match the channel input alphabet".into()));
        }
        let y = chan.domain()[2].clone();
        let su = vec![state.alphabet().clone(), aux.to_alphabet().clone()];
        let mut dom = su.clone();
        dom.push(y);
        let eff = RealFunc::from_fn(dom, |i| chan.get(&[i[0], enc.apply(&i[..2]), i[2]]))?;
        let c = RealFunc::from_fn(su, |i| cost.get(&[i[0], enc.apply(i)]))?;
        Ok((state, aux, eff, c))
    }

    pub fn model(&self) -> Result<SideInfoModel> {
        let (state, aux, eff, c) = self.effective()?;
        let joint = state.as_func().semidirect(&aux.as_func())?.semidirect(&eff)?;
        let iu_s = info_density(&joint, &["U"], &["S"])?;
        let iu_y = info_density(&joint, &["U"], &["Y"])?;
        Ok(SideInfoModel {
            iota: iu_s.sub(&iu_y)?,
            iota_parts: Some((iu_s, iu_y)),
            joint,
            distortions: vec![c],
            lambdas: vec![self.lambda],
            levels: vec![self.budget],
            observed: vec!["S".into()],
            controlled: vec!["S".into(), "U".into()],
            aux_kernel: aux.as_func(),
            aux_names: vec!["U".into()],
        })
    }
}

impl LossySc {
    /// Fills in the optimal test channel and slope when absent.
    pub fn solved(&self) -> Result<LossySc> {
        let source = self.source.renamed("X");
        let distortion = rename_all(&self.distortion, &["X", "Z"])?;
        let (test_channel, lambda) = match (&self.test_channel, self.lambda) {
            (Some(k), Some(l)) => (rename_kernel(k, "X", "Z"), l),
            _ => {
                // Above the zero-rate distortion the zero-rate solution is optimal.
                let nz = distortion.domain()[1].size();
                let zero_rate = (0..nz)
                    .map(|z| source.mass().iter().enumerate().map(|(x, p)| p * distortion.get(&[x, z])).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                let s = blahut_arimoto_rd(&source, &distortion, self.level.min(zero_rate))?;
                (s.test_channel.renamed("X", "Z"), s.lambda)
            }
        };
        check_lambda(lambda)?;
        Ok(LossySc { source, distortion, level: self.level, test_channel: Some(test_channel), lambda: Some(lambda) })
    }

    pub fn model(&self) -> Result<SideInfoModel> {
        let s = self.solved()?;
        let k = s.test_channel.expect("solved");
        let joint = s.source.as_func().semidirect(&k.as_func())?;
        let iota = info_density(&joint, &["Z"], &["X"])?;
        Ok(SideInfoModel {
            joint,
            iota,
            iota_parts: None,
            distortions: vec![s.distortion],
            lambdas: vec![s.lambda.expect("solved")],
            levels: vec![s.level],
            observed: vec!["X".into()],
            controlled: vec!["X".into(), "Z".into()],
            aux_kernel: k.as_func(),
            aux_names: vec!["Z".into()],
        })
    }
}

impl LossySc {
    /// The same problem as a Wyner-Ziv instance with constant side
    /// information and the auxiliary equal to the reproduction.
    pub fn as_wyner_ziv(&self) -> Result<WynerZiv> {
        let s = self.solved()?;
        let k = s.test_channel.expect("solved");
        let zs = k.to_alphabet().size();
        let x = s.source.alphabet().clone();
        let y = Alphabet::singleton("Y");
        let side_channel = CondKernel::new(x.clone(), y.clone(), vec![1.0; x.size()])?;
        let decoder = DecoderMap::new(vec![k.to_alphabet().renamed("U"), y], k.to_alphabet().clone(), (0..zs).collect())?;
        Ok(WynerZiv {
            source: s.source,
            side_channel,
            aux: k.renamed("X", "U"),
            decoder,
            distortion: s.distortion,
            level: s.level,
            lambda: s.lambda.expect("solved"),
        })
    }
}

/// Noisy (indirect) lossy source coding without side information: the
/// optimal test channel for the surrogate distortion `E[d(F, z) | X = x]`,
/// packaged as an indirect Wyner-Ziv instance with constant side
/// information and `U = Z`. `source` is the pmf of `(F, X)`.
pub fn noisy_lossy_instance(source: &RealFunc, distortion: &RealFunc, level: f64) -> Result<IndirectWz> {
    let src = rename_all(source, &["F", "X"])?;
    check_joint(&src)?;
    let d = rename_all(distortion, &["F", "Z"])?;
    if d.domain()[0] != src.domain()[0] {
        return Err(Error::Shape("distortion alphabet differs from the hidden source".into()));
    }
    let px = ProbVec::from_func(&src.marginal(&["X"])?)?;
    let (fa, xa, za) = (src.domain()[0].clone(), src.domain()[1].clone(), d.domain()[1].clone());
    let surrogate = RealFunc::from_fn(vec![xa.clone(), za.clone()], |i| {
        let m = px.mass()[i[0]];
        if m == 0.0 {
            return 0.0;
        }
        (0..fa.size()).map(|f| src.get(&[f, i[0]]) * d.get(&[f, i[1]])).sum::<f64>() / m
    })?;
    let sol = blahut_arimoto_rd(&px, &surrogate, level)?;
    let y = Alphabet::singleton("Y");
    let joint = RealFunc::from_fn(vec![fa, xa, y.clone()], |i| src.get(&[i[0], i[1]]))?;
    let decoder = DecoderMap::new(vec![za.renamed("U"), y], za.clone(), (0..za.size()).collect())?;
    Ok(IndirectWz {
        source: joint,
        aux: sol.test_channel.renamed("X", "U"),
        decoder,
        distortion: d,
        level,
        lambda: sol.lambda,
    })
}

impl ChannelCost {
    pub fn normalized(&self) -> Result<ChannelCost> {
        let channel = rename_kernel(&self.channel, "X", "Y");
        let cost = rename_all(&self.cost, &["X"])?;
        if &cost.domain()[0] != channel.from_alphabet() {
            return Err(Error::Shape("cost alphabet differs from the channel input".into()));
        }
        let input = self.input.as_ref().map(|p| p.renamed("X"));
        if let Some(p) = &input {
            if p.alphabet() != channel.from_alphabet() {
                return Err(Error::Shape("input pmf alphabet differs from the channel input".into()));
            }
        }
        Ok(ChannelCost { channel, cost, budget: self.budget, input })
    }
}

impl CodingInstance {
    pub fn from_json(s: &str) -> Result<Self> {
        let inst: CodingInstance = serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("instance JSON: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            CodingInstance::LossySC(_) => "LossySC",
            CodingInstance::WynerZiv(_) => "WynerZiv",
            CodingInstance::IndirectWZ(_) => "IndirectWZ",
            CodingInstance::MultiDistortionWZ(_) => "MultiDistortionWZ",
            CodingInstance::HeegardBerger(_) => "HeegardBerger",
            CodingInstance::ChannelCost(_) => "ChannelCost",
            CodingInstance::GelfandPinsker(_) => "GelfandPinsker",
        }
    }

    /// Shape and range checks (channel instances build no model).
    pub fn validate(&self) -> Result<()> {
        match self {
            CodingInstance::ChannelCost(c) => c.normalized().map(|_| ()),
            CodingInstance::LossySC(l) => {
                rename_all(&l.distortion, &["X", "Z"])?;
                Ok(())
            }
            other => other.model().map(|_| ()),
        }
    }

    /// The unified second-order model of a source-coding or
    /// Gelfand-Pinsker instance.
    pub fn model(&self) -> Result<SideInfoModel> {
        match self {
            CodingInstance::LossySC(l) => l.model(),
            CodingInstance::WynerZiv(w) => w.model(),
            CodingInstance::IndirectWZ(w) => indirect_model(
                &w.source,
                &w.aux,
                &w.decoder,
                std::slice::from_ref(&w.distortion),
                vec![w.level],
                vec![w.lambda],
            ),
            CodingInstance::MultiDistortionWZ(w) => {
                indirect_model(&w.source, &w.aux, &w.decoder, &w.distortions, w.levels.clone(), w.lambdas.clone())
            }
            CodingInstance::HeegardBerger(h) => h.model(),
            CodingInstance::GelfandPinsker(g) => g.model(),
            CodingInstance::ChannelCost(_) => {
                Err(Error::Unsupported("channel-cost instances have no side-information model".into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdsolver::wz_binary_family;

    #[test]
    fn binary_family_json_roundtrip() {
        let inst = CodingInstance::WynerZiv(wz_binary_family(0.2, 0.05, 0.8).unwrap().instance(2.0));
        let s = inst.to_json().unwrap();
        let back = CodingInstance::from_json(&s).unwrap();
        assert_eq!(back.to_json().unwrap(), s);
        let m = back.model().unwrap();
        let f = wz_binary_family(0.2, 0.05, 0.8).unwrap();
        assert!((m.rate().unwrap() - f.objective()).abs() < 1e-14);
        assert!((expectation(&m.joint, &m.distortions[0]).unwrap() - f.expected_distortion()).abs() < 1e-15);
    }

    #[test]
    fn malformed_instances_are_rejected() {
        assert!(CodingInstance::from_json("{\"variant\": \"Nope\"}").is_err());
        let inst = CodingInstance::WynerZiv(wz_binary_family(0.2, 0.05, 0.8).unwrap().instance(2.0));
        let mut v: serde_json::Value = serde_json::from_str(&inst.to_json().unwrap()).unwrap();
        v["aux"]["values"][0] = serde_json::json!(0.9);
        assert!(CodingInstance::from_json(&v.to_string()).is_err());
        v = serde_json::from_str(&inst.to_json().unwrap()).unwrap();
        v["lambda"] = serde_json::json!(-1.0);
        assert!(matches!(CodingInstance::from_json(&v.to_string()), Err(Error::Domain(_))));
    }
}

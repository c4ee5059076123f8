//! Channel evaluation: the optimal cloner, the single-clone output of a
//! port-based protocol, and entanglement fidelity by two routes.
//!
//! The discarded receiver ports of the maximally entangled resource are
//! traced out analytically, so a protocol channel never needs more than the
//! ports, the input, one receiver system and (for the Choi route) one
//! reference.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::{clone_mpbt_povm, mpbt_povm, std_pbt_povm, std_pbtc_povm, Povm};
use crate::states::{canonical_layout, input_label, pbt_signal, MaxEntangled, INPUT_LABEL};
use crate::symmetry::{port_label, sym_dim, symmetrizer_on, OrderedPorts, PortSet};
use crate::tensor::{dimension_cap, kron_compose, partial_trace, trace_against, LabeledOperator, SubsystemLayout, C64};

/// Receiver system that ends up holding the clone.
pub const OUTPUT_LABEL: &str = "B";
/// Reference half of the maximally entangled probe used by the Choi route.
pub const REFERENCE_LABEL: &str = "R";

/// Seed used for Haar sampling unless the caller supplies one.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "clone")]
    Clone,
    #[serde(rename = "clone-mpbt")]
    CloneMpbt,
    #[serde(rename = "mpbt")]
    Mpbt,
    #[serde(rename = "std-pbt")]
    StdPbt,
    #[serde(rename = "std-pbtc")]
    StdPbtc,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Clone,
        Protocol::CloneMpbt,
        Protocol::Mpbt,
        Protocol::StdPbt,
        Protocol::StdPbtc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Clone => "clone",
            Protocol::CloneMpbt => "clone-mpbt",
            Protocol::Mpbt => "mpbt",
            Protocol::StdPbt => "std-pbt",
            Protocol::StdPbtc => "std-pbtc",
        }
    }

    pub fn uses_ports(self) -> bool {
        self != Protocol::Clone
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Protocol::ALL.iter().map(|p| p.name()).collect();
            Error::InvalidArgument(format!("unknown protocol `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub protocol: Protocol,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "F")]
    pub entanglement_fidelity: f64,
    #[serde(rename = "f")]
    pub average_fidelity: f64,
    pub per_clone_f: Vec<f64>,
    /// Part of `F` contributed by the completion operator `Delta`.
    pub delta_contribution: f64,
    pub runtime_ms: f64,
}

/// Weight `gamma` of the input in each of `M` optimal clones made from `K`
/// copies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShrinkingFactor {
    pub gamma: f64,
}

impl ShrinkingFactor {
    pub fn new(k: usize, m: usize, d: usize) -> Result<Self> {
        if k == 0 || k > m {
            return Err(Error::InvalidArgument(format!("cannot clone {k} copies into {m}")));
        }
        let (k, m, d) = (k as f64, m as f64, d as f64);
        Ok(ShrinkingFactor {
            gamma: (k / m) * (m + d) / (k + d),
        })
    }

    /// Single-clone output for a pure input: `gamma psi + (1 - gamma) 1/d`.
    pub fn apply(&self, pure: &LabeledOperator) -> LabeledOperator {
        let mixed = LabeledOperator::maximally_mixed(pure.layout().clone());
        pure.scale(self.gamma)
            .add(&mixed.scale(1.0 - self.gamma))
            .expect("same layout")
    }
}

/// Average single-clone fidelity of the optimal `1 -> M` cloner.
pub fn optimal_clone_fidelity(d: usize, m: usize) -> f64 {
    (d + 2 * m - 1) as f64 / (m * (d + 1)) as f64
}

pub fn clone_label(k: usize) -> String {
    format!("C{k}")
}

/// Optimal `K -> M` cloner: `(d[K]/d[M]) Pi (input (x) 1) Pi` on `C1..CM`.
/// `K` is the number of subsystems of `input`, all of one dimension.
pub fn clone(input: &LabeledOperator, m: usize) -> Result<LabeledOperator> {
    let k = input.layout().len();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("cannot clone {k} copies into {m}")));
    }
    let d = input.layout().dims()[0];
    if input.layout().dims().iter().any(|&x| x != d) {
        return Err(Error::LayoutMismatch("cloner input must be K equal qudits".into()));
    }
    let labels: Vec<String> = (1..=m).map(clone_label).collect();
    let full = SubsystemLayout::uniform(labels.clone(), d)?;
    let renamed = LabeledOperator::new(
        SubsystemLayout::uniform(labels[..k].iter().cloned(), d)?,
        input.entries().to_vec(),
    )?;
    let slots: Vec<&str> = labels.iter().map(String::as_str).collect();
    let pi = symmetrizer_on(&slots, &full)?;
    let weight = sym_dim(d, k) as f64 / sym_dim(d, m) as f64;
    Ok(LabeledOperator::sandwich(&pi, &renamed.embed(&full)?, &pi)?.scale(weight))
}

/// Reduced state of clone `k` (1-based) from the output of [`clone`].
pub fn clone_marginal(cloned: &LabeledOperator, k: usize) -> Result<LabeledOperator> {
    let keep = clone_label(k);
    let drop: Vec<String> = cloned
        .layout()
        .labels()
        .iter()
        .filter(|l| **l != keep)
        .cloned()
        .collect();
    let drop: Vec<&str> = drop.iter().map(String::as_str).collect();
    partial_trace(cloned, &drop)
}

/// Entanglement fidelity of one clone of the optimal `1 -> M` cloner,
/// evaluated on the dense Choi state.
pub fn clone_entanglement_fidelity(d: usize, m: usize) -> Result<f64> {
    let mut labels = vec![REFERENCE_LABEL.to_string()];
    labels.extend((1..=m).map(clone_label));
    let full = SubsystemLayout::uniform(labels.clone(), d)?;
    let probe = MaxEntangled::new(d, REFERENCE_LABEL, clone_label(1));
    let slots: Vec<&str> = labels[1..].iter().map(String::as_str).collect();
    let pi = symmetrizer_on(&slots, &full)?;
    let choi =
        LabeledOperator::sandwich(&pi, &probe.operator()?.embed(&full)?, &pi)?.scale(d as f64 / sym_dim(d, m) as f64);
    let pair = partial_trace(&choi, &slots[1..])?;
    Ok(pair.expectation(&probe.ket())?.re)
}

/// Which port carries a given clone slot for an outcome.
pub trait PortOutcome: Clone + PartialEq + fmt::Display {
    fn port_for_slot(&self, slot: usize) -> Option<usize>;
}

impl PortOutcome for usize {
    fn port_for_slot(&self, slot: usize) -> Option<usize> {
        (slot == 1).then_some(*self)
    }
}

/// Clone `k` goes to the `k`-th smallest port of the set.
impl PortOutcome for PortSet {
    fn port_for_slot(&self, slot: usize) -> Option<usize> {
        self.kth(slot)
    }
}

impl PortOutcome for OrderedPorts {
    fn port_for_slot(&self, slot: usize) -> Option<usize> {
        slot.checked_sub(1).and_then(|i| self.elements().get(i).copied())
    }
}

fn port_count(layout: &SubsystemLayout) -> usize {
    layout.len() - 1
}

fn check_single_input<K>(povm: &Povm<K>) -> Result<(usize, usize)>
where
    K: PortOutcome,
{
    let layout = povm.layout();
    let n = port_count(layout);
    let d = layout.dim_of(INPUT_LABEL)?;
    if layout != &canonical_layout(n, d)? {
        return Err(Error::LayoutMismatch(format!(
            "expected a measurement on [X, A1..AN], got {layout}"
        )));
    }
    Ok((n, d))
}

fn slot_port<K: PortOutcome>(key: &K, slot: usize) -> Result<usize> {
    key.port_for_slot(slot)
        .ok_or_else(|| Error::InvalidArgument(format!("outcome {key} has no clone slot {slot}")))
}

/// State the receiver holds at port `b` after outcome `E`, for an `input`
/// on `X` plus any reference systems:
/// `Tr_{X A^N}[E (input (x) Phi+_{A_b B} (x) 1/d^{N-1})]`, summed over
/// outcomes. The result lives on the reference labels followed by `B`.
pub fn single_clone_output<K: PortOutcome>(
    povm: &Povm<K>,
    slot: usize,
    input: &LabeledOperator,
) -> Result<LabeledOperator> {
    let (n, d) = check_single_input(povm)?;
    if input.layout().dim_of(INPUT_LABEL)? != d {
        return Err(Error::LayoutMismatch(format!("input {} vs d = {d}", input.layout())));
    }
    let mut order: Vec<String> = input.layout().labels().to_vec();
    order.extend((1..=n).map(port_label));
    order.push(OUTPUT_LABEL.to_string());
    let order: Vec<&str> = order.iter().map(String::as_str).collect();

    let mut joint: BTreeMap<usize, LabeledOperator> = BTreeMap::new();
    let mut out: Option<LabeledOperator> = None;
    for (key, e) in povm.elements() {
        let b = slot_port(key, slot)?;
        if let Entry::Vacant(slot_entry) = joint.entry(b) {
            let pair = MaxEntangled::new(d, port_label(b), OUTPUT_LABEL).operator()?;
            let rest: Vec<String> = (1..=n).filter(|&p| p != b).map(port_label).collect();
            let g = if rest.is_empty() {
                kron_compose(&[input, &pair])?
            } else {
                let mixed = LabeledOperator::maximally_mixed(SubsystemLayout::uniform(rest, d)?);
                kron_compose(&[input, &pair, &mixed])?
            };
            slot_entry.insert(g.reorder(&order)?);
        }
        let term = trace_against(e, &joint[&b])?;
        out = Some(match out {
            Some(acc) => acc.add(&term)?,
            None => term,
        });
    }
    out.ok_or_else(|| Error::InvalidArgument("empty POVM".into()))
}

/// `F` split into the full value and the part due to `Delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityParts {
    pub total: f64,
    pub delta: f64,
}

/// `(1/d^2) sum_I Tr[E^I rho^{b(I)}]` with `b(I)` the port of `slot`.
/// `signals` maps a port to its PBT signal state on `[X, A1..AN]`.
pub fn entanglement_fidelity_formula<K: PortOutcome>(
    povm: &Povm<K>,
    slot: usize,
    signals: &BTreeMap<usize, LabeledOperator>,
) -> Result<FidelityParts> {
    let (_, d) = check_single_input(povm)?;
    let norm = 1.0 / (d * d) as f64;
    let mut total = 0.0;
    let mut delta = 0.0;
    for (key, e) in povm.elements() {
        let b = slot_port(key, slot)?;
        let rho = signals
            .get(&b)
            .ok_or_else(|| Error::MissingSignal(format!("{key} (port {b})")))?;
        total += e.trace_product(rho)?.re;
        if let Some(c) = povm.completion() {
            delta += c.delta.trace_product(rho)?.re;
        }
    }
    Ok(FidelityParts {
        total: norm * total,
        delta: norm * delta,
    })
}

/// PBT signals `rho^i` for every port.
pub fn pbt_signals(n: usize, d: usize) -> Result<BTreeMap<usize, LabeledOperator>> {
    (1..=n).map(|i| Ok((i, pbt_signal(i, n, d)?))).collect()
}

/// `<Phi+| (id (x) Lambda)(Phi+) |Phi+>` with `Lambda` the single-clone
/// channel of `slot`, built directly on `d^{N+3}` dimensions.
pub fn entanglement_fidelity_choi<K: PortOutcome>(povm: &Povm<K>, slot: usize) -> Result<f64> {
    entanglement_fidelity_choi_capped(povm, slot, dimension_cap())
}

/// [`entanglement_fidelity_choi`] with an explicit dimension cap.
pub fn entanglement_fidelity_choi_capped<K: PortOutcome>(povm: &Povm<K>, slot: usize, cap: usize) -> Result<f64> {
    let (n, d) = check_single_input(povm)?;
    let dim = (d as u128).pow(n as u32 + 3);
    if dim > cap as u128 {
        return Err(Error::DimensionCap {
            dim: usize::try_from(dim).unwrap_or(usize::MAX),
            cap,
            hint: "; use the formula route for this size",
        });
    }
    let probe = MaxEntangled::new(d, INPUT_LABEL, REFERENCE_LABEL).operator()?;
    let out = single_clone_output(povm, slot, &probe)?;
    let target = MaxEntangled::new(d, REFERENCE_LABEL, OUTPUT_LABEL);
    Ok(out.expectation(&target.ket())?.re)
}

/// `f = (F d + 1)/(d + 1)`.
pub fn avg_fidelity(f: f64, d: usize) -> Result<f64> {
    if !(-1e-10..=1.0 + 1e-10).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "entanglement fidelity {f} outside [0, 1]"
        )));
    }
    Ok((f * d as f64 + 1.0) / (d as f64 + 1.0))
}

/// A Haar-random pure state of dimension `d`.
pub fn haar_ket<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> = (0..d)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HaarEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Monte Carlo mean of `fidelity(psi)` over Haar-random inputs.
pub fn haar_average(
    d: usize,
    samples: usize,
    seed: u64,
    mut fidelity: impl FnMut(&[C64]) -> Result<f64>,
) -> Result<HaarEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let psi = haar_ket(d, &mut rng);
        values.push(fidelity(&psi)?);
    }
    let mean = values.iter().sum::<f64>() / samples as f64;
    let std_error = if samples > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        (var / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(HaarEstimate {
        mean,
        std_error,
        samples,
        seed,
    })
}

/// Haar estimate of the average fidelity of clone `slot`.
pub fn haar_average_check<K: PortOutcome>(
    povm: &Povm<K>,
    slot: usize,
    samples: usize,
    seed: u64,
) -> Result<HaarEstimate> {
    let (_, d) = check_single_input(povm)?;
    let layout = SubsystemLayout::uniform([INPUT_LABEL], d)?;
    haar_average(d, samples, seed, |psi| {
        let input = LabeledOperator::projector(layout.clone(), psi)?;
        Ok(single_clone_output(povm, slot, &input)?.expectation(psi)?.re)
    })
}

/// Overlap of clone `slot` of the optimal cloner with a pure input.
pub fn clone_fidelity_for(psi: &[C64], m: usize, slot: usize) -> Result<f64> {
    let d = psi.len();
    let input = LabeledOperator::projector(SubsystemLayout::uniform(["in"], d)?, psi)?;
    let marginal = clone_marginal(&clone(&input, m)?, slot)?;
    Ok(marginal.expectation(psi)?.re)
}

/// Per-slot signal of multi-port teleportation: `Phi+_{X_k A_j}` with every
/// other system maximally mixed.
fn mpbt_slot_signal(layout: &SubsystemLayout, k: usize, port: usize, d: usize) -> Result<LabeledOperator> {
    let (x, a) = (input_label(k), port_label(port));
    let pair = MaxEntangled::new(d, x.as_str(), a.as_str()).operator()?;
    let rest = layout.without(&[x.as_str(), a.as_str()])?;
    let labels: Vec<&str> = layout.labels().iter().map(String::as_str).collect();
    if rest.is_empty() {
        return pair.reorder(&labels);
    }
    kron_compose(&[&pair, &LabeledOperator::maximally_mixed(rest)])?.reorder(&labels)
}

/// Multi-port teleportation fidelities: the global `M`-qudit entanglement
/// fidelity `(1/d^{2M}) sum_J Tr[E^J rho^J]`, its `Delta` part, and the
/// per-slot entanglement fidelities.
pub fn mpbt_fidelities(povm: &Povm<OrderedPorts>, d: usize) -> Result<(FidelityParts, Vec<f64>)> {
    let layout = povm.layout().clone();
    let Some((first, _)) = povm.elements().first() else {
        return Err(Error::InvalidArgument("empty POVM".into()));
    };
    let m = first.m();
    let dm = (d as f64).powi(2 * m as i32);
    let mut total = 0.0;
    let mut delta = 0.0;
    for (j, e) in povm.elements() {
        let rho = crate::states::mpbt_signal(j, d)?;
        total += e.trace_product(&rho)?.re;
        if let Some(c) = povm.completion() {
            delta += c.delta.trace_product(&rho)?.re;
        }
    }
    let mut per_slot = Vec::with_capacity(m);
    let mut cache: BTreeMap<(usize, usize), LabeledOperator> = BTreeMap::new();
    for k in 1..=m {
        let mut acc = 0.0;
        for (j, e) in povm.elements() {
            let port = j.elements()[k - 1];
            let signal = match cache.entry((k, port)) {
                Entry::Occupied(o) => o.into_mut(),
                Entry::Vacant(v) => v.insert(mpbt_slot_signal(&layout, k, port, d)?),
            };
            acc += e.trace_product(signal)?.re;
        }
        per_slot.push(acc / (d * d) as f64);
    }
    Ok((
        FidelityParts {
            total: total / dm,
            delta: delta / dm,
        },
        per_slot,
    ))
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Per-slot average fidelities of a single-input protocol POVM.
fn per_slot_fidelities<K: PortOutcome>(
    povm: &Povm<K>,
    m: usize,
    d: usize,
    signals: &BTreeMap<usize, LabeledOperator>,
) -> Result<(FidelityParts, Vec<f64>)> {
    let first = entanglement_fidelity_formula(povm, 1, signals)?;
    let mut per = vec![avg_fidelity(first.total, d)?];
    for slot in 2..=m {
        per.push(avg_fidelity(
            entanglement_fidelity_formula(povm, slot, signals)?.total,
            d,
        )?);
    }
    Ok((first, per))
}

/// Evaluate one protocol at one parameter point.
///
/// `std-pbt` is always reported with `M = 1`; `clone` has no ports and is
/// reported with `N = 0`.
pub fn fidelity_report(protocol: Protocol, d: usize, n: usize, m: usize) -> Result<FidelityReport> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("local dimension {d} < 2")));
    }
    let start = Instant::now();
    let (n, m, parts, per, f) = match protocol {
        Protocol::Clone => {
            if m == 0 {
                return Err(Error::InvalidArgument("need at least one clone".into()));
            }
            let big_f = clone_entanglement_fidelity(d, m)?;
            let f = avg_fidelity(big_f, d)?;
            (
                0,
                m,
                FidelityParts {
                    total: big_f,
                    delta: 0.0,
                },
                vec![f; m],
                f,
            )
        }
        Protocol::StdPbt => {
            check_ports(n, 1)?;
            let povm = std_pbt_povm(n, d)?;
            let (parts, per) = per_slot_fidelities(&povm, 1, d, &pbt_signals(n, d)?)?;
            let f = per[0];
            (n, 1, parts, per, f)
        }
        Protocol::StdPbtc | Protocol::CloneMpbt => {
            check_ports(n, m)?;
            let povm = if protocol == Protocol::StdPbtc {
                std_pbtc_povm(n, m, d)?
            } else {
                clone_mpbt_povm(n, m, d)?
            };
            let (parts, per) = per_slot_fidelities(&povm, m, d, &pbt_signals(n, d)?)?;
            let f = per[0];
            (n, m, parts, per, f)
        }
        Protocol::Mpbt => {
            check_ports(n, m)?;
            let povm = mpbt_povm(n, m, d)?;
            let (parts, slot_f) = mpbt_fidelities(&povm, d)?;
            let per = slot_f
                .into_iter()
                .map(|x| avg_fidelity(x, d))
                .collect::<Result<Vec<_>>>()?;
            let dm = d.pow(m as u32) as f64;
            let f = (parts.total * dm + 1.0) / (dm + 1.0);
            (n, m, parts, per, f)
        }
    };
    Ok(FidelityReport {
        protocol,
        d,
        n,
        m,
        entanglement_fidelity: parts.total,
        average_fidelity: f,
        per_clone_f: per,
        delta_contribution: parts.delta,
        runtime_ms: ms_since(start),
    })
}

fn check_ports(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= M <= N, got N = {n}, M = {m}"
        )));
    }
    Ok(())
}

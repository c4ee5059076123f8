//! Signal and resource states for PBT, multi-port PBT and telecloning.
//!
//! Layouts are canonical: `[X, A1..AN]` for single-input protocols and
//! `[X1..XM, A1..AN]` for multi-port teleportation. The receiver system `B`
//! is identified with `X` by relabeling only.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::symmetry::{port_label, sym_dim, symmetric_projector, OrderedPorts, PortSet};
use crate::tensor::{hermitian_eig, kron_compose, LabeledOperator, SubsystemLayout, C64, PSD_REL_TOL};

/// Priors must sum to one to this accuracy.
pub const PRIOR_TOL: f64 = 1e-12;
/// Unit-trace tolerance for ensemble members.
pub const TRACE_TOL: f64 = 1e-10;

pub const INPUT_LABEL: &str = "X";

pub fn input_label(k: usize) -> String {
    format!("X{k}")
}

/// `[X, A1..AN]`.
pub fn canonical_layout(n: usize, d: usize) -> Result<SubsystemLayout> {
    let labels = std::iter::once(INPUT_LABEL.to_string()).chain((1..=n).map(port_label));
    SubsystemLayout::uniform(labels, d)
}

/// `[X1..XM, A1..AN]`.
pub fn mpbt_layout(n: usize, m: usize, d: usize) -> Result<SubsystemLayout> {
    let labels = (1..=m).map(input_label).chain((1..=n).map(port_label));
    SubsystemLayout::uniform(labels, d)
}

/// `|Phi+> = d^{-1/2} sum_i |ii>` on a pair of labeled qudits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxEntangled {
    pub d: usize,
    pub first: String,
    pub second: String,
}

impl MaxEntangled {
    pub fn new(d: usize, first: impl Into<String>, second: impl Into<String>) -> Self {
        MaxEntangled {
            d,
            first: first.into(),
            second: second.into(),
        }
    }

    pub fn layout(&self) -> Result<SubsystemLayout> {
        SubsystemLayout::uniform([self.first.as_str(), self.second.as_str()], self.d)
    }

    pub fn ket(&self) -> Vec<C64> {
        let d = self.d;
        let amp = 1.0 / (d as f64).sqrt();
        let mut ket = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            ket[i * d + i] = C64::new(amp, 0.0);
        }
        ket
    }

    pub fn operator(&self) -> Result<LabeledOperator> {
        LabeledOperator::projector(self.layout()?, &self.ket())
    }
}

fn check_port(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(Error::InvalidArgument(format!("port {i} outside 1..={n}")));
    }
    Ok(())
}

fn mixed_on(labels: Vec<String>, d: usize) -> Result<LabeledOperator> {
    Ok(LabeledOperator::maximally_mixed(SubsystemLayout::uniform(labels, d)?))
}

/// `rho^i = Phi+_{X A_i} (x) 1/d^{N-1}` on `[X, A1..AN]`.
pub fn pbt_signal(i: usize, n: usize, d: usize) -> Result<LabeledOperator> {
    check_port(i, n)?;
    let layout = canonical_layout(n, d)?;
    let phi = MaxEntangled::new(d, INPUT_LABEL, port_label(i)).operator()?;
    let rest = mixed_on((1..=n).filter(|&k| k != i).map(port_label).collect(), d)?;
    let labels: Vec<&str> = layout.labels().iter().map(String::as_str).collect();
    let op = if n == 1 { phi } else { kron_compose(&[&phi, &rest])? };
    op.reorder(&labels)
}

/// `rho^J = (x)_k Phi+_{X_k A_{j_k}} (x) 1/d^{N-M}` on `[X1..XM, A1..AN]`.
pub fn mpbt_signal(j: &OrderedPorts, d: usize) -> Result<LabeledOperator> {
    let (n, m) = (j.n(), j.m());
    let layout = mpbt_layout(n, m, d)?;
    let pairs: Vec<LabeledOperator> = j
        .elements()
        .iter()
        .enumerate()
        .map(|(k, &port)| MaxEntangled::new(d, input_label(k + 1), port_label(port)).operator())
        .collect::<Result<_>>()?;
    let mut factors: Vec<&LabeledOperator> = pairs.iter().collect();
    let rest_labels: Vec<String> = (1..=n).filter(|p| !j.elements().contains(p)).map(port_label).collect();
    let rest;
    if !rest_labels.is_empty() {
        rest = mixed_on(rest_labels, d)?;
        factors.push(&rest);
    }
    let labels: Vec<&str> = layout.labels().iter().map(String::as_str).collect();
    kron_compose(&factors)?.reorder(&labels)
}

/// `eta^I = (d^M / d[M]) Pi_I rho^{min I} Pi_I`.
pub fn pbtc_signal(set: &PortSet, d: usize) -> Result<LabeledOperator> {
    pbtc_signal_from(set, set.first(), d)
}

/// As [`pbtc_signal`] but symmetrizing `rho^rep` for a chosen `rep` in `I`.
pub fn pbtc_signal_from(set: &PortSet, rep: usize, d: usize) -> Result<LabeledOperator> {
    if !set.contains(rep) {
        return Err(Error::InvalidArgument(format!("representative {rep} not in {set}")));
    }
    let rho = pbt_signal(rep, set.n(), d)?;
    if set.m() == 1 {
        return Ok(rho);
    }
    let pi = symmetric_projector(set, rho.layout())?;
    let weight = (d as f64).powi(set.m() as i32) / sym_dim(d, set.m()) as f64;
    Ok(LabeledOperator::sandwich(&pi, &rho, &pi)?.scale(weight))
}

/// A finite ensemble `{(key, p, sigma)}` of states on one layout.
#[derive(Clone, Debug)]
pub struct Ensemble<K> {
    items: Vec<(K, f64, LabeledOperator)>,
}

impl<K: Clone> Ensemble<K> {
    /// Checks priors, a shared layout, unit trace and Hermiticity.
    /// Positivity needs an eigendecomposition per state, so it is left to
    /// [`Ensemble::check_positive`].
    pub fn new(items: Vec<(K, f64, LabeledOperator)>) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::DegenerateEnsemble("no states".into()));
        };
        let layout = first.2.layout().clone();
        let mut total = 0.0;
        for (_, p, state) in &items {
            if p.is_nan() || *p < 0.0 {
                return Err(Error::InvalidArgument(format!("prior {p} is negative")));
            }
            total += p;
            if state.layout() != &layout {
                return Err(Error::LayoutMismatch(format!(
                    "ensemble states on {} and {}",
                    layout,
                    state.layout()
                )));
            }
            let tr = state.trace();
            if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
                return Err(Error::InvalidArgument(format!("state has trace {tr}")));
            }
            if !state.is_hermitian(crate::tensor::HERMITIAN_REL_TOL) {
                return Err(Error::NotHermitian {
                    deviation: state.hermiticity_deviation(),
                });
            }
        }
        if (total - 1.0).abs() > PRIOR_TOL {
            return Err(Error::InvalidArgument(format!("priors sum to {total}")));
        }
        Ok(Ensemble { items })
    }

    pub fn uniform(states: Vec<(K, LabeledOperator)>) -> Result<Self> {
        let p = 1.0 / states.len().max(1) as f64;
        Self::new(states.into_iter().map(|(k, s)| (k, p, s)).collect())
    }

    pub fn check_positive(&self) -> Result<()> {
        for (_, _, state) in &self.items {
            let spec = hermitian_eig(state)?;
            if spec.min_eigenvalue() < -PSD_REL_TOL * spec.max_eigenvalue().abs() {
                return Err(Error::NotPositive {
                    eigenvalue: spec.min_eigenvalue(),
                });
            }
        }
        Ok(())
    }

    pub fn items(&self) -> &[(K, f64, LabeledOperator)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn layout(&self) -> &SubsystemLayout {
        self.items[0].2.layout()
    }
}

/// `sum_i p_i sigma^i`.
pub fn ensemble_average<K: Clone>(e: &Ensemble<K>) -> LabeledOperator {
    let mut acc = LabeledOperator::zeros(e.layout().clone());
    for (_, p, state) in e.items() {
        acc = acc.add(&state.scale(*p)).expect("ensemble layouts agree");
    }
    acc
}

/// Uniform ensemble of `rho^i` over all N ports.
pub fn pbt_ensemble(n: usize, d: usize) -> Result<Ensemble<usize>> {
    Ensemble::uniform((1..=n).map(|i| Ok((i, pbt_signal(i, n, d)?))).collect::<Result<_>>()?)
}

/// Uniform ensemble of `eta^I` over all M-subsets, lexicographic.
pub fn pbtc_ensemble(n: usize, m: usize, d: usize) -> Result<Ensemble<PortSet>> {
    pbtc_ensemble_cached(n, m, d, &SignalCache::new())
}

pub fn pbtc_ensemble_cached(n: usize, m: usize, d: usize, cache: &SignalCache) -> Result<Ensemble<PortSet>> {
    let sets = crate::symmetry::enumerate_unordered(n, m)?;
    let states = sets
        .into_iter()
        .map(|s| {
            let key = SignalKey::pbtc(d, &s);
            let op = cache.get_or_build(key, || pbtc_signal(&s, d))?;
            Ok((s, (*op).clone()))
        })
        .collect::<Result<_>>()?;
    Ensemble::uniform(states)
}

/// Uniform ensemble of `rho^J` over all ordered M-tuples.
pub fn mpbt_ensemble(n: usize, m: usize, d: usize) -> Result<Ensemble<OrderedPorts>> {
    let tuples = crate::symmetry::enumerate_ordered(n, m)?;
    Ensemble::uniform(
        tuples
            .into_iter()
            .map(|j| {
                let s = mpbt_signal(&j, d)?;
                Ok((j, s))
            })
            .collect::<Result<_>>()?,
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignalKey {
    pub kind: &'static str,
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub index: Vec<usize>,
}

impl SignalKey {
    pub fn pbtc(d: usize, set: &PortSet) -> Self {
        SignalKey {
            kind: "pbtc",
            d,
            n: set.n(),
            m: set.m(),
            index: set.elements().to_vec(),
        }
    }
}

/// Write-once store of built signal states. The first value stored under a
/// key wins; later builds for the same key are discarded.
#[derive(Default)]
pub struct SignalCache<K = SignalKey> {
    map: RwLock<HashMap<K, Arc<LabeledOperator>>>,
}

impl<K: Eq + Hash + Clone> SignalCache<K> {
    pub fn new() -> Self {
        SignalCache {
            map: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, key: &K) -> Option<Arc<LabeledOperator>> {
        self.map.read().expect("cache lock").get(key).cloned()
    }

    pub fn get_or_build(
        &self,
        key: K,
        build: impl FnOnce() -> Result<LabeledOperator>,
    ) -> Result<Arc<LabeledOperator>> {
        if let Some(hit) = self.get(&key) {
            return Ok(hit);
        }
        let built = Arc::new(build()?);
        let mut map = self.map.write().expect("cache lock");
        Ok(map.entry(key).or_insert(built).clone())
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

//! Pretty good measurements, support completion, and the POVM obtained by
//! pulling a multi-port measurement back through the optimal cloner.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::states::{
    ensemble_average, input_label, mpbt_ensemble, pbt_ensemble, pbtc_ensemble_cached, Ensemble, SignalCache,
    INPUT_LABEL,
};
use crate::symmetry::{sym_dim, symmetrizer_on, OrderedPorts, PortSet};
use crate::tensor::{hermitian_eig, partial_trace, psd_inv_sqrt, LabeledOperator, SubsystemLayout, PINV_REL_TOL};

/// Largest eigenvalue of `sum E` tolerated above one before completion.
pub const OVERCOMPLETE_TOL: f64 = 1e-8;
/// Completeness and elementwise positivity tolerance for finished POVMs.
pub const POVM_TOL: f64 = 1e-9;

/// The operator `Delta` spread over every outcome by [`complete`].
#[derive(Clone, Debug)]
pub struct Completion {
    pub delta: LabeledOperator,
    pub outcome_count: usize,
}

/// Outcome-keyed measurement operators on one layout. When a completion is
/// recorded, the stored elements already include its `Delta`.
#[derive(Clone, Debug)]
pub struct Povm<K> {
    layout: SubsystemLayout,
    elements: Vec<(K, LabeledOperator)>,
    completion: Option<Completion>,
}

impl<K: Clone + PartialEq> Povm<K> {
    pub fn new(elements: Vec<(K, LabeledOperator)>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidArgument("a POVM needs at least one outcome".into()));
        };
        let layout = first.1.layout().clone();
        if let Some((_, bad)) = elements.iter().find(|(_, e)| e.layout() != &layout) {
            return Err(Error::LayoutMismatch(format!(
                "POVM elements on {layout} and {}",
                bad.layout()
            )));
        }
        Ok(Povm {
            layout,
            elements,
            completion: None,
        })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn elements(&self) -> &[(K, LabeledOperator)] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn completion(&self) -> Option<&Completion> {
        self.completion.as_ref()
    }

    pub fn element(&self, key: &K) -> Option<&LabeledOperator> {
        self.elements.iter().find(|(k, _)| k == key).map(|(_, e)| e)
    }

    /// The element as it was before `Delta` was added.
    pub fn pre_completion_element(&self, index: usize) -> LabeledOperator {
        let e = &self.elements[index].1;
        match &self.completion {
            Some(c) => e.sub(&c.delta).expect("delta shares the POVM layout"),
            None => e.clone(),
        }
    }

    pub fn sum(&self) -> LabeledOperator {
        let mut acc = LabeledOperator::zeros(self.layout.clone());
        for (_, e) in &self.elements {
            acc = acc.add(e).expect("elements share the POVM layout");
        }
        acc
    }

    /// `max |sum E - 1|`.
    pub fn completeness_deviation(&self) -> f64 {
        self.sum()
            .max_abs_diff(&LabeledOperator::identity(self.layout.clone()))
            .expect("same layout")
    }

    /// Most negative eigenvalue over all elements, relative to the largest
    /// eigenvalue of the sum. Zero or positive means every element is PSD.
    pub fn min_relative_eigenvalue(&self) -> Result<f64> {
        let scale = hermitian_eig(&self.sum())?.max_eigenvalue().max(f64::MIN_POSITIVE);
        let mut worst = f64::INFINITY;
        for (_, e) in &self.elements {
            worst = worst.min(hermitian_eig(e)?.min_eigenvalue() / scale);
        }
        Ok(worst)
    }

    /// Copy with element `index` multiplied by `factor`. Used to check that
    /// the verification suite can fail.
    pub fn with_scaled_element(&self, index: usize, factor: f64) -> Result<Self> {
        if index >= self.elements.len() {
            return Err(Error::InvalidArgument(format!(
                "element {index} of a {}-outcome POVM",
                self.elements.len()
            )));
        }
        let mut out = self.clone();
        out.elements[index].1 = out.elements[index].1.scale(factor);
        Ok(out)
    }

    pub fn map_keys<K2: Clone + PartialEq>(self, f: impl Fn(K) -> K2) -> Povm<K2> {
        Povm {
            layout: self.layout,
            elements: self.elements.into_iter().map(|(k, e)| (f(k), e)).collect(),
            completion: self.completion,
        }
    }
}

impl<K: Clone + PartialEq + Serialize> Povm<K> {
    /// Outcome keys, matrix sizes and row-major `[re, im]` entries.
    pub fn to_json(&self) -> Value {
        let n = self.layout.dim();
        let matrix = |op: &LabeledOperator| -> Value { op.entries().iter().map(|z| json!([z.re, z.im])).collect() };
        let elements: Vec<Value> = self
            .elements
            .iter()
            .map(|(k, e)| json!({ "outcome": k, "rows": n, "cols": n, "entries": matrix(e) }))
            .collect();
        json!({
            "labels": self.layout.labels(),
            "dims": self.layout.dims(),
            "completion": self.completion.as_ref().map(|c| json!({
                "outcome_count": c.outcome_count,
                "delta": matrix(&c.delta),
            })),
            "elements": elements,
        })
    }
}

/// `E^i = avg^{-1/2} p_i sigma^i avg^{-1/2}`, uncompleted.
pub fn pgm<K: Clone + PartialEq>(e: &Ensemble<K>) -> Result<Povm<K>> {
    let avg = ensemble_average(e);
    if avg.max_abs() == 0.0 {
        return Err(Error::DegenerateEnsemble("average state is zero".into()));
    }
    let b = psd_inv_sqrt(&avg, PINV_REL_TOL)?;
    let elements = e
        .items()
        .iter()
        .map(|(k, p, s)| Ok((k.clone(), LabeledOperator::sandwich(&b, s, &b)?.scale(*p))))
        .collect::<Result<_>>()?;
    Povm::new(elements)
}

/// Adds `Delta = (1 - sum E)/|outcomes|` to every element.
pub fn complete<K: Clone + PartialEq>(p: Povm<K>) -> Result<Povm<K>> {
    let sum = p.sum();
    let top = hermitian_eig(&sum)?.max_eigenvalue();
    if top > 1.0 + OVERCOMPLETE_TOL {
        return Err(Error::OverComplete { excess: top - 1.0 });
    }
    let count = p.len();
    let delta = LabeledOperator::identity(p.layout.clone())
        .sub(&sum)?
        .scale(1.0 / count as f64);
    let elements = p
        .elements
        .into_iter()
        .map(|(k, e)| Ok((k, e.add(&delta)?)))
        .collect::<Result<_>>()?;
    let delta = match p.completion {
        Some(prev) => prev.delta.add(&delta)?,
        None => delta,
    };
    Ok(Povm {
        layout: p.layout,
        elements,
        completion: Some(Completion {
            delta,
            outcome_count: count,
        }),
    })
}

/// Completed PGM for the port-based teleportation signals.
pub fn std_pbt_povm(n: usize, d: usize) -> Result<Povm<usize>> {
    complete(pgm(&pbt_ensemble(n, d)?)?)
}

/// Completed PGM for the telecloning signals `eta^I`, keyed by port set.
pub fn std_pbtc_povm(n: usize, m: usize, d: usize) -> Result<Povm<PortSet>> {
    std_pbtc_povm_cached(n, m, d, &SignalCache::new())
}

pub fn std_pbtc_povm_cached(n: usize, m: usize, d: usize, cache: &SignalCache) -> Result<Povm<PortSet>> {
    complete(pgm(&pbtc_ensemble_cached(n, m, d, cache)?)?)
}

/// Uncompleted multi-port PGM over ordered port tuples.
pub fn mpbt_pgm(n: usize, m: usize, d: usize) -> Result<Povm<OrderedPorts>> {
    pgm(&mpbt_ensemble(n, m, d)?)
}

pub fn mpbt_povm(n: usize, m: usize, d: usize) -> Result<Povm<OrderedPorts>> {
    complete(mpbt_pgm(n, m, d)?)
}

/// Heisenberg-picture optimal cloner from `k` to `slots.len()` copies:
/// `(d[K]/d[M]) Tr_{last M-K slots}[Pi Y Pi]`, `Pi` symmetric on `slots`.
/// The result lives on the remaining labels of `y`, which keep the first
/// `k` slot names.
pub fn adjoint_clone(y: &LabeledOperator, slots: &[&str], k: usize) -> Result<LabeledOperator> {
    let m = slots.len();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("cannot clone {k} copies into {m}")));
    }
    let d = y.layout().dim_of(slots[0])?;
    let pi = symmetrizer_on(slots, y.layout())?;
    let sym = LabeledOperator::sandwich(&pi, y, &pi)?;
    let weight = sym_dim(d, k) as f64 / sym_dim(d, m) as f64;
    Ok(partial_trace(&sym, &slots[k..])?.scale(weight))
}

/// MPBT elements pulled back through the `1 -> M` cloner and merged over
/// orderings of the same port set. Not completed.
pub fn clone_mpbt_pullback(n: usize, m: usize, d: usize) -> Result<Povm<PortSet>> {
    let mpbt = mpbt_pgm(n, m, d)?;
    let inputs: Vec<String> = (1..=m).map(input_label).collect();
    let slots: Vec<&str> = inputs.iter().map(String::as_str).collect();
    let mut merged: Vec<(PortSet, LabeledOperator)> = Vec::new();
    for (j, e) in mpbt.elements() {
        let pulled = adjoint_clone(e, &slots, 1)?.relabel(&inputs[0], INPUT_LABEL)?;
        let key = j.to_set();
        match merged.iter_mut().find(|(s, _)| *s == key) {
            Some((_, acc)) => *acc = acc.add(&pulled)?,
            None => merged.push((key, pulled)),
        }
    }
    merged.sort_by(|a, b| a.0.cmp(&b.0));
    Povm::new(merged)
}

/// Clone-then-teleport baseline as a single POVM over port sets.
pub fn clone_mpbt_povm(n: usize, m: usize, d: usize) -> Result<Povm<PortSet>> {
    complete(clone_mpbt_pullback(n, m, d)?)
}

//! Dense complex operators over labeled multi-qudit Hilbert spaces.
//!
//! A [`SubsystemLayout`] fixes an ordered list of named subsystems; the first
//! label is the most significant digit of the row-major tensor index. Every
//! operator in the crate carries its layout, and all structural operations
//! (tensor products, partial traces, reordering, embedding) are expressed in
//! terms of labels rather than raw positions.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Default upper bound on the total dimension of any layout.
pub const DEFAULT_DIM_CAP: usize = 8192;

/// Relative eigenvalue threshold below which a PSD operator is treated as
/// singular (pseudo-inverses, supports, ranks).
pub const PINV_REL_TOL: f64 = 1e-10;

static DIM_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DIM_CAP);

/// The process-wide dimension cap applied when layouts are constructed.
pub fn dimension_cap() -> usize {
    DIM_CAP.load(Ordering::Relaxed)
}

pub fn set_dimension_cap(cap: usize) {
    DIM_CAP.store(cap.max(1), Ordering::Relaxed);
}

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsystemLayout {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        dims: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let dims: Vec<usize> = dims.into_iter().collect();
        if labels.len() != dims.len() {
            return Err(Error::InvalidLayout(format!(
                "{} labels but {} dimensions",
                labels.len(),
                dims.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidLayout(format!("local dimension {d} < 2")));
        }
        let mut total: usize = 1;
        for &d in &dims {
            total = total.saturating_mul(d);
        }
        let cap = dimension_cap();
        if total > cap {
            return Err(Error::DimensionCap {
                dim: total,
                cap,
                hint: "",
            });
        }
        Ok(SubsystemLayout { labels, dims })
    }

    /// All subsystems share local dimension `d`.
    pub fn uniform<S: Into<String>>(labels: impl IntoIterator<Item = S>, d: usize) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        Self::new(labels, std::iter::repeat_n(d, n))
    }

    /// The trivial layout of a scalar.
    pub fn scalar() -> Self {
        SubsystemLayout {
            labels: Vec::new(),
            dims: Vec::new(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    fn require(&self, label: &str) -> Result<usize> {
        self.position(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.require(label)?])
    }

    pub fn concat(&self, other: &SubsystemLayout) -> Result<SubsystemLayout> {
        Self::new(
            self.labels.iter().chain(&other.labels).cloned(),
            self.dims.iter().chain(&other.dims).copied(),
        )
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<SubsystemLayout> {
        let pos = self.require(from)?;
        let mut labels = self.labels.clone();
        labels[pos] = to.to_string();
        Self::new(labels, self.dims.clone())
    }

    /// Sub-layout made of the given labels, in the given order.
    pub fn select(&self, labels: &[&str]) -> Result<SubsystemLayout> {
        let mut dims = Vec::with_capacity(labels.len());
        for l in labels {
            dims.push(self.dim_of(l)?);
        }
        Self::new(labels.iter().copied(), dims)
    }

    /// Layout of the labels not in `labels`, original relative order kept.
    pub fn without(&self, labels: &[&str]) -> Result<SubsystemLayout> {
        for l in labels {
            self.require(l)?;
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| !labels.contains(&self.labels[i].as_str()))
            .collect();
        Self::new(
            keep.iter().map(|&i| self.labels[i].clone()),
            keep.iter().map(|&i| self.dims[i]),
        )
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for i in (0..self.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }

    /// For every multi-index over the subsystems at `positions` (enumerated
    /// row-major in the given order), its contribution to the flat index of
    /// this layout.
    pub(crate) fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &p in positions {
            let (d, s) = (self.dims[p], strides[p]);
            let mut next = Vec::with_capacity(out.len() * d);
            for &base in &out {
                for k in 0..d {
                    next.push(base + k * s);
                }
            }
            out = next;
        }
        out
    }

    pub(crate) fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.require(l)).collect()
    }

    /// Digits of a flat index, one per subsystem.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for i in (0..self.len()).rev() {
            out[i] = index % self.dims[i];
            index /= self.dims[i];
        }
        out
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&k, &d)| acc * d + k)
    }
}

impl fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (l, d)) in self.labels.iter().zip(&self.dims).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}:{d}")?;
        }
        write!(f, "]")
    }
}

/// A dense square operator on a labeled layout, stored row-major.
///
/// Values are immutable once built; every operation returns a new operator.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    layout: SubsystemLayout,
    entries: Vec<C64>,
}

impl LabeledOperator {
    pub fn new(layout: SubsystemLayout, entries: Vec<C64>) -> Result<Self> {
        let n = layout.dim();
        if entries.len() != n * n {
            return Err(Error::LayoutMismatch(format!(
                "{} entries for a {n}x{n} operator on {layout}",
                entries.len()
            )));
        }
        Ok(LabeledOperator { layout, entries })
    }

    pub fn from_fn(layout: SubsystemLayout, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let n = layout.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        LabeledOperator { layout, entries }
    }

    pub fn from_real(layout: SubsystemLayout, entries: &[f64]) -> Result<Self> {
        Self::new(layout, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(layout: SubsystemLayout) -> Self {
        let n = layout.dim();
        LabeledOperator {
            layout,
            entries: vec![ZERO; n * n],
        }
    }

    pub fn identity(layout: SubsystemLayout) -> Self {
        Self::from_fn(layout, |i, j| if i == j { ONE } else { ZERO })
    }

    /// `1 / dim` on the whole layout.
    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let w = 1.0 / layout.dim() as f64;
        Self::from_fn(layout, |i, j| if i == j { C64::new(w, 0.0) } else { ZERO })
    }

    /// `|psi><psi|` for an (unnormalized) ket.
    pub fn projector(layout: SubsystemLayout, ket: &[C64]) -> Result<Self> {
        if ket.len() != layout.dim() {
            return Err(Error::LayoutMismatch(format!(
                "ket of length {} on {layout}",
                ket.len()
            )));
        }
        Ok(Self::from_fn(layout, |i, j| ket[i] * ket[j].conj()))
    }

    /// `|digits><digits|` for a computational basis state.
    pub fn basis_projector(layout: SubsystemLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() || digits.iter().zip(layout.dims()).any(|(&k, &d)| k >= d) {
            return Err(Error::InvalidArgument(format!(
                "basis digits {digits:?} do not fit {layout}"
            )));
        }
        let k = layout.flat_index(digits);
        Ok(Self::from_fn(layout, |i, j| if i == k && j == k { ONE } else { ZERO }))
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim() + j]
    }

    pub fn trace(&self) -> C64 {
        let n = self.dim();
        (0..n).map(|i| self.entries[i * n + i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        Self::from_fn(self.layout.clone(), |i, j| self.entries[j * n + i].conj())
    }

    /// `max |H - H^dagger|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.entries[i * n + j] - self.entries[j * n + i].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_deviation() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    fn check_same_layout(&self, other: &Self, what: &str) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(format!(
                "{what}: {} vs {}",
                self.layout, other.layout
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_layout(other, "matmul")?;
        let n = self.dim();
        Ok(LabeledOperator {
            layout: self.layout.clone(),
            entries: linalg::matmul(&self.entries, &other.entries, n, n, n),
        })
    }

    /// `self * mid * self^dagger`-style sandwich `a * mid * b`.
    pub fn sandwich(a: &Self, mid: &Self, b: &Self) -> Result<Self> {
        a.matmul(mid)?.matmul(b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_layout(other, "add")?;
        Ok(self.zip_with(other, |x, y| x + y))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_layout(other, "sub")?;
        Ok(self.zip_with(other, |x, y| x - y))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        LabeledOperator {
            layout: self.layout.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_complex(C64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        LabeledOperator {
            layout: self.layout.clone(),
            entries: self.entries.iter().map(|&x| x * s).collect(),
        }
    }

    /// `max |self - other|` over entries.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_layout(other, "comparison")?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max))
    }

    /// `Tr[self * other]` in O(n^2).
    pub fn trace_product(&self, other: &Self) -> Result<C64> {
        self.check_same_layout(other, "trace product")?;
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.entries[i * n + j] * other.entries[j * n + i];
            }
        }
        Ok(acc)
    }

    /// `<psi| self |psi>`.
    pub fn expectation(&self, ket: &[C64]) -> Result<C64> {
        let n = self.dim();
        if ket.len() != n {
            return Err(Error::LayoutMismatch(format!(
                "ket of length {} on {}",
                ket.len(),
                self.layout
            )));
        }
        let mut acc = ZERO;
        for (i, bra) in ket.iter().enumerate() {
            let row: C64 = self.entries[i * n..(i + 1) * n]
                .iter()
                .zip(ket)
                .map(|(a, b)| a * b)
                .sum();
            acc += bra.conj() * row;
        }
        Ok(acc)
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<Self> {
        Ok(LabeledOperator {
            layout: self.layout.relabel(from, to)?,
            entries: self.entries.clone(),
        })
    }

    /// Same operator with its subsystems listed in `order`.
    pub fn reorder(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.layout.len() {
            return Err(Error::LayoutMismatch(format!(
                "reorder to {order:?} from {}",
                self.layout
            )));
        }
        let positions = self.layout.positions(order)?;
        let new_layout = self.layout.select(order)?;
        let offs = self.layout.offsets(&positions);
        let n = self.dim();
        let mut entries = Vec::with_capacity(n * n);
        for &r in &offs {
            let row = &self.entries[r * n..(r + 1) * n];
            entries.extend(offs.iter().map(|&c| row[c]));
        }
        Ok(LabeledOperator {
            layout: new_layout,
            entries,
        })
    }

    /// `self (x) identity` on `full`, whose labels must include this
    /// operator's labels with matching dimensions.
    pub fn embed(&self, full: &SubsystemLayout) -> Result<Self> {
        let own: Vec<&str> = self.layout.labels().iter().map(String::as_str).collect();
        let pos = full.positions(&own)?;
        for (p, &d) in pos.iter().zip(self.layout.dims()) {
            if full.dims()[*p] != d {
                return Err(Error::LayoutMismatch(format!(
                    "subsystem `{}` has dimension {d}, target has {}",
                    full.labels()[*p],
                    full.dims()[*p]
                )));
            }
        }
        let rest: Vec<usize> = (0..full.len()).filter(|i| !pos.contains(i)).collect();
        let (off_s, off_r) = (full.offsets(&pos), full.offsets(&rest));
        let n = full.dim();
        let m = self.dim();
        let mut entries = vec![ZERO; n * n];
        for &r in &off_r {
            for (s, &os) in off_s.iter().enumerate() {
                let row = (os + r) * n;
                for (t, &ot) in off_s.iter().enumerate() {
                    entries[row + ot + r] = self.entries[s * m + t];
                }
            }
        }
        Ok(LabeledOperator {
            layout: full.clone(),
            entries,
        })
    }
}

/// Tensor product in input order.
pub fn kron_compose(ops: &[&LabeledOperator]) -> Result<LabeledOperator> {
    let mut acc = LabeledOperator {
        layout: SubsystemLayout::scalar(),
        entries: vec![ONE],
    };
    for op in ops {
        for l in op.layout.labels() {
            if acc.layout.contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        let layout = acc.layout.concat(&op.layout)?;
        let (na, nb) = (acc.dim(), op.dim());
        let n = na * nb;
        let mut entries = vec![ZERO; n * n];
        for i in 0..na {
            for j in 0..na {
                let a = acc.entries[i * na + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..nb {
                    let row = (i * nb + k) * n + j * nb;
                    for l in 0..nb {
                        entries[row + l] = a * op.entries[k * nb + l];
                    }
                }
            }
        }
        acc = LabeledOperator { layout, entries };
    }
    Ok(acc)
}

/// Trace out the subsystems in `drop`; the rest keep their relative order.
pub fn partial_trace(op: &LabeledOperator, drop: &[&str]) -> Result<LabeledOperator> {
    let layout = op.layout();
    let dpos = layout.positions(drop)?;
    let keep: Vec<usize> = (0..layout.len()).filter(|i| !dpos.contains(i)).collect();
    let out_layout = layout.without(drop)?;
    let (off_d, off_k) = (layout.offsets(&dpos), layout.offsets(&keep));
    let n = op.dim();
    let m = off_k.len();
    let mut entries = vec![ZERO; m * m];
    for (u, &ru) in off_k.iter().enumerate() {
        for (v, &rv) in off_k.iter().enumerate() {
            let mut acc = ZERO;
            for &s in &off_d {
                acc += op.entries[(ru + s) * n + rv + s];
            }
            entries[u * m + v] = acc;
        }
    }
    LabeledOperator::new(out_layout, entries)
}

/// `Tr_S[(e (x) 1) g]` where `S` is the layout of `e`, a subset of the
/// layout of `g`. The result lives on the remaining labels of `g`.
pub fn trace_against(e: &LabeledOperator, g: &LabeledOperator) -> Result<LabeledOperator> {
    let s_labels: Vec<&str> = e.layout().labels().iter().map(String::as_str).collect();
    let gl = g.layout();
    let spos = gl.positions(&s_labels)?;
    for (p, &d) in spos.iter().zip(e.layout().dims()) {
        if gl.dims()[*p] != d {
            return Err(Error::LayoutMismatch(format!(
                "subsystem `{}` has dimension {d} in the observable, {} in the state",
                gl.labels()[*p],
                gl.dims()[*p]
            )));
        }
    }
    let rest: Vec<usize> = (0..gl.len()).filter(|i| !spos.contains(i)).collect();
    let out_layout = gl.without(&s_labels)?;
    let (off_s, off_r) = (gl.offsets(&spos), gl.offsets(&rest));
    let n = g.dim();
    let ns = off_s.len();
    let m = off_r.len();
    let mut entries = vec![ZERO; m * m];
    for (u, &ru) in off_r.iter().enumerate() {
        for (v, &rv) in off_r.iter().enumerate() {
            let mut acc = ZERO;
            for (s, &os) in off_s.iter().enumerate() {
                let col = rv + os;
                let erow = &e.entries[s * ns..(s + 1) * ns];
                for (t, &ot) in off_s.iter().enumerate() {
                    let et = erow[t];
                    if et != ZERO {
                        acc += et * g.entries[(ru + ot) * n + col];
                    }
                }
            }
            entries[u * m + v] = acc;
        }
    }
    LabeledOperator::new(out_layout, entries)
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    layout: SubsystemLayout,
    eigenvalues: Vec<f64>,
    /// Row-major; column `k` is the eigenvector of `eigenvalues[k]`.
    eigenvectors: Vec<C64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.eigenvalues.len();
        (0..n).map(|i| self.eigenvectors[i * n + k]).collect()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Number of eigenvalues above `rel_tol * max(|lambda|)`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let scale = self.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
        self.eigenvalues.iter().filter(|&&x| x > rel_tol * scale).count()
    }

    /// `U f(Lambda) U^dagger`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> LabeledOperator {
        let n = self.eigenvalues.len();
        let scaled: Vec<C64> = (0..n * n)
            .map(|idx| self.eigenvectors[idx] * f(self.eigenvalues[idx % n]))
            .collect();
        let adj: Vec<C64> = (0..n * n)
            .map(|idx| self.eigenvectors[(idx % n) * n + idx / n].conj())
            .collect();
        LabeledOperator {
            layout: self.layout.clone(),
            entries: linalg::matmul(&scaled, &adj, n, n, n),
        }
    }

    pub fn reconstruct(&self) -> LabeledOperator {
        self.apply(|x| x)
    }

    /// `max |U^dagger U - 1|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.eigenvalues.len();
        let adj: Vec<C64> = (0..n * n)
            .map(|idx| self.eigenvectors[(idx % n) * n + idx / n].conj())
            .collect();
        let g = linalg::matmul(&adj, &self.eigenvectors, n, n, n);
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                dev = dev.max((g[i * n + j] - target).norm());
            }
        }
        dev
    }
}

/// Relative Hermiticity tolerance accepted by the spectral routines.
pub const HERMITIAN_REL_TOL: f64 = 1e-12;

pub fn hermitian_eig(op: &LabeledOperator) -> Result<Spectrum> {
    let scale = op.max_abs();
    let deviation = op.hermiticity_deviation();
    if deviation > HERMITIAN_REL_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { deviation });
    }
    let n = op.dim();
    let (vals, vecs) = linalg::eigh(op.entries(), n)?;
    // faer returns ascending order; flip to descending.
    let eigenvalues: Vec<f64> = vals.iter().rev().copied().collect();
    let mut eigenvectors = vec![ZERO; n * n];
    for i in 0..n {
        for k in 0..n {
            eigenvectors[i * n + k] = vecs[i * n + (n - 1 - k)];
        }
    }
    Ok(Spectrum {
        layout: op.layout().clone(),
        eigenvalues,
        eigenvectors,
    })
}

/// Magnitude below which a negative eigenvalue is attributed to rounding.
pub const PSD_REL_TOL: f64 = 1e-10;

fn check_psd(spec: &Spectrum) -> Result<f64> {
    let top = spec.max_eigenvalue();
    let bottom = spec.min_eigenvalue();
    if bottom < -PSD_REL_TOL * top.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositive { eigenvalue: bottom });
    }
    Ok(top)
}

/// Inverse square root on the support: eigenvalues at or below
/// `rel_tol * lambda_max` map to zero.
pub fn psd_inv_sqrt(op: &LabeledOperator, rel_tol: f64) -> Result<LabeledOperator> {
    let spec = hermitian_eig(op)?;
    let top = check_psd(&spec)?;
    let cut = rel_tol * top;
    Ok(spec.apply(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 }))
}

/// Orthogonal projector onto the support of a PSD operator.
pub fn support_projector(op: &LabeledOperator, rel_tol: f64) -> Result<LabeledOperator> {
    let spec = hermitian_eig(op)?;
    let top = check_psd(&spec)?;
    let cut = rel_tol * top;
    Ok(spec.apply(|x| if x > cut { 1.0 } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubits(labels: &[&str]) -> SubsystemLayout {
        SubsystemLayout::uniform(labels.iter().copied(), 2).unwrap()
    }

    fn phi_plus(a: &str, b: &str) -> LabeledOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ket = [C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)];
        LabeledOperator::projector(qubits(&[a, b]), &ket).unwrap()
    }

    #[test]
    fn layout_rejects_duplicates_and_small_dims() {
        assert!(matches!(
            SubsystemLayout::uniform(["A", "A"], 2),
            Err(Error::DuplicateLabel(l)) if l == "A"
        ));
        assert!(SubsystemLayout::new(["A"], [1]).is_err());
        assert!(SubsystemLayout::new(["A", "B"], [2]).is_err());
    }

    #[test]
    fn layout_respects_dimension_cap() {
        let labels: Vec<String> = (0..14).map(|i| format!("Q{i}")).collect();
        let err = SubsystemLayout::uniform(labels, 2).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { dim: 16384, .. }));
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let a = LabeledOperator::identity(qubits(&["A"]));
        let b = LabeledOperator::identity(qubits(&["B"]));
        let ab = kron_compose(&[&a, &b]).unwrap();
        assert_eq!(ab, LabeledOperator::identity(qubits(&["A", "B"])));
    }

    #[test]
    fn kron_of_basis_projectors() {
        let p0 = LabeledOperator::basis_projector(qubits(&["A"]), &[0]).unwrap();
        let p1 = LabeledOperator::basis_projector(qubits(&["B"]), &[1]).unwrap();
        let out = kron_compose(&[&p0, &p1]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i, j) == (1, 1) { ONE } else { ZERO };
                assert_eq!(out.get(i, j), want);
            }
        }
    }

    #[test]
    fn kron_trace_of_phi_with_mixed() {
        let out = kron_compose(&[&phi_plus("A", "B"), &LabeledOperator::maximally_mixed(qubits(&["C"]))]).unwrap();
        assert!((out.trace() - ONE).norm() < 1e-12);
    }

    #[test]
    fn kron_rejects_duplicate_label() {
        let a = LabeledOperator::identity(qubits(&["A"]));
        let err = kron_compose(&[&a, &a]).unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(l) if l == "A"));
    }

    #[test]
    fn partial_trace_of_phi_is_maximally_mixed() {
        let out = partial_trace(&phi_plus("A", "B"), &["B"]).unwrap();
        assert_eq!(out.layout().labels(), ["A"]);
        let want = LabeledOperator::maximally_mixed(qubits(&["A"]));
        assert!(out.max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_over_everything_is_the_trace() {
        let rho = phi_plus("A", "B");
        let out = partial_trace(&rho, &["A", "B"]).unwrap();
        assert_eq!(out.dim(), 1);
        assert!((out.get(0, 0) - rho.trace()).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_unknown_label() {
        assert!(matches!(
            partial_trace(&phi_plus("A", "B"), &["Z"]),
            Err(Error::UnknownLabel(l)) if l == "Z"
        ));
    }

    #[test]
    fn reorder_moves_digits() {
        let p = LabeledOperator::basis_projector(qubits(&["A", "B", "C"]), &[1, 0, 0]).unwrap();
        let q = p.reorder(&["B", "C", "A"]).unwrap();
        let want = LabeledOperator::basis_projector(qubits(&["B", "C", "A"]), &[0, 0, 1]).unwrap();
        assert_eq!(q, want);
    }

    #[test]
    fn embed_matches_kron_and_reorder() {
        let phi = phi_plus("A", "C");
        let full = qubits(&["A", "B", "C"]);
        let embedded = phi.embed(&full).unwrap();
        let via_kron = kron_compose(&[&phi, &LabeledOperator::identity(qubits(&["B"]))])
            .unwrap()
            .reorder(&["A", "B", "C"])
            .unwrap();
        assert!(embedded.max_abs_diff(&via_kron).unwrap() < 1e-15);
    }

    #[test]
    fn trace_against_matches_embed_then_trace() {
        let e = LabeledOperator::from_fn(qubits(&["B", "A"]), |i, j| {
            C64::new((i * 3 + j) as f64, (i as f64) - (j as f64))
        });
        let g = LabeledOperator::from_fn(qubits(&["A", "R", "B"]), |i, j| {
            C64::new(((i * 7 + j * 5) % 11) as f64, ((i + 2 * j) % 3) as f64)
        });
        let fast = trace_against(&e, &g).unwrap();
        let slow = partial_trace(&e.embed(g.layout()).unwrap().matmul(&g).unwrap(), &["B", "A"]).unwrap();
        assert_eq!(fast.layout().labels(), ["R"]);
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12);
    }

    #[test]
    fn eig_of_diagonal_is_sorted_descending() {
        let layout = SubsystemLayout::new(["Q"], [3]).unwrap();
        let h = LabeledOperator::from_real(layout, &[0., 0., 0., 0., 3., 0., 0., 0., 1.]).unwrap();
        let spec = hermitian_eig(&h).unwrap();
        let ev = spec.eigenvalues();
        assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14 && ev[2].abs() < 1e-14);
    }

    #[test]
    fn eig_of_pure_state() {
        let spec = hermitian_eig(&phi_plus("A", "B")).unwrap();
        let want = [1.0, 0.0, 0.0, 0.0];
        for (x, y) in spec.eigenvalues().iter().zip(want) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(spec.unitarity_deviation() < 1e-10);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let h = LabeledOperator::from_real(qubits(&["A"]), &[0., 1., 0., 0.]).unwrap();
        assert!(matches!(hermitian_eig(&h), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn inv_sqrt_identity_and_singular() {
        let id = LabeledOperator::identity(qubits(&["A", "B"]));
        let b = psd_inv_sqrt(&id, PINV_REL_TOL).unwrap();
        assert!(b.max_abs_diff(&id).unwrap() < 1e-14);

        let h = LabeledOperator::from_real(qubits(&["A"]), &[4., 0., 0., 0.]).unwrap();
        let b = psd_inv_sqrt(&h, PINV_REL_TOL).unwrap();
        let want = LabeledOperator::from_real(qubits(&["A"]), &[0.5, 0., 0., 0.]).unwrap();
        assert!(b.max_abs_diff(&want).unwrap() < 1e-14);
    }

    #[test]
    fn inv_sqrt_rejects_negative() {
        let h = LabeledOperator::from_real(qubits(&["A"]), &[1., 0., 0., -0.5]).unwrap();
        match psd_inv_sqrt(&h, PINV_REL_TOL) {
            Err(Error::NotPositive { eigenvalue }) => assert!((eigenvalue + 0.5).abs() < 1e-14),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn complex_hermitian_eig_reconstructs() {
        let h = LabeledOperator::from_fn(qubits(&["A", "B"]), |i, j| {
            let re = ((i + j) % 3) as f64;
            let im = if i < j {
                (j - i) as f64
            } else if i > j {
                -((i - j) as f64)
            } else {
                0.0
            };
            C64::new(re, im)
        });
        let spec = hermitian_eig(&h).unwrap();
        assert!(spec.reconstruct().max_abs_diff(&h).unwrap() < 1e-12);
        assert!(spec.unitarity_deviation() < 1e-12);
        let sum: f64 = spec.eigenvalues().iter().sum();
        assert!((sum - h.trace().re).abs() < 1e-12);
    }
}

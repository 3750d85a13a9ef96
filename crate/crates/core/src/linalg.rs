//! Dense complex linear algebra over labeled tensor-factor spaces.
//!
//! Matrices are stored dense in row-major order; vectors carry a
//! [`SubsystemLayout`] naming their tensor factors so that operations like
//! partial traces, factor permutations, and unitaries on a subset of factors
//! can be requested by label instead of by error-prone index arithmetic.
//!
//! All numerics are double precision. Hermitian inputs to spectral routines
//! are symmetrized as (M + M†)/2 before eigensolving, so callers may pass
//! matrices that are Hermitian only up to accumulated roundoff.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Hermiticity / positivity tolerance for spectral routines.
pub const HERM_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Largest tensor-factor dimension a kron or layout may produce.
pub const DIM_CAP: usize = 1 << 20;
/// Largest entry count a dense matrix may hold.
pub const ENTRY_CAP: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("bad factor labels: {0}")]
    BadLabels(String),
    #[error("matrix of {rows} x {cols} exceeds the configured size cap")]
    DimCap { rows: usize, cols: usize },
    #[error("non-square matrix: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |M - M†| entry {dev:.3e} exceeds {tol:.1e}")]
    NotHermitian { dev: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min:.3e} below -{tol:.1e}")]
    NotPsd { min: f64, tol: f64 },
    #[error("state vector norm {norm} differs from 1 by more than {tol:.1e}")]
    NotNormalized { norm: f64, tol: f64 },
}

type Result<T> = std::result::Result<T, LinalgError>;

/* SubsystemLayout ********************************************************/

/// Ordered list of labeled tensor factors, e.g. `[("E", 3), ("S", 2)]`.
///
/// The flat index of a basis element is row-major over the factor list: the
/// first factor varies slowest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemLayout {
    factors: Vec<(String, usize)>,
}

impl SubsystemLayout {
    /// Builds a layout, checking that labels are unique and dims are >= 1.
    pub fn new<S: Into<String>>(factors: Vec<(S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> =
            factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        if factors.is_empty() {
            return Err(LinalgError::BadLabels("layout has no factors".into()));
        }
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(LinalgError::BadLabels(format!("factor {label} has dim 0")));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(LinalgError::BadLabels(format!("duplicate label {label}")));
            }
        }
        let mut total: usize = 1;
        for (_, d) in &factors {
            total = total
                .checked_mul(*d)
                .filter(|t| *t <= DIM_CAP)
                .ok_or(LinalgError::DimCap { rows: 0, cols: 0 })?;
        }
        Ok(Self { factors })
    }

    /// Single-factor layout.
    pub fn single<S: Into<String>>(label: S, dim: usize) -> Result<Self> {
        Self::new(vec![(label, dim)])
    }

    /// Total dimension (product of factor dims).
    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    /// Number of factors.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    /// Position of a label within the factor list.
    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|(l, _)| l == label)
    }

    /// Dimension of one labeled factor.
    pub fn dim_of(&self, label: &str) -> Option<usize> {
        self.factors.iter().find(|(l, _)| l == label).map(|(_, d)| *d)
    }

    /// Row-major strides, one per factor.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1].1;
        }
        strides
    }

    /// Flat index of a multi-index (one entry per factor).
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.factors.len());
        self.strides().iter().zip(multi).map(|(s, m)| s * m).sum()
    }

    /// Multi-index of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut multi = vec![0usize; self.factors.len()];
        for (i, s) in strides.iter().enumerate() {
            multi[i] = flat / s;
            flat %= s;
        }
        multi
    }

    /// Positions of the given labels, erroring on any label absent.
    pub fn positions_of(&self, labels: &[&str]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                self.position(l)
                    .ok_or_else(|| LinalgError::BadLabels(format!("label {l} not in layout")))
            })
            .collect()
    }

    /// Flat-index relabeling induced by reordering the factors.
    ///
    /// `order` must be a permutation of the labels. Returns `(map, new_layout)`
    /// with `map[old_flat] = new_flat`.
    pub fn permutation_map(&self, order: &[&str]) -> Result<(Vec<usize>, SubsystemLayout)> {
        if order.len() != self.factors.len() {
            return Err(LinalgError::BadLabels(format!(
                "order lists {} labels, layout has {}",
                order.len(),
                self.factors.len()
            )));
        }
        let old_pos = self.positions_of(order)?;
        {
            let mut seen = vec![false; old_pos.len()];
            for &p in &old_pos {
                if seen[p] {
                    return Err(LinalgError::BadLabels("order repeats a label".into()));
                }
                seen[p] = true;
            }
        }
        let new_layout = SubsystemLayout::new(
            old_pos.iter().map(|&p| self.factors[p].clone()).collect::<Vec<_>>(),
        )?;
        let dim = self.dim();
        let new_strides = new_layout.strides();
        let mut map = vec![0usize; dim];
        for (flat, slot) in map.iter_mut().enumerate() {
            let multi = self.multi_index(flat);
            *slot = old_pos
                .iter()
                .zip(&new_strides)
                .map(|(&p, s)| multi[p] * s)
                .sum();
        }
        Ok((map, new_layout))
    }
}

/* ComplexMatrix **********************************************************/

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> C64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from a row-major entry slice.
    ///
    /// # Panics
    /// If the slice length is not `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows * cols");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Matrix product.
    ///
    /// # Panics
    /// If inner dimensions disagree.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.data[i * self.cols + j];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                let b_row = &other.data[j * other.cols..(j + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Entrywise sum.
    ///
    /// # Panics
    /// If shapes disagree.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Entrywise difference.
    ///
    /// # Panics
    /// If shapes disagree.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scaled(&self, s: C64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i])
    }

    pub fn trace(&self) -> C64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference from another matrix.
    ///
    /// # Panics
    /// If shapes disagree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from Hermiticity, max |M[i,j] - conj(M[j,i])|.
    pub fn herm_deviation(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self.data[i * self.cols + j] - self.data[j * self.cols + i].conj()).norm();
                dev = dev.max(d);
            }
        }
        dev
    }

    /// (M + M†)/2.
    ///
    /// # Panics
    /// If not square.
    pub fn hermitized(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self.data[i * self.cols + j] + self.data[j * self.cols + i].conj()) * 0.5
        })
    }

    /// True when U†U = I within `tol` entrywise.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let prod = self.adjoint().mul(self);
        prod.max_abs_diff(&Self::identity(self.rows)) <= tol
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Kronecker product. Dimensions multiply; errors if they exceed the size cap.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows.checked_mul(b.rows).ok_or(LinalgError::DimCap {
        rows: usize::MAX,
        cols: usize::MAX,
    })?;
    let cols = a.cols.checked_mul(b.cols).ok_or(LinalgError::DimCap {
        rows: usize::MAX,
        cols: usize::MAX,
    })?;
    if rows > DIM_CAP || cols > DIM_CAP || rows.saturating_mul(cols) > ENTRY_CAP {
        return Err(LinalgError::DimCap { rows, cols });
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let av = a[(ia, ja)];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..b.rows {
                for jb in 0..b.cols {
                    out[(ia * b.rows + ib, ja * b.cols + jb)] = av * b[(ib, jb)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a sequence, left to right.
pub fn kron_all(mats: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    assert!(!mats.is_empty());
    let mut out = mats[0].clone();
    for m in &mats[1..] {
        out = kron(&out, m)?;
    }
    Ok(out)
}

/* StateVector ************************************************************/

/// Unit-norm complex vector over a labeled tensor-factor space.
#[derive(Clone, Debug)]
pub struct StateVector {
    amps: Vec<C64>,
    layout: SubsystemLayout,
}

impl StateVector {
    /// Builds from amplitudes, checking dimension and unit norm (1e-12).
    pub fn new(amps: Vec<C64>, layout: SubsystemLayout) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(LinalgError::DimMismatch(format!(
                "{} amplitudes for layout dim {}",
                amps.len(),
                layout.dim()
            )));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(LinalgError::NotNormalized { norm, tol: 1e-12 });
        }
        Ok(Self { amps, layout })
    }

    /// Basis state |multi>.
    pub fn basis(layout: SubsystemLayout, multi: &[usize]) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
        amps[layout.flat_index(multi)] = C64::new(1.0, 0.0);
        Self { amps, layout }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// |v><v| as a dense matrix.
    pub fn density(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, n, |i, j| self.amps[i] * self.amps[j].conj())
    }

    /// Applies a unitary to the listed factors, leaving the rest alone.
    ///
    /// Equivalent to multiplying by (u tensor identity) with the factors
    /// reordered so the targets come first; the full matrix is never formed.
    /// `u` must be square with dimension equal to the product of the target
    /// dims. Unitarity of `u` is the caller's responsibility.
    pub fn apply_factor_unitary(&self, u: &ComplexMatrix, targets: &[&str]) -> Result<Self> {
        if !u.is_square() {
            return Err(LinalgError::NotSquare { rows: u.rows, cols: u.cols });
        }
        let positions = self.layout.positions_of(targets)?;
        let d_u: usize = positions.iter().map(|&p| self.layout.factors[p].1).product();
        if d_u != u.rows {
            return Err(LinalgError::DimMismatch(format!(
                "unitary dim {} but target factors have dim {}",
                u.rows, d_u
            )));
        }
        // Front order: targets first (as listed), then the rest in layout order.
        let mut front: Vec<&str> = targets.to_vec();
        for (label, _) in &self.layout.factors {
            if !targets.contains(&label.as_str()) {
                front.push(label);
            }
        }
        let (map, _) = self.layout.permutation_map(&front)?;
        let dim = self.dim();
        let rest = dim / d_u;
        let mut permuted = vec![C64::new(0.0, 0.0); dim];
        for (old, &new) in map.iter().enumerate() {
            permuted[new] = self.amps[old];
        }
        let mut applied = vec![C64::new(0.0, 0.0); dim];
        for a in 0..d_u {
            let out_block = &mut applied[a * rest..(a + 1) * rest];
            for b in 0..d_u {
                let coef = u[(a, b)];
                if coef == C64::new(0.0, 0.0) {
                    continue;
                }
                let in_block = &permuted[b * rest..(b + 1) * rest];
                for (o, x) in out_block.iter_mut().zip(in_block) {
                    *o += coef * x;
                }
            }
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        for (old, &new) in map.iter().enumerate() {
            amps[old] = applied[new];
        }
        Ok(Self { amps, layout: self.layout.clone() })
    }

    /// Reorders the tensor factors; amplitudes move by the induced index map.
    pub fn permute_factors(&self, order: &[&str]) -> Result<Self> {
        let (map, layout) = self.layout.permutation_map(order)?;
        let mut amps = vec![C64::new(0.0, 0.0); self.dim()];
        for (old, &new) in map.iter().enumerate() {
            amps[new] = self.amps[old];
        }
        Ok(Self { amps, layout })
    }

    /// Exchanges the contents of two same-dimension factors in place of the
    /// layout (a swap gate realized as index bookkeeping, not a matrix).
    pub fn swap_factors(&self, a: &str, b: &str) -> Result<Self> {
        let da = self
            .layout
            .dim_of(a)
            .ok_or_else(|| LinalgError::BadLabels(format!("label {a} not in layout")))?;
        let db = self
            .layout
            .dim_of(b)
            .ok_or_else(|| LinalgError::BadLabels(format!("label {b} not in layout")))?;
        if da != db {
            return Err(LinalgError::DimMismatch(format!(
                "cannot swap factors of dims {da} and {db}"
            )));
        }
        // Reorder so that a and b trade places, then restore the original
        // labels so the layout is unchanged while the contents moved.
        let order: Vec<&str> = self
            .layout
            .factors
            .iter()
            .map(|(l, _)| {
                if l == a {
                    b
                } else if l == b {
                    a
                } else {
                    l.as_str()
                }
            })
            .collect();
        let permuted = self.permute_factors(&order)?;
        Ok(Self { amps: permuted.amps, layout: self.layout.clone() })
    }
}

/// Reorders the tensor factors of a square matrix over `layout`.
pub fn permute_matrix_factors(
    m: &ComplexMatrix,
    layout: &SubsystemLayout,
    order: &[&str],
) -> Result<(ComplexMatrix, SubsystemLayout)> {
    if !m.is_square() || m.rows != layout.dim() {
        return Err(LinalgError::DimMismatch(format!(
            "matrix {}x{} does not act on layout dim {}",
            m.rows,
            m.cols,
            layout.dim()
        )));
    }
    let (map, new_layout) = layout.permutation_map(order)?;
    let n = m.rows;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok((out, new_layout))
}

/// Partial trace keeping the listed factors, in the listed order.
///
/// The trace is preserved: tr(result) = tr(M).
pub fn partial_trace(
    m: &ComplexMatrix,
    layout: &SubsystemLayout,
    keep: &[&str],
) -> Result<(ComplexMatrix, SubsystemLayout)> {
    if !m.is_square() || m.rows != layout.dim() {
        return Err(LinalgError::DimMismatch(format!(
            "matrix {}x{} does not act on layout dim {}",
            m.rows,
            m.cols,
            layout.dim()
        )));
    }
    if keep.is_empty() {
        return Err(LinalgError::BadLabels("keep list is empty".into()));
    }
    let keep_pos = layout.positions_of(keep)?;
    {
        let mut seen = vec![false; layout.len()];
        for &p in &keep_pos {
            if seen[p] {
                return Err(LinalgError::BadLabels("keep list repeats a label".into()));
            }
            seen[p] = true;
        }
    }
    // Reorder with kept factors first, then trace the tail block.
    let mut order: Vec<&str> = keep.to_vec();
    for (label, _) in &layout.factors {
        if !keep.contains(&label.as_str()) {
            order.push(label);
        }
    }
    let (map, full_layout) = layout.permutation_map(&order)?;
    let kept_layout = SubsystemLayout::new(
        keep_pos.iter().map(|&p| layout.factors[p].clone()).collect::<Vec<_>>(),
    )?;
    let d_keep = kept_layout.dim();
    let d_rest = layout.dim() / d_keep;
    let n = layout.dim();
    let _ = full_layout;
    let mut out = ComplexMatrix::zeros(d_keep, d_keep);
    // out[a, b] = sum_t M'[a*d_rest + t, b*d_rest + t] with M' the reordered
    // matrix; read through the index map instead of materializing M'.
    let mut inv = vec![0usize; n];
    for (old, &new) in map.iter().enumerate() {
        inv[new] = old;
    }
    for a in 0..d_keep {
        for b in 0..d_keep {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..d_rest {
                acc += m[(inv[a * d_rest + t], inv[b * d_rest + t])];
            }
            out[(a, b)] = acc;
        }
    }
    Ok((out, kept_layout))
}

/* Spectra and distances **************************************************/

fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.rows, m.cols, |i, j| m[(i, j)])
}

fn check_square_herm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let dev = m.herm_deviation();
    if dev > HERM_TOL {
        return Err(LinalgError::NotHermitian { dev, tol: HERM_TOL });
    }
    Ok(m.hermitized())
}

/// Eigenvalues of the symmetrized matrix (M + M†)/2, descending.
///
/// The input must be Hermitian within 1e-10; their sum equals tr(M) up to
/// roundoff.
pub fn herm_eigvals(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let h = check_square_herm(m)?;
    let eig = nalgebra::linalg::SymmetricEigen::new(to_na(&h));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

/// Eigendecomposition of the symmetrized matrix: descending eigenvalues and a
/// unitary whose columns are the matching eigenvectors.
pub fn herm_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let h = check_square_herm(m)?;
    let n = h.rows;
    let eig = nalgebra::linalg::SymmetricEigen::new(to_na(&h));
    let mut order: Vec<usize> = (0..n).collect();
    let vals: DVector<f64> = eig.eigenvalues;
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((sorted_vals, vecs))
}

/// Trace distance (1/2)||A - B||_1 between Hermitian matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(LinalgError::DimMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let vals = herm_eigvals(&a.sub(b))?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// tr(M^2) for a density matrix; lies in [1/dim, 1].
pub fn purity(m: &ComplexMatrix) -> f64 {
    debug_assert!(m.is_square());
    let n = m.rows;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (m[(i, j)] * m[(j, i)]).re;
        }
    }
    acc
}

/// Relative entropy tr[A(log A - log B)] in bits (base-2 logs on the support).
///
/// Inputs must be positive semidefinite within 1e-10. Returns +infinity when
/// the support of A is not contained in the support of B: some eigenvalue of
/// B below 1e-12 carries A-weight above 1e-10.
pub fn relative_entropy(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    Ok(relative_entropy_nats(a, b)? / std::f64::consts::LN_2)
}

/// Relative entropy in nats; see [`relative_entropy`].
pub fn relative_entropy_nats(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(LinalgError::DimMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let a_vals = herm_eigvals(a)?;
    if let Some(&min) = a_vals.last() {
        if min < -HERM_TOL {
            return Err(LinalgError::NotPsd { min, tol: HERM_TOL });
        }
    }
    // tr(A ln A) from A's spectrum; x ln x -> 0 as x -> 0.
    let tr_a_ln_a: f64 = a_vals
        .iter()
        .filter(|&&v| v > SUPPORT_TOL)
        .map(|&v| v * v.ln())
        .sum();
    // tr(A ln B) through B's eigenbasis.
    let (b_vals, b_vecs) = herm_eigen(b)?;
    if let Some(&min) = b_vals.last() {
        if min < -HERM_TOL {
            return Err(LinalgError::NotPsd { min, tol: HERM_TOL });
        }
    }
    let n = a.rows;
    let mut tr_a_ln_b = 0.0;
    for j in 0..n {
        // weight = <b_j| A |b_j>
        let mut weight = 0.0;
        for r in 0..n {
            let mut av = C64::new(0.0, 0.0);
            for c in 0..n {
                av += a[(r, c)] * b_vecs[(c, j)];
            }
            weight += (b_vecs[(r, j)].conj() * av).re;
        }
        if b_vals[j] < SUPPORT_TOL {
            if weight > 1e-10 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        tr_a_ln_b += weight * b_vals[j].ln();
    }
    Ok(tr_a_ln_a - tr_a_ln_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn layout(factors: Vec<(&str, usize)>) -> SubsystemLayout {
        SubsystemLayout::new(factors).unwrap()
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        let i4 = ComplexMatrix::identity(4);
        assert_eq!(kron(&i2, &i2).unwrap(), i4);
    }

    #[test]
    fn kron_projector_block() {
        // |0><0| kron X places X in the leading block and zeros elsewhere.
        let mut p0 = ComplexMatrix::zeros(2, 2);
        p0[(0, 0)] = c(1.0, 0.0);
        let x = ComplexMatrix::from_fn(2, 2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let k = kron(&p0, &x).unwrap();
        let mut expect = ComplexMatrix::zeros(4, 4);
        expect[(0, 1)] = c(1.0, 0.0);
        expect[(1, 0)] = c(1.0, 0.0);
        assert!(k.max_abs_diff(&expect) == 0.0);
    }

    #[test]
    fn permute_identity_order_is_noop() {
        let l = layout(vec![("a", 2), ("b", 3)]);
        let mut amps = vec![c(0.0, 0.0); 6];
        amps[4] = c(1.0, 0.0);
        let v = StateVector::new(amps, l).unwrap();
        let w = v.permute_factors(&["a", "b"]).unwrap();
        assert_eq!(v.amps(), w.amps());
    }

    #[test]
    fn permute_bell_state_symmetric() {
        let l = layout(vec![("a", 2), ("b", 2)]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = StateVector::new(
            vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)],
            l,
        )
        .unwrap();
        let w = v.permute_factors(&["b", "a"]).unwrap();
        assert_eq!(v.amps(), w.amps());
    }

    #[test]
    fn swap_gate_on_basis_state() {
        let l = layout(vec![("a", 2), ("b", 2)]);
        let v01 = StateVector::basis(l.clone(), &[0, 1]);
        let v10 = StateVector::basis(l, &[1, 0]);
        let swapped = v01.swap_factors("a", "b").unwrap();
        assert_eq!(swapped.amps(), v10.amps());
    }

    #[test]
    fn apply_identity_unitary_is_noop() {
        let l = layout(vec![("a", 2), ("b", 3), ("c", 2)]);
        let v = StateVector::basis(l, &[1, 2, 0]);
        let w = v.apply_factor_unitary(&ComplexMatrix::identity(4), &["c", "a"]).unwrap();
        for (x, y) in v.amps().iter().zip(w.amps()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn maximally_entangled_marginal_is_maximally_mixed() {
        let l = layout(vec![("a", 2), ("b", 2)]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = StateVector::new(
            vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)],
            l.clone(),
        )
        .unwrap();
        let (marg, ml) = partial_trace(&v.density(), &l, &["a"]).unwrap();
        assert_eq!(ml.dim(), 2);
        let target = ComplexMatrix::identity(2).scaled(c(0.5, 0.0));
        assert!(marg.max_abs_diff(&target) < 1e-14);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let rho_a = ComplexMatrix::from_fn(2, 2, |i, j| {
            [[c(0.7, 0.0), c(0.1, 0.2)], [c(0.1, -0.2), c(0.3, 0.0)]][i][j]
        });
        let rho_b = ComplexMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c([0.5, 0.3, 0.2][i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let l = layout(vec![("a", 2), ("b", 3)]);
        let (got, _) = partial_trace(&kron(&rho_a, &rho_b).unwrap(), &l, &["a"]).unwrap();
        assert!(got.max_abs_diff(&rho_a) < 1e-14);
    }

    #[test]
    fn partial_trace_keeps_trace() {
        let l = layout(vec![("a", 2), ("b", 3)]);
        let m = ComplexMatrix::from_fn(6, 6, |i, j| {
            c((i * 7 + j) as f64 * 0.01, (i as f64 - j as f64) * 0.02)
        });
        let h = m.hermitized();
        let (kept, _) = partial_trace(&h, &l, &["b"]).unwrap();
        assert!((kept.trace() - h.trace()).norm() < 1e-12);
    }

    #[test]
    fn eigvals_of_identity() {
        let vals = herm_eigvals(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(vals.len(), 4);
        for v in vals {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eigvals_of_diagonal() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = c(3.0, 0.0);
        m[(1, 1)] = c(-1.0, 0.0);
        let vals = herm_eigvals(&m).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14);
        assert!((vals[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn trace_distance_trivial_cases() {
        let mut p0 = ComplexMatrix::zeros(2, 2);
        p0[(0, 0)] = c(1.0, 0.0);
        let mut p1 = ComplexMatrix::zeros(2, 2);
        p1[(1, 1)] = c(1.0, 0.0);
        assert!(trace_distance(&p0, &p0).unwrap() < 1e-15);
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn purity_of_maximally_mixed() {
        for d in [2usize, 3, 5] {
            let m = ComplexMatrix::identity(d).scaled(c(1.0 / d as f64, 0.0));
            assert!((purity(&m) - 1.0 / d as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn relative_entropy_of_equal_states_is_zero() {
        let mut rho = ComplexMatrix::zeros(2, 2);
        rho[(0, 0)] = c(0.6, 0.0);
        rho[(1, 1)] = c(0.4, 0.0);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_infinite_outside_support() {
        let mut pure = ComplexMatrix::zeros(2, 2);
        pure[(0, 0)] = c(0.5, 0.0);
        pure[(0, 1)] = c(0.5, 0.0);
        pure[(1, 0)] = c(0.5, 0.0);
        pure[(1, 1)] = c(0.5, 0.0);
        let mut p1 = ComplexMatrix::zeros(2, 2);
        p1[(1, 1)] = c(1.0, 0.0);
        assert!(relative_entropy(&pure, &p1).unwrap().is_infinite());
    }

    #[test]
    fn classical_kl_matches_closed_form() {
        // diag(0.9, 0.1) against I/2 in bits.
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 0)] = c(0.9, 0.0);
        a[(1, 1)] = c(0.1, 0.0);
        let b = ComplexMatrix::identity(2).scaled(c(0.5, 0.0));
        let expect = 0.9 * (0.9f64 / 0.5).log2() + 0.1 * (0.1f64 / 0.5).log2();
        assert!((relative_entropy(&a, &b).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn layout_rejects_duplicates_and_zero_dims() {
        assert!(SubsystemLayout::new(vec![("a", 2), ("a", 2)]).is_err());
        assert!(SubsystemLayout::new(vec![("a", 0)]).is_err());
    }

    #[test]
    fn flat_and_multi_index_roundtrip() {
        let l = layout(vec![("a", 2), ("b", 3), ("c", 4)]);
        for flat in 0..l.dim() {
            assert_eq!(l.flat_index(&l.multi_index(flat)), flat);
        }
    }
}

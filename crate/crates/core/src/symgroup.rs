//! Exact symmetric-group combinatorics and Weingarten calculus.
//!
//! Everything here is exact: permutations and partitions are integer data,
//! characters come from the Murnaghan-Nakayama rule over machine integers,
//! and Weingarten values are arbitrary-precision rationals. The character
//! sum behind the Weingarten function has alternating signs that cancel
//! catastrophically in doubles by n = 8, so floating point only appears at
//! the final conversion of a finished rational.
//!
//! The Weingarten function here is the unitary-group one of Collins and
//! Sniady (Commun. Math. Phys. 264 (2006) 773): moments of matrix entries of
//! a Haar unitary are sums over permutation pairs weighted by Wg evaluated
//! at the relative permutation.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg::ComplexMatrix;

/// Largest symmetric-group degree the character and Weingarten tables cover.
pub const MAX_WG_DEGREE: usize = 8;

#[derive(Debug, Error)]
pub enum SymGroupError {
    #[error("degree {n} exceeds the supported maximum {max}")]
    DegreeTooLarge { n: usize, max: usize },
    #[error("invalid permutation one-line form: {0}")]
    BadPermutation(String),
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("index tuple entry {value} outside [0, {d})")]
    IndexOutOfRange { value: usize, d: usize },
}

type Result<T> = std::result::Result<T, SymGroupError>;

/* Permutations ***********************************************************/

/// Permutation of {0..n-1} in one-line form: `map[i]` is the image of i.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    /// Builds from one-line form, checking bijectivity.
    pub fn from_one_line(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(SymGroupError::BadPermutation(format!("{map:?}")));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    /// Transposition (a b) in S_n.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(a, b);
        Self { map }
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn one_line(&self) -> &[usize] {
        &self.map
    }

    /// Composition acting right-to-left: (self * other)(i) = self(other(i)).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n() != other.n() {
            return Err(SymGroupError::SizeMismatch(format!(
                "compose of degrees {} and {}",
                self.n(),
                other.n()
            )));
        }
        Ok(Self { map: other.map.iter().map(|&i| self.map[i]).collect() })
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0usize; self.n()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Self { map: inv }
    }

    /// Number of cycles, fixed points included.
    pub fn cycle_count(&self) -> usize {
        cycle_count_of(&self.map)
    }

    /// Conjugacy-class descriptor: cycle lengths as a partition.
    pub fn cycle_type(&self) -> CycleType {
        CycleType::new(cycle_lengths_of(&self.map)).expect("cycle lengths form a partition")
    }

    /// All n! elements of S_n, one-line forms in lexicographic order.
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..n).collect();
        loop {
            out.push(Self { map: current.clone() });
            if !next_permutation(&mut current) {
                break;
            }
        }
        out
    }
}

/// Advances to the next lexicographic arrangement; false after the last.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Cycle count of a one-line form, fixed points included.
pub fn cycle_count_of(map: &[usize]) -> usize {
    let mut seen = vec![false; map.len()];
    let mut count = 0;
    for start in 0..map.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = map[i];
        }
    }
    count
}

fn cycle_lengths_of(map: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; map.len()];
    let mut lengths = Vec::new();
    for start in 0..map.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = map[i];
            len += 1;
        }
        lengths.push(len);
    }
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    lengths
}

/* Partitions *************************************************************/

/// Weakly decreasing positive integers; the cycle type of a permutation and
/// the shape of a Young diagram.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CycleType {
    parts: Vec<usize>,
}

impl CycleType {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.iter().any(|&p| p == 0) {
            return Err(SymGroupError::BadPartition("zero part".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(SymGroupError::BadPartition(format!("{parts:?} not weakly decreasing")));
        }
        Ok(Self { parts })
    }

    /// The identity class (1, 1, ..., 1) of S_n.
    pub fn identity(n: usize) -> Self {
        Self { parts: vec![1; n] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Sum of parts.
    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of parts; for a cycle type, the cycle count.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Size of the conjugacy class with this cycle type in S_n.
    pub fn class_size(&self) -> BigInt {
        let n = self.n();
        let mut centralizer = BigInt::from(1);
        let mut mult: HashMap<usize, usize> = HashMap::new();
        for &p in &self.parts {
            *mult.entry(p).or_insert(0) += 1;
        }
        for (part, m) in mult {
            centralizer *= BigInt::from(part).pow(m as u32) * factorial(m);
        }
        factorial(n) / centralizer
    }
}

/// All partitions of n in lexicographic order, (1^n) first, (n) last.
pub fn partitions(n: usize) -> Vec<CycleType> {
    fn rec(remaining: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            let mut parts = prefix.clone();
            parts.sort_unstable_by(|a, b| b.cmp(a));
            out.push(parts);
            return;
        }
        for part in 1..=max_part.min(remaining) {
            prefix.push(part);
            rec(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    if n == 0 {
        raw.push(Vec::new());
    } else {
        rec(n, n, &mut Vec::new(), &mut raw);
    }
    let mut out: Vec<CycleType> = raw.into_iter().map(|parts| CycleType { parts }).collect();
    out.sort();
    out
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

/// Conjugate (transposed) partition.
fn conjugate(parts: &[usize]) -> Vec<usize> {
    if parts.is_empty() {
        return Vec::new();
    }
    (1..=parts[0]).map(|j| parts.iter().filter(|&&p| p >= j).count()).collect()
}

/// Hook length of cell (i, j), 0-indexed.
fn hook_len(parts: &[usize], conj: &[usize], i: usize, j: usize) -> usize {
    parts[i] - j + conj[j] - i - 1
}

/// Dimension of the irreducible representation with shape lambda, by the
/// hook-length formula n! / prod(hooks).
pub fn hook_dimension(lambda: &CycleType) -> BigInt {
    let parts = lambda.parts();
    let conj = conjugate(parts);
    let mut hooks = BigInt::from(1);
    for (i, &row) in parts.iter().enumerate() {
        for j in 0..row {
            hooks *= BigInt::from(hook_len(parts, &conj, i, j));
        }
    }
    factorial(lambda.n()) / hooks
}

/* Characters *************************************************************/

/// Shared memo for Murnaghan-Nakayama recursions.
#[derive(Default)]
struct CharMemo {
    cache: HashMap<(Vec<usize>, Vec<usize>), i64>,
}

impl CharMemo {
    /// Character value by border-strip removal over beta numbers: removing a
    /// strip of length t corresponds to lowering one first-column hook length
    /// by t, with sign (-1)^(betas jumped over).
    fn eval(&mut self, lambda: &[usize], mu: &[usize]) -> i64 {
        if mu.is_empty() {
            return 1;
        }
        let key = (lambda.to_vec(), mu.to_vec());
        if let Some(&v) = self.cache.get(&key) {
            return v;
        }
        let t = mu[0];
        let rest = &mu[1..];
        let m = lambda.len();
        let betas: Vec<usize> = (0..m).map(|i| lambda[i] + (m - 1 - i)).collect();
        let mut total = 0i64;
        for (idx, &b) in betas.iter().enumerate() {
            if b < t {
                continue;
            }
            let target = b - t;
            if betas.contains(&target) {
                continue;
            }
            let jumped = betas.iter().filter(|&&x| target < x && x < b).count();
            let sign = if jumped % 2 == 0 { 1 } else { -1 };
            let mut new_betas = betas.clone();
            new_betas[idx] = target;
            new_betas.sort_unstable_by(|a, b| b.cmp(a));
            let mut new_lambda: Vec<usize> = new_betas
                .iter()
                .enumerate()
                .map(|(i, &nb)| nb - (m - 1 - i))
                .collect();
            while new_lambda.last() == Some(&0) {
                new_lambda.pop();
            }
            total += sign * self.eval(&new_lambda, rest);
        }
        self.cache.insert(key, total);
        total
    }
}

/// Irreducible character chi^lambda evaluated on class mu, both partitions
/// of the same n, by the Murnaghan-Nakayama rule.
pub fn character(lambda: &CycleType, mu: &CycleType) -> Result<i64> {
    if lambda.n() != mu.n() {
        return Err(SymGroupError::SizeMismatch(format!(
            "lambda sums to {}, mu to {}",
            lambda.n(),
            mu.n()
        )));
    }
    Ok(CharMemo::default().eval(lambda.parts(), mu.parts()))
}

/// Full character table of S_n: rows are shapes lambda, columns are classes
/// mu, both in the order of [`partitions`].
pub struct CharacterTable {
    n: usize,
    shapes: Vec<CycleType>,
    values: Vec<Vec<i64>>,
}

impl CharacterTable {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_WG_DEGREE {
            return Err(SymGroupError::DegreeTooLarge { n, max: MAX_WG_DEGREE });
        }
        let shapes = partitions(n);
        let mut memo = CharMemo::default();
        let values = shapes
            .iter()
            .map(|lambda| {
                shapes
                    .iter()
                    .map(|mu| memo.eval(lambda.parts(), mu.parts()))
                    .collect::<Vec<i64>>()
            })
            .collect();
        Ok(Self { n, shapes, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shapes(&self) -> &[CycleType] {
        &self.shapes
    }

    pub fn value(&self, lambda_idx: usize, mu_idx: usize) -> i64 {
        self.values[lambda_idx][mu_idx]
    }
}

/* Weingarten function ****************************************************/

/// Exact Weingarten values of S_n at dimension d, one entry per cycle type.
///
/// Wg(t, d) = (1/n!^2) sum over shapes lambda of n with at most d rows of
/// f_lambda^2 chi^lambda(t) / s_lambda(1^d), where s_lambda(1^d) is the
/// product over cells (i, j) of (d + j - i) / hook(i, j). Shapes with more
/// than d rows drop out, which realizes the pseudo-inverse convention that
/// keeps moment formulas valid for d < n.
pub struct WeingartenTable {
    n: usize,
    d: u64,
    values: BTreeMap<CycleType, BigRational>,
}

impl WeingartenTable {
    pub fn build(n: usize, d: u64) -> Result<Self> {
        if n > MAX_WG_DEGREE {
            return Err(SymGroupError::DegreeTooLarge { n, max: MAX_WG_DEGREE });
        }
        if d == 0 {
            return Err(SymGroupError::ZeroDimension);
        }
        let shapes = partitions(n);
        let mut memo = CharMemo::default();
        // Per-shape prefactor f_lambda^2 * prod(hooks) / (n!^2 * prod(d+j-i)),
        // which is f_lambda^2 / (n!^2 s_lambda(1^d)).
        let mut shape_coef: Vec<(usize, BigRational)> = Vec::new();
        let nfact2 = factorial(n) * factorial(n);
        for (li, lambda) in shapes.iter().enumerate() {
            if lambda.len() > d as usize {
                continue;
            }
            let parts = lambda.parts();
            let conj = conjugate(parts);
            let mut hooks = BigInt::from(1);
            let mut content = BigInt::from(1);
            for (i, &row) in parts.iter().enumerate() {
                for j in 0..row {
                    hooks *= BigInt::from(hook_len(parts, &conj, i, j));
                    content *= BigInt::from(d as i64 + j as i64 - i as i64);
                }
            }
            let f = hook_dimension(lambda);
            let coef = BigRational::new(&f * &f * hooks, &nfact2 * content);
            shape_coef.push((li, coef));
        }
        let mut values = BTreeMap::new();
        for mu in &shapes {
            let mut acc = BigRational::zero();
            for (li, coef) in &shape_coef {
                let chi = memo.eval(shapes[*li].parts(), mu.parts());
                if chi != 0 {
                    acc += coef * BigRational::from(BigInt::from(chi));
                }
            }
            values.insert(mu.clone(), acc);
        }
        Ok(Self { n, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn get(&self, t: &CycleType) -> Option<&BigRational> {
        self.values.get(t)
    }

    /// Wg evaluated at a permutation (through its cycle type).
    pub fn at(&self, p: &Permutation) -> &BigRational {
        self.values.get(&p.cycle_type()).expect("table covers all classes of S_n")
    }
}

/// Single exact Weingarten value; builds a throwaway table.
pub fn weingarten(t: &CycleType, n: usize, d: u64) -> Result<BigRational> {
    if t.n() != n {
        return Err(SymGroupError::SizeMismatch(format!(
            "cycle type sums to {}, expected {}",
            t.n(),
            n
        )));
    }
    let table = WeingartenTable::build(n, d)?;
    Ok(table.get(t).expect("all classes present").clone())
}

/// Lossy conversion of an exact rational to double, for reporting only.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let num = r.numer().to_f64().unwrap_or(f64::NAN);
        let den = r.denom().to_f64().unwrap_or(f64::NAN);
        num / den
    })
}

/* Moment integrals *******************************************************/

/// Haar-average of a product of matrix entries,
/// E[ prod_l U[i_l, j_l] conj(U[i'_l, j'_l]) ] for a Haar unitary of
/// dimension d: the sum over permutation pairs (sigma, tau) of
/// delta(i, i' after sigma) delta(j, j' after tau) Wg(tau sigma^-1, d),
/// evaluated exactly and converted to double at the end. The value is real
/// for any index choice.
pub fn moment_integral(
    i: &[usize],
    j: &[usize],
    ip: &[usize],
    jp: &[usize],
    d: u64,
) -> Result<f64> {
    let n = i.len();
    if j.len() != n || ip.len() != n || jp.len() != n {
        return Err(SymGroupError::SizeMismatch(
            "index tuples must share one length".into(),
        ));
    }
    if n == 0 {
        return Ok(1.0);
    }
    if n > MAX_WG_DEGREE {
        return Err(SymGroupError::DegreeTooLarge { n, max: MAX_WG_DEGREE });
    }
    for &v in i.iter().chain(j).chain(ip).chain(jp) {
        if v as u64 >= d {
            return Err(SymGroupError::IndexOutOfRange { value: v, d: d as usize });
        }
    }
    let table = WeingartenTable::build(n, d)?;
    let perms = Permutation::all(n);
    // sigma must match every i_l with i'_(sigma(l)); tau likewise for j.
    let row_ok: Vec<&Permutation> = perms
        .iter()
        .filter(|p| (0..n).all(|l| i[l] == ip[p.apply(l)]))
        .collect();
    let col_ok: Vec<&Permutation> = perms
        .iter()
        .filter(|p| (0..n).all(|l| j[l] == jp[p.apply(l)]))
        .collect();
    let mut acc = BigRational::zero();
    for sigma in &row_ok {
        let sigma_inv = sigma.inverse();
        for tau in &col_ok {
            let rel = tau.compose(&sigma_inv)?;
            acc += table.at(&rel);
        }
    }
    Ok(rational_to_f64(&acc))
}

/// Closed form of the Haar average of U† A U X U† B U over d x d matrices:
/// [(d tr(AB) - tr A tr B) tr X I + (d tr A tr B - tr(AB)) X] / (d (d^2 - 1)).
pub fn two_moment_twirl(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    x: &ComplexMatrix,
    d: usize,
) -> Result<ComplexMatrix> {
    if d < 2 {
        return Err(SymGroupError::ZeroDimension);
    }
    for m in [a, b, x] {
        if m.rows() != d || m.cols() != d {
            return Err(SymGroupError::SizeMismatch(format!(
                "matrix is {}x{}, expected {d}x{d}",
                m.rows(),
                m.cols()
            )));
        }
    }
    let tr_ab = a.mul(b).trace();
    let tr_a = a.trace();
    let tr_b = b.trace();
    let tr_x = x.trace();
    let df = d as f64;
    let denom = df * (df * df - 1.0);
    let coeff_i = (tr_ab * df - tr_a * tr_b) * tr_x / denom;
    let coeff_x = (tr_a * tr_b * df - tr_ab) / denom;
    Ok(ComplexMatrix::identity(d).scaled(coeff_i).add(&x.scaled(coeff_x)))
}

/* Asymptotics ************************************************************/

/// Result of checking |Wg| ~ d^-(2n - cycles) on a log-log grid.
#[derive(Clone, Debug)]
pub struct WgAsymptoticReport {
    pub cycle_type: CycleType,
    pub n: usize,
    pub fitted_slope: f64,
    pub expected_slope: f64,
    pub passed: bool,
}

/// Fits the log-log slope of |Wg(t, d)| over the top decade of `d_list` and
/// compares it with -(2n - #cycles) within 0.1.
pub fn wg_asymptotic_check(t: &CycleType, n: usize, d_list: &[u64]) -> Result<WgAsymptoticReport> {
    if t.n() != n {
        return Err(SymGroupError::SizeMismatch(format!(
            "cycle type sums to {}, expected {}",
            t.n(),
            n
        )));
    }
    if d_list.windows(2).any(|w| w[0] >= w[1]) || d_list.is_empty() {
        return Err(SymGroupError::SizeMismatch("d list must be strictly increasing".into()));
    }
    let d_max = *d_list.last().unwrap();
    let cutoff = d_max / 10;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for &d in d_list.iter().filter(|&&d| d >= cutoff.max(1)) {
        let w = weingarten(t, n, d)?;
        if w.is_zero() {
            continue;
        }
        let mag = rational_to_f64(&w.abs());
        points.push(((d as f64).ln(), mag.ln()));
    }
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let fitted_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let expected_slope = -(2.0 * n as f64 - t.len() as f64);
    Ok(WgAsymptoticReport {
        cycle_type: t.clone(),
        n,
        fitted_slope,
        expected_slope,
        passed: (fitted_slope - expected_slope).abs() <= 0.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ct(parts: &[usize]) -> CycleType {
        CycleType::new(parts.to_vec()).unwrap()
    }

    fn rat(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn cycle_counts() {
        assert_eq!(Permutation::identity(4).cycle_count(), 4);
        assert_eq!(Permutation::transposition(4, 1, 3).cycle_count(), 3);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        // Deterministic walk over a few hundred permutations of S_6.
        let perms = Permutation::all(6);
        for p in perms.iter().step_by(3).take(500) {
            let e = p.compose(&p.inverse()).unwrap();
            assert_eq!(e, Permutation::identity(6));
        }
    }

    #[test]
    fn partition_counts() {
        assert_eq!(partitions(4).len(), 5);
        assert_eq!(partitions(8).len(), 22);
        for p in partitions(8) {
            assert_eq!(p.n(), 8);
        }
    }

    #[test]
    fn partitions_are_lexicographic() {
        let parts: Vec<Vec<usize>> = partitions(4).iter().map(|p| p.parts().to_vec()).collect();
        assert_eq!(
            parts,
            vec![vec![1, 1, 1, 1], vec![2, 1, 1], vec![2, 2], vec![3, 1], vec![4]]
        );
    }

    #[test]
    fn hook_dimensions() {
        assert_eq!(hook_dimension(&ct(&[2, 1])), BigInt::from(2));
        assert_eq!(hook_dimension(&ct(&[4])), BigInt::from(1));
        assert_eq!(hook_dimension(&ct(&[2, 2])), BigInt::from(2));
        // Dimensions square-sum to n!.
        for n in 1..=8 {
            let total: BigInt = partitions(n)
                .iter()
                .map(|l| {
                    let f = hook_dimension(l);
                    &f * &f
                })
                .sum();
            assert_eq!(total, factorial(n));
        }
    }

    #[test]
    fn characters_at_identity_equal_dimension() {
        for n in 1..=6 {
            let id = CycleType::identity(n);
            for lambda in partitions(n) {
                assert_eq!(
                    BigInt::from(character(&lambda, &id).unwrap()),
                    hook_dimension(&lambda)
                );
            }
        }
    }

    #[test]
    fn small_character_values() {
        // S_3: shapes [1,1,1], [2,1], [3] against classes in the same order.
        let shapes = partitions(3);
        let expect = [[1i64, -1, 1], [2, 0, -1], [1, 1, 1]];
        for (li, lambda) in shapes.iter().enumerate() {
            for (mi, mu) in shapes.iter().enumerate() {
                assert_eq!(character(lambda, mu).unwrap(), expect[li][mi]);
            }
        }
    }

    #[test]
    fn character_rows_are_orthogonal() {
        for n in 1..=8 {
            let table = CharacterTable::new(n).unwrap();
            let sizes: Vec<BigInt> =
                table.shapes().iter().map(|mu| mu.class_size()).collect();
            let nfact = factorial(n);
            for a in 0..table.shapes().len() {
                for b in 0..table.shapes().len() {
                    let mut acc = BigInt::from(0);
                    for (m, size) in sizes.iter().enumerate() {
                        acc += size * BigInt::from(table.value(a, m) * table.value(b, m));
                    }
                    let expect = if a == b { nfact.clone() } else { BigInt::from(0) };
                    assert_eq!(acc, expect, "n={n} rows {a},{b}");
                }
            }
        }
    }

    #[test]
    fn class_sizes_sum_to_group_order() {
        for n in 1..=8 {
            let total: BigInt = partitions(n).iter().map(|p| p.class_size()).sum();
            assert_eq!(total, factorial(n));
        }
    }

    #[test]
    fn weingarten_degree_two_closed_forms() {
        for d in [2u64, 3, 5, 9] {
            let di = d as i64;
            assert_eq!(
                weingarten(&ct(&[1, 1]), 2, d).unwrap(),
                rat(1, di * di - 1)
            );
            assert_eq!(
                weingarten(&ct(&[2]), 2, d).unwrap(),
                rat(-1, di * (di * di - 1))
            );
        }
    }

    #[test]
    fn weingarten_degree_three_closed_forms() {
        // Known S_3 values: (d^2-2), -1, 2 over d(d^2-1)(d^2-4) up to the
        // middle factor's d.
        let d = 5i64;
        let denom = d * (d * d - 1) * (d * d - 4);
        assert_eq!(
            weingarten(&ct(&[1, 1, 1]), 3, d as u64).unwrap(),
            rat(d * d - 2, denom)
        );
        assert_eq!(weingarten(&ct(&[2, 1]), 3, d as u64).unwrap(), rat(-d, denom));
        assert_eq!(weingarten(&ct(&[3]), 3, d as u64).unwrap(), rat(2, denom));
    }

    #[test]
    fn moment_integral_single_entry() {
        for d in [2u64, 4, 7] {
            let v = moment_integral(&[0], &[0], &[0], &[0], d).unwrap();
            assert!((v - 1.0 / d as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn moment_integral_fourth_moment() {
        // E|U00|^4 = 2 / (d (d + 1)); 1/10 at d = 4.
        let v = moment_integral(&[0, 0], &[0, 0], &[0, 0], &[0, 0], 4).unwrap();
        assert!((v - 0.1).abs() < 1e-15);
    }

    #[test]
    fn moment_integral_distinct_indices_reduce_to_wg() {
        for n in 1..=3usize {
            let tup: Vec<usize> = (0..n).collect();
            let d = 5u64;
            let direct = moment_integral(&tup, &tup, &tup, &tup, d).unwrap();
            let wg = rational_to_f64(&weingarten(&CycleType::identity(n), n, d).unwrap());
            assert!((direct - wg).abs() < 1e-15);
        }
    }

    #[test]
    fn twirl_preserves_trace_of_density_input() {
        let d = 4usize;
        let i = ComplexMatrix::identity(d);
        let rho = ComplexMatrix::identity(d).scaled(num_complex::Complex64::new(0.25, 0.0));
        let out = two_moment_twirl(&i, &i, &rho, d).unwrap();
        assert!((out.trace() - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-14);
        // With A = B = I the average is X itself.
        assert!(out.max_abs_diff(&rho) < 1e-14);
    }

    #[test]
    fn asymptotic_slopes() {
        let ds: Vec<u64> = vec![12, 24, 48, 96, 192, 384, 768];
        let r = wg_asymptotic_check(&ct(&[1, 1]), 2, &ds).unwrap();
        assert!(r.passed, "identity slope {:.3} vs {:.3}", r.fitted_slope, r.expected_slope);
        assert!((r.expected_slope + 2.0).abs() < 1e-12);
        let r = wg_asymptotic_check(&ct(&[2]), 2, &ds).unwrap();
        assert!(r.passed);
        assert!((r.expected_slope + 3.0).abs() < 1e-12);
        let r = wg_asymptotic_check(&ct(&[3]), 3, &ds).unwrap();
        assert!(r.passed, "3-cycle slope {:.3} vs {:.3}", r.fitted_slope, r.expected_slope);
        assert!((r.expected_slope + 5.0).abs() < 1e-12);
    }
}

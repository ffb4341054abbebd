//! The translation algebra of a finite space.
//!
//! [`FinitePropOp`] is a sparse matrix indexed by the points of a space whose
//! support is controlled (every nonzero entry sits at finite distance). It
//! carries its propagation, the largest distance spanned by its support.
//! The module also provides the row-sum map Φ, the subalgebra 𝒜 of matrices
//! with constant row and column sums together with its character θ, partial
//! translations, and finite-propagation permutations.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{BigInt, Zero};
use thiserror::Error;

use crate::linalg;
use crate::scalar::{Rational, Scalar, ScalarMode};
use crate::space::{same_space, ControlledSet, FiniteSpace, SpaceError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OpError {
    #[error("operands belong to different spaces")]
    SpaceMismatch,
    #[error("entry ({0},{1}) is at infinite distance")]
    Uncontrolled(usize, usize),
    #[error("point index {0} out of range")]
    PointOutOfRange(usize),
    #[error("vector has length {got}, space has {expected} points")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator does not have constant row and column sums")]
    NotInAX,
    #[error("a nonzero tolerance is meaningless in exact rational mode")]
    ToleranceInExactMode,
    #[error("partial map is not injective: {0} and {1} have the same image")]
    NotInjective(usize, usize),
    #[error("point {0} appears twice in the domain")]
    DuplicateDomainPoint(usize),
    #[error("operator is not a permutation matrix")]
    NotPermutation,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Sparse matrix over the points of a space with controlled support.
#[derive(Debug, Clone)]
pub struct FinitePropOp<S> {
    space: Arc<FiniteSpace>,
    rows: Vec<Vec<(usize, S)>>,
    propagation: Rational,
}

impl<S: Scalar> PartialEq for FinitePropOp<S> {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.rows == other.rows
    }
}

fn propagation_of<S>(space: &FiniteSpace, rows: &[Vec<(usize, S)>]) -> Rational {
    let units = rows
        .iter()
        .enumerate()
        .flat_map(|(x, row)| row.iter().map(move |(y, _)| (x, *y)))
        .map(|(x, y)| space.dist_units(x, y).expect("controlled support"))
        .max()
        .unwrap_or(0);
    space.units_to_rational(units)
}

impl<S: Scalar> FinitePropOp<S> {
    /// Rows must be sorted by column, free of zeros, and controlled.
    fn from_rows(space: Arc<FiniteSpace>, rows: Vec<Vec<(usize, S)>>) -> Self {
        let propagation = propagation_of(&space, &rows);
        FinitePropOp { space, rows, propagation }
    }

    /// Builds an operator from `(row, column, value)` triples. Repeated
    /// positions are summed and zero results dropped.
    pub fn from_entries(
        space: &Arc<FiniteSpace>,
        entries: impl IntoIterator<Item = (usize, usize, S)>,
    ) -> Result<Self, OpError> {
        let n = space.len();
        let mut acc: Vec<BTreeMap<usize, S>> = vec![BTreeMap::new(); n];
        for (x, y, v) in entries {
            if x >= n {
                return Err(OpError::PointOutOfRange(x));
            }
            if y >= n {
                return Err(OpError::PointOutOfRange(y));
            }
            if space.dist_units(x, y).is_none() {
                return Err(OpError::Uncontrolled(x, y));
            }
            let slot = acc[x].entry(y).or_insert_with(S::zero);
            *slot = slot.clone() + v;
        }
        let rows = acc
            .into_iter()
            .map(|row| row.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        Ok(Self::from_rows(space.clone(), rows))
    }

    pub fn zero(space: &Arc<FiniteSpace>) -> Self {
        Self::from_rows(space.clone(), vec![Vec::new(); space.len()])
    }

    pub fn identity(space: &Arc<FiniteSpace>) -> Self {
        Self::diagonal(space, vec![S::one(); space.len()]).expect("length matches")
    }

    pub fn diagonal(space: &Arc<FiniteSpace>, values: Vec<S>) -> Result<Self, OpError> {
        if values.len() != space.len() {
            return Err(OpError::DimensionMismatch { expected: space.len(), got: values.len() });
        }
        let rows = values
            .into_iter()
            .enumerate()
            .map(|(x, v)| if v.is_zero() { Vec::new() } else { vec![(x, v)] })
            .collect();
        Ok(Self::from_rows(space.clone(), rows))
    }

    /// 0/1 operator with ones exactly on the pairs of a controlled set.
    pub fn indicator(set: &ControlledSet) -> Self {
        let rows = (0..set.space().len())
            .map(|x| set.row(x).iter().map(|&y| (y, S::one())).collect())
            .collect();
        Self::from_rows(set.space().clone(), rows)
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn mode(&self) -> ScalarMode {
        S::MODE
    }

    pub fn propagation(&self) -> &Rational {
        &self.propagation
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, x: usize) -> &[(usize, S)] {
        &self.rows[x]
    }

    pub fn get(&self, x: usize, y: usize) -> S {
        match self.rows[x].binary_search_by_key(&y, |(c, _)| *c) {
            Ok(i) => self.rows[x][i].1.clone(),
            Err(_) => S::zero(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &S)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |(y, v)| (x, *y, v)))
    }

    pub fn support(&self) -> ControlledSet {
        ControlledSet::new(&self.space, self.entries().map(|(x, y, _)| (x, y)))
            .expect("support is controlled")
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(x, y, _)| x == y)
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        self.entries().map(|(_, _, v)| v.as_f64().abs()).fold(0.0, f64::max)
    }

    fn check_space(&self, other: &Self) -> Result<(), OpError> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(OpError::SpaceMismatch)
        }
    }

    fn merge(&self, other: &Self, sign: bool) -> Result<Self, OpError> {
        self.check_space(other)?;
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    let next = match (a.get(i), b.get(j)) {
                        (Some((ca, va)), Some((cb, vb))) if ca == cb => {
                            i += 1;
                            j += 1;
                            let v = if sign { va.clone() + vb.clone() } else { va.clone() - vb.clone() };
                            (*ca, v)
                        }
                        (Some((ca, va)), Some((cb, _))) if ca < cb => {
                            i += 1;
                            (*ca, va.clone())
                        }
                        (Some((ca, va)), None) => {
                            i += 1;
                            (*ca, va.clone())
                        }
                        (_, Some((cb, vb))) => {
                            j += 1;
                            (*cb, if sign { vb.clone() } else { -vb.clone() })
                        }
                        (None, None) => unreachable!(),
                    };
                    if !next.1.is_zero() {
                        out.push(next);
                    }
                }
                out
            })
            .collect();
        Ok(Self::from_rows(self.space.clone(), rows))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, OpError> {
        self.merge(other, true)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, OpError> {
        self.merge(other, false)
    }

    /// Matrix product `self · other`. Each output row accumulates in
    /// ascending column order of `self`, so float results are reproducible.
    pub fn try_mul(&self, other: &Self) -> Result<Self, OpError> {
        self.check_space(other)?;
        let n = self.dim();
        let mut scratch: Vec<Option<S>> = vec![None; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut rows = Vec::with_capacity(n);
        for row in &self.rows {
            for (z, a) in row {
                for (y, b) in &other.rows[*z] {
                    let prod = a.clone() * b.clone();
                    match &mut scratch[*y] {
                        Some(v) => *v = v.clone() + prod,
                        slot @ None => {
                            *slot = Some(prod);
                            touched.push(*y);
                        }
                    }
                }
            }
            touched.sort_unstable();
            let mut out = Vec::with_capacity(touched.len());
            for &y in &touched {
                let v = scratch[y].take().expect("touched");
                if !v.is_zero() {
                    out.push((y, v));
                }
            }
            touched.clear();
            rows.push(out);
        }
        Ok(Self::from_rows(self.space.clone(), rows))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut rows: Vec<Vec<(usize, S)>> = vec![Vec::new(); self.dim()];
        for (x, y, v) in self.entries() {
            rows[y].push((x, v.conj()));
        }
        FinitePropOp {
            space: self.space.clone(),
            rows,
            propagation: self.propagation.clone(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(&self.space);
        }
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|(y, v)| (*y, v.clone() * c.clone())).collect())
            .collect();
        FinitePropOp {
            space: self.space.clone(),
            rows,
            propagation: self.propagation.clone(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(&self.space);
        for _ in 0..k {
            out = out.try_mul(self).expect("same space");
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, xi: &[S]) -> Result<Vec<S>, OpError> {
        if xi.len() != self.dim() {
            return Err(OpError::DimensionMismatch { expected: self.dim(), got: xi.len() });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .fold(S::zero(), |acc, (y, v)| acc + v.clone() * xi[*y].clone())
            })
            .collect())
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.entries().all(|(x, y, v)| v.approx_eq(&self.get(y, x).conj(), tol))
    }

    pub fn row_sums(&self) -> Vec<S> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(S::zero(), |acc, (_, v)| acc + v.clone()))
            .collect()
    }

    pub fn column_sums(&self) -> Vec<S> {
        let mut sums = vec![S::zero(); self.dim()];
        for (_, y, v) in self.entries() {
            sums[y] = sums[y].clone() + v.clone();
        }
        sums
    }

    /// Recomputes the propagation from the support.
    pub fn check_invariants(&self) -> bool {
        let sorted = self
            .rows
            .iter()
            .all(|row| row.windows(2).all(|w| w[0].0 < w[1].0) && row.iter().all(|(_, v)| !v.is_zero()));
        sorted
            && self.entries().all(|(x, y, _)| self.space.dist_units(x, y).is_some())
            && propagation_of(&self.space, &self.rows) == self.propagation
    }

    /// Block of the operator on the listed points, as an operator over
    /// `target` whose point `i` is `points[i]`.
    pub(crate) fn extract_block(&self, points: &[usize], target: &Arc<FiniteSpace>) -> Self {
        let mut local = vec![usize::MAX; self.dim()];
        for (i, &x) in points.iter().enumerate() {
            local[x] = i;
        }
        let rows = points
            .iter()
            .map(|&x| {
                self.rows[x]
                    .iter()
                    .filter(|(y, _)| local[*y] != usize::MAX)
                    .map(|(y, v)| (local[*y], v.clone()))
                    .collect::<Vec<_>>()
            })
            .map(|mut row| {
                row.sort_by_key(|(c, _)| *c);
                row
            })
            .collect();
        Self::from_rows(target.clone(), rows)
    }
}

impl FinitePropOp<Rational> {
    /// One-way conversion to float mode.
    pub fn to_float(&self) -> FinitePropOp<f64> {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|(y, v)| (*y, f64::from_rational(v))).collect())
            .collect();
        FinitePropOp {
            space: self.space.clone(),
            rows,
            propagation: self.propagation.clone(),
        }
    }
}

/// Φ: the diagonal operator of row sums.
pub fn phi<S: Scalar>(t: &FinitePropOp<S>) -> FinitePropOp<S> {
    FinitePropOp::diagonal(t.space(), t.row_sums()).expect("one sum per point")
}

/// Returns the common value `c` when every row sum and every column sum
/// equals `c` (within `tol` in float mode).
pub fn in_a_x<S: Scalar>(t: &FinitePropOp<S>, tol: f64) -> Result<Option<S>, OpError> {
    if S::MODE == ScalarMode::Rational && tol != 0.0 {
        return Err(OpError::ToleranceInExactMode);
    }
    let rows = t.row_sums();
    let cols = t.column_sums();
    let c = rows[0].clone();
    let ok = rows.iter().chain(&cols).all(|s| s.approx_eq(&c, tol));
    Ok(ok.then_some(c))
}

/// θ: the common row/column sum of an element of 𝒜.
pub fn theta<S: Scalar>(t: &FinitePropOp<S>) -> Result<S, OpError> {
    in_a_x(t, S::DEFAULT_TOL)?.ok_or(OpError::NotInAX)
}

/// True when `Φ(T) ξ = T ξ` exactly.
pub fn phi_fixes(t: &FinitePropOp<Rational>, xi: &[Rational]) -> Result<bool, OpError> {
    Ok(phi(t).apply(xi)? == t.apply(xi)?)
}

/// Basis of `{ξ : Φ(T) ξ = T ξ for every T in the family}`.
pub fn phi_invariant_vectors(
    space: &Arc<FiniteSpace>,
    family: &[FinitePropOp<Rational>],
) -> Result<Vec<Vec<Rational>>, OpError> {
    let n = space.len();
    let mut constraints: Vec<Vec<Rational>> = Vec::new();
    for t in family {
        if !same_space(space, t.space()) {
            return Err(OpError::SpaceMismatch);
        }
        let d = phi(t).try_sub(t)?;
        for x in 0..n {
            if !d.row(x).is_empty() {
                let mut row = vec![Rational::zero(); n];
                for (y, v) in d.row(x) {
                    row[*y] = v.clone();
                }
                constraints.push(row);
            }
        }
    }
    Ok(linalg::nullspace(&constraints, n))
}

/// Injective partial map `t : A → B` with controlled graph.
#[derive(Debug, Clone)]
pub struct PartialTranslation {
    space: Arc<FiniteSpace>,
    /// `y ↦ t(y)`.
    map: BTreeMap<usize, usize>,
    propagation: Rational,
}

impl PartialTranslation {
    /// `pairs` lists `(y, t(y))`.
    pub fn new(
        space: &Arc<FiniteSpace>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, OpError> {
        let n = space.len();
        let mut map = BTreeMap::new();
        let mut preimage: BTreeMap<usize, usize> = BTreeMap::new();
        let mut max_units = 0;
        for (y, x) in pairs {
            if y >= n {
                return Err(OpError::PointOutOfRange(y));
            }
            if x >= n {
                return Err(OpError::PointOutOfRange(x));
            }
            let units = space.dist_units(x, y).ok_or(OpError::Uncontrolled(x, y))?;
            if map.insert(y, x).is_some() {
                return Err(OpError::DuplicateDomainPoint(y));
            }
            if let Some(other) = preimage.insert(x, y) {
                return Err(OpError::NotInjective(other, y));
            }
            max_units = max_units.max(units);
        }
        Ok(PartialTranslation {
            space: space.clone(),
            map,
            propagation: space.units_to_rational(max_units),
        })
    }

    pub fn identity_on(space: &Arc<FiniteSpace>, subset: impl IntoIterator<Item = usize>) -> Result<Self, OpError> {
        Self::new(space, subset.into_iter().map(|x| (x, x)))
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn propagation(&self) -> &Rational {
        &self.propagation
    }

    pub fn apply(&self, y: usize) -> Option<usize> {
        self.map.get(&y).copied()
    }

    /// `(y, t(y))` in ascending `y`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.map.iter().map(|(&y, &x)| (y, x))
    }

    pub fn domain(&self) -> Vec<usize> {
        self.map.keys().copied().collect()
    }

    pub fn range(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.map.values().copied().collect();
        r.sort_unstable();
        r
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn inverse(&self) -> PartialTranslation {
        PartialTranslation {
            space: self.space.clone(),
            map: self.map.iter().map(|(&y, &x)| (x, y)).collect(),
            propagation: self.propagation.clone(),
        }
    }

    pub fn to_op<S: Scalar>(&self) -> FinitePropOp<S> {
        translation_to_op(self)
    }
}

/// The partial isometry `v` with `v_{x,y} = 1` iff `t(y) = x`.
pub fn translation_to_op<S: Scalar>(t: &PartialTranslation) -> FinitePropOp<S> {
    FinitePropOp::from_entries(t.space(), t.pairs().map(|(y, x)| (x, y, S::one())))
        .expect("graph of a partial translation is controlled")
}

/// `‖v ξ − v v* ξ‖₂` in the natural representation on ℓ²(X).
pub fn invariance_defect(t: &PartialTranslation, xi: &[f64]) -> Result<f64, OpError> {
    let v: FinitePropOp<f64> = t.to_op();
    let v_xi = v.apply(xi)?;
    let proj_xi = v.apply(&v.adjoint().apply(xi)?)?;
    Ok(v_xi
        .iter()
        .zip(&proj_xi)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Finite-propagation permutation matrix, stored as the image of each
/// column: `A_{image[y], y} = 1`.
#[derive(Debug, Clone)]
pub struct PermutationOp {
    space: Arc<FiniteSpace>,
    image: Vec<usize>,
}

impl PartialEq for PermutationOp {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.image == other.image
    }
}

impl PermutationOp {
    pub fn identity(space: &Arc<FiniteSpace>) -> Self {
        PermutationOp {
            space: space.clone(),
            image: (0..space.len()).collect(),
        }
    }

    pub fn from_images(space: &Arc<FiniteSpace>, image: Vec<usize>) -> Result<Self, OpError> {
        let n = space.len();
        if image.len() != n {
            return Err(OpError::DimensionMismatch { expected: n, got: image.len() });
        }
        let mut hit = vec![false; n];
        for (y, &x) in image.iter().enumerate() {
            if x >= n {
                return Err(OpError::PointOutOfRange(x));
            }
            if hit[x] {
                return Err(OpError::NotPermutation);
            }
            hit[x] = true;
            if space.dist_units(x, y).is_none() {
                return Err(OpError::Uncontrolled(x, y));
            }
        }
        Ok(PermutationOp { space: space.clone(), image })
    }

    /// Accepts operators with 0/1 entries and exactly one 1 per row and column.
    pub fn from_op<S: Scalar>(op: &FinitePropOp<S>) -> Result<Self, OpError> {
        let n = op.dim();
        let mut image = vec![usize::MAX; n];
        for (x, y, v) in op.entries() {
            if *v != S::one() || image[y] != usize::MAX {
                return Err(OpError::NotPermutation);
            }
            image[y] = x;
        }
        if image.contains(&usize::MAX) {
            return Err(OpError::NotPermutation);
        }
        Self::from_images(op.space(), image)
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn image(&self, y: usize) -> usize {
        self.image[y]
    }

    pub fn images(&self) -> &[usize] {
        &self.image
    }

    /// Symmetric as a matrix, equivalently an involution.
    pub fn is_symmetric(&self) -> bool {
        self.image.iter().enumerate().all(|(y, &x)| self.image[x] == y)
    }

    pub fn fixed_points(&self) -> impl Iterator<Item = usize> + '_ {
        self.image.iter().enumerate().filter(|(y, x)| y == *x).map(|(y, _)| y)
    }

    pub fn to_op<S: Scalar>(&self) -> FinitePropOp<S> {
        FinitePropOp::from_entries(&self.space, self.image.iter().enumerate().map(|(y, &x)| (x, y, S::one())))
            .expect("permutation is controlled")
    }
}

/// Constant vector on a component as exact rationals; handy for tests and
/// invariance checks.
pub fn component_indicator(space: &FiniteSpace, m: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); space.len()];
    for &x in space.component_points(m) {
        v[x] = Rational::from_integer(BigInt::from(1));
    }
    v
}

//! Finite truncations of bounded-geometry metric spaces.
//!
//! A [`FiniteSpace`] is a finite set of named points with an extended metric:
//! distances are nonnegative rationals or [`Dist::Infinite`], and the classes
//! of points at mutual finite distance are the coarse components. Distances
//! are only materialised inside components; two points in different
//! components are at infinite distance.
//!
//! Every finite space with finitely many components is monogenic, since
//! `Tube(R_max)` already contains every controlled set. [`is_generating`]
//! decides the sharper question of whether a given controlled set generates.

mod generating;
mod union_find;

use std::collections::{BinaryHeap, VecDeque};
use std::cmp::Reverse;
use std::fmt;
use std::ops::Add;
use std::sync::{Arc, OnceLock};

use num::{BigInt, Integer, One, ToPrimitive, Zero};
use thiserror::Error;

use crate::scalar::{format_rational, Rational};

pub use generating::{default_n_max, is_generating, Generation};
pub use union_find::DisjointSets;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("space has no points")]
    Empty,
    #[error("distance matrix must be square with one row per point")]
    NotSquare,
    #[error("d({0},{0}) must be 0")]
    NonzeroDiagonal(usize),
    #[error("distinct points {0} and {1} are at distance 0")]
    ZeroDistance(usize, usize),
    #[error("d({0},{1}) differs from d({1},{0})")]
    Asymmetric(usize, usize),
    #[error("negative distance between {0} and {1}")]
    NegativeDistance(usize, usize),
    #[error("triangle inequality fails for points {0}, {1}, {2}")]
    Triangle(usize, usize, usize),
    #[error("edge weight between {0} and {1} must be positive")]
    NonPositiveWeight(usize, usize),
    #[error("point index {0} out of range")]
    PointOutOfRange(usize),
    #[error("self-loop at point {0}")]
    SelfLoop(usize),
    #[error("distances do not fit the fixed-point representation")]
    ScaleOverflow,
    #[error("operands belong to different spaces")]
    SpaceMismatch,
    #[error("pair ({0},{1}) is at infinite distance")]
    InfinitePair(usize, usize),
    #[error("radius must be nonnegative")]
    NegativeRadius,
    #[error("n_max must be at least 1")]
    ZeroExponentBound,
    #[error("component id {0} out of range")]
    InvalidComponent(usize),
}

/// Extended nonnegative distance. `Infinite` sorts above every finite value
/// and absorbs addition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dist {
    Finite(Rational),
    Infinite,
}

impl Dist {
    pub fn zero() -> Self {
        Dist::Finite(Rational::zero())
    }

    pub fn from_int(v: i64) -> Self {
        Dist::Finite(Rational::from_integer(BigInt::from(v)))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Dist::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Dist::Finite(r) => Some(r),
            Dist::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Dist::Finite(r) => crate::scalar::ratio_to_f64(r),
            Dist::Infinite => f64::INFINITY,
        }
    }
}

impl Add for Dist {
    type Output = Dist;

    fn add(self, rhs: Dist) -> Dist {
        match (self, rhs) {
            (Dist::Finite(a), Dist::Finite(b)) => Dist::Finite(a + b),
            _ => Dist::Infinite,
        }
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dist::Finite(r) => f.write_str(&format_rational(r)),
            Dist::Infinite => f.write_str("inf"),
        }
    }
}

/// One block of a graph description: named points and weighted edges between
/// block-local indices. Blocks are joined by infinite distance.
#[derive(Debug, Clone, Default)]
pub struct GraphBlock {
    pub name: String,
    pub points: Vec<String>,
    pub edges: Vec<(usize, usize, Rational)>,
}

impl GraphBlock {
    pub fn new(name: impl Into<String>) -> Self {
        GraphBlock {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Unit-weight graph on points named `0..n`.
    pub fn unit(name: impl Into<String>, n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        GraphBlock {
            name: name.into(),
            points: (0..n).map(|i| i.to_string()).collect(),
            edges: edges.into_iter().map(|(u, v)| (u, v, Rational::one())).collect(),
        }
    }

    pub fn point(&mut self, name: &str) -> usize {
        match self.points.iter().position(|p| p == name) {
            Some(i) => i,
            None => {
                self.points.push(name.to_string());
                self.points.len() - 1
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Component {
    points: Vec<usize>,
    /// Row-major local distances in units of `1/scale`.
    dist: Vec<u64>,
}

impl Component {
    fn local(&self, i: usize, j: usize) -> u64 {
        self.dist[i * self.points.len() + j]
    }
}

#[derive(Debug)]
pub struct FiniteSpace {
    name: String,
    point_names: Vec<String>,
    scale: u64,
    component_of: Vec<usize>,
    local_index: Vec<usize>,
    components: Vec<Component>,
    component_spaces: OnceLock<Vec<Arc<FiniteSpace>>>,
}

impl PartialEq for FiniteSpace {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.point_names == other.point_names
            && self.scale == other.scale
            && self.components == other.components
    }
}

impl Eq for FiniteSpace {}

/// True when both handles denote the same space.
pub fn same_space(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn lcm_scale<'a>(weights: impl Iterator<Item = &'a Rational>) -> Result<u64, SpaceError> {
    let mut l = BigInt::one();
    for w in weights {
        l = l.lcm(w.denom());
    }
    l.to_u64().ok_or(SpaceError::ScaleOverflow)
}

fn to_units(r: &Rational, scale: u64) -> Result<u64, SpaceError> {
    let scaled = r * Rational::from_integer(BigInt::from(scale));
    debug_assert!(scaled.is_integer());
    scaled.to_integer().to_u64().filter(|&u| u != u64::MAX).ok_or(SpaceError::ScaleOverflow)
}

impl FiniteSpace {
    fn assemble(
        name: String,
        point_names: Vec<String>,
        scale: u64,
        components: Vec<Component>,
    ) -> Self {
        let n = point_names.len();
        let mut component_of = vec![0; n];
        let mut local_index = vec![0; n];
        for (m, c) in components.iter().enumerate() {
            for (i, &x) in c.points.iter().enumerate() {
                component_of[x] = m;
                local_index[x] = i;
            }
        }
        FiniteSpace {
            name,
            point_names,
            scale,
            component_of,
            local_index,
            components,
            component_spaces: OnceLock::new(),
        }
    }

    /// Builds the path metric of a weighted graph; blocks are placed at
    /// infinite distance from one another.
    pub fn from_blocks(name: impl Into<String>, blocks: Vec<GraphBlock>) -> Result<Self, SpaceError> {
        let total: usize = blocks.iter().map(|b| b.points.len()).sum();
        if total == 0 {
            return Err(SpaceError::Empty);
        }
        let scale = lcm_scale(blocks.iter().flat_map(|b| b.edges.iter().map(|e| &e.2)))?;

        let mut point_names = Vec::with_capacity(total);
        let mut edges: Vec<(usize, usize, u64)> = Vec::new();
        for block in &blocks {
            let offset = point_names.len();
            let n = block.points.len();
            for (u, v, w) in &block.edges {
                if *u >= n {
                    return Err(SpaceError::PointOutOfRange(offset + u));
                }
                if *v >= n {
                    return Err(SpaceError::PointOutOfRange(offset + v));
                }
                if u == v {
                    return Err(SpaceError::SelfLoop(offset + u));
                }
                if *w <= Rational::zero() {
                    return Err(SpaceError::NonPositiveWeight(offset + u, offset + v));
                }
                edges.push((offset + u, offset + v, to_units(w, scale)?));
            }
            point_names.extend(block.points.iter().cloned());
        }

        let mut ds = DisjointSets::new(total);
        for &(u, v, _) in &edges {
            ds.union(u, v);
        }
        let classes = ds.classes();
        let mut component_of = vec![0; total];
        let mut local = vec![0; total];
        for (m, class) in classes.iter().enumerate() {
            for (i, &x) in class.iter().enumerate() {
                component_of[x] = m;
                local[x] = i;
            }
        }
        let mut adjacency: Vec<Vec<Vec<(usize, u64)>>> =
            classes.iter().map(|c| vec![Vec::new(); c.len()]).collect();
        for &(u, v, w) in &edges {
            let m = component_of[u];
            adjacency[m][local[u]].push((local[v], w));
            adjacency[m][local[v]].push((local[u], w));
        }
        let components = classes
            .into_iter()
            .zip(adjacency)
            .map(|(points, adj)| {
                let dist = shortest_paths(&adj)?;
                Ok(Component { points, dist })
            })
            .collect::<Result<Vec<_>, SpaceError>>()?;

        let name = name.into();
        Ok(Self::assemble(name, point_names, scale, components))
    }

    /// Unit-weight graph on points `0..n`.
    pub fn from_graph(
        name: impl Into<String>,
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, SpaceError> {
        let name = name.into();
        Self::from_blocks(name.clone(), vec![GraphBlock::unit(name, n, edges)])
    }

    /// Builds a space from an explicit extended distance matrix, validating
    /// the metric axioms.
    #[allow(clippy::needless_range_loop)]
    pub fn from_distances(
        name: impl Into<String>,
        point_names: Option<Vec<String>>,
        matrix: &[Vec<Dist>],
    ) -> Result<Self, SpaceError> {
        let n = matrix.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        if matrix.iter().any(|row| row.len() != n) {
            return Err(SpaceError::NotSquare);
        }
        let point_names = match point_names {
            Some(names) if names.len() != n => return Err(SpaceError::NotSquare),
            Some(names) => names,
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        for x in 0..n {
            if matrix[x][x] != Dist::zero() {
                return Err(SpaceError::NonzeroDiagonal(x));
            }
            for y in 0..n {
                if matrix[x][y] != matrix[y][x] {
                    return Err(SpaceError::Asymmetric(x, y));
                }
                if let Dist::Finite(d) = &matrix[x][y] {
                    if *d < Rational::zero() {
                        return Err(SpaceError::NegativeDistance(x, y));
                    }
                    if x != y && d.is_zero() {
                        return Err(SpaceError::ZeroDistance(x, y));
                    }
                }
            }
        }
        // Triangle inequality with infinity absorbing. This also makes
        // finite distance an equivalence relation.
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if matrix[x][z] > matrix[x][y].clone() + matrix[y][z].clone() {
                        return Err(SpaceError::Triangle(x, y, z));
                    }
                }
            }
        }
        let scale = lcm_scale(matrix.iter().flatten().filter_map(Dist::finite))?;
        let mut ds = DisjointSets::new(n);
        for x in 0..n {
            for y in (x + 1)..n {
                if matrix[x][y].is_finite() {
                    ds.union(x, y);
                }
            }
        }
        let components = ds
            .classes()
            .into_iter()
            .map(|points| {
                let mut dist = Vec::with_capacity(points.len() * points.len());
                for &x in &points {
                    for &y in &points {
                        dist.push(to_units(matrix[x][y].finite().expect("finite within class"), scale)?);
                    }
                }
                Ok(Component { points, dist })
            })
            .collect::<Result<Vec<_>, SpaceError>>()?;
        Ok(Self::assemble(name.into(), point_names, scale, components))
    }

    /// Disjoint union with infinite distance between the parts.
    pub fn disjoint_union(name: impl Into<String>, parts: &[&FiniteSpace]) -> Result<Self, SpaceError> {
        if parts.iter().all(|p| p.point_names.is_empty()) {
            return Err(SpaceError::Empty);
        }
        let mut l = BigInt::one();
        for p in parts {
            l = l.lcm(&BigInt::from(p.scale));
        }
        let scale = l.to_u64().ok_or(SpaceError::ScaleOverflow)?;
        let mut point_names = Vec::new();
        let mut components = Vec::new();
        for p in parts {
            let offset = point_names.len();
            let factor = scale / p.scale;
            for c in &p.components {
                let dist = c
                    .dist
                    .iter()
                    .map(|&d| d.checked_mul(factor).filter(|&u| u != u64::MAX).ok_or(SpaceError::ScaleOverflow))
                    .collect::<Result<Vec<_>, _>>()?;
                components.push(Component {
                    points: c.points.iter().map(|&x| x + offset).collect(),
                    dist,
                });
            }
            point_names.extend(p.point_names.iter().cloned());
        }
        Ok(Self::assemble(name.into(), point_names, scale, components))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.point_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_names.is_empty()
    }

    pub fn point_name(&self, x: usize) -> &str {
        &self.point_names[x]
    }

    pub fn point_names(&self) -> &[String] {
        &self.point_names
    }

    /// First point carrying `name`.
    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.point_names.iter().position(|p| p == name)
    }

    pub fn dist(&self, x: usize, y: usize) -> Dist {
        match self.dist_units(x, y) {
            Some(u) => Dist::Finite(Rational::new(BigInt::from(u), BigInt::from(self.scale))),
            None => Dist::Infinite,
        }
    }

    /// Distance in fixed-point units of `1 / scale()`, `None` for infinity.
    pub fn dist_units(&self, x: usize, y: usize) -> Option<u64> {
        let m = self.component_of[x];
        if m != self.component_of[y] {
            return None;
        }
        Some(self.components[m].local(self.local_index[x], self.local_index[y]))
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// Largest unit count `u` with `u / scale <= r`.
    pub fn radius_units(&self, r: &Rational) -> Result<u64, SpaceError> {
        if *r < Rational::zero() {
            return Err(SpaceError::NegativeRadius);
        }
        let scaled = (r * Rational::from_integer(BigInt::from(self.scale))).floor();
        Ok(scaled.to_integer().to_u64().unwrap_or(u64::MAX - 1))
    }

    pub fn units_to_rational(&self, units: u64) -> Rational {
        Rational::new(BigInt::from(units), BigInt::from(self.scale))
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_of(&self, x: usize) -> usize {
        self.component_of[x]
    }

    /// Position of `x` inside its component's sorted point list.
    pub fn local_index(&self, x: usize) -> usize {
        self.local_index[x]
    }

    pub fn component_points(&self, m: usize) -> &[usize] {
        &self.components[m].points
    }

    pub fn component_sizes(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.points.len()).collect()
    }

    /// The coarse components, each a sorted point list, ordered by their
    /// smallest point.
    pub fn coarse_components(&self) -> Vec<Vec<usize>> {
        self.components.iter().map(|c| c.points.clone()).collect()
    }

    /// Largest finite distance occurring in the space.
    pub fn max_finite_distance(&self) -> Rational {
        let units = self
            .components
            .iter()
            .flat_map(|c| c.dist.iter().copied())
            .max()
            .unwrap_or(0);
        self.units_to_rational(units)
    }

    /// `|B(x, r)|` for every point.
    pub fn ball_sizes(&self, r: &Rational) -> Result<Vec<usize>, SpaceError> {
        let ru = self.radius_units(r)?;
        Ok((0..self.len())
            .map(|x| {
                let c = &self.components[self.component_of[x]];
                let i = self.local_index[x];
                let k = c.points.len();
                c.dist[i * k..(i + 1) * k].iter().filter(|&&d| d <= ru).count()
            })
            .collect())
    }

    /// Points of `x`'s component within distance `r` of `x`, ascending.
    pub fn ball(&self, x: usize, r: &Rational) -> Result<Vec<usize>, SpaceError> {
        let ru = self.radius_units(r)?;
        Ok(self.ball_units(x, ru))
    }

    pub(crate) fn ball_units(&self, x: usize, ru: u64) -> Vec<usize> {
        let c = &self.components[self.component_of[x]];
        let i = self.local_index[x];
        let k = c.points.len();
        c.points
            .iter()
            .zip(&c.dist[i * k..(i + 1) * k])
            .filter(|(_, &d)| d <= ru)
            .map(|(&y, _)| y)
            .collect()
    }

    /// Component `m` as a space of its own, with points renumbered in
    /// ascending order. Handles are cached, so repeated calls share one `Arc`.
    pub fn component_space(&self, m: usize) -> Result<Arc<FiniteSpace>, SpaceError> {
        let spaces = self.component_spaces.get_or_init(|| {
            self.components
                .iter()
                .enumerate()
                .map(|(idx, c)| {
                    let names = c.points.iter().map(|&x| self.point_names[x].clone()).collect();
                    let local = Component {
                        points: (0..c.points.len()).collect(),
                        dist: c.dist.clone(),
                    };
                    Arc::new(Self::assemble(
                        format!("{}#{}", self.name, idx),
                        names,
                        self.scale,
                        vec![local],
                    ))
                })
                .collect()
        });
        spaces.get(m).cloned().ok_or(SpaceError::InvalidComponent(m))
    }

    /// Re-verifies the metric axioms and the component structure.
    pub fn check_invariants(&self) -> Result<(), SpaceError> {
        let n = self.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        for c in &self.components {
            let k = c.points.len();
            for i in 0..k {
                if c.local(i, i) != 0 {
                    return Err(SpaceError::NonzeroDiagonal(c.points[i]));
                }
                for j in 0..k {
                    if c.local(i, j) != c.local(j, i) {
                        return Err(SpaceError::Asymmetric(c.points[i], c.points[j]));
                    }
                    if i != j && c.local(i, j) == 0 {
                        return Err(SpaceError::ZeroDistance(c.points[i], c.points[j]));
                    }
                    for l in 0..k {
                        if c.local(i, l) > c.local(i, j).saturating_add(c.local(j, l)) {
                            return Err(SpaceError::Triangle(c.points[i], c.points[j], c.points[l]));
                        }
                    }
                }
            }
        }
        let mut seen = vec![false; n];
        for (m, c) in self.components.iter().enumerate() {
            for &x in &c.points {
                if seen[x] || self.component_of[x] != m {
                    return Err(SpaceError::InvalidComponent(m));
                }
                seen[x] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(SpaceError::InvalidComponent(self.components.len()));
        }
        Ok(())
    }
}

fn shortest_paths(adj: &[Vec<(usize, u64)>]) -> Result<Vec<u64>, SpaceError> {
    let k = adj.len();
    let mut dist = vec![u64::MAX; k * k];
    let uniform = {
        let mut ws = adj.iter().flatten().map(|&(_, w)| w);
        match ws.next() {
            None => Some(1),
            Some(first) => ws.all(|w| w == first).then_some(first),
        }
    };
    for s in 0..k {
        let row = &mut dist[s * k..(s + 1) * k];
        row[s] = 0;
        if let Some(w) = uniform {
            let mut queue = VecDeque::from([s]);
            let mut hops = vec![u64::MAX; k];
            hops[s] = 0;
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &adj[u] {
                    if hops[v] == u64::MAX {
                        hops[v] = hops[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            for (d, h) in row.iter_mut().zip(hops) {
                *d = h.checked_mul(w).filter(|&u| u != u64::MAX).ok_or(SpaceError::ScaleOverflow)?;
            }
        } else {
            let mut heap = BinaryHeap::from([Reverse((0u64, s))]);
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > row[u] {
                    continue;
                }
                for &(v, w) in &adj[u] {
                    let nd = d.checked_add(w).filter(|&x| x != u64::MAX).ok_or(SpaceError::ScaleOverflow)?;
                    if nd < row[v] {
                        row[v] = nd;
                        heap.push(Reverse((nd, v)));
                    }
                }
            }
        }
    }
    Ok(dist)
}

/// A finite set of ordered pairs at finite distance, with its diameter.
#[derive(Debug, Clone)]
pub struct ControlledSet {
    space: Arc<FiniteSpace>,
    rows: Vec<Vec<usize>>,
    diameter: Rational,
}

impl PartialEq for ControlledSet {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.rows == other.rows
    }
}

impl ControlledSet {
    pub fn new(
        space: &Arc<FiniteSpace>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, SpaceError> {
        let n = space.len();
        let mut rows = vec![Vec::new(); n];
        for (x, y) in pairs {
            if x >= n {
                return Err(SpaceError::PointOutOfRange(x));
            }
            if y >= n {
                return Err(SpaceError::PointOutOfRange(y));
            }
            if space.dist_units(x, y).is_none() {
                return Err(SpaceError::InfinitePair(x, y));
            }
            rows[x].push(y);
        }
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Self::from_rows(space.clone(), rows))
    }

    fn from_rows(space: Arc<FiniteSpace>, rows: Vec<Vec<usize>>) -> Self {
        let max_units = rows
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |&y| (x, y)))
            .map(|(x, y)| space.dist_units(x, y).expect("controlled pair"))
            .max()
            .unwrap_or(0);
        let diameter = space.units_to_rational(max_units);
        ControlledSet { space, rows, diameter }
    }

    pub fn diagonal(space: &Arc<FiniteSpace>) -> Self {
        Self::from_rows(space.clone(), (0..space.len()).map(|x| vec![x]).collect())
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn diameter(&self) -> &Rational {
        &self.diameter
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.rows.get(x).is_some_and(|row| row.binary_search(&y).is_ok())
    }

    pub fn row(&self, x: usize) -> &[usize] {
        &self.rows[x]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |&y| (x, y)))
    }

    pub fn is_subset(&self, other: &ControlledSet) -> bool {
        self.pairs().all(|(x, y)| other.contains(x, y))
    }

    /// `{(x, y) : (x, z) ∈ self, (z, y) ∈ other}`.
    pub fn compose(&self, other: &ControlledSet) -> Result<ControlledSet, SpaceError> {
        if !same_space(&self.space, &other.space) {
            return Err(SpaceError::SpaceMismatch);
        }
        let n = self.space.len();
        let mut mark = vec![usize::MAX; n];
        let mut rows = Vec::with_capacity(n);
        for (x, row) in self.rows.iter().enumerate() {
            let mut out = Vec::new();
            for &z in row {
                for &y in &other.rows[z] {
                    if mark[y] != x {
                        mark[y] = x;
                        out.push(y);
                    }
                }
            }
            out.sort_unstable();
            rows.push(out);
        }
        Ok(Self::from_rows(self.space.clone(), rows))
    }

    /// The set with its diagonal pairs removed.
    pub fn without_diagonal(&self) -> ControlledSet {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(x, row)| row.iter().copied().filter(|&y| y != x).collect())
            .collect();
        Self::from_rows(self.space.clone(), rows)
    }

    /// Transposed set `{(y, x)}`.
    pub fn inverse(&self) -> ControlledSet {
        let mut rows = vec![Vec::new(); self.space.len()];
        for (x, y) in self.pairs() {
            rows[y].push(x);
        }
        Self::from_rows(self.space.clone(), rows)
    }
}

/// `Tube(R) = {(x, y) : d(x, y) <= R}`.
pub fn tube(space: &Arc<FiniteSpace>, r: &Rational) -> Result<ControlledSet, SpaceError> {
    let ru = space.radius_units(r)?;
    let rows = (0..space.len()).map(|x| space.ball_units(x, ru)).collect();
    Ok(ControlledSet::from_rows(space.clone(), rows))
}

/// Union-find over all finite-distance pairs. Agrees with the partition the
/// space was built with.
pub fn coarse_components(space: &FiniteSpace) -> Vec<Vec<usize>> {
    let n = space.len();
    let mut ds = DisjointSets::new(n);
    for x in 0..n {
        for y in (x + 1)..n {
            if space.dist_units(x, y).is_some() {
                ds.union(x, y);
            }
        }
    }
    ds.classes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn cycle(n: usize) -> Arc<FiniteSpace> {
        Arc::new(FiniteSpace::from_graph("cycle", n, (0..n).map(|i| (i, (i + 1) % n))).unwrap())
    }

    fn int(v: i64) -> Rational {
        rational(v, 1)
    }

    #[test]
    fn two_points_at_infinity() {
        let m = vec![vec![Dist::zero(), Dist::Infinite], vec![Dist::Infinite, Dist::zero()]];
        let s = Arc::new(FiniteSpace::from_distances("pair", None, &m).unwrap());
        let t = tube(&s, &int(5)).unwrap();
        assert_eq!(t.pairs().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
        assert_eq!(s.component_count(), 2);
    }

    #[test]
    fn triangle_tube_is_everything() {
        let s = cycle(3);
        let t = tube(&s, &int(1)).unwrap();
        assert_eq!(t.len(), 9);
        assert_eq!(*t.diameter(), int(1));
    }

    #[test]
    fn c4_tube_one() {
        let s = cycle(4);
        let t = tube(&s, &int(1)).unwrap();
        assert_eq!(t.len(), 12);
        assert_eq!(s.max_finite_distance(), int(2));
    }

    #[test]
    fn compose_examples() {
        let s = cycle(4);
        let e = ControlledSet::new(&s, [(0, 1)]).unwrap();
        let f = ControlledSet::new(&s, [(1, 2)]).unwrap();
        assert_eq!(e.compose(&f).unwrap().pairs().collect::<Vec<_>>(), vec![(0, 2)]);
        let t = tube(&s, &int(1)).unwrap();
        assert_eq!(ControlledSet::diagonal(&s).compose(&t).unwrap(), t);
    }

    #[test]
    fn compose_tubes_on_c6() {
        let s = cycle(6);
        let t1 = tube(&s, &int(1)).unwrap();
        let composed = t1.compose(&t1).unwrap();
        // Brute force: (x, y) is in Tube(1)∘Tube(1) iff some z is within 1 of both.
        let mut expected = Vec::new();
        for x in 0..6 {
            for y in 0..6 {
                if (0..6).any(|z| t1.contains(x, z) && t1.contains(z, y)) {
                    expected.push((x, y));
                }
            }
        }
        assert_eq!(composed.pairs().collect::<Vec<_>>(), expected);
        assert_eq!(composed, tube(&s, &int(2)).unwrap());
    }

    #[test]
    fn compose_rejects_foreign_space() {
        let a = tube(&cycle(4), &int(1)).unwrap();
        let b = tube(&cycle(5), &int(1)).unwrap();
        assert_eq!(a.compose(&b), Err(SpaceError::SpaceMismatch));
    }

    #[test]
    fn controlled_set_rejects_infinite_pair() {
        let block = |name: &str| GraphBlock::unit(name, 2, [(0, 1)]);
        let s = Arc::new(FiniteSpace::from_blocks("two", vec![block("a"), block("b")]).unwrap());
        assert_eq!(ControlledSet::new(&s, [(0, 2)]), Err(SpaceError::InfinitePair(0, 2)));
    }

    #[test]
    fn components_of_two_triangles() {
        let tri = |name: &str| GraphBlock::unit(name, 3, [(0, 1), (1, 2), (2, 0)]);
        let s = FiniteSpace::from_blocks("tt", vec![tri("a"), tri("b")]).unwrap();
        assert_eq!(coarse_components(&s), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(s.coarse_components(), coarse_components(&s));
        assert_eq!(s.dist(0, 4), Dist::Infinite);
    }

    #[test]
    fn weighted_paths_use_dijkstra() {
        let mut b = GraphBlock::new("w");
        let (a, bb, c) = (b.point("a"), b.point("b"), b.point("c"));
        b.edges.push((a, bb, rational(1, 3)));
        b.edges.push((bb, c, rational(1, 2)));
        b.edges.push((a, c, int(1)));
        let s = FiniteSpace::from_blocks("w", vec![b]).unwrap();
        assert_eq!(s.dist(0, 2), Dist::Finite(rational(5, 6)));
        assert_eq!(s.scale(), 6);
        s.check_invariants().unwrap();
        let t = tube(&Arc::new(s), &rational(5, 6)).unwrap();
        assert!(t.contains(0, 2));
    }

    #[test]
    fn rejects_bad_metrics() {
        let one = Dist::from_int(1);
        let three = Dist::from_int(3);
        let m = vec![
            vec![Dist::zero(), one.clone(), three.clone()],
            vec![one.clone(), Dist::zero(), one.clone()],
            vec![three, one, Dist::zero()],
        ];
        assert!(matches!(FiniteSpace::from_distances("bad", None, &m), Err(SpaceError::Triangle(..))));
        let m = vec![vec![Dist::zero(), Dist::from_int(1)], vec![Dist::from_int(2), Dist::zero()]];
        assert_eq!(FiniteSpace::from_distances("asym", None, &m), Err(SpaceError::Asymmetric(0, 1)));
        assert_eq!(FiniteSpace::from_graph("e", 0, []), Err(SpaceError::Empty));
        assert_eq!(FiniteSpace::from_graph("l", 2, [(1, 1)]), Err(SpaceError::SelfLoop(1)));
    }

    #[test]
    fn component_space_is_cached() {
        let tri = |name: &str| GraphBlock::unit(name, 3, [(0, 1), (1, 2)]);
        let s = FiniteSpace::from_blocks("tt", vec![tri("a"), tri("b")]).unwrap();
        let c1 = s.component_space(1).unwrap();
        assert!(Arc::ptr_eq(&c1, &s.component_space(1).unwrap()));
        assert_eq!(c1.len(), 3);
        assert_eq!(c1.dist(0, 2), Dist::from_int(2));
        assert_eq!(c1.point_name(0), "0");
        assert_eq!(s.component_space(2).unwrap_err(), SpaceError::InvalidComponent(2));
    }

    #[test]
    fn ball_profile() {
        let s = cycle(6);
        assert_eq!(s.ball_sizes(&int(1)).unwrap(), vec![3; 6]);
        assert_eq!(s.ball(0, &int(1)).unwrap(), vec![0, 1, 5]);
        assert_eq!(s.ball_sizes(&int(-1)), Err(SpaceError::NegativeRadius));
    }

    #[test]
    fn disjoint_union_rescales() {
        let mut b = GraphBlock::new("half");
        let (p, q) = (b.point("p"), b.point("q"));
        b.edges.push((p, q, rational(1, 2)));
        let half = FiniteSpace::from_blocks("half", vec![b]).unwrap();
        let c3 = FiniteSpace::from_graph("c3", 3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let u = FiniteSpace::disjoint_union("u", &[&half, &c3]).unwrap();
        assert_eq!(u.dist(0, 1), Dist::Finite(rational(1, 2)));
        assert_eq!(u.dist(2, 4), Dist::from_int(1));
        assert_eq!(u.dist(1, 2), Dist::Infinite);
        u.check_invariants().unwrap();
    }
}

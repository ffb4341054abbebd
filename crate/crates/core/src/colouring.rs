//! Edge colourings of tube graphs and the decomposition of partial
//! translations into permutations.
//!
//! The graph of a space at radius `R` joins distinct points at distance at
//! most `R`. [`edge_colouring`] colours it with at most `Δ + 1` colours using
//! the Misra–Gries fan-and-rotate procedure. Each colour class is a matching;
//! completing it with fixed points gives a symmetric permutation `A_i`, and
//! every partial translation supported in the tube is `Σ f_i A_i` for
//! diagonal idempotents `f_i` ([`decompose_translation`]).

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{Rational, Scalar};
use crate::space::{same_space, FiniteSpace, SpaceError};
use crate::transalg::{FinitePropOp, PartialTranslation, PermutationOp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColouringError {
    #[error("pair ({0},{1}) of the translation lies outside the coloured tube")]
    SupportOutsideTube(usize, usize),
    #[error("translation and colouring belong to different spaces")]
    SpaceMismatch,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

const NONE: usize = usize::MAX;

/// Proper edge colouring of the tube graph at a fixed radius. Colours are
/// numbered `1..=k`.
#[derive(Debug, Clone)]
pub struct EdgeColouring {
    space: Arc<FiniteSpace>,
    radius: Rational,
    edges: Vec<(usize, usize)>,
    colours: Vec<usize>,
    colour_count: usize,
    max_degree: usize,
    index: HashMap<(usize, usize), usize>,
}

impl EdgeColouring {
    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    /// Edges `(x, y)` with `x < y`, in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Colour of each edge, aligned with [`edges`](Self::edges).
    pub fn colours(&self) -> &[usize] {
        &self.colours
    }

    pub fn colour_count(&self) -> usize {
        self.colour_count
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn colour_of(&self, x: usize, y: usize) -> Option<usize> {
        self.index.get(&(x.min(y), x.max(y))).map(|&i| self.colours[i])
    }

    pub fn class(&self, colour: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .zip(&self.colours)
            .filter(move |(_, &c)| c == colour)
            .map(|(&e, _)| e)
    }

    /// Exhaustive check that edges sharing an endpoint get distinct colours.
    pub fn is_proper(&self) -> bool {
        let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
        for (&(x, y), &c) in self.edges.iter().zip(&self.colours) {
            if c == 0 || c > self.colour_count {
                return false;
            }
            if seen.insert((x, c), ()).is_some() || seen.insert((y, c), ()).is_some() {
                return false;
            }
        }
        true
    }
}

struct MisraGries {
    palette: usize,
    adjacency: Vec<Vec<usize>>,
    /// `at[v * palette + c]` is the neighbour joined to `v` by colour `c`.
    at: Vec<usize>,
    colour: HashMap<(usize, usize), usize>,
}

impl MisraGries {
    fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(x, y) in edges {
            adjacency[x].push(y);
            adjacency[y].push(x);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        let palette = adjacency.iter().map(Vec::len).max().unwrap_or(0) + 1;
        MisraGries {
            palette,
            adjacency,
            at: vec![NONE; n * palette],
            colour: HashMap::new(),
        }
    }

    fn key(a: usize, b: usize) -> (usize, usize) {
        (a.min(b), a.max(b))
    }

    fn is_free(&self, v: usize, c: usize) -> bool {
        self.at[v * self.palette + c] == NONE
    }

    fn first_free(&self, v: usize) -> usize {
        (0..self.palette).find(|&c| self.is_free(v, c)).expect("degree < palette")
    }

    fn colour_of(&self, a: usize, b: usize) -> Option<usize> {
        self.colour.get(&Self::key(a, b)).copied()
    }

    /// Applies a batch of recolourings: all old colours are cleared before
    /// any new one is set, so the batch may permute colours among its edges.
    fn recolour(&mut self, batch: &[(usize, usize, usize)]) {
        for &(a, b, _) in batch {
            if let Some(old) = self.colour.remove(&Self::key(a, b)) {
                self.at[a * self.palette + old] = NONE;
                self.at[b * self.palette + old] = NONE;
            }
        }
        for &(a, b, c) in batch {
            debug_assert!(self.is_free(a, c) && self.is_free(b, c));
            self.colour.insert(Self::key(a, b), c);
            self.at[a * self.palette + c] = b;
            self.at[b * self.palette + c] = a;
        }
    }

    fn maximal_fan(&self, u: usize, v: usize) -> Vec<usize> {
        let mut fan = vec![v];
        let mut in_fan = vec![v];
        loop {
            let last = *fan.last().expect("nonempty");
            let next = self.adjacency[u].iter().copied().find(|&w| {
                !in_fan.contains(&w)
                    && self.colour_of(u, w).is_some_and(|c| self.is_free(last, c))
            });
            match next {
                Some(w) => {
                    fan.push(w);
                    in_fan.push(w);
                }
                None => return fan,
            }
        }
    }

    fn colour_edge(&mut self, u: usize, v: usize) {
        if let Some(c) = (0..self.palette).find(|&c| self.is_free(u, c) && self.is_free(v, c)) {
            self.recolour(&[(u, v, c)]);
            return;
        }
        let fan = self.maximal_fan(u, v);
        let c = self.first_free(u);
        let d = self.first_free(*fan.last().expect("nonempty"));

        // Invert the path from u whose edges alternate d, c, d, ...
        let mut path = Vec::new();
        let (mut cur, mut want) = (u, d);
        loop {
            let next = self.at[cur * self.palette + want];
            if next == NONE {
                break;
            }
            let flipped = if want == c { d } else { c };
            path.push((cur, next, flipped));
            cur = next;
            want = flipped;
        }
        self.recolour(&path);

        let w = fan
            .iter()
            .position(|&f| self.is_free(f, d))
            .expect("some fan vertex has d free");
        let mut rotation = Vec::with_capacity(w + 1);
        for i in 0..w {
            let next_colour = self.colour_of(u, fan[i + 1]).expect("fan edges are coloured");
            rotation.push((u, fan[i], next_colour));
        }
        rotation.push((u, fan[w], d));
        self.recolour(&rotation);
    }
}

/// Colours the tube graph at radius `r` with at most `Δ + 1` colours.
/// Edges are processed in lexicographic order, so the result is a
/// deterministic function of the space and radius.
pub fn edge_colouring(space: &Arc<FiniteSpace>, r: &Rational) -> Result<EdgeColouring, ColouringError> {
    let ru = space.radius_units(r)?;
    let n = space.len();
    let mut edges = Vec::new();
    for x in 0..n {
        for y in space.ball_units(x, ru) {
            if y > x {
                edges.push((x, y));
            }
        }
    }
    let mut mg = MisraGries::new(n, &edges);
    for &(x, y) in &edges {
        mg.colour_edge(x, y);
    }

    // Relabel the colours actually used as 1..=k.
    let mut used = vec![false; mg.palette];
    for &c in mg.colour.values() {
        used[c] = true;
    }
    let mut relabel = vec![0; mg.palette];
    let mut k = 0;
    for (c, &u) in used.iter().enumerate() {
        if u {
            k += 1;
            relabel[c] = k;
        }
    }
    let colours = edges.iter().map(|&(x, y)| relabel[mg.colour[&(x, y)]]).collect();
    let index = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    Ok(EdgeColouring {
        space: space.clone(),
        radius: r.clone(),
        max_degree: mg.palette - 1,
        edges,
        colours,
        colour_count: k,
        index,
    })
}

/// `A_0 = 1` followed by one symmetric permutation per colour class: the
/// class's edges in both orientations plus fixed points at every vertex the
/// class does not touch.
pub fn colour_permutations(colouring: &EdgeColouring) -> Vec<PermutationOp> {
    let space = colouring.space();
    let n = space.len();
    let mut images: Vec<Vec<usize>> = (0..=colouring.colour_count()).map(|_| (0..n).collect()).collect();
    for (&(x, y), &c) in colouring.edges().iter().zip(colouring.colours()) {
        images[c][x] = y;
        images[c][y] = x;
    }
    images
        .into_iter()
        .map(|image| PermutationOp::from_images(space, image).expect("matching permutations are controlled"))
        .collect()
}

/// `v = Σ f_i A_i` with `v v* = Σ f_i`, for a partial translation `v`
/// supported in the coloured tube.
#[derive(Debug, Clone)]
pub struct TranslationDecomposition {
    radius: Rational,
    perms: Vec<PermutationOp>,
    /// `idempotents[i][x]` is `f_i(x)`.
    idempotents: Vec<Vec<bool>>,
}

impl TranslationDecomposition {
    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    pub fn perms(&self) -> &[PermutationOp] {
        &self.perms
    }

    pub fn idempotent_values(&self, i: usize) -> &[bool] {
        &self.idempotents[i]
    }

    pub fn idempotent<S: Scalar>(&self, i: usize) -> FinitePropOp<S> {
        let values = self.idempotents[i].iter().map(|&b| if b { S::one() } else { S::zero() }).collect();
        FinitePropOp::diagonal(self.perms[i].space(), values).expect("one value per point")
    }

    /// `Σ f_i A_i`.
    pub fn reconstruct<S: Scalar>(&self) -> FinitePropOp<S> {
        let space = self.perms[0].space();
        let mut acc = FinitePropOp::zero(space);
        for (i, a) in self.perms.iter().enumerate() {
            let term = self.idempotent::<S>(i).try_mul(&a.to_op()).expect("same space");
            acc = acc.try_add(&term).expect("same space");
        }
        acc
    }

    /// `Σ f_i`.
    pub fn range_projection<S: Scalar>(&self) -> FinitePropOp<S> {
        let space = self.perms[0].space();
        (0..self.perms.len()).fold(FinitePropOp::zero(space), |acc, i| {
            acc.try_add(&self.idempotent(i)).expect("same space")
        })
    }
}

pub fn decompose_translation(
    t: &PartialTranslation,
    colouring: &EdgeColouring,
) -> Result<TranslationDecomposition, ColouringError> {
    if !same_space(t.space(), colouring.space()) {
        return Err(ColouringError::SpaceMismatch);
    }
    let n = t.space().len();
    let perms = colour_permutations(colouring);
    let mut idempotents = vec![vec![false; n]; perms.len()];
    for (y, x) in t.pairs() {
        let class = if x == y {
            0
        } else {
            colouring.colour_of(x, y).ok_or(ColouringError::SupportOutsideTube(x, y))?
        };
        idempotents[class][x] = true;
    }
    Ok(TranslationDecomposition {
        radius: colouring.radius().clone(),
        perms,
        idempotents,
    })
}

/// Exact check of both decomposition identities against the translation's
/// own 0/1 matrix.
pub fn verify_decomposition(t: &PartialTranslation, dec: &TranslationDecomposition) -> bool {
    let v: FinitePropOp<Rational> = t.to_op();
    let vv = v.try_mul(&v.adjoint()).expect("same space");
    let idempotent_ok = (0..dec.perms.len()).all(|i| {
        let f = dec.idempotent::<Rational>(i);
        f.is_diagonal() && f.try_mul(&f).expect("same space") == f
    });
    idempotent_ok && dec.reconstruct::<Rational>() == v && dec.range_projection::<Rational>() == vv
}

//! Averaging operators, block-constant projections and gap reports.

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::DMatrix;
use num::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colouring::{colour_permutations, EdgeColouring};
use crate::scalar::{ratio_to_f64, Rational, Scalar};
use crate::space::{same_space, FiniteSpace, SpaceError};
use crate::spectral::{self, BlockMeanDeflated, Method, SpectralConfig, SpectralError, StableHasher, SymmetricOperator};
use crate::transalg::{FinitePropOp, OpError, PermutationOp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KazhdanError {
    #[error("at least one permutation is required")]
    NoPermutations,
    #[error("permutation {0} is not symmetric")]
    NotSymmetric(usize),
    #[error("operands belong to different spaces")]
    SpaceMismatch,
    #[error("maximal power must be at least 1")]
    ZeroPower,
    #[error("c = {c} is outside (0, {max}] for n = {n}")]
    COutOfRange { c: f64, n: usize, max: f64 },
    #[error("component {component}: |(A-P)^{k}| = {measured} but rho^{k} = {expected}")]
    CurveMismatch { component: usize, k: u32, measured: f64, expected: f64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `A = (1/n) Σ (1 + A_i)/2` for symmetric permutations `A_1..A_n`.
#[derive(Debug, Clone)]
pub struct AveragingOp {
    op: FinitePropOp<Rational>,
    perms: Vec<PermutationOp>,
}

impl AveragingOp {
    pub fn op(&self) -> &FinitePropOp<Rational> {
        &self.op
    }

    pub fn perms(&self) -> &[PermutationOp] {
        &self.perms
    }

    pub fn n(&self) -> usize {
        self.perms.len()
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        self.op.space()
    }
}

pub fn build_averaging(perms: &[PermutationOp]) -> Result<AveragingOp, KazhdanError> {
    let first = perms.first().ok_or(KazhdanError::NoPermutations)?;
    let space = first.space().clone();
    for (i, p) in perms.iter().enumerate() {
        if !same_space(p.space(), &space) {
            return Err(KazhdanError::SpaceMismatch);
        }
        if !p.is_symmetric() {
            return Err(KazhdanError::NotSymmetric(i + 1));
        }
    }
    let w = Rational::one() / Rational::from_integer((2 * perms.len()).into());
    let entries = perms.iter().flat_map(|p| {
        let w = w.clone();
        p.images()
            .iter()
            .enumerate()
            .flat_map(move |(y, &x)| [(y, y, w.clone()), (x, y, w.clone())])
    });
    let op = FinitePropOp::from_entries(&space, entries)?;
    Ok(AveragingOp { op, perms: perms.to_vec() })
}

/// Averaging operator of a colouring's involutions. A colouring without
/// edges falls back to the identity, so `A = I`.
pub fn averaging_from_colouring(colouring: &EdgeColouring) -> AveragingOp {
    let perms = colour_permutations(colouring);
    let used = if perms.len() > 1 { &perms[1..] } else { &perms[..] };
    build_averaging(used).expect("colour involutions are symmetric permutations of one space")
}

/// The projection that is `1/|X_m|` on each block `X_m × X_m` and zero
/// elsewhere. Stored by its blocks; entries are produced on demand.
#[derive(Debug, Clone)]
pub struct KazhdanProjection {
    space: Arc<FiniteSpace>,
}

pub fn kazhdan_projection(space: &Arc<FiniteSpace>) -> KazhdanProjection {
    KazhdanProjection { space: space.clone() }
}

impl KazhdanProjection {
    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn entry(&self, x: usize, y: usize) -> Rational {
        let m = self.space.component_of(x);
        if m == self.space.component_of(y) {
            Rational::new(1.into(), self.space.component_points(m).len().into())
        } else {
            Rational::zero()
        }
    }

    /// Materialises the projection. Quadratic in the block sizes.
    pub fn to_op<S: Scalar>(&self) -> FinitePropOp<S> {
        let entries = (0..self.space.component_count()).flat_map(|m| {
            let pts = self.space.component_points(m);
            let v = S::from_rational(&Rational::new(1.into(), pts.len().into()));
            pts.iter()
                .flat_map(move |&x| pts.iter().map(move |&y| (x, y)))
                .map(move |(x, y)| (x, y, v.clone()))
        });
        FinitePropOp::from_entries(&self.space, entries).expect("blocks are controlled")
    }
}

/// `Q_m`: the block of `T` on component `m`, as an operator over that
/// component's own space.
pub fn restrict<S: Scalar>(t: &FinitePropOp<S>, m: usize) -> Result<FinitePropOp<S>, KazhdanError> {
    let space = t.space();
    let target = space.component_space(m)?;
    Ok(t.extract_block(space.component_points(m), &target))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub delta: f64,
    pub delta_tilde: f64,
    /// `1 − δ̃`, evaluated without cancellation; stays positive when
    /// `δ̃` itself rounds to 1.
    pub gap: f64,
}

/// `δ = (1 − (c/2n)²)^{1/2}` and `δ̃ = 1 − (1 − δ)/n`, for `0 < c ≤ 2n`.
pub fn rate_constants(c: f64, n: usize) -> Result<RateConstants, KazhdanError> {
    let max = 2.0 * n as f64;
    if n == 0 || !c.is_finite() || c <= 0.0 || c > max {
        return Err(KazhdanError::COutOfRange { c, n, max });
    }
    // 1 − (c/2n)² = (2n − c)(2n + c)/(2n)²; 2n − c is exact once c ≥ n,
    // so the radicand keeps full relative precision near c = 2n.
    let delta = ((max - c) / max * ((max + c) / max)).sqrt();
    let ratio = c / max;
    // 1 − δ = u/(1 + δ) with u = (c/2n)².
    let gap = ratio * ratio / (1.0 + delta) / n as f64;
    // (n − 1 + δ)/n sums non-negative terms, so no cancellation at c ≈ 2n.
    let mut delta_tilde = ((n - 1) as f64 + delta) / n as f64;
    if delta_tilde >= 1.0 {
        // True value is below 1; round toward it.
        delta_tilde = 1.0 - f64::EPSILON / 2.0;
    }
    Ok(RateConstants { delta, delta_tilde, gap })
}

#[derive(Debug, Clone)]
pub struct GapOptions {
    pub kmax: u32,
    pub threshold: f64,
    pub c: Option<f64>,
    pub spectral: SpectralConfig,
    /// Largest block whose curve is rechecked by dense repeated squaring.
    pub verify_limit: usize,
    /// Radius of the tube the permutations came from, recorded only.
    pub radius: Option<Rational>,
}

impl GapOptions {
    pub fn new(kmax: u32) -> Self {
        GapOptions {
            kmax,
            threshold: DEFAULT_THRESHOLD,
            c: None,
            spectral: SpectralConfig::default(),
            verify_limit: 512,
            radius: None,
        }
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.99;
pub const DEFAULT_KMAX: u32 = 32;

/// Below this distance from 1 a component is reported as having no gap.
pub const NO_GAP_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentGap {
    pub id: usize,
    pub size: usize,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_tilde: Option<f64>,
    /// `‖(A − P)^k‖` for `k = 1..=kmax`.
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDiagnostics {
    pub id: usize,
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    pub seed: u64,
    pub no_effective_gap: bool,
    /// `None` when the block was too large for the dense recheck.
    pub curve_verified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_within_delta_tilde: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub radius: Option<String>,
    pub kmax: u32,
    pub threshold: f64,
    pub c: Option<f64>,
    pub n: usize,
    pub tol: f64,
    pub dense_limit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub space: String,
    pub components: Vec<ComponentGap>,
    pub max_rho: f64,
    pub uniform_gap_threshold: f64,
    pub uniform_gap: bool,
    pub params: ReportParams,
    pub diagnostics: Vec<ComponentDiagnostics>,
}

impl GapReport {
    pub const CSV_HEADER: &'static str = "space,id,size,rho,k,curve";

    /// One row per component and power.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.components {
            for (i, v) in c.curve.iter().enumerate() {
                out.push_str(&format!("{},{},{},{},{},{}\n", csv_field(&self.space), c.id, c.size, c.rho, i + 1, v));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `2(1 − max ρ)`, a lower bound on `max_i ‖A_i ξ − ξ‖/‖ξ‖` over vectors
/// orthogonal to the block constants.
pub fn kazhdan_lower_bound(report: &GapReport) -> f64 {
    (2.0 * (1.0 - report.max_rho)).max(0.0)
}

/// Float copy of one diagonal block, indexed locally.
struct LocalBlock {
    rows: Vec<Vec<(usize, f64)>>,
}

impl LocalBlock {
    fn new(op: &FinitePropOp<Rational>, points: &[usize]) -> Self {
        let space = op.space();
        let rows = points
            .iter()
            .map(|&x| {
                let mut row: Vec<(usize, f64)> = op
                    .row(x)
                    .iter()
                    .filter(|(y, _)| space.component_of(*y) == space.component_of(x))
                    .map(|(y, v)| (space.local_index(*y), ratio_to_f64(v)))
                    .collect();
                row.sort_by_key(|(j, _)| *j);
                row
            })
            .collect();
        LocalBlock { rows }
    }
}

impl SymmetricOperator for LocalBlock {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let row_dot = |row: &Vec<(usize, f64)>| row.iter().fold(0.0, |acc, (j, v)| acc + v * x[*j]);
        if y.len() >= 4096 {
            y.par_iter_mut().zip(&self.rows).for_each(|(out, row)| *out = row_dot(row));
        } else {
            for (out, row) in y.iter_mut().zip(&self.rows) {
                *out = row_dot(row);
            }
        }
    }

    fn fingerprint(&self) -> u64 {
        let mut h = StableHasher::default();
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                (i, j, v.to_bits()).hash(&mut h);
            }
        }
        h.finish()
    }
}

/// Relative agreement demanded between the dense power norms and `ρ^k`.
const CURVE_TOL: f64 = 1e-8;

fn verify_curve(block: &LocalBlock, rho: f64, kmax: u32, id: usize) -> Result<(), KazhdanError> {
    let n = block.dim();
    let mut m: DMatrix<f64> = block.to_dense();
    let mean = 1.0 / n as f64;
    m.add_scalar_mut(-mean);
    let mut k = 1u32;
    loop {
        let measured = spectral::dense_eigenvalues_of(&m).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let expected = rho.powi(k as i32);
        if (measured - expected).abs() > CURVE_TOL * expected + 1e-15 {
            return Err(KazhdanError::CurveMismatch { component: id, k, measured, expected });
        }
        if k > kmax / 2 {
            return Ok(());
        }
        m = &m * &m;
        k *= 2;
    }
}

pub fn gap_report(a: &AveragingOp, p: &KazhdanProjection, opts: &GapOptions) -> Result<GapReport, KazhdanError> {
    if !same_space(a.space(), p.space()) {
        return Err(KazhdanError::SpaceMismatch);
    }
    if opts.kmax == 0 {
        return Err(KazhdanError::ZeroPower);
    }
    let delta_tilde = opts.c.map(|c| rate_constants(c, a.n())).transpose()?.map(|r| r.delta_tilde);
    let space = a.space();
    let per_component: Vec<Result<(ComponentGap, ComponentDiagnostics), KazhdanError>> = (0..space.component_count())
        .into_par_iter()
        .map(|m| {
            let points = space.component_points(m);
            let block = LocalBlock::new(a.op(), points);
            let res = spectral::max_abs_eig(&BlockMeanDeflated::whole(&block), &opts.spectral)?;
            let rho = res.value.min(1.0);
            let curve_verified = if points.len() <= opts.verify_limit {
                verify_curve(&block, rho, opts.kmax, m)?;
                Some(true)
            } else {
                None
            };
            let gap = ComponentGap {
                id: m,
                size: points.len(),
                rho,
                delta_tilde,
                curve: (1..=opts.kmax).map(|k| rho.powi(k as i32)).collect(),
            };
            let diag = ComponentDiagnostics {
                id: m,
                method: res.method,
                iterations: res.iterations,
                residual: res.residual,
                seed: res.seed,
                no_effective_gap: rho >= 1.0 - NO_GAP_MARGIN,
                curve_verified,
                rho_within_delta_tilde: delta_tilde.map(|d| rho <= d),
            };
            Ok((gap, diag))
        })
        .collect();
    let mut components = Vec::new();
    let mut diagnostics = Vec::new();
    for r in per_component {
        let (g, d) = r?;
        components.push(g);
        diagnostics.push(d);
    }
    let max_rho = components.iter().map(|c| c.rho).fold(0.0, f64::max);
    Ok(GapReport {
        space: space.name().to_string(),
        components,
        max_rho,
        uniform_gap_threshold: opts.threshold,
        uniform_gap: max_rho < opts.threshold,
        params: ReportParams {
            radius: opts.radius.as_ref().map(crate::scalar::format_rational),
            kmax: opts.kmax,
            threshold: opts.threshold,
            c: opts.c,
            n: a.n(),
            tol: opts.spectral.tol,
            dense_limit: opts.spectral.dense_limit,
        },
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colouring::edge_colouring;
    use crate::scalar::rational;
    use crate::space::GraphBlock;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Arc<FiniteSpace> {
        Arc::new(FiniteSpace::from_graph("g", n, edges.iter().copied()).unwrap())
    }

    fn cycle(n: usize) -> Arc<FiniteSpace> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        graph(n, &edges)
    }

    fn complete(n: usize) -> Arc<FiniteSpace> {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        graph(n, &edges)
    }

    fn averaging(space: &Arc<FiniteSpace>) -> AveragingOp {
        averaging_from_colouring(&edge_colouring(space, &rational(1, 1)).unwrap())
    }

    fn adjacency(space: &Arc<FiniteSpace>) -> FinitePropOp<Rational> {
        let n = space.len();
        let entries = (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .filter(|&(x, y)| space.dist_units(x, y) == Some(space.scale()))
            .map(|(x, y)| (x, y, rational(1, 1)));
        FinitePropOp::from_entries(space, entries).unwrap()
    }

    #[test]
    fn single_identity_gives_identity() {
        let s = cycle(5);
        let a = build_averaging(&[PermutationOp::identity(&s)]).unwrap();
        assert_eq!(a.op(), &FinitePropOp::identity(&s));
    }

    #[test]
    fn rejects_empty_and_asymmetric() {
        assert_eq!(build_averaging(&[]).unwrap_err(), KazhdanError::NoPermutations);
        let s = cycle(3);
        let rot = PermutationOp::from_images(&s, vec![1, 2, 0]).unwrap();
        assert_eq!(build_averaging(&[rot]).unwrap_err(), KazhdanError::NotSymmetric(1));
    }

    #[test]
    fn c4_and_k4_averaging_entries() {
        let c4 = cycle(4);
        let want = FinitePropOp::identity(&c4)
            .scale(&rational(1, 2))
            .try_add(&adjacency(&c4).scale(&rational(1, 4)))
            .unwrap();
        assert_eq!(averaging(&c4).op(), &want);

        let k4 = complete(4);
        let a = averaging(&k4);
        assert_eq!(a.n(), 3);
        let want = FinitePropOp::identity(&k4)
            .scale(&rational(1, 2))
            .try_add(&adjacency(&k4).scale(&rational(1, 6)))
            .unwrap();
        assert_eq!(a.op(), &want);
    }

    #[test]
    fn projection_blocks() {
        let s = Arc::new(
            FiniteSpace::from_blocks("two", vec![GraphBlock::unit("a", 2, [(0, 1)]), GraphBlock::unit("b", 3, [(0, 1), (1, 2)])])
                .unwrap(),
        );
        let p = kazhdan_projection(&s).to_op::<Rational>();
        assert_eq!(p.get(0, 1), rational(1, 2));
        assert_eq!(p.get(2, 4), rational(1, 3));
        assert_eq!(p.get(0, 2), rational(0, 1));
        assert_eq!(p.adjoint(), p);
        assert_eq!(p.try_mul(&p).unwrap(), p);
        let q = restrict(&p, 1).unwrap();
        assert!(q.entries().all(|(_, _, v)| *v == rational(1, 3)));
        assert_eq!(q.nnz(), 9);

        let single = graph(1, &[]);
        assert_eq!(kazhdan_projection(&single).to_op::<Rational>(), FinitePropOp::identity(&single));
    }

    #[test]
    fn restriction_is_unital() {
        let s = Arc::new(FiniteSpace::from_blocks("two", vec![GraphBlock::unit("a", 2, [(0, 1)]), GraphBlock::unit("b", 3, [(0, 1)])]).unwrap());
        let id = FinitePropOp::<Rational>::identity(&s);
        let q = restrict(&id, 1).unwrap();
        assert_eq!(q, FinitePropOp::identity(q.space()));
        assert!(matches!(restrict(&id, 7), Err(KazhdanError::Space(SpaceError::InvalidComponent(7)))));
    }

    #[test]
    fn rate_constant_examples() {
        let r = rate_constants(1.0, 2).unwrap();
        assert!((r.delta - 15f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((r.delta_tilde - 0.984123).abs() < 1e-6);
        let end = rate_constants(4.0, 2).unwrap();
        assert_eq!(end.delta, 0.0);
        assert_eq!(end.delta_tilde, 0.5);
        let tiny = rate_constants(1e-12, 1).unwrap();
        assert!(tiny.gap > 0.0 && tiny.delta_tilde < 1.0);
        assert!(rate_constants(0.0, 2).is_err());
        assert!(rate_constants(4.5, 2).is_err());
        assert!(rate_constants(1.0, 0).is_err());
    }

    #[test]
    fn closed_form_gaps() {
        let opts = GapOptions::new(DEFAULT_KMAX);
        let c4 = cycle(4);
        let a = averaging(&c4);
        let r = gap_report(&a, &kazhdan_projection(&c4), &opts).unwrap();
        assert!((r.max_rho - 0.5).abs() < 1e-14);
        assert_eq!(r.diagnostics[0].curve_verified, Some(true));

        let k4 = complete(4);
        let r = gap_report(&averaging(&k4), &kazhdan_projection(&k4), &opts).unwrap();
        assert!((r.max_rho - 1.0 / 3.0).abs() < 1e-12);
        assert!((kazhdan_lower_bound(&r) - 4.0 / 3.0).abs() < 1e-12);

        let c8 = cycle(8);
        let r = gap_report(&averaging(&c8), &kazhdan_projection(&c8), &opts).unwrap();
        let want = 0.5 + (std::f64::consts::FRAC_PI_4).cos() / 2.0;
        assert!((r.max_rho - want).abs() < 1e-12);
        assert!((want - 0.853553).abs() < 1e-6);
    }

    #[test]
    fn c4_averaging_eigenvalues() {
        let c4 = cycle(4);
        let a = averaging(&c4).op().to_float();
        let eig = spectral::dense_eigenvalues(&a);
        for (got, want) in eig.iter().zip([0.0, 0.5, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn report_keys_and_csv() {
        let c4 = cycle(4);
        let mut opts = GapOptions::new(3);
        opts.c = Some(1.0);
        let r = gap_report(&averaging(&c4), &kazhdan_projection(&c4), &opts).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in ["space", "components", "max_rho", "uniform_gap_threshold", "uniform_gap"] {
            assert!(keys.contains(&k));
        }
        let comp = json["components"][0].as_object().unwrap();
        let mut ck: Vec<&str> = comp.keys().map(|k| k.as_str()).collect();
        ck.sort();
        assert_eq!(ck, ["curve", "delta_tilde", "id", "rho", "size"]);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("space,id,size,rho,k,curve\n"));
        assert_eq!(csv.lines().nth(2).unwrap(), "g,0,4,0.5,2,0.25");
        assert_eq!(r.diagnostics[0].rho_within_delta_tilde, Some(true));
    }

    #[test]
    fn identity_averaging_has_no_gap() {
        // No edges inside the tube: A = I and every multi-point component is stuck at rho = 1.
        let s = cycle(6);
        let a = averaging_from_colouring(&edge_colouring(&s, &rational(1, 2)).unwrap());
        assert_eq!(a.op(), &FinitePropOp::identity(&s));
        let r = gap_report(&a, &kazhdan_projection(&s), &GapOptions::new(4)).unwrap();
        assert!((r.max_rho - 1.0).abs() < 1e-12);
        assert!(r.diagnostics[0].no_effective_gap);
        assert!(!r.uniform_gap);
        assert_eq!(kazhdan_lower_bound(&r), 0.0);
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let a = averaging(&cycle(4));
        let other = cycle(5);
        assert_eq!(gap_report(&a, &kazhdan_projection(&other), &GapOptions::new(2)).unwrap_err(), KazhdanError::SpaceMismatch);
        assert_eq!(
            gap_report(&a, &kazhdan_projection(a.space()), &GapOptions::new(0)).unwrap_err(),
            KazhdanError::ZeroPower
        );
    }
}

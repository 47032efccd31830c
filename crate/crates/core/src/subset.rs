//! Exact best-subset step: with the bandwidths fixed, choose the `p` free
//! columns (intercept always in) that minimize the total weighted SSE over
//! all focal points, then refit every focal model on that subset.
//!
//! Two exact strategies share one evaluator and one tie-break (objective,
//! then smallest index sum, then lexicographic order):
//! lexicographic enumeration, and best-first branch-and-bound whose node
//! bound is the WSSE of every column still allowed in the node.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use itertools::Itertools;
use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{integrated_objective, weights_from_d2};
use crate::model::{
    BandwidthField, CoefficientField, DistanceMatrix, ForbiddenPairs, SpatialDataset, SubsetMask,
    SubsetStrategy, AUTO_EXHAUSTIVE_LIMIT,
};
use crate::wls::LocalGram;

/// Relative slack on the pruning test so rounding in the bound never cuts
/// off a tied or marginally better mask.
const PRUNE_SLACK: f64 = 1e-10;

/// Every `p`-subset of `0..m_free` avoiding `forbidden`, in lexicographic
/// order. Indices are free-column positions (intercept not counted).
pub fn enumerate_feasible_masks(
    m_free: usize,
    p: usize,
    forbidden: &ForbiddenPairs,
) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..m_free)
        .combinations(p)
        .filter(move |s| forbidden.allows(s))
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Search instrumentation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubsetStats {
    pub nodes_expanded: usize,
    pub incumbent_updates: usize,
    pub masks_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSolution {
    pub mask: SubsetMask,
    pub beta: CoefficientField,
    /// `c x n` residuals of the refitted focal models.
    pub errors: Array2<f64>,
    /// Integrated objective at the returned coefficients and the fixed bandwidths.
    pub objective: f64,
    pub stats: SubsetStats,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpBetaOptions {
    pub strategy: SubsetStrategy,
    pub wls_ridge: f64,
}

impl Default for MpBetaOptions {
    fn default() -> Self {
        MpBetaOptions {
            strategy: SubsetStrategy::Auto,
            wls_ridge: 0.0,
        }
    }
}

/// Per-focal Gram matrices at fixed bandwidths.
struct Evaluator<'a> {
    grams: Vec<LocalGram>,
    free: Vec<usize>,
    intercept: bool,
    gamma_term: f64,
    ridge: f64,
    m: usize,
    forbidden: &'a ForbiddenPairs,
}

#[derive(Debug, Clone)]
struct Candidate {
    free_sel: Vec<usize>,
    objective: f64,
    index_sum: usize,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        match self.objective.total_cmp(&other.objective) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => {
                (self.index_sum, &self.free_sel) < (other.index_sum, &other.free_sel)
            }
        }
    }
}

impl<'a> Evaluator<'a> {
    fn new(
        ds: &SpatialDataset,
        dm: &DistanceMatrix,
        bw: &BandwidthField,
        forbidden: &'a ForbiddenPairs,
        ridge: f64,
    ) -> Self {
        let grams = (0..dm.c())
            .into_par_iter()
            .map(|o| {
                let w = weights_from_d2(dm.d2().row(o).iter().copied(), bw.gamma(o));
                LocalGram::new(ds.x(), ds.y(), &w)
            })
            .collect();
        let gamma_term = (0..dm.c())
            .map(|o| bw.gamma(o) * dm.squared_row_sums()[o])
            .sum();
        Evaluator {
            grams,
            free: ds.free_columns(),
            intercept: ds.has_intercept(),
            gamma_term,
            ridge,
            m: ds.m(),
            forbidden,
        }
    }

    fn design_cols(&self, free_sel: &[usize]) -> Vec<usize> {
        let mut cols = Vec::with_capacity(free_sel.len() + 1);
        if self.intercept {
            cols.push(0);
        }
        cols.extend(free_sel.iter().map(|&f| self.free[f]));
        cols
    }

    fn total_wsse(&self, cols: &[usize]) -> Result<f64> {
        let per: Vec<Result<f64>> = self
            .grams
            .par_iter()
            .enumerate()
            .map(|(o, g)| g.solve(cols, self.ridge, o).map(|(_, wsse, _)| wsse))
            .collect();
        let mut total = 0.0;
        for v in per {
            total += v?;
        }
        Ok(total)
    }

    fn objective(&self, free_sel: &[usize]) -> Result<f64> {
        if free_sel.is_empty() && !self.intercept {
            return Err(Error::InvalidConfig("empty model without intercept".into()));
        }
        Ok(self.gamma_term + self.total_wsse(&self.design_cols(free_sel))?)
    }

    fn candidate(&self, free_sel: Vec<usize>) -> Result<Candidate> {
        let objective = self.objective(&free_sel)?;
        let index_sum = self.design_cols(&free_sel).iter().sum();
        Ok(Candidate {
            free_sel,
            objective,
            index_sum,
        })
    }

    /// Lower bound for any completion: WSSE with every still-allowed column.
    fn bound(&self, free_sel: &[usize]) -> f64 {
        if free_sel.is_empty() && !self.intercept {
            return self.gamma_term;
        }
        match self.total_wsse(&self.design_cols(free_sel)) {
            Ok(v) => self.gamma_term + v,
            Err(_) => self.gamma_term,
        }
    }

    fn free_forbidden(&self) -> ForbiddenPairs {
        let pos = |j: usize| self.free.iter().position(|&f| f == j);
        self.forbidden
            .iter()
            .filter_map(|(j, k)| Some((pos(j)?, pos(k)?)))
            .collect()
    }
}

/// Solves the subset step for cardinality `p` at bandwidths `bw`.
///
/// `forbidden` holds design-column pairs. `warm_start` seeds the
/// branch-and-bound incumbent and never restricts the search.
pub fn solve_mp_beta(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    bw: &BandwidthField,
    p: usize,
    forbidden: &ForbiddenPairs,
    warm_start: Option<&SubsetMask>,
    opts: &MpBetaOptions,
) -> Result<SubsetSolution> {
    let m_free = ds.m_free();
    if p > m_free {
        return Err(Error::InfeasibleCardinality { p, m_free });
    }
    let eval = Evaluator::new(ds, dm, bw, forbidden, opts.wls_ridge);
    let use_exhaustive = match opts.strategy {
        SubsetStrategy::Exhaustive => true,
        SubsetStrategy::BranchAndBound => false,
        SubsetStrategy::Auto => binomial(m_free, p) <= AUTO_EXHAUSTIVE_LIMIT,
    };
    let (best, stats) = if use_exhaustive {
        exhaustive(&eval, p)?
    } else {
        let warm = warm_start
            .filter(|w| w.p() == p && w.z().len() == ds.m())
            .map(|w| {
                w.free_columns()
                    .iter()
                    .filter_map(|j| eval.free.iter().position(|f| f == j))
                    .collect::<Vec<_>>()
            });
        branch_and_bound_inner(&eval, p, warm)?
    };
    finish(ds, dm, bw, &eval, best, stats)
}

/// Branch-and-bound regardless of problem size, seeded with `incumbent`.
pub fn branch_and_bound(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    bw: &BandwidthField,
    p: usize,
    forbidden: &ForbiddenPairs,
    incumbent: Option<&SubsetMask>,
) -> Result<SubsetSolution> {
    let opts = MpBetaOptions {
        strategy: SubsetStrategy::BranchAndBound,
        wls_ridge: 0.0,
    };
    solve_mp_beta(ds, dm, bw, p, forbidden, incumbent, &opts)
}

/// Full lexicographic scan of the feasible masks.
pub fn exhaustive_search(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    bw: &BandwidthField,
    p: usize,
    forbidden: &ForbiddenPairs,
) -> Result<SubsetSolution> {
    let opts = MpBetaOptions {
        strategy: SubsetStrategy::Exhaustive,
        wls_ridge: 0.0,
    };
    solve_mp_beta(ds, dm, bw, p, forbidden, None, &opts)
}

fn exhaustive(eval: &Evaluator<'_>, p: usize) -> Result<(Candidate, SubsetStats)> {
    let ff = eval.free_forbidden();
    let masks: Vec<Vec<usize>> = enumerate_feasible_masks(eval.free.len(), p, &ff).collect();
    let scored: Vec<Result<Candidate>> = masks.into_par_iter().map(|s| eval.candidate(s)).collect();
    let mut stats = SubsetStats::default();
    let mut best: Option<Candidate> = None;
    for cand in scored {
        let cand = cand?;
        stats.masks_evaluated += 1;
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            stats.incumbent_updates += 1;
            best = Some(cand);
        }
    }
    best.map(|b| (b, stats))
        .ok_or(Error::InfeasibleCardinality {
            p,
            m_free: eval.free.len(),
        })
}

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    chosen: u64,
    next: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: reverse so the smallest bound pops first,
    // deeper nodes first among equal bounds.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.next.cmp(&other.next))
            .then(other.chosen.cmp(&self.chosen))
    }
}

fn bits(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

fn branch_and_bound_inner(
    eval: &Evaluator<'_>,
    p: usize,
    warm: Option<Vec<usize>>,
) -> Result<(Candidate, SubsetStats)> {
    let mf = eval.free.len();
    if mf > 64 {
        return Err(Error::InvalidConfig(format!(
            "branch-and-bound supports at most 64 free columns, got {mf}"
        )));
    }
    let ff = eval.free_forbidden();
    let conflicts: Vec<u64> = (0..mf)
        .map(|j| {
            ff.iter()
                .filter_map(|(a, b)| {
                    if a == j {
                        Some(b)
                    } else if b == j {
                        Some(a)
                    } else {
                        None
                    }
                })
                .fold(0u64, |acc, k| acc | 1 << k)
        })
        .collect();
    // Free columns from `next` on that do not clash with `chosen`.
    let open = |chosen: u64, next: usize| -> u64 {
        let blocked = bits(chosen).iter().fold(0u64, |acc, &j| acc | conflicts[j]);
        (next..mf).fold(0u64, |acc, j| acc | 1 << j) & !blocked
    };

    let mut stats = SubsetStats::default();
    let mut incumbent: Option<Candidate> = None;
    if let Some(w) = warm {
        if w.len() == p && ff.allows(&w) {
            stats.masks_evaluated += 1;
            incumbent = Some(eval.candidate(w)?);
        }
    }
    let limit = |inc: &Option<Candidate>| {
        inc.as_ref().map_or(f64::INFINITY, |c| {
            c.objective + PRUNE_SLACK * c.objective.abs()
        })
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: eval.bound(&bits(open(0, 0))),
        chosen: 0,
        next: 0,
    });
    while let Some(node) = heap.pop() {
        if node.bound > limit(&incumbent) {
            break;
        }
        stats.nodes_expanded += 1;
        let k = node.chosen.count_ones() as usize;
        let avail = open(node.chosen, node.next);
        let n_avail = avail.count_ones() as usize;
        if k + n_avail < p {
            continue;
        }
        let leaf = if k == p {
            Some(node.chosen)
        } else if k + n_avail == p {
            let all = node.chosen | avail;
            ff.allows(&bits(all)).then_some(all)
        } else {
            None
        };
        if let Some(sel) = leaf {
            stats.masks_evaluated += 1;
            let cand = eval.candidate(bits(sel))?;
            if incumbent.as_ref().is_none_or(|b| cand.beats(b)) {
                stats.incumbent_updates += 1;
                incumbent = Some(cand);
            }
            continue;
        }
        let Some(j) = (node.next..mf).find(|&j| avail >> j & 1 == 1) else {
            continue;
        };
        let with = node.chosen | 1 << j;
        let with_open = open(with, j + 1);
        if k + 1 + with_open.count_ones() as usize >= p {
            let bound = if with_open == avail & !(1 << j) {
                node.bound
            } else {
                eval.bound(&bits(with | with_open))
            };
            if bound <= limit(&incumbent) {
                heap.push(Node {
                    bound,
                    chosen: with,
                    next: j + 1,
                });
            }
        }
        let without_open = open(node.chosen, j + 1);
        if k + without_open.count_ones() as usize >= p {
            let bound = eval.bound(&bits(node.chosen | without_open));
            if bound <= limit(&incumbent) {
                heap.push(Node {
                    bound,
                    chosen: node.chosen,
                    next: j + 1,
                });
            }
        }
    }
    incumbent
        .map(|c| (c, stats))
        .ok_or(Error::InfeasibleCardinality { p, m_free: mf })
}

fn finish(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    bw: &BandwidthField,
    eval: &Evaluator<'_>,
    best: Candidate,
    stats: SubsetStats,
) -> Result<SubsetSolution> {
    let cols = eval.design_cols(&best.free_sel);
    let free_design: Vec<usize> = best.free_sel.iter().map(|&f| eval.free[f]).collect();
    let mask =
        SubsetMask::from_columns(eval.m, &free_design, eval.forbidden.clone(), eval.intercept)?;
    let fits: Vec<_> = eval
        .grams
        .par_iter()
        .enumerate()
        .map(|(o, g)| g.solve(&cols, eval.ridge, o))
        .collect();
    let mut rows = Vec::with_capacity(fits.len());
    let mut warnings = Vec::new();
    for (o, f) in fits.into_iter().enumerate() {
        let (b, _, jitter) = f?;
        if let Some(j) = jitter {
            warnings.push(format!(
                "focal point {o}: normal matrix needed ridge jitter {j:e}"
            ));
        }
        rows.push(b);
    }
    let beta = CoefficientField::from_subset_rows(eval.m, &cols, &rows);
    let errors = residuals(ds, &beta, dm.c());
    let objective = integrated_objective(&errors, dm, bw);
    Ok(SubsetSolution {
        mask,
        beta,
        errors,
        objective,
        stats,
        warnings,
    })
}

/// `errors[[o, i]] = y_i - x_i . beta_o`.
pub fn residuals(ds: &SpatialDataset, beta: &CoefficientField, c: usize) -> Array2<f64> {
    let mut e = Array2::zeros((c, ds.n()));
    for o in 0..c {
        for i in 0..ds.n() {
            e[[o, i]] = ds.y()[i] - beta.predict(o, ds.row(i));
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_forbidden_pairs, Point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn enumeration_examples() {
        let none = ForbiddenPairs::new();
        let all: Vec<_> = enumerate_feasible_masks(3, 2, &none).collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        let pair: ForbiddenPairs = [(0, 1)].into_iter().collect();
        let some: Vec<_> = enumerate_feasible_masks(3, 2, &pair).collect();
        assert_eq!(some, vec![vec![0, 2], vec![1, 2]]);
        assert_eq!(enumerate_feasible_masks(15, 8, &none).count(), 6435);
        assert_eq!(binomial(15, 8), 6435);
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, c: usize) -> SpatialDataset {
        let coords: Vec<Point> = (0..n)
            .map(|_| [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
            .collect();
        let x = Array2::from_shape_fn((n, k), |_| rng.gen_range(-1.0..1.0));
        let y = (0..n)
            .map(|i| {
                x[[i, 0]] * 2.0 - x[[i, k - 1]]
                    + coords[i][0] * 0.1 * x[[i, 1]]
                    + rng.gen_range(-0.3..0.3)
            })
            .collect();
        let focal = coords[..c].to_vec();
        let names = (0..k).map(|j| format!("x{j}")).collect();
        SpatialDataset::with_intercept(y, x, coords, Some(focal), names).unwrap()
    }

    #[test]
    fn all_columns_when_p_is_m_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = random_instance(&mut rng, 20, 4, 5);
        let dm = DistanceMatrix::build(&ds).unwrap();
        let bw = BandwidthField::global(2.0).unwrap();
        let sol = solve_mp_beta(
            &ds,
            &dm,
            &bw,
            4,
            &ForbiddenPairs::new(),
            None,
            &MpBetaOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.mask.columns(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn branch_and_bound_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..6 {
            let ds = random_instance(&mut rng, 30, 8, 6);
            let dm = DistanceMatrix::build(&ds).unwrap();
            let bw = BandwidthField::local((0..6).map(|o| (o + trial) as f64).collect()).unwrap();
            let pairs = build_forbidden_pairs(&ds, 0.9);
            let ex = exhaustive_search(&ds, &dm, &bw, 3, &pairs).unwrap();
            let bb = branch_and_bound(&ds, &dm, &bw, 3, &pairs, None).unwrap();
            assert_eq!(ex.mask, bb.mask);
            assert!((ex.objective - bb.objective).abs() <= 1e-9 * ex.objective);
            assert_eq!(ex.stats.masks_evaluated, 56);
        }
    }

    #[test]
    fn returned_objective_is_integrated_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ds = random_instance(&mut rng, 25, 5, 25);
        let dm = DistanceMatrix::build(&ds).unwrap();
        let bw = BandwidthField::global(5.0).unwrap();
        let sol = exhaustive_search(&ds, &dm, &bw, 2, &ForbiddenPairs::new()).unwrap();
        let recomputed = integrated_objective(&residuals(&ds, &sol.beta, dm.c()), &dm, &bw);
        assert_eq!(sol.objective, recomputed);
        // coefficients are zero exactly off the subset
        for j in 0..ds.m() {
            if !sol.mask.is_selected(j) {
                assert!(sol.beta.column(j).iter().all(|&b| b == 0.0));
            }
        }
    }

    #[test]
    fn duplicated_column_is_never_paired() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = random_instance(&mut rng, 25, 4, 5);
        let mut x = base.x().slice(ndarray::s![.., 1..]).to_owned();
        x.column_mut(3).assign(&base.x().column(1));
        let ds = SpatialDataset::with_intercept(
            base.y().to_vec(),
            x,
            base.coords().to_vec(),
            Some(base.focal_coords().to_vec()),
            vec!["a".into(), "b".into(), "c".into(), "a2".into()],
        )
        .unwrap();
        let dm = DistanceMatrix::build(&ds).unwrap();
        let bw = BandwidthField::global(1.0).unwrap();
        let pairs = build_forbidden_pairs(&ds, 0.9);
        assert!(pairs.contains(1, 4));
        for strategy in [SubsetStrategy::Exhaustive, SubsetStrategy::BranchAndBound] {
            let opts = MpBetaOptions {
                strategy,
                wls_ridge: 0.0,
            };
            let sol = solve_mp_beta(&ds, &dm, &bw, 3, &pairs, None, &opts).unwrap();
            assert!(!(sol.mask.is_selected(1) && sol.mask.is_selected(4)));
            assert_eq!(sol.mask.p(), 3);
        }
        let opts = MpBetaOptions::default();
        let err = solve_mp_beta(&ds, &dm, &bw, 4, &pairs, None, &opts).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleCardinality { p: 4, m_free: 4 }
        ));
    }

    #[test]
    fn optimal_warm_start_is_never_replaced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let ds = random_instance(&mut rng, 30, 9, 8);
            let dm = DistanceMatrix::build(&ds).unwrap();
            let bw = BandwidthField::global(3.0).unwrap();
            let none = ForbiddenPairs::new();
            let cold = branch_and_bound(&ds, &dm, &bw, 4, &none, None).unwrap();
            let warm = branch_and_bound(&ds, &dm, &bw, 4, &none, Some(&cold.mask)).unwrap();
            assert_eq!(warm.mask, cold.mask);
            assert_eq!(warm.stats.incumbent_updates, 0);
            assert!(warm.stats.nodes_expanded <= cold.stats.nodes_expanded);
        }
    }

    #[test]
    fn too_large_p_is_infeasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ds = random_instance(&mut rng, 15, 3, 3);
        let dm = DistanceMatrix::build(&ds).unwrap();
        let bw = BandwidthField::global(1.0).unwrap();
        let err = exhaustive_search(&ds, &dm, &bw, 4, &ForbiddenPairs::new()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleCardinality { .. }));
    }
}

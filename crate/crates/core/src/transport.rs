//! The optimal-transport corner: push-forward measures, Wasserstein-2 in
//! the Monge regime (equal counts, equal masses), and the submersion
//! inequality `W₂(μ, φ_*μ)² ≤ dist_{L²}(id, φ)²`.
//!
//! Both solvers score permutations with the same [`assignment_cost`], so
//! when they agree on the optimal permutation their costs agree bit for bit.

use itertools::Itertools;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{log_point, LogOptions};
use crate::error::{GeomError, Result};
use crate::manifold::Manifold;
use crate::mapspace::MapField;
use crate::sum::compensated_sum;

/// Tolerance on total mass and on the Monge equal-mass condition.
pub const MASS_TOL: f64 = 1e-12;
/// Largest instance accepted by the brute-force solver.
pub const BRUTEFORCE_MAX_ATOMS: usize = 8;

/// Atoms with positive masses of total 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    atoms: Vec<DVector<f64>>,
    masses: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    atoms: Vec<Vec<f64>>,
    masses: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = GeomError;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let atoms = raw.atoms.into_iter().map(DVector::from_vec).collect();
        DiscreteMeasure::new(atoms, raw.masses)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure {
            atoms: m
                .atoms
                .iter()
                .map(|a| a.iter().copied().collect())
                .collect(),
            masses: m.masses,
        }
    }
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<DVector<f64>>, masses: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(GeomError::InvalidParameter(
                "a measure needs at least one atom".into(),
            ));
        }
        if atoms.len() != masses.len() {
            return Err(GeomError::LengthMismatch {
                expected: atoms.len(),
                got: masses.len(),
            });
        }
        let d = atoms[0].len();
        if let Some(a) = atoms.iter().find(|a| a.len() != d) {
            return Err(GeomError::DimensionMismatch {
                expected: d,
                got: a.len(),
            });
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(GeomError::InvalidParameter(format!(
                "mass {m} is not positive"
            )));
        }
        let total = compensated_sum(masses.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(GeomError::MeasureNotNormalized { total });
        }
        Ok(Self { atoms, masses })
    }

    /// `n` atoms of mass `1/n`.
    pub fn uniform(atoms: Vec<DVector<f64>>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn atoms(&self) -> &[DVector<f64>] {
        &self.atoms
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Equal counts and all masses `1/n` within [`MASS_TOL`].
    fn check_monge(&self, other: &DiscreteMeasure) -> Result<()> {
        let n = self.len();
        let equal = |m: &DiscreteMeasure| {
            m.masses
                .iter()
                .all(|w| (w - 1.0 / n as f64).abs() <= MASS_TOL)
        };
        if other.len() != n || !equal(self) || !equal(other) {
            return Err(GeomError::MongeRegimeRequired);
        }
        if other.atoms[0].len() != self.atoms[0].len() {
            return Err(GeomError::DimensionMismatch {
                expected: self.atoms[0].len(),
                got: other.atoms[0].len(),
            });
        }
        Ok(())
    }
}

fn check_normalized(q: &MapField) -> Result<()> {
    let total = q.domain().total_weight();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(GeomError::MeasureNotNormalized { total });
    }
    Ok(())
}

/// `q_*μ`: atoms at the sample values, equal atoms merged (first
/// occurrence order) with their masses added.
pub fn pushforward_measure(q: &MapField) -> Result<DiscreteMeasure> {
    check_normalized(q)?;
    let mut atoms: Vec<DVector<f64>> = Vec::new();
    let mut masses: Vec<Vec<f64>> = Vec::new();
    for (x, w) in q.values().iter().zip(q.domain().weights()) {
        match atoms.iter().position(|a| a == x) {
            Some(j) => masses[j].push(*w),
            None => {
                atoms.push(x.clone());
                masses.push(vec![*w]);
            }
        }
    }
    let masses = masses.into_iter().map(compensated_sum).collect();
    DiscreteMeasure::new(atoms, masses)
}

/// Empirical measure of the samples without merging (one atom per sample).
pub fn empirical_measure(q: &MapField) -> Result<DiscreteMeasure> {
    check_normalized(q)?;
    DiscreteMeasure::new(q.values().to_vec(), q.domain().weights().to_vec())
}

/// A matching of source atom `i` to target atom `perm[i]` and its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub cost: f64,
}

/// Ground cost between atoms.
#[derive(Debug, Clone, Copy)]
pub enum GroundCost<'a> {
    /// `|x − y|²`.
    SquaredEuclidean,
    /// `d_N(x, y)²` through the log map of a registry manifold.
    SquaredGeodesic(&'a Manifold),
}

impl GroundCost<'_> {
    fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        match self {
            GroundCost::SquaredEuclidean => Ok((x - y).norm_squared()),
            GroundCost::SquaredGeodesic(man) => {
                let h = log_point(man, x, y, &LogOptions::default())?;
                man.inner(x, &h, &h)
            }
        }
    }
}

/// `n × n` matrix of ground costs, row-major.
fn cost_matrix(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    ground: GroundCost<'_>,
) -> Result<Vec<Vec<f64>>> {
    mu.atoms
        .par_iter()
        .map(|x| {
            nu.atoms
                .iter()
                .map(|y| ground.eval(x, y))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// `Σ_i μ_i · c(x_i, y_{σ(i)})`, compensated, in index order.
pub fn assignment_cost(mu: &DiscreteMeasure, costs: &[Vec<f64>], perm: &[usize]) -> f64 {
    compensated_sum(
        perm.iter()
            .enumerate()
            .map(|(i, &j)| mu.masses[i] * costs[i][j]),
    )
}

/// Exhaustive search over all `n!` matchings (`n ≤ 8`). Blocks with a
/// fixed first image run in parallel; ties go to the lexicographically
/// smallest permutation.
pub fn wasserstein2_bruteforce(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Assignment> {
    wasserstein2_bruteforce_with(mu, nu, GroundCost::SquaredEuclidean)
}

pub fn wasserstein2_bruteforce_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    ground: GroundCost<'_>,
) -> Result<Assignment> {
    if mu.len() > BRUTEFORCE_MAX_ATOMS || nu.len() > BRUTEFORCE_MAX_ATOMS {
        return Err(GeomError::TooManyAtoms(mu.len().max(nu.len())));
    }
    mu.check_monge(nu)?;
    let costs = cost_matrix(mu, nu, ground)?;
    let n = mu.len();
    let best_in_block = |first: usize| -> Assignment {
        let rest: Vec<usize> = (0..n).filter(|&j| j != first).collect();
        let mut best: Option<Assignment> = None;
        for tail in rest.into_iter().permutations(n - 1) {
            let mut perm = Vec::with_capacity(n);
            perm.push(first);
            perm.extend(tail);
            let cost = assignment_cost(mu, &costs, &perm);
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                best = Some(Assignment { perm, cost });
            }
        }
        best.expect("n ≥ 1")
    };
    let blocks: Vec<Assignment> = (0..n).into_par_iter().map(best_in_block).collect();
    Ok(blocks
        .into_iter()
        .reduce(|a, b| if b.cost < a.cost { b } else { a })
        .expect("n ≥ 1"))
}

/// Shortest-augmenting-path (Hungarian) solver, `O(n³)`.
pub fn wasserstein2_assignment(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Assignment> {
    wasserstein2_assignment_with(mu, nu, GroundCost::SquaredEuclidean)
}

pub fn wasserstein2_assignment_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    ground: GroundCost<'_>,
) -> Result<Assignment> {
    mu.check_monge(nu)?;
    let costs = cost_matrix(mu, nu, ground)?;
    let perm = hungarian(&costs);
    let cost = assignment_cost(mu, &costs, &perm);
    Ok(Assignment { perm, cost })
}

/// Minimum-cost perfect matching of a square cost matrix; returns
/// `perm[row] = column`.
pub fn hungarian(a: &[Vec<f64>]) -> Vec<usize> {
    let n = a.len();
    // 1-based potentials; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

/// Outcome of the submersion check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmersionReport {
    /// `dist_{L²}(id, φ)² = Σ w_i |φ_i − id_i|²`.
    pub l2_cost: f64,
    /// `W₂(μ, φ_*μ)²`.
    pub w2_cost: f64,
    /// The optimal matching of base samples to rearranged samples.
    pub optimal_perm: Vec<usize>,
    /// `l2_cost ≥ w2_cost − 1e-12`.
    pub inequality_holds: bool,
    /// `|l2_cost − w2_cost| ≤ 1e-12`: φ's own matching is optimal.
    pub equality: bool,
}

/// Compares the L² cost of a rearrangement `φ` of the flat configuration
/// `base` with the Wasserstein cost between the empirical measures. The
/// optimum comes from the assignment solver, which is validated against
/// brute force separately.
pub fn submersion_check(base: &MapField, phi: &MapField) -> Result<SubmersionReport> {
    base.check_same_space(phi)?;
    if !base.manifold().is_flat() {
        return Err(GeomError::UnsupportedRepresentation(
            "submersion check needs a flat target",
        ));
    }
    let mu = empirical_measure(base)?;
    let nu = empirical_measure(phi)?;
    mu.check_monge(&nu)?;
    let ground = GroundCost::SquaredEuclidean;
    let costs = cost_matrix(&mu, &nu, ground)?;
    let identity: Vec<usize> = (0..mu.len()).collect();
    let l2_cost = assignment_cost(&mu, &costs, &identity);
    let optimum = wasserstein2_assignment(&mu, &nu)?;
    Ok(SubmersionReport {
        l2_cost,
        w2_cost: optimum.cost,
        inequality_holds: l2_cost >= optimum.cost - 1e-12,
        equality: (l2_cost - optimum.cost).abs() <= 1e-12,
        optimal_perm: optimum.perm,
    })
}

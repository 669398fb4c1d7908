//! The discrete `Diff(M)` action: right composition by sample permutations.
//!
//! A permutation σ of the samples stands in for a diffeomorphism φ, and
//! `(q∘φ)_i = q_{σ(i)}`. The acted field keeps the domain's measure μ, so
//! `G_{q∘φ}(h∘φ, k∘φ) = Σ_i w_i g(h_{σ(i)}, k_{σ(i)})`, which equals
//! `G_q(h, k)` for all fields exactly when the pulled weights
//! `w_{σ(i)}` coincide with `w_i` — the discrete `φ_*μ = μ`.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::mapspace::{
    connector_field, curvature_field, exp_field, l2_inner, spray_field, MapField, QuadratureDomain,
    SecondTangentField, TangentField,
};
use crate::verification::OracleReport;

/// A permutation of sample indices together with the weights it pulls back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDiffeo {
    perm: Vec<usize>,
    pulled_weights: Vec<f64>,
}

fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        if p >= perm.len() {
            return Err(GeomError::NotAPermutation(format!(
                "entry {i} is {p}, outside 0..{}",
                perm.len()
            )));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(GeomError::NotAPermutation(format!(
                "index {p} appears twice"
            )));
        }
    }
    Ok(())
}

impl DiscreteDiffeo {
    /// σ on `domain`, with pulled weights `w_{σ(i)}`.
    pub fn new(perm: Vec<usize>, domain: &QuadratureDomain) -> Result<Self> {
        if perm.len() != domain.len() {
            return Err(GeomError::SizeMismatch {
                expected: domain.len(),
                got: perm.len(),
            });
        }
        check_permutation(&perm)?;
        let pulled_weights = perm.iter().map(|&p| domain.weights()[p]).collect();
        Ok(Self {
            perm,
            pulled_weights,
        })
    }

    pub fn identity(domain: &QuadratureDomain) -> Self {
        Self::new((0..domain.len()).collect(), domain).expect("identity is a permutation")
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn pulled_weights(&self) -> &[f64] {
        &self.pulled_weights
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `φ_*μ = μ`: every pulled weight equals the original weight.
    pub fn is_measure_preserving(&self, domain: &QuadratureDomain) -> bool {
        self.pulled_weights == domain.weights()
    }

    /// The diffeo whose action is `act(self) ∘ act(other)`:
    /// `ρ(i) = other.perm[self.perm[i]]`.
    pub fn compose(&self, other: &DiscreteDiffeo) -> Result<DiscreteDiffeo> {
        if self.len() != other.len() {
            return Err(GeomError::SizeMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(DiscreteDiffeo {
            perm: self.perm.iter().map(|&p| other.perm[p]).collect(),
            pulled_weights: self.perm.iter().map(|&p| other.pulled_weights[p]).collect(),
        })
    }

    /// The inverse permutation.
    pub fn inverse(&self, domain: &QuadratureDomain) -> Result<DiscreteDiffeo> {
        let mut inv = vec![0; self.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self::new(inv, domain)
    }

    fn check_size(&self, m: usize) -> Result<()> {
        if self.len() != m {
            return Err(GeomError::SizeMismatch {
                expected: m,
                got: self.len(),
            });
        }
        Ok(())
    }

    fn reindex<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| items[p].clone()).collect()
    }
}

/// `q∘φ`.
pub fn act_on_map(phi: &DiscreteDiffeo, q: &MapField) -> Result<MapField> {
    phi.check_size(q.len())?;
    Ok(MapField::from_parts_unchecked(
        q.domain().clone(),
        q.manifold().clone(),
        phi.reindex(q.values()),
    ))
}

/// `h∘φ`, based at `q∘φ`.
pub fn act_on_tangent(phi: &DiscreteDiffeo, h: &TangentField) -> Result<TangentField> {
    let base = act_on_map(phi, h.base())?;
    Ok(TangentField::from_parts_unchecked(
        base,
        phi.reindex(h.vecs()),
    ))
}

/// `ξ∘φ`.
pub fn act_on_second(phi: &DiscreteDiffeo, xi: &SecondTangentField) -> Result<SecondTangentField> {
    phi.check_size(xi.len())?;
    SecondTangentField::new(
        xi.domain().clone(),
        xi.manifold().clone(),
        phi.reindex(xi.quads()),
    )
}

/// Result of comparing `G_{q∘φ}(h∘φ, k∘φ)` with `G_q(h, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub lhs: f64,
    pub rhs: f64,
    pub measure_preserving: bool,
}

/// `lhs = G_{q∘φ}(h∘φ, k∘φ)`, `rhs = G_q(h, k)`, and whether φ preserves μ.
pub fn check_metric_invariance(
    phi: &DiscreteDiffeo,
    q: &MapField,
    h: &TangentField,
    k: &TangentField,
) -> Result<InvarianceReport> {
    let rhs = l2_inner(q, h, k)?;
    let lhs = l2_inner(
        &act_on_map(phi, q)?,
        &act_on_tangent(phi, h)?,
        &act_on_tangent(phi, k)?,
    )?;
    Ok(InvarianceReport {
        lhs,
        rhs,
        measure_preserving: phi.is_measure_preserving(q.domain()),
    })
}

/// The lifted operators checked for equivariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquivariantOp {
    Connector,
    Spray,
    Exp,
    Curvature,
}

impl EquivariantOp {
    pub const ALL: [EquivariantOp; 4] = [Self::Connector, Self::Spray, Self::Exp, Self::Curvature];

    pub fn name(self) -> &'static str {
        match self {
            Self::Connector => "connector",
            Self::Spray => "spray",
            Self::Exp => "exp",
            Self::Curvature => "curvature",
        }
    }
}

impl std::str::FromStr for EquivariantOp {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| GeomError::InvalidParameter(format!("unknown operation `{s}`")))
    }
}

/// Inputs for an equivariance check: three tangent fields at one base map.
/// The connector uses `ξ = (q, h; k, l)`, spray and exp use `h`, curvature
/// uses `R(h, k)l`.
#[derive(Debug, Clone)]
pub struct EquivarianceInputs {
    pub h: TangentField,
    pub k: TangentField,
    pub l: TangentField,
    pub steps: usize,
}

/// Bitwise distance between two coordinate lists: 0 iff every entry has
/// identical bits, otherwise the largest absolute difference (at least the
/// smallest positive normal, so that `-0.0` vs `0.0` still registers).
fn bitwise_error<'a>(
    a: impl IntoIterator<Item = &'a nalgebra::DVector<f64>>,
    b: impl IntoIterator<Item = &'a nalgebra::DVector<f64>>,
) -> f64 {
    let mut err = 0.0_f64;
    for (x, y) in a.into_iter().zip(b) {
        if x.len() != y.len() {
            return f64::INFINITY;
        }
        for (p, q) in x.iter().zip(y.iter()) {
            if p.to_bits() != q.to_bits() {
                err = err.max((p - q).abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    err
}

fn second_coords(xi: &SecondTangentField) -> Vec<nalgebra::DVector<f64>> {
    xi.quads()
        .iter()
        .flat_map(|q| [q.x.clone(), q.h.clone(), q.k.clone(), q.l.clone()])
        .collect()
}

/// Compares `op(inputs∘φ)` with `op(inputs)∘φ` bit for bit.
pub fn check_equivariance(
    phi: &DiscreteDiffeo,
    op: EquivariantOp,
    inputs: &EquivarianceInputs,
) -> Result<OracleReport> {
    let EquivarianceInputs { h, k, l, steps } = inputs;
    let q = h.base();
    for f in [k, l] {
        q.check_same_map(f.base())?;
    }
    let (hp, kp, lp) = (
        act_on_tangent(phi, h)?,
        act_on_tangent(phi, k)?,
        act_on_tangent(phi, l)?,
    );
    let err = match op {
        EquivariantOp::Connector => {
            let build = |h: &TangentField, k: &TangentField, l: &TangentField| {
                let quads = (0..h.len())
                    .map(|i| {
                        crate::manifold::SecondTangentVector::new(
                            h.base().values()[i].clone(),
                            h.vecs()[i].clone(),
                            k.vecs()[i].clone(),
                            l.vecs()[i].clone(),
                        )
                    })
                    .collect();
                SecondTangentField::new(h.domain().clone(), h.manifold().clone(), quads)
            };
            let after = connector_field(&build(&hp, &kp, &lp)?)?;
            let before = act_on_tangent(phi, &connector_field(&build(h, k, l)?)?)?;
            bitwise_error(after.base().values(), before.base().values())
                .max(bitwise_error(after.vecs(), before.vecs()))
        }
        EquivariantOp::Spray => {
            let after = second_coords(&spray_field(&hp)?);
            let before = second_coords(&act_on_second(phi, &spray_field(h)?)?);
            bitwise_error(&after, &before)
        }
        EquivariantOp::Exp => {
            let after = exp_field(&hp, *steps)?;
            let before = act_on_map(phi, &exp_field(h, *steps)?)?;
            bitwise_error(after.values(), before.values())
        }
        EquivariantOp::Curvature => {
            let after = curvature_field(hp.base(), &hp, &kp, &lp)?;
            let before = act_on_tangent(phi, &curvature_field(q, h, k, l)?)?;
            bitwise_error(after.vecs(), before.vecs())
        }
    };
    Ok(OracleReport::new(
        format!("equivariance_{}", op.name()),
        err,
        0.0,
        1,
    ))
}

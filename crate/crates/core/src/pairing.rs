//! Symmetric and antisymmetric parabolic pairings `E ⊗ E -> L` and their transport along
//! pullback and direct image.
//!
//! Filtrations are indexed by rationals: `E_β = E^{⌈β r⌉}` (extended by `E_{β+1} = t E_β`).
//! For a value line with twist `c` and weight `λ`, `L_δ = t^{c + ⌈δ - λ⌉} R`. The level `β`
//! of `Hom(E, L)` is `{φ : φ(E_δ) ⊆ L_{β+δ} for all δ}`, and a form `G` (pairing
//! `x^T G y`) is nondegenerate when `G^T E_β` equals that level for every `β`.

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functors::{pullback_parabolic, restrict_vector, CoverProfile};
use crate::lattice::{det_valuation, Lattice};
use crate::local::LocalElement;
use crate::matrix::LocalMatrix;
use crate::parabolic::{ParabolicBundle, ParabolicPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingKind {
    Symmetric,
    Antisymmetric,
}

impl PairingKind {
    pub fn sign(self) -> i64 {
        match self {
            PairingKind::Symmetric => 1,
            PairingKind::Antisymmetric => -1,
        }
    }

    pub fn flipped(self) -> PairingKind {
        match self {
            PairingKind::Symmetric => PairingKind::Antisymmetric,
            PairingKind::Antisymmetric => PairingKind::Symmetric,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PairingKind::Symmetric => "symmetric",
            PairingKind::Antisymmetric => "antisymmetric",
        }
    }

    /// `G^T = ±G`.
    pub fn holds_for(self, form: &LocalMatrix) -> bool {
        let t = form.transpose();
        match self {
            PairingKind::Symmetric => &t == form,
            PairingKind::Antisymmetric => t == form.neg(),
        }
    }
}

/// Local data of a rank-1 chain: twist `c` (`L^0 = t^c R`) and weight `λ`.
fn line_data(l: &ParabolicPoint) -> Result<(i64, Ratio<i64>)> {
    if l.rank() != 1 {
        return Err(Error::ValueLineMismatch(format!(
            "value line has rank {}",
            l.rank()
        )));
    }
    let c = l.level(0).exponents()[0];
    let (w, _) = l.weights().into_iter().next().expect("rank one");
    Ok((c, w.as_ratio()))
}

fn ceil(x: Ratio<i64>) -> i64 {
    x.ceil().to_integer()
}

/// `Σ_{j<r} t^{-ℓ(β + j/r)} E^j` with `ℓ(δ) = c + ⌈δ - λ⌉`; its dual is `Hom(E, L)_β`.
fn hom_predual(
    e: &ParabolicPoint,
    c: i64,
    lambda: Ratio<i64>,
    beta: Ratio<i64>,
) -> Result<Lattice> {
    let r = e.order() as i64;
    let mut gens: Option<LocalMatrix> = None;
    for j in 0..r {
        let ell = c + ceil(beta + Ratio::new(j, r) - lambda);
        let g = e.level(j as usize).basis().shift(-ell);
        gens = Some(match gens {
            None => g,
            Some(acc) => acc.hstack(&g),
        });
    }
    Lattice::from_generators(e.field(), &gens.expect("order >= 1"))
}

/// `Hom(E, L)_β = ∩_{j<r} t^{ℓ(β + j/r)} (E^j)^∨`.
fn hom_level(e: &ParabolicPoint, c: i64, lambda: Ratio<i64>, beta: Ratio<i64>) -> Result<Lattice> {
    Ok(hom_predual(e, c, lambda, beta)?.dual())
}

/// `Hom(E, L)` as a chain of the same order as `E`; needs `λ ∈ (1/r)Z`.
pub fn hom_chain(e: &ParabolicPoint, value: &ParabolicPoint) -> Result<ParabolicPoint> {
    let (c, lambda) = line_data(value)?;
    let r = e.order() as i64;
    if (lambda * r).denom() != &1 {
        return Err(Error::ValueLineMismatch(format!(
            "value weight {lambda} is not a multiple of 1/{r}"
        )));
    }
    let chain = (0..=r)
        .map(|a| hom_level(e, c, lambda, Ratio::new(a, r)))
        .collect::<Result<Vec<_>>>()?;
    ParabolicPoint::new(e.order(), chain)
}

/// The parabolic dual chain: `Hom(E, R)` with the trivial value line.
pub fn dual_chain(e: &ParabolicPoint) -> ParabolicPoint {
    let field = e.field();
    hom_chain(e, &ParabolicPoint::trivial(Lattice::standard(field, 1)))
        .expect("dual of a valid chain")
}

/// Nondegeneracy of `G` at one point: `G^T E_β = Hom(E, L)_β` for all `β`.
pub fn check_local_pairing(
    form: &LocalMatrix,
    e: &ParabolicPoint,
    value: &ParabolicPoint,
) -> Result<bool> {
    let n = e.rank();
    if form.rows() != n || form.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} form on a rank-{n} chain",
            form.rows(),
            form.cols()
        )));
    }
    let (c, lambda) = line_data(value)?;
    let r = e.order() as i64;
    let big_n = r.lcm(lambda.denom());
    // v(det G), or degenerate over K
    let Some(det_val) = det_valuation(form) else {
        return Ok(false);
    };
    // G^T E_β = S^∨ iff G^T E_β ⊆ S^∨ (B_β^T G B_S integral) and both have the same volume
    for a in 0..big_n {
        let beta = Ratio::new(a, big_n);
        let level = e.level_extended(ceil(beta * r));
        let pre = hom_predual(e, c, lambda, beta)?;
        if level.volume() + det_val != -pre.volume() {
            return Ok(false);
        }
        if !level
            .basis()
            .transpose()
            .mul(form)
            .mul(pre.basis())
            .is_integral()
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A pairing at a single marked point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalPairing {
    pub value: ParabolicPoint,
    pub form: LocalMatrix,
    pub kind: PairingKind,
}

impl LocalPairing {
    /// Symmetry plus nondegeneracy against `e`.
    pub fn check(&self, e: &ParabolicPoint) -> Result<bool> {
        if self.form.rows() != e.rank() || self.form.cols() != e.rank() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} form on a rank-{} chain",
                self.form.rows(),
                self.form.cols(),
                e.rank()
            )));
        }
        Ok(self.kind.holds_for(&self.form) && check_local_pairing(&self.form, e, &self.value)?)
    }

    fn require(&self, e: &ParabolicPoint) -> Result<()> {
        if !self.kind.holds_for(&self.form) {
            return Err(Error::NotAPairing(format!(
                "form is not {}",
                self.kind.name()
            )));
        }
        if !check_local_pairing(&self.form, e, &self.value)? {
            return Err(Error::NotAPairing(
                "form is degenerate against the chain".into(),
            ));
        }
        Ok(())
    }
}

/// A pairing into a rank-1 parabolic bundle of parabolic degree 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParabolicPairing {
    value_line: ParabolicBundle,
    form: LocalMatrix,
    kind: PairingKind,
}

impl ParabolicPairing {
    pub fn new(value_line: ParabolicBundle, form: LocalMatrix, kind: PairingKind) -> Result<Self> {
        if value_line.rank() != 1 {
            return Err(Error::NotAPairing("value line must have rank 1".into()));
        }
        if value_line.parabolic_degree() != Ratio::from_integer(0) {
            return Err(Error::NotAPairing(format!(
                "value line has parabolic degree {}",
                value_line.parabolic_degree()
            )));
        }
        if !form.is_square() {
            return Err(Error::ShapeMismatch("form must be square".into()));
        }
        Ok(ParabolicPairing {
            value_line,
            form,
            kind,
        })
    }

    pub fn value_line(&self) -> &ParabolicBundle {
        &self.value_line
    }

    pub fn form(&self) -> &LocalMatrix {
        &self.form
    }

    pub fn kind(&self) -> PairingKind {
        self.kind
    }

    /// The pairing at one point; missing chains are trivial.
    pub fn at(&self, label: &str, field: Field) -> LocalPairing {
        LocalPairing {
            value: self
                .value_line
                .point(label)
                .cloned()
                .unwrap_or_else(|| ParabolicPoint::trivial(Lattice::standard(field, 1))),
            form: self.form.clone(),
            kind: self.kind,
        }
    }
}

fn point_or_trivial(e: &ParabolicBundle, label: &str, field: Field) -> ParabolicPoint {
    e.point(label)
        .cloned()
        .unwrap_or_else(|| ParabolicPoint::trivial(Lattice::standard(field, e.rank())))
}

/// Symmetry and nondegeneracy at every marked point of `e` or of the value line.
pub fn check_pairing(p: &ParabolicPairing, e: &ParabolicBundle, field: Field) -> Result<bool> {
    if p.form.rows() != e.rank() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} form on a rank-{} bundle",
            p.form.rows(),
            p.form.cols(),
            e.rank()
        )));
    }
    if !p.kind.holds_for(&p.form) {
        return Ok(false);
    }
    let mut labels: Vec<&String> = e.points().keys().collect();
    labels.extend(p.value_line.points().keys());
    labels.sort();
    labels.dedup();
    if labels.is_empty() {
        let triv = ParabolicPoint::trivial(Lattice::standard(field, e.rank()));
        return check_local_pairing(
            &p.form,
            &triv,
            &ParabolicPoint::trivial(Lattice::standard(field, 1)),
        );
    }
    for label in labels {
        let local = p.at(label, field);
        if !check_local_pairing(&p.form, &point_or_trivial(e, label, field), &local.value)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Pulled pairing on one branch: form `ι(G)` on the pulled chain, valued in the pulled line.
pub fn pullback_pairing(
    profile: &CoverProfile,
    pairing: &LocalPairing,
    f: &ParabolicPoint,
    label: &str,
) -> Result<(ParabolicPoint, LocalPairing)> {
    pairing.require(f)?;
    let b = profile.branch(label)?;
    let pulled = pullback_parabolic(profile, f, label)?;
    let value = pullback_parabolic(profile, &pairing.value, label)?.point;
    let out = LocalPairing {
        value,
        form: pairing.form.inflate(b.e, &b.u),
        kind: pairing.kind,
    };
    Ok((pulled.point, out))
}

/// Coordinate of `1` in the basis `{1, t, ..., t^{e-1}}` of `K_X` over `K_Y`.
pub fn trace_coordinate(x: &LocalElement, e: u32, u: &crate::field::Scalar) -> LocalElement {
    restrict_vector(std::slice::from_ref(x), e, u).swap_remove(0)
}

/// The form `(x, y) ↦ τ(x^T G y)` on the restricted coordinates, `τ` the coordinate of `1`.
pub fn push_form(form: &LocalMatrix, e: u32, u: &crate::field::Scalar) -> LocalMatrix {
    let n = form.rows();
    let ne = n * e as usize;
    let mut out = LocalMatrix::zeros(ne, ne);
    for i in 0..n {
        for k in 0..n {
            let g = form.get(i, k);
            if g.is_zero() {
                continue;
            }
            for rho in 0..e as usize {
                for sigma in 0..e as usize {
                    let v = trace_coordinate(&g.shift((rho + sigma) as i64), e, u);
                    out.set(i * e as usize + rho, k * e as usize + sigma, v);
                }
            }
        }
    }
    out
}

/// Direct image of branch pairings valued in the pullbacks of `value` (a rank-1 chain of the
/// target order). The result is block diagonal in branch order.
pub fn pushforward_pairing(
    profile: &CoverProfile,
    value: &ParabolicPoint,
    branches: &[(ParabolicPoint, LocalPairing)],
) -> Result<LocalPairing> {
    if branches.len() != profile.branches().len() {
        return Err(Error::ProfileMismatch(format!(
            "profile has {} branches, got {}",
            profile.branches().len(),
            branches.len()
        )));
    }
    let kind = branches
        .first()
        .map(|(_, p)| p.kind)
        .ok_or_else(|| Error::ProfileMismatch("no branches".into()))?;
    let mut blocks = Vec::with_capacity(branches.len());
    for (b, (e, p)) in profile.branches().iter().zip(branches) {
        if p.kind != kind {
            return Err(Error::NotAPairing(
                "branch pairings of different kinds".into(),
            ));
        }
        p.require(e)?;
        let expected = pullback_parabolic(profile, value, &b.label)?.point;
        if p.value != expected {
            return Err(Error::ValueLineMismatch(format!(
                "branch {:?} is not valued in the pullback of the target line",
                b.label
            )));
        }
        blocks.push(push_form(&p.form, b.e, &b.u));
    }
    let refs: Vec<&LocalMatrix> = blocks.iter().collect();
    Ok(LocalPairing {
        value: value.clone(),
        form: LocalMatrix::block_diag(&refs),
        kind,
    })
}

/// Hyperbolic pairing on `P ⊕ Hom(P, L)`: `(x, φ)·(y, ψ) = ε x^T ψ + φ^T y`.
pub fn hyperbolic(
    p: &ParabolicPoint,
    value: &ParabolicPoint,
    kind: PairingKind,
) -> Result<(ParabolicPoint, LocalPairing)> {
    let field = p.field();
    let h = hom_chain(p, value)?;
    let e = ParabolicPoint::direct_sum(&[p, &h])?;
    let n = p.rank();
    let mut g = LocalMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        g.set(
            i,
            n + i,
            LocalElement::constant(field.from_i64(kind.sign())),
        );
        g.set(n + i, i, LocalElement::one(field));
    }
    Ok((
        e,
        LocalPairing {
            value: value.clone(),
            form: g,
            kind,
        },
    ))
}

/// `G ↦ A^{-T} G A^{-1}` for a change of coordinates `x ↦ A x` with known inverse.
pub fn transport_form(form: &LocalMatrix, a_inv: &LocalMatrix) -> LocalMatrix {
    a_inv.transpose().mul(form).mul(a_inv)
}

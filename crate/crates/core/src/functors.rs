//! Direct image and pullback along a finite cover, on both the parabolic side and the
//! graded (root-stack) side.
//!
//! A cover is described locally over one target point by a [`CoverProfile`]: branches with
//! ramification `e_j`, source order `r_j`, and a unit `u_j` with `ϖ_y = u_j t^{e_j}`.
//! Coordinates on the target chart use the basis `{1, t, ..., t^{e-1}}` of `K_X` over `K_Y`,
//! so a source vector of rank `n` becomes a target vector of rank `n e` with index `i e + ρ`.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::lattice::Lattice;
use crate::local::LocalElement;
use crate::matrix::LocalMatrix;
use crate::parabolic::{ParabolicBundle, ParabolicPoint, Weight, WeightMultiset};
use crate::rootstack::GradedModule;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub label: String,
    pub e: u32,
    pub r: u32,
    pub u: Scalar,
}

/// Local shape of a cover over one target point of order `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverProfile {
    target_order: u32,
    branches: Vec<Branch>,
    is_marked_target: bool,
}

impl CoverProfile {
    pub fn new(target_order: u32, branches: Vec<Branch>, is_marked_target: bool) -> Result<Self> {
        if target_order == 0 {
            return Err(Error::ProfileMismatch(
                "target order must be at least 1".into(),
            ));
        }
        if branches.is_empty() {
            return Err(Error::ProfileMismatch(
                "a cover needs at least one branch".into(),
            ));
        }
        if !is_marked_target && target_order != 1 {
            return Err(Error::ProfileMismatch(format!(
                "unmarked target point with order {target_order}"
            )));
        }
        let mut seen = BTreeSet::new();
        for b in &branches {
            if !seen.insert(b.label.as_str()) {
                return Err(Error::ProfileMismatch(format!(
                    "duplicate branch label {:?}",
                    b.label
                )));
            }
            if b.e == 0 || b.r == 0 || b.r as u64 * b.e as u64 != target_order as u64 {
                return Err(Error::InadmissibleProfile {
                    branch: b.label.clone(),
                    s: target_order,
                    r: b.r,
                    e: b.e,
                });
            }
            if b.u.is_zero() {
                return Err(Error::ProfileMismatch(format!(
                    "branch {:?} has u = 0",
                    b.label
                )));
            }
            let p = b.u.field().characteristic();
            if p != 0 && ((b.e as u64).is_multiple_of(p) || (target_order as u64).is_multiple_of(p))
            {
                return Err(Error::ProfileMismatch(format!(
                    "characteristic {p} divides e = {} or s = {target_order}",
                    b.e
                )));
            }
        }
        Ok(CoverProfile {
            target_order,
            branches,
            is_marked_target,
        })
    }

    /// One branch of ramification `e` with `u = 1` over a target of order `r e`.
    pub fn single(field: Field, label: &str, e: u32, r: u32) -> Result<Self> {
        Self::new(
            r * e,
            vec![Branch {
                label: label.into(),
                e,
                r,
                u: field.one(),
            }],
            true,
        )
    }

    pub fn target_order(&self) -> u32 {
        self.target_order
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn is_marked_target(&self) -> bool {
        self.is_marked_target
    }

    pub fn branch(&self, label: &str) -> Result<&Branch> {
        self.branches
            .iter()
            .find(|b| b.label == label)
            .ok_or_else(|| Error::ProfileMismatch(format!("no branch labelled {label:?}")))
    }

    /// `Σ e_j`, the local degree of the cover.
    pub fn local_degree(&self) -> u32 {
        self.branches.iter().map(|b| b.e).sum()
    }
}

/// `E^a` for `a = r l + k`, `0 <= a < r e`, equal to `t^l E^k`.
pub fn refine_branch_filtration(p: &ParabolicPoint, e: u32) -> Vec<Lattice> {
    let r = p.order();
    (0..r * e)
        .map(|a| p.level((a % r) as usize).scale((a / r) as i64))
        .collect()
}

/// Rewrites a source vector in target coordinates.
pub fn restrict_vector(v: &[LocalElement], e: u32, u: &Scalar) -> Vec<LocalElement> {
    let e_i = e as i64;
    let mut slots: Vec<BTreeMap<i64, Scalar>> = vec![BTreeMap::new(); v.len() * e as usize];
    for (i, x) in v.iter().enumerate() {
        for (m, c) in x.terms() {
            let (q, rho) = (m.div_euclid(e_i), m.rem_euclid(e_i));
            let val = c * &u.pow(-q);
            let slot = slots[i * e as usize + rho as usize]
                .entry(q)
                .or_insert_with(|| val.field().zero());
            *slot = &*slot + &val;
        }
    }
    slots.into_iter().map(collect_terms).collect()
}

fn collect_terms(terms: BTreeMap<i64, Scalar>) -> LocalElement {
    let (Some(&lo), Some(&hi)) = (terms.keys().next(), terms.keys().next_back()) else {
        return LocalElement::zero();
    };
    let field = terms.values().next().unwrap().field();
    let mut coeffs = vec![field.zero(); (hi - lo + 1) as usize];
    for (k, c) in terms {
        coeffs[(k - lo) as usize] = c;
    }
    LocalElement::from_coeffs(lo, coeffs)
}

/// The `K_Y`-linear map underlying a `K_X`-linear matrix.
pub fn restrict_matrix(a: &LocalMatrix, e: u32, u: &Scalar) -> LocalMatrix {
    let mut cols = Vec::with_capacity(a.cols() * e as usize);
    for k in 0..a.cols() {
        for rho in 0..e as i64 {
            let col: Vec<LocalElement> = a.column(k).iter().map(|x| x.shift(rho)).collect();
            cols.push(restrict_vector(&col, e, u));
        }
    }
    LocalMatrix::from_columns(a.rows() * e as usize, cols)
}

/// The source lattice viewed over the target ring, of rank `n e`.
pub fn restrict_scalars(l: &Lattice, e: u32, u: &Scalar) -> Result<Lattice> {
    if e == 1 && u.is_one() {
        return Ok(l.clone());
    }
    Lattice::from_generators(l.field(), &restrict_matrix(l.basis(), e, u))
}

fn check_branches(profile: &CoverProfile, orders: &[u32], ranks: &[usize]) -> Result<()> {
    if orders.len() != profile.branches.len() {
        return Err(Error::ProfileMismatch(format!(
            "profile has {} branches, got {} objects",
            profile.branches.len(),
            orders.len()
        )));
    }
    for (b, &r) in profile.branches.iter().zip(orders) {
        if r != b.r {
            return Err(Error::ProfileMismatch(format!(
                "branch {:?} has order {r}, profile says {}",
                b.label, b.r
            )));
        }
    }
    if ranks.iter().sum::<usize>() == 0 {
        return Err(Error::ProfileMismatch("all branches have rank 0".into()));
    }
    Ok(())
}

/// Parabolic direct image: level `a/s` is `⊕_j restrict_scalars(refined_j[a])`.
pub fn pushforward_parabolic(
    profile: &CoverProfile,
    branches: &[ParabolicPoint],
) -> Result<ParabolicPoint> {
    let orders: Vec<u32> = branches.iter().map(ParabolicPoint::order).collect();
    let ranks: Vec<usize> = branches.iter().map(ParabolicPoint::rank).collect();
    check_branches(profile, &orders, &ranks)?;
    for p in branches {
        p.validate()?;
    }
    let s = profile.target_order as usize;
    let field = branches[0].field();
    let mut per_branch: Vec<Vec<Lattice>> = Vec::with_capacity(branches.len());
    for (b, p) in profile.branches.iter().zip(branches) {
        let refined = refine_branch_filtration(p, b.e);
        per_branch.push(
            refined
                .iter()
                .map(|l| restrict_scalars(l, b.e, &b.u))
                .collect::<Result<_>>()?,
        );
    }
    let mut chain: Vec<Lattice> = (0..s)
        .map(|a| {
            let parts: Vec<&Lattice> = per_branch.iter().map(|v| &v[a]).collect();
            Lattice::direct_sum(field, &parts)
        })
        .collect();
    chain.push(chain[0].scale(1));
    ParabolicPoint::new(profile.target_order, chain)
}

/// Graded direct image: grade `r l + k` is `⊕_j restrict_scalars(t^{-l} M_{j,k})`.
pub fn pushforward_graded(
    profile: &CoverProfile,
    branches: &[GradedModule],
) -> Result<GradedModule> {
    let orders: Vec<u32> = branches.iter().map(GradedModule::order).collect();
    let ranks: Vec<usize> = branches.iter().map(GradedModule::rank).collect();
    check_branches(profile, &orders, &ranks)?;
    for m in branches {
        m.validate()?;
    }
    let s = profile.target_order;
    let field = branches[0].field();
    let mut per_branch: Vec<Vec<Lattice>> = Vec::with_capacity(branches.len());
    for (b, m) in profile.branches.iter().zip(branches) {
        per_branch.push(
            (0..s)
                .map(|g| {
                    let (l, k) = (g / b.r, g % b.r);
                    restrict_scalars(&m.piece(k as usize).scale(-(l as i64)), b.e, &b.u)
                })
                .collect::<Result<_>>()?,
        );
    }
    let pieces = (0..s as usize)
        .map(|g| {
            let parts: Vec<&Lattice> = per_branch.iter().map(|v| &v[g]).collect();
            Lattice::direct_sum(field, &parts)
        })
        .collect();
    GradedModule::new(s, pieces)
}

/// Block-diagonal pushforward of per-branch matrices.
pub fn pushforward_matrix(profile: &CoverProfile, blocks: &[LocalMatrix]) -> Result<LocalMatrix> {
    if blocks.len() != profile.branches.len() {
        return Err(Error::ProfileMismatch(format!(
            "profile has {} branches, got {} matrices",
            profile.branches.len(),
            blocks.len()
        )));
    }
    let restricted: Vec<LocalMatrix> = profile
        .branches
        .iter()
        .zip(blocks)
        .map(|(b, a)| restrict_matrix(a, b.e, &b.u))
        .collect();
    let refs: Vec<&LocalMatrix> = restricted.iter().collect();
    Ok(LocalMatrix::block_diag(&refs))
}

/// Pullback of a target weight: `(⌊α e⌋, {α e})`.
pub fn pullback_parabolic_line(alpha: Weight, e: u32, r: u32) -> Result<(i64, Weight)> {
    let s = r * e;
    let a = alpha.index_over(s).map_err(|_| {
        Error::InadmissibleWeight(format!("weight {alpha} has denominator not dividing {s}"))
    })?;
    Ok(((a / r) as i64, Weight::new(a % r, r)?))
}

/// Result of pulling a chain back to one branch.
///
/// `basis` is `ι(Q)` for the adapted basis `Q` of the target chain; column `k` spans a line
/// with weight index `indices[k]` over the branch and local twist `twists[k]`, so that the
/// pulled chain is the image under `basis` of the diagonal chain `(-twists[k], indices[k])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PulledPoint {
    pub point: ParabolicPoint,
    pub basis: LocalMatrix,
    pub twists: Vec<i64>,
    pub indices: Vec<u32>,
}

impl PulledPoint {
    pub fn total_twist(&self) -> i64 {
        self.twists.iter().sum()
    }
}

fn pulled_lines(branch: &Branch, split_indices: &[u32]) -> (Vec<i64>, Vec<u32>) {
    split_indices
        .iter()
        .map(|&i| ((i / branch.r) as i64, i % branch.r))
        .unzip()
}

/// Parabolic pullback to a branch through the deterministic adapted basis.
pub fn pullback_parabolic(
    profile: &CoverProfile,
    f: &ParabolicPoint,
    label: &str,
) -> Result<PulledPoint> {
    f.validate()?;
    pullback_parabolic_with(profile, f, label, &f.split_into_lines())
}

/// Parabolic pullback through a caller-supplied splitting of `f`.
pub fn pullback_parabolic_with(
    profile: &CoverProfile,
    f: &ParabolicPoint,
    label: &str,
    split: &crate::parabolic::LineSplitting,
) -> Result<PulledPoint> {
    let b = profile.branch(label)?;
    if f.order() != profile.target_order {
        return Err(Error::ProfileMismatch(format!(
            "chain has order {}, target order is {}",
            f.order(),
            profile.target_order
        )));
    }
    let (twists, indices) = pulled_lines(b, &split.indices);
    let basis = split.basis.inflate(b.e, &b.u);
    let lines: Vec<(i64, u32)> = twists
        .iter()
        .zip(&indices)
        .map(|(&c, &a)| (-c, a))
        .collect();
    let point = ParabolicPoint::diagonal(f.field(), b.r, &lines).image(&basis)?;
    Ok(PulledPoint {
        point,
        basis,
        twists,
        indices,
    })
}

/// Graded pullback to a branch: graded lines re-indexed `i -> (i mod r, twist ⌊i/r⌋)`.
pub fn pullback_graded(
    profile: &CoverProfile,
    m: &GradedModule,
    label: &str,
) -> Result<GradedModule> {
    m.validate()?;
    pullback_graded_with(profile, m, label, &m.split_into_lines())
}

pub fn pullback_graded_with(
    profile: &CoverProfile,
    m: &GradedModule,
    label: &str,
    split: &crate::rootstack::GradedSplitting,
) -> Result<GradedModule> {
    let b = profile.branch(label)?;
    if m.order() != profile.target_order {
        return Err(Error::ProfileMismatch(format!(
            "graded module has order {}, target order is {}",
            m.order(),
            profile.target_order
        )));
    }
    let field = m.field();
    let lines: Vec<GradedModule> = split
        .indices()
        .iter()
        .map(|&i| GradedModule::line(field, b.r, i % b.r, -((i / b.r) as i64)))
        .collect();
    let refs: Vec<&GradedModule> = lines.iter().collect();
    GradedModule::direct_sum(&refs)?.image(&split.basis().inflate(b.e, &b.u))
}

/// Pullback of a matrix along a branch: `ϖ_y -> u t^e`.
pub fn pullback_matrix(
    profile: &CoverProfile,
    a: &LocalMatrix,
    label: &str,
) -> Result<LocalMatrix> {
    let b = profile.branch(label)?;
    Ok(a.inflate(b.e, &b.u))
}

/// Expected pushforward weights: `α` on branch `j` goes to `(α + l) / e_j`, `0 <= l < e_j`.
pub fn push_weight_law(
    profile: &CoverProfile,
    branch_weights: &[WeightMultiset],
) -> Result<WeightMultiset> {
    let mut out = WeightMultiset::new();
    for (b, ws) in profile.branches.iter().zip(branch_weights) {
        for (w, &m) in ws {
            let a = w.index_over(b.r)?;
            for l in 0..b.e {
                *out.entry(Weight::new(a + l * b.r, profile.target_order)?)
                    .or_default() += m;
            }
        }
    }
    Ok(out)
}

/// Expected pullback weights `{α e}` and total twist `Σ ⌊α e⌋` on one branch.
pub fn pull_weight_law(
    profile: &CoverProfile,
    weights: &WeightMultiset,
    label: &str,
) -> Result<(WeightMultiset, i64)> {
    let b = profile.branch(label)?;
    let mut out = WeightMultiset::new();
    let mut twist = 0;
    for (w, &m) in weights {
        let (c, v) = pullback_parabolic_line(*w, b.e, b.r)?;
        *out.entry(v).or_default() += m;
        twist += c * m as i64;
    }
    Ok((out, twist))
}

/// Global cover data: degree and one profile per target point that the cover touches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalCover {
    pub degree: u32,
    pub profiles: BTreeMap<String, CoverProfile>,
}

impl GlobalCover {
    pub fn new(degree: u32, profiles: BTreeMap<String, CoverProfile>) -> Result<Self> {
        let mut labels = BTreeSet::new();
        for (y, p) in &profiles {
            if p.local_degree() != degree {
                return Err(Error::Validation {
                    location: format!("cover point {y}"),
                    message: format!("sum of e_j is {}, deg f is {degree}", p.local_degree()),
                });
            }
            for b in &p.branches {
                if !labels.insert(b.label.clone()) {
                    return Err(Error::Validation {
                        location: format!("cover point {y}"),
                        message: format!("branch label {:?} used twice", b.label),
                    });
                }
            }
        }
        Ok(GlobalCover { degree, profiles })
    }
}

/// Pullback of a parabolic bundle: underlying degree `deg f * deg F + Σ twists`, and one
/// pulled chain per branch over each marked point of `F`.
pub fn pullback_bundle(f: &ParabolicBundle, cover: &GlobalCover) -> Result<ParabolicBundle> {
    let mut points = BTreeMap::new();
    let mut degree = cover.degree as i64 * f.underlying_degree();
    for (y, p) in f.points() {
        let profile = cover
            .profiles
            .get(y)
            .ok_or_else(|| Error::ProfileMismatch(format!("no cover profile over point {y}")))?;
        for b in profile.branches() {
            let pulled = pullback_parabolic(profile, p, &b.label)?;
            degree += pulled.total_twist();
            points.insert(b.label.clone(), pulled.point);
        }
    }
    for (y, profile) in &cover.profiles {
        if !f.points().contains_key(y) && profile.is_marked_target() {
            return Err(Error::ProfileMismatch(format!(
                "profile over {y} is marked but the bundle has no chain there"
            )));
        }
    }
    ParabolicBundle::new(f.rank(), degree, points)
}

/// `deg f^*F` from the line formula alone: `deg f * d + Σ ⌊α e⌋` over weights and branches.
pub fn pullback_degree_formula(
    f: &ParabolicBundle,
    cover: &GlobalCover,
) -> Result<(i64, Ratio<i64>)> {
    let mut degree = cover.degree as i64 * f.underlying_degree();
    let mut par = Ratio::from_integer(degree);
    for (y, p) in f.points() {
        let profile = cover
            .profiles
            .get(y)
            .ok_or_else(|| Error::ProfileMismatch(format!("no cover profile over point {y}")))?;
        for b in profile.branches() {
            let (ws, twist) = pull_weight_law(profile, &p.weights(), &b.label)?;
            degree += twist;
            par += Ratio::from_integer(twist);
            for (w, &m) in &ws {
                par += w.as_ratio() * m as i64;
            }
        }
    }
    Ok((degree, par))
}

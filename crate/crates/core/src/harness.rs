//! Random instances and differential checks: graded-side functors against parabolic-side
//! functors, pairings under both functors, and degree bookkeeping.
//!
//! Every trial draws from its own ChaCha stream derived from `(seed, suite, index)`, so a
//! configuration determines the instance stream. Failures are data: the first failing trial
//! is serialized as a scenario with a `check` block that [`replay`] can rerun.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::functors::{
    pull_weight_law, pullback_bundle, pullback_degree_formula, pullback_graded,
    pullback_graded_with, pullback_matrix, pullback_parabolic, pullback_parabolic_with,
    push_weight_law, pushforward_graded, pushforward_matrix, pushforward_parabolic, Branch,
    CoverProfile, GlobalCover, PulledPoint,
};
use crate::lattice::Lattice;
use crate::local::LocalElement;
use crate::matrix::LocalMatrix;
use crate::pairing::{
    hyperbolic, pullback_pairing, pushforward_pairing, transport_form, LocalPairing, PairingKind,
};
use crate::parabolic::{point_morphism, ParabolicBundle, ParabolicPoint, WeightMultiset};
use crate::rootstack::{graded_morphism, GradedModule};
use crate::scenario::{
    decode_matrix, decode_object, encode_cover, encode_matrix, encode_object, CheckSpec,
    GlobalSpec, Object, PairingSpec, Scenario, Side,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Direct,
    Pull,
    Corollaries,
    Degree,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Direct,
        Suite::Pull,
        Suite::Corollaries,
        Suite::Degree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Direct => "direct",
            Suite::Pull => "pull",
            Suite::Corollaries => "corollaries",
            Suite::Degree => "degree",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Suite::Direct => 0x6469_7265,
            Suite::Pull => 0x7075_6c6c,
            Suite::Corollaries => 0x636f_726f,
            Suite::Degree => 0x6465_6772,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// Seeded corruptions that the verifiers must detect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Parabolic direct image with `E^1` replaced by `t^{-1} E^0`.
    BrokenInclusion,
    /// Parabolic pullback with the first line twisted once more.
    WrongTwist,
    /// Graded direct image with two distinct adjacent grades swapped.
    TransposedGrading,
    /// Pairing declared with the opposite symmetry.
    FlippedSymmetry,
}

impl Mutation {
    pub const ALL: [Mutation; 4] = [
        Mutation::BrokenInclusion,
        Mutation::WrongTwist,
        Mutation::TransposedGrading,
        Mutation::FlippedSymmetry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::BrokenInclusion => "broken-inclusion",
            Mutation::WrongTwist => "wrong-twist",
            Mutation::TransposedGrading => "transposed-grading",
            Mutation::FlippedSymmetry => "flipped-symmetry",
        }
    }

    /// The suite whose verifier is responsible for detecting this corruption.
    pub fn suite(self) -> Suite {
        match self {
            Mutation::BrokenInclusion | Mutation::TransposedGrading => Suite::Direct,
            Mutation::WrongTwist => Suite::Pull,
            Mutation::FlippedSymmetry => Suite::Corollaries,
        }
    }
}

impl std::str::FromStr for Mutation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Mutation::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown mutation {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub max_rank: usize,
    pub max_order: u32,
    pub max_branches: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_rank: 3,
            max_order: 12,
            max_branches: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub seed: u64,
    pub trials: usize,
    pub bounds: Bounds,
    pub field: Field,
    pub mutation: Option<Mutation>,
}

impl TrialConfig {
    pub fn new(seed: u64, trials: usize) -> Self {
        TrialConfig {
            seed,
            trials,
            bounds: Bounds::default(),
            field: Field::Rational,
            mutation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if b.max_rank == 0 || b.max_order == 0 || b.max_branches == 0 {
            return Err(Error::Validation {
                location: "bounds".into(),
                message: "all bounds must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Hex SHA-256 of the configuration and suite.
    pub fn hash(&self, suite: Suite) -> String {
        let text = serde_json::to_string(&(suite, self)).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// The random stream of one trial.
pub fn trial_rng(seed: u64, suite: Suite, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ suite.tag().rotate_left(32));
    rng.set_stream(index as u64);
    rng
}

// ---------------------------------------------------------------------------------------
// generators

fn rand_nonzero<G: Rng>(rng: &mut G, field: Field, bound: i64) -> Scalar {
    loop {
        let s = field.from_i64(rng.gen_range(-bound..=bound));
        if !s.is_zero() {
            return s;
        }
    }
}

/// Polynomial in `t` with small coefficients and degree at most `deg`.
fn rand_poly<G: Rng>(rng: &mut G, field: Field, deg: usize) -> LocalElement {
    let coeffs = (0..=deg)
        .map(|_| field.from_i64(rng.gen_range(-2..=2)))
        .collect();
    LocalElement::from_coeffs(0, coeffs)
}

/// A random matrix invertible over `R` together with its inverse: a product of elementary
/// matrices with polynomial entries (constant when `deg = 0`) and a unit diagonal.
pub fn rand_unimodular<G: Rng>(
    rng: &mut G,
    field: Field,
    n: usize,
    deg: usize,
) -> (LocalMatrix, LocalMatrix) {
    let mut u = LocalMatrix::identity(field, n);
    let mut inv = LocalMatrix::identity(field, n);
    let mut diag = LocalMatrix::identity(field, n);
    let mut diag_inv = LocalMatrix::identity(field, n);
    for i in 0..n {
        let c = rand_nonzero(rng, field, 2);
        diag_inv.set(i, i, LocalElement::constant(c.inv()));
        diag.set(i, i, LocalElement::constant(c));
    }
    u = u.mul(&diag);
    inv = diag_inv.mul(&inv);
    if n >= 2 {
        for _ in 0..2 * n {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let x = rand_poly(rng, field, deg);
            let mut e = LocalMatrix::identity(field, n);
            e.set(i, j, x.clone());
            let mut e_inv = LocalMatrix::identity(field, n);
            e_inv.set(i, j, -&x);
            u = u.mul(&e);
            inv = e_inv.mul(&inv);
        }
    }
    (u, inv)
}

/// `U diag(t^d) R^n` with `U` invertible over `R` and `|d| <= 2`.
pub fn gen_lattice<G: Rng>(rng: &mut G, field: Field, n: usize) -> Lattice {
    let (u, _) = rand_unimodular(rng, field, n, 1);
    let exps: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
    Lattice::from_generators(field, &u.mul(&LocalMatrix::t_diagonal(field, &exps)))
        .expect("unimodular times diagonal is invertible")
}

/// A random chain of order `r`: a random `E^0`, a random basis of `E^0 / t E^0`, and a
/// random level for each basis vector.
pub fn gen_parabolic_point<G: Rng>(rng: &mut G, field: Field, n: usize, r: u32) -> ParabolicPoint {
    let e0 = gen_lattice(rng, field, n);
    let (g, _) = rand_unimodular(rng, field, n, 0);
    let lines: Vec<(i64, u32)> = (0..n).map(|_| (0, rng.gen_range(0..r))).collect();
    ParabolicPoint::diagonal(field, r, &lines)
        .image(&e0.basis().mul(&g))
        .expect("invertible change of basis")
}

pub fn gen_graded<G: Rng>(rng: &mut G, field: Field, n: usize, s: u32) -> GradedModule {
    GradedModule::from_parabolic(&gen_parabolic_point(rng, field, n, s))
}

fn divisors(s: u32) -> Vec<u32> {
    (1..=s).filter(|d| s.is_multiple_of(*d)).collect()
}

/// A random admissible profile: `s <= max_order`, each `e_j | s`, `r_j = s / e_j`.
pub fn gen_profile<G: Rng>(rng: &mut G, field: Field, bounds: &Bounds) -> CoverProfile {
    let p = field.characteristic();
    let s = loop {
        let s = rng.gen_range(1..=bounds.max_order);
        if p == 0 || !(s as u64).is_multiple_of(p) {
            break s;
        }
    };
    let k = rng.gen_range(1..=bounds.max_branches);
    let divs = divisors(s);
    let branches = (0..k)
        .map(|j| {
            let e = divs[rng.gen_range(0..divs.len())];
            let u = if rng.gen_bool(0.5) {
                field.one()
            } else {
                rand_nonzero(rng, field, 3)
            };
            Branch {
                label: format!("x{}", j + 1),
                e,
                r: s / e,
                u,
            }
        })
        .collect();
    CoverProfile::new(s, branches, true).expect("generated profiles are admissible")
}

/// Rank for one branch: within bounds, smaller when the ramification is large so the
/// restricted rank `n e` stays moderate.
fn branch_rank<G: Rng>(rng: &mut G, bounds: &Bounds, e: u32) -> usize {
    let cap = (bounds.max_rank * 6 / e as usize).clamp(1, bounds.max_rank);
    rng.gen_range(1..=cap)
}

/// A random endomorphism of a chain, built in an adapted basis where morphisms are the
/// matrices with `(i, k)` entry in `t R` whenever line `i` has a smaller weight index than
/// line `k`.
pub fn gen_endomorphism<G: Rng>(rng: &mut G, p: &ParabolicPoint) -> LocalMatrix {
    let field = p.field();
    let split = p.split_into_lines();
    let n = p.rank();
    let mut c = LocalMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let x = rand_poly(rng, field, 1);
            let bump = (split.indices[i] < split.indices[k]) as i64;
            c.set(i, k, x.shift(bump));
        }
    }
    split.basis.mul(&c).mul(&split.basis_inverse)
}

// ---------------------------------------------------------------------------------------
// instances

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectInstance {
    pub profile: CoverProfile,
    pub branches: Vec<GradedModule>,
    pub morphisms: Vec<LocalMatrix>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PullInstance {
    pub profile: CoverProfile,
    pub target: GradedModule,
    pub branch: String,
    pub morphism: LocalMatrix,
    pub split_seed: u64,
}

/// A pairing on a target chain (pulled back to `branch`) and pairings on every branch
/// valued in the pullbacks of `value` (pushed forward).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorollaryInstance {
    pub profile: CoverProfile,
    pub kind: PairingKind,
    pub value: ParabolicPoint,
    pub target: ParabolicPoint,
    pub target_form: LocalMatrix,
    pub branch: String,
    pub branches: Vec<ParabolicPoint>,
    pub branch_forms: Vec<LocalMatrix>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeInstance {
    pub bundle: ParabolicBundle,
    pub cover: GlobalCover,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    Direct(DirectInstance),
    Pull(PullInstance),
    Corollary(CorollaryInstance),
    Degree(DegreeInstance),
}

impl Instance {
    pub fn suite(&self) -> Suite {
        match self {
            Instance::Direct(_) => Suite::Direct,
            Instance::Pull(_) => Suite::Pull,
            Instance::Corollary(_) => Suite::Corollaries,
            Instance::Degree(_) => Suite::Degree,
        }
    }

    fn profiles(&self) -> Vec<&CoverProfile> {
        match self {
            Instance::Direct(d) => vec![&d.profile],
            Instance::Pull(p) => vec![&p.profile],
            Instance::Corollary(c) => vec![&c.profile],
            Instance::Degree(d) => d.cover.profiles.values().collect(),
        }
    }
}

pub fn gen_direct<G: Rng>(rng: &mut G, field: Field, bounds: &Bounds) -> DirectInstance {
    let profile = gen_profile(rng, field, bounds);
    let mut branches = Vec::new();
    let mut morphisms = Vec::new();
    for b in profile.branches() {
        let n = branch_rank(rng, bounds, b.e);
        let m = gen_graded(rng, field, n, b.r);
        morphisms.push(gen_endomorphism(rng, &m.to_parabolic()));
        branches.push(m);
    }
    DirectInstance {
        profile,
        branches,
        morphisms,
    }
}

pub fn gen_pull<G: Rng>(rng: &mut G, field: Field, bounds: &Bounds) -> PullInstance {
    let profile = gen_profile(rng, field, bounds);
    let n = rng.gen_range(1..=bounds.max_rank);
    let target = gen_graded(rng, field, n, profile.target_order());
    let morphism = gen_endomorphism(rng, &target.to_parabolic());
    let branch = profile.branches()[rng.gen_range(0..profile.branches().len())]
        .label
        .clone();
    PullInstance {
        profile,
        target,
        branch,
        morphism,
        split_seed: rng.gen(),
    }
}

/// Hyperbolic pairing on `P ⊕ Hom(P, L)` for a random `P`, in a random basis.
fn gen_pairing<G: Rng>(
    rng: &mut G,
    field: Field,
    n: usize,
    value: &ParabolicPoint,
    kind: PairingKind,
) -> (ParabolicPoint, LocalMatrix) {
    let p = gen_parabolic_point(rng, field, n, value.order());
    let (e, pair) = hyperbolic(&p, value, kind).expect("value weight is on the chain's grid");
    let (u, u_inv) = rand_unimodular(rng, field, e.rank(), 1);
    (
        e.image(&u).expect("invertible"),
        transport_form(&pair.form, &u_inv),
    )
}

pub fn gen_corollary<G: Rng>(
    rng: &mut G,
    field: Field,
    bounds: &Bounds,
    kind: PairingKind,
) -> CorollaryInstance {
    let profile = gen_profile(rng, field, bounds);
    let s = profile.target_order();
    let value = ParabolicPoint::line(field, s, rng.gen_range(0..s), rng.gen_range(-1..=1));
    let half = (bounds.max_rank / 2).max(1);
    let n = rng.gen_range(1..=half);
    let (target, target_form) = gen_pairing(rng, field, n, &value, kind);
    let branch = profile.branches()[rng.gen_range(0..profile.branches().len())]
        .label
        .clone();
    let mut branches = Vec::new();
    let mut branch_forms = Vec::new();
    for b in profile.branches() {
        let v = pullback_parabolic(&profile, &value, &b.label)
            .expect("line pulls back")
            .point;
        let n = rng.gen_range(1..=(half * 3 / b.e as usize).clamp(1, half));
        let (e, g) = gen_pairing(rng, field, n, &v, kind);
        branches.push(e);
        branch_forms.push(g);
    }
    CorollaryInstance {
        profile,
        kind,
        value,
        target,
        target_form,
        branch,
        branches,
        branch_forms,
    }
}

/// A line bundle on the target with chains at up to three points, and a cover of degree
/// `D <= 4` with a random ramification partition of `D` over each point.
pub fn gen_degree<G: Rng>(rng: &mut G, field: Field) -> DegreeInstance {
    let deg_f = rng.gen_range(1..=4u32);
    let npoints = rng.gen_range(1..=3);
    let p = field.characteristic();
    let mut points = BTreeMap::new();
    let mut profiles = BTreeMap::new();
    for y in 0..npoints {
        let mut es = Vec::new();
        let mut left = deg_f;
        while left > 0 {
            let e = rng.gen_range(1..=left);
            es.push(e);
            left -= e;
        }
        let l = es.iter().fold(1u32, |a, &e| num_integer::lcm(a, e));
        let s = loop {
            let s = l * rng.gen_range(1..=2);
            if p == 0 || !(s as u64).is_multiple_of(p) {
                break s;
            }
            if (l as u64).is_multiple_of(p) {
                break l;
            }
        };
        let branches = es
            .iter()
            .enumerate()
            .map(|(j, &e)| Branch {
                label: format!("p{}_{}", y + 1, j + 1),
                e,
                r: s / e,
                u: if rng.gen_bool(0.5) {
                    field.one()
                } else {
                    rand_nonzero(rng, field, 3)
                },
            })
            .collect();
        let label = format!("y{}", y + 1);
        match CoverProfile::new(s, branches, true) {
            Ok(profile) => {
                profiles.insert(label.clone(), profile);
                let line = ParabolicPoint::line(field, s, rng.gen_range(0..s), 0);
                points.insert(label, line);
            }
            // a characteristic clash; skip the point
            Err(_) => continue,
        }
    }
    let bundle = ParabolicBundle::new(1, rng.gen_range(-3..=3), points).expect("rank 1 chains");
    let cover = GlobalCover::new(deg_f, profiles).expect("partitions sum to deg f");
    DegreeInstance { bundle, cover }
}

pub fn generate<G: Rng>(rng: &mut G, suite: Suite, cfg: &TrialConfig, index: usize) -> Instance {
    match suite {
        Suite::Direct => Instance::Direct(gen_direct(rng, cfg.field, &cfg.bounds)),
        Suite::Pull => Instance::Pull(gen_pull(rng, cfg.field, &cfg.bounds)),
        Suite::Corollaries => {
            let kind = if index.is_multiple_of(2) {
                PairingKind::Antisymmetric
            } else {
                PairingKind::Symmetric
            };
            Instance::Corollary(gen_corollary(rng, cfg.field, &cfg.bounds, kind))
        }
        Suite::Degree => Instance::Degree(gen_degree(rng, cfg.field)),
    }
}

// ---------------------------------------------------------------------------------------
// verification

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
    pub summary: String,
}

struct Fail(String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(e.to_string())
    }
}

fn ensure(cond: bool, what: &str) -> std::result::Result<(), Fail> {
    if cond {
        Ok(())
    } else {
        Err(Fail(what.to_string()))
    }
}

pub fn format_weights(w: &WeightMultiset) -> String {
    let parts: Vec<String> = w.iter().map(|(x, m)| format!("{x}:{m}")).collect();
    format!("{{{}}}", parts.join(" "))
}

fn profile_summary(p: &CoverProfile) -> String {
    let bs: Vec<String> = p
        .branches()
        .iter()
        .map(|b| format!("{}(e={} r={} u={})", b.label, b.e, b.r, b.u))
        .collect();
    format!("s={} [{}]", p.target_order(), bs.join(" "))
}

/// Swaps the first two distinct adjacent grades; `None` if all grades coincide.
fn transpose_grades(m: &GradedModule) -> Option<GradedModule> {
    let pieces = m.pieces();
    let k = (0..pieces.len().saturating_sub(1)).find(|&k| pieces[k] != pieces[k + 1])?;
    let mut out = pieces.to_vec();
    out.swap(k, k + 1);
    Some(GradedModule::new_unchecked(m.order(), out))
}

fn break_inclusion(p: &ParabolicPoint) -> ParabolicPoint {
    let mut chain = p.chain().to_vec();
    chain[1] = chain[0].scale(-1);
    ParabolicPoint::new_unchecked(p.order(), chain)
}

/// Whether the mutation changes this instance at all (otherwise it is not a corruption).
pub fn mutation_is_effective(inst: &Instance, m: Mutation) -> bool {
    match (m, inst) {
        (Mutation::TransposedGrading, Instance::Direct(d)) => {
            pushforward_graded(&d.profile, &d.branches)
                .map(|g| transpose_grades(&g).is_some())
                .unwrap_or(false)
        }
        (Mutation::BrokenInclusion, Instance::Direct(_))
        | (Mutation::WrongTwist, Instance::Pull(_)) => true,
        (Mutation::FlippedSymmetry, Instance::Corollary(c)) => {
            !c.kind.flipped().holds_for(&c.target_form)
        }
        _ => false,
    }
}

fn verify_direct(
    d: &DirectInstance,
    mutation: Option<Mutation>,
) -> std::result::Result<String, Fail> {
    let profile = &d.profile;
    let mut graded =
        pushforward_graded(profile, &d.branches).map_err(|e| Fail(format!("graded side: {e}")))?;
    if mutation == Some(Mutation::TransposedGrading) {
        graded = transpose_grades(&graded).unwrap_or(graded);
    }
    let shadows: Vec<ParabolicPoint> = d.branches.iter().map(GradedModule::to_parabolic).collect();
    let mut par = pushforward_parabolic(profile, &shadows)
        .map_err(|e| Fail(format!("parabolic side: {e}")))?;
    if mutation == Some(Mutation::BrokenInclusion) {
        par = break_inclusion(&par);
    }
    graded
        .validate()
        .map_err(|e| Fail(format!("graded image: {e}")))?;
    par.validate()
        .map_err(|e| Fail(format!("parabolic image: {e}")))?;
    ensure(
        graded.to_parabolic() == par,
        "graded and parabolic direct images differ",
    )?;
    let rank: usize = profile
        .branches()
        .iter()
        .zip(&d.branches)
        .map(|(b, m)| m.rank() * b.e as usize)
        .sum();
    ensure(par.rank() == rank, "rank differs from sum of n_j e_j")?;
    let branch_weights: Vec<WeightMultiset> =
        d.branches.iter().map(GradedModule::weights).collect();
    for (m, w) in shadows.iter().zip(&branch_weights) {
        ensure(
            &m.weights() == w,
            "graded weights differ from chain weights",
        )?;
    }
    let want = push_weight_law(profile, &branch_weights)?;
    ensure(
        par.weights() == want,
        "pushforward weights break the (α + l)/e law",
    )?;
    ensure(
        graded.weights() == want,
        "graded pushforward weights break the (α + l)/e law",
    )?;
    for (a, m) in d.morphisms.iter().zip(&d.branches) {
        ensure(
            graded_morphism(a, m, m)?,
            "branch matrix is not a graded morphism",
        )?;
    }
    let pushed = pushforward_matrix(profile, &d.morphisms)?;
    ensure(
        graded_morphism(&pushed, &graded, &graded)?,
        "pushed matrix is not a graded morphism",
    )?;
    ensure(
        point_morphism(&pushed, &par, &par)?,
        "pushed matrix is not a parabolic morphism",
    )?;
    Ok(format!(
        "{} rank={} weights={}",
        profile_summary(profile),
        par.rank(),
        format_weights(&par.weights())
    ))
}

fn mutated_pullback(
    profile: &CoverProfile,
    f: &ParabolicPoint,
    label: &str,
    mutation: Option<Mutation>,
) -> Result<PulledPoint> {
    let mut pulled = pullback_parabolic(profile, f, label)?;
    if mutation == Some(Mutation::WrongTwist) {
        let b = profile.branch(label)?;
        pulled.twists[0] += 1;
        let lines: Vec<(i64, u32)> = pulled
            .twists
            .iter()
            .zip(&pulled.indices)
            .map(|(&c, &a)| (-c, a))
            .collect();
        pulled.point = ParabolicPoint::diagonal(f.field(), b.r, &lines).image(&pulled.basis)?;
    }
    Ok(pulled)
}

fn verify_pull(p: &PullInstance, mutation: Option<Mutation>) -> std::result::Result<String, Fail> {
    let profile = &p.profile;
    let b = profile.branch(&p.branch)?.clone();
    let f = p.target.to_parabolic();
    let pulled = mutated_pullback(profile, &f, &p.branch, mutation)
        .map_err(|e| Fail(format!("parabolic side: {e}")))?;
    let mut graded = pullback_graded(profile, &p.target, &p.branch)
        .map_err(|e| Fail(format!("graded side: {e}")))?;
    if mutation == Some(Mutation::TransposedGrading) {
        graded = transpose_grades(&graded).unwrap_or(graded);
    }
    graded
        .validate()
        .map_err(|e| Fail(format!("graded pullback: {e}")))?;
    pulled
        .point
        .validate()
        .map_err(|e| Fail(format!("parabolic pullback: {e}")))?;
    ensure(
        graded.to_parabolic() == pulled.point,
        "graded and parabolic pullbacks differ",
    )?;
    ensure(pulled.point.rank() == f.rank(), "pullback changed the rank")?;

    // the recorded change of basis identifies the pulled lines with the pulled chain
    let lines: Vec<(i64, u32)> = pulled
        .twists
        .iter()
        .zip(&pulled.indices)
        .map(|(&c, &a)| (-c, a))
        .collect();
    let diag = ParabolicPoint::diagonal(f.field(), b.r, &lines);
    let inv = f.split_into_lines().basis_inverse.inflate(b.e, &b.u);
    ensure(
        point_morphism(&pulled.basis, &diag, &pulled.point)?
            && point_morphism(&inv, &pulled.point, &diag)?,
        "change of basis is not an isomorphism of chains",
    )?;

    let (want, twist) = pull_weight_law(profile, &f.weights(), &p.branch)?;
    ensure(
        pulled.point.weights() == want,
        "pullback weights break the {αe} law",
    )?;
    ensure(
        pulled.total_twist() == twist,
        "pullback twists break the ⌊αe⌋ law",
    )?;
    let base = Lattice::from_generators(f.field(), &f.level(0).basis().inflate(b.e, &b.u))?;
    ensure(
        pulled.point.level(0).quotient_dim(&base)? as i64 == twist,
        "underlying module is not twisted by Σ⌊αe⌋",
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(p.split_seed);
    let split = f.split_into_lines_randomized(&mut rng);
    let again = pullback_parabolic_with(profile, &f, &p.branch, &split)?;
    ensure(
        again.point == pulled.point,
        "parabolic pullback depends on the splitting",
    )?;
    let gsplit = p.target.split_into_lines_randomized(&mut rng);
    let gagain = pullback_graded_with(profile, &p.target, &p.branch, &gsplit)?;
    ensure(gagain == graded, "graded pullback depends on the splitting")?;

    ensure(
        graded_morphism(&p.morphism, &p.target, &p.target)?,
        "matrix is not a graded morphism",
    )?;
    let a = pullback_matrix(profile, &p.morphism, &p.branch)?;
    ensure(
        point_morphism(&a, &pulled.point, &pulled.point)?,
        "pulled matrix is not a parabolic morphism",
    )?;
    ensure(
        graded_morphism(&a, &graded, &graded)?,
        "pulled matrix is not a graded morphism",
    )?;
    Ok(format!(
        "{} branch={} weights={} -> {} twist={}",
        profile_summary(profile),
        p.branch,
        format_weights(&f.weights()),
        format_weights(&pulled.point.weights()),
        twist
    ))
}

fn verify_corollary(
    c: &CorollaryInstance,
    mutation: Option<Mutation>,
) -> std::result::Result<String, Fail> {
    let profile = &c.profile;
    let kind = if mutation == Some(Mutation::FlippedSymmetry) {
        c.kind.flipped()
    } else {
        c.kind
    };
    let b = profile.branch(&c.branch)?.clone();

    // pullback
    let pair = LocalPairing {
        value: c.value.clone(),
        form: c.target_form.clone(),
        kind,
    };
    let (pe, pp) = pullback_pairing(profile, &pair, &c.target, &c.branch)
        .map_err(|e| Fail(format!("rejected before pullback: {e}")))?;
    ensure(pp.kind == kind, "pullback changed the kind")?;
    ensure(pp.check(&pe)?, "pulled pairing is degenerate")?;
    let ge = pullback_graded(profile, &GradedModule::from_parabolic(&c.target), &c.branch)?
        .to_parabolic();
    let gv = pullback_graded(profile, &GradedModule::from_parabolic(&c.value), &c.branch)?
        .to_parabolic();
    let gform = pullback_matrix(profile, &c.target_form, &c.branch)?;
    ensure(ge == pe, "graded-side pulled chain differs")?;
    ensure(gv == pp.value, "graded-side pulled value line differs")?;
    ensure(gform == pp.form, "graded-side pulled form differs")?;
    ensure(
        LocalPairing {
            value: gv,
            form: gform,
            kind,
        }
        .check(&ge)?,
        "graded-side pulled pairing is degenerate",
    )?;

    // pushforward
    let mut inputs = Vec::new();
    for (bj, (e, g)) in profile
        .branches()
        .iter()
        .zip(c.branches.iter().zip(&c.branch_forms))
    {
        let v = pullback_parabolic(profile, &c.value, &bj.label)?.point;
        inputs.push((
            e.clone(),
            LocalPairing {
                value: v,
                form: g.clone(),
                kind,
            },
        ));
    }
    let pushed = pushforward_pairing(profile, &c.value, &inputs)
        .map_err(|e| Fail(format!("rejected before pushforward: {e}")))?;
    let chain = pushforward_parabolic(profile, &c.branches)?;
    ensure(pushed.kind == kind, "pushforward changed the kind")?;
    ensure(pushed.check(&chain)?, "pushed pairing is degenerate")?;
    let graded: Vec<GradedModule> = c
        .branches
        .iter()
        .map(GradedModule::from_parabolic)
        .collect();
    let gchain = pushforward_graded(profile, &graded)?.to_parabolic();
    ensure(gchain == chain, "graded-side pushed chain differs")?;
    ensure(
        LocalPairing {
            value: c.value.clone(),
            form: pushed.form.clone(),
            kind,
        }
        .check(&gchain)?,
        "pushed pairing is degenerate on the graded side",
    )?;
    let form = if pushed.form.rows() <= 2 {
        format!(
            " pushed-form={}",
            pushed.form.to_string().replace('\n', "; ")
        )
    } else {
        String::new()
    };
    Ok(format!(
        "{} kind={} branch={}(e={}) pulled={} pushed-rank={}{}",
        profile_summary(profile),
        kind.name(),
        c.branch,
        b.e,
        format_weights(&pe.weights()),
        chain.rank(),
        form
    ))
}

fn verify_degree(d: &DegreeInstance) -> std::result::Result<String, Fail> {
    let pulled = pullback_bundle(&d.bundle, &d.cover)?;
    let (deg, par) = pullback_degree_formula(&d.bundle, &d.cover)?;
    ensure(
        pulled.underlying_degree() == deg,
        "underlying degree differs from deg f * d + Σ⌊αe⌋",
    )?;
    ensure(
        pulled.parabolic_degree() == par,
        "parabolic degree differs from the line formula",
    )?;
    let scaled = d.bundle.parabolic_degree() * d.cover.degree as i64;
    ensure(par == scaled, "parabolic degree is not multiplied by deg f")?;
    Ok(format!(
        "deg f={} pardeg {} -> {}",
        d.cover.degree,
        d.bundle.parabolic_degree(),
        pulled.parabolic_degree()
    ))
}

pub fn verify(inst: &Instance, mutation: Option<Mutation>) -> Outcome {
    let res = match inst {
        Instance::Direct(d) => verify_direct(d, mutation),
        Instance::Pull(p) => verify_pull(p, mutation),
        Instance::Corollary(c) => verify_corollary(c, mutation),
        Instance::Degree(d) => verify_degree(d),
    };
    match res {
        Ok(summary) => Outcome {
            pass: true,
            detail: "ok".into(),
            summary,
        },
        Err(Fail(detail)) => Outcome {
            pass: false,
            detail,
            summary: inst
                .profiles()
                .iter()
                .map(|p| profile_summary(p))
                .collect::<Vec<_>>()
                .join(" "),
        },
    }
}

// ---------------------------------------------------------------------------------------
// reports

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub ramified_branches: usize,
    pub nontrivial_branch_orders: usize,
    pub multi_branch_profiles: usize,
    pub non_unit_u: usize,
}

impl Coverage {
    fn record(&mut self, p: &CoverProfile) {
        self.ramified_branches += p.branches().iter().filter(|b| b.e > 1).count();
        self.nontrivial_branch_orders += p.branches().iter().filter(|b| b.r > 1).count();
        self.multi_branch_profiles += (p.branches().len() > 1) as usize;
        self.non_unit_u += p.branches().iter().filter(|b| !b.u.is_one()).count();
    }

    pub fn meets_floor(&self) -> bool {
        self.ramified_branches > 0
            && self.nontrivial_branch_orders > 0
            && self.multi_branch_profiles > 0
            && self.non_unit_u > 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub verdict: String,
    pub detail: String,
    pub summary: String,
    pub elapsed_us: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialReport {
    pub tool_version: String,
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub field: Field,
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<Mutation>,
    pub config_hash: String,
    pub passed: usize,
    pub failed: usize,
    pub coverage: Coverage,
    pub results: Vec<TrialResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Scenario>,
    pub elapsed_ms: u64,
}

impl TrialReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Removes `elapsed_*` fields anywhere in a JSON report.
pub fn strip_timing(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !k.starts_with("elapsed_"));
            map.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(xs) => xs.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// Draws the instance of trial `index`; under a mutation, redraws (from the same stream)
/// until the mutation actually changes the instance.
pub fn trial_instance(suite: Suite, cfg: &TrialConfig, index: usize) -> Instance {
    let mut rng = trial_rng(cfg.seed, suite, index);
    loop {
        let inst = generate(&mut rng, suite, cfg, index);
        match cfg.mutation {
            Some(m) if !mutation_is_effective(&inst, m) => continue,
            _ => return inst,
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &TrialConfig) -> Result<TrialReport> {
    cfg.validate()?;
    if let Some(m) = cfg.mutation {
        if m.suite() != suite {
            return Err(Error::Validation {
                location: "mutation".into(),
                message: format!("{} is checked by the {} suite", m.name(), m.suite().name()),
            });
        }
    }
    let start = Instant::now();
    let indices: Vec<usize> = (0..cfg.trials).collect();
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(8);
    let chunk = cfg.trials.div_ceil(threads.max(1)).max(1);
    let mut done: Vec<(usize, Instance, Outcome, u64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = indices
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&i| {
                            let t = Instant::now();
                            let inst = trial_instance(suite, cfg, i);
                            let out = verify(&inst, cfg.mutation);
                            (i, inst, out, t.elapsed().as_micros() as u64)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("trial thread panicked"))
            .collect()
    });
    done.sort_by_key(|x| x.0);

    let mut coverage = Coverage::default();
    let mut results = Vec::with_capacity(done.len());
    let mut counterexample = None;
    for (i, inst, out, us) in &done {
        for p in inst.profiles() {
            coverage.record(p);
        }
        if !out.pass && counterexample.is_none() {
            counterexample = Some(capture(inst, cfg.mutation, out));
        }
        results.push(TrialResult {
            index: *i,
            verdict: if out.pass { "pass" } else { "fail" }.into(),
            detail: out.detail.clone(),
            summary: out.summary.clone(),
            elapsed_us: *us,
        });
    }
    let passed = results.iter().filter(|r| r.verdict == "pass").count();
    Ok(TrialReport {
        tool_version: TOOL_VERSION.into(),
        suite,
        seed: cfg.seed,
        trials: cfg.trials,
        field: cfg.field,
        bounds: cfg.bounds,
        mutation: cfg.mutation,
        config_hash: cfg.hash(suite),
        passed,
        failed: results.len() - passed,
        coverage,
        results,
        counterexample,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}

pub fn verify_direct_image(cfg: &TrialConfig) -> Result<TrialReport> {
    run_suite(Suite::Direct, cfg)
}

pub fn verify_pullback(cfg: &TrialConfig) -> Result<TrialReport> {
    run_suite(Suite::Pull, cfg)
}

pub fn verify_corollaries(cfg: &TrialConfig) -> Result<TrialReport> {
    run_suite(Suite::Corollaries, cfg)
}

// ---------------------------------------------------------------------------------------
// capture and replay

const TARGET: &str = "target";

/// The instance as a scenario, with a check block recording the verdict.
pub fn capture(inst: &Instance, mutation: Option<Mutation>, out: &Outcome) -> Scenario {
    let mut s = to_scenario(inst);
    s.check = Some(CheckSpec {
        suite: inst.suite().name().into(),
        mutation: mutation.map(|m| m.name().to_string()),
        verdict: if out.pass { "pass" } else { "fail" }.into(),
        detail: out.detail.clone(),
        split_seed: match inst {
            Instance::Pull(p) => Some(p.split_seed),
            _ => None,
        },
    });
    s
}

pub fn to_scenario(inst: &Instance) -> Scenario {
    match inst {
        Instance::Direct(d) => {
            let mut s = Scenario::new(d.branches[0].field(), Side::Graded);
            s.cover = Some(encode_cover(&d.profile));
            for ((b, m), a) in d
                .profile
                .branches()
                .iter()
                .zip(&d.branches)
                .zip(&d.morphisms)
            {
                s.objects
                    .insert(b.label.clone(), encode_object(&Object::Graded(m.clone())));
                s.morphisms.insert(b.label.clone(), encode_matrix(a));
            }
            s
        }
        Instance::Pull(p) => {
            let mut s = Scenario::new(p.target.field(), Side::Graded);
            s.cover = Some(encode_cover(&p.profile));
            s.branch = Some(p.branch.clone());
            s.objects.insert(
                TARGET.into(),
                encode_object(&Object::Graded(p.target.clone())),
            );
            s.morphisms
                .insert(TARGET.into(), encode_matrix(&p.morphism));
            s
        }
        Instance::Corollary(c) => {
            let mut s = Scenario::new(c.target.field(), Side::Parabolic);
            s.cover = Some(encode_cover(&c.profile));
            s.branch = Some(c.branch.clone());
            s.objects.insert(
                TARGET.into(),
                encode_object(&Object::Parabolic(c.target.clone())),
            );
            let mut forms = BTreeMap::from([(TARGET.to_string(), encode_matrix(&c.target_form))]);
            for ((b, e), g) in c
                .profile
                .branches()
                .iter()
                .zip(&c.branches)
                .zip(&c.branch_forms)
            {
                s.objects.insert(
                    b.label.clone(),
                    encode_object(&Object::Parabolic(e.clone())),
                );
                forms.insert(b.label.clone(), encode_matrix(g));
            }
            s.pairing = Some(PairingSpec {
                kind: c.kind,
                value: encode_object(&Object::Parabolic(c.value.clone())),
                forms,
            });
            s
        }
        Instance::Degree(d) => {
            let field = d
                .bundle
                .points()
                .values()
                .next()
                .map(ParabolicPoint::field)
                .unwrap_or_default();
            let mut s = Scenario::new(field, Side::Parabolic);
            s.global = Some(GlobalSpec {
                deg_f: d.cover.degree,
                rank: d.bundle.rank(),
                degree: d.bundle.underlying_degree(),
                points: d
                    .bundle
                    .points()
                    .iter()
                    .map(|(k, p)| (k.clone(), encode_object(&Object::Parabolic(p.clone()))))
                    .collect(),
                covers: d
                    .cover
                    .profiles
                    .iter()
                    .map(|(k, p)| (k.clone(), encode_cover(p)))
                    .collect(),
            });
            s
        }
    }
}

fn missing(what: &str) -> Error {
    Error::Validation {
        location: what.into(),
        message: "required for this check".into(),
    }
}

/// Rebuilds an instance of the given suite from a scenario.
pub fn from_scenario(s: &Scenario, suite: Suite) -> Result<Instance> {
    s.validate()?;
    let field = s.field;
    if suite == Suite::Degree {
        let g = s.global.as_ref().ok_or_else(|| missing("global"))?;
        let data = crate::scenario::decode_global(field, g)?;
        return Ok(Instance::Degree(DegreeInstance {
            bundle: data.bundle,
            cover: data.cover,
        }));
    }
    let profile = s.cover_profile()?.ok_or_else(|| missing("cover"))?;
    let objects = s.decoded_objects()?;
    let morphisms = s.decoded_morphisms()?;
    let object = |label: &str| -> Result<&Object> {
        objects
            .get(label)
            .ok_or_else(|| missing(&format!("objects.{label}")))
    };
    let morphism = |label: &str| -> Result<&LocalMatrix> {
        morphisms
            .get(label)
            .ok_or_else(|| missing(&format!("morphisms.{label}")))
    };
    match suite {
        Suite::Direct => {
            let mut branches = Vec::new();
            let mut ms = Vec::new();
            for b in profile.branches() {
                branches.push(object(&b.label)?.to_graded());
                ms.push(morphism(&b.label)?.clone());
            }
            Ok(Instance::Direct(DirectInstance {
                profile,
                branches,
                morphisms: ms,
            }))
        }
        Suite::Pull => Ok(Instance::Pull(PullInstance {
            target: object(TARGET)?.to_graded(),
            branch: s.branch.clone().ok_or_else(|| missing("branch"))?,
            morphism: morphism(TARGET)?.clone(),
            split_seed: s.check.as_ref().and_then(|c| c.split_seed).unwrap_or(0),
            profile,
        })),
        Suite::Corollaries => {
            let p = s.pairing.as_ref().ok_or_else(|| missing("pairing"))?;
            let form = |label: &str| -> Result<LocalMatrix> {
                let m = p
                    .forms
                    .get(label)
                    .ok_or_else(|| missing(&format!("pairing.forms.{label}")))?;
                decode_matrix(field, m, &format!("pairing.forms.{label}"))
            };
            let value =
                decode_object(field, Side::Parabolic, &p.value, "pairing.value")?.to_parabolic();
            let mut branches = Vec::new();
            let mut branch_forms = Vec::new();
            for b in profile.branches() {
                branches.push(object(&b.label)?.to_parabolic());
                branch_forms.push(form(&b.label)?);
            }
            Ok(Instance::Corollary(CorollaryInstance {
                kind: p.kind,
                value,
                target: object(TARGET)?.to_parabolic(),
                target_form: form(TARGET)?,
                branch: s.branch.clone().ok_or_else(|| missing("branch"))?,
                branches,
                branch_forms,
                profile,
            }))
        }
        Suite::Degree => unreachable!(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub suite: Suite,
    pub mutation: Option<Mutation>,
    pub recorded_verdict: String,
    pub recorded_detail: String,
    pub outcome: Outcome,
    pub reproduced: bool,
}

/// Reruns the check recorded in a captured scenario.
pub fn replay(s: &Scenario) -> Result<ReplayResult> {
    let check = s.check.as_ref().ok_or_else(|| missing("check"))?;
    let suite: Suite = check.suite.parse()?;
    let mutation = check.mutation.as_deref().map(str::parse).transpose()?;
    let inst = from_scenario(s, suite)?;
    let outcome = verify(&inst, mutation);
    let verdict = if outcome.pass { "pass" } else { "fail" };
    Ok(ReplayResult {
        suite,
        mutation,
        reproduced: verdict == check.verdict && outcome.detail == check.detail,
        recorded_verdict: check.verdict.clone(),
        recorded_detail: check.detail.clone(),
        outcome,
    })
}

// ---------------------------------------------------------------------------------------
// worked examples

/// Two branches over an order-4 point: `e = 2, r = 2` carrying a weight-1/2 line, and
/// `e = 4, r = 1` carrying the trivial line.
pub fn example_direct(field: Field) -> DirectInstance {
    let one = field.one();
    let profile = CoverProfile::new(
        4,
        vec![
            Branch {
                label: "x1".into(),
                e: 2,
                r: 2,
                u: one.clone(),
            },
            Branch {
                label: "x2".into(),
                e: 4,
                r: 1,
                u: one,
            },
        ],
        true,
    )
    .expect("admissible");
    DirectInstance {
        profile,
        branches: vec![
            GradedModule::line(field, 2, 1, 0),
            GradedModule::line(field, 1, 0, 0),
        ],
        morphisms: vec![
            LocalMatrix::identity(field, 1),
            LocalMatrix::identity(field, 1),
        ],
    }
}

/// Rank 2 with weights `{1/3, 2/3}` over an order-6 point, pulled back along `e = 2`.
pub fn example_pull(field: Field) -> PullInstance {
    let profile = CoverProfile::single(field, "x1", 2, 3).expect("admissible");
    PullInstance {
        profile,
        target: GradedModule::from_parabolic(&ParabolicPoint::diagonal(
            field,
            6,
            &[(0, 2), (0, 4)],
        )),
        branch: "x1".into(),
        morphism: LocalMatrix::identity(field, 2),
        split_seed: 0,
    }
}

//! Parabolic structures: lattice chains `E^0 ⊇ E^1 ⊇ ... ⊇ E^r = t E^0` at marked points,
//! their weights, morphisms, degrees, and the splitting into parabolic lines.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::lattice::{maps_into, Lattice};
use crate::matrix::{ConstMatrix, LocalMatrix};

/// A parabolic weight `a/s` in `[0, 1)`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Weight {
    num: u32,
    den: u32,
}

impl Weight {
    pub const ZERO: Weight = Weight { num: 0, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Weight> {
        if den == 0 || num >= den {
            return Err(Error::InadmissibleWeight(format!(
                "{num}/{den} is not in [0, 1)"
            )));
        }
        let g = num.gcd(&den);
        Ok(Weight {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(self) -> u32 {
        self.num
    }

    pub fn denominator(self) -> u32 {
        self.den
    }

    pub fn as_ratio(self) -> Ratio<i64> {
        Ratio::new(self.num as i64, self.den as i64)
    }

    /// Numerator over the denominator `s`; fails unless `den | s`.
    pub fn index_over(self, s: u32) -> Result<u32> {
        if !s.is_multiple_of(self.den) {
            return Err(Error::InadmissibleWeight(format!(
                "{self} does not have denominator dividing {s}"
            )));
        }
        Ok(self.num * (s / self.den))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u64 * other.den as u64).cmp(&(other.num as u64 * self.den as u64))
    }
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl From<Weight> for String {
    fn from(w: Weight) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for Weight {
    type Error = Error;
    fn try_from(s: String) -> Result<Weight> {
        s.parse()
    }
}

impl std::str::FromStr for Weight {
    type Err = Error;
    fn from_str(s: &str) -> Result<Weight> {
        let bad = || Error::Parse(format!("bad weight {s:?}"));
        match s.trim().split_once('/') {
            Some((a, b)) => Weight::new(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => Weight::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

/// Weights with multiplicities; zero multiplicities are never stored.
pub type WeightMultiset = BTreeMap<Weight, usize>;

pub fn multiset_union(a: &WeightMultiset, b: &WeightMultiset) -> WeightMultiset {
    let mut out = a.clone();
    for (w, m) in b {
        *out.entry(*w).or_default() += m;
    }
    out
}

pub fn multiset_total(m: &WeightMultiset) -> usize {
    m.values().sum()
}

/// Chain `E^0 ⊇ ... ⊇ E^r = t E^0` at one marked point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParabolicPoint {
    order: u32,
    chain: Vec<Lattice>,
}

impl ParabolicPoint {
    pub fn new(order: u32, chain: Vec<Lattice>) -> Result<ParabolicPoint> {
        let p = ParabolicPoint { order, chain };
        p.validate()?;
        Ok(p)
    }

    /// No checks; for corrupted inputs in tests. Pair with [`ParabolicPoint::validate`].
    pub fn new_unchecked(order: u32, chain: Vec<Lattice>) -> ParabolicPoint {
        ParabolicPoint { order, chain }
    }

    pub fn validate(&self) -> Result<()> {
        let (order, chain) = (self.order, &self.chain);
        if order == 0 {
            return Err(Error::InvalidChain("order must be at least 1".into()));
        }
        if chain.len() != order as usize + 1 {
            return Err(Error::InvalidChain(format!(
                "order {order} needs {} lattices, got {}",
                order + 1,
                chain.len()
            )));
        }
        let n = chain[0].ambient_rank();
        for (j, pair) in chain.windows(2).enumerate() {
            if pair[1].ambient_rank() != n {
                return Err(Error::InvalidChain(format!(
                    "E^{} has the wrong ambient rank",
                    j + 1
                )));
            }
            if !pair[0].contains(&pair[1])? {
                return Err(Error::InvalidChain(format!(
                    "E^{} is not contained in E^{j}",
                    j + 1
                )));
            }
        }
        if chain[order as usize] != chain[0].scale(1) {
            return Err(Error::InvalidChain(format!("E^{order} differs from t E^0")));
        }
        Ok(())
    }

    /// Order-1 chain `E ⊇ t E`: weight 0 with multiplicity `n`.
    pub fn trivial(lattice: Lattice) -> ParabolicPoint {
        let bottom = lattice.scale(1);
        ParabolicPoint {
            order: 1,
            chain: vec![lattice, bottom],
        }
    }

    /// Rank-1 chain with `E^j = t^twist R` for `j <= index` and `t^{twist+1} R` after,
    /// i.e. weight `index / order`.
    pub fn line(field: Field, order: u32, index: u32, twist: i64) -> ParabolicPoint {
        Self::diagonal(field, order, &[(twist, index)])
    }

    /// Direct sum of lines given as `(twist, weight index)` pairs in coordinate order.
    pub fn diagonal(field: Field, order: u32, lines: &[(i64, u32)]) -> ParabolicPoint {
        assert!(
            lines.iter().all(|&(_, a)| a < order),
            "weight index out of range"
        );
        let chain = (0..=order)
            .map(|j| {
                let exps: Vec<i64> = lines.iter().map(|&(c, a)| c + (j > a) as i64).collect();
                Lattice::diagonal(field, &exps)
            })
            .collect();
        ParabolicPoint { order, chain }
    }

    /// Diagonal chain from weight shorthand: each weight with multiplicity becomes that many
    /// coordinate lines with twist 0.
    pub fn from_weights(field: Field, order: u32, weights: &[(Weight, usize)]) -> Result<Self> {
        let mut lines = Vec::new();
        for &(w, m) in weights {
            let a = w.index_over(order)?;
            lines.extend(std::iter::repeat_n((0, a), m));
        }
        Ok(Self::diagonal(field, order, &lines))
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.chain[0].ambient_rank()
    }

    pub fn field(&self) -> Field {
        self.chain[0].field()
    }

    pub fn chain(&self) -> &[Lattice] {
        &self.chain
    }

    pub fn level(&self, j: usize) -> &Lattice {
        &self.chain[j]
    }

    /// `E^j` for any integer `j`, extended by `E^{j+r} = t E^j`.
    pub fn level_extended(&self, j: i64) -> Lattice {
        let r = self.order as i64;
        let (m, k) = (j.div_euclid(r), j.rem_euclid(r));
        self.chain[k as usize].scale(m)
    }

    /// Weight `a/r` with multiplicity `dim E^a / E^{a+1}`.
    pub fn weights(&self) -> WeightMultiset {
        let mut out = WeightMultiset::new();
        for a in 0..self.order as usize {
            let m = (self.chain[a + 1].volume() - self.chain[a].volume()) as usize;
            if m > 0 {
                let w = Weight::new(a as u32, self.order).expect("a < r");
                *out.entry(w).or_default() += m;
            }
        }
        out
    }

    /// `Σ weight * multiplicity`.
    pub fn weight_sum(&self) -> Ratio<i64> {
        self.weights()
            .iter()
            .map(|(w, &m)| w.as_ratio() * m as i64)
            .sum()
    }

    pub fn scale(&self, d: i64) -> ParabolicPoint {
        ParabolicPoint {
            order: self.order,
            chain: self.chain.iter().map(|l| l.scale(d)).collect(),
        }
    }

    /// Image under a matrix invertible over `K`.
    pub fn image(&self, a: &LocalMatrix) -> Result<ParabolicPoint> {
        let chain = self
            .chain
            .iter()
            .map(|l| l.image(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(ParabolicPoint {
            order: self.order,
            chain,
        })
    }

    /// Stagewise direct sum in concatenated coordinates.
    pub fn direct_sum(parts: &[&ParabolicPoint]) -> Result<ParabolicPoint> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidChain("empty direct sum".into()))?;
        let order = first.order;
        if parts.iter().any(|p| p.order != order) {
            return Err(Error::InvalidChain(
                "direct sum of chains of different orders".into(),
            ));
        }
        let field = first.field();
        let chain = (0..=order as usize)
            .map(|j| {
                let ls: Vec<&Lattice> = parts.iter().map(|p| &p.chain[j]).collect();
                Lattice::direct_sum(field, &ls)
            })
            .collect();
        Ok(ParabolicPoint { order, chain })
    }

    /// Flag subspaces `E^j / t E^0` in coordinates of the canonical basis of `E^0`.
    fn fiber_flag(&self) -> Vec<ConstMatrix> {
        let field = self.field();
        let b0_inv = self.chain[0].basis_inverse();
        (0..self.order as usize)
            .map(|j| b0_inv.mul(self.chain[j].basis()).reduce_mod_t(field))
            .collect()
    }

    /// Deterministic adapted basis: see [`LineSplitting`].
    pub fn split_into_lines(&self) -> LineSplitting {
        self.split_impl(None::<&mut rand::rngs::ThreadRng>)
    }

    /// Adapted basis mixed with random field coefficients; any such choice is valid.
    pub fn split_into_lines_randomized<G: Rng>(&self, rng: &mut G) -> LineSplitting {
        self.split_impl(Some(rng))
    }

    fn split_impl<G: Rng>(&self, mut rng: Option<&mut G>) -> LineSplitting {
        let field = self.field();
        let n = self.rank();
        let flag = self.fiber_flag();
        // (pivot row, vector, weight index)
        let mut chosen: Vec<(usize, Vec<Scalar>, u32)> = Vec::with_capacity(n);
        for j in (0..self.order as usize).rev() {
            let echelon = if j == 0 {
                (0..n)
                    .map(|i| (i, (0..n).map(|k| field.from_i64((k == i) as i64)).collect()))
                    .collect()
            } else {
                flag[j].column_echelon(field)
            };
            for (p, v) in echelon {
                if chosen.iter().any(|(q, _, _)| *q == p) {
                    continue;
                }
                let v = match rng.as_deref_mut() {
                    None => v,
                    Some(rng) => {
                        let lambda = loop {
                            let s = field.from_i64(rng.gen_range(-5..=5));
                            if !s.is_zero() {
                                break s;
                            }
                        };
                        let mut mixed: Vec<Scalar> = v.iter().map(|x| x * &lambda).collect();
                        for (_, w, _) in &chosen {
                            let mu = field.from_i64(rng.gen_range(-3..=3));
                            for (x, y) in mixed.iter_mut().zip(w) {
                                *x = &*x + &(&mu * y);
                            }
                        }
                        mixed
                    }
                };
                chosen.push((p, v, j as u32));
            }
        }
        chosen.sort_by_key(|(p, _, _)| *p);
        let cols: Vec<Vec<Scalar>> = chosen.iter().map(|(_, v, _)| v.clone()).collect();
        let change = ConstMatrix::from_columns(field, n, &cols);
        let change_inv = change.inverse(field).expect("adapted basis is a basis");
        let b0 = self.chain[0].basis();
        LineSplitting {
            order: self.order,
            field,
            indices: chosen.iter().map(|(_, _, a)| *a).collect(),
            basis: b0.mul(&change.to_local()),
            basis_inverse: change_inv.to_local().mul(&self.chain[0].basis_inverse()),
        }
    }
}

/// Result of splitting a chain into parabolic lines.
///
/// Column `k` of `basis` spans line `k`; the line has weight `indices[k] / order`, meaning
/// `E^j` contains the column itself for `j <= indices[k]` and only its `t`-multiple after.
/// `basis` maps the diagonal chain [`LineSplitting::lines_sum`] isomorphically onto the
/// original chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineSplitting {
    pub order: u32,
    pub field: Field,
    pub indices: Vec<u32>,
    pub basis: LocalMatrix,
    pub basis_inverse: LocalMatrix,
}

impl LineSplitting {
    pub fn lines(&self) -> Vec<ParabolicPoint> {
        self.indices
            .iter()
            .map(|&a| ParabolicPoint::line(self.field, self.order, a, 0))
            .collect()
    }

    /// The direct sum of the lines, in the coordinates of the adapted basis.
    pub fn lines_sum(&self) -> ParabolicPoint {
        let lines: Vec<(i64, u32)> = self.indices.iter().map(|&a| (0, a)).collect();
        ParabolicPoint::diagonal(self.field, self.order, &lines)
    }

    pub fn weights(&self) -> WeightMultiset {
        let mut out = WeightMultiset::new();
        for &a in &self.indices {
            *out.entry(Weight::new(a, self.order).expect("index < order"))
                .or_default() += 1;
        }
        out
    }
}

/// `A E^j ⊆ F^j` for every `j`.
pub fn point_morphism(a: &LocalMatrix, e: &ParabolicPoint, f: &ParabolicPoint) -> Result<bool> {
    if e.order != f.order {
        return Err(Error::ShapeMismatch(format!(
            "chains of orders {} and {}",
            e.order, f.order
        )));
    }
    for j in 0..e.order as usize {
        if !maps_into(a, &e.chain[j], &f.chain[j])? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rank, underlying degree, and a chain at each labelled marked point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParabolicBundle {
    rank: usize,
    underlying_degree: i64,
    points: BTreeMap<String, ParabolicPoint>,
}

impl ParabolicBundle {
    pub fn new(
        rank: usize,
        underlying_degree: i64,
        points: BTreeMap<String, ParabolicPoint>,
    ) -> Result<Self> {
        for (label, p) in &points {
            if p.rank() != rank {
                return Err(Error::Validation {
                    location: format!("point {label}"),
                    message: format!("chain has rank {}, bundle rank is {rank}", p.rank()),
                });
            }
        }
        Ok(ParabolicBundle {
            rank,
            underlying_degree,
            points,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn underlying_degree(&self) -> i64 {
        self.underlying_degree
    }

    pub fn points(&self) -> &BTreeMap<String, ParabolicPoint> {
        &self.points
    }

    pub fn point(&self, label: &str) -> Option<&ParabolicPoint> {
        self.points.get(label)
    }

    /// `deg E + Σ_points Σ weight * multiplicity`.
    pub fn parabolic_degree(&self) -> Ratio<i64> {
        let local: Ratio<i64> = self.points.values().map(ParabolicPoint::weight_sum).sum();
        Ratio::from_integer(self.underlying_degree) + local
    }

    /// Direct sum; both bundles must carry the same marked points with equal orders.
    pub fn direct_sum(&self, other: &ParabolicBundle) -> Result<ParabolicBundle> {
        if self.points.keys().ne(other.points.keys()) {
            return Err(Error::ShapeMismatch("different marked points".into()));
        }
        let points = self
            .points
            .iter()
            .map(|(k, p)| {
                Ok((
                    k.clone(),
                    ParabolicPoint::direct_sum(&[p, &other.points[k]])?,
                ))
            })
            .collect::<Result<_>>()?;
        ParabolicBundle::new(
            self.rank + other.rank,
            self.underlying_degree + other.underlying_degree,
            points,
        )
    }
}

/// `A` preserves the filtrations at every marked point.
pub fn is_morphism(a: &LocalMatrix, e: &ParabolicBundle, f: &ParabolicBundle) -> Result<bool> {
    if a.cols() != e.rank || a.rows() != f.rank {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix for ranks {} -> {}",
            a.rows(),
            a.cols(),
            e.rank,
            f.rank
        )));
    }
    if e.points.keys().ne(f.points.keys()) {
        return Err(Error::ShapeMismatch(
            "bundles have different marked points".into(),
        ));
    }
    for (label, p) in &e.points {
        if !point_morphism(a, p, &f.points[label])? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::LocalElement;

    fn q() -> Field {
        Field::Rational
    }

    fn w(a: u32, b: u32) -> Weight {
        Weight::new(a, b).unwrap()
    }

    fn one_point(p: ParabolicPoint, degree: i64) -> ParabolicBundle {
        let n = p.rank();
        ParabolicBundle::new(n, degree, BTreeMap::from([("x".to_string(), p)])).unwrap()
    }

    #[test]
    fn weights_normalize_and_order() {
        assert_eq!(w(2, 4), w(1, 2));
        assert!(w(1, 3) < w(1, 2));
        assert_eq!("3/4".parse::<Weight>().unwrap(), w(3, 4));
        assert!(Weight::new(4, 4).is_err());
        assert_eq!(w(1, 2).index_over(6).unwrap(), 3);
        assert!(w(1, 3).index_over(4).is_err());
    }

    #[test]
    fn weights_of_examples() {
        let r = Lattice::standard(q(), 1);
        let p = ParabolicPoint::new(2, vec![r.clone(), r.clone(), r.scale(1)]).unwrap();
        assert_eq!(p.weights(), WeightMultiset::from([(w(1, 2), 1)]));
        let p = ParabolicPoint::new(3, vec![r.clone(), r.clone(), r.scale(1), r.scale(1)]).unwrap();
        assert_eq!(p.weights(), WeightMultiset::from([(w(1, 3), 1)]));
        let p = ParabolicPoint::trivial(Lattice::standard(q(), 3));
        assert_eq!(p.weights(), WeightMultiset::from([(Weight::ZERO, 3)]));
    }

    #[test]
    fn invalid_chains_rejected() {
        let r = Lattice::standard(q(), 1);
        assert!(matches!(
            ParabolicPoint::new(2, vec![r.clone(), r.clone(), r.clone()]),
            Err(Error::InvalidChain(_))
        ));
        assert!(matches!(
            ParabolicPoint::new(2, vec![r.clone(), r.scale(1), r.clone()]),
            Err(Error::InvalidChain(_))
        ));
        assert!(matches!(
            ParabolicPoint::new(1, vec![r.clone()]),
            Err(Error::InvalidChain(_))
        ));
    }

    #[test]
    fn morphism_examples() {
        let e = one_point(ParabolicPoint::line(q(), 2, 1, 0), 0);
        let id = LocalMatrix::identity(q(), 1);
        assert!(is_morphism(&id, &e, &e).unwrap());
        let t = LocalMatrix::t_diagonal(q(), &[1]);
        assert!(is_morphism(&t, &e, &e).unwrap());
        // F: trivial structure written at order 2 with F^1 = t F^0
        let f = one_point(ParabolicPoint::line(q(), 2, 0, 0), 0);
        assert!(!is_morphism(&id, &e, &f).unwrap());
        assert!(is_morphism(&id, &f, &e).unwrap());
        let bad = LocalMatrix::identity(q(), 2);
        assert!(matches!(
            is_morphism(&bad, &e, &f),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn parabolic_degree_examples() {
        let line = one_point(ParabolicPoint::line(q(), 2, 1, 0), 1);
        assert_eq!(line.parabolic_degree(), Ratio::new(3, 2));
        let triv = one_point(ParabolicPoint::trivial(Lattice::standard(q(), 3)), 5);
        assert_eq!(triv.parabolic_degree(), Ratio::from_integer(5));
        let p = ParabolicPoint::from_weights(q(), 4, &[(w(1, 4), 1), (w(3, 4), 1)]).unwrap();
        assert_eq!(one_point(p, 0).parabolic_degree(), Ratio::from_integer(1));
    }

    #[test]
    fn split_diagonal_is_identity() {
        let p = ParabolicPoint::diagonal(q(), 3, &[(0, 2), (1, 0), (-1, 1)]);
        let s = p.split_into_lines();
        assert_eq!(s.indices, vec![2, 0, 1]);
        assert_eq!(s.basis, LocalMatrix::t_diagonal(q(), &[0, 1, -1]));
    }

    #[test]
    fn split_rank_two_example() {
        let f = q();
        let c = |v| LocalElement::constant(f.from_i64(v));
        let t = LocalElement::t_pow(f, 1);
        let r2 = Lattice::standard(f, 2);
        let mid = Lattice::from_generators(
            f,
            &LocalMatrix::from_columns(2, vec![vec![c(1), c(1)], vec![c(0), t]]),
        )
        .unwrap();
        let p = ParabolicPoint::new(2, vec![r2.clone(), mid, r2.scale(1)]).unwrap();
        let s = p.split_into_lines();
        assert_eq!(s.indices, vec![1, 0]);
        assert_eq!(s.basis, LocalMatrix::from_int_rows(f, &[&[1, 0], &[1, 1]]));
        let sum = s.lines_sum();
        assert!(point_morphism(&s.basis, &sum, &p).unwrap());
        assert!(point_morphism(&s.basis_inverse, &p, &sum).unwrap());
    }

    #[test]
    fn split_rank_one_is_the_chain() {
        let p = ParabolicPoint::line(q(), 5, 3, 2);
        let s = p.split_into_lines();
        assert_eq!(s.indices, vec![3]);
        assert_eq!(s.lines_sum().image(&s.basis).unwrap(), p);
    }
}

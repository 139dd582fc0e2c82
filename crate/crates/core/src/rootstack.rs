//! `μ_s`-equivariant modules on a root-stack chart, modeled by their grading: an ascending
//! chain `M_0 ⊆ M_1 ⊆ ... ⊆ M_{s-1} ⊆ t^{-1} M_0`. Multiplication by `T` is the inclusion
//! `M_k -> M_{k+1}`; going once around the cycle is multiplication by `t`.
//!
//! The correspondence with parabolic chains is `E^0 = M_0`, `E^j = t M_{s-j}` for `j >= 1`.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::lattice::{maps_into, Lattice};
use crate::matrix::LocalMatrix;
use crate::parabolic::{LineSplitting, ParabolicPoint, Weight, WeightMultiset};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GradedModule {
    order: u32,
    pieces: Vec<Lattice>,
}

impl GradedModule {
    pub fn new(order: u32, pieces: Vec<Lattice>) -> Result<GradedModule> {
        let m = GradedModule { order, pieces };
        m.validate()?;
        Ok(m)
    }

    /// No checks; for corrupted inputs in tests. Pair with [`GradedModule::validate`].
    pub fn new_unchecked(order: u32, pieces: Vec<Lattice>) -> GradedModule {
        GradedModule { order, pieces }
    }

    pub fn validate(&self) -> Result<()> {
        let (order, pieces) = (self.order, &self.pieces);
        if order == 0 {
            return Err(Error::InvalidGrading("order must be at least 1".into()));
        }
        if pieces.len() != order as usize {
            return Err(Error::InvalidGrading(format!(
                "order {order} needs {order} pieces, got {}",
                pieces.len()
            )));
        }
        let n = pieces[0].ambient_rank();
        for (k, pair) in pieces.windows(2).enumerate() {
            if pair[1].ambient_rank() != n {
                return Err(Error::InvalidGrading(format!(
                    "M_{} has the wrong ambient rank",
                    k + 1
                )));
            }
            if !pair[1].contains(&pair[0])? {
                return Err(Error::InvalidGrading(format!(
                    "T does not map M_{k} into M_{}",
                    k + 1
                )));
            }
        }
        let wrap = pieces[0].scale(-1);
        if !wrap.contains(&pieces[order as usize - 1])? {
            return Err(Error::InvalidGrading(format!(
                "T does not map M_{} into t^-1 M_0",
                order - 1
            )));
        }
        Ok(())
    }

    /// Rank-1 graded line matching [`ParabolicPoint::line`] under the correspondence.
    pub fn line(field: Field, order: u32, index: u32, twist: i64) -> GradedModule {
        assert!(index < order);
        let pieces = (0..order)
            .map(|k| {
                let drop = (index > 0 && k >= order - index) as i64;
                Lattice::diagonal(field, &[twist - drop])
            })
            .collect();
        GradedModule { order, pieces }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.pieces[0].ambient_rank()
    }

    pub fn field(&self) -> Field {
        self.pieces[0].field()
    }

    pub fn pieces(&self) -> &[Lattice] {
        &self.pieces
    }

    pub fn piece(&self, k: usize) -> &Lattice {
        &self.pieces[k]
    }

    /// The associated parabolic chain `E^0 = M_0`, `E^j = t M_{s-j}`.
    pub fn to_parabolic(&self) -> ParabolicPoint {
        let s = self.order as usize;
        let mut chain = Vec::with_capacity(s + 1);
        chain.push(self.pieces[0].clone());
        for j in 1..=s {
            chain.push(self.pieces[(s - j) % s].scale(1));
        }
        // A valid grading gives a valid chain; an invalid one is passed through unchecked.
        ParabolicPoint::new_unchecked(self.order, chain)
    }

    pub fn from_parabolic(p: &ParabolicPoint) -> GradedModule {
        let s = p.order() as usize;
        let mut pieces = Vec::with_capacity(s);
        pieces.push(p.level(0).clone());
        for k in 1..s {
            pieces.push(p.level(s - k).scale(-1));
        }
        GradedModule {
            order: p.order(),
            pieces,
        }
    }

    /// Weight `a/s` has multiplicity `dim M_{s-a} / M_{s-a-1}` (with `M_s = t^{-1} M_0`).
    pub fn weights(&self) -> WeightMultiset {
        let s = self.order as usize;
        let upper = |k: usize| -> Lattice {
            if k == s {
                self.pieces[0].scale(-1)
            } else {
                self.pieces[k].clone()
            }
        };
        let mut out = WeightMultiset::new();
        for a in 0..s {
            let big = upper(s - a);
            let small = &self.pieces[s - a - 1];
            let m = (small.volume() - big.volume()) as usize;
            if m > 0 {
                *out.entry(Weight::new(a as u32, self.order).unwrap())
                    .or_default() += m;
            }
        }
        out
    }

    /// Gradewise image under a matrix invertible over `K`.
    pub fn image(&self, a: &LocalMatrix) -> Result<GradedModule> {
        let pieces = self
            .pieces
            .iter()
            .map(|l| l.image(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(GradedModule {
            order: self.order,
            pieces,
        })
    }

    pub fn direct_sum(parts: &[&GradedModule]) -> Result<GradedModule> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidGrading("empty direct sum".into()))?;
        if parts.iter().any(|m| m.order != first.order) {
            return Err(Error::InvalidGrading(
                "direct sum of different orders".into(),
            ));
        }
        let field = first.field();
        let pieces = (0..first.order as usize)
            .map(|k| {
                let ls: Vec<&Lattice> = parts.iter().map(|m| &m.pieces[k]).collect();
                Lattice::direct_sum(field, &ls)
            })
            .collect();
        Ok(GradedModule {
            order: first.order,
            pieces,
        })
    }

    /// Splitting transported from the parabolic side; same basis matrices.
    pub fn split_into_lines(&self) -> GradedSplitting {
        GradedSplitting(self.to_parabolic().split_into_lines())
    }

    pub fn split_into_lines_randomized<G: rand::Rng>(&self, rng: &mut G) -> GradedSplitting {
        GradedSplitting(self.to_parabolic().split_into_lines_randomized(rng))
    }
}

/// A graded splitting: graded lines `from_parabolic(line_k)` with the parabolic basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedSplitting(pub LineSplitting);

impl GradedSplitting {
    pub fn basis(&self) -> &LocalMatrix {
        &self.0.basis
    }

    pub fn basis_inverse(&self) -> &LocalMatrix {
        &self.0.basis_inverse
    }

    /// Weight index of each line; the line's `T`-chain drops at grade `s - index`.
    pub fn indices(&self) -> &[u32] {
        &self.0.indices
    }

    pub fn lines(&self) -> Vec<GradedModule> {
        self.0
            .indices
            .iter()
            .map(|&a| GradedModule::line(self.0.field, self.0.order, a, 0))
            .collect()
    }
}

/// `A M_k ⊆ N_k` for all grades.
pub fn graded_morphism(a: &LocalMatrix, m: &GradedModule, n: &GradedModule) -> Result<bool> {
    if m.order != n.order {
        return Err(Error::ShapeMismatch(format!(
            "graded modules of orders {} and {}",
            m.order, n.order
        )));
    }
    for (x, y) in m.pieces.iter().zip(&n.pieces) {
        if !maps_into(a, x, y)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Field {
        Field::Rational
    }

    #[test]
    fn to_parabolic_examples() {
        let r = Lattice::standard(q(), 1);
        let m = GradedModule::new(1, vec![r.clone()]).unwrap();
        assert_eq!(m.to_parabolic(), ParabolicPoint::trivial(r.clone()));
        let m = GradedModule::new(2, vec![r.clone(), r.scale(-1)]).unwrap();
        let p = m.to_parabolic();
        assert_eq!(p.chain(), &[r.clone(), r.clone(), r.scale(1)]);
        let m = GradedModule::new(2, vec![r.clone(), r.clone()]).unwrap();
        assert_eq!(
            m.to_parabolic().chain(),
            &[r.clone(), r.scale(1), r.scale(1)]
        );
    }

    #[test]
    fn from_parabolic_examples() {
        let r = Lattice::standard(q(), 1);
        let m = GradedModule::from_parabolic(&ParabolicPoint::trivial(r.clone()));
        assert_eq!(m.pieces(), std::slice::from_ref(&r));
        let m = GradedModule::from_parabolic(&ParabolicPoint::line(q(), 2, 1, 0));
        assert_eq!(m.pieces(), &[r.clone(), r.scale(-1)]);
    }

    #[test]
    fn invalid_gradings_rejected() {
        let r = Lattice::standard(q(), 1);
        assert!(matches!(
            GradedModule::new(2, vec![r.clone(), r.scale(1)]),
            Err(Error::InvalidGrading(_))
        ));
        assert!(matches!(
            GradedModule::new(2, vec![r.clone(), r.scale(-2)]),
            Err(Error::InvalidGrading(_))
        ));
        assert!(matches!(
            GradedModule::new(3, vec![r]),
            Err(Error::InvalidGrading(_))
        ));
    }

    #[test]
    fn line_matches_correspondence() {
        for s in 1..6 {
            for a in 0..s {
                let p = ParabolicPoint::line(q(), s, a, 2);
                assert_eq!(
                    GradedModule::from_parabolic(&p),
                    GradedModule::line(q(), s, a, 2)
                );
                assert_eq!(GradedModule::line(q(), s, a, 2).weights(), p.weights());
            }
        }
    }

    #[test]
    fn graded_split_of_rank_one_and_diagonal() {
        let m = GradedModule::line(q(), 4, 3, 0);
        let s = m.split_into_lines();
        assert_eq!(s.lines(), vec![m.clone()]);
        let d = GradedModule::from_parabolic(&ParabolicPoint::diagonal(q(), 3, &[(0, 1), (0, 2)]));
        let s = d.split_into_lines();
        assert_eq!(s.basis(), &LocalMatrix::identity(q(), 2));
        assert_eq!(s.indices(), &[1, 2]);
    }
}

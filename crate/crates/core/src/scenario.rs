//! JSON scenario files: cover profiles, per-point objects, morphisms, pairings, global degree
//! data, and the check block carried by captured counterexamples.
//!
//! Matrices are stored column-major. Each entry is `{"t": k, "c": [c_0, c_1, ...]}` meaning
//! `t^k (c_0 + c_1 t + ...)`, with coefficients as exact strings (`"3"`, `"-1/2"`).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functors::{Branch, CoverProfile, GlobalCover};
use crate::lattice::Lattice;
use crate::local::LocalElement;
use crate::matrix::LocalMatrix;
use crate::pairing::PairingKind;
use crate::parabolic::{ParabolicBundle, ParabolicPoint, Weight, WeightMultiset};
use crate::rootstack::GradedModule;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Parabolic,
    Graded,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Parabolic => Side::Graded,
            Side::Graded => Side::Parabolic,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub t: i64,
    pub c: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub columns: Vec<Vec<EntrySpec>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub weight: Weight,
    pub multiplicity: usize,
}

/// A parabolic chain (`chain`, `E^0..E^r`), a grading (`pieces`, `M_0..M_{s-1}`), or weight
/// shorthand expanded to a diagonal chain. Exactly one of the three is present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub order: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<MatrixSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<Vec<MatrixSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<WeightSpec>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub label: String,
    pub e: u32,
    pub r: u32,
    #[serde(default = "one_string")]
    pub u: String,
}

fn one_string() -> String {
    "1".into()
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSpec {
    pub s: u32,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub marked: bool,
    pub branches: Vec<BranchSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingSpec {
    pub kind: PairingKind,
    /// Rank-1 value chain over the target point.
    pub value: ObjectSpec,
    /// Form matrix per object label.
    pub forms: BTreeMap<String, MatrixSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalSpec {
    pub deg_f: u32,
    pub rank: usize,
    pub degree: i64,
    pub points: BTreeMap<String, ObjectSpec>,
    pub covers: BTreeMap<String, CoverSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub suite: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<String>,
    pub verdict: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub field: Field,
    pub side: Side,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub objects: BTreeMap<String, ObjectSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub morphisms: BTreeMap<String, MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<PairingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global: Option<GlobalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckSpec>,
}

/// A decoded object on either side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Object {
    Parabolic(ParabolicPoint),
    Graded(GradedModule),
}

impl Object {
    pub fn weights(&self) -> WeightMultiset {
        match self {
            Object::Parabolic(p) => p.weights(),
            Object::Graded(m) => m.weights(),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Object::Parabolic(p) => p.rank(),
            Object::Graded(m) => m.rank(),
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            Object::Parabolic(p) => p.order(),
            Object::Graded(m) => m.order(),
        }
    }

    pub fn side(&self) -> Side {
        match self {
            Object::Parabolic(_) => Side::Parabolic,
            Object::Graded(_) => Side::Graded,
        }
    }

    pub fn converted(&self) -> Object {
        match self {
            Object::Parabolic(p) => Object::Graded(GradedModule::from_parabolic(p)),
            Object::Graded(m) => Object::Parabolic(m.to_parabolic()),
        }
    }

    pub fn to_parabolic(&self) -> ParabolicPoint {
        match self {
            Object::Parabolic(p) => p.clone(),
            Object::Graded(m) => m.to_parabolic(),
        }
    }

    pub fn to_graded(&self) -> GradedModule {
        match self {
            Object::Parabolic(p) => GradedModule::from_parabolic(p),
            Object::Graded(m) => m.clone(),
        }
    }
}

fn invalid(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Validation {
        location: location.into(),
        message: message.into(),
    }
}

/// Attaches a location to validation-type errors raised by the library.
fn at(location: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Validation { .. } | Error::Parse(_) => e,
        other => invalid(location, other.to_string()),
    }
}

pub fn encode_element(x: &LocalElement) -> EntrySpec {
    if x.is_zero() {
        return EntrySpec { t: 0, c: vec![] };
    }
    EntrySpec {
        t: x.t_order(),
        c: x.coeffs().iter().map(|c| c.to_string()).collect(),
    }
}

pub fn decode_element(field: Field, e: &EntrySpec) -> Result<LocalElement> {
    let coeffs =
        e.c.iter()
            .map(|c| field.parse_scalar(c))
            .collect::<Result<Vec<_>>>()?;
    Ok(LocalElement::from_coeffs(e.t, coeffs))
}

pub fn encode_matrix(m: &LocalMatrix) -> MatrixSpec {
    MatrixSpec {
        rows: m.rows(),
        cols: m.cols(),
        columns: m
            .columns()
            .map(|col| col.iter().map(encode_element).collect())
            .collect(),
    }
}

pub fn decode_matrix(field: Field, m: &MatrixSpec, location: &str) -> Result<LocalMatrix> {
    if m.columns.len() != m.cols {
        return Err(invalid(
            location,
            format!("{} columns listed, cols = {}", m.columns.len(), m.cols),
        ));
    }
    let mut cols = Vec::with_capacity(m.cols);
    for (j, col) in m.columns.iter().enumerate() {
        if col.len() != m.rows {
            return Err(invalid(
                format!("{location}.columns[{j}]"),
                format!("{} entries, rows = {}", col.len(), m.rows),
            ));
        }
        cols.push(
            col.iter()
                .map(|e| decode_element(field, e))
                .collect::<Result<Vec<_>>>()
                .map_err(at(&format!("{location}.columns[{j}]")))?,
        );
    }
    Ok(LocalMatrix::from_columns(m.rows, cols))
}

fn decode_lattice(field: Field, m: &MatrixSpec, location: &str) -> Result<Lattice> {
    let gens = decode_matrix(field, m, location)?;
    if gens.rows() != gens.cols() {
        return Err(invalid(location, "lattice basis must be square"));
    }
    Lattice::from_generators(field, &gens).map_err(at(location))
}

pub fn encode_object(o: &Object) -> ObjectSpec {
    let enc = |ls: &[Lattice]| ls.iter().map(|l| encode_matrix(l.basis())).collect();
    match o {
        Object::Parabolic(p) => ObjectSpec {
            order: p.order(),
            chain: Some(enc(p.chain())),
            pieces: None,
            weights: None,
        },
        Object::Graded(m) => ObjectSpec {
            order: m.order(),
            chain: None,
            pieces: Some(enc(m.pieces())),
            weights: None,
        },
    }
}

pub fn encode_weights(w: &WeightMultiset) -> Vec<WeightSpec> {
    w.iter()
        .map(|(&weight, &multiplicity)| WeightSpec {
            weight,
            multiplicity,
        })
        .collect()
}

/// Decodes an object on the given side; a chain given for the other side is converted.
pub fn decode_object(field: Field, side: Side, o: &ObjectSpec, location: &str) -> Result<Object> {
    let given = [o.chain.is_some(), o.pieces.is_some(), o.weights.is_some()];
    if given.iter().filter(|&&b| b).count() != 1 {
        return Err(invalid(
            location,
            "give exactly one of chain, pieces, weights",
        ));
    }
    let obj = if let Some(chain) = &o.chain {
        let ls = chain
            .iter()
            .enumerate()
            .map(|(j, m)| decode_lattice(field, m, &format!("{location}.chain[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        Object::Parabolic(ParabolicPoint::new(o.order, ls).map_err(at(location))?)
    } else if let Some(pieces) = &o.pieces {
        let ls = pieces
            .iter()
            .enumerate()
            .map(|(k, m)| decode_lattice(field, m, &format!("{location}.pieces[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        Object::Graded(GradedModule::new(o.order, ls).map_err(at(location))?)
    } else {
        let ws = o.weights.as_ref().expect("checked above");
        let pairs: Vec<(Weight, usize)> = ws.iter().map(|w| (w.weight, w.multiplicity)).collect();
        if pairs.iter().map(|p| p.1).sum::<usize>() == 0 {
            return Err(invalid(location, "weights give rank 0"));
        }
        Object::Parabolic(
            ParabolicPoint::from_weights(field, o.order, &pairs).map_err(at(location))?,
        )
    };
    Ok(match (side, obj) {
        (Side::Graded, Object::Parabolic(p)) => Object::Graded(GradedModule::from_parabolic(&p)),
        (Side::Parabolic, Object::Graded(m)) => Object::Parabolic(m.to_parabolic()),
        (_, obj) => obj,
    })
}

pub fn encode_cover(p: &CoverProfile) -> CoverSpec {
    CoverSpec {
        s: p.target_order(),
        marked: p.is_marked_target(),
        branches: p
            .branches()
            .iter()
            .map(|b| BranchSpec {
                label: b.label.clone(),
                e: b.e,
                r: b.r,
                u: b.u.to_string(),
            })
            .collect(),
    }
}

pub fn decode_cover(field: Field, c: &CoverSpec, location: &str) -> Result<CoverProfile> {
    let mut branches = Vec::with_capacity(c.branches.len());
    for (i, b) in c.branches.iter().enumerate() {
        let u = field
            .parse_scalar(&b.u)
            .map_err(at(&format!("{location}.branches[{i}].u")))?;
        branches.push(Branch {
            label: b.label.clone(),
            e: b.e,
            r: b.r,
            u,
        });
    }
    CoverProfile::new(c.s, branches, c.marked).map_err(|e| match e {
        Error::InadmissibleProfile { .. } => e,
        other => invalid(location, other.to_string()),
    })
}

/// Global degree data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalData {
    pub bundle: ParabolicBundle,
    pub cover: GlobalCover,
}

pub fn decode_global(field: Field, g: &GlobalSpec) -> Result<GlobalData> {
    let mut points = BTreeMap::new();
    for (label, o) in &g.points {
        let loc = format!("global.points.{label}");
        let p = decode_object(field, Side::Parabolic, o, &loc)?.to_parabolic();
        points.insert(label.clone(), p);
    }
    let bundle = ParabolicBundle::new(g.rank, g.degree, points)?;
    let mut profiles = BTreeMap::new();
    for (label, c) in &g.covers {
        profiles.insert(
            label.clone(),
            decode_cover(field, c, &format!("global.covers.{label}"))?,
        );
    }
    let cover = GlobalCover::new(g.deg_f, profiles)?;
    Ok(GlobalData { bundle, cover })
}

impl Scenario {
    pub fn new(field: Field, side: Side) -> Scenario {
        Scenario {
            version: FORMAT_VERSION,
            field,
            side,
            cover: None,
            branch: None,
            objects: BTreeMap::new(),
            morphisms: BTreeMap::new(),
            pairing: None,
            global: None,
            check: None,
        }
    }

    pub fn parse(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if s.version != FORMAT_VERSION {
            return Err(invalid(
                "version",
                format!("unsupported version {}", s.version),
            ));
        }
        Ok(s)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn cover_profile(&self) -> Result<Option<CoverProfile>> {
        self.cover
            .as_ref()
            .map(|c| decode_cover(self.field, c, "cover"))
            .transpose()
    }

    pub fn decoded_objects(&self) -> Result<BTreeMap<String, Object>> {
        self.objects
            .iter()
            .map(|(k, o)| {
                Ok((
                    k.clone(),
                    decode_object(self.field, self.side, o, &format!("objects.{k}"))?,
                ))
            })
            .collect()
    }

    pub fn decoded_morphisms(&self) -> Result<BTreeMap<String, LocalMatrix>> {
        self.morphisms
            .iter()
            .map(|(k, m)| {
                Ok((
                    k.clone(),
                    decode_matrix(self.field, m, &format!("morphisms.{k}"))?,
                ))
            })
            .collect()
    }

    /// Checks everything that can be checked without running a functor.
    pub fn validate(&self) -> Result<()> {
        let cover = self.cover_profile()?;
        let objects = self.decoded_objects()?;
        self.decoded_morphisms()?;
        if let Some(c) = &cover {
            for (label, o) in &objects {
                let want = match c.branch(label) {
                    Ok(b) => b.r,
                    Err(_) => c.target_order(),
                };
                if o.order() != want {
                    return Err(invalid(
                        format!("objects.{label}"),
                        format!("order {} but the cover needs {want}", o.order()),
                    ));
                }
            }
        }
        if let Some(p) = &self.pairing {
            decode_object(self.field, Side::Parabolic, &p.value, "pairing.value")?;
            for (k, m) in &p.forms {
                decode_matrix(self.field, m, &format!("pairing.forms.{k}"))?;
            }
        }
        if let Some(g) = &self.global {
            decode_global(self.field, g)?;
        }
        Ok(())
    }

    /// Same scenario with every object written explicitly in canonical form on `side`.
    pub fn canonical(&self, side: Side) -> Result<Scenario> {
        let mut out = self.clone();
        out.side = side;
        out.objects = self
            .decoded_objects()?
            .into_iter()
            .map(|(k, o)| {
                let o = if o.side() == side { o } else { o.converted() };
                (k, encode_object(&o))
            })
            .collect();
        Ok(out)
    }
}

/// Rows `weight  multiplicity`, one per weight.
pub fn weight_table(w: &WeightMultiset) -> String {
    let mut out = String::from("weight  multiplicity\n");
    for (weight, m) in w {
        let _ = writeln!(out, "{:<7} {m}", weight.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Field {
        Field::Rational
    }

    #[test]
    fn element_round_trip() {
        let f = Field::prime(7).unwrap();
        for x in [
            LocalElement::zero(),
            LocalElement::t_pow(f, -3),
            LocalElement::from_coeffs(2, vec![f.from_i64(3), f.zero(), f.from_i64(-1)]),
        ] {
            assert_eq!(decode_element(f, &encode_element(&x)).unwrap(), x);
        }
        let x = LocalElement::from_coeffs(-1, vec![q().from_ratio(1, 2).unwrap()]);
        let e = encode_element(&x);
        assert_eq!(e.c, vec!["1/2".to_string()]);
        assert_eq!(decode_element(q(), &e).unwrap(), x);
    }

    #[test]
    fn weight_shorthand_and_conversion() {
        let mut s = Scenario::new(q(), Side::Parabolic);
        s.objects.insert(
            "x".into(),
            ObjectSpec {
                order: 2,
                chain: None,
                pieces: None,
                weights: Some(vec![WeightSpec {
                    weight: Weight::new(1, 2).unwrap(),
                    multiplicity: 1,
                }]),
            },
        );
        let g = s.canonical(Side::Graded).unwrap();
        let objs = g.decoded_objects().unwrap();
        let r = Lattice::standard(q(), 1);
        assert_eq!(
            objs["x"],
            Object::Graded(GradedModule::new(2, vec![r.clone(), r.scale(-1)]).unwrap())
        );
        let p = g.canonical(Side::Parabolic).unwrap();
        assert_eq!(p.canonical(Side::Graded).unwrap().to_text(), g.to_text());
        assert_eq!(Scenario::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn malformed_chain_names_point() {
        let r = Lattice::standard(q(), 1);
        let mut s = Scenario::new(q(), Side::Parabolic);
        let bad = ObjectSpec {
            order: 2,
            chain: Some(vec![
                encode_matrix(r.basis()),
                encode_matrix(r.basis()),
                encode_matrix(r.scale(2).basis()),
            ]),
            pieces: None,
            weights: None,
        };
        s.objects.insert("y1".into(), bad);
        match s.validate() {
            Err(Error::Validation { location, .. }) => assert_eq!(location, "objects.y1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inadmissible_cover_message() {
        let mut s = Scenario::new(q(), Side::Parabolic);
        s.cover = Some(CoverSpec {
            s: 4,
            marked: true,
            branches: vec![BranchSpec {
                label: "x".into(),
                e: 3,
                r: 1,
                u: "1".into(),
            }],
        });
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("s = 4 but r*e = 1*3 = 3"), "{err}");
    }
}

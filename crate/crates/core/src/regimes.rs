//! Classification of power-law parameter families into scaling regimes.
//!
//! A family fixes `mu_i = N^(a_i)` and `alpha = N^b` with rational exponents.
//! Every asymptotic comparison `x << y` between such quantities reduces to a
//! strict inequality between exponents, which is decided exactly. An exponent
//! tie is reported as [`RegimeKind::Boundary`]; constant prefactors are ignored.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{ln_beta, LimitLaw, Rate};
use crate::error::{Error, Result};
use crate::process::ModelParams;

/// Exact exponent of `N`.
pub type Exponent = Ratio<i64>;

/// Parses `"p/q"`, `"p"` or a plain integer into an exponent.
pub fn parse_exponent(s: &str) -> Result<Exponent> {
    s.trim()
        .parse::<Exponent>()
        .map_err(|_| Error::InvalidParams(format!("malformed rational exponent {s:?}")))
}

pub fn format_exponent(e: &Exponent) -> String {
    if *e.denom() == 1 {
        e.numer().to_string()
    } else {
        format!("{}/{}", e.numer(), e.denom())
    }
}

mod exponent_serde {
    use super::*;
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(e: &Exponent, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_exponent(e))
    }

    struct ExponentVisitor;

    impl Visitor<'_> for ExponentVisitor {
        type Value = Exponent;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a rational exponent such as \"-2/3\" or an integer")
        }
        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
            parse_exponent(v).map_err(E::custom)
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
            Ok(Exponent::from_integer(v))
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
            i64::try_from(v)
                .map(Exponent::from_integer)
                .map_err(|_| E::custom("exponent out of range"))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Exponent, D::Error> {
        d.deserialize_any(ExponentVisitor)
    }

    pub mod list {
        use super::*;
        use serde::de::SeqAccess;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Exponent], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for e in v {
                seq.serialize_element(&format_exponent(e))?;
            }
            seq.end()
        }

        struct Wrapped(Exponent);
        impl<'de> Deserialize<'de> for Wrapped {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                super::deserialize(d).map(Wrapped)
            }
        }

        struct ListVisitor;
        impl<'de> Visitor<'de> for ListVisitor {
            type Value = Vec<Exponent>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of rational exponents")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some(Wrapped(e)) = seq.next_element()? {
                    out.push(e);
                }
                Ok(out)
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Exponent>, D::Error> {
            d.deserialize_seq(ListVisitor)
        }
    }
}

/// `mu_i = N^(a_i)`, `alpha = N^b`, on a torus of dimension `dim`, targeting type `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingFamily {
    #[serde(rename = "d")]
    pub dim: usize,
    #[serde(rename = "k")]
    pub target: usize,
    #[serde(with = "exponent_serde::list")]
    pub a: Vec<Exponent>,
    #[serde(with = "exponent_serde")]
    pub b: Exponent,
    /// Limits of `mu_i / mu_1`, needed only in the low-mutation regime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Rate>>,
}

impl ScalingFamily {
    pub fn new(dim: usize, target: usize, a: Vec<Exponent>, b: Exponent) -> Result<Self> {
        let family = Self {
            dim,
            target,
            a,
            b,
            c: None,
        };
        family.validate()?;
        Ok(family)
    }

    pub fn with_limits(mut self, c: Vec<Rate>) -> Result<Self> {
        self.c = Some(c);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if self.target == 0 {
            return Err(Error::InvalidParams("target type must be at least 1".into()));
        }
        if self.a.len() < self.target {
            return Err(Error::InvalidParams(format!(
                "{} rate exponents given for target type {}",
                self.a.len(),
                self.target
            )));
        }
        if let Some(c) = &self.c {
            if c.len() < self.target {
                return Err(Error::InvalidParams(format!(
                    "{} rate limits given for target type {}",
                    c.len(),
                    self.target
                )));
            }
        }
        Ok(())
    }

    /// Whether `a_1 <= ... <= a_k`.
    pub fn is_monotone(&self) -> bool {
        self.a[..self.target].windows(2).all(|w| w[0] <= w[1])
    }

    /// The same family with target type `k`.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        let mut f = self.clone();
        f.target = k;
        f.validate()?;
        Ok(f)
    }

    fn d(&self) -> Exponent {
        Exponent::from_integer(self.dim as i64)
    }
}

/// Exponent of `N` in `beta_k`: `-(1 + (k-1)d b + a_1 + ... + a_k) / ((k-1)d + k)`.
pub fn exponent_of_beta(family: &ScalingFamily, k: usize) -> Result<Exponent> {
    if k == 0 || k > family.target || k > family.a.len() {
        return Err(Error::TypeOutOfRange {
            index: k,
            max: family.target,
        });
    }
    let km = Exponent::from_integer(k as i64 - 1);
    let d = family.d();
    let sum: Exponent = family.a[..k].iter().copied().sum();
    let numerator = Exponent::from_integer(1) + km * d * family.b + sum;
    let denominator = km * d + Exponent::from_integer(k as i64);
    Ok(-numerator / denominator)
}

/// Exponent of `N` in `1 / (alpha^d beta_{j-1}^(d+1))`, the threshold for `mu_j`.
fn threshold_exponent(family: &ScalingFamily, j: usize) -> Result<Exponent> {
    let d = family.d();
    Ok(-(d * family.b + (d + 1) * exponent_of_beta(family, j - 1)?))
}

/// Index of the last type that still forms many balls before the next one appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum LastManyIndex {
    Finite(usize),
    /// The defining condition held for every `j <= k`.
    Infinite,
    /// The condition at type `j` is an exponent tie.
    Boundary(usize),
}

/// Walks `j = 2..=k` while `mu_j << 1/(alpha^d beta_{j-1}^(d+1))` holds strictly.
///
/// For monotone families the conditions that hold form a prefix of `2..=k`,
/// so the first failure determines `l`.
pub fn compute_l(family: &ScalingFamily) -> Result<LastManyIndex> {
    family.validate()?;
    for j in 2..=family.target {
        match family.a[j - 1].cmp(&threshold_exponent(family, j)?) {
            Ordering::Less => continue,
            Ordering::Equal => return Ok(LastManyIndex::Boundary(j)),
            Ordering::Greater => return Ok(LastManyIndex::Finite(j - 1)),
        }
    }
    Ok(LastManyIndex::Infinite)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
    Boundary,
    Unclassified,
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeKind::Theorem1 => "theorem1",
            RegimeKind::Theorem2 => "theorem2",
            RegimeKind::Theorem3 => "theorem3",
            RegimeKind::Theorem4 => "theorem4",
            RegimeKind::Boundary => "boundary",
            RegimeKind::Unclassified => "unclassified",
        };
        f.write_str(s)
    }
}

/// Time scale `beta_index` used to rescale `sigma_k`; `beta_1 = 1/(N mu_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub beta_index: usize,
    #[serde(with = "exponent_serde")]
    pub exponent: Exponent,
}

impl Scale {
    pub fn describe(&self) -> String {
        if self.beta_index == 1 {
            "1/(N*mu_1)".into()
        } else {
            format!("beta_{}", self.beta_index)
        }
    }

    /// Value of the scale for concrete parameters.
    pub fn evaluate(&self, params: &ModelParams) -> Result<f64> {
        crate::asymptotics::beta_k(params, self.beta_index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    pub kind: RegimeKind,
    /// Set for [`RegimeKind::Theorem4`].
    pub l: Option<usize>,
    pub law: Option<LimitLaw>,
    pub scale: Option<Scale>,
    /// Human-readable account of the deciding comparison.
    pub reason: String,
}

impl Regime {
    fn without_law(kind: RegimeKind, reason: String) -> Self {
        Self {
            kind,
            l: None,
            law: None,
            scale: None,
            reason,
        }
    }

    /// The law and scale, or a no-law error for boundary and unclassified families.
    pub fn law_and_scale(&self) -> Result<(&LimitLaw, &Scale)> {
        match (&self.law, &self.scale) {
            (Some(law), Some(scale)) => Ok((law, scale)),
            _ => Err(Error::NoLawAvailable(format!("{} regime: {}", self.kind, self.reason))),
        }
    }
}

/// Selects the regime, limit law and time scale for `sigma_k`.
pub fn classify(family: &ScalingFamily) -> Result<Regime> {
    family.validate()?;
    if !family.is_monotone() {
        return Ok(Regime::without_law(
            RegimeKind::Unclassified,
            "rate exponents are not nondecreasing".into(),
        ));
    }
    let d = family.d();
    let k = family.target;
    let fill = family.b - (d + 1) / d;
    let a1 = family.a[0];
    match a1.cmp(&fill) {
        Ordering::Equal => {
            return Ok(Regime::without_law(
                RegimeKind::Boundary,
                format!(
                    "mu_1 exponent {} equals the fixation threshold {}",
                    format_exponent(&a1),
                    format_exponent(&fill)
                ),
            ))
        }
        Ordering::Less => {
            let c = family.c.as_ref().ok_or(Error::MissingLimits)?;
            let law = LimitLaw::hypoexponential(c[..k].to_vec())?;
            return Ok(Regime {
                kind: RegimeKind::Theorem1,
                l: None,
                law: Some(law),
                scale: Some(Scale {
                    beta_index: 1,
                    exponent: exponent_of_beta(family, 1)?,
                }),
                reason: format!(
                    "mu_1 exponent {} below the fixation threshold {}",
                    format_exponent(&a1),
                    format_exponent(&fill)
                ),
            });
        }
        Ordering::Greater => {}
    }
    let beta_scale = |index: usize| -> Result<Scale> {
        Ok(Scale {
            beta_index: index,
            exponent: exponent_of_beta(family, index)?,
        })
    };
    Ok(match compute_l(family)? {
        LastManyIndex::Boundary(j) => Regime::without_law(
            RegimeKind::Boundary,
            format!(
                "mu_{j} exponent {} equals its threshold {}",
                format_exponent(&family.a[j - 1]),
                format_exponent(&threshold_exponent(family, j)?)
            ),
        ),
        LastManyIndex::Finite(1) => Regime {
            kind: RegimeKind::Theorem2,
            l: None,
            law: Some(LimitLaw::Exp1),
            scale: Some(beta_scale(1)?),
            reason: "mu_2 well above (N mu_1)^(d+1) / alpha^d".into(),
        },
        LastManyIndex::Finite(l) if l < k => Regime {
            kind: RegimeKind::Theorem4,
            l: Some(l),
            law: Some(LimitLaw::theorem4(family.dim, l)?),
            scale: Some(beta_scale(l)?),
            reason: format!("types up to {l} form many balls; mu_{} is well above its threshold", l + 1),
        },
        LastManyIndex::Finite(_) | LastManyIndex::Infinite => Regime {
            kind: RegimeKind::Theorem3,
            l: None,
            law: Some(LimitLaw::theorem3(family.dim, k)?),
            scale: Some(beta_scale(k)?),
            reason: format!("every type below {k} forms many balls"),
        },
    })
}

/// Signs of `ln(mu_k alpha^d beta_k^(d+1))` and `ln(mu_k alpha^d beta_{k-1}^(d+1))`.
///
/// The first log is exactly `m_{k-1}/m_k` times the second, where
/// `m_j = (j-1)d + j`, so the signs agree for every parameter tuple. Values
/// within rounding of zero are reported as 0.
pub fn hardest_lemma_check(params: &ModelParams, k: usize) -> Result<(i8, i8)> {
    if k < 2 || k > params.target {
        return Err(Error::TypeOutOfRange {
            index: k,
            max: params.target,
        });
    }
    let (with_k, with_prev) = lemma_logs(params, k);
    // |with_k| is at least a third of |with_prev|, so one rounding threshold
    // applied to the larger log decides whether both are zero.
    if with_prev.abs() <= 1e-9 * lemma_magnitude(params, k) {
        return Ok((0, 0));
    }
    Ok((sign(with_k), sign(with_prev)))
}

/// The two logarithms compared by [`hardest_lemma_check`].
pub fn lemma_logs(params: &ModelParams, k: usize) -> (f64, f64) {
    let d = params.dim as f64;
    let base = params.mu(k).ln() + d * params.alpha.ln();
    let n = params.volume();
    let beta_k = ln_beta(params.dim, n, params.alpha, &params.mu[..k]);
    let beta_prev = ln_beta(params.dim, n, params.alpha, &params.mu[..k - 1]);
    (base + (d + 1.0) * beta_k, base + (d + 1.0) * beta_prev)
}

fn lemma_magnitude(params: &ModelParams, k: usize) -> f64 {
    let d = params.dim as f64;
    let logs = params.mu[..k].iter().map(|m| m.ln().abs()).sum::<f64>()
        + params.volume().ln().abs()
        + (k as f64) * d * params.alpha.ln().abs();
    logs.max(1.0)
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Exponent {
        Exponent::new(n, d)
    }

    fn family(dim: usize, b: Exponent, a: Vec<Exponent>) -> ScalingFamily {
        let k = a.len();
        ScalingFamily::new(dim, k, a, b).unwrap()
    }

    #[test]
    fn beta_exponent_examples() {
        let f = family(1, r(0, 1), vec![r(-4, 5), r(0, 1)]);
        assert_eq!(exponent_of_beta(&f, 1).unwrap(), r(-1, 5));
        assert_eq!(exponent_of_beta(&f, 2).unwrap(), r(-1, 15));
        for dim in 1..=3 {
            let f = family(dim, r(0, 1), vec![r(0, 1); 4]);
            for k in 1..=4 {
                let m = ((k - 1) * dim + k) as i64;
                assert_eq!(exponent_of_beta(&f, k).unwrap(), r(-1, m));
            }
        }
        assert!(exponent_of_beta(&f, 3).is_err());
    }

    #[test]
    fn l_examples() {
        let f = family(1, r(0, 1), vec![r(-2, 3); 4]);
        assert_eq!(compute_l(&f).unwrap(), LastManyIndex::Infinite);
        let f = family(1, r(0, 1), vec![r(-4, 5), r(0, 1), r(1, 1)]);
        assert_eq!(compute_l(&f).unwrap(), LastManyIndex::Finite(2));
        // threshold for a_2 is (d+1)(1 + a_1) - d b = 1
        let f = family(1, r(0, 1), vec![r(-1, 2), r(3, 2), r(3, 2)]);
        assert_eq!(compute_l(&f).unwrap(), LastManyIndex::Finite(1));
        let f = family(1, r(0, 1), vec![r(-1, 2), r(1, 1), r(1, 1)]);
        assert_eq!(compute_l(&f).unwrap(), LastManyIndex::Boundary(2));
        let f = family(1, r(0, 1), vec![r(-1, 2), r(1, 3)]);
        assert_eq!(compute_l(&f).unwrap(), LastManyIndex::Infinite);
        let f = family(2, r(0, 1), vec![r(-1, 2)]);
        assert_eq!(compute_l(&f).unwrap(), LastManyIndex::Infinite);
    }

    #[test]
    fn low_mutation_regime() {
        let f = family(1, r(1, 1), vec![r(-3, 1); 3]).with_limits(vec![Rate::Finite(1.0); 3]).unwrap();
        let regime = classify(&f).unwrap();
        assert_eq!(regime.kind, RegimeKind::Theorem1);
        assert_eq!(regime.law, Some(LimitLaw::Hypoexponential { rates: vec![Rate::Finite(1.0); 3] }));
        let scale = regime.scale.unwrap();
        assert_eq!(scale.beta_index, 1);
        assert_eq!(scale.exponent, r(2, 1));
        let bare = family(1, r(1, 1), vec![r(-3, 1); 3]);
        assert!(matches!(classify(&bare), Err(Error::MissingLimits)));
    }

    #[test]
    fn fast_followers_regime() {
        let f = family(1, r(1, 1), vec![r(-1, 2), r(1, 2), r(1, 2)]);
        let regime = classify(&f).unwrap();
        assert_eq!(regime.kind, RegimeKind::Theorem2);
        assert_eq!(regime.law, Some(LimitLaw::Exp1));
        assert_eq!(regime.scale.unwrap().exponent, r(-1, 2));
    }

    #[test]
    fn many_balls_regime() {
        let f = family(1, r(0, 1), vec![r(-2, 3), r(-2, 3)]);
        let regime = classify(&f).unwrap();
        assert_eq!(regime.kind, RegimeKind::Theorem3);
        assert_eq!(regime.law, Some(LimitLaw::theorem3(1, 2).unwrap()));
        let scale = regime.scale.unwrap();
        assert_eq!(scale.beta_index, 2);
        assert_eq!(scale.exponent, exponent_of_beta(&f, 2).unwrap());
        assert_eq!(scale.exponent, r(1, 9));
    }

    #[test]
    fn intermediate_regime() {
        let f = family(1, r(0, 1), vec![r(-4, 5), r(0, 1), r(1, 1)]);
        let regime = classify(&f).unwrap();
        assert_eq!(regime.kind, RegimeKind::Theorem4);
        assert_eq!(regime.l, Some(2));
        match regime.law.unwrap() {
            LimitLaw::WeibullType { coefficient, exponent } => {
                assert!((coefficient - 1.0 / 3.0).abs() < 1e-15);
                assert_eq!(exponent, 3);
            }
            other => panic!("{other:?}"),
        }
        let scale = regime.scale.unwrap();
        assert_eq!(scale.beta_index, 2);
        assert_eq!(scale.exponent, r(-1, 15));
    }

    #[test]
    fn ties_are_boundaries() {
        // a_1 = b - (d+1)/d
        let f = family(1, r(1, 1), vec![r(-1, 1), r(0, 1)]);
        assert_eq!(classify(&f).unwrap().kind, RegimeKind::Boundary);
        let f = family(2, r(0, 1), vec![r(-3, 2), r(0, 1)]);
        assert_eq!(classify(&f).unwrap().kind, RegimeKind::Boundary);
        // mu_2 at (N mu_1)^(d+1) / alpha^d: a_2 = 2(1 + a_1) - b
        let f = family(1, r(1, 1), vec![r(-1, 2), r(0, 1)]);
        assert_eq!(classify(&f).unwrap().kind, RegimeKind::Boundary);
        // mu_3 exactly at its threshold 2/15
        let f = family(1, r(0, 1), vec![r(-4, 5), r(0, 1), r(2, 15)]);
        let regime = classify(&f).unwrap();
        assert_eq!(regime.kind, RegimeKind::Boundary);
        assert!(matches!(regime.law_and_scale(), Err(Error::NoLawAvailable(_))));
    }

    #[test]
    fn non_monotone_is_unclassified() {
        let f = family(1, r(0, 1), vec![r(0, 1), r(-1, 1)]);
        assert_eq!(classify(&f).unwrap().kind, RegimeKind::Unclassified);
    }

    #[test]
    fn single_type_uses_exponential_law() {
        let f = family(1, r(0, 1), vec![r(-1, 2)]);
        let regime = classify(&f).unwrap();
        assert_eq!(regime.kind, RegimeKind::Theorem3);
        assert_eq!(regime.law, Some(LimitLaw::theorem3(1, 1).unwrap()));
        assert_eq!(regime.scale.unwrap().exponent, r(-1, 2));
    }

    #[test]
    fn exponents_parse() {
        assert_eq!(parse_exponent("-2/3").unwrap(), r(-2, 3));
        assert_eq!(parse_exponent("4").unwrap(), r(4, 1));
        assert!(parse_exponent("1//2").is_err());
        assert!(parse_exponent("0.5").is_err());
        let json = r#"{"d":1,"k":2,"a":["-2/3",-1],"b":"0"}"#;
        let f: ScalingFamily = serde_json::from_str(json).unwrap();
        assert_eq!(f.a, vec![r(-2, 3), r(-1, 1)]);
        let back: ScalingFamily = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<ScalingFamily>(r#"{"d":1,"k":1,"a":["0"],"b":"0","z":1}"#).is_err());
    }

    #[test]
    fn lemma_signs_for_unit_parameters() {
        let p = ModelParams::with_volume(2, 1.0, 1.0, vec![1.0; 3], 3).unwrap();
        assert_eq!(hardest_lemma_check(&p, 2).unwrap(), (0, 0));
        assert_eq!(hardest_lemma_check(&p, 3).unwrap(), (0, 0));
        assert!(hardest_lemma_check(&p, 1).is_err());
    }

    #[test]
    fn lemma_signs_negative_in_many_ball_regime() {
        // A concrete member of the d = 1, b = 0, a = (-2/3, -2/3) family at N = 10^6
        let p = ModelParams::with_volume(1, 1e6, 1.0, vec![1e-4, 1e-4], 2).unwrap();
        assert_eq!(hardest_lemma_check(&p, 2).unwrap(), (-1, -1));
    }

    fn exponent() -> impl Strategy<Value = Exponent> {
        (-12i64..=12, 1i64..=6).prop_map(|(n, d)| Exponent::new(n, d))
    }

    fn any_family() -> impl Strategy<Value = ScalingFamily> {
        (1usize..=3, 1usize..=5)
            .prop_flat_map(|(dim, k)| (Just(dim), Just(k), proptest::collection::vec(exponent(), k), exponent()))
            .prop_map(|(dim, k, a, b)| {
                let c = Some(vec![Rate::Finite(1.0); k]);
                ScalingFamily { dim, target: k, a, b, c }
            })
    }

    fn monotone_family() -> impl Strategy<Value = ScalingFamily> {
        any_family().prop_map(|mut f| {
            f.a.sort();
            f
        })
    }

    proptest! {
        #[test]
        fn classification_is_total(f in any_family()) {
            let regime = classify(&f).unwrap();
            if let RegimeKind::Theorem4 = regime.kind {
                let l = regime.l.unwrap();
                prop_assert!(2 <= l && l < f.target);
            }
            let has_law = regime.law.is_some();
            prop_assert_eq!(has_law, !matches!(regime.kind, RegimeKind::Boundary | RegimeKind::Unclassified));
        }

        #[test]
        fn scale_exponents_match_beta(f in monotone_family()) {
            let regime = classify(&f).unwrap();
            match regime.kind {
                RegimeKind::Theorem3 => prop_assert_eq!(regime.scale.unwrap().exponent, exponent_of_beta(&f, f.target).unwrap()),
                RegimeKind::Theorem4 => prop_assert_eq!(regime.scale.unwrap().exponent, exponent_of_beta(&f, regime.l.unwrap()).unwrap()),
                RegimeKind::Theorem1 | RegimeKind::Theorem2 => prop_assert_eq!(regime.scale.unwrap().exponent, -(Exponent::from_integer(1) + f.a[0])),
                _ => {}
            }
        }

        #[test]
        fn satisfied_conditions_form_a_prefix(f in monotone_family()) {
            let holds: Vec<Ordering> = (2..=f.target)
                .map(|j| f.a[j - 1].cmp(&threshold_exponent(&f, j).unwrap()))
                .collect();
            if let Some(first) = holds.iter().position(|o| *o != Ordering::Less) {
                prop_assert!(holds[first..].iter().all(|o| *o != Ordering::Less));
            }
        }

        #[test]
        fn many_ball_regime_restricts_consistently(f in monotone_family()) {
            if classify(&f).unwrap().kind == RegimeKind::Theorem3 {
                for k in 1..f.target {
                    let sub = f.truncated(k).unwrap();
                    prop_assert_eq!(compute_l(&sub).unwrap(), LastManyIndex::Infinite);
                }
            }
        }

        #[test]
        fn lemma_signs_agree(
            dim in 1usize..=3,
            k in 2usize..=4,
            log_mu in proptest::collection::vec(-6.0f64..6.0, 4),
            log_alpha in -6.0f64..6.0,
            log_n in -6.0f64..6.0,
        ) {
            let mu: Vec<f64> = log_mu.iter().map(|x| 10f64.powf(*x)).collect();
            let p = ModelParams::with_volume(dim, 10f64.powf(log_n), 10f64.powf(log_alpha), mu, 4).unwrap();
            let (s1, s2) = hardest_lemma_check(&p, k).unwrap();
            prop_assert_eq!(s1, s2);
        }
    }
}

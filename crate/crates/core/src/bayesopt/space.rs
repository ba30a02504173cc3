//! Mixed parameter spaces and their unit-cube encoding.

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use super::BayesOptError;
use crate::trial::ParamColumns;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DimensionKind {
    Continuous {
        lo: f64,
        hi: f64,
        #[serde(default)]
        scale: Scale,
    },
    Integer {
        lo: i64,
        hi: i64,
        #[serde(default)]
        scale: Scale,
    },
    Categorical {
        choices: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    #[serde(flatten)]
    pub kind: DimensionKind,
}

impl Dimension {
    pub fn continuous(name: &str, lo: f64, hi: f64, scale: Scale) -> Self {
        Self { name: name.into(), kind: DimensionKind::Continuous { lo, hi, scale } }
    }

    pub fn integer(name: &str, lo: i64, hi: i64, scale: Scale) -> Self {
        Self { name: name.into(), kind: DimensionKind::Integer { lo, hi, scale } }
    }

    pub fn categorical(name: &str, choices: &[&str]) -> Self {
        Self { name: name.into(), kind: DimensionKind::Categorical { choices: choices.iter().map(|c| c.to_string()).collect() } }
    }

    /// Width of this dimension in the encoded vector.
    pub fn encoded_width(&self) -> usize {
        match &self.kind {
            DimensionKind::Categorical { choices } => choices.len(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Choice(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Real(x) => Some(*x),
            ParamValue::Choice(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Choice(s) => Some(s),
            _ => None,
        }
    }
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(x) => write!(f, "{x}"),
            ParamValue::Choice(s) => f.write_str(s),
        }
    }
}

/// Concrete values, one per dimension, in the order of the space.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment(pub Vec<(String, ParamValue)>);

impl Assignment {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl ParamColumns for Assignment {
    fn column_names(&self) -> Vec<String> {
        self.0.iter().map(|(n, _)| n.clone()).collect()
    }

    fn column_values(&self) -> Vec<String> {
        self.0.iter().map(|(_, v)| v.to_string()).collect()
    }
}

fn warp(x: f64, scale: Scale) -> f64 {
    match scale {
        Scale::Linear => x,
        Scale::Log10 => x.log10(),
    }
}

fn unwarp(x: f64, scale: Scale) -> f64 {
    match scale {
        Scale::Linear => x,
        Scale::Log10 => 10f64.powf(x),
    }
}

fn to_unit(x: f64, lo: f64, hi: f64, scale: Scale) -> f64 {
    let (a, b) = (warp(lo, scale), warp(hi, scale));
    ((warp(x, scale) - a) / (b - a)).clamp(0.0, 1.0)
}

fn from_unit(u: f64, lo: f64, hi: f64, scale: Scale) -> f64 {
    let (a, b) = (warp(lo, scale), warp(hi, scale));
    unwarp(a + u.clamp(0.0, 1.0) * (b - a), scale).clamp(lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub dimensions: Vec<Dimension>,
}

impl ParamSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self, BayesOptError> {
        let s = Self { dimensions };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), BayesOptError> {
        let bad = |msg: String| Err(BayesOptError::InvalidSpace(msg));
        if self.dimensions.is_empty() {
            return bad("space has no dimensions".into());
        }
        for (i, d) in self.dimensions.iter().enumerate() {
            if self.dimensions[..i].iter().any(|o| o.name == d.name) {
                return bad(format!("duplicate dimension `{}`", d.name));
            }
            match &d.kind {
                DimensionKind::Continuous { lo, hi, scale } => {
                    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                        return bad(format!("`{}`: need lo < hi", d.name));
                    }
                    if *scale == Scale::Log10 && *lo <= 0.0 {
                        return bad(format!("`{}`: log scale needs lo > 0", d.name));
                    }
                }
                DimensionKind::Integer { lo, hi, scale } => {
                    if lo >= hi {
                        return bad(format!("`{}`: need lo < hi", d.name));
                    }
                    if *scale == Scale::Log10 && *lo <= 0 {
                        return bad(format!("`{}`: log scale needs lo > 0", d.name));
                    }
                }
                DimensionKind::Categorical { choices } => {
                    if choices.len() < 2 {
                        return bad(format!("`{}`: need at least two choices", d.name));
                    }
                }
            }
        }
        Ok(())
    }

    /// Length of encoded vectors.
    pub fn encoded_dim(&self) -> usize {
        self.dimensions.iter().map(Dimension::encoded_width).sum()
    }

    /// Numeric dimensions map affinely (after `log10` on log scales) onto
    /// [0, 1]; categorical dimensions become one-hot blocks.
    pub fn encode(&self, a: &Assignment) -> Result<Vec<f64>, BayesOptError> {
        if a.0.len() != self.dimensions.len() {
            return Err(BayesOptError::OutOfRange(format!(
                "assignment has {} values, space has {} dimensions",
                a.0.len(),
                self.dimensions.len()
            )));
        }
        let mut out = Vec::with_capacity(self.encoded_dim());
        for (dim, (name, value)) in self.dimensions.iter().zip(&a.0) {
            let oob = || BayesOptError::OutOfRange(format!("`{name}` = {value}"));
            if *name != dim.name {
                return Err(BayesOptError::OutOfRange(format!("expected `{}`, got `{name}`", dim.name)));
            }
            match (&dim.kind, value) {
                (DimensionKind::Continuous { lo, hi, scale }, v) => {
                    let x = v.as_f64().ok_or_else(oob)?;
                    if !(x >= *lo && x <= *hi) {
                        return Err(oob());
                    }
                    out.push(to_unit(x, *lo, *hi, *scale));
                }
                (DimensionKind::Integer { lo, hi, scale }, ParamValue::Int(x)) => {
                    if x < lo || x > hi {
                        return Err(oob());
                    }
                    out.push(to_unit(*x as f64, *lo as f64, *hi as f64, *scale));
                }
                (DimensionKind::Categorical { choices }, ParamValue::Choice(c)) => {
                    let k = choices.iter().position(|x| x == c).ok_or_else(oob)?;
                    out.extend((0..choices.len()).map(|i| if i == k { 1.0 } else { 0.0 }));
                }
                _ => return Err(oob()),
            }
        }
        Ok(out)
    }

    /// Inverse of [`encode`](Self::encode): integers round, categorical
    /// blocks take their argmax (lowest index on ties). Inputs are clamped
    /// to [0, 1].
    pub fn decode(&self, x: &[f64]) -> Assignment {
        let mut at = 0;
        let values = self
            .dimensions
            .iter()
            .map(|dim| {
                let v = match &dim.kind {
                    DimensionKind::Continuous { lo, hi, scale } => ParamValue::Real(from_unit(x[at], *lo, *hi, *scale)),
                    DimensionKind::Integer { lo, hi, scale } => {
                        let raw = from_unit(x[at], *lo as f64, *hi as f64, *scale);
                        ParamValue::Int((raw.round() as i64).clamp(*lo, *hi))
                    }
                    DimensionKind::Categorical { choices } => {
                        let block = &x[at..at + choices.len()];
                        let mut best = 0;
                        for (i, &v) in block.iter().enumerate() {
                            if v > block[best] {
                                best = i;
                            }
                        }
                        ParamValue::Choice(choices[best].clone())
                    }
                };
                at += dim.encoded_width();
                (dim.name.clone(), v)
            })
            .collect();
        Assignment(values)
    }

    /// Maps one uniform coordinate per dimension to an assignment; used for
    /// Latin hypercube and random designs. Categorical dimensions pick
    /// `floor(u * k)`.
    pub fn from_unit_coords(&self, u: &[f64]) -> Assignment {
        let values = self
            .dimensions
            .iter()
            .zip(u)
            .map(|(dim, &ui)| {
                let v = match &dim.kind {
                    DimensionKind::Continuous { lo, hi, scale } => ParamValue::Real(from_unit(ui, *lo, *hi, *scale)),
                    DimensionKind::Integer { lo, hi, scale } => {
                        let raw = from_unit(ui, *lo as f64, *hi as f64, *scale);
                        ParamValue::Int((raw.round() as i64).clamp(*lo, *hi))
                    }
                    DimensionKind::Categorical { choices } => {
                        let k = ((ui * choices.len() as f64) as usize).min(choices.len() - 1);
                        ParamValue::Choice(choices[k].clone())
                    }
                };
                (dim.name.clone(), v)
            })
            .collect();
        Assignment(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space() -> ParamSpace {
        ParamSpace::new(vec![
            Dimension::integer("iterations", 16, 1000, Scale::Linear),
            Dimension::continuous("lambda", 1e-2, 1e5, Scale::Log10),
            Dimension::categorical("boosting", &["gbdt", "goss"]),
        ])
        .unwrap()
    }

    fn assign(it: i64, lambda: f64, boosting: &str) -> Assignment {
        Assignment(vec![
            ("iterations".into(), ParamValue::Int(it)),
            ("lambda".into(), ParamValue::Real(lambda)),
            ("boosting".into(), ParamValue::Choice(boosting.into())),
        ])
    }

    #[test]
    fn log_encoding() {
        let s = space();
        assert_eq!(s.encode(&assign(16, 1e-2, "gbdt")).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        let hi = s.encode(&assign(1000, 1e5, "goss")).unwrap();
        assert_eq!(hi, vec![1.0, 1.0, 0.0, 1.0]);
        let mid = s.encode(&assign(16, 10f64.powf(1.5), "gbdt")).unwrap();
        assert!((mid[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_range() {
        let s = space();
        assert!(matches!(s.encode(&assign(15, 1.0, "gbdt")), Err(BayesOptError::OutOfRange(_))));
        assert!(s.encode(&assign(16, 1e6, "gbdt")).is_err());
        assert!(s.encode(&assign(16, 1.0, "dart")).is_err());
    }

    #[test]
    fn invalid_spaces() {
        assert!(ParamSpace::new(vec![Dimension::continuous("a", 1.0, 1.0, Scale::Linear)]).is_err());
        assert!(ParamSpace::new(vec![Dimension::continuous("a", 0.0, 1.0, Scale::Log10)]).is_err());
        assert!(ParamSpace::new(vec![Dimension::categorical("a", &["x"])]).is_err());
        assert!(ParamSpace::new(vec![]).is_err());
    }

    #[test]
    fn json_form() {
        let text = r#"{"dimensions": [
            {"name": "depth", "type": "integer", "lo": 2, "hi": 14},
            {"name": "lambda", "type": "continuous", "lo": 0.01, "hi": 100000, "scale": "log10"},
            {"name": "boosting", "type": "categorical", "choices": ["gbdt", "goss"]}
        ]}"#;
        let s: ParamSpace = serde_json::from_str(text).unwrap();
        s.validate().unwrap();
        assert_eq!(s.encoded_dim(), 4);
        let a = s.decode(&[0.5, 0.5, 0.2, 0.7]);
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"depth":8,"lambda":31.622776601683793,"boosting":"goss"}"#);
    }

    proptest! {
        #[test]
        fn decode_encode_round_trip(it in 16i64..=1000, lambda_exp in -2.0f64..5.0, goss in any::<bool>()) {
            let s = space();
            let a = assign(it, 10f64.powf(lambda_exp), if goss { "goss" } else { "gbdt" });
            let back = s.decode(&s.encode(&a).unwrap());
            prop_assert_eq!(back.get("iterations"), a.get("iterations"));
            prop_assert_eq!(back.get("boosting"), a.get("boosting"));
            let (x, y) = (back.get("lambda").unwrap().as_f64().unwrap(), a.get("lambda").unwrap().as_f64().unwrap());
            prop_assert!((x - y).abs() <= 1e-9 * y);
        }

        #[test]
        fn decoded_points_are_valid(x in prop::collection::vec(-0.5f64..1.5, 4)) {
            let s = space();
            prop_assert!(s.encode(&s.decode(&x)).is_ok());
        }
    }
}

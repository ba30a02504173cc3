//! The three framework profiles: grid axes and HPO ranges.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::bayesopt::{Assignment, Dimension, ParamSpace, ParamValue, Scale};
use crate::gbdt::{Boosting, HyperParams};
use crate::trial::ParamColumns;

/// Which axes apply: `cat` has no feature fraction, `lgbm` adds the
/// boosting type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Xgb,
    Lgbm,
    Cat,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Xgb, Profile::Lgbm, Profile::Cat];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Xgb => "xgb",
            Profile::Lgbm => "lgbm",
            Profile::Cat => "cat",
        }
    }

    fn has_feature_fraction(self) -> bool {
        self != Profile::Cat
    }

    fn has_boosting(self) -> bool {
        self == Profile::Lgbm
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = OrchestratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| OrchestratorError::UnknownProfile(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<ParamValue>,
}

/// A Cartesian grid. Index `i` decodes row-major over the axis order,
/// so the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub axes: Vec<GridAxis>,
}

fn ints(v: &[i64]) -> Vec<ParamValue> {
    v.iter().map(|&x| ParamValue::Int(x)).collect()
}

fn reals(v: &[f64]) -> Vec<ParamValue> {
    v.iter().map(|&x| ParamValue::Real(x)).collect()
}

impl Grid {
    pub fn for_profile(profile: Profile) -> Grid {
        let mut axes = vec![
            GridAxis { name: "iterations".into(), values: ints(&[40, 80, 160, 320, 480]) },
            GridAxis { name: "max_depth".into(), values: ints(&[4, 8, 10, 12]) },
            GridAxis { name: "lambda".into(), values: reals(&[0.0, 1.0, 100.0]) },
            GridAxis { name: "learning_rate".into(), values: reals(&[0.1, 0.3]) },
        ];
        if profile.has_feature_fraction() {
            axes.push(GridAxis { name: "feature_fraction".into(), values: reals(&[0.8, 1.0]) });
        }
        if profile.has_boosting() {
            axes.push(GridAxis {
                name: "boosting".into(),
                values: vec![ParamValue::Choice("gbdt".into()), ParamValue::Choice("goss".into())],
            });
        }
        Grid { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The assignment at grid index `index`.
    pub fn point(&self, index: usize) -> Assignment {
        assert!(index < self.len(), "grid index {index} out of range");
        let mut rest = index;
        let mut out = Vec::with_capacity(self.axes.len());
        for axis in self.axes.iter().rev() {
            let k = axis.values.len();
            out.push((axis.name.clone(), axis.values[rest % k].clone()));
            rest /= k;
        }
        out.reverse();
        Assignment(out)
    }

    pub fn points(&self) -> Vec<Assignment> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Every configuration of the profile's grid, applied on top of `base`.
pub fn enumerate_grid(profile: Profile, base: &HyperParams) -> Vec<HyperParams> {
    Grid::for_profile(profile)
        .points()
        .iter()
        .map(|a| apply_assignment(base, a).expect("grid values are valid"))
        .collect()
}

/// The profile's HPO search space.
pub fn hpo_space(profile: Profile) -> ParamSpace {
    let mut dims = vec![
        Dimension::integer("iterations", 16, 1000, Scale::Linear),
        Dimension::integer("max_depth", 2, 14, Scale::Linear),
        Dimension::continuous("lambda", 1e-2, 1e5, Scale::Log10),
        Dimension::continuous("learning_rate", 0.01, 1.0, Scale::Linear),
    ];
    if profile.has_feature_fraction() {
        dims.push(Dimension::continuous("feature_fraction", 0.01, 1.0, Scale::Linear));
    }
    if profile.has_boosting() {
        dims.push(Dimension::categorical("boosting", &["gbdt", "goss"]));
    }
    ParamSpace::new(dims).expect("preset space is valid")
}

/// Overrides the named fields of `base`. Unknown names and values of the
/// wrong kind are rejected.
pub fn apply_assignment(base: &HyperParams, a: &Assignment) -> Result<HyperParams, OrchestratorError> {
    let mut hp = base.clone();
    let bad = |name: &str, v: &ParamValue| OrchestratorError::InvalidAssignment(format!("{name} = {v}"));
    for (name, v) in &a.0 {
        let num = v.as_f64();
        let count = |x: Option<f64>| match x {
            Some(x) if x >= 0.0 && x.fract() == 0.0 => Ok(x as usize),
            _ => Err(bad(name, v)),
        };
        let real = |x: Option<f64>| x.ok_or_else(|| bad(name, v));
        match name.as_str() {
            "iterations" => hp.iterations = count(num)?,
            "max_depth" => hp.max_depth = count(num)?,
            "lambda" => hp.lambda = real(num)?,
            "learning_rate" => hp.learning_rate = real(num)?,
            "feature_fraction" => hp.feature_fraction = real(num)?,
            "boosting" => {
                hp.boosting = match v.as_str() {
                    Some("gbdt") => Boosting::Gbdt,
                    Some("goss") => Boosting::goss(),
                    _ => return Err(bad(name, v)),
                }
            }
            _ => return Err(OrchestratorError::InvalidAssignment(format!("unknown parameter {name}"))),
        }
    }
    hp.validate().map_err(|e| OrchestratorError::InvalidAssignment(e.to_string()))?;
    Ok(hp)
}

fn boosting_name(b: Boosting) -> &'static str {
    match b {
        Boosting::Gbdt => "gbdt",
        Boosting::Goss { .. } => "goss",
    }
}

impl ParamColumns for HyperParams {
    fn column_names(&self) -> Vec<String> {
        ["iterations", "max_depth", "lambda", "learning_rate", "feature_fraction", "boosting"]
            .map(String::from)
            .to_vec()
    }

    fn column_values(&self) -> Vec<String> {
        vec![
            self.iterations.to_string(),
            self.max_depth.to_string(),
            self.lambda.to_string(),
            self.learning_rate.to_string(),
            self.feature_fraction.to_string(),
            boosting_name(self.boosting).to_string(),
        ]
    }
}

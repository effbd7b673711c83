//! Bounded mixed continuous/integer search spaces.
//!
//! The optimizer always works on continuous positions. Integer dimensions are
//! only rounded when a position is decoded into a [`ParamVector`] for
//! evaluation, so velocities keep their meaning between iterations.

use std::collections::HashSet;
use std::fmt;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{check_len, Error, Result};
use crate::random::UnitDraw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    name: String,
    kind: DimensionKind,
    lower: f64,
    upper: f64,
}

impl Dimension {
    pub fn new(
        name: impl Into<String>,
        kind: DimensionKind,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidConfig(
                "dimension name must be non-empty".into(),
            ));
        }
        if !lower.is_finite() || !upper.is_finite() || lower >= upper {
            return Err(Error::InvalidConfig(format!(
                "dimension `{name}` needs finite bounds with lower < upper, got [{lower}, {upper}]"
            )));
        }
        if kind == DimensionKind::Integer && (lower.fract() != 0.0 || upper.fract() != 0.0) {
            return Err(Error::InvalidConfig(format!(
                "integer dimension `{name}` needs whole-number bounds, got [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            name,
            kind,
            lower,
            upper,
        })
    }

    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        Self::new(name, DimensionKind::Continuous, lower, upper)
    }

    pub fn integer(name: impl Into<String>, lower: i64, upper: i64) -> Result<Self> {
        Self::new(name, DimensionKind::Integer, lower as f64, upper as f64)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> DimensionKind {
        self.kind
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn clamp(&self, x: f64) -> f64 {
        // NaN saturates to the lower bound so a diverged coordinate cannot leak out.
        if x.is_nan() {
            self.lower
        } else {
            x.clamp(self.lower, self.upper)
        }
    }

    fn decode(&self, x: f64) -> ParamValue {
        let x = self.clamp(x);
        match self.kind {
            DimensionKind::Continuous => ParamValue::Real(x),
            // f64::round is half-away-from-zero; bounds are whole so the clamp is exact.
            DimensionKind::Integer => ParamValue::Int(self.clamp(x.round()) as i64),
        }
    }
}

/// An ordered, non-empty list of uniquely named dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpace {
    dims: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidConfig(
                "search space needs at least one dimension".into(),
            ));
        }
        let mut seen = HashSet::new();
        for d in &dims {
            if !seen.insert(d.name.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate dimension name `{}`",
                    d.name
                )));
            }
        }
        Ok(Self { dims })
    }

    /// `n` continuous dimensions named `x0..x{n-1}` sharing one box.
    pub fn uniform_box(n: usize, lower: f64, upper: f64) -> Result<Self> {
        let dims = (0..n)
            .map(|i| Dimension::continuous(format!("x{i}"), lower, upper))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    /// Batch size in [1, 64], dropout rate in [0.1, 0.9] and hidden-layer
    /// width in [50, 500]: the three-parameter classifier-head space.
    pub fn classifier_head() -> Self {
        Self::classifier_head_with_neurons(50, 500).expect("static bounds are valid")
    }

    /// Same as [`SearchSpace::classifier_head`] with a configurable neuron range.
    pub fn classifier_head_with_neurons(lower: i64, upper: i64) -> Result<Self> {
        Self::new(vec![
            Dimension::integer("batch_size", 1, 64)?,
            Dimension::continuous("dropout_rate", 0.1, 0.9)?,
            Dimension::integer("neurons", lower, upper)?,
        ])
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dimension(&self, name: &str) -> Option<&Dimension> {
        self.dims.iter().find(|d| d.name == name)
    }

    /// Draws one position uniformly inside the box, one draw per dimension in order.
    pub fn sample_uniform<R: UnitDraw + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| d.clamp(d.lower + rng.unit() * d.width()))
            .collect()
    }

    pub fn clamp(&self, position: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), position.len())?;
        Ok(self
            .dims
            .iter()
            .zip(position)
            .map(|(d, &x)| d.clamp(x))
            .collect())
    }

    pub(crate) fn clamp_in_place(&self, position: &mut [f64]) {
        for (d, x) in self.dims.iter().zip(position.iter_mut()) {
            *x = d.clamp(*x);
        }
    }

    /// The unit cube of the same dimension.
    pub fn unit_cube(&self) -> Self {
        let dims = self
            .dims
            .iter()
            .map(|d| Dimension {
                name: d.name.clone(),
                kind: DimensionKind::Continuous,
                lower: 0.0,
                upper: 1.0,
            })
            .collect();
        Self { dims }
    }

    /// Maps unit-cube coordinates onto the box.
    pub fn from_unit(&self, unit: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), unit.len())?;
        Ok(self
            .dims
            .iter()
            .zip(unit)
            .map(|(d, &u)| d.clamp(d.lower + u * d.width()))
            .collect())
    }

    /// Maps a position in the box onto unit-cube coordinates.
    pub fn to_unit(&self, position: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), position.len())?;
        Ok(self
            .dims
            .iter()
            .zip(position)
            .map(|(d, &x)| (d.clamp(x) - d.lower) / d.width())
            .collect())
    }

    pub fn contains(&self, position: &[f64]) -> bool {
        position.len() == self.len()
            && self
                .dims
                .iter()
                .zip(position)
                .all(|(d, &x)| x >= d.lower && x <= d.upper)
    }

    /// Maps a position onto named parameter values. Out-of-range coordinates
    /// saturate; integer dimensions round half away from zero.
    pub fn decode(&self, position: &[f64]) -> Result<ParamVector> {
        check_len(self.len(), position.len())?;
        let values = self
            .dims
            .iter()
            .zip(position)
            .map(|(d, &x)| (d.name.clone(), d.decode(x)))
            .collect();
        Ok(ParamVector { values })
    }

    /// Inverse of [`SearchSpace::decode`] on its image.
    pub fn encode(&self, params: &ParamVector) -> Result<Vec<f64>> {
        check_len(self.len(), params.len())?;
        self.dims
            .iter()
            .zip(&params.values)
            .map(|(d, (name, v))| {
                if *name != d.name {
                    return Err(Error::InvalidInput(format!(
                        "expected parameter `{}`, found `{name}`",
                        d.name
                    )));
                }
                Ok(v.as_f64())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

impl ParamValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ParamValue::Int(v) => v as f64,
            ParamValue::Real(v) => v,
        }
    }

    /// Cache key: exact for integers, bit pattern for reals.
    pub(crate) fn key(self) -> (bool, u64) {
        match self {
            ParamValue::Int(v) => (true, v as u64),
            ParamValue::Real(v) => (false, v.to_bits()),
        }
    }
}

impl Serialize for ParamValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            ParamValue::Int(v) => s.serialize_i64(v),
            ParamValue::Real(v) => s.serialize_f64(v),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
        }
    }
}

/// A decoded assignment, one named value per dimension in space order.
///
/// Serializes as a JSON object, e.g. `{"batch_size": 8, "dropout_rate": 0.1, "neurons": 110}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector {
    values: Vec<(String, ParamValue)>,
}

impl ParamVector {
    pub fn new(values: Vec<(String, ParamValue)>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ParamValue)> {
        self.values.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn get(&self, name: &str) -> Option<ParamValue> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values.iter().map(|(_, v)| v.as_f64()).collect()
    }

    pub(crate) fn cache_key(&self) -> Vec<(bool, u64)> {
        self.values.iter().map(|(_, v)| v.key()).collect()
    }
}

impl Serialize for ParamVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.values.len()))?;
        for (name, value) in &self.values {
            map.serialize_entry(name, value)?;
        }
        map.end()
    }
}

impl fmt::Display for ParamVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (n, v)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}: {v}")?;
        }
        f.write_str("}")
    }
}

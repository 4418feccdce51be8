//! Edge and vertex functions.

use std::collections::BTreeMap;

use crate::error::{MmsError, Result};
use crate::space::Space;

/// Nonnegative function on edges (a discrete density ρ).
#[derive(Clone, Debug, PartialEq)]
pub struct Density(pub Vec<f64>);

impl Density {
    pub fn zeros(space: &Space) -> Self {
        Density(vec![0.0; space.edge_count()])
    }

    pub fn constant(space: &Space, value: f64) -> Self {
        Density(vec![value; space.edge_count()])
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        for (e, &x) in values.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(MmsError::InvalidParams(format!(
                    "density value at edge {e} is {x}; must be finite and >= 0"
                )));
            }
        }
        Ok(Density(values))
    }

    pub fn value(&self, e: usize) -> f64 {
        self.0[e]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// ∫ ρ dμ over the edge measure, optionally weighted.
    pub fn mass(&self, space: &Space, weight: Option<&[f64]>) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(e, &x)| {
                let w = weight.map_or(1.0, |w| w[e]);
                x * w * space.edge(e).measure
            })
            .sum()
    }

    /// Pointwise maximum.
    pub fn sup_with(&self, other: &Density) -> Density {
        Density(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Density) -> Density {
        Density(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Density {
        Density(self.0.iter().map(|&a| a * s).collect())
    }
}

/// Real-valued function on vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn zeros(space: &Space) -> Self {
        ScalarField(vec![0.0; space.vertex_count()])
    }

    pub fn constant(space: &Space, value: f64) -> Self {
        ScalarField(vec![value; space.vertex_count()])
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        for (v, &x) in values.iter().enumerate() {
            if !x.is_finite() {
                return Err(MmsError::InvalidParams(format!(
                    "field value at vertex {v} is {x}; must be finite"
                )));
            }
        }
        Ok(ScalarField(values))
    }

    pub fn value(&self, v: usize) -> f64 {
        self.0[v]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Average over a vertex set with respect to the vertex measure.
    pub fn average(&self, space: &Space, members: &[usize]) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for &v in members {
            num += self.0[v] * space.vertex_measure(v);
            den += space.vertex_measure(v);
        }
        if den > 0.0 {
            Some(num / den)
        } else {
            None
        }
    }

    /// One smoothing pass: average over the closed neighborhood, unweighted.
    pub fn smoothed_once(&self, space: &Space) -> ScalarField {
        let mut out = vec![0.0; self.0.len()];
        for v in 0..self.0.len() {
            let mut sum = self.0[v];
            let mut count = 1.0;
            for &(_, w) in space.adjacency(v) {
                sum += self.0[w];
                count += 1.0;
            }
            out[v] = sum / count;
        }
        ScalarField(out)
    }
}

/// Field file format: a flat `{vertexId: value}` JSON object.
pub fn field_from_json(space: &Space, text: &str) -> Result<ScalarField> {
    let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
    let mut values = vec![0.0; space.vertex_count()];
    let mut seen = vec![false; space.vertex_count()];
    for (id, x) in &map {
        let v = space.vertex_index(id)?;
        if !x.is_finite() {
            return Err(MmsError::InvalidParams(format!(
                "field value at `{id}` is {x}"
            )));
        }
        values[v] = *x;
        seen[v] = true;
    }
    if let Some(v) = (0..space.vertex_count()).find(|&v| !seen[v]) {
        return Err(MmsError::InvalidParams(format!(
            "field file is missing vertex `{}`",
            space.id(v)
        )));
    }
    ScalarField::from_values(values)
}

pub fn field_to_json(space: &Space, field: &ScalarField) -> String {
    let map: BTreeMap<&str, f64> = (0..space.vertex_count())
        .map(|v| (space.id(v), field.0[v]))
        .collect();
    serde_json::to_string_pretty(&map).expect("field serialization")
}

/// Density file format: `{edgeKey: value}` with the keys of [`edge_key`];
/// missing edges default to zero.
pub fn density_from_json(space: &Space, text: &str) -> Result<Density> {
    let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
    let index: BTreeMap<String, usize> = (0..space.edge_count())
        .map(|e| (edge_key(space, e), e))
        .collect();
    let mut values = vec![0.0; space.edge_count()];
    for (key, x) in &map {
        let e = index
            .get(key)
            .ok_or_else(|| MmsError::InvalidParams(format!("unknown edge key `{key}`")))?;
        values[*e] = *x;
    }
    Density::from_values(values)
}

pub fn density_to_json(space: &Space, density: &Density) -> String {
    let map: BTreeMap<String, f64> = (0..space.edge_count())
        .filter(|&e| density.value(e) != 0.0)
        .map(|e| (edge_key(space, e), density.value(e)))
        .collect();
    serde_json::to_string_pretty(&map).expect("density serialization")
}

/// Stable external key for an edge: `u~v` plus a positional suffix for
/// parallel edges.
pub fn edge_key(space: &Space, e: usize) -> String {
    let ed = space.edge(e);
    let (a, b) = if space.id(ed.u) <= space.id(ed.v) {
        (ed.u, ed.v)
    } else {
        (ed.v, ed.u)
    };
    let dup = space.edges()[..e]
        .iter()
        .filter(|o| (o.u == ed.u && o.v == ed.v) || (o.u == ed.v && o.v == ed.u))
        .count();
    if dup == 0 {
        format!("{}~{}", space.id(a), space.id(b))
    } else {
        format!("{}~{}~{}", space.id(a), space.id(b), dup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn density_rejects_negative_and_nan() {
        assert!(Density::from_values(vec![0.0, 1.0]).is_ok());
        assert!(Density::from_values(vec![-0.1]).is_err());
        assert!(Density::from_values(vec![f64::NAN]).is_err());
    }

    #[test]
    fn field_file_round_trip() {
        let s = gen::path(3).unwrap();
        let u = ScalarField(vec![0.0, 0.5, 1.0]);
        let text = field_to_json(&s, &u);
        let u2 = field_from_json(&s, &text).unwrap();
        assert_eq!(u, u2);
    }

    #[test]
    fn field_file_missing_vertex_rejected() {
        let s = gen::path(3).unwrap();
        assert!(field_from_json(&s, r#"{"v0": 1.0}"#).is_err());
    }

    #[test]
    fn edge_keys_distinguish_parallel_edges() {
        let s = gen::parallel_edges(2).unwrap();
        assert_eq!(edge_key(&s, 0), "x~y");
        assert_eq!(edge_key(&s, 1), "x~y~1");
    }
}

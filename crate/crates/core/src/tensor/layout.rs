use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labeled tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered, labeled tensor factors. The first factor is the most significant
/// digit of the composite basis index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Factor>", into = "Vec<Factor>")]
pub struct SystemLayout {
    factors: Vec<Factor>,
}

impl TryFrom<Vec<Factor>> for SystemLayout {
    type Error = Error;

    fn try_from(factors: Vec<Factor>) -> Result<Self> {
        Self::from_factors(factors)
    }
}

impl From<SystemLayout> for Vec<Factor> {
    fn from(layout: SystemLayout) -> Self {
        layout.factors
    }
}

impl SystemLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        Self::from_factors(
            factors
                .into_iter()
                .map(|(label, dim)| Factor {
                    label: label.into(),
                    dim,
                })
                .collect(),
        )
    }

    pub fn from_factors(factors: Vec<Factor>) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            if f.dim == 0 {
                return Err(Error::InvalidDimension(f.label.clone(), f.dim));
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::DuplicateLabel(f.label.clone()));
            }
        }
        Ok(Self { factors })
    }

    /// The layout with no factors (total dimension 1).
    pub fn scalar() -> Self {
        Self::default()
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label.into(), dim)])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.label.clone()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|p| self.factors[p].dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Product of the dimensions of the named factors.
    pub fn dim_of_set<S: AsRef<str>>(&self, labels: &[S]) -> Result<usize> {
        labels.iter().map(|l| self.dim_of(l.as_ref())).product()
    }

    /// Positions of `labels`, failing on any unknown or repeated label.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self
                .position(l.as_ref())
                .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))?;
            if out.contains(&p) {
                return Err(Error::DuplicateLabel(l.as_ref().to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Concatenation; labels must be disjoint.
    pub fn concat(&self, other: &SystemLayout) -> Result<SystemLayout> {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::from_factors(factors)
    }

    /// The named factors in this layout's order.
    pub fn restrict<S: AsRef<str>>(&self, keep: &[S]) -> Result<SystemLayout> {
        let mut positions = self.positions(keep)?;
        positions.sort_unstable();
        Ok(SystemLayout {
            factors: positions
                .into_iter()
                .map(|p| self.factors[p].clone())
                .collect(),
        })
    }

    /// Factors not named in `drop`, in this layout's order.
    pub fn without<S: AsRef<str>>(&self, drop: &[S]) -> Result<SystemLayout> {
        let positions = self.positions(drop)?;
        Ok(SystemLayout {
            factors: self
                .factors
                .iter()
                .enumerate()
                .filter(|(i, _)| !positions.contains(i))
                .map(|(_, f)| f.clone())
                .collect(),
        })
    }

    /// Same dims, new labels.
    pub fn relabeled<S: AsRef<str>>(&self, labels: &[S]) -> Result<SystemLayout> {
        if labels.len() != self.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} labels for {} factors",
                labels.len(),
                self.len()
            )));
        }
        Self::new(
            labels
                .iter()
                .zip(&self.factors)
                .map(|(l, f)| (l.as_ref().to_string(), f.dim)),
        )
    }

    /// Mixed-radix digits of a composite basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % f.dim;
            index /= f.dim;
        }
        out
    }

    /// Inverse of [`SystemLayout::digits`].
    pub fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&d, f)| acc * f.dim + d)
    }
}

impl std::fmt::Display for SystemLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| format!("{}[{}]", x.label, x.dim))
            .collect();
        write!(f, "{}", parts.join("⊗"))
    }
}

/// Check that two label sets share nothing.
pub(crate) fn ensure_disjoint<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> Result<()> {
    for x in a {
        if b.iter().any(|y| y.as_ref() == x.as_ref()) {
            return Err(Error::OverlappingLabels(x.as_ref().to_string()));
        }
    }
    Ok(())
}

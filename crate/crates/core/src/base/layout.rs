use std::ops::Range;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered named blocks of one flat state vector.
///
/// Every constraint system in the crate works on a single flat `q`; the layout
/// records which contiguous range holds the dynamical variables, the rate
/// parameters, the Hill coefficients and any auxiliary unknowns (eigenvector
/// parts, frequency, period, mesh points).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLayout {
    blocks: Vec<(String, usize)>,
}

impl VariableLayout {
    pub fn new<S: Into<String>>(blocks: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let blocks: Vec<(String, usize)> =
            blocks.into_iter().map(|(n, l)| (n.into(), l)).collect();
        for (i, (name, len)) in blocks.iter().enumerate() {
            if *len == 0 {
                return Err(Error::InvalidLayout(format!("block `{name}` has zero length")));
            }
            if blocks[..i].iter().any(|(other, _)| other == name) {
                return Err(Error::InvalidLayout(format!("duplicate block `{name}`")));
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[(String, usize)] {
        &self.blocks
    }

    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|(_, l)| l).sum()
    }

    pub fn contains(&self, block: &str) -> bool {
        self.blocks.iter().any(|(n, _)| n == block)
    }

    pub fn range(&self, block: &str) -> Result<Range<usize>> {
        let mut start = 0;
        for (name, len) in &self.blocks {
            if name == block {
                return Ok(start..start + len);
            }
            start += len;
        }
        Err(Error::UnknownBlock(block.to_string()))
    }

    /// Column names: `block` for length-one blocks, `block_i` otherwise.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.total_len());
        for (name, len) in &self.blocks {
            if *len == 1 {
                names.push(name.clone());
            } else {
                names.extend((0..*len).map(|i| format!("{name}_{i}")));
            }
        }
        names
    }

    /// Concatenate named blocks into one flat vector, in layout order.
    pub fn assemble(&self, parts: &[(&str, &[f64])]) -> Result<DVector<f64>> {
        let mut q = DVector::zeros(self.total_len());
        for (name, len) in &self.blocks {
            let part = parts
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::UnknownBlock(name.clone()))?
                .1;
            if part.len() != *len {
                return Err(Error::InvalidLayout(format!(
                    "block `{name}` expects {len} values, got {}",
                    part.len()
                )));
            }
            let r = self.range(name)?;
            q.as_mut_slice()[r].copy_from_slice(part);
        }
        Ok(q)
    }
}

/// Position/momentum pair on (or near) a constraint manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    layout: Arc<VariableLayout>,
}

impl PhasePoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>, layout: Arc<VariableLayout>) -> Result<Self> {
        let n = layout.total_len();
        if q.len() != n || p.len() != n {
            return Err(Error::InvalidLayout(format!(
                "layout has length {n} but q has {} and p has {}",
                q.len(),
                p.len()
            )));
        }
        if q.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidLayout("non-finite phase-point entry".into()));
        }
        Ok(Self { q, p, layout })
    }

    /// Point at rest (zero momentum).
    pub fn at_rest(q: DVector<f64>, layout: Arc<VariableLayout>) -> Result<Self> {
        let p = DVector::zeros(q.len());
        Self::new(q, p, layout)
    }

    pub fn layout(&self) -> &Arc<VariableLayout> {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn slice(&self, block: &str) -> Result<&[f64]> {
        let r = self.layout.range(block)?;
        Ok(&self.q.as_slice()[r])
    }

    pub fn slice_mut(&mut self, block: &str) -> Result<&mut [f64]> {
        let r = self.layout.range(block)?;
        Ok(&mut self.q.as_mut_slice()[r])
    }

    pub fn momentum_slice(&self, block: &str) -> Result<&[f64]> {
        let r = self.layout.range(block)?;
        Ok(&self.p.as_slice()[r])
    }
}

/// Diagonal mass matrix, stored through its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MassSpec {
    inv: DVector<f64>,
    inv_sqrt: DVector<f64>,
    sqrt: DVector<f64>,
}

impl MassSpec {
    pub fn from_inverse_diagonal(inv: DVector<f64>) -> Result<Self> {
        if inv.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Config("inverse-mass entries must be positive".into()));
        }
        let inv_sqrt = inv.map(f64::sqrt);
        let sqrt = inv_sqrt.map(|v| 1.0 / v);
        Ok(Self { inv, inv_sqrt, sqrt })
    }

    pub fn identity(n: usize) -> Self {
        let ones = DVector::from_element(n, 1.0);
        Self { inv: ones.clone(), inv_sqrt: ones.clone(), sqrt: ones }
    }

    pub fn dim(&self) -> usize {
        self.inv.len()
    }

    /// Diagonal of M⁻¹.
    pub fn inverse(&self) -> &DVector<f64> {
        &self.inv
    }

    /// Diagonal of M^{-1/2}.
    pub fn inverse_sqrt(&self) -> &DVector<f64> {
        &self.inv_sqrt
    }

    /// Diagonal of M^{1/2}.
    pub fn sqrt(&self) -> &DVector<f64> {
        &self.sqrt
    }

    pub fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        v.component_mul(&self.inv)
    }

    pub fn apply_inverse_sqrt(&self, v: &DVector<f64>) -> DVector<f64> {
        v.component_mul(&self.inv_sqrt)
    }

    pub fn apply_sqrt(&self, v: &DVector<f64>) -> DVector<f64> {
        v.component_mul(&self.sqrt)
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        v.component_div(&self.inv)
    }

    /// ½ pᵀ M⁻¹ p
    pub fn kinetic_energy(&self, p: &DVector<f64>) -> f64 {
        0.5 * p.iter().zip(self.inv.iter()).map(|(pi, mi)| pi * pi * mi).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> Arc<VariableLayout> {
        Arc::new(VariableLayout::new([("y", 3), ("k", 5)]).unwrap())
    }

    #[test]
    fn slices_blocks_by_name() {
        let q = DVector::from_iterator(8, (1..=8).map(f64::from));
        let mut pt = PhasePoint::at_rest(q, layout()).unwrap();
        assert_eq!(pt.slice("k").unwrap(), &[4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(pt.slice("y").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(pt.slice("tau"), Err(Error::UnknownBlock("tau".into())));
        pt.slice_mut("y").unwrap()[1] = -2.0;
        assert_eq!(pt.q[1], -2.0);
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(VariableLayout::new([("y", 3), ("y", 1)]).is_err());
        assert!(VariableLayout::new([("y", 0)]).is_err());
        let q = DVector::zeros(7);
        assert!(PhasePoint::at_rest(q, layout()).is_err());
    }

    #[test]
    fn identity_mass_roots_are_exact() {
        let m = MassSpec::identity(4);
        assert!(m.sqrt().iter().all(|&v| v == 1.0));
        assert!(m.inverse_sqrt().iter().all(|&v| v == 1.0));
        let m = MassSpec::from_inverse_diagonal(DVector::from_element(3, 1.0)).unwrap();
        assert!(m.sqrt().iter().chain(m.inverse_sqrt().iter()).all(|&v| v == 1.0));
        assert!(MassSpec::from_inverse_diagonal(DVector::from_vec(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn column_names_follow_blocks() {
        let l = VariableLayout::new([("y", 2), ("tau", 1)]).unwrap();
        assert_eq!(l.column_names(), vec!["y_0", "y_1", "tau"]);
    }

    proptest::proptest! {
        #[test]
        fn assemble_then_slice_round_trips(
            a in proptest::collection::vec(-1e3f64..1e3, 1..6),
            b in proptest::collection::vec(-1e3f64..1e3, 1..6),
            c in proptest::collection::vec(-1e3f64..1e3, 1..6),
        ) {
            let l = Arc::new(VariableLayout::new([("a", a.len()), ("b", b.len()), ("c", c.len())]).unwrap());
            let q = l.assemble(&[("c", &c), ("a", &a), ("b", &b)]).unwrap();
            let pt = PhasePoint::at_rest(q, l).unwrap();
            proptest::prop_assert_eq!(pt.slice("a").unwrap(), a.as_slice());
            proptest::prop_assert_eq!(pt.slice("b").unwrap(), b.as_slice());
            proptest::prop_assert_eq!(pt.slice("c").unwrap(), c.as_slice());
        }
    }
}

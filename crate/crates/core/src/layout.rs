//! Mixed-radix indexing for the lexicographic table layout (first space slowest)
//! used by every table in the crate.

use crate::error::{Result, TeamError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedRadix {
    dims: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl MixedRadix {
    /// Panics if the product overflows `usize`; use [`MixedRadix::checked`] on
    /// untrusted shapes.
    pub fn new(dims: &[usize]) -> Self {
        Self::checked(dims, usize::MAX as u128).expect("table size overflows usize")
    }

    pub fn checked(dims: &[usize], cap: u128) -> Result<Self> {
        let required = product_u128(dims);
        if required > cap || required > usize::MAX as u128 {
            return Err(TeamError::CapExceeded {
                what: "table entries",
                required,
                cap,
            });
        }
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Ok(Self {
            dims: dims.to_vec(),
            strides,
            size: required as usize,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn digits_into(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &stride) in out.iter_mut().zip(&self.strides) {
            *slot = index / stride;
            index %= stride;
        }
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        self.digits_into(index, &mut out);
        out
    }
}

pub fn product_u128(dims: &[usize]) -> u128 {
    dims.iter()
        .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128))
        .unwrap_or(u128::MAX)
}

/// `base^exp` saturating at `u128::MAX`.
pub fn pow_u128(base: usize, exp: usize) -> u128 {
    let mut acc = 1u128;
    for _ in 0..exp {
        acc = match acc.checked_mul(base as u128) {
            Some(v) => v,
            None => return u128::MAX,
        };
        if acc == 0 {
            break;
        }
    }
    acc
}

//! Exact design-space cardinality.
//!
//! The counting model: pattern-free connection types (CB, CB-O) contribute
//! one configuration each; pattern-bearing types (SB, Hybrid, Hybrid-O)
//! contribute `percentage levels x |index range|^8` each, the 8 being the
//! two 4-integer patterns. With all five types, indices -3..3 and
//! percentages 1..100 this gives 2 + 3 x 100 x 7^8 = 1,729,440,302.

use num_bigint::BigUint;
use std::collections::BTreeSet;

use super::ConnectionType;

/// Bounds of the enumerated space: which connection types are allowed, the
/// inclusive pattern index range, and the inclusive integer percentage range.
#[derive(Debug, Clone)]
pub struct DesignSpaceBounds {
    pub types: BTreeSet<ConnectionType>,
    pub index_min: i64,
    pub index_max: i64,
    pub pct_min: u32,
    pub pct_max: u32,
}

impl DesignSpaceBounds {
    /// The published headline bounds: all five types, indices -3..3,
    /// percentages 1..100.
    pub fn headline() -> Self {
        DesignSpaceBounds {
            types: [
                ConnectionType::Cb,
                ConnectionType::Cbo,
                ConnectionType::Sb,
                ConnectionType::Hybrid,
                ConnectionType::HybridO,
            ]
            .into_iter()
            .collect(),
            index_min: -3,
            index_max: 3,
            pct_min: 1,
            pct_max: 100,
        }
    }
}

/// Exact configuration count under the documented model. Overflow-safe for
/// counts beyond 2^64. Empty bounds give 0.
pub fn enumerate_design_space(bounds: &DesignSpaceBounds) -> BigUint {
    let mut total = BigUint::from(0u32);
    if bounds.index_max < bounds.index_min || bounds.pct_max < bounds.pct_min {
        return total;
    }
    let range = BigUint::from((bounds.index_max - bounds.index_min + 1) as u64);
    let levels = BigUint::from((bounds.pct_max - bounds.pct_min + 1) as u64);
    let per_pattern_type = &levels * range.pow(8);
    for ty in &bounds.types {
        match ty {
            ConnectionType::Cb | ConnectionType::Cbo => total += 1u32,
            ConnectionType::Sb | ConnectionType::Hybrid | ConnectionType::HybridO => {
                total += &per_pattern_type;
            }
            // The 2D baseline and user-defined rules are outside the
            // countable five.
            ConnectionType::None2D | ConnectionType::Custom => {}
        }
    }
    total
}

//! Index sets of integers and their combinatorics: thickness, multiplicative
//! avoidance, dissociated sums and equidistribution.

mod discrepancy;
mod dissociated;
mod index_set;
mod thick;

pub use discrepancy::{equidistribution_discrepancy, Discrepancy, IrrationalApprox};
pub use dissociated::{
    rajchman_dissociated_property_check, riesz_support, DissociatedSequence, ContinuityWindowCheck,
};
pub use index_set::{IndexSet, Window};
pub use thick::{
    doubling_free_check, grid_margin, is_thick_in_window, r_thick_witness, r_thick_witness_from,
    ThickWitness,
};

use std::io::{self, Write};

/// Writes one integer per line.
pub fn write_csv<W: Write>(mut out: W, values: &[i64]) -> io::Result<()> {
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

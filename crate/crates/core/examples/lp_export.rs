//! Writes the reference model as a CPLEX LP file for an external solver.
//!
//! cargo run --example lp_export -- model.lp

use hybrid_bid::model::lp_format::write_lp_file;
use hybrid_bid::prelude::*;

fn main() -> Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "reference.lp".into());
    let instance = hybrid_bid::reference::instance().with_gamma(12)?;
    let formulation = Formulation::build(&instance)?;
    let model = &formulation.model;
    write_lp_file(model, &path)?;
    println!(
        "{path}: {} variables ({} binary), {} rows",
        model.num_vars(),
        model.num_binaries(),
        model.num_constraints()
    );
    Ok(())
}

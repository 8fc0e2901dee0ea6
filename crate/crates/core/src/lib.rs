//! Day-ahead bidding for a hybrid PV, battery and electrolyzer facility
//! settled under single imbalance pricing.
//!
//! PV uncertainty enters through weighted realisation scenarios; the
//! direction in which the whole system deviates (which sets the imbalance
//! price) is handled by a robust subproblem with an hourly budget `gamma`.
//! The resulting two-stage problem is a MILP solved through a pluggable
//! [`model::MilpBackend`].
//!
//! ```no_run
//! use hybrid_bid::prelude::*;
//!
//! let instance = load_instance("instance.json")?.with_gamma(6)?;
//! let solved = solve_instance(&instance, &HighsBackend::new(), &SolveOptions::default())?;
//! println!("expected profit: {:.2} EUR", solved.solution.objective);
//! # Ok::<(), hybrid_bid::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod evalreport;
pub mod facility;
pub mod formulation;
pub mod instance;
pub mod model;
pub mod oracle;
pub mod reference;
pub mod robust;
pub mod solution;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::evalreport::{
        export_ablation, export_report, gamma_sweep, realized_imbalance_revenue,
        technology_ablation, worst_case_directions, AblationReport, RowStatus, SweepOptions,
        SweepReport, SweepRow, Technology,
    };
    pub use crate::formulation::{solve_instance, Formulation, FormulationOptions, Solved};
    pub use crate::instance::{
        load_direction_sequences, load_instance, Direction, DirectionSequence, Instance,
    };
    pub use crate::model::{HighsBackend, LpFileBackend, MilpBackend, SolveOptions, SolveStatus};
    pub use crate::oracle::{
        enumerate_tiny, lipschitz_constant, recompute_profit, worst_case_profit, ProfitBreakdown,
    };
    pub use crate::robust::{inner_worst_case, verify_duality};
    pub use crate::solution::Solution;
}

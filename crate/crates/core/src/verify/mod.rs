//! Monte Carlo and exact-oracle checks of the concentration and tail claims
//! behind the sparse embedding.
//!
//! Every probability is estimated with a 95% Wilson interval. Upper bounds
//! are compared against the *lower* end of that interval, so a bound only
//! fails when the data rule it out; lower bounds are compared against the
//! exact value when one is computable.

mod bounds;
mod checks;
mod montecarlo;
mod report;
mod stats;
pub mod suite;
mod witness;
mod zstats;

use serde::{Deserialize, Serialize};

pub use bounds::{
    check_bound, lemma_bound, sum_zsq_alt_k, sum_zsq_min_t, verdict_for, BoundCheck, BoundSpec,
    Lemma, LemmaBound, Params, TailBound, ZShape,
};
pub use checks::{
    chi_square_mgf_check, chisq_lower_tail_check, elementary_ineq_check,
    gaussian_square_tail_check, reverse_chernoff_check, sign_event_rate, ChiSquareCheck,
    ExactCheck, MgfCheck,
};
pub use montecarlo::{
    coord_exceedance_bound, coord_exceedance_rate, coord_threshold, estimate_failure_rate,
    ExceedanceEstimate, VectorSource,
};
pub use report::{read_report, write_atomically, write_report, ExperimentRecord};
pub use stats::{
    binomial_tail_exact, chi_square_cdf, chi_square_sf, gaussian_square_sf, mean_and_variance,
    standard_errors_from, wilson_interval, NeumaierSum, TailEstimate, BINOMIAL_MAX_TRIALS, Z95,
};
pub use witness::{
    lower_bound_witness, total_mass_statistic, TotalMassReport, WitnessReport, WitnessTrial,
};
pub use zstats::{estimate_event, simulate_z_statistics, EventEstimate, ZEvent, ZSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    /// The bound is at least 1 and says nothing.
    Vacuous,
    /// Descriptive measurement with no pass/fail claim attached.
    Info,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Vacuous => "VACUOUS",
            Verdict::Info => "INFO",
        }
    }
}

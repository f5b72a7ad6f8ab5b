//! Explicit instances: the admissible direct-sum Lip-norm, classical and
//! diameter bridges, fuzzy tori and a brute-force Gromov–Hausdorff oracle.

mod admissible;
mod classical;
mod diameter;
mod fuzzy_torus;

pub use admissible::{admissible_sum_lipnorm, quotient_lipnorm, summand_hausdorff, verify_admissibility, QUOTIENT_TOL};
pub use classical::{classical_bridge, gh_bruteforce, ClassicalBridge, CouplingMetric, GhResult, GH_LIMIT, SEAM_GUARD};
pub use diameter::diameter_bridge;
pub use fuzzy_torus::{fuzzy_torus, FuzzyTorus, LengthChoice};

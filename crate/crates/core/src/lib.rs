pub mod error;
pub mod job;
pub mod lens;
pub mod linalg;
pub mod maslov;
pub mod norms;
pub mod path;
pub mod quadratic;
pub mod random;
pub mod selectors;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
pub use job::{parse_job, run_job, Job, JobError, JobSpec, Report};
pub use lens::{ExactAngle, LensSpace, RoundMode};
pub use maslov::{evaluate_step, maslov_index, maslov_shifted, MaslovEvaluation, MaslovOptions};
pub use norms::{geodesic_report, norm_report, nu, nu_star, GeodesicVerdict, NormReport, NuVariant, PeriodMultiple};
pub use path::{Embeddedness, Level, Segment, SpectrumWindow, UnitaryPath};
pub use quadratic::{cayley_gf, InvariantQuadraticForm};
pub use selectors::{selector, selector_range, time_function, SelectorReport, SpectralSelectors};
pub use tolerances::Tolerances;
pub use verify::{verify_suite, Suite, VerifyReport};

//! Quantitative checks on minimizers and on the inequalities behind the
//! energy bounds.

pub mod asymptotics;
pub mod corpus;
pub mod decay;
pub mod inequalities;
pub mod sweep;

pub use asymptotics::{check_far_field, far_field_on, fit_origin, fit_origin_on, OriginFit};
pub use decay::{fit_decay, fit_decay_samples, fit_decay_u, TailFit};
pub use inequalities::{verify_inequalities, CorpusSizes, InequalityReport};
pub use sweep::{scaling_sweep, scaling_sweep_on, SweepReport, SweepRow};

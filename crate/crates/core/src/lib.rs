pub mod aggregation;
pub mod charges;
pub mod coherence;
pub mod engine;
pub mod error;
pub mod exec;
pub mod lp;
pub mod num;
pub mod projection;
pub mod scenarios;
pub mod scoring;
pub mod seq;
pub mod specfile;
pub mod system;

pub use charges::{Charge, ColumnCharge, ColumnSet, Event, Partition, Rv, State};
pub use error::{Error, Result};
pub use exec::Exec;
pub use num::Num;
pub use scoring::{Direction, LambdaMeasure, Measure, Rule, RuleFamily, Verdict};
pub use seq::{Bound, Extremum, Horizon, Kernel, Scalar, Seq};
pub use system::{Entry, Family, FamilyVariable, Forecasts, Quantity, Scope, System};

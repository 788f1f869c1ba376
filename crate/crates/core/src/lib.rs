//! Slow divergence integrals, slow relation functions and entry-exit
//! transport for planar slow-fast Liénard systems.

pub mod config;
pub mod error;
pub mod expr;
pub mod measures;
pub mod model;
pub mod ode;
pub mod quad;
pub mod relation;
pub mod roots;
pub mod sdi;
pub mod sim;

pub use error::{Error, ExprError, Result, Side};
pub use expr::RealExpr;
pub use measures::{EmpiricalSample, EntryKind, TransportMeasure};
pub use model::{AssumptionReport, LienardSystem, Order};
pub use relation::{
    FlowCase, InvariantMeasures, MeasureClass, Orientation, SlowRelation, ZeroScan,
};
pub use sdi::SdiEvaluator;
pub use sim::{Outcome, SimConfig};

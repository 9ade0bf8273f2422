//! Ruled and developable Möbius strips: construction from space curves,
//! singular-set extraction, and classification of the singular points of
//! their asymptotic completions.

pub mod curve;
pub mod expr;
pub mod jet;
pub mod numeric;
pub mod rectify;
pub mod singular;
pub mod strip;
pub mod vjet;

pub use curve::{CurveError, CurveR3, FrameSample};
pub use expr::{parse, Expr, ParseError};
pub use jet::{Jet, JetError};
pub use rectify::{ExtendedFrame, OsculatingCircle, RectifyError};
pub use singular::{Census, CensusOptions, PointClass, SingularPoint};
pub use strip::{Mesh, MobiusReport, RuledStrip, RulingField, StripError};
pub use vjet::VJet;

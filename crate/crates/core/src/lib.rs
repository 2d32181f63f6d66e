//! Regularised determinants, traces and volumes for operators given by
//! explicit eigenvalue sequences.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`]: E1, Gamma, the Euler constant and a Hurwitz zeta test oracle.
//! * [`spectra`]: eigenvalue families, heat traces and a Poisson-summation oracle.
//! * [`heat_expansion`]: small-time heat-trace expansions, analytic or fitted.
//! * [`regdet`]: cutoff and heat-kernel regularised determinants, regularised limit traces.
//! * [`zeta`]: spectral zeta functions through the Mellin split and the zeta determinant.
//! * [`orbit`]: loop-group coadjoint orbits, shape-operator traces, volumes and minimality.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod heat_expansion;
pub mod orbit;
pub mod quad;
pub mod regdet;
pub mod special;
pub mod spectra;
pub mod sum;
pub mod zeta;

pub use error::{Error, Result};
pub use heat_expansion::{ExpansionSource, HeatExpansion};
pub use orbit::{CartanMode, CurvatureReport, LoopGroupOrbitSpec};
pub use regdet::{LimitTrace, RegDetReport};
pub use special::{Tolerance, EULER_GAMMA};
pub use spectra::{EigenFamily, LatticeSide, Spectrum};
pub use zeta::{BridgeReport, ZetaEvaluation, ZetaRoute};

//! Generalized gamma convolutions and continuous-state branching processes
//! with immigration: the bijection between their parameterizations, sector
//! bounds for the associated Dirichlet forms, simulation, and boolean-type
//! convolution of Thorin pairs.

pub mod boolean;
pub mod correspondence;
pub mod error;
pub mod measure;
pub mod mechanism;
pub mod quadrature;
pub mod sector;
pub mod simulate;
pub mod special;

pub use boolean::FreePoissonParams;
pub use correspondence::{CorrespondenceResult, Method, SpectralMoments, SupportBracket};
pub use error::{Error, Result};
pub use measure::{Atom, MomentValue, PositiveMeasure, ThorinPair};
pub use mechanism::{PsiSolution, Quadruplet};
pub use sector::{BilinearValue, DriftDomination, GramMatrices, SectorReport};
pub use simulate::{LaplacePoint, SimEnsemble, StationaryLaw, TransientReport};

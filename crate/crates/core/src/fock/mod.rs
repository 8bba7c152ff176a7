//! Truncated Fock-space states and operators.

pub mod metrics;
pub mod operator;
pub mod position;
pub mod state;
pub mod states;
pub mod two_mode;
pub mod wigner;

pub use metrics::{effective_squeezing, state_metrics, EffectiveSqueezing, Quadrature, StateMetrics};
pub use operator::{build_gaussian_unitary, ladder_and_quadratures, GaussianKind, LadderSet, OperatorMatrix};
pub use position::{hermite_functions, quadrature_wavefunction, PositionGrid};
pub use state::{FockState, LEAKAGE_MARGIN, LEAKAGE_TOLERANCE};
pub use states::{make_cat, make_squeezed_vacuum, Parity};
pub use two_mode::{apply_two_mode_gate, BeamSplitter, ControlledZ};
pub use wigner::{wigner_map, PhaseGrid, WignerMap};

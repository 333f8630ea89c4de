//! Limit-shape dynamics on a periodic interval.
//!
//! The height `h` and its conjugate `π` evolve in the Euclidean time `y` under
//! `H_u(π, h) = ∫₀^L ℋ_{u−v(x)}(∂ₓh, π) dx`, with `ℋ` read from a tabulated
//! [`FreeEnergySurface`]. The same surface gives the surface tension `σ`, the Legendre
//! transform of `ℋ` in its field slot, and the action `∫∫ σ(∂ₓh, ∂ᵧh)`.
//!
//! The evolution is elliptic in `(x, y)`: a Fourier mode `m` grows like
//! `exp(2π|m| √(−ℋ_11 ℋ_22) y)` around a uniform state. [`EvolveConfig::mode_cutoff`]
//! keeps the evolved modes to `|m| ≤ cutoff` so round-off in high modes cannot blow up.

mod action;
mod evolve;
mod field;
mod surface;

pub use action::{
    action_value, el_residual, initial_state_from_action, minimize_action, row, surface_tension, tension_on_slab,
    ActionOptions, ActionProblem, ActionSolution, Tension,
};
pub use evolve::{evolve, ConservationLog, EvolveConfig, EvolveFailure, Snapshot, Trajectory};
pub use field::{hamiltonian_value, stationary_state, FieldState, Fourier, Profile};
pub use surface::{
    build_surface, tabulate_column, FreeEnergySurface, Slab, SurfacePoint, SurfaceSpec, SurfaceValidation,
};

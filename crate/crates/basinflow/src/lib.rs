//! Parabolic flow for a semilinear heat equation whose diffusion coefficient
//! depends on a nonlocal quantity `z = ∫ g(u) dx` and saturates to 1 once
//! `|z|` exceeds a threshold `K`.
//!
//! The equation solved on a rectangle with zero Dirichlet data is
//!
//! ```text
//! u_t − Δu = f(u) + Ψ(x, u, z),      Ψ(x, t, z) = (1/a(x, z) − 1) · f(t),
//! ```
//!
//! which is the divided-by-`a` form of `u_t − a(x, z) Δu = f(u)`. Because
//! `a(x, z) = 1` for `|z| ≥ K`, the correction `Ψ` vanishes identically in the
//! saturated regime and the flow there is an exact gradient flow for the
//! energy `E(u) = ½‖∇u‖² − ∫ F(u)`.
//!
//! The crate provides, in dependency order:
//!
//! * [`model`] — scalar nonlinearities `f`, nonlocal densities `g`, the
//!   saturating coefficient family `a`, and a sampling-based hypothesis
//!   verifier;
//! * [`grid`] — uniform-grid fields, the 5-point Dirichlet Laplacian,
//!   quadrature, norms, energy, and the closed-form sine eigenbasis;
//! * [`flow`] — the first-order IMEX stepper, trajectory traces, an
//!   independent Duhamel/Picard reference solution, and the discrete
//!   energy-dissipation residual;
//! * [`classify`] — decay/blow-up verdicts for trajectories, the concavity
//!   indicator for finite-time blow-up, and the sufficient-condition
//!   certificate built from a sphere minimization;
//! * [`threshold`] — bracketing and bisection along a ray of initial data,
//!   ω-limit extraction near the basin boundary, and Newton refinement of
//!   steady states;
//! * [`cli`] — flat key/value run configuration, subcommand drivers, and the
//!   run manifest with file hashes.
//!
//! Most one-off uses are easier through the runnable examples (see
//! `examples/`) or the `basinflow` binary, which exposes the same drivers as
//! subcommands.

pub mod classify;
pub mod cli;
pub mod flow;
pub mod grid;
pub mod model;
pub mod threshold;

pub use grid::{GridFunction, RectDomain};
pub use model::ProblemSpec;

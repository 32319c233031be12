//! Statistical-mechanics / information-theory toolbox.
//!
//! The crate is organized around the partition function: exact canonical
//! computations on finite systems ([`ensembles`]), asymptotic machinery
//! (Legendre transforms and Laplace integration, [`asymptotics`]), exactly
//! solvable spin models ([`spin`]), random-energy phase diagrams ([`rem`]),
//! random-coding and rate-distortion exponents ([`coding`]), Markov dynamics
//! with second-law monitors and MCMC samplers ([`dynamics`], [`sampler`]),
//! and Fisher-information / entropy-bound estimation tools ([`estimation`]).
//!
//! Conventions: natural logarithms (nats) everywhere, Boltzmann's constant
//! k = 1, so inverse temperature is beta = 1/T and free energy is
//! F = -ln Z / beta.

pub mod asymptotics;
pub mod coding;
pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod estimation;
pub mod numerics;
pub mod rem;
pub mod sampler;
pub mod spin;

pub use error::{Error, Result};

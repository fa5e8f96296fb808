//! Rational maps over Q, finite stochastic systems, ramification and the
//! exceptional set.
//!
//! # Deciding exceptionality at depth three
//!
//! A point `z` is exceptional for a system `S` when its grand orbit under
//! the semigroup generated by `S` is finite. Two facts make this decidable
//! for rational points by looking only at words of length three.
//!
//! *If every word of length three is totally ramified at `z`, then `z` is
//! exceptional.* This is the sufficiency half and is a known property of
//! such systems.
//!
//! *Conversely, if `z` is exceptional then every word is totally ramified
//! at `z`.* Let `E` be the (finite) grand orbit of `z` and `phi` in `S`.
//! Preimages and images of points of `E` lie in `E`, so `phi^-1(E)` is
//! contained in `E` and `phi` maps it onto `E`. A surjection between
//! finite sets of sizes `|phi^-1(E)| <= |E|` must be a bijection, so every
//! `w` in `E` has exactly one preimage point under `phi`, which therefore
//! carries the full multiplicity `deg phi`. Hence `e_w(phi) = deg phi` for
//! all `w` in `E`, and since `phi(E)` lies in `E` the chain rule
//! `e_z(gamma) = prod e_{z_k}(phi_k)` along the orbit gives
//! `e_z(gamma) = deg gamma` for words of any length.
//!
//! Together: `z` is exceptional iff `sigma_3(z) = 1`, where
//! `sigma_3(z) = sum over words gamma of length 3 of nu(gamma) e_z(gamma) / deg gamma`.
//! Depth two does not suffice, as `{1/z^2, z^2 + 1}` at infinity shows.
//!
//! Totally ramified points of a degree `d` map are roots of multiplicity
//! `d - 1` of the Jacobian form, which has degree `2d - 2`; so there are at
//! most two, and they are found exactly from a factor of degree at most 2.

mod exceptional;
mod map;
mod system;

pub use exceptional::{exceptional_set, ExceptionalSet};
pub use map::{make_map, Monomial, Preimage, RationalMapQ, CRITICAL_MATCH_TOL};
pub use system::{StochasticSystem, Word, DEFAULT_WORD_CAP};

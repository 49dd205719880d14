//! Profile matching toolkit.
//!
//! Finds the largest self-weighted subsamples of treatment groups that are
//! balanced toward a target covariate profile, then estimates target-population
//! treatment effects from the matched (or inverse-odds-weighted) samples.
//! Includes the Monte Carlo harness used to benchmark the estimators and the
//! paired outcome tests and sensitivity bounds for pair-matched designs.

pub mod balance;
pub mod data;
pub mod estimators;
pub mod glm;
pub mod matching;
pub mod numerics;
pub mod paired;
pub mod simulation;
pub mod solver;

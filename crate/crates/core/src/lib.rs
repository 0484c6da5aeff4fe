#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks

pub mod domain;
pub mod perception;
pub mod rng;
pub mod simspace;
pub mod reality;
pub mod envs;
pub mod taggers;
pub mod stats;
pub mod fixtures;
pub mod cps;
pub mod audit;
pub mod harness;

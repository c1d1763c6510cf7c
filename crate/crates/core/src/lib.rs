#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod config;
pub mod exact;
pub mod experiment;
pub mod operator;
pub mod quadrature;
pub mod radial;
pub mod report;
pub mod grid;
pub mod io;
pub mod verify;

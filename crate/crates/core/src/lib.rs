//! Girth-constrained Tanner graph design by branch-and-cut.

pub mod alist;
pub mod model;
pub mod peg;
pub mod separation;
pub mod simplex;
pub mod solver;
pub mod structure;
pub mod tanner;

//! Classification of STL counterexamples by parametric violation classes.
//!
//! A specification is split into parametric classes ([`classes`]), ordered
//! by inclusion ([`order`]), and each counterexample is checked against the
//! classes by robustness-guided parameter search ([`membership`]) either
//! exhaustively or by binary search over the inclusion DAG ([`classifier`]).

pub mod classes;
pub mod classifier;
pub mod membership;
pub mod order;
pub mod pstl;
pub mod signal;
pub mod stl;
pub mod surrogate;
pub mod workbench;

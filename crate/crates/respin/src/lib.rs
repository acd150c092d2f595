//! respin — re-target quantum circuits to hardware gate sets with multiple
//! two-qubit gate realizations.
//!
//! The pipeline partitions a circuit into two-qubit blocks, prices a
//! reference translation per block, enumerates verified substitutions
//! (template equivalences and per-block synthesis), solves an exact
//! optimization over the substitution choices, and materializes the adapted
//! circuit. A small density-matrix simulator evaluates the result under
//! gate depolarization and idle-time relaxation.
//!
//! ```
//! use respin::circuit::{parse_circuit, CostModel};
//! use respin::adapt::adapt_circuit;
//! use respin::model::Objective;
//!
//! let circuit = parse_circuit("qubits 2\ncx 0 1\ncx 1 0\ncx 0 1").unwrap();
//! let cost = CostModel::spin_d0();
//! let outcome = adapt_circuit(&circuit, &cost, Objective::Fidelity).unwrap();
//! assert!(outcome.adapted.sum_log_fidelity > f64::NEG_INFINITY);
//! ```

pub mod adapt;
pub mod bench;
pub mod blocks;
pub mod circuit;
pub mod error;
pub mod kak;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod rules;

mod book;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

//! Residue number coding: encode integers as residues over pairwise-coprime
//! moduli with random-multiple shifting, compute on the encodings, and run an
//! AES-128 key schedule without ever decoding the key.
//!
//! ```
//! use hoacs_core::{ModuliSet, RncEngine};
//!
//! let set = ModuliSet::new(&[17, 19]).unwrap();
//! let mut e = RncEngine::new(set, 7);
//! let a = e.encode(29).unwrap();
//! let b = e.encode(27).unwrap();
//! let sum = e.add_enc(&a, &b).unwrap();
//! assert_eq!(e.decode(&sum).unwrap(), 56);
//! ```

pub mod aes;
pub mod attack;
pub mod audit;
pub mod containers;
pub mod error;
pub mod ops;
pub mod rnc;
pub mod trace;

pub use containers::{LinearMap, RncGrid, RncTree};
pub use error::{Result, RncError};
pub use ops::{BitOp, OpConfig, OpStats, RncEngine};
pub use rnc::{EncodedValue, MixedRadixDigits, ModuliSet, SetId};
pub use trace::{Segment, TraceEvent, TraceLog, Width};

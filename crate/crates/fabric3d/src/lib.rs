//! A self-contained 3D FPGA architecture exploration toolkit.
//!
//! fabric3d builds 3D routing resource graphs from a declarative
//! architecture description, places and routes LUT-mapped benchmarks onto
//! them, emits hierarchical fabric netlists and programming bitstreams, and
//! runs parameter sweeps reporting wirelength, critical path delay,
//! vertical-connection counts, and layer crossings.
//!
//! The guide under `book/` walks through each concept; its code snippets
//! compile and run as doctests of this crate.
//!
//! ```
//! use fabric3d::arch::{parse_arch, validate};
//!
//! let spec = parse_arch("grid {\n  width 4\n  height 4\n}\n").unwrap();
//! assert!(validate(&spec).is_empty());
//! ```

pub mod arch;
pub mod benchgen;
pub mod bitstream;
pub mod blif;
pub mod error;
pub mod fabric;
pub mod pnr;
pub mod rrg;
pub mod vertical;

pub use error::{Error, Result};

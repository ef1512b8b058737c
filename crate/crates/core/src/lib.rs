//! Binned calibration error, its bias and generalization bounds, histogram
//! recalibration, and the synthetic and supersample experiments around them.
//!
//! ```
//! use calibound::binning::BinningScheme;
//! use calibound::data::ScoredDataset;
//! use calibound::metrics::ece;
//!
//! let d = ScoredDataset::from_pairs(&[(0.3, 0), (0.3, 0), (0.3, 1)], "doc").unwrap();
//! let e = ece(&d, &BinningScheme::uwb(1).unwrap());
//! assert!((e.value - 1.0 / 30.0).abs() < 1e-12);
//! ```

pub mod binning;
pub mod bounds;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod mi;
pub mod models;
pub mod recalibration;
pub mod record;
pub mod rng;

pub use error::{Error, Result};

//! Polynomial chaos over d-dissociated character systems on finite abelian
//! groups: Riesz-product measures, extraction identities, and empirical
//! Khinchin and Sidon constants.

pub mod analysis;
pub mod chaos;
pub mod cli;
pub mod discretize;
pub mod dissociation;
pub mod error;
pub mod group;
pub mod riesz;

pub use error::{Error, Result};

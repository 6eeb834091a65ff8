//! Timed window objectives: models, expansion, regions, verification and games.

pub mod error;
pub mod expand;
pub mod games;
pub mod gen;
pub mod model;
pub mod parse;
pub mod regions;
pub mod oracle;
pub mod par;
pub mod verify;

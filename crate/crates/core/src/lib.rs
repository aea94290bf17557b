pub mod assembly;
pub mod config;
pub mod dynamics;
pub mod element;
pub mod error;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod modal;
pub mod pipeline;

pub use error::{Error, Result};

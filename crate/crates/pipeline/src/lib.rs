//! Precompute driver, session bundles, HTTP session service and timing report.

pub mod analysis;
pub mod bundle;
pub mod config;
pub mod error;
pub mod params;
pub mod server;
pub mod session;
pub mod timing;

pub use bundle::SessionBundle;
pub use config::SessionConfig;
pub use error::{PipelineError, Stage};
pub use timing::TimingRecord;

pub mod contour;
pub mod error;
pub mod features;
pub mod ingest;
pub mod mode;
pub mod model;
pub mod modescale;
pub mod par;
pub mod pitch;
pub mod presets;

pub use error::{Error, Result};
pub use mode::Mode;

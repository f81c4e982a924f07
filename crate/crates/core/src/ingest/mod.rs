//! Audio decoding, dataset manifests, duration segmentation and the
//! synthetic chant generator.

mod audio;
mod manifest;
mod resample;
mod segment;
mod synth;

pub use audio::{load_audio, write_wav, AudioBuffer};
pub use manifest::{load_manifest, DatasetManifest, ManifestEntry};
pub use resample::resample;
pub use segment::{segment, InputDuration};
pub use synth::{synthesize, CorpusSpec, ModeSpec, SynthSpec};

/// Internal analysis sample rate. 128 samples at this rate is the 5.8 ms hop.
pub const ANALYSIS_RATE: u32 = 22_050;

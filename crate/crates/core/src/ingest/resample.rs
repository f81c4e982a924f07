use rubato::audioadapter_buffers::direct::InterleavedSlice;
use rubato::{Fft, FixedSync, Resampler};

use crate::error::{Error, Result};

const CHUNK: usize = 1024;

/// Resample `input` from `from_hz` to `to_hz` with an FFT-based sinc filter.
pub fn resample(input: &[f32], from_hz: u32, to_hz: u32) -> Result<Vec<f32>> {
    if from_hz == to_hz || input.is_empty() {
        return Ok(input.to_vec());
    }
    let bad = |e: &dyn std::fmt::Display| Error::InvalidParam(format!("resampling {from_hz} Hz to {to_hz} Hz: {e}"));
    let mut r = Fft::<f32>::new(from_hz as usize, to_hz as usize, CHUNK, 1, FixedSync::Input).map_err(|e| bad(&e))?;
    let buf = InterleavedSlice::new(input, 1, input.len()).map_err(|e| bad(&e))?;
    let out = r.process_all(&buf, input.len(), None).map_err(|e| bad(&e))?;
    Ok(out.take_data())
}

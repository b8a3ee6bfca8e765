//! Audio buffers and file I/O.

mod buffer;
pub mod resample;
pub mod wav;

pub use buffer::{mixdown_mono, AudioBuffer, BufferError};
pub use resample::resample;
pub use wav::{decode_wav, encode_wav, probe_wav, BitDepth, WavError, WavInfo};

/// Internal processing rate of the engine; assets are converted to it at load.
pub const ENGINE_SAMPLE_RATE: u32 = 48_000;

/// Mono, engine-rate copy of any buffer.
pub fn to_engine_mono(buf: &AudioBuffer) -> AudioBuffer {
    resample(&mixdown_mono(buf), ENGINE_SAMPLE_RATE)
}

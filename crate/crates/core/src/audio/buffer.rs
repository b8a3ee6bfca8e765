use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BufferError {
    #[error("a buffer needs at least one channel")]
    NoChannels,
    #[error("sample rate must be positive, got {0}")]
    SampleRate(u32),
    #[error("channel {channel} has {len} samples, expected {expected}")]
    Ragged { channel: usize, len: usize, expected: usize },
}

/// Planar multichannel audio with normalized float samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    sample_rate: u32,
    channels: Vec<Vec<f32>>,
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f32>>) -> Result<Self, BufferError> {
        if channels.is_empty() {
            return Err(BufferError::NoChannels);
        }
        if sample_rate == 0 {
            return Err(BufferError::SampleRate(sample_rate));
        }
        let expected = channels[0].len();
        if let Some((channel, c)) = channels.iter().enumerate().find(|(_, c)| c.len() != expected) {
            return Err(BufferError::Ragged {
                channel,
                len: c.len(),
                expected,
            });
        }
        Ok(Self { sample_rate, channels })
    }

    pub fn mono(sample_rate: u32, samples: Vec<f32>) -> Self {
        Self::new(sample_rate, vec![samples]).expect("mono buffer with positive rate")
    }

    pub fn stereo(sample_rate: u32, left: Vec<f32>, right: Vec<f32>) -> Result<Self, BufferError> {
        Self::new(sample_rate, vec![left, right])
    }

    pub fn silent(sample_rate: u32, channels: usize, frames: usize) -> Self {
        Self::new(sample_rate, vec![vec![0.0; frames]; channels.max(1)]).expect("valid silent buffer")
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn frames(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames() == 0
    }

    pub fn duration_secs(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> &[f32] {
        &self.channels[index]
    }

    pub fn channel_mut(&mut self, index: usize) -> &mut [f32] {
        &mut self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f32>] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Vec<f32>] {
        &mut self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f32>> {
        self.channels
    }

    /// Interleaved copy, frame-major.
    pub fn interleaved(&self) -> Vec<f32> {
        let n = self.frames();
        let mut out = Vec::with_capacity(n * self.channels.len());
        for i in 0..n {
            for c in &self.channels {
                out.push(c[i]);
            }
        }
        out
    }

    /// Appends another buffer with the same rate and channel count.
    pub fn append(&mut self, other: &AudioBuffer) {
        assert_eq!(self.sample_rate, other.sample_rate);
        assert_eq!(self.channels.len(), other.channels.len());
        for (dst, src) in self.channels.iter_mut().zip(&other.channels) {
            dst.extend_from_slice(src);
        }
    }
}

/// Equal-weight average of all channels.
pub fn mixdown_mono(buf: &AudioBuffer) -> AudioBuffer {
    if buf.num_channels() == 1 {
        return buf.clone();
    }
    let scale = 1.0 / buf.num_channels() as f64;
    let mixed = (0..buf.frames())
        .map(|i| (buf.channels().iter().map(|c| c[i] as f64).sum::<f64>() * scale) as f32)
        .collect();
    AudioBuffer::mono(buf.sample_rate(), mixed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert_eq!(AudioBuffer::new(48_000, vec![]), Err(BufferError::NoChannels));
        assert_eq!(AudioBuffer::new(0, vec![vec![]]), Err(BufferError::SampleRate(0)));
        assert!(matches!(
            AudioBuffer::new(48_000, vec![vec![0.0; 3], vec![0.0; 2]]),
            Err(BufferError::Ragged { channel: 1, .. })
        ));
    }

    #[test]
    fn mixdown_average() {
        let st = AudioBuffer::stereo(48_000, vec![1.0; 4], vec![0.0; 4]).unwrap();
        assert_eq!(mixdown_mono(&st).channel(0), &[0.5; 4]);
    }

    #[test]
    fn mixdown_mono_is_identity() {
        let m = AudioBuffer::mono(44_100, vec![0.1, -0.2, 0.3]);
        assert_eq!(mixdown_mono(&m), m);
    }

    #[test]
    fn mixdown_cancels_antiphase() {
        let x: Vec<f32> = (0..64).map(|i| (i as f32 * 0.1).sin()).collect();
        let neg = x.iter().map(|v| -v).collect();
        let st = AudioBuffer::stereo(48_000, x, neg).unwrap();
        assert!(mixdown_mono(&st).channel(0).iter().all(|&v| v == 0.0));
    }
}

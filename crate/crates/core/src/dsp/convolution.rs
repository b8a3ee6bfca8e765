//! FFT overlap-add convolution.
//!
//! [`OverlapAddConvolver`] is the streaming form: each call takes a chunk of
//! at most `max_block` samples, returns the same number of output samples
//! with no added latency, and carries the filter tail to the next call.
//! [`fft_convolve`] runs it over a whole signal and returns the full linear
//! convolution (`signal.len() + impulse.len() - 1` samples).

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct OverlapAddConvolver {
    max_block: usize,
    ir_len: usize,
    ir_spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    work: Vec<Complex64>,
    /// Pending output contributions, index 0 = next output sample.
    tail: Vec<f64>,
}

impl std::fmt::Debug for OverlapAddConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OverlapAddConvolver")
            .field("max_block", &self.max_block)
            .field("fft_len", &self.work.len())
            .field("ir_len", &self.ir_len)
            .finish_non_exhaustive()
    }
}

impl OverlapAddConvolver {
    pub fn new(impulse: &[f64], max_block: usize) -> Self {
        let max_block = max_block.max(1);
        let ir_len = impulse.len();
        let fft_len = (max_block + ir_len.max(1) - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::default(); scratch_len];

        let mut ir_spectrum: Vec<Complex64> = (0..fft_len)
            .map(|i| Complex64::new(impulse.get(i).copied().unwrap_or(0.0), 0.0))
            .collect();
        forward.process_with_scratch(&mut ir_spectrum, &mut scratch);
        // the inverse transform is unnormalized; fold 1/N into the filter
        let norm = 1.0 / fft_len as f64;
        ir_spectrum.iter_mut().for_each(|c| *c *= norm);

        Self {
            max_block,
            ir_len,
            ir_spectrum,
            forward,
            inverse,
            scratch,
            work: vec![Complex64::default(); fft_len],
            tail: vec![0.0; fft_len],
        }
    }

    pub fn impulse_len(&self) -> usize {
        self.ir_len
    }

    pub fn max_block(&self) -> usize {
        self.max_block
    }

    /// Convolves one chunk. `output` receives exactly `input.len()` samples.
    ///
    /// # Panics
    /// If `input` is longer than `max_block`.
    pub fn process(&mut self, input: &[f64], output: &mut Vec<f64>) {
        let n = input.len();
        assert!(n <= self.max_block, "chunk of {n} exceeds max block {}", self.max_block);
        if n == 0 {
            return;
        }
        if self.ir_len == 0 {
            output.extend(std::iter::repeat_n(0.0, n));
            return;
        }
        for (i, w) in self.work.iter_mut().enumerate() {
            *w = Complex64::new(if i < n { input[i] } else { 0.0 }, 0.0);
        }
        self.forward.process_with_scratch(&mut self.work, &mut self.scratch);
        for (w, h) in self.work.iter_mut().zip(&self.ir_spectrum) {
            *w *= h;
        }
        self.inverse.process_with_scratch(&mut self.work, &mut self.scratch);

        // linear result occupies n + ir_len - 1 <= fft_len samples
        let span = n + self.ir_len - 1;
        for (t, w) in self.tail[..span].iter_mut().zip(&self.work) {
            *t += w.re;
        }
        output.extend_from_slice(&self.tail[..n]);
        self.tail.copy_within(n.., 0);
        let len = self.tail.len();
        self.tail[len - n..].fill(0.0);
    }

    /// Emits the remaining `impulse_len - 1` tail samples and clears state.
    pub fn flush(&mut self, output: &mut Vec<f64>) {
        let rest = self.ir_len.saturating_sub(1);
        output.extend_from_slice(&self.tail[..rest]);
        self.reset();
    }

    pub fn reset(&mut self) {
        self.tail.fill(0.0);
    }
}

/// Full linear convolution of `signal` with `impulse` by FFT overlap-add.
/// Returns an empty vector if either input is empty.
pub fn fft_convolve(signal: &[f64], impulse: &[f64]) -> Vec<f64> {
    if signal.is_empty() || impulse.is_empty() {
        return Vec::new();
    }
    let block = impulse.len().max(256).next_power_of_two().min(signal.len().next_power_of_two());
    let mut conv = OverlapAddConvolver::new(impulse, block);
    let mut out = Vec::with_capacity(signal.len() + impulse.len() - 1);
    for chunk in signal.chunks(block) {
        conv.process(chunk, &mut out);
    }
    conv.flush(&mut out);
    out
}

//! Per-source binaural rendering state.
//!
//! A block goes through distance gain, air absorption, the interaural delay,
//! the per-ear HRIR (or its IIR fit) and finally the near-field shelves.
//! Gain and delay changes are ramped linearly across the block. When the
//! nearest HRIR changes, the block is filtered by both the old and the new
//! responses and crossfaded with weight `(n + 1) / N` toward the new one.

use std::sync::Arc;

use super::cues::{
    air_absorption_cutoff, distance_gain, itd_delays, near_field_ild_gains, DistanceModel, AIR_CUTOFF_MAX_HZ,
};
use super::hrir::HrirSet;
use super::iir_fit::IirFitSet;
use crate::dsp::{math, Biquad, BiquadCascade, BiquadCoeffs, BiquadKind};
use crate::model::{ListenerPose, Vec2};

/// Source direction and range relative to the listener's head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePose {
    /// Radians, counterclockwise from straight ahead (left is positive).
    pub azimuth: f64,
    /// Radians above the ear plane.
    pub elevation: f64,
    pub distance: f64,
}

impl SourcePose {
    pub fn new(azimuth: f64, elevation: f64, distance: f64) -> Self {
        Self {
            azimuth,
            elevation,
            distance,
        }
    }

    /// Pose of a source at room position `source`, `height` metres above the
    /// ear plane, as heard by `listener`.
    pub fn from_positions(listener: &ListenerPose, source: Vec2, height: f64) -> Self {
        // into the head frame: x to the right, y straight ahead
        let v = (source - listener.position).rotated(-listener.yaw);
        let horizontal = v.norm();
        let azimuth = if horizontal == 0.0 { 0.0 } else { math::atan2(-v.x, v.y) };
        let elevation = if horizontal == 0.0 && height == 0.0 {
            0.0
        } else {
            math::atan2(height, horizontal)
        };
        Self {
            azimuth,
            elevation,
            distance: math::sqrt(horizontal * horizontal + height * height),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SpatialMode {
    FullHrir,
    /// IIR magnitude fits in place of HRIR convolution.
    HighPerformance(Arc<IirFitSet>),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpatializerError {
    #[error("IIR fits were made for a different HRIR set or sample rate")]
    FitMismatch,
    #[error("head circumference {0} m is outside [0.3, 0.8]")]
    HeadCircumference(f64),
}

/// Fractional delay line read with linear interpolation.
#[derive(Debug, Clone)]
struct DelayLine {
    buf: Vec<f64>,
    mask: usize,
    write: usize,
}

impl DelayLine {
    fn new(max_delay: usize) -> Self {
        let size = (max_delay + 2).next_power_of_two().max(64);
        Self {
            buf: vec![0.0; size],
            mask: size - 1,
            write: 0,
        }
    }

    #[inline]
    fn process(&mut self, x: f64, delay: f64) -> f64 {
        self.buf[self.write] = x;
        let whole = delay as usize;
        let frac = delay - whole as f64;
        let a = self.buf[self.write.wrapping_sub(whole) & self.mask];
        let b = self.buf[self.write.wrapping_sub(whole + 1) & self.mask];
        self.write = (self.write + 1) & self.mask;
        (1.0 - frac) * a + frac * b
    }

    fn reset(&mut self) {
        self.buf.fill(0.0);
        self.write = 0;
    }
}

#[derive(Debug, Clone, Copy)]
struct Ramp {
    from: f64,
    to: f64,
    len: f64,
}

impl Ramp {
    #[inline]
    fn at(&self, n: usize) -> f64 {
        if self.from == self.to {
            self.to
        } else {
            self.from + (self.to - self.from) * ((n + 1) as f64 / self.len)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpatializerState {
    hrirs: Arc<HrirSet>,
    fits: Option<Arc<IirFitSet>>,
    head_circumference: f64,
    fs: f64,
    current: Option<usize>,
    tails: [Vec<f64>; 2],
    cascades: [BiquadCascade; 2],
    delays: [DelayLine; 2],
    last_delay: Option<[f64; 2]>,
    last_gain: Option<f64>,
    air_state: f64,
    air_coeff: f64,
    shelves: [Biquad; 2],
    shelf_gain: [f64; 2],
    // per-block scratch
    mono: Vec<f64>,
    ears: [Vec<f64>; 2],
    conv: [Vec<f64>; 2],
}

fn convolve_add(x: &[f64], h: &[f32], out: &mut [f64]) {
    for (n, &xn) in x.iter().enumerate() {
        if xn == 0.0 {
            continue;
        }
        for (k, &hk) in h.iter().enumerate() {
            out[n + k] += xn * hk as f64;
        }
    }
}

impl SpatializerState {
    pub fn new(hrirs: Arc<HrirSet>, mode: SpatialMode, head_circumference: f64) -> Result<Self, SpatializerError> {
        if !(0.3..=0.8).contains(&head_circumference) {
            return Err(SpatializerError::HeadCircumference(head_circumference));
        }
        let fits = match mode {
            SpatialMode::FullHrir => None,
            SpatialMode::HighPerformance(f) => {
                if !f.matches(&hrirs) {
                    return Err(SpatializerError::FitMismatch);
                }
                Some(f)
            }
        };
        let fs = hrirs.sample_rate() as f64;
        // largest Woodworth delay for the largest accepted head
        let max_delay = (0.8 / std::f64::consts::TAU / super::cues::SPEED_OF_SOUND
            * (std::f64::consts::FRAC_PI_2 + 1.0)
            * fs)
            .ceil() as usize;
        let tail = hrirs.len() - 1;
        Ok(Self {
            head_circumference,
            fs,
            current: None,
            tails: [vec![0.0; tail], vec![0.0; tail]],
            cascades: [BiquadCascade::new(1.0, &[]), BiquadCascade::new(1.0, &[])],
            delays: [DelayLine::new(max_delay), DelayLine::new(max_delay)],
            last_delay: None,
            last_gain: None,
            air_state: 0.0,
            air_coeff: 0.0,
            shelves: [Biquad::identity(), Biquad::identity()],
            shelf_gain: [0.0, 0.0],
            mono: Vec::new(),
            ears: [Vec::new(), Vec::new()],
            conv: [Vec::new(), Vec::new()],
            hrirs,
            fits,
        })
    }

    pub fn hrirs(&self) -> &Arc<HrirSet> {
        &self.hrirs
    }

    pub fn is_high_performance(&self) -> bool {
        self.fits.is_some()
    }

    /// Index of the HRIR direction used by the last block.
    pub fn current_direction(&self) -> Option<usize> {
        self.current
    }

    pub fn tails(&self) -> [&[f64]; 2] {
        [&self.tails[0], &self.tails[1]]
    }

    /// Clears every filter memory, as if freshly built.
    pub fn reset(&mut self) {
        self.current = None;
        self.tails.iter_mut().for_each(|t| t.fill(0.0));
        self.cascades.iter_mut().for_each(BiquadCascade::reset);
        self.delays.iter_mut().for_each(DelayLine::reset);
        self.last_delay = None;
        self.last_gain = None;
        self.air_state = 0.0;
        self.air_coeff = 0.0;
        self.shelves = [Biquad::identity(), Biquad::identity()];
        self.shelf_gain = [0.0, 0.0];
    }

    /// Renders one mono block to a new stereo pair.
    pub fn spatialize_block(&mut self, input: &[f32], pose: &SourcePose, model: &DistanceModel) -> [Vec<f32>; 2] {
        let mut left = vec![0.0; input.len()];
        let mut right = vec![0.0; input.len()];
        self.process(input, pose, model, &mut left, &mut right);
        [left, right]
    }

    /// Renders `input` into `left` and `right`, overwriting them.
    pub fn process(&mut self, input: &[f32], pose: &SourcePose, model: &DistanceModel, left: &mut [f32], right: &mut [f32]) {
        let n = input.len();
        assert!(left.len() == n && right.len() == n, "output blocks must match the input length");
        if n == 0 {
            return;
        }
        let len = n as f64;

        let gain = distance_gain(pose.distance, model);
        let gain_ramp = Ramp {
            from: self.last_gain.unwrap_or(gain),
            to: gain,
            len,
        };
        self.last_gain = Some(gain);

        let cutoff = air_absorption_cutoff(pose.distance, model);
        // the ceiling cutoff means an open path
        self.air_coeff = if cutoff >= AIR_CUTOFF_MAX_HZ {
            0.0
        } else {
            math::exp(-std::f64::consts::TAU * cutoff / self.fs)
        };
        let a = self.air_coeff;

        self.mono.clear();
        for (i, &x) in input.iter().enumerate() {
            let y = x as f64 * gain_ramp.at(i);
            self.air_state = (1.0 - a) * y + a * self.air_state;
            self.mono.push(self.air_state);
        }

        let itd = itd_delays(self.head_circumference, pose.azimuth, pose.elevation);
        let target = [itd.left_s * self.fs, itd.right_s * self.fs];
        let from = self.last_delay.unwrap_or(target);
        self.last_delay = Some(target);
        for ear in 0..2 {
            let ramp = Ramp {
                from: from[ear],
                to: target[ear],
                len,
            };
            let line = &mut self.delays[ear];
            let out = &mut self.ears[ear];
            out.clear();
            out.extend(self.mono.iter().enumerate().map(|(i, &x)| line.process(x, ramp.at(i))));
        }

        let az_deg = math::wrap_degrees(pose.azimuth.to_degrees());
        let index = self.hrirs.select(az_deg, pose.elevation.to_degrees());
        let previous = self.current.replace(index);
        let switch_from = previous.filter(|&p| p != index);
        match self.fits.clone() {
            None => self.filter_fir(index, switch_from),
            Some(fits) => self.filter_iir(&fits, index, switch_from),
        }

        let ild = near_field_ild_gains(pose.distance, pose.azimuth, model);
        for (ear, g) in [ild.left_db, ild.right_db].into_iter().enumerate() {
            let shelf = &mut self.shelves[ear];
            if g != self.shelf_gain[ear] {
                self.shelf_gain[ear] = g;
                shelf.set_coeffs(
                    BiquadCoeffs::design(BiquadKind::Highshelf, model.ild_corner_hz, std::f64::consts::FRAC_1_SQRT_2, g, self.fs)
                        .unwrap_or(BiquadCoeffs::IDENTITY),
                );
            }
            if g == 0.0 && shelf.is_at_rest() {
                continue;
            }
            self.ears[ear].iter_mut().for_each(|s| *s = shelf.process_sample(*s));
        }

        for (o, &s) in left.iter_mut().zip(&self.ears[0]) {
            *o = s as f32;
        }
        for (o, &s) in right.iter_mut().zip(&self.ears[1]) {
            *o = s as f32;
        }
    }

    fn filter_fir(&mut self, index: usize, switch_from: Option<usize>) {
        let hrirs = Arc::clone(&self.hrirs);
        let taps = hrirs.len();
        for ear in 0..2 {
            let x = &self.ears[ear];
            let n = x.len();
            let ir = |i| if ear == 0 { hrirs.left(i) } else { hrirs.right(i) };
            let [new, old] = &mut self.conv;
            new.clear();
            new.resize(n + taps - 1, 0.0);
            convolve_add(x, ir(index), new);
            if let Some(prev) = switch_from {
                old.clear();
                old.resize(n + taps - 1, 0.0);
                convolve_add(x, ir(prev), old);
                for i in 0..n {
                    let w = (i + 1) as f64 / n as f64;
                    new[i] = (1.0 - w) * old[i] + w * new[i];
                }
            }
            let tail = &mut self.tails[ear];
            for (i, t) in tail.iter().enumerate() {
                new[i] += t;
            }
            let out = &mut self.ears[ear];
            out.copy_from_slice(&new[..n]);
            tail.copy_from_slice(&new[n..]);
        }
    }

    fn filter_iir(&mut self, fits: &IirFitSet, index: usize, switch_from: Option<usize>) {
        let fit = &fits.directions[index];
        for (ear, ear_fit) in [&fit.left, &fit.right].into_iter().enumerate() {
            let mut next = ear_fit.cascade(self.fs);
            // carry the running filter memory over to the new coefficients
            if next.sections.len() == self.cascades[ear].sections.len() {
                for (dst, src) in next.sections.iter_mut().zip(&self.cascades[ear].sections) {
                    let coeffs = dst.coeffs;
                    *dst = *src;
                    dst.set_coeffs(coeffs);
                }
            }
            let x = &mut self.ears[ear];
            if switch_from.is_some() {
                let mut old = self.cascades[ear].clone();
                let n = x.len() as f64;
                for (i, s) in x.iter_mut().enumerate() {
                    let w = (i + 1) as f64 / n;
                    *s = (1.0 - w) * old.process_sample(*s) + w * next.process_sample(*s);
                }
                self.cascades[ear] = next;
            } else {
                if self.cascades[ear].sections.len() != next.sections.len() || self.cascades[ear].gain != next.gain {
                    self.cascades[ear] = next;
                }
                let c = &mut self.cascades[ear];
                x.iter_mut().for_each(|s| *s = c.process_sample(*s));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::hrir::Direction;
    use super::super::synthetic::spherical_head_set;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const N: usize = 128;

    fn noise(len: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-0.5f32..0.5)).collect()
    }

    fn run(state: &mut SpatializerState, x: &[f32], pose: &SourcePose, model: &DistanceModel) -> [Vec<f32>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for block in x.chunks(N) {
            let [l, r] = state.spatialize_block(block, pose, model);
            out[0].extend(l);
            out[1].extend(r);
        }
        out
    }

    fn full(set: HrirSet) -> SpatializerState {
        SpatializerState::new(Arc::new(set), SpatialMode::FullHrir, 0.55).unwrap()
    }

    /// Impulse response of a biquad, by the direct-form-I difference equation.
    fn biquad_ir(c: &BiquadCoeffs, len: usize) -> Vec<f64> {
        let mut y = vec![0.0; len];
        for n in 0..len {
            let x = |k: usize| if n >= k && n - k == 0 { 1.0 } else { 0.0 };
            let yp = |k: usize| if n >= k { y[n - k] } else { 0.0 };
            y[n] = c.b0 * x(0) + c.b1 * x(1) + c.b2 * x(2) - c.a1 * yp(1) - c.a2 * yp(2);
        }
        y
    }

    fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    /// Composite impulse response for one ear under a fixed pose, assembled
    /// stage by stage from closed forms.
    fn composite(set: &HrirSet, pose: &SourcePose, model: &DistanceModel, ear: usize, len: usize) -> Vec<f64> {
        let fs = set.sample_rate() as f64;
        let g = 10f64.powf(-model.attenuation_db_per_m * (pose.distance - model.reference_distance).max(0.0) / 20.0);
        let fc = air_absorption_cutoff(pose.distance, model);
        let air: Vec<f64> = if fc >= AIR_CUTOFF_MAX_HZ {
            vec![1.0]
        } else {
            let a = (-std::f64::consts::TAU * fc / fs).exp();
            (0..len).map(|n| (1.0 - a) * a.powi(n as i32)).collect()
        };
        let itd = itd_delays(0.55, pose.azimuth, pose.elevation);
        let d = [itd.left_s, itd.right_s][ear] * fs;
        let mut delay = vec![0.0; d as usize + 2];
        delay[d as usize] = 1.0 - d.fract();
        delay[d as usize + 1] = d.fract();
        let i = set.select(pose.azimuth.to_degrees().rem_euclid(360.0), pose.elevation.to_degrees());
        let h: Vec<f64> = [set.left(i), set.right(i)][ear].iter().map(|&v| v as f64).collect();
        let ild = near_field_ild_gains(pose.distance, pose.azimuth, model);
        let shelf_db = [ild.left_db, ild.right_db][ear];
        let shelf = if shelf_db == 0.0 {
            vec![1.0]
        } else {
            let c = BiquadCoeffs::design(BiquadKind::Highshelf, 2000.0, std::f64::consts::FRAC_1_SQRT_2, shelf_db, fs).unwrap();
            biquad_ir(&c, len)
        };
        let mut out = conv(&conv(&conv(&air, &delay), &h), &shelf);
        out.truncate(len);
        out.iter_mut().for_each(|v| *v *= g);
        out
    }

    #[test]
    fn zero_in_zero_out() {
        let mut s = full(spherical_head_set(48_000));
        let [l, r] = s.spatialize_block(&[0.0; N], &SourcePose::new(0.4, 0.1, 2.0), &DistanceModel::default());
        assert!(l.iter().chain(&r).all(|&v| v == 0.0));
        assert!(s.tails().iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn identity_chain_passes_an_impulse() {
        let mut s = full(HrirSet::identity(48_000, vec![Direction::new(0.0, 0.0)]));
        let mut x = vec![0.0; N];
        x[0] = 1.0;
        let [l, r] = s.spatialize_block(&x, &SourcePose::new(0.0, 0.0, 1.0), &DistanceModel::default());
        assert_eq!(l, x);
        assert_eq!(r, x);
    }

    #[test]
    fn matches_composite_filter() {
        let set = spherical_head_set(48_000);
        let model = DistanceModel::default();
        let x = noise(48_000, 7);
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        for pose in [
            SourcePose::new(0.5, 0.0, 1.2),
            SourcePose::new(-1.9, 0.3, 0.4),
            SourcePose::new(2.2, -0.4, 40.0),
        ] {
            let mut s = full(set.clone());
            let out = run(&mut s, &x, &pose, &model);
            for ear in 0..2 {
                let h = composite(&set, &pose, &model, ear, 2048);
                let y = conv(&xf[..8192], &h);
                let err = (0..8192).map(|i| (y[i] - out[ear][i] as f64).abs()).fold(0.0, f64::max);
                assert!(err < 1e-5, "pose {pose:?} ear {ear}: {err}");
            }
        }
    }

    #[test]
    fn block_size_does_not_matter() {
        let set = spherical_head_set(48_000);
        let model = DistanceModel::default();
        let x = noise(N * 40, 3);
        let pose = SourcePose::new(1.0, 0.2, 0.9);
        let blocked = run(&mut full(set.clone()), &x, &pose, &model);
        let whole = full(set).spatialize_block(&x, &pose, &model);
        for ear in 0..2 {
            let err = blocked[ear].iter().zip(&whole[ear]).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
            assert!(err < 1e-6, "{err}");
        }
    }

    #[test]
    fn mirrored_pose_swaps_ears_exactly() {
        let set = spherical_head_set(48_000);
        let model = DistanceModel::default();
        let x = noise(N * 20, 11);
        for az in [0.3, 60f64.to_radians(), 1.7, 3.0] {
            let a = run(&mut full(set.clone()), &x, &SourcePose::new(az, 0.2, 0.8), &model);
            let b = run(&mut full(set.clone()), &x, &SourcePose::new(-az, 0.2, 0.8), &model);
            assert_eq!(a[0], b[1]);
            assert_eq!(a[1], b[0]);
        }
    }

    #[test]
    fn linear_in_the_input() {
        let set = spherical_head_set(48_000);
        let model = DistanceModel::default();
        let x = noise(N * 10, 5);
        let pose = SourcePose::new(0.8, 0.0, 20.0);
        let base = run(&mut full(set.clone()), &x, &pose, &model);
        for scale in [0.25f32, -2.0] {
            let xs: Vec<f32> = x.iter().map(|v| v * scale).collect();
            let scaled = run(&mut full(set.clone()), &xs, &pose, &model);
            for ear in 0..2 {
                for (a, b) in base[ear].iter().zip(&scaled[ear]) {
                    assert!((a * scale - b).abs() < 1e-6);
                }
            }
        }
    }

    fn seam_check(mut s: SpatializerState) {
        let model = DistanceModel::default();
        let fs = 48_000.0;
        let x: Vec<f32> = (0..N * 20).map(|n| 0.5 * (std::f64::consts::TAU * 440.0 * n as f64 / fs).sin() as f32).collect();
        let mut out = [Vec::new(), Vec::new()];
        for (b, block) in x.chunks(N).enumerate() {
            let az = if b < 10 { 0.0 } else { 5f64.to_radians() };
            let [l, r] = s.spatialize_block(block, &SourcePose::new(az, 0.0, 2.0), &model);
            out[0].extend(l);
            out[1].extend(r);
        }
        for ch in &out {
            let step = |i: usize| (ch[i] - ch[i - 1]).abs();
            let within = (9 * N + 1..11 * N).filter(|i| i % N != 0).map(step).fold(0.0f32, f32::max);
            for seam in [10 * N, 11 * N] {
                assert!(step(seam) <= 2.0 * within, "seam {seam}: {} vs {within}", step(seam));
            }
        }
    }

    #[test]
    fn direction_change_has_no_click() {
        seam_check(full(spherical_head_set(48_000)));
    }

    #[test]
    fn direction_change_has_no_click_in_iir_mode() {
        let set = Arc::new(spherical_head_set(48_000));
        let fits = Arc::new(super::super::iir_fit::fit_iir_approximation(&set, 4).unwrap());
        seam_check(SpatializerState::new(set, SpatialMode::HighPerformance(fits), 0.55).unwrap());
    }

    #[test]
    fn left_source_is_louder_on_the_left() {
        let model = DistanceModel::default();
        let x = noise(N * 40, 9);
        let rms = |v: &[f32]| (v.iter().map(|s| (*s as f64).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        let listener = ListenerPose {
            position: Vec2::ZERO,
            yaw: 0.0,
        };
        let pose = SourcePose::from_positions(&listener, Vec2::new(-2.0, 0.0), 0.0);
        assert!((pose.azimuth - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let [l, r] = run(&mut full(spherical_head_set(48_000)), &x, &pose, &model);
        assert!(rms(&l) > rms(&r));
    }

    #[test]
    fn pose_from_positions_follows_yaw() {
        let turned = ListenerPose {
            position: Vec2::new(1.0, 1.0),
            yaw: std::f64::consts::FRAC_PI_2,
        };
        // facing -x after a quarter turn left, so a source further along -x is ahead
        let p = SourcePose::from_positions(&turned, Vec2::new(-2.0, 1.0), 0.0);
        assert!(p.azimuth.abs() < 1e-12 && (p.distance - 3.0).abs() < 1e-12);
        let p = SourcePose::from_positions(&turned, Vec2::new(1.0, 1.0), 1.0);
        assert!((p.elevation - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_fits() {
        let a = Arc::new(spherical_head_set(48_000));
        let b = HrirSet::identity(48_000, vec![Direction::new(0.0, 0.0)]);
        let fits = Arc::new(super::super::iir_fit::fit_iir_approximation(&b, 4).unwrap());
        assert_eq!(
            SpatializerState::new(a, SpatialMode::HighPerformance(fits), 0.55).unwrap_err(),
            SpatializerError::FitMismatch
        );
    }
}

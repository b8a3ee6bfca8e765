//! Low-order IIR approximations of HRIR magnitude responses.
//!
//! Each ear of each direction becomes an overall gain followed by
//! `order / 2` peaking sections. Only magnitude is fitted, as log-magnitude
//! on a log-spaced grid between 300 Hz and 12 kHz; the spatializer adds the
//! interaural delay separately.
//!
//! The optimizer starts from the best pure-gain fit, places each section at
//! the largest remaining spectral deviation, then runs coordinate descent over
//! (log fc, log Q, gain) with shrinking steps. The overall gain is solved in
//! closed form at every evaluation (it is the mean residual). Only improving
//! moves are accepted, so a fit can never be worse than its pure-gain start;
//! a fit that ends non-finite or no better than flat falls back to pure gain
//! with a warning.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::hrir::{Direction, HrirSet};
use crate::dsp::{math, BiquadCascade, BiquadCoeffs, BiquadKind};

pub const BAND_HZ: [f64; 2] = [300.0, 12_000.0];
pub const GRID_POINTS: usize = 64;
pub const ORDERS: [usize; 3] = [4, 6, 8];

const MAX_SWEEPS: usize = 400;
const MIN_GAIN_STEP_DB: f64 = 1e-4;
const FC_LIMITS: [f64; 2] = [20.0, 0.45];
const Q_LIMITS: [f64; 2] = [0.1, 20.0];
const GAIN_LIMIT_DB: f64 = 40.0;
/// Floor applied to |H|^2 before taking logs.
const POWER_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("order must be one of 4, 6 or 8, got {0}")]
    Order(usize),
    #[error("sample rate {0} Hz is too low for the 300 Hz - 12 kHz fit band")]
    SampleRate(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSection {
    pub fc: f64,
    pub q: f64,
    pub gain_db: f64,
}

impl PeakSection {
    pub fn coeffs(&self, fs: f64) -> BiquadCoeffs {
        BiquadCoeffs::design(BiquadKind::Peaking, self.fc, self.q, self.gain_db, fs).expect("fitted section in range")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarFit {
    pub gain_db: f64,
    pub sections: Vec<PeakSection>,
    /// RMS log-magnitude error over the fit grid, dB.
    pub error_db: f64,
    /// Error of the best pure-gain fit, for comparison.
    pub flat_error_db: f64,
    #[serde(default)]
    pub fallback: bool,
}

impl EarFit {
    pub fn cascade(&self, fs: f64) -> BiquadCascade {
        let coeffs: Vec<BiquadCoeffs> = self.sections.iter().map(|s| s.coeffs(fs)).collect();
        BiquadCascade::new(math::db_to_gain(self.gain_db), &coeffs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionFit {
    pub azimuth: f64,
    pub elevation: f64,
    pub left: EarFit,
    pub right: EarFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitWarning {
    pub direction: usize,
    pub ear: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IirFitSet {
    pub name: String,
    pub sample_rate: u32,
    pub order: usize,
    pub band_hz: [f64; 2],
    pub directions: Vec<DirectionFit>,
    #[serde(default)]
    pub warnings: Vec<FitWarning>,
}

impl IirFitSet {
    /// True when the fits were made for exactly this set's grid and rate.
    pub fn matches(&self, set: &HrirSet) -> bool {
        self.sample_rate == set.sample_rate()
            && self.directions.len() == set.grid().len()
            && self
                .directions
                .iter()
                .zip(set.grid())
                .all(|(f, d)| f.azimuth == d.azimuth && f.elevation == d.elevation)
    }

    pub fn worst_error_db(&self) -> f64 {
        self.directions
            .iter()
            .flat_map(|d| [d.left.error_db, d.right.error_db])
            .fold(0.0, f64::max)
    }
}

/// `n` frequencies spaced evenly in log between `lo` and `hi`, inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (math::log10(lo), math::log10(hi));
    (0..n)
        .map(|i| math::pow(10.0, a + (b - a) * i as f64 / (n - 1).max(1) as f64))
        .collect()
}

/// Magnitude response of an FIR in dB at each frequency.
pub fn fir_response_db(ir: &[f32], freqs: &[f64], fs: f64) -> Vec<f64> {
    freqs
        .iter()
        .map(|&f| {
            let w = std::f64::consts::TAU * f / fs;
            let (mut re, mut im) = (0.0, 0.0);
            for (n, &h) in ir.iter().enumerate() {
                let ph = w * n as f64;
                re += h as f64 * math::cos(ph);
                im -= h as f64 * math::sin(ph);
            }
            10.0 * math::log10((re * re + im * im).max(POWER_FLOOR))
        })
        .collect()
}

struct Grid {
    fs: f64,
    c1: Vec<f64>,
    s1: Vec<f64>,
    c2: Vec<f64>,
    s2: Vec<f64>,
}

impl Grid {
    fn new(freqs: &[f64], fs: f64) -> Self {
        let w: Vec<f64> = freqs.iter().map(|f| std::f64::consts::TAU * f / fs).collect();
        Self {
            fs,
            c1: w.iter().map(|&w| math::cos(w)).collect(),
            s1: w.iter().map(|&w| math::sin(w)).collect(),
            c2: w.iter().map(|&w| math::cos(2.0 * w)).collect(),
            s2: w.iter().map(|&w| math::sin(2.0 * w)).collect(),
        }
    }

    fn section_db(&self, p: &[f64; 3], out: &mut [f64]) {
        let sec = params_to_section(p);
        let c = sec.coeffs(self.fs);
        for (i, o) in out.iter_mut().enumerate() {
            let nr = c.b0 + c.b1 * self.c1[i] + c.b2 * self.c2[i];
            let ni = c.b1 * self.s1[i] + c.b2 * self.s2[i];
            let dr = 1.0 + c.a1 * self.c1[i] + c.a2 * self.c2[i];
            let di = c.a1 * self.s1[i] + c.a2 * self.s2[i];
            *o = 10.0 * math::log10(((nr * nr + ni * ni) / (dr * dr + di * di)).max(POWER_FLOOR));
        }
    }
}

fn clamp_params(p: &mut [f64; 3], fs: f64) {
    p[0] = p[0].clamp(math::log(FC_LIMITS[0]), math::log(FC_LIMITS[1] * fs));
    p[1] = p[1].clamp(math::log(Q_LIMITS[0]), math::log(Q_LIMITS[1]));
    p[2] = p[2].clamp(-GAIN_LIMIT_DB, GAIN_LIMIT_DB);
}

fn params_to_section(p: &[f64; 3]) -> PeakSection {
    PeakSection {
        fc: math::exp(p[0]),
        q: math::exp(p[1]),
        gain_db: p[2],
    }
}

/// Optimal overall gain and RMS error for a model without that gain.
fn score(target: &[f64], model: &[f64]) -> (f64, f64) {
    let n = target.len() as f64;
    let g = target.iter().zip(model).map(|(t, m)| t - m).sum::<f64>() / n;
    let e = target.iter().zip(model).map(|(t, m)| (m + g - t).powi(2)).sum::<f64>() / n;
    (g, math::sqrt(e))
}

/// Fits `sections` peaking biquads plus a gain to a dB target sampled at `freqs`.
pub fn fit_magnitude(freqs: &[f64], target_db: &[f64], fs: f64, sections: usize) -> EarFit {
    let n = freqs.len();
    let grid = Grid::new(freqs, fs);
    let zeros = vec![0.0; n];
    let (flat_gain, flat_error) = score(target_db, &zeros);

    let mut params: Vec<[f64; 3]> = Vec::with_capacity(sections);
    let mut parts: Vec<Vec<f64>> = Vec::with_capacity(sections);
    let mut model = zeros.clone();
    let mut err = flat_error;
    let mut scratch = vec![0.0; n];

    // seed each section at the largest remaining deviation
    for _ in 0..sections {
        let (g, _) = score(target_db, &model);
        let (idx, dev) = target_db
            .iter()
            .zip(&model)
            .map(|(t, m)| t - m - g)
            .enumerate()
            .fold((0, 0.0f64), |best, (i, r)| if r.abs() > best.1.abs() { (i, r) } else { best });
        let mut p = [math::log(freqs[idx]), math::log(2.0), dev];
        clamp_params(&mut p, fs);
        grid.section_db(&p, &mut scratch);
        let trial: Vec<f64> = model.iter().zip(&scratch).map(|(m, s)| m + s).collect();
        let (_, e) = score(target_db, &trial);
        if e < err {
            err = e;
            model = trial;
        } else {
            p[2] = 0.0;
            grid.section_db(&p, &mut scratch);
            model.iter_mut().zip(&scratch).for_each(|(m, s)| *m += s);
        }
        parts.push(scratch.clone());
        params.push(p);
    }

    let mut steps = [0.2, 0.3, 2.0];
    let mut sweeps = 0;
    while sections > 0 && sweeps < MAX_SWEEPS && steps[2] >= MIN_GAIN_STEP_DB {
        sweeps += 1;
        let mut improved = false;
        for s in 0..sections {
            for j in 0..3 {
                for dir in [1.0, -1.0] {
                    let mut p = params[s];
                    p[j] += dir * steps[j];
                    clamp_params(&mut p, fs);
                    if p == params[s] {
                        continue;
                    }
                    grid.section_db(&p, &mut scratch);
                    let trial: Vec<f64> = (0..n).map(|i| model[i] - parts[s][i] + scratch[i]).collect();
                    let (_, e) = score(target_db, &trial);
                    if e < err {
                        err = e;
                        model = trial;
                        params[s] = p;
                        parts[s].copy_from_slice(&scratch);
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
        }
    }

    let (gain, err) = score(target_db, &model);
    if !err.is_finite() || !gain.is_finite() || (sections > 0 && err > flat_error) {
        return EarFit {
            gain_db: flat_gain,
            sections: Vec::new(),
            error_db: flat_error,
            flat_error_db: flat_error,
            fallback: true,
        };
    }
    EarFit {
        gain_db: gain,
        sections: params.iter().map(|p| params_to_section(p)).collect(),
        error_db: err,
        flat_error_db: flat_error,
        fallback: false,
    }
}

fn fit_direction(set: &HrirSet, i: usize, freqs: &[f64], sections: usize) -> DirectionFit {
    let fs = set.sample_rate() as f64;
    let Direction { azimuth, elevation } = set.grid()[i];
    let fit = |ir: &[f32]| fit_magnitude(freqs, &fir_response_db(ir, freqs, fs), fs, sections);
    DirectionFit {
        azimuth,
        elevation,
        left: fit(set.left(i)),
        right: fit(set.right(i)),
    }
}

/// Fits every direction and ear of `set`, spreading directions over the
/// available cores.
pub fn fit_iir_approximation(set: &HrirSet, order: usize) -> Result<IirFitSet, FitError> {
    if !ORDERS.contains(&order) {
        return Err(FitError::Order(order));
    }
    if (set.sample_rate() as f64) * FC_LIMITS[1] <= BAND_HZ[1] {
        return Err(FitError::SampleRate(set.sample_rate()));
    }
    let freqs = log_grid(BAND_HZ[0], BAND_HZ[1], GRID_POINTS);
    let count = set.grid().len();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(count);
    let mut directions: Vec<Option<DirectionFit>> = vec![None; count];
    std::thread::scope(|scope| {
        for (w, chunk) in directions.chunks_mut(count.div_ceil(workers)).enumerate() {
            let freqs = &freqs;
            let start = w * count.div_ceil(workers);
            scope.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(fit_direction(set, start + k, freqs, order / 2));
                }
            });
        }
    });
    let directions: Vec<DirectionFit> = directions.into_iter().map(|d| d.expect("every direction fitted")).collect();
    let mut warnings = Vec::new();
    for (i, d) in directions.iter().enumerate() {
        for (ear, fit) in [("left", &d.left), ("right", &d.right)] {
            if fit.fallback {
                warnings.push(FitWarning {
                    direction: i,
                    ear: ear.to_owned(),
                    message: format!(
                        "direction {i} ({} deg, {} deg) {ear} ear did not converge; using flat gain",
                        d.azimuth, d.elevation
                    ),
                });
            }
        }
    }
    Ok(IirFitSet {
        name: set.name().to_owned(),
        sample_rate: set.sample_rate(),
        order,
        band_hz: BAND_HZ,
        directions,
        warnings,
    })
}

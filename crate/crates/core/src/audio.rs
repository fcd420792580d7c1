//! Frame-aligned audio features: MFCCs (with deltas) for the generator and
//! log-mel spectrograms for the phoneme predictor.
//!
//! One feature frame is produced per motion frame. Frame `t` covers
//! `[t/fps, (t+1)/fps)` and its analysis window is centred on that interval.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::Audio;

const LOG_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub frame_rate: f64,
    pub window_secs: f64,
    pub mel_bands: usize,
    pub pre_emphasis: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub base: FeatureConfig,
    pub coefficients: usize,
    pub deltas: bool,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            base: FeatureConfig {
                frame_rate: 15.0,
                window_secs: 0.025,
                mel_bands: 26,
                pre_emphasis: 0.97,
            },
            coefficients: 13,
            deltas: true,
        }
    }
}

impl MfccConfig {
    /// Feature width `M`.
    pub fn width(&self) -> usize {
        if self.deltas {
            2 * self.coefficients
        } else {
            self.coefficients
        }
    }
}

impl FeatureConfig {
    pub fn spectrogram_default() -> Self {
        Self {
            frame_rate: 15.0,
            window_secs: 0.025,
            mel_bands: 40,
            pre_emphasis: 0.97,
        }
    }
}

/// Number of motion frames the audio spans.
pub fn frame_count(audio: &Audio, frame_rate: f64) -> usize {
    (audio.samples.len() as f64 * frame_rate / f64::from(audio.sample_rate)).round() as usize
}

fn check_length(audio: &Audio, frames: usize, frame_rate: f64) -> Result<()> {
    if frames == 0 || frame_count(audio, frame_rate) < frames {
        let needed = (frames.max(1) as f64 * f64::from(audio.sample_rate) / frame_rate).ceil() as usize;
        return Err(Error::TooShortAudio {
            needed,
            got: audio.samples.len(),
        });
    }
    Ok(())
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular HTK-style filters, `bands × (n_fft/2 + 1)`.
fn mel_filterbank(bands: usize, n_fft: usize, sample_rate: f64) -> Vec<Vec<f64>> {
    let bins = n_fft / 2 + 1;
    let (lo, hi) = (hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0));
    let centers: Vec<f64> = (0..bands + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (bands + 1) as f64))
        .collect();
    let bin_hz = sample_rate / n_fft as f64;
    (0..bands)
        .map(|m| {
            let (l, c, r) = (centers[m], centers[m + 1], centers[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= l || f >= r {
                        0.0
                    } else if f <= c {
                        (f - l) / (c - l)
                    } else {
                        (r - f) / (r - c)
                    }
                })
                .collect()
        })
        .collect()
}

/// Log mel energies, `frames × bands`, row-major.
pub fn log_mel_spectrogram(audio: &Audio, frames: usize, cfg: &FeatureConfig) -> Result<Vec<f64>> {
    check_length(audio, frames, cfg.frame_rate)?;
    let sr = f64::from(audio.sample_rate);
    let win = ((cfg.window_secs * sr).round() as usize).max(2);
    let n_fft = win.next_power_of_two();
    let bank = mel_filterbank(cfg.mel_bands, n_fft, sr);
    let hann: Vec<f64> = (0..win)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (win - 1) as f64).cos())
        .collect();

    let x = &audio.samples;
    let emph = |i: isize| -> f64 {
        if i < 0 || i as usize >= x.len() {
            return 0.0;
        }
        let i = i as usize;
        let prev = if i == 0 { 0.0 } else { x[i - 1] };
        x[i] - cfg.pre_emphasis * prev
    };

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut out = Vec::with_capacity(frames * cfg.mel_bands);
    let mut power = vec![0.0; n_fft / 2 + 1];
    for t in 0..frames {
        let center = ((t as f64 + 0.5) * sr / cfg.frame_rate).round() as isize;
        let start = center - (win / 2) as isize;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = if i < win {
                Complex::new(emph(start + i as isize) * hann[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr() / n_fft as f64;
        }
        for filt in &bank {
            let e: f64 = filt.iter().zip(&power).map(|(w, p)| w * p).sum();
            out.push(e.max(LOG_FLOOR).ln());
        }
    }
    Ok(out)
}

/// MFCCs (plus regression deltas when configured), `frames × width`.
pub fn compute_mfcc(audio: &Audio, frames: usize, cfg: &MfccConfig) -> Result<Vec<f64>> {
    let bands = cfg.base.mel_bands;
    let mel = log_mel_spectrogram(audio, frames, &cfg.base)?;
    let nc = cfg.coefficients.min(bands);
    let mut cep = vec![0.0; frames * nc];
    for t in 0..frames {
        let row = &mel[t * bands..(t + 1) * bands];
        for k in 0..nc {
            let scale = if k == 0 {
                (1.0 / bands as f64).sqrt()
            } else {
                (2.0 / bands as f64).sqrt()
            };
            let s: f64 = row
                .iter()
                .enumerate()
                .map(|(n, v)| v * (std::f64::consts::PI * k as f64 * (n as f64 + 0.5) / bands as f64).cos())
                .sum();
            cep[t * nc + k] = scale * s;
        }
    }
    if !cfg.deltas {
        return Ok(cep);
    }
    let width = 2 * nc;
    let mut out = vec![0.0; frames * width];
    let at = |t: isize, k: usize| cep[(t.clamp(0, frames as isize - 1) as usize) * nc + k];
    for t in 0..frames {
        for k in 0..nc {
            out[t * width + k] = cep[t * nc + k];
            let ti = t as isize;
            let d = (at(ti + 1, k) - at(ti - 1, k)) + 2.0 * (at(ti + 2, k) - at(ti - 2, k));
            out[t * width + nc + k] = d / 10.0;
        }
    }
    Ok(out)
}

/// Per-channel mean and standard deviation used to whiten features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureNorm {
    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            std: vec![1.0; width],
        }
    }

    /// Fit over row-major `rows × width` blocks.
    pub fn fit<'a>(blocks: impl IntoIterator<Item = &'a [f64]>, width: usize) -> Self {
        let mut sum = vec![0.0; width];
        let mut sq = vec![0.0; width];
        let mut n = 0usize;
        for b in blocks {
            for row in b.chunks_exact(width) {
                for k in 0..width {
                    sum[k] += row[k];
                    sq[k] += row[k] * row[k];
                }
                n += 1;
            }
        }
        if n == 0 {
            return Self::identity(width);
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| (q / n as f64 - m * m).max(0.0).sqrt().max(1e-6))
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, data: &[f64]) -> Vec<f64> {
        let w = self.mean.len();
        data.chunks_exact(w)
            .flat_map(|row| row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, secs: f64, sr: u32) -> Audio {
        let n = (secs * f64::from(sr)).round() as usize;
        Audio {
            samples: (0..n)
                .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / f64::from(sr)).sin())
                .collect(),
            sample_rate: sr,
        }
    }

    #[test]
    fn frame_count_for_window() {
        let a = tone(440.0, 34.0 / 15.0, 16000);
        assert_eq!(frame_count(&a, 15.0), 34);
        let m = compute_mfcc(&a, 34, &MfccConfig::default()).unwrap();
        assert_eq!(m.len(), 34 * 26);
    }

    #[test]
    fn silence_is_stationary() {
        let a = Audio {
            samples: vec![0.0; 16000],
            sample_rate: 16000,
        };
        let cfg = MfccConfig::default();
        let m = compute_mfcc(&a, 15, &cfg).unwrap();
        let w = cfg.width();
        for t in 1..15 {
            assert_eq!(&m[t * w..(t + 1) * w], &m[..w]);
        }
        // c0 carries the log floor; the others vanish.
        let floor = LOG_FLOOR.ln() * (cfg.base.mel_bands as f64).sqrt();
        assert!((m[0] - floor).abs() < 1e-9);
        assert!(m[1..w].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn tones_are_distinguishable() {
        let cfg = MfccConfig::default();
        let a = compute_mfcc(&tone(440.0, 1.0, 16000), 15, &cfg).unwrap();
        let b = compute_mfcc(&tone(880.0, 1.0, 16000), 15, &cfg).unwrap();
        let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(d > 1.0, "distance {d}");
    }

    #[test]
    fn too_short() {
        let a = tone(440.0, 0.5, 16000);
        assert!(matches!(
            compute_mfcc(&a, 34, &MfccConfig::default()),
            Err(Error::TooShortAudio { .. })
        ));
    }

    #[test]
    fn norm_whitening() {
        let data = vec![1.0, 10.0, 3.0, 30.0];
        let n = FeatureNorm::fit([&data[..]], 2);
        let w = n.apply(&data);
        assert!((w[0] + 1.0).abs() < 1e-12 && (w[2] - 1.0).abs() < 1e-12);
    }
}

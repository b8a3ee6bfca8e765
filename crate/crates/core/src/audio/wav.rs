//! RIFF/WAVE reading and writing.
//!
//! Reads PCM 16-bit, PCM 24-bit and IEEE float 32-bit, plain or wrapped in
//! `WAVE_FORMAT_EXTENSIBLE`. Writes PCM 16-bit or float 32-bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::buffer::{AudioBuffer, BufferError};

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WavError {
    #[error("not a RIFF/WAVE file")]
    NotWave,
    #[error("truncated file at byte offset {offset}: {what}")]
    Truncated { offset: usize, what: &'static str },
    #[error("unsupported codec: format tag 0x{tag:04X}")]
    UnsupportedCodec { tag: u16 },
    #[error("unsupported sample format: format tag 0x{tag:04X} with {bits} bits per sample")]
    UnsupportedBits { tag: u16, bits: u16 },
    #[error("malformed fmt chunk: {0}")]
    BadFormat(&'static str),
    #[error("data chunk before fmt chunk")]
    DataBeforeFormat,
    #[error("no data chunk")]
    MissingData,
    #[error(transparent)]
    Buffer(#[from] BufferError),
}

/// Sample encoding used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitDepth {
    Pcm16,
    #[default]
    Float32,
}

impl std::str::FromStr for BitDepth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pcm16" => Ok(Self::Pcm16),
            "float32" => Ok(Self::Float32),
            other => Err(format!("unknown depth {other:?}, expected pcm16 or float32")),
        }
    }
}

/// Header facts about a WAV payload, without decoding samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavInfo {
    pub channels: u16,
    pub sample_rate: u32,
    pub frames: usize,
}

impl WavInfo {
    pub fn duration_secs(&self) -> f64 {
        self.frames as f64 / self.sample_rate as f64
    }
}

struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn parse(bytes: &[u8]) -> Result<(Format, &[u8]), WavError> {
    if bytes.len() < 12 {
        if bytes.len() >= 4 && &bytes[..4] != b"RIFF" {
            return Err(WavError::NotWave);
        }
        return Err(WavError::Truncated {
            offset: bytes.len(),
            what: "RIFF header",
        });
    }
    if &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::NotWave);
    }

    let mut format: Option<Format> = None;
    let mut pos = 12;
    while pos < bytes.len() {
        if pos + 8 > bytes.len() {
            return Err(WavError::Truncated {
                offset: bytes.len(),
                what: "chunk header",
            });
        }
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body.checked_add(size).ok_or(WavError::Truncated {
            offset: bytes.len(),
            what: "chunk body",
        })?;
        if end > bytes.len() {
            return Err(WavError::Truncated {
                offset: bytes.len(),
                what: if id == b"data" { "data chunk" } else { "chunk body" },
            });
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(WavError::BadFormat("fmt chunk shorter than 16 bytes"));
                }
                let mut tag = read_u16(bytes, body);
                let channels = read_u16(bytes, body + 2);
                let sample_rate = read_u32(bytes, body + 4);
                let bits = read_u16(bytes, body + 14);
                if tag == FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(WavError::BadFormat("extensible fmt chunk shorter than 40 bytes"));
                    }
                    // first two bytes of the sub-format GUID carry the real tag
                    tag = read_u16(bytes, body + 24);
                }
                if channels == 0 {
                    return Err(WavError::BadFormat("zero channels"));
                }
                if sample_rate == 0 {
                    return Err(WavError::BadFormat("zero sample rate"));
                }
                format = Some(Format {
                    tag,
                    channels,
                    sample_rate,
                    bits,
                });
            }
            b"data" => {
                let fmt = format.ok_or(WavError::DataBeforeFormat)?;
                match (fmt.tag, fmt.bits) {
                    (FORMAT_PCM, 16) | (FORMAT_PCM, 24) | (FORMAT_IEEE_FLOAT, 32) => {}
                    (FORMAT_PCM, bits) | (FORMAT_IEEE_FLOAT, bits) => {
                        return Err(WavError::UnsupportedBits { tag: fmt.tag, bits })
                    }
                    (tag, _) => return Err(WavError::UnsupportedCodec { tag }),
                }
                let frame_bytes = fmt.channels as usize * (fmt.bits as usize / 8);
                if size % frame_bytes != 0 {
                    return Err(WavError::Truncated {
                        offset: body + size - size % frame_bytes,
                        what: "partial sample frame in data chunk",
                    });
                }
                return Ok((fmt, &bytes[body..end]));
            }
            _ => {}
        }
        // chunks are word aligned
        pos = end + (size & 1);
    }
    Err(WavError::MissingData)
}

/// Reads the header without converting samples.
pub fn probe_wav(bytes: &[u8]) -> Result<WavInfo, WavError> {
    let (fmt, data) = parse(bytes)?;
    let frame_bytes = fmt.channels as usize * (fmt.bits as usize / 8);
    Ok(WavInfo {
        channels: fmt.channels,
        sample_rate: fmt.sample_rate,
        frames: data.len() / frame_bytes,
    })
}

pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, WavError> {
    let (fmt, data) = parse(bytes)?;
    let nch = fmt.channels as usize;
    let width = fmt.bits as usize / 8;
    let frames = data.len() / (nch * width);
    let mut channels = vec![Vec::with_capacity(frames); nch];

    for (i, sample) in data.chunks_exact(width).enumerate() {
        let v = match (fmt.tag, fmt.bits) {
            (FORMAT_PCM, 16) => i16::from_le_bytes([sample[0], sample[1]]) as f32 / 32_768.0,
            (FORMAT_PCM, 24) => {
                // sign-extend through the top byte of an i32
                let raw = i32::from_le_bytes([0, sample[0], sample[1], sample[2]]) >> 8;
                raw as f32 / 8_388_608.0
            }
            _ => f32::from_le_bytes([sample[0], sample[1], sample[2], sample[3]]),
        };
        channels[i % nch].push(v);
    }
    Ok(AudioBuffer::new(fmt.sample_rate, channels)?)
}

/// Quantizes one sample for 16-bit output: `round(x * 32767)`, halves away
/// from zero, clamped to the i16 range.
#[inline]
pub fn quantize_pcm16(x: f32) -> i16 {
    let scaled = (x as f64 * 32_767.0).round();
    if scaled.is_nan() {
        0
    } else {
        scaled.clamp(-32_768.0, 32_767.0) as i16
    }
}

pub fn encode_wav(buf: &AudioBuffer, depth: BitDepth) -> Vec<u8> {
    let nch = buf.num_channels() as u16;
    let (tag, bits) = match depth {
        BitDepth::Pcm16 => (FORMAT_PCM, 16u16),
        BitDepth::Float32 => (FORMAT_IEEE_FLOAT, 32u16),
    };
    let block_align = nch * bits / 8;
    let data_len = buf.frames() * block_align as usize;
    let fmt_len: u32 = if depth == BitDepth::Float32 { 18 } else { 16 };
    // float files carry the cbSize field and a fact chunk
    let fact_len = if depth == BitDepth::Float32 { 12 } else { 0 };
    let riff_len = 4 + (8 + fmt_len) + fact_len + 8 + data_len as u32 + (data_len as u32 & 1);

    let mut out = Vec::with_capacity(riff_len as usize + 8);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&riff_len.to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&fmt_len.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&nch.to_le_bytes());
    out.extend_from_slice(&buf.sample_rate().to_le_bytes());
    out.extend_from_slice(&(buf.sample_rate() * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    if depth == BitDepth::Float32 {
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(b"fact");
        out.extend_from_slice(&4u32.to_le_bytes());
        out.extend_from_slice(&(buf.frames() as u32).to_le_bytes());
    }
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for i in 0..buf.frames() {
        for c in buf.channels() {
            match depth {
                BitDepth::Pcm16 => out.extend_from_slice(&quantize_pcm16(c[i]).to_le_bytes()),
                BitDepth::Float32 => out.extend_from_slice(&c[i].to_le_bytes()),
            }
        }
    }
    if data_len & 1 == 1 {
        out.push(0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm16_file(samples: &[i16], channels: u16) -> Vec<u8> {
        let data: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
        wav_with(FORMAT_PCM, 16, channels, &data)
    }

    fn wav_with(tag: u16, bits: u16, channels: u16, data: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(b"RIFF");
        v.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        v.extend_from_slice(b"WAVEfmt ");
        v.extend_from_slice(&16u32.to_le_bytes());
        v.extend_from_slice(&tag.to_le_bytes());
        v.extend_from_slice(&channels.to_le_bytes());
        v.extend_from_slice(&48_000u32.to_le_bytes());
        v.extend_from_slice(&(48_000u32 * channels as u32 * bits as u32 / 8).to_le_bytes());
        v.extend_from_slice(&(channels * bits / 8).to_le_bytes());
        v.extend_from_slice(&bits.to_le_bytes());
        v.extend_from_slice(b"data");
        v.extend_from_slice(&(data.len() as u32).to_le_bytes());
        v.extend_from_slice(data);
        v
    }

    #[test]
    fn pcm16_scaling() {
        let buf = decode_wav(&pcm16_file(&[0x4000], 1)).unwrap();
        assert_eq!(buf.channel(0), &[0.5]);
        let buf = decode_wav(&pcm16_file(&[-32768, 32767], 1)).unwrap();
        assert_eq!(buf.channel(0)[0], -1.0);
    }

    #[test]
    fn pcm24_scaling_and_sign() {
        // 0x400000 = 0.5, 0xC00000 = -0.5
        let data = [0x00, 0x00, 0x40, 0x00, 0x00, 0xC0];
        let buf = decode_wav(&wav_with(FORMAT_PCM, 24, 1, &data)).unwrap();
        assert_eq!(buf.channel(0), &[0.5, -0.5]);
    }

    #[test]
    fn empty_data_is_valid() {
        let buf = decode_wav(&pcm16_file(&[], 2)).unwrap();
        assert_eq!(buf.frames(), 0);
        assert_eq!(buf.num_channels(), 2);
    }

    #[test]
    fn interleaving_is_split() {
        let buf = decode_wav(&pcm16_file(&[16384, -16384, 8192, 0], 2)).unwrap();
        assert_eq!(buf.channel(0), &[0.5, 0.25]);
        assert_eq!(buf.channel(1), &[-0.5, 0.0]);
    }

    #[test]
    fn mp3_tag_rejected() {
        let err = decode_wav(&wav_with(0x0055, 16, 1, &[0, 0])).unwrap_err();
        assert_eq!(err, WavError::UnsupportedCodec { tag: 0x0055 });
        assert!(err.to_string().contains("0x0055"));
    }

    #[test]
    fn truncated_reports_offset() {
        let mut f = pcm16_file(&[1, 2, 3, 4], 1);
        f.truncate(f.len() - 3);
        match decode_wav(&f).unwrap_err() {
            WavError::Truncated { offset, .. } => assert_eq!(offset, f.len()),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(decode_wav(b"RIFF"), Err(WavError::Truncated { offset: 4, .. })));
        assert_eq!(decode_wav(b"not a wave file at all"), Err(WavError::NotWave));
    }

    #[test]
    fn quantization_rule() {
        assert_eq!(quantize_pcm16(0.5), 16384);
        assert_eq!(quantize_pcm16(-0.5), -16384);
        assert_eq!(quantize_pcm16(0.0), 0);
        assert_eq!(quantize_pcm16(1.5), 32767);
        assert_eq!(quantize_pcm16(-1.5), -32768);
    }

    #[test]
    fn pcm16_encode_stores_rounded_value() {
        let bytes = encode_wav(&AudioBuffer::mono(48_000, vec![0.5, 0.0, 1.5]), BitDepth::Pcm16);
        let n = bytes.len();
        let stored: Vec<i16> = bytes[n - 6..]
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]))
            .collect();
        assert_eq!(stored, vec![16384, 0, 32767]);
    }

    #[test]
    fn float_round_trip_is_exact_including_odd_values() {
        let samples = vec![0.1f32, -3.5, f32::MIN_POSITIVE, 1.0e-30, 7.25];
        let buf = AudioBuffer::stereo(44_100, samples.clone(), samples.iter().rev().copied().collect()).unwrap();
        let back = decode_wav(&encode_wav(&buf, BitDepth::Float32)).unwrap();
        assert_eq!(back, buf);
    }

    #[test]
    fn extensible_header_is_understood() {
        let data: Vec<u8> = [0.25f32].iter().flat_map(|s| s.to_le_bytes()).collect();
        let mut v = Vec::new();
        v.extend_from_slice(b"RIFF");
        v.extend_from_slice(&(60 + data.len() as u32).to_le_bytes());
        v.extend_from_slice(b"WAVEfmt ");
        v.extend_from_slice(&40u32.to_le_bytes());
        v.extend_from_slice(&FORMAT_EXTENSIBLE.to_le_bytes());
        v.extend_from_slice(&1u16.to_le_bytes());
        v.extend_from_slice(&48_000u32.to_le_bytes());
        v.extend_from_slice(&(48_000u32 * 4).to_le_bytes());
        v.extend_from_slice(&4u16.to_le_bytes());
        v.extend_from_slice(&32u16.to_le_bytes());
        v.extend_from_slice(&22u16.to_le_bytes());
        v.extend_from_slice(&32u16.to_le_bytes());
        v.extend_from_slice(&4u32.to_le_bytes());
        v.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
        v.extend_from_slice(&[0, 0, 0, 0, 0x10, 0, 0x80, 0, 0, 0xAA, 0, 0x38, 0x9B, 0x71]);
        v.extend_from_slice(b"data");
        v.extend_from_slice(&(data.len() as u32).to_le_bytes());
        v.extend_from_slice(&data);
        assert_eq!(decode_wav(&v).unwrap().channel(0), &[0.25]);
    }

    #[test]
    fn probe_matches_decode() {
        let buf = AudioBuffer::mono(22_050, vec![0.0; 22_050]);
        let info = probe_wav(&encode_wav(&buf, BitDepth::Pcm16)).unwrap();
        assert_eq!(info.frames, 22_050);
        assert_eq!(info.duration_secs(), 1.0);
    }
}

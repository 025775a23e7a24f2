//! Minimal RIFF/WAVE reader and writer.
//!
//! Supports PCM-16 little-endian and IEEE float-32, mono or multichannel
//! (averaged to mono on load). Any sample rate.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Sample encoding used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

/// Load a WAV file as a mono waveform. Multichannel content is averaged to
/// mono; PCM-16 samples are scaled by 1/32768.
pub fn load_wav(path: &Path) -> Result<Waveform> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Error::WavMissing(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    parse_wav(&bytes, path)
}

fn malformed(path: &Path, detail: &str) -> Error {
    Error::WavMalformed {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

fn parse_wav(bytes: &[u8], path: &Path) -> Result<Waveform> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed(path, "missing RIFF/WAVE header"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| malformed(path, "chunk size exceeds file length"))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(malformed(path, "fmt chunk too short"));
                }
                fmt = Some((
                    u16::from_le_bytes(body[0..2].try_into().unwrap()),
                    u16::from_le_bytes(body[2..4].try_into().unwrap()),
                    u32::from_le_bytes(body[4..8].try_into().unwrap()),
                    u16::from_le_bytes(body[14..16].try_into().unwrap()),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunk bodies are padded to even length
        pos = body_end + (size & 1);
    }

    let (format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| malformed(path, "missing fmt chunk"))?;
    let data = data.ok_or_else(|| malformed(path, "missing data chunk"))?;
    if channels == 0 {
        return Err(malformed(path, "zero channels"));
    }
    if sample_rate == 0 {
        return Err(malformed(path, "zero sample rate"));
    }

    let interleaved: Vec<f64> = match (format, bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (FORMAT_IEEE_FLOAT, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        _ => {
            return Err(Error::WavUnsupported {
                path: path.to_path_buf(),
                detail: format!("format tag {format} with {bits} bits per sample"),
            })
        }
    };

    let ch = channels as usize;
    let frames = interleaved.len() / ch;
    let samples: Vec<f64> = (0..frames)
        .map(|f| interleaved[f * ch..(f + 1) * ch].iter().sum::<f64>() / ch as f64)
        .collect();
    Waveform::new(samples, sample_rate)
}

/// Write a mono WAV file. Returns the number of samples that fell outside
/// [-1, 1] and were clipped (always 0 for float-32, which stores any value).
pub fn save_wav(wave: &Waveform, path: &Path, encoding: WavEncoding) -> Result<usize> {
    let mut clipped = 0usize;
    let (format, bits, payload): (u16, u16, Vec<u8>) = match encoding {
        WavEncoding::Pcm16 => {
            let mut out = Vec::with_capacity(wave.len() * 2);
            for &s in &wave.samples {
                let s = if (-1.0..=1.0).contains(&s) {
                    s
                } else {
                    clipped += 1;
                    s.clamp(-1.0, 1.0)
                };
                let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            }
            (FORMAT_PCM, 16, out)
        }
        WavEncoding::Float32 => {
            let mut out = Vec::with_capacity(wave.len() * 4);
            for &s in &wave.samples {
                out.extend_from_slice(&(s as f32).to_le_bytes());
            }
            (FORMAT_IEEE_FLOAT, 32, out)
        }
    };

    let block_align = (bits / 8) as u32;
    let byte_rate = wave.sample_rate * block_align;
    let mut bytes = Vec::with_capacity(44 + payload.len());
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + payload.len() as u32).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&format.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes()); // mono
    bytes.extend_from_slice(&wave.sample_rate.to_le_bytes());
    bytes.extend_from_slice(&byte_rate.to_le_bytes());
    bytes.extend_from_slice(&(block_align as u16).to_le_bytes());
    bytes.extend_from_slice(&bits.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&payload);

    fs::write(path, &bytes).map_err(|e| Error::WavWrite {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(clipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn raw_wav(format: u16, channels: u16, rate: u32, bits: u16, payload: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + payload.len() as u32).to_le_bytes());
        b.extend_from_slice(b"WAVE");
        b.extend_from_slice(b"fmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&format.to_le_bytes());
        b.extend_from_slice(&channels.to_le_bytes());
        b.extend_from_slice(&rate.to_le_bytes());
        let block = channels as u32 * (bits as u32 / 8);
        b.extend_from_slice(&(rate * block).to_le_bytes());
        b.extend_from_slice(&(block as u16).to_le_bytes());
        b.extend_from_slice(&bits.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        b.extend_from_slice(payload);
        b
    }

    #[test]
    fn pcm16_scaling() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let mut payload = Vec::new();
        for v in [0i16, 16384, -16384, 0] {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&path, raw_wav(FORMAT_PCM, 1, 16_000, 16, &payload)).unwrap();
        let w = load_wav(&path).unwrap();
        let expected = [0.0, 0.5, -0.5, 0.0];
        for (got, want) in w.samples.iter().zip(expected) {
            assert!((got - want).abs() <= 1.0 / 32768.0);
        }
        assert_eq!(w.sample_rate, 16_000);
    }

    #[test]
    fn stereo_averages_to_mono() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("st.wav");
        let mut payload = Vec::new();
        for _ in 0..4 {
            payload.extend_from_slice(&1.0f32.to_le_bytes());
            payload.extend_from_slice(&0.0f32.to_le_bytes());
        }
        fs::write(&path, raw_wav(FORMAT_IEEE_FLOAT, 2, 8_000, 32, &payload)).unwrap();
        let w = load_wav(&path).unwrap();
        assert_eq!(w.len(), 4);
        for s in &w.samples {
            assert!((s - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_file_is_distinct_error() {
        let err = load_wav(Path::new("/nonexistent/nowhere.wav")).unwrap_err();
        assert!(matches!(err, Error::WavMissing(_)));
    }

    #[test]
    fn malformed_header_is_distinct_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.wav");
        fs::write(&path, b"not a wav file at all").unwrap();
        assert!(matches!(
            load_wav(&path).unwrap_err(),
            Error::WavMalformed { .. }
        ));
    }

    #[test]
    fn unsupported_encoding_is_distinct_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("u8.wav");
        fs::write(&path, raw_wav(FORMAT_PCM, 1, 8_000, 8, &[128, 128])).unwrap();
        assert!(matches!(
            load_wav(&path).unwrap_err(),
            Error::WavUnsupported { .. }
        ));
    }

    #[test]
    fn float32_roundtrip_is_bit_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let samples: Vec<f64> = (0..64).map(|i| (i as f32 * 0.013 - 0.4) as f64).collect();
        let w = Waveform::new(samples.clone(), 16_000).unwrap();
        assert_eq!(save_wav(&w, &path, WavEncoding::Float32).unwrap(), 0);
        let back = load_wav(&path).unwrap();
        assert_eq!(back.samples, samples);
    }

    #[test]
    fn pcm16_roundtrip_within_quantum() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("q.wav");
        let w = Waveform::new(vec![0.5, -0.25, 0.001, 0.0], 16_000).unwrap();
        assert_eq!(save_wav(&w, &path, WavEncoding::Pcm16).unwrap(), 0);
        let back = load_wav(&path).unwrap();
        for (a, b) in back.samples.iter().zip(&w.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn pcm16_clips_and_counts() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.wav");
        let w = Waveform::new(vec![1.5, 0.0, -0.5], 16_000).unwrap();
        assert_eq!(save_wav(&w, &path, WavEncoding::Pcm16).unwrap(), 1);
        let back = load_wav(&path).unwrap();
        // 1.5 clipped to 1.0, stored as 32767
        assert!((back.samples[0] - 32767.0 / 32768.0).abs() < 1e-12);
    }

    #[test]
    fn unwritable_path_errors() {
        let w = Waveform::new(vec![0.0], 16_000).unwrap();
        assert!(matches!(
            save_wav(&w, Path::new("/nonexistent-dir/x.wav"), WavEncoding::Pcm16).unwrap_err(),
            Error::WavWrite { .. }
        ));
    }
}

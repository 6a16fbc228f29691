//! Measured multichannel impulse responses: WAV ingest, octave-band spectra,
//! and energy-ratio mixing of two responses.
//!
//! Band analysis takes a full-length discrete Fourier transform with no
//! windowing and keeps the bins inside `[fc / sqrt 2, fc sqrt 2]`; each bin is
//! then processed exactly like one simulated scene.

use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::wavefield::{BandSpec, PressureSnapshot};

/// Multichannel impulse response: equal-length float channels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelIr {
    pub sample_rate: u32,
    /// `channels[ch][sample]`, normalized to [-1, 1) for integer PCM.
    pub channels: Vec<Vec<f64>>,
}

impl MultichannelIr {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map(Vec::len).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn read_u16(bytes: &[u8], at: usize) -> Result<u16> {
    bytes
        .get(at..at + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(truncated)
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(truncated)
}

fn truncated() -> Error {
    Error::Io(std::io::Error::new(
        std::io::ErrorKind::UnexpectedEof,
        "truncated WAV file",
    ))
}

/// Load a RIFF/WAVE file (PCM 16/24/32-bit or 32-bit float).
///
/// Integer samples are normalized by their full-scale magnitude, so a
/// full-scale 16-bit sample becomes `1 - 2^-15`.
pub fn load_wav(path: &Path) -> Result<MultichannelIr> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("not a RIFF/WAVE file".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(&bytes, pos + 4)? as usize;
        let body = bytes.get(pos + 8..pos + 8 + size).ok_or_else(truncated)?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Format("fmt chunk too small".into()));
                }
                let mut format = read_u16(body, 0)?;
                let channels = read_u16(body, 2)?;
                let rate = read_u32(body, 4)?;
                let bits = read_u16(body, 14)?;
                if format == 0xFFFE {
                    // WAVE_FORMAT_EXTENSIBLE: sub-format GUID starts at 24
                    format = read_u16(body, 24)?;
                }
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos += 8 + size + (size & 1); // chunks are word-aligned
    }
    let (format, channels, rate, bits) = fmt.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    if channels == 0 || rate == 0 {
        return Err(Error::Format("empty channel layout".into()));
    }
    let bytes_per = (bits as usize) / 8;
    let decode: fn(&[u8]) -> f64 = match (format, bits) {
        (1, 16) => |b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        (1, 24) => |b| {
            let raw = ((b[2] as i32) << 24 | (b[1] as i32) << 16 | (b[0] as i32) << 8) >> 8;
            raw as f64 / 8388608.0
        },
        (1, 32) => |b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2147483648.0,
        (3, 32) => |b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        (f, b) => {
            return Err(Error::Format(format!(
                "unsupported WAV codec: format {f}, {b}-bit"
            )))
        }
    };
    let frame = bytes_per * channels as usize;
    if frame == 0 || data.len() % frame != 0 {
        return Err(truncated());
    }
    let frames = data.len() / frame;
    let mut out = vec![Vec::with_capacity(frames); channels as usize];
    for fidx in 0..frames {
        for (ch, channel) in out.iter_mut().enumerate() {
            let at = fidx * frame + ch * bytes_per;
            channel.push(decode(&data[at..at + bytes_per]));
        }
    }
    Ok(MultichannelIr {
        sample_rate: rate,
        channels: out,
    })
}

/// Write a 32-bit float WAV (fixture/interchange helper).
pub fn save_wav_float32(path: &Path, ir: &MultichannelIr) -> Result<()> {
    let channels = ir.channel_count() as u16;
    if channels == 0 {
        return Err(Error::Domain("no channels to write".into()));
    }
    let frames = ir.len();
    let data_len = (frames * channels as usize * 4) as u32;
    let mut bytes = Vec::with_capacity(44 + data_len as usize);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len).to_le_bytes());
    bytes.extend_from_slice(b"WAVEfmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&3u16.to_le_bytes()); // IEEE float
    bytes.extend_from_slice(&channels.to_le_bytes());
    bytes.extend_from_slice(&ir.sample_rate.to_le_bytes());
    bytes.extend_from_slice(&(ir.sample_rate * channels as u32 * 4).to_le_bytes());
    bytes.extend_from_slice(&(channels * 4).to_le_bytes());
    bytes.extend_from_slice(&32u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&data_len.to_le_bytes());
    for f in 0..frames {
        for ch in &ir.channels {
            bytes.extend_from_slice(&(ch[f] as f32).to_le_bytes());
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Discrete spectra of one octave band: per retained bin, one complex value
/// per channel.
#[derive(Debug, Clone)]
pub struct BandSpectra {
    pub band_center_hz: f64,
    pub sample_rate: u32,
    pub fft_len: usize,
    pub frequencies: Vec<f64>,
    /// `values[bin][channel]`.
    pub values: Vec<Vec<Complex64>>,
}

impl BandSpectra {
    pub fn bin_count(&self) -> usize {
        self.frequencies.len()
    }

    /// One bin as a pressure snapshot, ready for the estimation pipeline.
    pub fn snapshot(&self, bin: usize) -> PressureSnapshot {
        PressureSnapshot {
            frequency_hz: self.frequencies[bin],
            values: self.values[bin].clone(),
        }
    }

    /// Signal energy carried by the retained bins
    /// (`2 |X_k|^2 / N` per positive-frequency bin, summed over channels).
    pub fn energy(&self) -> f64 {
        let scale = 2.0 / self.fft_len as f64;
        self.values
            .iter()
            .flat_map(|bin| bin.iter())
            .map(|v| v.norm_sqr() * scale)
            .sum::<f64>()
    }
}

fn band_spectra_padded(ir: &MultichannelIr, band: &BandSpec, fft_len: usize) -> Result<BandSpectra> {
    let fs = ir.sample_rate as f64;
    let (lo, hi) = band.edges();
    if hi > fs / 2.0 {
        return Err(Error::Domain(format!(
            "band {} Hz exceeds Nyquist ({} Hz)",
            band.center_hz,
            fs / 2.0
        )));
    }
    if (ir.len() as f64) < fs / lo {
        return Err(Error::Domain(format!(
            "response shorter than one period of the band lower edge ({lo} Hz)"
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(fft_len);
    let mut spectra: Vec<Vec<Complex64>> = Vec::with_capacity(ir.channel_count());
    for ch in &ir.channels {
        let mut buf: Vec<Complex64> = ch.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(fft_len, Complex64::new(0.0, 0.0));
        fft.process(&mut buf);
        spectra.push(buf);
    }
    let df = fs / fft_len as f64;
    let mut frequencies = Vec::new();
    let mut values = Vec::new();
    for k in 1..fft_len.div_ceil(2) {
        let f = k as f64 * df;
        if f >= lo && f <= hi {
            frequencies.push(f);
            values.push(spectra.iter().map(|s| s[k]).collect());
        }
    }
    Ok(BandSpectra {
        band_center_hz: band.center_hz,
        sample_rate: ir.sample_rate,
        fft_len,
        frequencies,
        values,
    })
}

/// Full-length unwindowed transform restricted to the band.
pub fn band_spectra(ir: &MultichannelIr, band: &BandSpec) -> Result<BandSpectra> {
    band_spectra_padded(ir, band, ir.len())
}

/// Mix two responses so the scaled beam carries exactly `eta` of the band
/// energy. The shorter response is zero-padded so both share one bin grid.
pub fn mix_by_ratio(
    beam: &MultichannelIr,
    diffuse: &MultichannelIr,
    eta: f64,
    band: &BandSpec,
) -> Result<BandSpectra> {
    if beam.channel_count() != diffuse.channel_count() {
        return Err(Error::Domain(format!(
            "channel count mismatch: {} vs {}",
            beam.channel_count(),
            diffuse.channel_count()
        )));
    }
    if beam.sample_rate != diffuse.sample_rate {
        return Err(Error::Domain("sample rate mismatch".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta {eta} outside [0, 1]")));
    }
    let fft_len = beam.len().max(diffuse.len());
    let sb = band_spectra_padded(beam, band, fft_len)?;
    let sd = band_spectra_padded(diffuse, band, fft_len)?;
    let eb = sb.energy();
    let ed = sd.energy();
    if eta > 0.0 && eb <= 0.0 {
        return Err(Error::Domain("beam response has no energy in this band".into()));
    }
    if eta < 1.0 && ed <= 0.0 {
        return Err(Error::Domain("diffuse response has no energy in this band".into()));
    }
    let gb = if eta > 0.0 { (eta / eb).sqrt() } else { 0.0 };
    let gd = if eta < 1.0 { ((1.0 - eta) / ed).sqrt() } else { 0.0 };
    let values = sb
        .values
        .iter()
        .zip(&sd.values)
        .map(|(b, d)| {
            b.iter()
                .zip(d)
                .map(|(x, y)| x * gb + y * gd)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(BandSpectra {
        band_center_hz: band.center_hz,
        sample_rate: beam.sample_rate,
        fft_len,
        frequencies: sb.frequencies,
        values,
    })
}

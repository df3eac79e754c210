//! Two-channel IQ wav ingestion and segmentation.
//!
//! SDR capture software stores complex baseband recordings as stereo wav
//! files, one channel per component. This module reconstructs the complex
//! signal `x[n] = i[n] + j*q[n]`, trims start/end transients, and slices the
//! recording into fixed-length gesture segments.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Where a recording came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalOrigin {
    File,
    Synthetic,
}

/// Mapping of wav channels onto the I/Q components.
///
/// Capture tools do not agree on which channel holds the in-phase
/// component, so the convention is explicit: channel 0 = I, channel 1 = Q
/// by default, swappable via the CLI `--swap-iq` flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelOrder {
    #[default]
    IThenQ,
    QThenI,
}

/// A complex baseband recording with its sample rate.
///
/// Invariants enforced at construction: the sample buffer is non-empty and
/// the sample rate is positive. Values are immutable afterwards; `trim`
/// returns a new recording.
#[derive(Debug, Clone)]
pub struct IQRecording {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
    origin: SignalOrigin,
}

impl IQRecording {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64, origin: SignalOrigin) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::InvalidParam {
                name: "sample_rate_hz",
                reason: format!("must be positive, got {sample_rate_hz}"),
            });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            origin,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn origin(&self) -> SignalOrigin {
        self.origin
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Keep only the samples in `[start_s, end_s)`. The original is unchanged.
    pub fn trim(&self, start_s: f64, end_s: f64) -> Result<IQRecording> {
        let duration = self.duration_s();
        if !(start_s >= 0.0) || !(end_s > start_s) || end_s > duration + 1e-9 {
            return Err(Error::TrimBounds {
                start_s,
                end_s,
                duration_s: duration,
            });
        }
        let lo = seconds_to_samples(start_s, self.sample_rate_hz);
        let hi = seconds_to_samples(end_s, self.sample_rate_hz).min(self.samples.len());
        IQRecording::new(self.samples[lo..hi].to_vec(), self.sample_rate_hz, self.origin)
    }

    /// Slice into non-overlapping segments of `segment_len_s` seconds, in
    /// temporal order. The trailing remainder is discarded so every segment
    /// has identical length.
    pub fn segment(&self, segment_len_s: f64) -> Result<Vec<Segment>> {
        let seg_samples = seconds_to_samples(segment_len_s, self.sample_rate_hz);
        if seg_samples == 0 {
            return Err(Error::InvalidParam {
                name: "segment_len_s",
                reason: format!("{segment_len_s} s is shorter than one sample"),
            });
        }
        if seg_samples > self.samples.len() {
            return Err(Error::SegmentTooLong {
                requested_s: segment_len_s,
                duration_s: self.duration_s(),
            });
        }
        Ok(self
            .samples
            .chunks_exact(seg_samples)
            .enumerate()
            .map(|(index, chunk)| Segment {
                samples: chunk.to_vec(),
                sample_rate_hz: self.sample_rate_hz,
                index,
                source_label: None,
            })
            .collect())
    }
}

/// One fixed-length slice of a recording; the unit that becomes a training
/// sample downstream.
#[derive(Debug, Clone)]
pub struct Segment {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub index: usize,
    pub source_label: Option<String>,
}

impl Segment {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn with_label(mut self, label: &str) -> Segment {
        self.source_label = Some(label.to_string());
        self
    }
}

// Floor with a small epsilon so that values sitting just below an integer
// due to float rounding (e.g. 0.3 * 44100) land on it.
fn seconds_to_samples(seconds: f64, sample_rate_hz: f64) -> usize {
    (seconds * sample_rate_hz + 1e-9).floor() as usize
}

/// Load a 2-channel wav file and reconstruct the complex signal.
///
/// Accepts 16/32-bit integer PCM (normalized by `2^(bits-1)` to `[-1, 1)`)
/// or IEEE float 32-bit (passed through unchanged). The sample rate is taken
/// from the header.
pub fn load_iq_wav(path: &Path, order: ChannelOrder) -> Result<IQRecording> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = hound::WavReader::open(path).map_err(|e| Error::Wav(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 2 {
        return Err(Error::ChannelCount {
            path: path.to_path_buf(),
            found: spec.channels,
        });
    }
    if spec.sample_rate == 0 {
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: "sample rate 0 in header".into(),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Wav(e.to_string()))?,
        (hound::SampleFormat::Int, 16) => {
            let scale = 1.0 / 32768.0;
            reader
                .samples::<i16>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Wav(e.to_string()))?
        }
        (hound::SampleFormat::Int, 32) => {
            let scale = 1.0 / 2147483648.0;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Wav(e.to_string()))?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {fmt:?}"),
            })
        }
    };

    if interleaved.is_empty() {
        return Err(Error::EmptyAudio(path.to_path_buf()));
    }

    let samples: Vec<Complex64> = interleaved
        .chunks_exact(2)
        .map(|frame| match order {
            ChannelOrder::IThenQ => Complex64::new(frame[0], frame[1]),
            ChannelOrder::QThenI => Complex64::new(frame[1], frame[0]),
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyAudio(path.to_path_buf()));
    }

    IQRecording::new(samples, f64::from(spec.sample_rate), SignalOrigin::File)
}

/// Write a recording as a 2-channel IEEE float 32-bit wav
/// (channel 0 = I, channel 1 = Q).
pub fn write_iq_wav(path: &Path, rec: &IQRecording) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: rec.sample_rate_hz.round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| Error::Wav(e.to_string()))?;
    for s in rec.samples() {
        writer
            .write_sample(s.re as f32)
            .and_then(|_| writer.write_sample(s.im as f32))
            .map_err(|e| Error::Wav(e.to_string()))?;
    }
    writer.finalize().map_err(|e| Error::Wav(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec_of_zeros(n: usize, fs: f64) -> IQRecording {
        IQRecording::new(vec![Complex64::new(0.0, 0.0); n], fs, SignalOrigin::Synthetic).unwrap()
    }

    fn write_test_wav(path: &Path, spec: hound::WavSpec, write: impl FnOnce(&mut hound::WavWriter<std::io::BufWriter<std::fs::File>>)) {
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        write(&mut w);
        w.finalize().unwrap();
    }

    #[test]
    fn float_wav_reconstructs_complex_signal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("iq.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 48_000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        // channel0 = [1, 0], channel1 = [0, 1]
        write_test_wav(&path, spec, |w| {
            for (i, q) in [(1.0f32, 0.0f32), (0.0, 1.0)] {
                w.write_sample(i).unwrap();
                w.write_sample(q).unwrap();
            }
        });
        let rec = load_iq_wav(&path, ChannelOrder::IThenQ).unwrap();
        assert_eq!(rec.samples(), &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        assert_eq!(rec.sample_rate_hz(), 48_000.0);

        let swapped = load_iq_wav(&path, ChannelOrder::QThenI).unwrap();
        assert_eq!(swapped.samples(), &[Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn pcm16_is_normalized_to_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        write_test_wav(&path, spec, |w| {
            w.write_sample(16384i16).unwrap(); // 16384 / 32768 = 0.5
            w.write_sample(0i16).unwrap();
        });
        let rec = load_iq_wav(&path, ChannelOrder::IThenQ).unwrap();
        assert_eq!(rec.samples(), &[Complex64::new(0.5, 0.0)]);
    }

    #[test]
    fn mono_wav_is_rejected_with_channel_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mono.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        write_test_wav(&path, spec, |w| w.write_sample(1i16).unwrap());
        match load_iq_wav(&path, ChannelOrder::IThenQ) {
            Err(Error::ChannelCount { found: 1, .. }) => {}
            other => panic!("expected ChannelCount error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_and_empty_audio_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        match load_iq_wav(&dir.path().join("absent.wav"), ChannelOrder::IThenQ) {
            Err(Error::MissingFile(_)) => {}
            other => panic!("expected MissingFile, got {other:?}"),
        }
        let path = dir.path().join("empty.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        write_test_wav(&path, spec, |_| {});
        match load_iq_wav(&path, ChannelOrder::IThenQ) {
            Err(Error::EmptyAudio(_)) => {}
            other => panic!("expected EmptyAudio, got {other:?}"),
        }
    }

    #[test]
    fn trim_extracts_23_seconds_from_30() {
        let rec = rec_of_zeros(30_000, 1_000.0); // 30 s at 1 kHz
        let trimmed = rec.trim(2.0, 25.0).unwrap();
        assert_eq!(trimmed.samples().len(), 23_000);
        assert!((trimmed.duration_s() - 23.0).abs() < 1e-12);
        // original untouched
        assert_eq!(rec.samples().len(), 30_000);
    }

    #[test]
    fn trim_full_range_is_identity() {
        let samples: Vec<Complex64> = (0..100).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let rec = IQRecording::new(samples.clone(), 50.0, SignalOrigin::Synthetic).unwrap();
        let trimmed = rec.trim(0.0, rec.duration_s()).unwrap();
        assert_eq!(trimmed.samples(), &samples[..]);
    }

    #[test]
    fn inverted_or_out_of_range_trim_bounds_fail() {
        let rec = rec_of_zeros(10_000, 1_000.0);
        assert!(matches!(rec.trim(5.0, 3.0), Err(Error::TrimBounds { .. })));
        assert!(matches!(rec.trim(-1.0, 3.0), Err(Error::TrimBounds { .. })));
        assert!(matches!(rec.trim(2.0, 11.0), Err(Error::TrimBounds { .. })));
    }

    #[test]
    fn segmentation_counts_match_floor_of_ratio() {
        // 23 s -> 46 half-second segments
        let segs = rec_of_zeros(23_000, 1_000.0).segment(0.5).unwrap();
        assert_eq!(segs.len(), 46);
        assert!(segs.iter().all(|s| s.samples.len() == 500));

        // one full-length segment equals the recording
        let rec = rec_of_zeros(1_000, 1_000.0);
        let segs = rec.segment(1.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].samples.len(), 1_000);

        // 1.2 s / 0.5 s -> 2 segments, 0.2 s discarded
        let segs = rec_of_zeros(1_200, 1_000.0).segment(0.5).unwrap();
        assert_eq!(segs.len(), 2);
    }

    #[test]
    fn segment_longer_than_recording_fails() {
        let rec = rec_of_zeros(1_000, 1_000.0);
        assert!(matches!(rec.segment(1.5), Err(Error::SegmentTooLong { .. })));
    }

    #[test]
    fn wav_round_trip_is_exact_for_float_data() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.wav");
        // values chosen representable in f32
        let samples: Vec<Complex64> = (0..256)
            .map(|i| Complex64::new(f64::from(i as f32 / 256.0), f64::from(-(i as f32) / 512.0)))
            .collect();
        let rec = IQRecording::new(samples.clone(), 102_400.0, SignalOrigin::Synthetic).unwrap();
        write_iq_wav(&path, &rec).unwrap();
        let back = load_iq_wav(&path, ChannelOrder::IThenQ).unwrap();
        assert_eq!(back.samples(), &samples[..]);
        assert_eq!(back.sample_rate_hz(), 102_400.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn segment_count_is_floor_of_duration_ratio(
                n in 1usize..5_000,
                seg_samples in 1usize..700,
            ) {
                let fs = 1_000.0;
                let rec = rec_of_zeros(n, fs);
                let seg_len_s = seg_samples as f64 / fs;
                match rec.segment(seg_len_s) {
                    Ok(segs) => prop_assert_eq!(segs.len(), n / seg_samples),
                    Err(_) => prop_assert!(seg_samples > n),
                }
            }

            #[test]
            fn segments_plus_tail_reproduce_input(
                n in 1usize..2_000,
                seg_samples in 1usize..300,
            ) {
                prop_assume!(seg_samples <= n);
                let fs = 1_000.0;
                let samples: Vec<Complex64> =
                    (0..n).map(|i| Complex64::new(i as f64, (i * 7 % 13) as f64)).collect();
                let rec = IQRecording::new(samples.clone(), fs, SignalOrigin::Synthetic).unwrap();
                let segs = rec.segment(seg_samples as f64 / fs).unwrap();
                let mut rebuilt: Vec<Complex64> =
                    segs.iter().flat_map(|s| s.samples.iter().copied()).collect();
                rebuilt.extend_from_slice(&samples[segs.len() * seg_samples..]);
                prop_assert_eq!(rebuilt, samples);
            }
        }
    }
}

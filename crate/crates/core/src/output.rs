//! CSV, WAV and metadata emission for a [`RunOutput`].

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::RunOutput;

/// Name of the metadata sidecar; it is itself a valid config.
pub const METADATA_FILE: &str = "run.cfg";

/// Files written by [`write_outputs`] and any warnings raised.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Written {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `time,value` lines, one per sample, starting at `t = 0`.
pub fn write_channel_csv(path: &Path, values: &[f64], sample_rate: f64) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (i, v) in values.iter().enumerate() {
        let t = i as f64 / sample_rate;
        writeln!(w, "{},{}", num(t), num(*v)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Mono 32-bit float WAV, peak-normalised. Returns the scale that restores metres.
pub fn write_wav(path: &Path, values: &[f64], sample_rate: f64) -> Result<f64> {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sample_rate.round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for v in values {
        w.write_sample((v * gain) as f32)?;
    }
    w.finalize()?;
    Ok(peak)
}

fn table_csv(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// The metadata sidecar: derived values as comments, followed by the pinned config.
pub fn metadata_text(out: &RunOutput, wav_scales: &[(String, f64)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# experiment: {}", out.experiment.name());
    let _ = writeln!(s, "# sample_rate_hz: {}", out.sample_rate);
    if let Some(r) = &out.resolved {
        let _ = writeln!(s, "# N: {}", r.n);
        let _ = writeln!(s, "# h_m: {}", r.h);
        let _ = writeln!(s, "# k_s: {}", r.k);
        let _ = writeln!(s, "# N_s: {}", r.ns);
        let _ = writeln!(s, "# theta_u: {}", r.theta_u);
        let _ = writeln!(s, "# theta_v: {}", r.theta_v);
    }
    for (name, scale) in wav_scales {
        let _ = writeln!(s, "# wav_scale_{name}_m: {scale}");
    }
    for (k, v) in &out.notes {
        let _ = writeln!(s, "# {k}: {v}");
    }
    for (i, f) in out.frames.iter().enumerate() {
        let _ = writeln!(s, "# frame_{i}: {} at {} s", f.label, f.time);
    }
    s.push('\n');
    s.push_str(&out.config.to_config_string());
    s
}

/// Writes every channel, frame and table of `out` into `dir`, plus the metadata sidecar.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<Written> {
    let mut written = Written::default();
    if out.channels.is_empty() && out.frames.is_empty() && out.tables.is_empty() {
        written.warnings.push("run produced no channels, frames or tables; nothing written".into());
        return Ok(written);
    }
    let lens: Vec<usize> = out.channels.iter().map(|c| c.values.len()).collect();
    if lens.windows(2).any(|w| w[0] != w[1]) {
        written.warnings.push(format!("channel lengths differ: {lens:?}"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut scales = Vec::new();
    for ch in &out.channels {
        let path = dir.join(format!("{}.csv", ch.name));
        write_channel_csv(&path, &ch.values, out.sample_rate)?;
        written.files.push(path);
        if ch.audio {
            let path = dir.join(format!("{}.wav", ch.name));
            let scale = write_wav(&path, &ch.values, out.sample_rate)?;
            scales.push((ch.name.clone(), scale));
            written.files.push(path);
        }
    }
    for (i, f) in out.frames.iter().enumerate() {
        let path = dir.join(format!("frame_{i}_{}.csv", f.label));
        let rows: Vec<Vec<f64>> = (0..f.x.len()).map(|j| vec![f.x[j], f.u[j], f.v[j]]).collect();
        write_text(&path, &table_csv(&["x".into(), "u".into(), "v".into()], &rows))?;
        written.files.push(path);
    }
    for t in &out.tables {
        let path = dir.join(format!("{}.csv", t.name));
        write_text(&path, &table_csv(&t.header, &t.rows))?;
        written.files.push(path);
    }
    let path = dir.join(METADATA_FILE);
    write_text(&path, &metadata_text(out, &scales))?;
    written.files.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentKind, RunConfig};
    use crate::experiment::{snapshot_config, Channel};
    use crate::params::SimConfig;

    fn output(channels: Vec<Channel>) -> RunOutput {
        let mut cfg = snapshot_config();
        cfg.experiment = ExperimentKind::Waveforms;
        RunOutput {
            experiment: cfg.experiment,
            sample_rate: 48_000.0,
            channels,
            frames: Vec::new(),
            tables: Vec::new(),
            config: cfg,
            resolved: None,
            notes: Vec::new(),
        }
    }

    #[test]
    fn empty_output_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out");
        let w = write_outputs(&output(Vec::new()), &target).unwrap();
        assert!(w.files.is_empty());
        assert_eq!(w.warnings.len(), 1);
        assert!(!target.exists());
    }

    #[test]
    fn csv_uses_seventeen_significant_digits() {
        let dir = tempfile::tempdir().unwrap();
        let ch = Channel {
            name: "transverse".into(),
            values: vec![0.1, -1.0 / 3.0, 2.0],
            audio: true,
        };
        write_outputs(&output(vec![ch]), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("transverse.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let (t, v) = lines[1].split_once(',').unwrap();
        assert_eq!(t.parse::<f64>().unwrap(), 1.0 / 48_000.0);
        assert_eq!(v.parse::<f64>().unwrap(), -1.0 / 3.0);
        assert_eq!(v.trim_start_matches('-').split('e').next().unwrap().len(), 18);
    }

    #[test]
    fn wav_is_peak_normalised_float() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let scale = write_wav(&path, &[0.0, 2e-3, -4e-3, 1e-3], 96_000.0).unwrap();
        assert_eq!(scale, 4e-3);
        let mut r = hound::WavReader::open(&path).unwrap();
        assert_eq!(r.spec().sample_rate, 96_000);
        assert_eq!(r.spec().sample_format, hound::SampleFormat::Float);
        let samples: Vec<f32> = r.samples::<f32>().map(|s| s.unwrap()).collect();
        assert_eq!(samples, vec![0.0, 0.5, -1.0, 0.25]);
    }

    #[test]
    fn metadata_is_a_loadable_config() {
        let mut out = output(vec![Channel {
            name: "transverse".into(),
            values: vec![1.0],
            audio: true,
        }]);
        out.config.sim = SimConfig {
            oversampling: 3,
            ..out.config.sim.clone()
        };
        let text = metadata_text(&out, &[("transverse".into(), 1.0)]);
        let back = RunConfig::parse(&text, "run.cfg").unwrap();
        assert_eq!(back, out.config);
    }
}

//! The `csimotion` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use csimotion_core::eval::{evaluate_run, summarize, PirEvent, RunResult};
use csimotion_core::synth::generate;
use csimotion_core::{
    calibrate, detect, pcc_series, preprocess_pipeline, CalibrationProfile, CsiCapture,
    DetectorConfig, GroundTruth, PreprocessConfig, SubcarrierMap,
};

use crate::error::Error;
use crate::formats::pcap::{write_nexmon_pcap, PayloadDefaults};
use crate::formats::{canonical, profile, script, series, svg, truth};
use crate::io::{
    builtin_map_for, load_capture, load_ground_truth, load_map, load_pir, load_profile, read_text,
    write_file,
};
use crate::report;

/// Expected number and length of empty-room calibration captures.
const CALIBRATION_CAPTURES: usize = 5;
const CALIBRATION_SECONDS: f64 = 10.0;
const CALIBRATION_SLACK: f64 = 0.2;

#[derive(Debug, Parser)]
#[command(
    name = "csimotion",
    version,
    about = "Movement detection from WiFi CSI captures"
)]
pub struct Cli {
    /// Suppress informational output.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a Nexmon pcap (or canonical file) to the canonical format.
    Parse {
        input: PathBuf,
        /// Canonical output path.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build a calibration profile from empty-room captures.
    Calibrate {
        #[arg(required = true)]
        captures: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Environment label stored in the profile.
        #[arg(long, default_value = "")]
        env: String,
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Detect movement in one capture.
    Detect {
        capture: PathBuf,
        #[arg(short, long)]
        profile: PathBuf,
        /// Mask CSV output path.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        emit_pcc: Option<PathBuf>,
        #[arg(long)]
        emit_variance: Option<PathBuf>,
        #[arg(long)]
        emit_sti: Option<PathBuf>,
        #[arg(long)]
        emit_svg: Option<PathBuf>,
        /// Ground truth drawn in the SVG timeline.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Score a manifest of captures against ground truth.
    Evaluate {
        manifest: PathBuf,
        /// Per-run CSV output path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Per-movement summary CSV output path.
        #[arg(long)]
        summary_csv: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Generate a synthetic capture and its ground truth.
    Synth {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value_t = CaptureFormat::Canonical)]
        format: CaptureFormat,
        /// Gain multiplier applied before rounding samples into pcap integers.
        #[arg(long, default_value_t = 1000.0)]
        pcap_scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaptureFormat {
    Canonical,
    Pcap,
}

/// Detector overrides. Flags take precedence over the profile, which takes
/// precedence over built-in defaults.
#[derive(Debug, Clone, Args)]
pub struct Tuning {
    /// Replace the profile's contains-movement threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    mov_threshold: Option<f64>,
    #[arg(long)]
    nomov_threshold: Option<f64>,
    /// Sliding window length in samples.
    #[arg(long)]
    window_size: Option<usize>,
    /// Running variance window length in samples.
    #[arg(long)]
    variance_window: Option<usize>,
    /// Subcarrier map file; defaults to the built-in table.
    #[arg(long)]
    map: Option<PathBuf>,
}

impl Tuning {
    fn config(&self) -> Result<DetectorConfig, Error> {
        let d = DetectorConfig::default();
        let cfg = DetectorConfig {
            mov_threshold: self.mov_threshold.unwrap_or(d.mov_threshold),
            nomov_threshold: self.nomov_threshold.unwrap_or(d.nomov_threshold),
            window_size: self.window_size.unwrap_or(d.window_size),
            variance_window: self.variance_window.unwrap_or(d.variance_window),
        };
        cfg.validate()
            .map_err(|e| Error::Usage(format!("invalid detector settings: {e}")))?;
        Ok(cfg)
    }

    fn profile(&self, path: &Path) -> Result<CalibrationProfile, Error> {
        let mut p = load_profile(path)?;
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return Err(Error::Usage("threshold must be finite".into()));
            }
            p = CalibrationProfile::manual(t, p.environment_label);
        }
        Ok(p)
    }
}

struct Console<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    quiet: bool,
}

impl Console<'_> {
    fn info(&mut self, msg: &str) {
        if !self.quiet {
            let _ = writeln!(self.out, "{msg}");
        }
    }

    fn warn(&mut self, msg: &str) {
        let _ = writeln!(self.err, "warning: {msg}");
    }
}

/// Map from `--map`, or the built-in table for the capture. Captures whose
/// subcarrier count matches no bandwidth keep every subcarrier.
fn resolve_map(
    explicit: Option<&SubcarrierMap>,
    capture: &CsiCapture,
    path: &Path,
    console: &mut Console<'_>,
) -> Result<SubcarrierMap, Error> {
    if let Some(m) = explicit {
        return Ok(m.clone());
    }
    if let Some(m) = builtin_map_for(capture) {
        return Ok(m);
    }
    console.warn(&format!(
        "{}: {} subcarriers match no bandwidth table, keeping all of them",
        path.display(),
        capture.subcarrier_count()
    ));
    SubcarrierMap::identity(capture.subcarrier_count()).map_err(|e| Error::pipeline(path, e))
}

fn load_explicit_map(path: Option<&PathBuf>) -> Result<Option<SubcarrierMap>, Error> {
    path.map(|p| load_map(p)).transpose()
}

fn cmd_parse(input: &Path, out: Option<&Path>, console: &mut Console<'_>) -> Result<(), Error> {
    let loaded = load_capture(input)?;
    let c = &loaded.capture;
    if let Some(skipped) = loaded.skipped.filter(|s| *s > 0) {
        console.warn(&format!("skipped {skipped} malformed CSI payload(s)"));
    }
    let rate = c
        .estimated_rate()
        .map_or_else(|| "n/a".to_string(), |r| format!("{r:.2} Hz"));
    console.info(&format!(
        "{} frames, S={}, {} MHz, estimated rate {rate}",
        c.len(),
        c.subcarrier_count(),
        c.channel_spec().bandwidth.mhz()
    ));
    if let Some(out) = out {
        write_file(out, canonical::write_canonical(c))?;
    }
    Ok(())
}

fn cmd_calibrate(
    captures: &[PathBuf],
    out: &Path,
    env: &str,
    map: Option<&PathBuf>,
    console: &mut Console<'_>,
) -> Result<(), Error> {
    if captures.len() != CALIBRATION_CAPTURES {
        console.warn(&format!(
            "{} calibration captures given, {CALIBRATION_CAPTURES} expected",
            captures.len()
        ));
    }
    let explicit = load_explicit_map(map)?;
    let preprocess = PreprocessConfig::default();
    let mut series = Vec::with_capacity(captures.len());
    for path in captures {
        let capture = load_capture(path)?.capture;
        let duration = capture.duration();
        if (duration - CALIBRATION_SECONDS).abs() > CALIBRATION_SLACK * CALIBRATION_SECONDS {
            console.warn(&format!(
                "{}: {duration:.1} s long, calibration captures should be {CALIBRATION_SECONDS} s",
                path.display()
            ));
        }
        let m = resolve_map(explicit.as_ref(), &capture, path, console)?;
        let (amps, _) =
            preprocess_pipeline(&capture, &m, &preprocess).map_err(|e| Error::pipeline(path, e))?;
        series.push(pcc_series(&amps).map_err(|e| Error::pipeline(path, e))?);
    }
    let p = calibrate(&series, env).map_err(|e| Error::Usage(e.to_string()))?;
    write_file(out, profile::write_profile(&p))?;
    console.info(&format!(
        "threshold {:.6} from {} capture(s), written to {}",
        p.threshold(),
        p.captures(),
        out.display()
    ));
    Ok(())
}

struct Emit<'a> {
    out: Option<&'a Path>,
    pcc: Option<&'a Path>,
    variance: Option<&'a Path>,
    sti: Option<&'a Path>,
    svg: Option<&'a Path>,
    gt: Option<&'a Path>,
}

fn cmd_detect(
    path: &Path,
    profile_path: &Path,
    emit: Emit<'_>,
    tuning: &Tuning,
    console: &mut Console<'_>,
) -> Result<(), Error> {
    let cfg = tuning.config()?;
    let profile = tuning.profile(profile_path)?;
    let explicit = load_explicit_map(tuning.map.as_ref())?;
    // load everything before writing anything
    let gt = emit.gt.map(load_ground_truth).transpose()?;
    let capture = load_capture(path)?.capture;
    let m = resolve_map(explicit.as_ref(), &capture, path, console)?;
    let preprocess = PreprocessConfig::default();
    let d =
        detect(&capture, &profile, &cfg, &m, &preprocess).map_err(|e| Error::pipeline(path, e))?;

    if let Some(p) = emit.out {
        write_file(p, series::write_mask(&d.mask))?;
    }
    if let Some(p) = emit.pcc {
        write_file(p, series::write_pcc(&d.pcc))?;
    }
    if let Some(p) = emit.variance {
        let v = d.variance.as_deref().unwrap_or(&[]);
        if d.variance.is_none() {
            console.warn("gate rejected the capture, no running variance computed");
        }
        write_file(p, series::write_variance(&d.pcc, v))?;
    }
    if let Some(p) = emit.sti {
        write_file(p, series::write_sti(&d.pcc, d.subcarriers))?;
    }
    if let Some(p) = emit.svg {
        let (amps, _) =
            preprocess_pipeline(&capture, &m, &preprocess).map_err(|e| Error::pipeline(path, e))?;
        let title = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("capture");
        let doc = svg::render(&svg::Figure {
            title,
            amplitudes: Some((amps.data(), amps.t0(), amps.rate())),
            pcc: &d.pcc,
            threshold: Some(profile.threshold()),
            mask: &d.mask,
            gt: gt.as_ref(),
        });
        write_file(p, doc)?;
    }

    if d.mask.moving_samples() == 0 {
        console.info("no movement detected");
    } else {
        console.info(&format!(
            "moving {:.1} s of {:.1} s in {} segment(s)",
            d.mask.moving_seconds(),
            d.mask.len() as f64 / d.mask.rate,
            d.mask.segments().len()
        ));
    }
    if d.pcc.degenerate_frames() > 0 {
        console.warn(&format!(
            "{} frame pair(s) had zero variance and were scored as identical",
            d.pcc.degenerate_frames()
        ));
    }
    Ok(())
}

struct Loaded {
    name: String,
    movement: String,
    capture: CsiCapture,
    gt: GroundTruth,
    pir: Option<Vec<PirEvent>>,
}

fn cmd_evaluate(
    manifest_path: &Path,
    csv: Option<&Path>,
    summary_csv: Option<&Path>,
    tuning: &Tuning,
    console: &mut Console<'_>,
) -> Result<(), Error> {
    let cfg = tuning.config()?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let manifest = crate::formats::manifest::parse_manifest(&read_text(manifest_path)?, base)
        .map_err(|e| Error::format(manifest_path, e))?;
    let profile = tuning.profile(&manifest.profile)?;
    let explicit = load_explicit_map(tuning.map.as_ref())?;
    let entry_err = |line: usize, e: Error| {
        Error::Usage(format!("{} line {line}: {e}", manifest_path.display()))
    };
    let mut loaded = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let capture = load_capture(&e.capture)
            .map_err(|err| entry_err(e.line, err))?
            .capture;
        let gt = load_ground_truth(&e.gt).map_err(|err| entry_err(e.line, err))?;
        let pir = e
            .pir
            .as_deref()
            .map(load_pir)
            .transpose()
            .map_err(|err| entry_err(e.line, err))?;
        loaded.push(Loaded {
            name: e.capture.display().to_string(),
            movement: e.movement.to_string(),
            capture,
            gt,
            pir,
        });
    }
    if loaded.is_empty() {
        console.warn("manifest lists no runs");
    }

    let preprocess = PreprocessConfig::default();
    let mut results = Vec::with_capacity(loaded.len());
    for l in &loaded {
        let m = resolve_map(explicit.as_ref(), &l.capture, Path::new(&l.name), console)?;
        let outcome = evaluate_run(
            &l.capture,
            &l.gt,
            l.pir.as_deref(),
            &profile,
            &cfg,
            &m,
            &preprocess,
        )
        .map_err(|e| e.to_string());
        results.push(RunResult {
            name: l.name.clone(),
            movement: l.movement.clone(),
            outcome,
        });
    }
    let summary = summarize(&results);

    for r in &results {
        match &r.outcome {
            Ok(s) => {
                let pir = s.pir.as_ref().map_or(String::new(), |p| {
                    format!(", PIR {:.1}%", p.accuracy * 100.0)
                });
                console.info(&format!(
                    "{} [movement {}]: CSI {:.1}%{pir}",
                    r.name,
                    r.movement,
                    s.csi.accuracy * 100.0
                ));
            }
            Err(e) => console.warn(&format!("{} [movement {}]: {e}", r.name, r.movement)),
        }
    }
    console.info(report::summary_table(&summary).trim_end());
    if let Some(p) = csv {
        write_file(p, report::runs_csv(&results))?;
    }
    if let Some(p) = summary_csv {
        write_file(p, report::summary_csv(&summary))?;
    }
    Ok(())
}

fn cmd_synth(
    script_path: &Path,
    out: &Path,
    gt_path: &Path,
    format: CaptureFormat,
    pcap_scale: f64,
    console: &mut Console<'_>,
) -> Result<(), Error> {
    let s = script::parse_script(&read_text(script_path)?)
        .map_err(|e| Error::format(script_path, e))?;
    let (capture, gt) = generate(&s).map_err(|e| Error::pipeline(script_path, e))?;
    let bytes = match format {
        CaptureFormat::Canonical => canonical::write_canonical(&capture).into_bytes(),
        CaptureFormat::Pcap => {
            if !(pcap_scale.is_finite() && pcap_scale > 0.0) {
                return Err(Error::Usage("--pcap-scale must be positive".into()));
            }
            let scaled = quantize(&capture, pcap_scale)
                .ok_or_else(|| Error::Usage("--pcap-scale overflows 16-bit samples".into()))?;
            write_nexmon_pcap(&scaled, &PayloadDefaults::default()).map_err(|source| {
                Error::PcapWrite {
                    path: out.to_path_buf(),
                    source,
                }
            })?
        }
    };
    write_file(out, bytes)?;
    write_file(gt_path, truth::write_ground_truth(&gt))?;
    console.info(&format!(
        "{} frames over {} s, {} episode(s)",
        capture.len(),
        s.duration_s,
        s.episodes.len()
    ));
    Ok(())
}

/// Scales and rounds every sample to an integer, `None` if any leaves the
/// `i16` range.
fn quantize(capture: &CsiCapture, scale: f64) -> Option<CsiCapture> {
    let mut frames = capture.frames().to_vec();
    for f in &mut frames {
        for c in &mut f.subcarriers {
            c.re = (c.re * scale).round();
            c.im = (c.im * scale).round();
            if c.re.abs() > i16::MAX as f64 || c.im.abs() > i16::MAX as f64 {
                return None;
            }
        }
    }
    CsiCapture::new(frames, capture.channel_spec(), capture.nominal_rate()).ok()
}

fn dispatch(cli: &Cli, console: &mut Console<'_>) -> Result<(), Error> {
    match &cli.command {
        Command::Parse { input, out } => cmd_parse(input, out.as_deref(), console),
        Command::Calibrate {
            captures,
            out,
            env,
            map,
        } => cmd_calibrate(captures, out, env, map.as_ref(), console),
        Command::Detect {
            capture,
            profile,
            out,
            emit_pcc,
            emit_variance,
            emit_sti,
            emit_svg,
            gt,
            tuning,
        } => cmd_detect(
            capture,
            profile,
            Emit {
                out: out.as_deref(),
                pcc: emit_pcc.as_deref(),
                variance: emit_variance.as_deref(),
                sti: emit_sti.as_deref(),
                svg: emit_svg.as_deref(),
                gt: gt.as_deref(),
            },
            tuning,
            console,
        ),
        Command::Evaluate {
            manifest,
            csv,
            summary_csv,
            tuning,
        } => cmd_evaluate(
            manifest,
            csv.as_deref(),
            summary_csv.as_deref(),
            tuning,
            console,
        ),
        Command::Synth {
            script,
            out,
            gt,
            format,
            pcap_scale,
        } => cmd_synth(script, out, gt, *format, *pcap_scale, console),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let mut console = Console {
        out,
        err,
        quiet: cli.quiet,
    };
    match dispatch(&cli, &mut console) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(console.err, "error: {e}");
            e.exit_code()
        }
    }
}

//! `cram-sim <synth|restore|propose|eval|probe> [--config <path>]
//! [--section.key value ...] [--out <dir>] [inputs ...]`
//!
//! Dotted `--section.key value` (or `--section.key=value`) arguments are
//! config overrides and are pulled out before the remaining arguments are
//! parsed. Every command writes the effective configuration to
//! `<out>/run.toml`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cram_core::{
    apply_pulses, blank_frame_detect, frame_from_events, probe_diffusion_speed, run_pipeline,
    threshold_restore, BinaryFrame, BlobLocation,
};
use rayon::prelude::*;

use crate::boxes::save_boxes;
use crate::config::RunConfig;
use crate::error::{Result, SimError};
use crate::eval::{load_corpus, run_sweep, sweep_settings, write_reports};
use crate::events::{load_events, EventFormat};
use crate::output::{csv_bytes, ensure_dir, write_atomic};
use crate::pnm::{load_frame, save_analog, save_frame};
use crate::synth::write_corpus;

pub const THREADS_ENV: &str = "CRAM_SIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "cram-sim",
    version,
    about = "In-memory restoration and region proposal simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Inputs {
    /// Same as a positional INPUT; may be repeated.
    #[arg(long = "input", value_name = "PATH")]
    flagged: Vec<PathBuf>,
    /// Frame files (.pbm), event files (.csv, .aer) or directories of them.
    #[arg(value_name = "INPUT")]
    positional: Vec<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Restore frames by diffusion and flag blank results.
    Restore {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        /// Also write the final cell voltages as 8-bit PGM.
        #[arg(long)]
        emit_analog: bool,
    },
    /// Propose regions and report cycle counts.
    Propose {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Score a corpus directory against its ground truth.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Corpus directory, as written by `synth`.
        #[arg(value_name = "CORPUS")]
        corpus: PathBuf,
    },
    /// Time a 4x4 blob draining at the center and at the corner.
    Probe {
        #[command(flatten)]
        common: Common,
    },
}

/// `(section.key, raw value)` pairs from the command line.
pub type Overrides = Vec<(String, String)>;

/// Splits `--section.key value` pairs out of the argument list.
pub fn split_overrides(args: Vec<OsString>) -> Result<(Vec<OsString>, Overrides)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let key = arg
            .to_str()
            .and_then(|s| s.strip_prefix("--"))
            .map(str::to_owned);
        match key {
            Some(k) if k.split('=').next().is_some_and(|name| name.contains('.')) => {
                if let Some((name, value)) = k.split_once('=') {
                    overrides.push((name.to_string(), value.to_string()));
                } else {
                    let value = it
                        .next()
                        .and_then(|v| v.into_string().ok())
                        .ok_or_else(|| SimError::Config(format!("--{k} needs a value")))?;
                    overrides.push((k, value));
                }
            }
            _ => rest.push(arg),
        }
    }
    Ok((rest, overrides))
}

/// Worker count from `CRAM_SIM_THREADS`; unset or 0 means one per core.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| SimError::Config(format!("{THREADS_ENV}={v:?} is not a count"))),
    }
}

/// Parses arguments and runs the command. Returns the process exit code.
pub fn main_with_args(args: Vec<OsString>) -> u8 {
    let (rest, overrides) = match split_overrides(args) {
        Ok(v) => v,
        Err(e) => return report(e),
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = thread_count().and_then(|n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::Config(format!("thread pool: {e}")))
    });
    let result = pool.and_then(|pool| pool.install(|| run(cli.command, &overrides)));
    match result {
        Ok(()) => 0,
        Err(e) => report(e),
    }
}

fn report(e: SimError) -> u8 {
    eprintln!("cram-sim: {e}");
    e.exit_code()
}

fn prepare(common: &Common, overrides: &[(String, String)]) -> Result<RunConfig> {
    let cfg = RunConfig::load(common.config.as_deref(), overrides)?;
    ensure_dir(&common.out)?;
    write_atomic(&common.out.join("run.toml"), cfg.to_text().as_bytes())?;
    Ok(cfg)
}

fn run(command: Command, overrides: &[(String, String)]) -> Result<()> {
    match command {
        Command::Synth { common } => {
            let cfg = prepare(&common, overrides)?;
            write_corpus(&cfg.synth, cfg.width, cfg.height, &common.out)
        }
        Command::Restore {
            common,
            inputs,
            emit_analog,
        } => {
            let cfg = prepare(&common, overrides)?;
            let frames = load_inputs(&inputs, &cfg)?;
            restore(&cfg, &frames, &common.out, emit_analog)
        }
        Command::Propose { common, inputs } => {
            let cfg = prepare(&common, overrides)?;
            let frames = load_inputs(&inputs, &cfg)?;
            propose(&cfg, &frames, &common.out)
        }
        Command::Eval { common, corpus } => {
            let cfg = prepare(&common, overrides)?;
            let frames = load_corpus(&corpus)?;
            let settings = sweep_settings(
                &cfg.pipeline,
                &cfg.eval.sweep_amplitudes,
                &cfg.eval.sweep_substeps,
            );
            let results = run_sweep(&frames, &settings, &cfg.eval.iou_thresholds)?;
            write_reports(&common.out, &results).map(|_| ())
        }
        Command::Probe { common } => {
            let cfg = prepare(&common, overrides)?;
            probe(&cfg, &common.out)
        }
    }
}

/// A named input frame.
struct InputFrame {
    id: String,
    frame: BinaryFrame,
}

fn is_input(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("pbm")
        || EventFormat::from_path(path).is_some()
}

fn collect_paths(inputs: &Inputs) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs.flagged.iter().chain(&inputs.positional) {
        if p.is_dir() {
            let mut found = Vec::new();
            for entry in std::fs::read_dir(p).map_err(|e| SimError::io(p, e))? {
                let path = entry.map_err(|e| SimError::io(p, e))?.path();
                if path.is_file() && is_input(&path) {
                    found.push(path);
                }
            }
            found.sort();
            out.extend(found);
        } else if is_input(p) {
            out.push(p.clone());
        } else {
            return Err(SimError::Parse {
                path: p.clone(),
                offset: 0,
                message: "expected a .pbm, .csv or .aer file".into(),
            });
        }
    }
    if out.is_empty() {
        return Err(SimError::Config("no input frames given".into()));
    }
    Ok(out)
}

fn load_inputs(inputs: &Inputs, cfg: &RunConfig) -> Result<Vec<InputFrame>> {
    let paths = collect_paths(inputs)?;
    let frames: Vec<InputFrame> = paths
        .par_iter()
        .map(|path| {
            let frame = match EventFormat::from_path(path) {
                Some(format) => {
                    let events = load_events(path, format)?;
                    let w = &cfg.events;
                    frame_from_events(
                        &events, w.t_start, w.t_end, cfg.width, cfg.height, w.polarity,
                    )?
                }
                None => load_frame(path)?,
            };
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(InputFrame { id, frame })
        })
        .collect::<Result<_>>()?;
    let mut ids: Vec<&str> = frames.iter().map(|f| f.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(dup) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(SimError::Config(format!(
            "two inputs share the frame id `{}`",
            dup[0]
        )));
    }
    Ok(frames)
}

fn restore(cfg: &RunConfig, frames: &[InputFrame], out: &Path, emit_analog: bool) -> Result<()> {
    let p = &cfg.pipeline;
    let rows = frames
        .par_iter()
        .map(|f| {
            let state = apply_pulses(&f.frame, &p.diffusion, p.ring)?;
            let restored = threshold_restore(&state, p.diffusion.vth);
            save_frame(&restored, &out.join(format!("{}.restored.pbm", f.id)))?;
            if emit_analog {
                save_analog(&state, &out.join(format!("{}.analog.pgm", f.id)))?;
            }
            Ok(vec![
                f.id.clone(),
                f.frame.popcount().to_string(),
                restored.popcount().to_string(),
                blank_frame_detect(&restored, cfg.blank_max_ones).to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    write_atomic(
        &out.join("blank.csv"),
        &csv_bytes(&["frame_id", "ones_in", "ones_out", "blank"], rows),
    )
}

fn propose(cfg: &RunConfig, frames: &[InputFrame], out: &Path) -> Result<()> {
    let p = &cfg.pipeline;
    let rows = frames
        .par_iter()
        .map(|f| {
            let run = run_pipeline(&f.frame, p)?;
            save_boxes(&run.boxes, &out.join(format!("{}.boxes.json", f.id)))?;
            Ok(vec![
                f.id.clone(),
                run.boxes.len().to_string(),
                run.iss_iterations.to_string(),
                run.imc_cycles(&p.costs).to_string(),
                run.total_cycles(&p.costs).to_string(),
                run.ops.diffusion_ops.to_string(),
                run.ops.projection_ops.to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let header = [
        "frame_id",
        "n_objects",
        "iss_iterations",
        "imc_cycles",
        "total_cycles",
        "diffusion_ops",
        "projection_ops",
    ];
    write_atomic(&out.join("cycles.csv"), &csv_bytes(&header, rows))
}

fn probe(cfg: &RunConfig, out: &Path) -> Result<()> {
    let pr = &cfg.probe;
    let mut rows = Vec::new();
    for location in [BlobLocation::Center, BlobLocation::Corner] {
        let r = probe_diffusion_speed(
            pr.width,
            pr.height,
            location,
            &cfg.pipeline.diffusion,
            cfg.pipeline.ring,
            pr.max_substeps,
        )?;
        rows.push(vec![
            location.name().to_string(),
            r.steps_to_threshold.to_string(),
        ]);
    }
    write_atomic(
        &out.join("probe.csv"),
        &csv_bytes(&["location", "steps"], rows),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn overrides_are_split_out() {
        let (rest, ov) = split_overrides(os(&[
            "cram-sim",
            "probe",
            "--config",
            "a.toml",
            "--diffusion.amplitude",
            "0.5",
            "--rp.slot=3",
            "--out",
            "x.dir",
        ]))
        .unwrap();
        assert_eq!(
            rest,
            os(&["cram-sim", "probe", "--config", "a.toml", "--out", "x.dir"])
        );
        assert_eq!(
            ov,
            [
                ("diffusion.amplitude".into(), "0.5".into()),
                ("rp.slot".into(), "3".into())
            ]
        );
        assert!(split_overrides(os(&["cram-sim", "--rp.slot"])).is_err());
    }
}

//! Corpus scoring with optional diffusion-setting sweeps.

use std::path::{Path, PathBuf};

use cram_core::pipeline::{reports_from_scores, score_frame, validate_thresholds, FrameScore};
use cram_core::{BinaryFrame, BoundingBox, EvalReport, PipelineConfig};
use rayon::prelude::*;

use crate::boxes::load_boxes;
use crate::error::{Result, SimError};
use crate::output::{csv_bytes, fmt_f64, write_atomic};
use crate::pnm::load_frame;

pub const GT_SUFFIX: &str = ".gt.json";

/// A frame together with its ground-truth boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub id: String,
    pub frame: BinaryFrame,
    pub gt: Vec<BoundingBox>,
}

/// Loads every `<id>.gt.json` in `dir` with its `<id>.pbm`, ordered by id.
pub fn load_corpus(dir: &Path) -> Result<Vec<LabeledFrame>> {
    let entries = std::fs::read_dir(dir).map_err(|e| SimError::io(dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| SimError::io(dir, e))?;
        let name = entry.file_name();
        if let Some(id) = name.to_str().and_then(|n| n.strip_suffix(GT_SUFFIX)) {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    if ids.is_empty() {
        return Err(SimError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no *.gt.json files in corpus"),
        ));
    }
    ids.into_par_iter()
        .map(|id| {
            let frame = load_frame(&dir.join(format!("{id}.pbm")))?;
            let gt = load_boxes(&dir.join(format!("{id}{GT_SUFFIX}")))?;
            Ok(LabeledFrame { id, frame, gt })
        })
        .collect()
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting {
    pub id: usize,
    pub pipeline: PipelineConfig,
}

/// The base pipeline when both lists are empty, otherwise every
/// `(amplitude, substeps)` pair, amplitude-major.
pub fn sweep_settings(base: &PipelineConfig, amplitudes: &[f64], substeps: &[u32]) -> Vec<Setting> {
    if amplitudes.is_empty() && substeps.is_empty() {
        return vec![Setting {
            id: 0,
            pipeline: *base,
        }];
    }
    let mut out = Vec::with_capacity(amplitudes.len() * substeps.len());
    for &a in amplitudes {
        for &s in substeps {
            let mut p = *base;
            p.diffusion.amplitude = a;
            p.diffusion.substeps_per_pulse = s;
            out.push(Setting {
                id: out.len(),
                pipeline: p,
            });
        }
    }
    out
}

pub fn score_corpus(
    corpus: &[LabeledFrame],
    cfg: &PipelineConfig,
    iou_thresholds: &[f64],
) -> Result<Vec<EvalReport>> {
    cfg.validate()?;
    validate_thresholds(iou_thresholds)?;
    let scores: Vec<FrameScore> = corpus
        .par_iter()
        .map(|f| score_frame(&f.frame, &f.gt, cfg, iou_thresholds))
        .collect::<std::result::Result<_, _>>()?;
    Ok(reports_from_scores(&scores, iou_thresholds))
}

pub fn run_sweep(
    corpus: &[LabeledFrame],
    settings: &[Setting],
    iou_thresholds: &[f64],
) -> Result<Vec<(Setting, Vec<EvalReport>)>> {
    settings
        .iter()
        .map(|s| Ok((*s, score_corpus(corpus, &s.pipeline, iou_thresholds)?)))
        .collect()
}

pub fn eval_csv(results: &[(Setting, Vec<EvalReport>)]) -> Vec<u8> {
    let rows = results.iter().flat_map(|(s, reports)| {
        reports.iter().map(move |r| {
            vec![
                fmt_f64(r.iou_threshold),
                r.tp.to_string(),
                r.fp.to_string(),
                r.fn_.to_string(),
                fmt_f64(r.precision),
                fmt_f64(r.recall),
                fmt_f64(r.f1),
                s.id.to_string(),
            ]
        })
    });
    csv_bytes(
        &[
            "iou",
            "tp",
            "fp",
            "fn",
            "precision",
            "recall",
            "f1",
            "setting_id",
        ],
        rows,
    )
}

pub fn weighted_csv(results: &[(Setting, Vec<EvalReport>)]) -> Vec<u8> {
    let rows = results.iter().flat_map(|(s, reports)| {
        reports.iter().map(move |r| {
            vec![
                fmt_f64(r.iou_threshold),
                fmt_f64(r.weighted_precision),
                fmt_f64(r.weighted_recall),
                fmt_f64(r.weighted_f1),
                s.id.to_string(),
            ]
        })
    });
    csv_bytes(
        &[
            "iou",
            "weighted_precision",
            "weighted_recall",
            "weighted_f1",
            "setting_id",
        ],
        rows,
    )
}

pub fn settings_csv(settings: &[Setting]) -> Vec<u8> {
    let rows = settings.iter().map(|s| {
        let p = &s.pipeline;
        vec![
            s.id.to_string(),
            fmt_f64(p.diffusion.alpha),
            fmt_f64(p.diffusion.amplitude),
            p.diffusion.substeps_per_pulse.to_string(),
            p.diffusion.pulses.to_string(),
            p.restore.to_string(),
            p.consolidate.to_string(),
        ]
    });
    csv_bytes(
        &[
            "setting_id",
            "alpha",
            "amplitude",
            "substeps_per_pulse",
            "pulses",
            "restore",
            "rp",
        ],
        rows,
    )
}

/// Writes `eval.csv` (micro-averaged), `eval_weighted.csv` (per-frame
/// macro average weighted by ground-truth count) and `settings.csv`.
pub fn write_reports(out: &Path, results: &[(Setting, Vec<EvalReport>)]) -> Result<Vec<PathBuf>> {
    let settings: Vec<Setting> = results.iter().map(|(s, _)| *s).collect();
    let files = [
        ("eval.csv", eval_csv(results)),
        ("eval_weighted.csv", weighted_csv(results)),
        ("settings.csv", settings_csv(&settings)),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = out.join(name);
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid_is_amplitude_major() {
        let s = sweep_settings(&PipelineConfig::default(), &[0.5, 1.0], &[4, 8]);
        let got: Vec<_> = s
            .iter()
            .map(|s| {
                (
                    s.id,
                    s.pipeline.diffusion.amplitude,
                    s.pipeline.diffusion.substeps_per_pulse,
                )
            })
            .collect();
        assert_eq!(got, [(0, 0.5, 4), (1, 0.5, 8), (2, 1.0, 4), (3, 1.0, 8)]);
        assert_eq!(
            sweep_settings(&PipelineConfig::default(), &[], &[]).len(),
            1
        );
    }

    #[test]
    fn csv_layout() {
        let mut f = BinaryFrame::new(20, 20);
        f.fill_rect(2, 9, 2, 9, true);
        let corpus = vec![LabeledFrame {
            id: "a".into(),
            frame: f,
            gt: vec![BoundingBox::new(2, 9, 2, 9)],
        }];
        let settings = sweep_settings(&PipelineConfig::default(), &[], &[]);
        let results = run_sweep(&corpus, &settings, &[0.5]).unwrap();
        assert_eq!(
            String::from_utf8(eval_csv(&results)).unwrap(),
            "iou,tp,fp,fn,precision,recall,f1,setting_id\n0.500000,1,0,0,1.000000,1.000000,1.000000,0\n"
        );
    }
}

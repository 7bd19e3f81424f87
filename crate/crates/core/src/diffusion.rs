//! Image-restoration mode: the cell array as a 2-D RC network.
//!
//! Each cell's storage capacitor couples to its four neighbors through the
//! diffusion transistors while DE is high. One substep is a forward-Euler
//! step of that RC network with coupling `dt / (R C)`; the DE pulse width is
//! the number of substeps, the pulse amplitude scales the conductance, and the
//! pulse count repeats the diffuse/re-digitize cycle. The dummy ring takes
//! part in diffusion and its outer edge is reflecting, so total charge is
//! conserved.

use crate::error::{Error, Result};
use crate::frame::{embed, AnalogState, BinaryFrame};

/// Largest coupling for which the explicit 4-neighbor scheme is stable.
pub const MAX_COUPLING: f64 = 0.25;

/// Substep budget used by the probe when the caller has no opinion.
pub const DEFAULT_PROBE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionConfig {
    /// Coupling per substep, `dt / (R C)`.
    pub alpha: f64,
    /// DE pulse width, in substeps.
    pub substeps_per_pulse: u32,
    /// DE pulse amplitude as a conductance scale on `alpha`.
    pub amplitude: f64,
    pub pulses: u32,
    /// Switching threshold of the sensing inverter.
    pub vth: f64,
    /// Write the thresholded image back into the cells between pulses.
    pub redigitize_between_pulses: bool,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            alpha: 0.2,
            substeps_per_pulse: 8,
            amplitude: 1.0,
            pulses: 1,
            vth: 0.5,
            redigitize_between_pulses: true,
        }
    }
}

impl DiffusionConfig {
    /// Effective coupling applied in each substep.
    pub fn coupling(&self) -> f64 {
        self.alpha * self.amplitude
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= MAX_COUPLING) {
            return Err(Error::InvalidConfig(alloc::format!(
                "diffusion alpha {} outside (0, 0.25]",
                self.alpha
            )));
        }
        if !self.amplitude.is_finite() || self.amplitude < 0.0 {
            return Err(Error::InvalidConfig(
                "diffusion amplitude must be >= 0".into(),
            ));
        }
        if self.coupling() > MAX_COUPLING {
            return Err(Error::InvalidConfig(alloc::format!(
                "alpha * amplitude = {} exceeds the stability bound 0.25",
                self.coupling()
            )));
        }
        if self.substeps_per_pulse == 0 || self.pulses == 0 {
            return Err(Error::InvalidConfig(
                "pulses and substeps must be positive".into(),
            ));
        }
        if !(self.vth > 0.0 && self.vth < 1.0) {
            return Err(Error::InvalidConfig("vth must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// One explicit diffusion step over the whole extended grid.
///
/// `v'(c) = v(c) + coupling * sum(v(n) - v(c))` over the in-grid 4-neighbors.
/// The update is double-buffered. Neighbor differences are summed as
/// `(west + east) + (north + south)` so transposes and flips of the input map
/// to bit-identical transposes and flips of the output.
pub fn diffuse_substep(state: &AnalogState, coupling: f64) -> Result<AnalogState> {
    if !(coupling > 0.0 && coupling <= MAX_COUPLING) {
        return Err(Error::InvalidConfig(alloc::format!(
            "coupling {coupling} outside (0, 0.25]"
        )));
    }
    let mut out = state.clone();
    substep_into(state, &mut out, coupling);
    Ok(out)
}

fn substep_into(src: &AnalogState, dst: &mut AnalogState, coupling: f64) {
    let w = src.ext_width();
    let h = src.ext_height();
    let v = src.volts();
    let out = dst.volts_mut();
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let c = v[i];
            let west = if col > 0 { v[i - 1] - c } else { 0.0 };
            let east = if col + 1 < w { v[i + 1] - c } else { 0.0 };
            let north = if row > 0 { v[i - w] - c } else { 0.0 };
            let south = if row + 1 < h { v[i + w] - c } else { 0.0 };
            out[i] = c + coupling * ((west + east) + (north + south));
        }
    }
}

/// Runs `steps` substeps, ping-ponging between two buffers.
fn run_substeps(state: AnalogState, coupling: f64, steps: u32) -> AnalogState {
    if coupling == 0.0 || steps == 0 {
        return state;
    }
    let mut cur = state;
    let mut next = cur.clone();
    for _ in 0..steps {
        substep_into(&cur, &mut next, coupling);
        core::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Loads the frame and applies the configured DE pulse train. Between pulses
/// the interior is re-digitized at `vth` and the ring discharged; the state
/// after the final pulse is left analog.
pub fn apply_pulses(
    frame: &BinaryFrame,
    cfg: &DiffusionConfig,
    ring: usize,
) -> Result<AnalogState> {
    cfg.validate()?;
    let coupling = cfg.coupling();
    let mut state = embed(frame, ring);
    for pulse in 0..cfg.pulses {
        state = run_substeps(state, coupling, cfg.substeps_per_pulse);
        if cfg.redigitize_between_pulses && pulse + 1 < cfg.pulses {
            redigitize(&mut state, cfg.vth);
        }
    }
    Ok(state)
}

fn redigitize(state: &mut AnalogState, vth: f64) {
    for v in state.volts_mut() {
        *v = if *v > vth { 1.0 } else { 0.0 };
    }
    state.clear_ring();
}

/// Senses the interior through the inverter: strictly above `vth` reads 1.
pub fn threshold_restore(state: &AnalogState, vth: f64) -> BinaryFrame {
    BinaryFrame::from_fn(state.width(), state.height(), |r, c| {
        state.interior(r, c) > vth
    })
}

/// Full restoration: pulse train followed by a threshold read-out.
pub fn restore_image(
    frame: &BinaryFrame,
    cfg: &DiffusionConfig,
    ring: usize,
) -> Result<BinaryFrame> {
    let state = apply_pulses(frame, cfg, ring)?;
    Ok(threshold_restore(&state, cfg.vth))
}

/// A frame with at most `max_ones` set pixels counts as blank.
pub fn blank_frame_detect(frame: &BinaryFrame, max_ones: usize) -> bool {
    frame.popcount() <= max_ones
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlobLocation {
    Center,
    /// Top-left corner, touching the dummy ring.
    Corner,
}

impl BlobLocation {
    pub fn name(self) -> &'static str {
        match self {
            BlobLocation::Center => "center",
            BlobLocation::Corner => "corner",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeResult {
    pub location: BlobLocation,
    /// First substep after which every blob cell reads below `vth`.
    pub steps_to_threshold: u64,
}

pub const PROBE_BLOB: usize = 4;

/// Writes a 4x4 blob of 1s into an otherwise empty grid and counts substeps
/// (no re-digitization) until the hottest blob cell drops below `cfg.vth`.
///
/// Fails with [`Error::ProbeDidNotSettle`] when `max_substeps` elapse first.
/// A zero effective coupling can never cross, so it fails without iterating.
pub fn probe_diffusion_speed(
    grid_width: usize,
    grid_height: usize,
    location: BlobLocation,
    cfg: &DiffusionConfig,
    ring: usize,
    max_substeps: u64,
) -> Result<ProbeResult> {
    cfg.validate()?;
    if grid_width < PROBE_BLOB || grid_height < PROBE_BLOB {
        return Err(Error::InvalidConfig(
            "probe grid smaller than the 4x4 blob".into(),
        ));
    }
    let (top, left) = match location {
        BlobLocation::Center => (
            grid_height / 2 - PROBE_BLOB / 2,
            grid_width / 2 - PROBE_BLOB / 2,
        ),
        BlobLocation::Corner => (0, 0),
    };
    let mut frame = BinaryFrame::new(grid_width, grid_height);
    frame.fill_rect(top, top + PROBE_BLOB - 1, left, left + PROBE_BLOB - 1, true);

    let coupling = cfg.coupling();
    if coupling == 0.0 {
        return Err(Error::ProbeDidNotSettle {
            substeps: max_substeps,
        });
    }
    let blob_peak = |s: &AnalogState| {
        let mut peak = 0.0f64;
        for r in top..top + PROBE_BLOB {
            for c in left..left + PROBE_BLOB {
                peak = peak.max(s.interior(r, c));
            }
        }
        peak
    };
    let mut cur = embed(&frame, ring);
    let mut next = cur.clone();
    for step in 1..=max_substeps {
        substep_into(&cur, &mut next, coupling);
        core::mem::swap(&mut cur, &mut next);
        if blob_peak(&cur) < cfg.vth {
            return Ok(ProbeResult {
                location,
                steps_to_threshold: step,
            });
        }
    }
    Err(Error::ProbeDidNotSettle {
        substeps: max_substeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single_pixel(w: usize, h: usize, r: usize, c: usize) -> BinaryFrame {
        let mut f = BinaryFrame::new(w, h);
        f.set(r, c, true);
        f
    }

    #[test]
    fn uniform_state_is_equilibrium() {
        let s = AnalogState::from_volts(3, 3, 1, vec![0.5; 25]).unwrap();
        let out = diffuse_substep(&s, 0.2).unwrap();
        assert!(out.volts().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn center_impulse_spreads_to_edge_neighbors() {
        let s = embed(&single_pixel(3, 3, 1, 1), 0);
        let out = diffuse_substep(&s, 0.25).unwrap();
        let expected = [0.0, 0.25, 0.0, 0.25, 0.0, 0.25, 0.0, 0.25, 0.0];
        assert_eq!(out.volts(), &expected);
        assert_eq!(out.total_charge(), 1.0);
    }

    #[test]
    fn coupling_out_of_range_is_rejected() {
        let s = AnalogState::zeros(2, 2, 1);
        assert!(diffuse_substep(&s, 0.0).is_err());
        assert!(diffuse_substep(&s, 0.26).is_err());
        assert!(diffuse_substep(&s, f64::NAN).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DiffusionConfig::default().validate().is_ok());
        let bad = [
            DiffusionConfig {
                alpha: 0.0,
                ..Default::default()
            },
            DiffusionConfig {
                amplitude: 2.0,
                ..Default::default()
            },
            DiffusionConfig {
                amplitude: -1.0,
                ..Default::default()
            },
            DiffusionConfig {
                vth: 1.0,
                ..Default::default()
            },
            DiffusionConfig {
                pulses: 0,
                ..Default::default()
            },
            DiffusionConfig {
                substeps_per_pulse: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn zero_frame_stays_zero() {
        let s = apply_pulses(&BinaryFrame::new(6, 5), &DiffusionConfig::default(), 1).unwrap();
        assert!(s.volts().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn peak_decreases_every_substep() {
        let frame = single_pixel(9, 9, 4, 4);
        let mut state = embed(&frame, 1);
        let mut peaks = vec![state.max()];
        for _ in 0..8 {
            state = diffuse_substep(&state, 0.2).unwrap();
            peaks.push(state.max());
        }
        // independent stencil evaluation: 1, 0.2, 0.2, 0.104, ...; the second
        // substep holds the peak level, every other one lowers it
        assert!(peaks.windows(2).all(|p| p[1] <= p[0]));
        assert_eq!(peaks.windows(2).filter(|p| p[1] == p[0]).count(), 1);
        assert!((peaks[3] - 0.104).abs() < 1e-12);
        // same run through the pulse API
        let cfg = DiffusionConfig {
            substeps_per_pulse: 8,
            ..Default::default()
        };
        assert_eq!(apply_pulses(&frame, &cfg, 1).unwrap(), state);
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let frame = BinaryFrame::from_fn(7, 5, |r, c| (r * 3 + c) % 4 == 0);
        let cfg = DiffusionConfig {
            amplitude: 0.0,
            pulses: 3,
            ..Default::default()
        };
        assert_eq!(apply_pulses(&frame, &cfg, 1).unwrap(), embed(&frame, 1));
    }

    #[test]
    fn redigitize_between_pulses_discharges_ring() {
        let mut frame = BinaryFrame::new(8, 8);
        frame.fill_rect(0, 7, 0, 7, true);
        let cfg = DiffusionConfig {
            pulses: 2,
            substeps_per_pulse: 1,
            ..Default::default()
        };
        let two = apply_pulses(&frame, &cfg, 1).unwrap();
        // after pulse 1 the ring is reset, so pulse 2 starts from the plain frame again
        let one = apply_pulses(&frame, &DiffusionConfig { pulses: 1, ..cfg }, 1).unwrap();
        assert_eq!(two, one);
        let analog = DiffusionConfig {
            redigitize_between_pulses: false,
            ..cfg
        };
        assert_ne!(apply_pulses(&frame, &analog, 1).unwrap(), one);
    }

    #[test]
    fn threshold_tie_reads_zero() {
        let s = AnalogState::from_volts(2, 1, 0, vec![0.5, 0.500001]).unwrap();
        assert_eq!(threshold_restore(&s, 0.5).bits(), &[0, 1]);
        assert!(threshold_restore(&AnalogState::zeros(3, 3, 1), 0.5).is_empty());
    }

    #[test]
    fn embed_threshold_round_trip() {
        let f = BinaryFrame::from_fn(5, 4, |r, c| (r ^ c) & 1 == 1);
        assert_eq!(threshold_restore(&embed(&f, 2), 0.5), f);
    }

    #[test]
    fn isolated_pixel_is_removed() {
        let f = single_pixel(11, 11, 5, 5);
        let state = apply_pulses(&f, &DiffusionConfig::default(), 1).unwrap();
        // peak of an isolated pixel after 8 substeps at 0.2, from an independent
        // evaluation of the stencil
        assert!((state.max() - 0.04795648).abs() < 1e-9);
        assert!(restore_image(&f, &DiffusionConfig::default(), 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn hole_in_seven_by_seven_block_fills() {
        let mut f = BinaryFrame::new(15, 15);
        f.fill_rect(4, 10, 4, 10, true);
        f.set(7, 7, false);
        let out = restore_image(&f, &DiffusionConfig::default(), 1).unwrap();
        for r in 5..=9 {
            for c in 5..=9 {
                assert!(out.get(r, c), "({r},{c})");
            }
        }
        // nothing appears outside the block
        for r in 0..15 {
            for c in 0..15 {
                if !(4..=10).contains(&r) || !(4..=10).contains(&c) {
                    assert!(!out.get(r, c));
                }
            }
        }
    }

    #[test]
    fn blank_detection_is_inclusive() {
        let mut f = BinaryFrame::new(4, 4);
        assert!(blank_frame_detect(&f, 0));
        f.set(0, 0, true);
        assert!(!blank_frame_detect(&f, 0));
        for c in 1..4 {
            f.set(0, c, true);
        }
        f.set(1, 0, true);
        assert!(blank_frame_detect(&f, 5));
    }

    #[test]
    fn probe_center_faster_than_corner() {
        let cfg = DiffusionConfig::default();
        let center =
            probe_diffusion_speed(64, 64, BlobLocation::Center, &cfg, 1, DEFAULT_PROBE_BUDGET)
                .unwrap();
        let corner =
            probe_diffusion_speed(64, 64, BlobLocation::Corner, &cfg, 1, DEFAULT_PROBE_BUDGET)
                .unwrap();
        // frozen from an independent numpy evaluation of the same stencil
        assert_eq!(center.steps_to_threshold, 9);
        assert_eq!(corner.steps_to_threshold, 11);
    }

    #[test]
    fn probe_slows_with_lower_amplitude() {
        let half = DiffusionConfig {
            amplitude: 0.5,
            ..Default::default()
        };
        let r = probe_diffusion_speed(64, 64, BlobLocation::Center, &half, 1, DEFAULT_PROBE_BUDGET)
            .unwrap();
        assert_eq!(r.steps_to_threshold, 18);
    }

    #[test]
    fn probe_without_conductance_hits_guard() {
        let cfg = DiffusionConfig {
            amplitude: 0.0,
            ..Default::default()
        };
        let err =
            probe_diffusion_speed(64, 64, BlobLocation::Center, &cfg, 1, DEFAULT_PROBE_BUDGET);
        assert_eq!(
            err,
            Err(Error::ProbeDidNotSettle {
                substeps: DEFAULT_PROBE_BUDGET
            })
        );
        let tight = probe_diffusion_speed(
            64,
            64,
            BlobLocation::Center,
            &DiffusionConfig::default(),
            1,
            5,
        );
        assert_eq!(tight, Err(Error::ProbeDidNotSettle { substeps: 5 }));
    }
}

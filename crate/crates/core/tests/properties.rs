use std::collections::VecDeque;

use cram_core::diffusion::{diffuse_substep, restore_image, DiffusionConfig};
use cram_core::frame::{embed, frame_from_events, AnalogState, BinaryFrame, Event, PolarityMode};
use cram_core::metrics::{iou, match_boxes};
use cram_core::projection::{project, Axis, LineMask, ProjectionConfig};
use cram_core::region::{iss, rp_update, BoundingBox, RpConfig};
use cram_core::timing::{trace_cycles, CostTable, CycleTrace, OpKind};
use cram_core::{ccl, threshold_restore, Connectivity};
use proptest::prelude::*;

fn frame_strategy(max_w: usize, max_h: usize, density: f64) -> impl Strategy<Value = BinaryFrame> {
    (1..=max_w, 1..=max_h).prop_flat_map(move |(w, h)| {
        proptest::collection::vec(proptest::bool::weighted(density), w * h).prop_map(move |bits| {
            BinaryFrame::from_bits(w, h, bits.into_iter().map(u8::from).collect()).unwrap()
        })
    })
}

fn state_strategy(side: usize, ring: usize) -> impl Strategy<Value = AnalogState> {
    let n = (side + 2 * ring) * (side + 2 * ring);
    proptest::collection::vec(0.0f64..=1.0, n)
        .prop_map(move |v| AnalogState::from_volts(side, side, ring, v).unwrap())
}

fn box_strategy() -> impl Strategy<Value = BoundingBox> {
    (0usize..40, 0usize..8, 0usize..40, 0usize..8)
        .prop_map(|(r0, h, c0, w)| BoundingBox::new(r0, r0 + h, c0, c0 + w))
}

/// Extended-grid transpose of a square state.
fn transpose(s: &AnalogState) -> AnalogState {
    let n = s.ext_width();
    let v = (0..n * n).map(|i| s.ext(i % n, i / n)).collect();
    AnalogState::from_volts(s.width(), s.height(), s.ring(), v).unwrap()
}

fn flip_h(s: &AnalogState) -> AnalogState {
    let (w, h) = (s.ext_width(), s.ext_height());
    let v = (0..w * h).map(|i| s.ext(i / w, w - 1 - i % w)).collect();
    AnalogState::from_volts(s.width(), s.height(), s.ring(), v).unwrap()
}

fn flip_v(s: &AnalogState) -> AnalogState {
    let (w, h) = (s.ext_width(), s.ext_height());
    let v = (0..w * h).map(|i| s.ext(h - 1 - i / w, i % w)).collect();
    AnalogState::from_volts(s.width(), s.height(), s.ring(), v).unwrap()
}

/// Breadth-first flood fill, kept independent of the union-find labeling.
fn flood_fill_boxes(frame: &BinaryFrame, conn: Connectivity) -> Vec<(usize, BoundingBox)> {
    let (w, h) = (frame.width(), frame.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let offsets: &[(isize, isize)] = match conn {
        Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
        Connectivity::Eight => &[
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ],
    };
    for r in 0..h {
        for c in 0..w {
            if !frame.get(r, c) || seen[r * w + c] {
                continue;
            }
            let mut bbox = BoundingBox::new(r, r, c, c);
            let mut count = 0;
            let mut queue = VecDeque::from([(r, c)]);
            seen[r * w + c] = true;
            while let Some((y, x)) = queue.pop_front() {
                count += 1;
                bbox = bbox.union(&BoundingBox::new(y, y, x, x));
                for &(dy, dx) in offsets {
                    let (ny, nx) = (y as isize + dy, x as isize + dx);
                    if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                        continue;
                    }
                    let (ny, nx) = (ny as usize, nx as usize);
                    if frame.get(ny, nx) && !seen[ny * w + nx] {
                        seen[ny * w + nx] = true;
                        queue.push_back((ny, nx));
                    }
                }
            }
            out.push((count, bbox));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn charge_is_conserved(state in state_strategy(8, 1), coupling in 0.01f64..=0.25) {
        let before = state.total_charge();
        let mut s = state;
        for _ in 0..200 {
            s = diffuse_substep(&s, coupling).unwrap();
        }
        prop_assert!((s.total_charge() - before).abs() <= 1e-12 * before.max(1.0));
    }

    #[test]
    fn maximum_principle_and_monotone_smoothing(state in state_strategy(6, 1), coupling in 0.01f64..=0.25) {
        let (lo, hi) = (state.min(), state.max());
        let mut s = state;
        for _ in 0..30 {
            let next = diffuse_substep(&s, coupling).unwrap();
            prop_assert!(next.max() <= s.max());
            prop_assert!(next.min() >= s.min());
            prop_assert!(next.min() >= lo && next.max() <= hi);
            s = next;
        }
    }

    #[test]
    fn diffusion_commutes_with_symmetries(state in state_strategy(7, 1), coupling in 0.01f64..=0.25) {
        let d = diffuse_substep(&state, coupling).unwrap();
        prop_assert_eq!(diffuse_substep(&transpose(&state), coupling).unwrap(), transpose(&d));
        prop_assert_eq!(diffuse_substep(&flip_h(&state), coupling).unwrap(), flip_h(&d));
        prop_assert_eq!(diffuse_substep(&flip_v(&state), coupling).unwrap(), flip_v(&d));
    }

    #[test]
    fn diffusion_is_linear(s1 in state_strategy(6, 1), s2 in state_strategy(6, 1), a in 0.0f64..=0.5, coupling in 0.01f64..=0.25) {
        let b = 1.0 - a;
        let mix = |x: &AnalogState, y: &AnalogState| {
            let v = x.volts().iter().zip(y.volts()).map(|(p, q)| a * p + b * q).collect();
            AnalogState::from_volts(6, 6, 1, v).unwrap()
        };
        let lhs = diffuse_substep(&mix(&s1, &s2), coupling).unwrap();
        let rhs = mix(&diffuse_substep(&s1, coupling).unwrap(), &diffuse_substep(&s2, coupling).unwrap());
        for (l, r) in lhs.volts().iter().zip(rhs.volts()) {
            prop_assert!((l - r).abs() <= 1e-12);
        }
    }

    #[test]
    fn embed_preserves_interior(frame in frame_strategy(12, 12, 0.4), ring in 0usize..3) {
        prop_assert_eq!(threshold_restore(&embed(&frame, ring), 0.5), frame);
    }

    #[test]
    fn event_order_does_not_matter(
        events in proptest::collection::vec((0u32..100, 0u16..16, 0u16..12, 0u8..2), 0..60),
        seed in any::<u64>(),
    ) {
        let events: Vec<Event> = events.into_iter().map(|(t, x, y, p)| Event { t, x, y, p }).collect();
        let mut shuffled = events.clone();
        // deterministic Fisher-Yates driven by an LCG
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        for mode in [PolarityMode::Any, PolarityMode::PositiveOnly] {
            let a = frame_from_events(&events, 10, 90, 16, 12, mode).unwrap();
            let b = frame_from_events(&shuffled, 10, 90, 16, 12, mode).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn ccl_matches_flood_fill(frame in frame_strategy(20, 20, 0.35)) {
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let comps = ccl(&frame, conn);
            let oracle = flood_fill_boxes(&frame, conn);
            let got: Vec<_> = comps.iter().map(|c| (c.pixels, c.bbox)).collect();
            prop_assert_eq!(&got, &oracle);
            prop_assert!(comps.iter().enumerate().all(|(i, c)| c.label as usize == i + 1));
            prop_assert_eq!(comps.iter().map(|c| c.pixels).sum::<usize>(), frame.popcount());
        }
        prop_assert!(ccl(&frame, Connectivity::Eight).len() <= ccl(&frame, Connectivity::Four).len());
    }

    #[test]
    fn ccl_boxes_are_tight(frame in frame_strategy(16, 16, 0.3)) {
        for c in ccl(&frame, Connectivity::Eight) {
            let b = c.bbox;
            prop_assert!((b.c0..=b.c1).any(|x| frame.get(b.r0, x)));
            prop_assert!((b.c0..=b.c1).any(|x| frame.get(b.r1, x)));
            prop_assert!((b.r0..=b.r1).any(|y| frame.get(y, b.c0)));
            prop_assert!((b.r0..=b.r1).any(|y| frame.get(y, b.c1)));
        }
    }

    #[test]
    fn iou_symmetric_and_bounded(a in box_strategy(), b in box_strategy()) {
        prop_assert_eq!(iou(&a, &b), iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&iou(&a, &b)));
        prop_assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn matching_is_one_to_one(
        pred in proptest::collection::vec(box_strategy(), 0..8),
        gt in proptest::collection::vec(box_strategy(), 0..8),
        thr in 0.05f64..=1.0,
    ) {
        let m = match_boxes(&pred, &gt, thr);
        let mut gs: Vec<_> = m.pairs.iter().map(|p| p.0).collect();
        let mut ps: Vec<_> = m.pairs.iter().map(|p| p.1).collect();
        gs.sort_unstable();
        gs.dedup();
        ps.sort_unstable();
        ps.dedup();
        prop_assert_eq!(gs.len(), m.tp);
        prop_assert_eq!(ps.len(), m.tp);
        prop_assert_eq!(m.tp + m.fp, pred.len());
        prop_assert_eq!(m.tp + m.fn_, gt.len());
        for &(g, p) in &m.pairs {
            prop_assert!(iou(&pred[p], &gt[g]) >= thr);
        }
    }

    #[test]
    fn f1_falls_as_threshold_rises(
        pred in proptest::collection::vec(box_strategy(), 0..8),
        gt in proptest::collection::vec(box_strategy(), 1..8),
    ) {
        let thresholds = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
        let f1s: Vec<f64> = thresholds.iter().map(|&t| match_boxes(&pred, &gt, t).tally().f1()).collect();
        prop_assert!(f1s.windows(2).all(|w| w[1] <= w[0]), "{:?}", f1s);
    }

    #[test]
    fn rp_update_is_idempotent_and_order_free(
        boxes in proptest::collection::vec(box_strategy(), 0..12),
        size_min in 0usize..10,
        slot_r in 0usize..6,
        slot_c in 0usize..6,
    ) {
        let cfg = RpConfig { size_min, slot_r, slot_c, ..Default::default() };
        let once = rp_update(&boxes, &cfg);
        prop_assert_eq!(rp_update(&once, &cfg), once.clone());
        let mut rev = boxes.clone();
        rev.reverse();
        prop_assert_eq!(rp_update(&rev, &cfg), once.clone());
        let mut rotated = boxes.clone();
        if !rotated.is_empty() {
            rotated.rotate_left(boxes.len() / 2);
        }
        prop_assert_eq!(rp_update(&rotated, &cfg), once.clone());
        prop_assert!(once.windows(2).all(|w| (w[0].r0, w[0].c0) <= (w[1].r0, w[1].c0)));
    }

    #[test]
    fn raising_vref_never_adds_lines(frame in frame_strategy(16, 16, 0.2), code in 0u8..15) {
        let lo = ProjectionConfig { dac_code: code, lambda: 0.7 };
        let hi = ProjectionConfig { dac_code: code + 1, lambda: 0.7 };
        for axis in [Axis::Rows, Axis::Cols] {
            let mask = LineMask::full(axis.other().lines(&frame));
            let a = project(&frame, axis, &mask, &lo).unwrap();
            let b = project(&frame, axis, &mask, &hi).unwrap();
            prop_assert!(a.iter().zip(&b).all(|(x, y)| *x || !*y));
        }
    }

    #[test]
    fn search_boxes_cover_every_pixel(frame in frame_strategy(24, 24, 0.15)) {
        let cfg = RpConfig { size_min: 1, slot_r: 0, slot_c: 0, ..Default::default() };
        let out = iss(&frame, &cfg).unwrap();
        prop_assert!(out.iterations <= cfg.max_iters);
        for r in 0..frame.height() {
            for c in 0..frame.width() {
                if frame.get(r, c) {
                    prop_assert!(out.boxes.iter().any(|b| b.contains(r, c)), "({}, {}) uncovered", r, c);
                }
            }
        }
    }

    #[test]
    fn trace_cycles_are_additive(
        a in proptest::collection::vec((0usize..4, 1u64..50), 0..10),
        b in proptest::collection::vec((0usize..4, 1u64..50), 0..10),
    ) {
        let kinds = [OpKind::FullAxisProjection, OpKind::RegionProjection, OpKind::ControllerObject, OpKind::ControllerFixed];
        let build = |v: &[(usize, u64)]| {
            let mut t = CycleTrace::new();
            for &(k, n) in v {
                t.push(kinds[k], n);
            }
            t
        };
        let (ta, tb) = (build(&a), build(&b));
        let costs = CostTable { full_axis_projection: 7, region_projection: 5, controller_object: 3, controller_fixed: 11 };
        let sum = trace_cycles(&ta, &costs) + trace_cycles(&tb, &costs);
        prop_assert_eq!(trace_cycles(&(ta + tb), &costs), sum);
    }
}

#[test]
fn checkerboards_terminate() {
    for (w, h) in [(32, 32), (31, 17), (64, 48)] {
        let frame = BinaryFrame::from_fn(w, h, |r, c| (r + c) % 2 == 0);
        let out = iss(&frame, &RpConfig::default()).unwrap();
        assert!(out.iterations <= 16);
        let stripes = BinaryFrame::from_fn(w, h, |r, c| r % 2 == 0 && c % 2 == 0);
        let cfg = RpConfig {
            max_iters: 5,
            ..Default::default()
        };
        assert!(iss(&stripes, &cfg).unwrap().iterations <= 5);
    }
}

#[test]
fn restoration_denoises_above_unit_diffusion_time() {
    // per-pulse coupling * substeps >= 1.0 removes an isolated pixel
    for (alpha, substeps) in [
        (0.25, 4),
        (0.1, 10),
        (0.05, 20),
        (0.125, 8),
        (0.2, 5),
        (0.2, 16),
    ] {
        let cfg = DiffusionConfig {
            alpha,
            substeps_per_pulse: substeps,
            ..Default::default()
        };
        for (r, c) in [(0, 0), (0, 8), (4, 4), (8, 8), (3, 7)] {
            let mut f = BinaryFrame::new(9, 9);
            f.set(r, c, true);
            assert!(
                restore_image(&f, &cfg, 1).unwrap().is_empty(),
                "alpha {alpha} substeps {substeps} at ({r},{c})"
            );
        }
    }
}

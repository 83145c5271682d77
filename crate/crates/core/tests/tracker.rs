use image::{Rgb, RgbImage};
use ovtext::band_detect::TextBand;
use ovtext::tracker::*;
use ovtext::Rect;
use proptest::prelude::*;

const GRAY: Rgb<u8> = Rgb([120, 120, 120]);

fn band(r: Rect) -> TextBand<f64> {
    TextBand { rect: r, density: 1.0 }
}

/// Gray frame with a blue band and white stripes painted over each rect.
fn frame(rects: &[Rect]) -> RgbImage {
    let mut img = RgbImage::from_pixel(320, 120, GRAY);
    for r in rects {
        for y in r.y..r.bottom().min(img.height()) {
            for x in r.x..r.right().min(img.width()) {
                let c = if (x - r.x) % 6 < 2 { [255, 255, 255] } else { [20, 30, 150] };
                img.put_pixel(x, y, Rgb(c));
            }
        }
    }
    img
}

fn kinds(events: &[TrackEvent]) -> Vec<EventKind> {
    events.iter().map(|e| e.kind).collect()
}

#[test]
fn first_detection_is_a_new_track() {
    let r = Rect::new(10, 10, 200, 20);
    let mut t = Tracker::<f64>::default();
    let ev = t.step(0, &[band(r)], &frame(&[r])).unwrap();
    assert_eq!(kinds(&ev), vec![EventKind::New]);
    assert_eq!(t.active().len(), 1);
    assert_eq!(t.last_detection_cases(), &[DetectionCase::NewEntry]);
}

#[test]
fn stationary_band_keeps_its_id() {
    let r = Rect::new(10, 10, 200, 20);
    let img = frame(&[r]);
    let mut t = Tracker::<f64>::default();
    for f in 0..10 {
        let ev = t.step(f, &[band(r)], &img).unwrap();
        let expect = if f == 0 { EventKind::New } else { EventKind::Updated };
        assert_eq!(kinds(&ev), vec![expect]);
    }
    let tr = &t.active()[0];
    assert_eq!((tr.id, tr.age, tr.misses, tr.history.len()), (1, 10, 0, 10));
}

#[test]
fn dropped_detection_is_restored() {
    let r = Rect::new(10, 10, 200, 20);
    let img = frame(&[r]);
    let mut t = Tracker::<f64>::default();
    t.step(0, &[band(r)], &img).unwrap();
    let ev = t.step(1, &[], &img).unwrap();
    assert_eq!(kinds(&ev), vec![EventKind::Restored]);
    assert_eq!(t.active()[0].misses, 1);
    t.step(2, &[band(r)], &img).unwrap();
    assert_eq!(t.active()[0].misses, 0);
    assert_eq!(t.active()[0].id, 1);
}

#[test]
fn vanished_band_terminates() {
    let r = Rect::new(10, 10, 200, 20);
    let mut t = Tracker::<f64>::default();
    t.step(0, &[band(r)], &frame(&[r])).unwrap();
    let ev = t.step(1, &[], &frame(&[])).unwrap();
    assert_eq!(kinds(&ev), vec![EventKind::Terminated]);
    assert!(t.active().is_empty());
    assert_eq!(t.finished()[0].state, TrackState::Terminated);
}

#[test]
fn misses_are_capped() {
    let r = Rect::new(10, 10, 200, 20);
    let img = frame(&[r]);
    let mut t = Tracker::<f64>::default();
    t.step(0, &[band(r)], &img).unwrap();
    for f in 1..=DEFAULT_MAX_MISSES as u64 {
        assert_eq!(kinds(&t.step(f, &[], &img).unwrap()), vec![EventKind::Restored]);
    }
    let ev = t.step(DEFAULT_MAX_MISSES as u64 + 1, &[], &img).unwrap();
    assert_eq!(kinds(&ev), vec![EventKind::Terminated]);
}

#[test]
fn separated_words_split_the_track() {
    let whole = Rect::new(10, 10, 200, 20);
    let left = Rect::new(10, 10, 60, 20);
    let right = Rect::new(150, 10, 60, 20);
    let mut t = Tracker::<f64>::default();
    t.step(0, &[band(whole)], &frame(&[whole])).unwrap();
    let ev = t.step(1, &[band(left), band(right)], &frame(&[left, right])).unwrap();
    assert_eq!(kinds(&ev), vec![EventKind::Split]);
    assert_eq!(ev[0].track_ids, vec![1, 2]);
    assert_eq!(t.active().len(), 2);
    assert_eq!(t.active()[0].rect, left);
    assert_eq!(t.active()[1].rect, right);
}

#[test]
fn fragmented_detection_heals_when_band_is_unchanged() {
    let whole = Rect::new(10, 10, 200, 20);
    let img = frame(&[whole]);
    let mut t = Tracker::<f64>::default();
    t.step(0, &[band(whole)], &img).unwrap();
    let halves = [band(Rect::new(10, 10, 99, 20)), band(Rect::new(111, 10, 99, 20))];
    let ev = t.step(1, &halves, &img).unwrap();
    assert_eq!(kinds(&ev), vec![EventKind::Updated]);
    assert_eq!(t.active().len(), 1);
    assert_eq!(t.active()[0].rect, whole);
    assert_eq!(t.last_detection_cases(), &[DetectionCase::ManyDetections; 2]);
}

#[test]
fn covering_detection_merges_tracks_into_the_oldest() {
    let a = Rect::new(10, 10, 90, 20);
    let b = Rect::new(110, 10, 90, 20);
    let both = Rect::new(10, 10, 190, 20);
    let mut t = Tracker::<f64>::default();
    t.step(0, &[band(a)], &frame(&[a])).unwrap();
    t.step(1, &[band(a), band(b)], &frame(&[a, b])).unwrap();
    let ev = t.step(2, &[band(both)], &frame(&[both])).unwrap();
    assert_eq!(kinds(&ev), vec![EventKind::Merged]);
    assert_eq!(ev[0].track_ids, vec![1, 2]);
    assert_eq!(t.active().len(), 1);
    assert_eq!((t.active()[0].id, t.active()[0].rect), (1, both));
    assert_eq!(t.finished()[0].id, 2);
}

#[test]
fn association_set_examples() {
    let d = Rect::new(0, 0, 100, 20);
    let s = build_association_sets::<f64>(&[], &[d], 0.1).unwrap();
    assert_eq!(s.ds, vec![Vec::<usize>::new()]);
    let s = build_association_sets::<f64>(&[d], &[d], 0.1).unwrap();
    assert_eq!((s.ts, s.ds), (vec![vec![0]], vec![vec![0]]));
    let a = Rect::new(0, 0, 40, 20);
    let b = Rect::new(50, 0, 40, 20);
    let s = build_association_sets::<f64>(&[a, b], &[d], 0.1).unwrap();
    assert_eq!((s.ts, s.ds), (vec![vec![0], vec![0]], vec![vec![0, 1]]));
}

#[test]
fn malformed_detections_are_rejected() {
    let r = Rect::new(10, 10, 200, 20);
    let mut t = Tracker::<f64>::default();
    let bad = [band(Rect::new(300, 100, 50, 50)), band(Rect::new(5, 5, 0, 4)), band(r)];
    let ev = t.step(0, &bad, &frame(&[r])).unwrap();
    assert_eq!(kinds(&ev), vec![EventKind::New]);
    assert_eq!(
        t.last_detection_cases(),
        &[DetectionCase::Rejected, DetectionCase::Rejected, DetectionCase::NewEntry]
    );
}

#[test]
fn frames_must_increase() {
    let mut t = Tracker::<f64>::default();
    let img = frame(&[]);
    t.step(3, &[], &img).unwrap();
    assert!(t.step(3, &[], &img).is_err());
    assert!(t.step(2, &[], &img).is_err());
}

#[test]
fn stationary_non_overlapping_bands_conserve_ids() {
    let rects = [Rect::new(10, 5, 150, 18), Rect::new(40, 40, 200, 22), Rect::new(5, 80, 300, 30)];
    let img = frame(&rects);
    let dets: Vec<_> = rects.iter().map(|&r| band(r)).collect();
    let mut t = Tracker::<f64>::default();
    t.step(0, &dets, &img).unwrap();
    let ids: Vec<u64> = t.active().iter().map(|t| t.id).collect();
    for f in 1..30 {
        t.step(f, &dets, &img).unwrap();
        assert_eq!(t.active().iter().map(|t| t.id).collect::<Vec<_>>(), ids);
    }
}

fn arb_rect() -> impl Strategy<Value = Rect> {
    (0u32..300, 0u32..110, 1u32..120, 1u32..40).prop_map(|(x, y, w, h)| Rect::new(x, y, w, h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Each valid detection is handled by exactly one case; ids are never
    /// reused after termination; replaying gives the same events.
    #[test]
    fn step_partition_and_lifecycle(frames in prop::collection::vec(prop::collection::vec(arb_rect(), 0..6), 1..12)) {
        let run = || {
            let mut t = Tracker::<f64>::default();
            let mut all_events = Vec::new();
            let mut dead = std::collections::BTreeSet::new();
            for (f, rects) in frames.iter().enumerate() {
                let img = frame(rects);
                let dets: Vec<_> = rects.iter().map(|&r| band(r)).collect();
                let ev = t.step(f as u64, &dets, &img).unwrap();
                for (r, c) in rects.iter().zip(t.last_detection_cases()) {
                    let valid = r.fits_in(img.width(), img.height());
                    prop_assert_eq!(valid, *c != DetectionCase::Rejected);
                }
                for tr in t.active() {
                    prop_assert!(!dead.contains(&tr.id));
                    prop_assert!(tr.misses <= DEFAULT_MAX_MISSES);
                    prop_assert!(!tr.history.is_empty());
                }
                dead.extend(t.finished().iter().map(|tr| tr.id));
                all_events.extend(ev);
            }
            Ok(all_events)
        };
        prop_assert_eq!(run()?, run()?);
    }

    #[test]
    fn association_sets_are_symmetric(tracks in prop::collection::vec(arb_rect(), 0..6), dets in prop::collection::vec(arb_rect(), 0..6)) {
        let s = build_association_sets::<f64>(&tracks, &dets, 0.1).unwrap();
        for (i, js) in s.ts.iter().enumerate() {
            for &j in js {
                prop_assert!(s.ds[j].contains(&i));
            }
        }
        for (j, is) in s.ds.iter().enumerate() {
            for &i in is {
                prop_assert!(s.ts[i].contains(&j));
            }
        }
    }
}

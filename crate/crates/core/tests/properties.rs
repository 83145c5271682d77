use std::collections::BTreeMap;

use image::{Rgb, RgbImage};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ovtext::band_detect::{epsilon_cca, BandDetector, Prominence};
use ovtext::eval::{epshtein_prf, track_assignments, SeqTrack};
use ovtext::extract::{binarize_band, dictionary_correct, error_rates, Dictionary};
use ovtext::pipeline::edge_map;
use ovtext::preprocess::{enhance_stages, GrayFrame};
use ovtext::synth::{corpus_frame_spec, glyph_mask, render_frame, CorpusParams, Renderer};
use ovtext::{EdgeMap, Rect};

fn arb_frame() -> impl Strategy<Value = GrayFrame<f64>> {
    (4usize..24, 4usize..24).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop_oneof![Just(0u8), Just(255u8), any::<u8>()], w * h)
            .prop_map(move |px| GrayFrame::new(w, h, px.iter().map(|&p| p as f64 / 255.0).collect()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn enhancement_is_monotone_and_keeps_zeros(frame in arb_frame()) {
        let Ok(s) = enhance_stages(&frame) else { return Ok(()) };
        let mag = &s.gradient.mag;
        let out = &s.enhanced.val;
        let mut order: Vec<usize> = (0..mag.len()).collect();
        order.sort_by(|&a, &b| mag[a].total_cmp(&mag[b]));
        for w in order.windows(2) {
            prop_assert!(out[w[0]] <= out[w[1]], "{} -> {} but {} -> {}", mag[w[0]], out[w[0]], mag[w[1]], out[w[1]]);
        }
        for (m, e) in mag.iter().zip(out) {
            if *m == 0.0 {
                prop_assert_eq!(*e, 0.0);
            }
            prop_assert!((0.0..=1.0).contains(e));
        }
    }

    #[test]
    fn stretch_zeroes_everything_below_cutoff(frame in arb_frame()) {
        let Ok(s) = enhance_stages(&frame) else { return Ok(()) };
        let norm = s.gradient.normalized();
        for (x, v) in norm.iter().zip(&s.stretched.val) {
            if *x < s.params.g_ns {
                prop_assert_eq!(*v, 0.0);
            }
        }
        let zeros = |v: &[f64]| v.iter().filter(|&&x| x == 0.0).count();
        prop_assert!(zeros(&s.stretched.val) >= zeros(&norm));
    }
}

/// P(value < 0.6) over the pixels selected by `inside`.
fn below(map: &EdgeMap, inside: impl Fn(u32, u32) -> bool) -> f64 {
    let (mut n, mut low) = (0usize, 0usize);
    for y in 0..map.height {
        for x in 0..map.width {
            if inside(x as u32, y as u32) {
                n += 1;
                low += usize::from(map.get(x, y) < 0.6);
            }
        }
    }
    low as f64 / n.max(1) as f64
}

#[test]
fn enhanced_map_separates_text_from_background() {
    let p = CorpusParams::default();
    let (mut text, mut rest, mut n) = (0.0, 0.0, 0.0);
    for i in 0..10 {
        let (img, rec) = render_frame(&corpus_frame_spec(31, i, &p), 0).unwrap();
        let map: EdgeMap = edge_map(&img, ovtext::pipeline::EdgeMode::Enhanced).unwrap();
        let rects: Vec<Rect> = rec.bands.iter().map(|b| b.rect()).collect();
        let hit = |x: u32, y: u32| rects.iter().any(|r| x >= r.x && x < r.right() && y >= r.y && y < r.bottom());
        text += below(&map, hit);
        rest += below(&map, |x, y| !hit(x, y));
        n += 1.0;
    }
    let gap = (rest - text) / n;
    assert!(gap > 0.2, "CDF gap at 0.6 is {gap}");
}

/// Zero map with striped blocks standing in for text.
fn striped_map(w: usize, h: usize, blocks: &[Rect]) -> EdgeMap {
    let mut val = vec![0.0f32; w * h];
    for b in blocks {
        for y in b.y..b.bottom() {
            for x in b.x..b.right() {
                if (x + y) % 3 != 0 {
                    val[y as usize * w + x as usize] = 0.9;
                }
            }
        }
    }
    EdgeMap::new(w, h, val).unwrap()
}

fn arb_blocks() -> impl Strategy<Value = Vec<Rect>> {
    // stacked rows so blocks never touch
    prop::collection::vec((0u32..100, 40u32..200, 10u32..30), 1..5).prop_map(|rows| {
        let mut y = 6;
        rows.into_iter()
            .map(|(x, w, h)| {
                let r = Rect::new(x + 4, y, w, h);
                y += h + 14;
                r
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bands_are_disjoint_in_bounds_and_deterministic(blocks in arb_blocks()) {
        let (w, h) = (320, 240);
        let map = striped_map(w, h, &blocks);
        let det = BandDetector::default();
        let bands = det.detect(&map);
        prop_assert_eq!(&bands, &det.detect(&map));
        for (i, a) in bands.iter().enumerate() {
            prop_assert!(a.rect.fits_in(w as u32, h as u32));
            for b in &bands[i + 1..] {
                prop_assert_eq!(a.rect.intersection_area(&b.rect), 0);
            }
        }
        let trace = det.detect_traced(&map);
        let axes = trace.horizontal.iter().chain(trace.strips.iter().map(|s| &s.vertical));
        for axis in axes {
            prop_assert_eq!(axis.lines.len(), axis.labels.num_labels);
        }
    }

    #[test]
    fn bands_follow_shifted_content(blocks in arb_blocks(), k in 1u32..5) {
        let (w, h) = (320, 240);
        let det = BandDetector::default();
        let before = det.detect(&striped_map(w, h, &blocks));
        let shifted: Vec<Rect> = blocks.iter().map(|r| r.translate(0, k as i64).unwrap()).collect();
        let after = det.detect(&striped_map(w, h, &shifted));
        prop_assert_eq!(before.len(), after.len());
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((b.rect.y as i64 - a.rect.y as i64 - k as i64).abs() <= 1, "{:?} -> {:?}", a.rect, b.rect);
            prop_assert!((b.rect.bottom() as i64 - a.rect.bottom() as i64 - k as i64).abs() <= 1);
            prop_assert_eq!((a.rect.x, a.rect.w), (b.rect.x, b.rect.w));
        }
    }

    #[test]
    fn one_line_per_label(d1 in prop::collection::vec(-5.0f64..5.0, 3..200), eps in 1usize..5) {
        let labels = epsilon_cca(&d1, eps, Prominence::DataDerived);
        let max = labels.labels.iter().copied().max().unwrap_or(0) as usize;
        prop_assert_eq!(max, labels.num_labels);
        for l in 1..=labels.num_labels as u32 {
            prop_assert!(labels.members(l).next().is_some());
        }
    }
}

fn arb_rects() -> impl Strategy<Value = Vec<Rect>> {
    prop::collection::vec((0u32..50, 0u32..50, 1u32..30, 1u32..30).prop_map(|(x, y, w, h)| Rect::new(x, y, w, h)), 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn detection_scores_are_bounded_and_order_free(frames in prop::collection::vec((arb_rects(), arb_rects()), 1..6), seed in any::<u64>()) {
        let (det, gt): (Vec<_>, Vec<_>) = frames.iter().cloned().unzip();
        let m = epshtein_prf(&det, &gt).unwrap();
        for v in [m.precision, m.recall, m.f_measure] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(m.f_measure <= m.precision.max(m.recall) + 1e-12);
        let mut order: Vec<usize> = (0..frames.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let det2: Vec<_> = order.iter().map(|&i| det[i].clone()).collect();
        let gt2: Vec<_> = order.iter().map(|&i| gt[i].clone()).collect();
        let m2 = epshtein_prf(&det2, &gt2).unwrap();
        prop_assert!((m.f_measure - m2.f_measure).abs() < 1e-9);
    }

    #[test]
    fn removing_a_track_keeps_the_others_judgement(
        sys in prop::collection::vec(prop::collection::btree_map(0u64..20, (0u32..3).prop_map(|r| Rect::new(0, r * 30, 60, 20)), 1..15), 1..5),
        drop in any::<prop::sample::Index>(),
    ) {
        let gt: Vec<SeqTrack> = (0..3)
            .map(|r| SeqTrack { id: r as u64 + 1, rects: (0..20).map(|f| (f, Rect::new(0, r * 30, 60, 20))).collect() })
            .collect();
        let sys: Vec<SeqTrack> = sys.into_iter().enumerate().map(|(i, rects)| SeqTrack { id: i as u64 + 10, rects }).collect();
        let full = track_assignments(&sys, &gt);
        let k = drop.index(sys.len());
        let mut fewer = sys.clone();
        fewer.remove(k);
        let rest = track_assignments(&fewer, &gt);
        let pure = |v: &[ovtext::eval::TrackAssignment]| v.iter().filter(|a| a.pure).count() as f64 / v.len().max(1) as f64;
        let mut expected = full.clone();
        expected.remove(k);
        prop_assert_eq!(&rest, &expected);
        if !full[k].pure {
            prop_assert!(pure(&rest) >= pure(&full));
        }
    }
}

fn word_list() -> Vec<String> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/words.txt");
    std::fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn correction_is_idempotent(tokens in prop::collection::vec((any::<prop::sample::Index>(), "[a-z]{0,2}", "[,.]?"), 1..6), max_d in 1usize..=2) {
        let words = word_list();
        let dict = Dictionary::from_words(&words);
        let raw: Vec<String> = tokens.iter().map(|(i, noise, punct)| format!("{}{noise}{punct}", words[i.index(words.len())])).collect();
        let raw = raw.join(" ");
        let once = dictionary_correct(&raw, &dict, max_d);
        prop_assert_eq!(dictionary_correct(&once, &dict, max_d), once);
    }

    #[test]
    fn identical_text_has_no_errors(x in "[a-z]{1,8}( [a-z]{1,8}){0,5}") {
        let r = error_rates(&x, &x).unwrap();
        prop_assert_eq!((r.cer, r.wer), (0.0, 0.0));
    }

    #[test]
    fn binarization_ignores_polarity(seed in any::<u64>(), fg in any::<[u8; 3]>(), bg in any::<[u8; 3]>()) {
        let luma = |c: [u8; 3]| 0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64;
        prop_assume!((luma(fg) - luma(bg)).abs() > 40.0);
        let (w, h) = (90, 20);
        let mask = glyph_mask(w, h, 0.9, &mut ChaCha8Rng::seed_from_u64(seed));
        let paint = |fg: [u8; 3], bg: [u8; 3]| {
            RgbImage::from_fn(w, h, |x, y| Rgb(if mask[(y * w + x) as usize] { fg } else { bg }))
        };
        let invert = |c: [u8; 3]| c.map(|v| 255 - v);
        let r = Rect::new(0, 0, w, h);
        let a = binarize_band(&paint(fg, bg), &r).unwrap();
        let b = binarize_band(&paint(invert(fg), invert(bg)), &r).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn synth_is_deterministic_and_truthful(seed in any::<u64>(), index in 0u64..1000) {
        let p = CorpusParams { width: 240, height: 200, max_bands: 3, ..Default::default() };
        let spec = corpus_frame_spec(seed, index, &p);
        let r = Renderer::new(spec.clone()).unwrap();
        let (img, rec) = r.render(0);
        let (img2, rec2) = render_frame(&spec, 0).unwrap();
        prop_assert_eq!(img.as_raw(), img2.as_raw());
        prop_assert_eq!(&rec, &rec2);
        let gt: Vec<Rect> = rec.bands.iter().map(|b| b.rect()).collect();
        let specs: Vec<Rect> = spec.bands.iter().filter(|b| b.active_at(0)).map(|b| b.rect).collect();
        prop_assert_eq!(gt, specs);
    }
}

#[test]
fn gt_track_ids_follow_band_order() {
    let p = CorpusParams::default();
    let spec = ovtext::synth::sequence_spec(3, 50, &p);
    let r = Renderer::new(spec.clone()).unwrap();
    let mut seen: BTreeMap<u64, Rect> = BTreeMap::new();
    for f in 0..50 {
        for b in r.render(f).1.bands {
            let id = b.track_id.unwrap();
            assert_eq!(spec.bands[id as usize - 1].rect, b.rect());
            assert_eq!(*seen.entry(id).or_insert(b.rect()), b.rect());
        }
    }
}

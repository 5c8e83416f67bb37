mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use vidcopy::localization::{
    localize_candidates, similarity_matrix, temporal_network_localize, SimilarityMatrix, TNConfig,
};
use vidcopy::search::l2_normalize;
use vidcopy::DescriptorSet;

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, period: f64) -> SimilarityMatrix {
    let values = (0..rows * cols).map(|_| rng.random_range(0.01f32..1.0)).collect();
    SimilarityMatrix::new(
        qid(1),
        rid(1),
        (0..rows).map(|i| i as f64 * period).collect(),
        (0..cols).map(|j| j as f64 * period).collect(),
        values,
    )
    .unwrap()
}

fn planted(rows: usize, cols: usize, band: &[(usize, usize)]) -> SimilarityMatrix {
    let mut values = vec![0.05f32; rows * cols];
    for &(i, j) in band {
        values[i * cols + j] = 0.95;
    }
    SimilarityMatrix::new(
        qid(1),
        rid(1),
        (0..rows).map(|i| i as f64).collect(),
        (0..cols).map(|j| j as f64).collect(),
        values,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn boxes_stay_inside_both_videos(seed in any::<u64>(), period in prop::sample::select(vec![0.5, 1.0, 2.0])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rows, cols) = (rng.random_range(1..12), rng.random_range(1..12));
        let s = random_matrix(&mut rng, rows, cols, period);
        let cfg = TNConfig { similarity_threshold: 0.3, max_time_gap: 2.0 * period, ..TNConfig::default() };
        for p in temporal_network_localize(&s, &cfg).unwrap() {
            prop_assert!(p.bbox.query_start() >= 0.0 && p.bbox.query_end() <= rows as f64 * period);
            prop_assert!(p.bbox.ref_start() >= 0.0 && p.bbox.ref_end() <= cols as f64 * period);
            prop_assert!(p.score > 0.3);
        }
    }

    /// Separated bands of uniform similarity. Anti-monotonicity does not hold
    /// for arbitrary matrices: removing a node can split a chain, and a
    /// shorter first box suppresses less, so this restricted class is tested.
    #[test]
    fn raising_threshold_never_adds_boxes(
        bands in prop::collection::vec((1usize..8, 0.03f32..1.0), 1..5),
        lo in 0.02f64..0.9,
        step in 0.0f64..0.5,
    ) {
        let cols = bands.iter().map(|(len, _)| len + 4).sum::<usize>();
        let mut values = vec![0.01f32; cols * cols];
        let mut at = 0;
        for (len, v) in &bands {
            for k in 0..*len {
                values[(at + k) * cols + at + k] = *v;
            }
            at += len + 4;
        }
        let times: Vec<f64> = (0..cols).map(|t| t as f64).collect();
        let s = SimilarityMatrix::new(qid(1), rid(1), times.clone(), times, values).unwrap();
        let count = |t: f64| {
            let cfg = TNConfig { similarity_threshold: t, max_paths_per_pair: usize::MAX, ..TNConfig::default() };
            temporal_network_localize(&s, &cfg).unwrap().len()
        };
        let (low, high) = (count(lo), count(lo + step));
        prop_assert!(high <= low, "{} > {}", high, low);
        let expected = bands.iter().filter(|(len, v)| *len >= 3 && f64::from(*v) > lo).count();
        prop_assert_eq!(low, expected);
    }

    /// Counterexample for the unrestricted claim, kept as documentation.
    #[test]
    fn threshold_can_split_a_chain(_unit in Just(())) {
        // one 7-node chain; its middle node drops out at the higher threshold
        let mut values = vec![0.01f32; 100];
        for k in 0..7 {
            values[k * 10 + k] = if k == 3 { 0.5 } else { 0.9 };
        }
        let times: Vec<f64> = (0..10).map(|t| t as f64).collect();
        let s = SimilarityMatrix::new(qid(1), rid(1), times.clone(), times, values).unwrap();
        let cfg = |t| TNConfig { similarity_threshold: t, max_time_gap: 1.0, ..TNConfig::default() };
        prop_assert_eq!(temporal_network_localize(&s, &cfg(0.3)).unwrap().len(), 1);
        prop_assert_eq!(temporal_network_localize(&s, &cfg(0.6)).unwrap().len(), 2);
    }

    #[test]
    fn max_paths_is_respected(seed in any::<u64>(), cap in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_matrix(&mut rng, 12, 12, 1.0);
        let cfg = TNConfig { similarity_threshold: 0.2, max_paths_per_pair: cap, ..TNConfig::default() };
        prop_assert!(temporal_network_localize(&s, &cfg).unwrap().len() <= cap);
    }

    #[test]
    fn planted_diagonal_is_recovered(offset_q in 0usize..10, offset_r in 0usize..10, len in 3usize..15) {
        let band: Vec<_> = (0..len).map(|k| (offset_q + k, offset_r + k)).collect();
        let s = planted(30, 30, &band);
        let preds = temporal_network_localize(&s, &TNConfig::default()).unwrap();
        prop_assert_eq!(preds.len(), 1);
        let b = preds[0].bbox;
        prop_assert_eq!(b.query_interval(), (offset_q as f64, (offset_q + len) as f64));
        prop_assert_eq!(b.ref_interval(), (offset_r as f64, (offset_r + len) as f64));
    }
}

#[test]
fn two_segments_in_one_pair_become_two_boxes() {
    let mut band: Vec<_> = (0..8).map(|k| (2 + k, 20 + k)).collect();
    band.extend((0..6).map(|k| (18 + k, 3 + k)));
    let s = planted(30, 30, &band);
    let mut boxes: Vec<_> = temporal_network_localize(&s, &TNConfig::default())
        .unwrap()
        .into_iter()
        .map(|p| (p.bbox.query_interval(), p.bbox.ref_interval()))
        .collect();
    boxes.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0));
    assert_eq!(boxes, vec![((2.0, 10.0), (20.0, 28.0)), ((18.0, 24.0), (3.0, 9.0))]);
}

#[test]
fn half_speed_copy_gives_one_box() {
    // every reference frame shown twice in the query
    let band: Vec<_> = (0..16).map(|k| (4 + k, 10 + k / 2)).collect();
    let s = planted(30, 30, &band);
    let preds = temporal_network_localize(&s, &TNConfig::default()).unwrap();
    assert_eq!(preds.len(), 1);
    assert_eq!(preds[0].bbox.query_interval(), (4.0, 20.0));
    assert_eq!(preds[0].bbox.ref_interval(), (10.0, 18.0));
}

fn sets(seed: u64) -> (Vec<DescriptorSet>, Vec<DescriptorSet>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q: Vec<_> = (0..3).map(|i| gaussian_set(&mut rng, qid(i), 15, 32)).collect();
    let r: Vec<_> = (0..3).map(|i| gaussian_set(&mut rng, rid(i), 15, 32)).collect();
    (l2_normalize(&q).0, l2_normalize(&r).0)
}

#[test]
fn candidate_order_and_duplicates_do_not_matter() {
    let (q, r) = sets(5);
    let cfg = TNConfig { similarity_threshold: 0.3, ..TNConfig::default() };
    let pairs: Vec<_> = (0..3).flat_map(|i| (0..3).map(move |j| (qid(i), rid(j)))).collect();
    let mut shuffled = pairs.clone();
    shuffled.reverse();
    shuffled.extend(pairs.iter().take(4).cloned());
    assert_eq!(
        localize_candidates(&pairs, &q, &r, &cfg).unwrap(),
        localize_candidates(&shuffled, &q, &r, &cfg).unwrap()
    );
}

#[test]
fn copied_descriptors_are_localized_through_sets() {
    let (mut q, r) = sets(6);
    let mut v = q[1].vectors().to_vec();
    // query frames 4..10 copy reference frames 2..8 of R1
    v[4 * 32..10 * 32].copy_from_slice(&r[1].vectors()[2 * 32..8 * 32]);
    q[1] = q[1].with_vectors(32, v).unwrap();
    let s = similarity_matrix(&q[1], &r[1]).unwrap();
    let cfg = TNConfig { similarity_threshold: 0.8, ..TNConfig::default() };
    let preds = temporal_network_localize(&s, &cfg).unwrap();
    assert_eq!(preds.len(), 1);
    assert_eq!(preds[0].bbox.query_interval(), (4.0, 10.0));
    assert_eq!(preds[0].bbox.ref_interval(), (2.0, 8.0));
}

#[test]
fn missing_descriptors_are_an_error() {
    let (q, r) = sets(7);
    let err = localize_candidates(&[(qid(9), rid(0))], &q, &r, &TNConfig::default());
    assert!(err.is_err());
}

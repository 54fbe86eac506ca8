use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wearlink::classifier::{
    calibrate, classify_window, debounced_stream, window_mean, Action, Band, CalibrationProfile,
};
use wearlink::sensor::{generate_gesture, AccelSample, Axis, GestureKind};

/// Independent rule: integer cross-multiplication, no rational type.
/// `lo <= sum / n <= hi`  <=>  `lo * n <= sum <= hi * n`.
fn brute_force(ys: &[u16], zs: &[u16], on: (i64, i64), off: (i64, i64)) -> Action {
    let n = zs.len() as i64;
    let sz: i64 = zs.iter().map(|&v| v as i64).sum();
    let sy: i64 = ys.iter().map(|&v| v as i64).sum();
    if on.0 * n <= sz && sz <= on.1 * n {
        Action::On
    } else if off.0 * n <= sy && sy <= off.1 * n {
        Action::Off
    } else {
        Action::DoNothing
    }
}

fn window(ys: &[u16], zs: &[u16]) -> Vec<AccelSample> {
    ys.iter()
        .zip(zs)
        .enumerate()
        .map(|(i, (&y, &z))| AccelSample::new(i as u64 * 20, 200, y, z).unwrap())
        .collect()
}

#[test]
fn agrees_with_brute_force_on_100k_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1A5);
    let profile = CalibrationProfile::default();
    let mut counts = [0usize; 3];
    for _ in 0..100_000 {
        let n = rng.gen_range(1..=8);
        let ys: Vec<u16> = (0..n).map(|_| rng.gen_range(169..=384)).collect();
        let zs: Vec<u16> = (0..n).map(|_| rng.gen_range(169..=384)).collect();
        let expected = brute_force(&ys, &zs, (240, 286), (323, 384));
        let got = classify_window(&window(&ys, &zs), &profile.with_window(n)).unwrap();
        assert_eq!(got, expected, "ys {ys:?} zs {zs:?}");
        counts[got as usize] += 1;
    }
    assert!(counts.iter().all(|&c| c > 1_000), "{counts:?}");
}

proptest! {
    #[test]
    fn permutation_invariant(
        vals in prop::collection::vec((169u16..=384, 169u16..=384), 1..=16),
        seed in any::<u64>(),
    ) {
        let (ys, zs): (Vec<u16>, Vec<u16>) = vals.iter().copied().unzip();
        let p = CalibrationProfile::default().with_window(ys.len());
        let base = classify_window(&window(&ys, &zs), &p).unwrap();
        let mut idx: Vec<usize> = (0..ys.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.gen_range(0..=i));
        }
        let ys2: Vec<u16> = idx.iter().map(|&i| ys[i]).collect();
        let zs2: Vec<u16> = idx.iter().map(|&i| zs[i]).collect();
        prop_assert_eq!(classify_window(&window(&ys2, &zs2), &p).unwrap(), base);
    }

    #[test]
    fn raising_z_inside_band_keeps_on(
        zs in prop::collection::vec(240u16..=286, 1..=16),
        ys in prop::collection::vec(0u16..=1023, 16),
        bump in 0u16..=46,
    ) {
        let ys = &ys[..zs.len()];
        let p = CalibrationProfile::default().with_window(zs.len());
        prop_assert_eq!(classify_window(&window(ys, &zs), &p).unwrap(), Action::On);
        let raised: Vec<u16> = zs.iter().map(|z| z + bump).collect();
        let mean = window_mean(&window(ys, &raised), Axis::Z).unwrap();
        prop_assume!(mean <= num_rational::Ratio::from_integer(286));
        prop_assert_eq!(classify_window(&window(ys, &raised), &p).unwrap(), Action::On);
    }

    #[test]
    fn debounce_never_repeats_or_emits_nothing(
        raw in prop::collection::vec(0u8..3, 0..64),
        n in 1usize..5,
    ) {
        let verdicts: Vec<Action> = raw
            .iter()
            .map(|v| [Action::On, Action::Off, Action::DoNothing][*v as usize])
            .collect();
        let out = debounced_stream(&verdicts, n);
        prop_assert!(!out.contains(&Action::DoNothing));
        prop_assert!(out.windows(2).all(|w| w[0] != w[1]));
        prop_assert!(out.len() <= verdicts.len() / n);
    }

    #[test]
    fn calibrated_bands_contain_training_means(seeds in prop::collection::vec(any::<u64>(), 1..5)) {
        let on: Vec<_> = seeds.iter().map(|&s| generate_gesture(GestureKind::VerticalUpDown, 16, s).unwrap()).collect();
        let off: Vec<_> = seeds.iter().map(|&s| generate_gesture(GestureKind::Horizontal, 16, s).unwrap()).collect();
        let p = calibrate(&on, &off, 0, 0).unwrap();
        for t in &on {
            prop_assert!(p.on_band.contains(&window_mean(t.samples(), Axis::Z).unwrap()));
        }
        for t in &off {
            prop_assert!(p.off_band.contains(&window_mean(t.samples(), Axis::Y).unwrap()));
        }
    }
}

/// Oracle for the debounce automaton: for every prefix, recompute the run
/// length ending there and the last emission from scratch.
#[test]
fn debounce_matches_prefix_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..2_000 {
        let len = rng.gen_range(0..20);
        let n = rng.gen_range(1..4);
        let v: Vec<Action> = (0..len)
            .map(|_| [Action::On, Action::Off, Action::DoNothing][rng.gen_range(0..3)])
            .collect();
        let mut expected = Vec::new();
        for i in 0..v.len() {
            if v[i] == Action::DoNothing {
                continue;
            }
            let run = v[..=i].iter().rev().take_while(|&&a| a == v[i]).count();
            if run >= n && expected.last() != Some(&v[i]) {
                expected.push(v[i]);
            }
        }
        assert_eq!(debounced_stream(&v, n), expected, "{v:?} n={n}");
    }
}

#[test]
fn bands_are_disjoint_for_default() {
    let p = CalibrationProfile::default();
    assert!(!p.on_band.overlaps(&p.off_band));
    assert_eq!(p.on_band, Band::new(240, 286).unwrap());
    assert_eq!(p.off_band, Band::new(323, 384).unwrap());
}

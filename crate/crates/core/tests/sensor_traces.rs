use std::path::PathBuf;

use proptest::prelude::*;
use wearlink::classifier::{classify_window, Action, CalibrationProfile};
use wearlink::sensor::{generate_gesture, load_trace, save_trace, GestureKind, Trace};
use wearlink::table1;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/table1").join(rel)
}

#[test]
fn bundled_fixtures_match_reference_data() {
    assert_eq!(load_trace(fixture("on/table1_on.csv")).unwrap(), table1::on_trace());
    assert_eq!(load_trace(fixture("off/table1_off.csv")).unwrap(), table1::off_trace());
    assert_eq!(load_trace(fixture("other/table1_other.csv")).unwrap(), table1::other_trace());
}

proptest! {
    #[test]
    fn generated_traces_round_trip_through_files(
        kind in prop::sample::select(GestureKind::ALL.to_vec()),
        n in 1usize..64,
        seed in any::<u64>(),
    ) {
        let trace = generate_gesture(kind, n, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        save_trace(&trace, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = load_trace(&path).unwrap();
        prop_assert_eq!(&back, &trace);
        save_trace(&back, &path).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn unlabeled_text_round_trips(rows in prop::collection::vec((1u64..50, 0u16..=1023, 0u16..=1023, 0u16..=1023), 0..30)) {
        let mut t = 0;
        let mut text = String::from("t_ms,x,y,z\n");
        for (dt, x, y, z) in rows {
            t += dt;
            text.push_str(&format!("{t},{x},{y},{z}\n"));
        }
        let trace = Trace::parse_csv(&text).unwrap();
        prop_assert_eq!(trace.to_csv(), text);
    }
}

#[test]
fn generated_gestures_classify_as_labeled() {
    let profile = CalibrationProfile::default();
    for seed in 0..200 {
        for (kind, expected) in [
            (GestureKind::VerticalUpDown, Action::On),
            (GestureKind::Horizontal, Action::Off),
            (GestureKind::Other, Action::DoNothing),
        ] {
            let t = generate_gesture(kind, profile.window_size, seed).unwrap();
            assert_eq!(classify_window(t.samples(), &profile).unwrap(), expected, "{kind} seed {seed}");
        }
    }
}

use mbs_core::classify::{
    classify_policy, extract_features, knn_classify, read_training_set, write_training_set, FeatureConfig, Knn,
    TrainingSet,
};
use mbs_core::evaluation::{leave_one_out, overall_accuracy, read_report, write_report};
use mbs_core::kinematics::{gesture_displacement, MovementConfig};
use mbs_core::position::{classify_personal, observe, train_personal};
use mbs_core::shortcut::{log_entry, read_body_map, Event, Outcome, Session};
use mbs_core::signal::{calibrate, derive_calibration, read_trace, write_trace, Calibration};
use mbs_core::synth::{self, generate, GestureSpec, Jitter, Orientation};
use mbs_core::{Execution, Vec3};

#[test]
fn trace_file_round_trip_keeps_displacement() {
    let g = generate(&GestureSpec::new(Vec3::new(0.3, 0.2, 0.1), 800.0), 1000.0).unwrap();
    let text = write_trace(&g.trace);
    let back = read_trace(&text).unwrap();
    assert_eq!(back.len(), g.trace.len());
    let d = gesture_displacement(&back).unwrap();
    assert!((d - g.truth.displacement).norm() / g.truth.displacement.norm() < 0.05, "{d}");

    let noisy = generate(&GestureSpec::new(Vec3::new(0.3, 0.2, 0.1), 800.0).with_noise(0.05, 17), 1000.0).unwrap();
    let d = gesture_displacement(&noisy.trace).unwrap();
    assert!((d - noisy.truth.displacement).norm() / noisy.truth.displacement.norm() < 0.15, "{d}");
}

#[test]
fn raw_counts_calibrate_back_to_physical_units() {
    let g = generate(&GestureSpec::new(Vec3::new(0.0, 0.3, 0.0), 700.0), 1000.0).unwrap();
    let cal = derive_calibration([612.0, 590.0, 640.0], [412.0, 388.0, 430.0]).unwrap();
    let raw_samples: Vec<Vec3> = g.trace.accels().into_iter().map(|a| cal.invert(a)).collect();
    let raw = mbs_core::signal::Trace::from_accels(&raw_samples, 1000.0, false).unwrap();
    let back = calibrate(&raw, &cal).unwrap();
    for (a, b) in back.accels().iter().zip(g.trace.accels()) {
        assert!((*a - b).norm() < 1e-9);
    }
    assert!(calibrate(&back, &Calibration::identity()).is_err());
}

#[test]
fn features_train_classify_and_report() {
    let protos = synth::subset(&synth::body_part_prototypes(5), &synth::FIVE_CLASS_SUBSET);
    let corpus = synth::corpus(&protos, 6, Jitter::displacement(0.02), 5, 1000.0, Execution::Parallel).unwrap();
    let cfg = FeatureConfig::default();
    let rows: Vec<_> =
        corpus.iter().map(|g| extract_features(&g.gesture.trace, &cfg).unwrap().with_label(g.label.clone())).collect();
    let text = write_training_set(&rows);
    let ts = read_training_set(&text).unwrap();
    assert_eq!(ts.len(), 30);

    let query = rows[7].clone();
    let ranking = classify_policy(&query, None, Some(&ts)).unwrap();
    assert_eq!(ranking, knn_classify(&query, &ts, 50).unwrap());
    // with only 30 rows k = 50 lets every row vote, so check recognition with a small k
    assert_eq!(knn_classify(&query, &ts, 3).unwrap().top_label(), query.label.as_deref());

    let user = TrainingSet::new(rows[..12].to_vec()).unwrap();
    assert!(classify_policy(&query, Some(&user), None).unwrap().top_label().is_some());

    let seq = leave_one_out(&ts, &Knn { k: 3 }, Execution::Sequential).unwrap();
    let par = leave_one_out(&ts, &Knn { k: 3 }, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert!(overall_accuracy(&seq).unwrap() >= 90.0);
    assert_eq!(read_report(&write_report(&seq)).unwrap(), seq);
}

#[test]
fn personal_position_gestures() {
    let specs = [
        ("Pocket", Vec3::new(0.25, 0.0, -0.3), Orientation::new(-60.0, 0.0)),
        ("Ear", Vec3::new(0.2, 0.0, 0.35), Orientation::new(0.0, 70.0)),
        ("Mouth", Vec3::new(0.0, 0.1, 0.3), Orientation::new(10.0, 0.0)),
    ];
    let cfg = MovementConfig::default();
    let mut samples = Vec::new();
    for (i, (label, d, end)) in specs.iter().enumerate() {
        for j in 0..3 {
            let spec = GestureSpec::new(*d * (1.0 + 0.03 * j as f64), 800.0)
                .with_end(*end)
                .with_noise(0.02, (i * 10 + j) as u64);
            let obs = observe(&generate(&spec, 1000.0).unwrap().trace, &cfg, 50.0).unwrap();
            samples.push((label.to_string(), obs.endpoint, obs.rotation_class));
        }
    }
    let set = train_personal(&samples).unwrap();
    for (label, d, end) in specs {
        let spec = GestureSpec::new(d, 800.0).with_end(end).with_noise(0.02, 99);
        let obs = observe(&generate(&spec, 1000.0).unwrap().trace, &cfg, 50.0).unwrap();
        assert_eq!(classify_personal(obs.endpoint, obs.rotation_class, &set), Some(label));
    }
}

#[test]
fn recognized_gesture_drives_a_session() {
    let protos = synth::body_part_prototypes(1);
    let corpus = synth::corpus(&protos, 4, Jitter::displacement(0.02), 1, 1000.0, Execution::Parallel).unwrap();
    let cfg = FeatureConfig::default();
    let rows: Vec<_> =
        corpus.iter().map(|g| extract_features(&g.gesture.trace, &cfg).unwrap().with_label(g.label.clone())).collect();
    let ts = TrainingSet::new(rows[1..].to_vec()).unwrap();
    let ranking = knn_classify(&rows[0], &ts, 3).unwrap();
    assert_eq!(ranking.top_label(), Some("Mouth"));

    let map = read_body_map("Mouth: SMS, Voicemail\nChest: Contacts\nNavel: Games\nNeck: Time\n").unwrap();
    let mut s = Session::new(map);
    s.step(Event::ActionPress, 0.0).unwrap();
    s.step(Event::ActionPress, 900.0).unwrap();
    s.step(Event::GestureRecognized(ranking), 950.0).unwrap();
    assert_eq!(s.suggestions()[..2], ["SMS".to_string(), "Voicemail".to_string()]);
    s.step(Event::ActionPress, 1500.0).unwrap();
    let step = s.step(Event::TimerExpired, 3500.0).unwrap();
    assert_eq!(step.triggered.as_deref(), Some("Voicemail"));
    let rec = log_entry(&s, chrono::DateTime::UNIX_EPOCH).unwrap();
    assert_eq!(rec.outcome, Outcome::Triggered("Voicemail".into()));
    assert_eq!((rec.multichoice, rec.presses, rec.elapsed_ms), (1, 3, 3500.0));
}

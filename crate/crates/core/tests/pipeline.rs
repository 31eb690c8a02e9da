//! End to end on rendered images: extraction, matching, evaluation.

use onionprint::evaluation::{
    default_thresholds, rates_and_metrics, score_table, FingerId, Label, Protocol,
};
use onionprint::imgproc::{extract, minutiae_file, pgm, MinutiaSet};
use onionprint::scoring::{match_pair, Fingerprint};
use onionprint::synth::{image_database, RenderConfig};
use onionprint::MatchConfig;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn rendered_fingers_separate() {
    let cfg = MatchConfig::default();
    let db = image_database(42, 6, 3, &RenderConfig::default());
    let ids: Vec<FingerId> = db.iter().map(|(id, _)| *id).collect();
    let sets: Vec<MinutiaSet> = db
        .iter()
        .map(|(_, img)| extract(img, &cfg.extract_config()).unwrap())
        .collect();
    assert!(sets.iter().all(|s| s.len() >= 3));
    let table = score_table(&ids, &sets, Protocol::AllPairs, &cfg).unwrap();
    let scores = |l: Label| -> Vec<f64> {
        table
            .rows
            .iter()
            .filter(|r| r.label == l)
            .map(|r| r.breakdown.final_score)
            .collect()
    };
    let (g, i) = (
        median(scores(Label::Genuine)),
        median(scores(Label::Impostor)),
    );
    let report = rates_and_metrics(&table, &default_thresholds(), false).unwrap();
    println!("medians {g:.3} / {i:.3}, EER {:.3}", report.eer);
    assert!(g > i);
    assert!(report.eer < 0.5);
}

#[test]
fn minutiae_files_stand_in_for_images() {
    let cfg = MatchConfig::default();
    let db = image_database(3, 2, 1, &RenderConfig::default());
    let dir = tempfile::tempdir().unwrap();
    let mut via_files = Vec::new();
    for (id, img) in &db {
        let path = dir.path().join(format!("{id}.pgm"));
        pgm::write(&path, img).unwrap();
        let reread = pgm::read(&path).unwrap();
        assert_eq!(&reread, img);
        let set = extract(&reread, &cfg.extract_config()).unwrap();
        let min_path = dir.path().join(format!("{id}.min"));
        minutiae_file::write(&min_path, &set).unwrap();
        via_files.push(minutiae_file::read(&min_path).unwrap());
    }
    let from_images = match_pair(
        &Fingerprint::Image(db[0].1.clone()),
        &Fingerprint::Image(db[1].1.clone()),
        &cfg,
    )
    .unwrap();
    let from_files = match_pair(
        &Fingerprint::Minutiae(via_files[0].clone()),
        &Fingerprint::Minutiae(via_files[1].clone()),
        &cfg,
    )
    .unwrap();
    assert_eq!(from_images, from_files);
}

#[test]
fn extraction_is_deterministic_on_identical_bytes() {
    let cfg = MatchConfig::default();
    let db = image_database(9, 1, 1, &RenderConfig::default());
    let bytes = pgm::encode(&db[0].1);
    let a = extract(&pgm::decode(&bytes).unwrap(), &cfg.extract_config()).unwrap();
    let b = extract(&pgm::decode(&bytes.clone()).unwrap(), &cfg.extract_config()).unwrap();
    assert_eq!(minutiae_file::to_string(&a), minutiae_file::to_string(&b));
}

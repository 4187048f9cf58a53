use vpmcf_core::diagnostics::series;
use vpmcf_core::flow::run;
use vpmcf_core::io::{
    format_series, load_history, parse_snapshot, read_snapshot, write_series, write_snapshot,
    write_snapshots, SERIES_HEADER,
};
use vpmcf_core::scenario::{circle, ellipse};
use vpmcf_core::{Error, FlowConfig, FlowMode};

#[test]
fn snapshots_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let c = ellipse(97, 1.7, 0.6).unwrap().with_time(0.125);
    let path = dir.path().join("snap_0.csv");
    write_snapshot(&path, &c).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# t=0.125 N=97\n"));
    assert_eq!(read_snapshot(&path).unwrap(), c);
}

#[test]
fn malformed_snapshots_are_rejected() {
    for text in [
        "",
        "t=0 N=1\n",
        "# t=0\n0,0\n",
        "# t=0 N=4\n0,0\n1,0\n1,1\n",
        "# t=0 N=3\n0,0\n1;0\n1,1\n",
        "# t=0 N=3\n0,0\n1,x\n1,1\n",
    ] {
        assert!(
            matches!(parse_snapshot(text), Err(Error::Parse(_))),
            "{text:?}"
        );
    }
    let mut text = vpmcf_core::io::format_snapshot(&circle(16, 1.0).with_time(2.5));
    text.insert(text.find('\n').unwrap() + 1, '\n');
    let c = parse_snapshot(&text).unwrap();
    assert_eq!(c.len(), 16);
    assert_eq!(c.time, 2.5);
}

#[test]
fn series_file_has_one_row_per_snapshot() {
    let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-3, 0.05, 64);
    cfg.snapshot_every = 10;
    let h = run(&circle(64, 1.0), &cfg).unwrap();
    let s = series(&h);
    let text = format_series(&s);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SERIES_HEADER));
    assert_eq!(lines.count(), h.snapshots.len());
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').count(), 10);
    }
}

#[test]
fn run_directories_reload() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-3, 0.2, 128);
    cfg.snapshot_every = 20;
    let h = run(&ellipse(128, 1.5, 1.0).unwrap(), &cfg).unwrap();
    write_snapshots(dir.path(), &h).unwrap();

    let bare = load_history(dir.path(), cfg.clone()).unwrap();
    assert_eq!(bare.snapshots.len(), h.snapshots.len());
    for (a, b) in h.snapshots.iter().zip(&bare.snapshots) {
        assert_eq!(a.curve, b.curve);
    }
    assert!((bare.i2_at(0.2) - h.i2_at(0.2)).abs() < 1e-2 * h.i2_at(0.2));

    write_series(&dir.path().join("series.csv"), &series(&h)).unwrap();
    let full = load_history(dir.path(), cfg.clone()).unwrap();
    for snap in &h.snapshots {
        let t = snap.time();
        assert!((full.hbar_at(t) - h.hbar_at(t)).abs() < 1e-12);
    }

    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_history(empty.path(), cfg),
        Err(Error::Parse(_))
    ));
}

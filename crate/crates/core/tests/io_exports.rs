//! Export-format checks: step-function CSV with its JSON sidecar.

mod common;

use common::*;
use ltrc::io::write_step_csv;
use ltrc::SurvivalFit;

#[test]
fn step_export_writes_jumps_and_metadata_sidecar() {
    let s = sample_from(
        &[0.0, 0.1, 0.2],
        &[-1.0, -1.0, -1.0],
        &[1.0, 2.0, 3.0],
        &[true, false, true],
    );
    let fit = SurvivalFit::fit(&s).unwrap();

    let dir = std::env::temp_dir().join(format!("ltrc-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("f_n.csv");
    write_step_csv(&path, &fit.f_n, "tjw_f", s.n(), fit.mu_n).unwrap();

    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("y,value"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (y, v) = l.split_once(',').unwrap();
            (y.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), fit.f_n.jumps().len());
    for ((y, v), (&jy, &jv)) in rows
        .iter()
        .zip(fit.f_n.jumps().iter().zip(fit.f_n.values()))
    {
        assert_eq!(*y, jy);
        assert_eq!(*v, jv);
    }

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("f_n.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["estimator"], "tjw_f");
    assert_eq!(meta["n"], 3);
    assert!((meta["mu_n"].as_f64().unwrap() - fit.mu_n).abs() < 1e-15);
}

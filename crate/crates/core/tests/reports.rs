use green_growth::bitree::PhaseParams;
use green_growth::freeprod::{linear_grid, scan_construction, ScanOptions};
use green_growth::groups::GroupSpec;
use green_growth::growth::{h_series, GrowthOptions};
use green_growth::kernels::{q, standard_measure, MeasureKind};
use green_growth::report::json_report;
use green_growth::trees::tree_sphere_green_sum;

#[test]
fn growth_csv_is_stable_and_exact_on_trees() {
    let m = standard_measure(&GroupSpec::RegularTree(5), MeasureKind::TreeLazy).unwrap();
    let a = h_series(&m, 0.9, 8, GrowthOptions::new(1e-12), None).unwrap();
    let b = h_series(&m, 0.9, 8, GrowthOptions::new(1e-12), None).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.to_csv().ends_with('\n') && !a.to_csv().contains('\r'));
    for p in &a.values[1..] {
        let exact = tree_sphere_green_sum(5, 0.9, p.n).unwrap();
        assert!(
            (p.value - exact).abs() <= p.tail + 1e-12,
            "n={} {} vs {exact}",
            p.n,
            p.value
        );
    }
}

#[test]
fn lattice_csv_has_rigorous_rows() {
    let m = standard_measure(&GroupSpec::FreeAbelian(2), MeasureKind::LazySrw { alpha: q(1, 2) }).unwrap();
    let s = h_series(&m, 0.7, 6, GrowthOptions::new(1e-10), None).unwrap();
    let csv = s.to_csv();
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn scan_report_json_shape() {
    let p = PhaseParams::with_alpha1(6, 4, 0.5).unwrap();
    let grid = linear_grid(1.0, 1.15, 4);
    let rep = scan_construction(
        &p,
        3,
        0.1,
        Some(&grid),
        ScanOptions {
            order: 1000,
            growth_n: None,
        },
    )
    .unwrap();
    let v: serde_json::Value = serde_json::from_str(&json_report("freeprod-scan", &rep).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(
        v["rows"].as_array().unwrap().len() + v["skipped"].as_array().unwrap().len(),
        4
    );
    assert!(v["r0"].as_f64().unwrap() > 1.1);
}

use penwalk_wasm::{corridor_law_json, ratio_convergence_json, sample_q_path_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn corridor_cells_sum_to_survival() {
    let v = parse(corridor_law_json(6, 2, 3).unwrap());
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    let total: f64 = cells.iter().map(|c| c["value"].as_f64().unwrap()).sum();
    assert!((total - v["survival_value"].as_f64().unwrap()).abs() < 1e-15);
    for c in cells {
        assert!((c["trig"].as_f64().unwrap() - c["value"].as_f64().unwrap()).abs() < 1e-12);
    }
    let v = parse(corridor_law_json(1, 1, 1).unwrap());
    assert_eq!(v["survival"], "0/1");
    assert!(corridor_law_json(5, 0, 2).is_err());
    assert!(corridor_law_json(10_000, 2, 2).is_err());
}

#[test]
fn ratio_rows_approach_the_limit() {
    let v = parse(ratio_convergence_json("last-zero-max", "uniform:0..3", "prefix:+", 1, 24).unwrap());
    assert_eq!(v["limit"]["exact"], "7/16");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.first().unwrap()["p"], 1);
    assert!(rows.last().unwrap()["gap"].as_f64().unwrap() < rows[1]["gap"].as_f64().unwrap());
    let v = parse(ratio_convergence_json("barrier:3", "", "", 2, 10).unwrap());
    assert!((v["limit"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(ratio_convergence_json("last-zero-max", "", "all", 1, 10).is_err());
    assert!(ratio_convergence_json("one-sided-max", "uniform:0..3", "x >", 1, 10).is_err());
}

#[test]
fn sampled_paths_are_seeded() {
    let a = sample_q_path_json("bilateral-last-zero", "point:2", 200, 7).unwrap();
    assert_eq!(a, sample_q_path_json("bilateral-last-zero", "point:2", 200, 7).unwrap());
    let v = parse(a);
    let path = v["path"].as_array().unwrap();
    assert_eq!(path.len(), 201);
    assert!(path.windows(2).all(|w| (w[1].as_i64().unwrap() - w[0].as_i64().unwrap()).abs() == 1));
    let v = parse(sample_q_path_json("corridor:2:2", "", 500, 1).unwrap());
    assert!(v["path"].as_array().unwrap().iter().all(|x| x.as_i64().unwrap().abs() <= 1));
}

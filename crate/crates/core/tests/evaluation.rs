mod common;

use common::{example, record};
use tailqa::dataset::Relation;
use tailqa::eval::{
    accuracy_by_relation, overall_accuracy, quadrant_analysis, read_records, write_records, Mode,
    QuadrantCell, QuadrantTable,
};
use tailqa::report::{build_report, ReportOptions};
use tailqa::Error;

fn cell(count: usize, total: usize, recall1: Option<f64>) -> QuadrantCell {
    QuadrantCell {
        count,
        fraction: count as f64 / total as f64,
        recall1,
    }
}

#[test]
fn quadrant_table_renders_recall_and_share() {
    // cells[vanilla_correct][retrieval_correct]
    let table = QuadrantTable {
        cells: [
            [cell(56, 100, Some(0.20)), cell(17, 100, Some(0.88))],
            [cell(10, 100, Some(0.14)), cell(17, 100, Some(0.40))],
        ],
        total: 100,
    };
    let text = table.to_string();
    assert!(text.contains("0.14 (10%)"), "{text}");
    assert!(text.contains("0.88 (17%)"), "{text}");
    let lm_correct_row = text
        .lines()
        .find(|l| l.trim_start().starts_with("LM correct"))
        .unwrap();
    assert!(lm_correct_row.contains("0.14 (10%)"));
    let lm_wrong_row = text
        .lines()
        .find(|l| l.trim_start().starts_with("LM wrong"))
        .unwrap();
    assert!(lm_wrong_row.find("0.88 (17%)").unwrap() < lm_wrong_row.find("0.20 (56%)").unwrap());
}

#[test]
fn one_question_per_quadrant() {
    let dataset: Vec<_> = (0..4)
        .map(|i| example(&format!("q{i}"), Relation::Country, 10, "x"))
        .collect();
    let v: Vec<_> = [true, true, false, false]
        .iter()
        .enumerate()
        .map(|(i, &c)| record(&format!("q{i}"), Mode::Vanilla, c))
        .collect();
    let r: Vec<_> = [true, false, true, false]
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut rec = record(&format!("q{i}"), Mode::Retrieval, c);
            rec.retrieval_recall1 = Some(c);
            rec
        })
        .collect();
    let q = quadrant_analysis(&v, &r, &dataset).unwrap();
    for vc in [true, false] {
        for rc in [true, false] {
            assert_eq!(q.cell(vc, rc).fraction, 0.25);
            assert_eq!(q.cell(vc, rc).count, 1);
            assert_eq!(q.cell(vc, rc).recall1, Some(if rc { 1.0 } else { 0.0 }));
        }
    }
    assert!((q.fraction_sum() - 1.0).abs() <= 1e-9);
}

#[test]
fn quadrants_reject_mismatched_runs() {
    let dataset = vec![
        example("a", Relation::Genre, 1, "x"),
        example("b", Relation::Genre, 1, "x"),
    ];
    let v = vec![
        record("a", Mode::Vanilla, true),
        record("b", Mode::Vanilla, true),
    ];
    let r = vec![record("a", Mode::Retrieval, true)];
    assert!(matches!(
        quadrant_analysis(&v, &r, &dataset),
        Err(Error::Join { .. })
    ));
}

#[test]
fn overall_equals_weighted_relation_mean() {
    let mut dataset = Vec::new();
    let mut records = Vec::new();
    for (r, rel) in Relation::BUILTIN.iter().enumerate() {
        for j in 0..(r + 2) {
            let id = format!("{r}-{j}");
            dataset.push(example(&id, rel.clone(), 10, "x"));
            records.push(record(&id, Mode::Vanilla, (r * 7 + j) % 3 == 0));
        }
    }
    let by_rel = accuracy_by_relation(&records, &dataset).unwrap();
    assert_eq!(by_rel.len(), 16);
    let n: usize = by_rel.values().map(|a| a.n).sum();
    let weighted: f64 = by_rel
        .values()
        .map(|a| a.accuracy * a.n as f64)
        .sum::<f64>()
        / n as f64;
    assert!((weighted - overall_accuracy(&records).unwrap()).abs() < 1e-12);
}

#[test]
fn records_round_trip_and_report() {
    let dataset: Vec<_> = (0..50)
        .map(|i| example(&format!("q{i}"), Relation::Producer, 10u64.pow(i % 7), "x"))
        .collect();
    let v: Vec<_> = (0..50)
        .map(|i| record(&format!("q{i}"), Mode::Vanilla, i % 7 >= 4))
        .collect();
    let r: Vec<_> = (0..50)
        .map(|i| {
            let mut rec = record(&format!("q{i}"), Mode::Retrieval, i % 7 < 5);
            rec.retrieved_doc_id = Some(format!("d{i}"));
            rec.retrieval_recall1 = Some(i % 2 == 0);
            rec
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    write_records(&path, &r).unwrap();
    assert_eq!(read_records(&path).unwrap(), r);

    let opts = ReportOptions {
        bin_width: 0.5,
        min_bin_n: 5,
    };
    let report = build_report(&dataset, &[v, r], None, None, &opts).unwrap();
    assert_eq!(report.runs.len(), 2);
    assert_eq!(report.runs[1].recall_at_1, Some(0.5));
    assert!(report.adaptive.is_none());
    assert!(report.quadrants.is_some());
    report.write_dir(dir.path()).unwrap();
    for f in [
        "report.json",
        "per_relation.csv",
        "bins.csv",
        "quadrants.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let parsed: tailqa::report::EvalReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(parsed, report);
}

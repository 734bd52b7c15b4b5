mod common;

use eo_instruct::eval::evaluate;
use eo_instruct::metrics::{render_table, MetricName};
use eo_instruct::respond::OracleSpec;

#[test]
fn perfect_oracle_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::build_corpus(dir.path(), 7, 12);
    let preds = common::oracle_predictions(&corpus.records, &OracleSpec::perfect(), 7);
    let ev = evaluate(&corpus.records, &preds).unwrap();
    println!("{}", render_table(&ev.reports));
    println!("{:?}", ev.coverage);
    println!(
        "{}",
        serde_json::to_string_pretty(&corpus.manifest).unwrap()
    );
    for r in &ev.reports {
        if r.metric == MetricName::Accuracy {
            assert_eq!(r.value, Some(1.0), "{} {}", r.category, r.dataset);
        }
    }
}

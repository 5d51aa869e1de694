use std::collections::HashMap;

use approx::assert_relative_eq;
use tailqa::retriever::{recall_at_k, tokenize, Passage, Retriever};
use tailqa::{Bm25Index, Bm25Params};

fn passage(id: &str, text: &str) -> Passage {
    Passage {
        doc_id: id.into(),
        title: String::new(),
        text: text.into(),
    }
}

/// Term-by-term Okapi BM25 written out for the 3-document corpus.
fn hand_score(tf: f64, doc_len: f64, avg_len: f64, n: f64, df: f64) -> f64 {
    let (k1, b) = (1.2, 0.75);
    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_len / avg_len))
}

#[test]
fn toy_corpus_matches_hand_computation() {
    let index = Bm25Index::build(
        vec![
            passage("d1", "cat sat"),
            passage("d2", "cat cat mat"),
            passage("d3", "dog"),
        ],
        Bm25Params::default(),
    )
    .unwrap();
    let avg = 2.0;
    assert_relative_eq!(index.avg_doc_length(), avg);
    let hits = index.search("cat", 10);
    let ids: Vec<&str> = hits.iter().map(|h| h.doc_id.as_str()).collect();
    assert_eq!(ids, ["d2", "d1"]);
    assert!((hits[0].score - hand_score(2.0, 3.0, avg, 3.0, 2.0)).abs() <= 1e-9);
    assert!((hits[1].score - hand_score(1.0, 2.0, avg, 3.0, 2.0)).abs() <= 1e-9);
    assert_eq!((hits[0].rank, hits[1].rank), (1, 2));

    // Two-term query adds the per-term contributions.
    let hits = index.search("cat mat", 1);
    let expected = hand_score(2.0, 3.0, avg, 3.0, 2.0) + hand_score(1.0, 3.0, avg, 3.0, 1.0);
    assert!((hits[0].score - expected).abs() <= 1e-9);
}

#[test]
fn repeated_query_terms_count_once() {
    let index = Bm25Index::build(
        vec![passage("d1", "cat sat"), passage("d2", "cat cat mat")],
        Bm25Params::default(),
    )
    .unwrap();
    assert_eq!(index.search("cat", 2), index.search("cat CAT cat", 2));
}

#[test]
fn title_is_indexed_and_searched() {
    let index = Bm25Index::build(
        vec![
            Passage {
                doc_id: "a".into(),
                title: "The Cocoanuts".into(),
                text: "A 1929 musical comedy film.".into(),
            },
            passage("b", "A film about something else."),
        ],
        Bm25Params::default(),
    )
    .unwrap();
    assert_eq!(index.search("cocoanuts", 5)[0].doc_id, "a");
    assert_eq!(index.doc_length("a"), Some(7));
}

#[test]
fn retriever_trait_object_and_recall() {
    let index = Bm25Index::build(
        vec![
            Passage {
                doc_id: "cocoanuts".into(),
                title: "The Cocoanuts".into(),
                text: "Produced for Paramount Pictures by Walter Wanger, who is not credited, the film stars the four Marx Brothers.".into(),
            },
            passage("other", "The producer Florenz Ziegfeld staged many Broadway shows."),
        ],
        Bm25Params::default(),
    )
    .unwrap();
    let r: &dyn Retriever = &index;
    let hits = r.retrieve("Who was the producer of The Cocoanuts?", 2);
    assert_eq!(hits[0].doc_id, "cocoanuts");
    assert!(recall_at_k(&hits, r, &["Walter Wanger".to_string()], 1));
    assert!(!recall_at_k(&hits, r, &["Florenz Ziegfeld".to_string()], 1));
    assert!(recall_at_k(&hits, r, &["Florenz Ziegfeld".to_string()], 2));
}

#[test]
fn save_load_preserves_results() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.bin");
    let index = Bm25Index::build(
        vec![
            passage("d1", "cat sat"),
            passage("d2", "cat cat mat"),
            passage("d3", "dog"),
        ],
        Bm25Params { k1: 0.9, b: 0.4 },
    )
    .unwrap();
    index.save(&path).unwrap();
    let loaded = Bm25Index::load(&path).unwrap();
    assert_eq!(loaded.params(), index.params());
    for q in ["cat", "dog mat", "sat cat", "unknown"] {
        assert_eq!(loaded.search(q, 3), index.search(q, 3));
    }
    std::fs::write(&path, b"NOTANIDX").unwrap();
    let err = Bm25Index::load(&path).unwrap_err().to_string();
    assert!(err.contains("index.bin"), "{err}");
}

#[test]
fn postings_agree_with_token_counts() {
    let docs = vec![
        passage("x", "alpha beta alpha gamma"),
        passage("y", "beta beta delta"),
        passage("z", "alpha"),
    ];
    let index = Bm25Index::build(docs.clone(), Bm25Params::default()).unwrap();
    let mut expected: HashMap<String, Vec<(String, u32)>> = HashMap::new();
    for d in &docs {
        let mut tf: HashMap<String, u32> = HashMap::new();
        for t in tokenize(&d.full_text()) {
            *tf.entry(t).or_default() += 1;
        }
        for (t, c) in tf {
            expected.entry(t).or_default().push((d.doc_id.clone(), c));
        }
    }
    assert_eq!(index.vocabulary_size(), expected.len());
    for (term, mut want) in expected {
        want.sort();
        let mut got: Vec<(String, u32)> = index
            .postings(&term)
            .into_iter()
            .map(|(d, c)| (d.to_string(), c))
            .collect();
        got.sort();
        assert_eq!(got, want, "{term}");
    }
}

use std::sync::{Arc, Barrier};

use proptest::prelude::*;
use rand::RngCore;
use tempfile::TempDir;

use super::*;

fn fresh() -> (TempDir, Store) {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    (dir, store)
}

/// Corpus, chapter, verse, line, user and one node type; returns (line, user, type).
fn seed(store: &Store) -> (Id, Id, Id) {
    store
        .write(|tx| -> Result<_> {
            let corpus = tx.insert_corpus("c", "")?;
            let chapter = tx.insert_chapter(corpus, "ch")?;
            let verse = tx.insert_verse(chapter, None)?;
            let line = tx.insert_line(verse, 0, "text", None)?;
            let user = tx.insert_user("u", "", "x")?;
            let ty = tx.upsert_type(OntologyKind::Node, "PERSON", None)?;
            Ok((line, user, ty))
        })
        .unwrap()
}

/// Logical contents of every table, for before/after comparisons.
fn dump(store: &Store) -> Vec<String> {
    store
        .read(|c| -> Result<_> {
            let mut out = Vec::new();
            let mut tables = c.prepare(
                "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name",
            )?;
            let names: Vec<String> = tables
                .query_map([], |r| r.get(0))?
                .collect::<rusqlite::Result<_>>()?;
            for name in names {
                let mut stmt = c.prepare(&format!("SELECT * FROM {name} ORDER BY rowid"))?;
                let ncol = stmt.column_count();
                let rows: Vec<String> = stmt
                    .query_map([], |r| {
                        let cells: Vec<String> = (0..ncol)
                            .map(|i| format!("{:?}", r.get_ref(i).unwrap()))
                            .collect();
                        Ok(format!("{name}: {}", cells.join("|")))
                    })?
                    .collect::<rusqlite::Result<_>>()?;
                out.extend(rows);
            }
            Ok(out)
        })
        .unwrap()
}

#[test]
fn open_empty_dir() {
    let (_dir, store) = fresh();
    let (corpora, users) = store
        .read(|c| Ok::<_, StoreError>((queries::corpora(c)?, queries::users(c)?)))
        .unwrap();
    assert!(corpora.is_empty());
    assert!(users.is_empty());
}

#[test]
fn reopen_sees_committed_data() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = Store::open(dir.path()).unwrap();
        store
            .transact(&[Write::InsertCorpus {
                name: "Mahabharata".into(),
                description: "epic".into(),
            }])
            .unwrap();
    }
    let store = Store::open(dir.path()).unwrap();
    let corpora = store.read(|c| queries::corpora(c)).unwrap();
    assert_eq!(corpora.len(), 1);
    assert_eq!(corpora[0].name, "Mahabharata");
}

#[test]
fn random_bytes_are_unrecoverable() {
    let dir = tempfile::tempdir().unwrap();
    let mut junk = vec![0u8; 8192];
    rand::thread_rng().fill_bytes(&mut junk);
    std::fs::write(dir.path().join(STORE_FILE), &junk).unwrap();
    let err = Store::open(dir.path()).unwrap_err();
    assert!(matches!(err, StoreError::Unrecoverable(_)), "{err:?}");
}

#[test]
fn foreign_database_is_unrecoverable() {
    let dir = tempfile::tempdir().unwrap();
    let conn = rusqlite::Connection::open(dir.path().join(STORE_FILE)).unwrap();
    conn.execute_batch("CREATE TABLE other (x)").unwrap();
    drop(conn);
    assert!(matches!(Store::open(dir.path()), Err(StoreError::Unrecoverable(_))));
}

#[test]
fn future_schema_version_is_unrecoverable() {
    let dir = tempfile::tempdir().unwrap();
    drop(Store::open(dir.path()).unwrap());
    let conn = rusqlite::Connection::open(dir.path().join(STORE_FILE)).unwrap();
    conn.pragma_update(None, "user_version", SCHEMA_VERSION + 1).unwrap();
    drop(conn);
    let err = Store::open(dir.path()).unwrap_err();
    assert!(err.to_string().contains("schema version"), "{err}");
}

#[test]
fn upsert_lemma_is_idempotent() {
    let (_dir, store) = fresh();
    let a = store.upsert_lemma("Ugrasrava").unwrap();
    assert_eq!(store.upsert_lemma("Ugrasrava").unwrap(), a);
    let b = store.upsert_lemma("b").unwrap();
    assert_ne!(a, b);
    // exact, case-sensitive matching
    assert_ne!(store.upsert_lemma("ugrasrava").unwrap(), a);
    assert!(matches!(store.upsert_lemma(""), Err(StoreError::Validation(_))));
}

#[test]
fn batch_with_line_and_annotation_commits() {
    let (_dir, store) = fresh();
    let (line, user, ty) = seed(&store);
    let verse = store.read(|c| queries::line(c, line)).unwrap().unwrap().verse_id;
    let ids = store
        .transact(&[
            Write::InsertLine {
                verse: Ref::Id(verse),
                ordinal: 1,
                text: "second".into(),
                split: None,
            },
            Write::UpsertLemma { lemma: "Rama".into() },
            Write::InsertEntityAnnotation {
                client_token: "t1".into(),
                lexicon: Ref::Batch(1),
                node_type: Ref::Id(ty),
                line: Ref::Batch(0),
                annotator: Ref::Id(user),
            },
        ])
        .unwrap();
    let ann = store.read(|c| queries::annotation(c, ids[2])).unwrap().unwrap();
    assert_eq!(ann.line_id(), ids[0]);
    assert_eq!(ann.curation_state(), CurationState::Proposed);
}

#[test]
fn failed_batch_leaves_store_unchanged() {
    let (dir, store) = fresh();
    let (_line, user, ty) = seed(&store);
    let before = dump(&store);
    let bytes_before = std::fs::read(dir.path().join(STORE_FILE)).unwrap();
    let err = store
        .transact(&[
            Write::UpsertLemma { lemma: "Rama".into() },
            Write::InsertEntityAnnotation {
                client_token: "t1".into(),
                lexicon: Ref::Batch(0),
                node_type: Ref::Id(ty),
                line: Ref::Id(9999),
                annotator: Ref::Id(user),
            },
        ])
        .unwrap_err();
    match err {
        StoreError::Constraint { write, invariant } => {
            assert_eq!(write, Some(1));
            assert!(invariant.contains("line_id"), "{invariant}");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(dump(&store), before);
    assert_eq!(std::fs::read(dir.path().join(STORE_FILE)).unwrap(), bytes_before);
}

#[test]
fn duplicate_entity_tuple_rejected() {
    let (_dir, store) = fresh();
    let (line, user, ty) = seed(&store);
    let lemma = store.upsert_lemma("Rama").unwrap();
    let ins = |token: &str| Write::InsertEntityAnnotation {
        client_token: token.into(),
        lexicon: lemma.into(),
        node_type: ty.into(),
        line: line.into(),
        annotator: user.into(),
    };
    store.transact(&[ins("a")]).unwrap();
    let err = store.transact(&[ins("b")]).unwrap_err();
    assert!(err.to_string().contains("(lemma, type, line, annotator)"), "{err}");
}

#[test]
fn concurrent_batches_with_same_token() {
    for _ in 0..2 {
        let (_dir, store) = fresh();
        let (line, user, ty) = seed(&store);
        let store = Arc::new(store);
        let lemmas: Vec<Id> = ["x", "y"].iter().map(|l| store.upsert_lemma(l).unwrap()).collect();
        let barrier = Arc::new(Barrier::new(2));
        let handles: Vec<_> = lemmas
            .into_iter()
            .map(|lemma| {
                let store = store.clone();
                let barrier = barrier.clone();
                std::thread::spawn(move || {
                    barrier.wait();
                    store.transact(&[Write::InsertEntityAnnotation {
                        client_token: "same".into(),
                        lexicon: lemma.into(),
                        node_type: ty.into(),
                        line: line.into(),
                        annotator: user.into(),
                    }])
                })
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        let ok = results.iter().filter(|r| r.is_ok()).count();
        assert_eq!(ok, 1);
        let err = results.into_iter().find_map(|r| r.err()).unwrap();
        assert!(err.to_string().contains("client_token is unique"), "{err}");
    }
}

#[test]
fn type_removal_blocked_while_referenced() {
    let (_dir, store) = fresh();
    let (line, user, ty) = seed(&store);
    let lemma = store.upsert_lemma("Rama").unwrap();
    let ids = store
        .transact(&[Write::InsertEntityAnnotation {
            client_token: "t".into(),
            lexicon: lemma.into(),
            node_type: ty.into(),
            line: line.into(),
            annotator: user.into(),
        }])
        .unwrap();
    let err = store
        .write(|tx| tx.delete_type(OntologyKind::Node, "PERSON"))
        .unwrap_err();
    assert!(matches!(err, StoreError::Constraint { .. }));
    store
        .transact(&[Write::DeleteAnnotation { annotation: ids[0].into() }])
        .unwrap();
    store.write(|tx| tx.delete_type(OntologyKind::Node, "PERSON")).unwrap();
    assert!(matches!(
        store.write(|tx| tx.delete_type(OntologyKind::Node, "PERSON")),
        Err(StoreError::NotFound(_))
    ));
}

#[test]
fn labels_reject_whitespace() {
    let (_dir, store) = fresh();
    let err = store
        .transact(&[Write::UpsertType {
            kind: OntologyKind::Relation,
            label: "IS SON OF".into(),
            description: None,
        }])
        .unwrap_err();
    assert!(matches!(err, StoreError::Validation(_)));
}

#[test]
fn concurrent_readers_during_writes() {
    let (_dir, store) = fresh();
    let store = Arc::new(store);
    let writer = {
        let store = store.clone();
        std::thread::spawn(move || {
            for i in 0..50 {
                store.upsert_lemma(&format!("l{i}")).unwrap();
            }
        })
    };
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let store = store.clone();
            std::thread::spawn(move || {
                let mut last = 0;
                for _ in 0..50 {
                    let n = store.read(|c| queries::lexicon_size(c)).unwrap();
                    assert!(n >= last);
                    last = n;
                }
            })
        })
        .collect();
    writer.join().unwrap();
    for r in readers {
        r.join().unwrap();
    }
    assert_eq!(store.read(|c| queries::lexicon_size(c)).unwrap(), 50);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Interleave lemma batches (some invalid) with reopens; the store always
    /// holds exactly the lemmas of the committed batches.
    #[test]
    fn durability_across_reopen(
        steps in prop::collection::vec(
            (prop::collection::vec("[a-c]{0,2}", 1..4), any::<bool>()),
            1..12,
        )
    ) {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path()).unwrap();
        let mut expected = std::collections::BTreeSet::new();
        for (lemmas, reopen) in steps {
            let batch: Vec<Write> = lemmas
                .iter()
                .map(|l| Write::UpsertLemma { lemma: l.clone() })
                .collect();
            let ok = store.transact(&batch).is_ok();
            prop_assert_eq!(ok, lemmas.iter().all(|l| !l.is_empty()));
            if ok {
                expected.extend(lemmas);
            }
            if reopen {
                drop(store);
                store = Store::open(dir.path()).unwrap();
            }
        }
        let stored: std::collections::BTreeSet<String> = store
            .read(|c| queries::lexicon_usage(c))
            .unwrap()
            .into_iter()
            .map(|(e, _)| e.lemma)
            .collect();
        prop_assert_eq!(stored, expected);
    }
}

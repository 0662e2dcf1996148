use std::collections::BTreeSet;

use tempfile::TempDir;

use crate::auth::{self, Actor, Role};
use crate::ingest;
use crate::store::{Id, OntologyKind, Store};

pub const APPENDIX_CHAPTER: &str = r#"[
    {"verse": 1, "text": "To sainted Nárad, prince of those", "split": "",
     "analysis": {"source": "spacy", "text": "", "tokens": [
        {"Word": "Nárad", "Lemma": "Nárad", "Tag": "NNP", "POS": "PROPN"},
        {"Word": "prince", "Lemma": "prince", "Tag": "NN", "POS": "NOUN"}]}},
    {"verse": 2, "text": "Ugrasrava, the son of Lomaharshana"}
]"#;

pub struct Fixture {
    pub _dir: TempDir,
    pub store: Store,
    pub admin: Actor,
    pub curator: Actor,
    pub annotator: Actor,
    pub annotator2: Actor,
    pub querier: Actor,
    pub corpus: Id,
    /// The two lines of [`APPENDIX_CHAPTER`].
    pub lines: [Id; 2],
}

fn user(store: &Store, name: &str, roles: &[Role]) -> Actor {
    let roles: BTreeSet<Role> = roles.iter().copied().collect();
    let id = auth::register_with_roles(store, name, "", "pw", &roles).unwrap();
    Actor::load(store, id).unwrap()
}

pub fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let admin = user(&store, "admin", &[Role::Admin]);
    let curator = user(&store, "cora", &[Role::Curator]);
    let annotator = user(&store, "anna", &[Role::Annotator]);
    let annotator2 = user(&store, "arjun", &[Role::Annotator]);
    let querier = user(&store, "quinn", &[Role::Querier]);
    let corpus = store.write(|tx| tx.insert_corpus("Mahabharata", "")).unwrap();
    let chapter = ingest::parse_chapter(APPENDIX_CHAPTER.as_bytes()).unwrap();
    let summary = ingest::ingest_chapter(&store, corpus, "Adi", &chapter).unwrap();
    let lines = store
        .read(|c| crate::store::queries::chapter_lines(c, summary.chapter_id))
        .unwrap();
    store
        .write(|tx| -> Result<(), crate::store::StoreError> {
            for label in ["PERSON", "SAGE"] {
                tx.upsert_type(OntologyKind::Node, label, None)?;
            }
            for label in ["IS_SON_OF", "IS_FATHER_OF"] {
                tx.upsert_type(OntologyKind::Relation, label, None)?;
            }
            Ok(())
        })
        .unwrap();
    Fixture {
        _dir: dir,
        store,
        admin,
        curator,
        annotator,
        annotator2,
        querier,
        corpus,
        lines: [lines[0].id, lines[1].id],
    }
}

pub use crate::testkit::random_graph;

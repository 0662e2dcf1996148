#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use lemmagraph_core::auth::{Clock, Role, SystemClock};
use lemmagraph_server::api::router;
use lemmagraph_server::{App, Config};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

/// The appendix chapter example with its brackets balanced.
pub const APPENDIX_CHAPTER: &str = r#"[
    {
        "verse": 1,
        "text": "To sainted Nárad, prince of those",
        "split": "",
        "analysis": {
            "source": "spacy",
            "text": "",
            "tokens": [
                {"Word": "Nárad", "Lemma": "Nárad", "Tag": "NNP", "POS": "PROPN"},
                {"Word": "prince", "Lemma": "prince", "Tag": "NN", "POS": "NOUN"}
            ]
        }
    }
]"#;

/// The appendix template example (strict JSON, query on one line) plus a
/// son-of variant used by the pipeline tests.
pub const TEMPLATES: &str = r#"[
    {
        "gid": "1",
        "cypher": "MATCH (p1)-[r:IS_FATHER_OF]->(p2) WHERE p2.lemma =~ \"{0}\" RETURN *",
        "input": [{"id": "p", "type": "entity"}],
        "output": ["p1", "r", "p2"],
        "texts": {"english": "Who is the father of {0}?"},
        "groups": {"english": "Kinship"}
    },
    {
        "gid": "2",
        "cypher": "MATCH (c)-[r:IS_SON_OF]->(f) WHERE c.lemma =~ \"{0}\" RETURN f, r, c",
        "input": [{"id": "c", "type": "entity"}],
        "output": ["f", "r", "c"],
        "texts": {"english": "Who is the father of {0}?"},
        "groups": {"english": "Kinship"}
    }
]"#;

pub const ADMIN: &str = "owner";
pub const ADMIN_PASSWORD: &str = "owner-pw";
pub const PASSWORD: &str = "pw";

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.bytes.clone()).unwrap()
    }
}

pub struct Server {
    pub dir: TempDir,
    pub app: Arc<App>,
    pub router: Router,
}

pub fn config(dir: &TempDir) -> Config {
    let templates = dir.path().join("templates.json");
    if !templates.exists() {
        std::fs::write(&templates, TEMPLATES).unwrap();
    }
    let mut c = Config::with_admin(ADMIN, ADMIN_PASSWORD);
    c.store.path = dir.path().join("store");
    c.templates.path = Some(templates);
    c
}

impl Server {
    pub fn start() -> Server {
        Self::open(tempfile::tempdir().unwrap(), Arc::new(SystemClock))
    }

    pub fn open(dir: TempDir, clock: Arc<dyn Clock>) -> Server {
        let app = Arc::new(App::open_with_clock(config(&dir), clock).unwrap());
        let router = router(app.clone());
        Server { dir, app, router }
    }

    /// Drop the service (as a crash would) and open a new one on the same
    /// store.
    pub fn restart(self) -> Server {
        let Server { dir, app, router } = self;
        drop(router);
        drop(app);
        Self::open(dir, Arc::new(SystemClock))
    }

    pub async fn raw(&self, method: &str, path: &str, token: Option<&str>, body: Vec<u8>) -> Reply {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        if !body.is_empty() {
            req = req.header("content-type", "application/json");
        }
        let resp = self
            .router
            .clone()
            .oneshot(req.body(Body::from(body)).unwrap())
            .await
            .unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, headers, bytes }
    }

    pub async fn call(&self, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let bytes = body.map(|b| serde_json::to_vec(&b).unwrap()).unwrap_or_default();
        self.raw(method, path, token, bytes).await
    }

    pub async fn login(&self, username: &str, password: &str) -> String {
        let r = self
            .call("POST", "/api/login", None, Some(json!({"username": username, "password": password})))
            .await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text());
        r.json()["token"].as_str().unwrap().to_string()
    }

    pub async fn admin(&self) -> String {
        self.login(ADMIN, ADMIN_PASSWORD).await
    }

    /// Register `name`, have the admin set its roles, and log it in.
    pub async fn user(&self, admin: &str, name: &str, roles: &[Role]) -> (i64, String) {
        let r = self
            .call(
                "POST",
                "/api/register",
                None,
                Some(json!({"username": name, "email": format!("{name}@example.org"), "password": PASSWORD})),
            )
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
        let id = r.json()["id"].as_i64().unwrap();
        let roles: BTreeSet<Role> = roles.iter().copied().collect();
        let r = self
            .call("PATCH", &format!("/api/users/{id}/roles"), Some(admin), Some(json!({"roles": roles})))
            .await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text());
        (id, self.login(name, PASSWORD).await)
    }

    pub async fn expect(&self, status: StatusCode, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> Value {
        let r = self.call(method, path, token, body).await;
        assert_eq!(r.status, status, "{method} {path}: {}", r.text());
        if r.bytes.is_empty() {
            Value::Null
        } else {
            r.json()
        }
    }
}

/// Corpus "Adi Parva" with the appendix chapter and a second chapter
/// holding the son-of line; ontology PERSON, SAGE, IS_SON_OF,
/// IS_FATHER_OF. Returns (corpus id, [appendix line, son-of line]).
pub async fn seed_corpus(s: &Server, admin: &str) -> (i64, [i64; 2]) {
    let corpus = s
        .expect(
            StatusCode::CREATED,
            "POST",
            "/api/corpora",
            Some(admin),
            Some(json!({"name": "Adi Parva", "description": "Book 1"})),
        )
        .await["id"]
        .as_i64()
        .unwrap();
    let r = s
        .raw(
            "POST",
            &format!("/api/corpora/{corpus}/chapters?name=appendix"),
            Some(admin),
            APPENDIX_CHAPTER.as_bytes().to_vec(),
        )
        .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    let r = s
        .raw(
            "POST",
            &format!("/api/corpora/{corpus}/chapters?name=intro"),
            Some(admin),
            br#"[{"text": "Ugrasrava, the son of Lomaharshana"}]"#.to_vec(),
        )
        .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    for (kind, label) in [("node", "PERSON"), ("node", "SAGE"), ("relation", "IS_SON_OF"), ("relation", "IS_FATHER_OF")] {
        s.expect(
            StatusCode::OK,
            "POST",
            &format!("/api/ontology/{kind}"),
            Some(admin),
            Some(json!({"label": label})),
        )
        .await;
    }
    let page = s
        .expect(StatusCode::OK, "GET", &format!("/api/corpora/{corpus}/lines"), Some(admin), None)
        .await;
    let ids: Vec<i64> = page["lines"].as_array().unwrap().iter().map(|l| l["id"].as_i64().unwrap()).collect();
    (corpus, [ids[0], ids[1]])
}

pub fn entity(token: &str, line: i64, lemma: &str, node_type: &str) -> Value {
    json!({"client_token": token, "line_id": line, "lemma": lemma, "node_type": node_type})
}

pub fn relation(token: &str, line: i64, source: &str, target: &str, ty: &str) -> Value {
    json!({"client_token": token, "line_id": line, "source": source, "target": target, "relation_type": ty})
}

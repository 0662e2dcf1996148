//! REST endpoints. Bodies are JSON; errors are `{"code", "message"}`.
//!
//! | method and path                        | permission               |
//! |----------------------------------------|--------------------------|
//! | `POST /api/register`, `POST /api/login`| none                     |
//! | `POST /api/logout`, `GET /api/me`      | a session                |
//! | `GET /api/corpora`                     | ViewCorpus               |
//! | `GET /api/corpora/{id}/lines?page=`    | ViewCorpus               |
//! | `GET /api/lines/{id}`                  | ViewCorpus               |
//! | `POST /api/corpora`                    | UploadCorpus             |
//! | `POST /api/corpora/{id}/chapters?name=`| UploadCorpus             |
//! | `GET /api/ontology/{kind}`             | ViewCorpus               |
//! | `POST`, `DELETE /api/ontology/{kind}`  | CreateOntology           |
//! | `POST /api/annotations/{kind}`         | Annotate                 |
//! | `GET /api/lines/{id}/annotations`      | Annotate (`scope=all`: Curate) |
//! | `DELETE /api/annotations/{id}`         | Annotate                 |
//! | `PATCH /api/annotations/{id}/curation` | Curate                   |
//! | `GET /api/suggest?line=&prefix=`       | Annotate                 |
//! | `POST /api/graph/build`                | UploadCorpus             |
//! | `GET /api/graph/export.jsonl`          | UploadCorpus             |
//! | `GET /api/templates`, `POST /api/query`| Query                    |
//! | `GET /api/query/{id}/export?format=`   | Query                    |
//! | `GET /api/users`, `PATCH /api/users/{id}/roles` | ManageAccess    |
//! | `GET /api/stats`                       | ViewCorpus               |
//!
//! The session check precedes the permission check, which precedes body
//! decoding.

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::header::{CONTENT_DISPOSITION, CONTENT_TYPE, SET_COOKIE};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, patch, post};
use axum::{Json, Router};
use lemmagraph_core::annotate::{self, CurationDecision, RelationInput, Scope};
use lemmagraph_core::auth::{self, Actor, Permission, Role};
use lemmagraph_core::graph::{self, BuildPolicy};
use lemmagraph_core::ingest::{self, ParseMode, QueryTemplate};
use lemmagraph_core::qengine;
use lemmagraph_core::qtemplate::{self, ExportFormat, TemplateInstance};
use lemmagraph_core::store::{queries, CurationState, Line, OntologyKind};
use lemmagraph_core::Id;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::app::{self, App};
use crate::error::ApiError;
use crate::extract::{json, json_or_default, Auth, Params, PathParam, SESSION_COOKIE};

pub const DEFAULT_PAGE_SIZE: u64 = 50;
pub const MAX_PAGE_SIZE: u64 = 500;
pub const DEFAULT_SUGGESTIONS: usize = 10;
pub const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

type ApiResult<T = Response> = Result<T, ApiError>;

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/api/register", post(register))
        .route("/api/login", post(login))
        .route("/api/logout", post(logout))
        .route("/api/me", get(me))
        .route("/api/users", get(list_users))
        .route("/api/users/{id}/roles", patch(set_roles))
        .route("/api/corpora", get(list_corpora).post(create_corpus))
        .route("/api/corpora/{id}/lines", get(corpus_lines))
        .route("/api/corpora/{id}/chapters", post(upload_chapter))
        .route("/api/lines/{id}", get(get_line))
        .route("/api/lines/{id}/annotations", get(line_annotations))
        .route(
            "/api/ontology/{kind}",
            get(list_types).post(add_type).delete(remove_type),
        )
        .route("/api/annotations/entity", post(post_entity))
        .route("/api/annotations/relation", post(post_relation))
        .route("/api/annotations/{id}", delete(delete_annotation))
        .route("/api/annotations/{id}/curation", patch(curate))
        .route("/api/suggest", get(suggest))
        .route("/api/graph/build", post(build_graph))
        .route("/api/graph/export.jsonl", get(export_graph))
        .route("/api/templates", get(list_templates))
        .route("/api/query", post(run_query))
        .route("/api/query/{id}/export", get(export_query))
        .route("/api/stats", get(stats))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed")
        })
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(app)
}

/// Run blocking store work off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn require(actor: &Actor, p: Permission) -> ApiResult<()> {
    Ok(actor.require(p)?)
}

fn ok<T: Serialize>(value: T) -> ApiResult {
    Ok(Json(value).into_response())
}

fn created<T: Serialize>(value: T) -> ApiResult {
    Ok((StatusCode::CREATED, Json(value)).into_response())
}

fn no_content() -> ApiResult {
    Ok(StatusCode::NO_CONTENT.into_response())
}

#[derive(Serialize)]
struct UserView {
    id: Id,
    username: String,
    roles: BTreeSet<Role>,
}

impl From<&Actor> for UserView {
    fn from(a: &Actor) -> Self {
        UserView {
            id: a.id,
            username: a.username.clone(),
            roles: a.roles.clone(),
        }
    }
}

// ---- accounts ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterBody {
    username: String,
    #[serde(default)]
    email: String,
    password: String,
}

async fn register(State(app): State<Arc<App>>, body: Bytes) -> ApiResult {
    let req: RegisterBody = json(&body)?;
    blocking(move || {
        let roles = app.config.roles.default.clone();
        let id = auth::register_with_roles(&app.store, &req.username, &req.email, &req.password, &roles)?;
        created(UserView {
            id,
            username: req.username,
            roles,
        })
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoginBody {
    username: String,
    password: String,
}

async fn login(State(app): State<Arc<App>>, body: Bytes) -> ApiResult {
    let req: LoginBody = json(&body)?;
    blocking(move || {
        let token = auth::authenticate(&app.store, &app.sessions, &req.username, &req.password)?;
        let user_id = app.sessions.validate(&token).ok_or_else(ApiError::unauthorized)?;
        let actor = Actor::load(&app.store, user_id)?;
        let cookie = format!("{SESSION_COOKIE}={token}; HttpOnly; SameSite=Strict; Path=/");
        Ok((
            [(SET_COOKIE, cookie)],
            Json(json!({ "token": token, "user": UserView::from(&actor) })),
        )
            .into_response())
    })
    .await
}

async fn logout(State(app): State<Arc<App>>, auth: Auth) -> ApiResult {
    app.sessions.revoke(&auth.token);
    no_content()
}

async fn me(State(app): State<Arc<App>>, auth: Auth) -> ApiResult {
    let actor = auth.actor;
    blocking(move || {
        let (entity, relation) = app.store.read(|c| queries::user_annotation_counts(c, actor.id))?;
        let permissions: Vec<Permission> = Permission::ALL.into_iter().filter(|p| actor.can(*p)).collect();
        ok(json!({
            "id": actor.id,
            "username": actor.username,
            "roles": actor.roles,
            "permissions": permissions,
            "annotations": { "entity": entity, "relation": relation },
        }))
    })
    .await
}

async fn list_users(State(app): State<Arc<App>>, auth: Auth) -> ApiResult {
    require(&auth.actor, Permission::ManageAccess)?;
    blocking(move || {
        let users = app.store.read(queries::users)?;
        let views: Vec<Value> = users
            .into_iter()
            .map(|u| json!({ "id": u.id, "username": u.username, "email": u.email, "roles": u.roles }))
            .collect();
        ok(views)
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RolesBody {
    roles: BTreeSet<Role>,
}

async fn set_roles(State(app): State<Arc<App>>, auth: Auth, PathParam(id): PathParam<Id>, body: Bytes) -> ApiResult {
    require(&auth.actor, Permission::ManageAccess)?;
    let req: RolesBody = json(&body)?;
    blocking(move || {
        let roles = auth::grant_roles(&app.store, &auth.actor, id, &req.roles)?;
        ok(json!({ "id": id, "roles": roles }))
    })
    .await
}

// ---- corpora ----

async fn list_corpora(State(app): State<Arc<App>>, auth: Auth) -> ApiResult {
    require(&auth.actor, Permission::ViewCorpus)?;
    blocking(move || {
        let listing = app.store.read(|c| {
            let mut out = Vec::new();
            for corpus in queries::corpora(c)? {
                let chapters: Vec<Value> = queries::chapters(c, corpus.id)?
                    .into_iter()
                    .map(|ch| json!({ "id": ch.id, "name": ch.name }))
                    .collect();
                out.push(json!({
                    "id": corpus.id,
                    "name": corpus.name,
                    "description": corpus.description,
                    "lines": queries::corpus_line_count(c, corpus.id)?,
                    "chapters": chapters,
                }));
            }
            Ok::<_, lemmagraph_core::store::StoreError>(out)
        })?;
        ok(listing)
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusBody {
    name: String,
    #[serde(default)]
    description: String,
}

async fn create_corpus(State(app): State<Arc<App>>, auth: Auth, body: Bytes) -> ApiResult {
    require(&auth.actor, Permission::UploadCorpus)?;
    let req: CorpusBody = json(&body)?;
    blocking(move || {
        let id = app.store.write(|tx| tx.insert_corpus(&req.name, &req.description))?;
        created(json!({ "id": id, "name": req.name, "description": req.description }))
    })
    .await
}

#[derive(Deserialize)]
struct PageParams {
    #[serde(default = "first_page")]
    page: u64,
    #[serde(default = "default_page_size")]
    per_page: u64,
}

fn first_page() -> u64 {
    1
}

fn default_page_size() -> u64 {
    DEFAULT_PAGE_SIZE
}

#[derive(Serialize)]
struct LinePage {
    corpus_id: Id,
    page: u64,
    per_page: u64,
    total: u64,
    lines: Vec<Line>,
}

async fn corpus_lines(
    State(app): State<Arc<App>>,
    auth: Auth,
    PathParam(id): PathParam<Id>,
    Params(p): Params<PageParams>,
) -> ApiResult {
    require(&auth.actor, Permission::ViewCorpus)?;
    if p.page == 0 {
        return Err(ApiError::bad_request("invalid_query", "pages are numbered from 1"));
    }
    if !(1..=MAX_PAGE_SIZE).contains(&p.per_page) {
        return Err(ApiError::bad_request(
            "invalid_query",
            format!("per_page must be in 1..={MAX_PAGE_SIZE}"),
        ));
    }
    blocking(move || {
        let page = app.store.read(|c| {
            if queries::corpus(c, id)?.is_none() {
                return Ok(None);
            }
            let offset = (p.page - 1).saturating_mul(p.per_page);
            Ok::<_, lemmagraph_core::store::StoreError>(Some(LinePage {
                corpus_id: id,
                page: p.page,
                per_page: p.per_page,
                total: queries::corpus_line_count(c, id)?,
                lines: queries::corpus_lines(c, id, offset, p.per_page)?,
            }))
        })?;
        ok(page.ok_or_else(|| ApiError::not_found(format!("corpus {id} not found")))?)
    })
    .await
}

async fn get_line(State(app): State<Arc<App>>, auth: Auth, PathParam(id): PathParam<Id>) -> ApiResult {
    require(&auth.actor, Permission::ViewCorpus)?;
    blocking(move || {
        let view = app.store.read(|c| {
            let Some(line) = queries::line(c, id)? else {
                return Ok(None);
            };
            let verse_mark = queries::verses(c, line.chapter_id)?
                .into_iter()
                .find(|v| v.id == line.verse_id)
                .and_then(|v| v.verse_mark);
            let analysis = queries::line_analysis(c, id)?;
            let tokens: Vec<Value> = queries::tokens(c, id)?
                .into_iter()
                .map(|t| {
                    let attributes: Map<String, Value> =
                        t.attributes.into_iter().map(|(k, v)| (k, Value::String(v))).collect();
                    json!({ "position": t.position, "attributes": attributes })
                })
                .collect();
            Ok::<_, lemmagraph_core::store::StoreError>(Some(json!({
                "line": line,
                "verse_mark": verse_mark,
                "analysis": analysis.map(|a| json!({ "source": a.source, "text": a.text })),
                "tokens": tokens,
            })))
        })?;
        ok(view.ok_or_else(|| ApiError::not_found(format!("line {id} not found")))?)
    })
    .await
}

#[derive(Deserialize)]
struct ChapterParams {
    name: String,
    #[serde(default)]
    mode: Option<String>,
}

async fn upload_chapter(
    State(app): State<Arc<App>>,
    auth: Auth,
    PathParam(corpus_id): PathParam<Id>,
    Params(p): Params<ChapterParams>,
    body: Bytes,
) -> ApiResult {
    require(&auth.actor, Permission::UploadCorpus)?;
    let mode = match p.mode.as_deref() {
        None | Some("strict") => ParseMode::Strict,
        Some("lenient") => ParseMode::Lenient,
        Some(other) => {
            return Err(ApiError::bad_request(
                "invalid_query",
                format!("mode must be strict or lenient, not `{other}`"),
            ))
        }
    };
    blocking(move || {
        let chapter = ingest::parse_chapter_with(&body, mode)?;
        let summary = ingest::ingest_chapter(&app.store, corpus_id, &p.name, &chapter)?;
        created(summary)
    })
    .await
}

// ---- ontology ----

fn ontology_kind(kind: &str) -> ApiResult<OntologyKind> {
    kind.parse()
        .map_err(|_| ApiError::not_found(format!("ontology kind `{kind}` (node or relation)")))
}

async fn list_types(State(app): State<Arc<App>>, auth: Auth, PathParam(kind): PathParam<String>) -> ApiResult {
    require(&auth.actor, Permission::ViewCorpus)?;
    let kind = ontology_kind(&kind)?;
    blocking(move || ok(annotate::ontology_list(&app.store, kind)?)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TypeBody {
    label: String,
    #[serde(default)]
    description: Option<String>,
}

async fn add_type(
    State(app): State<Arc<App>>,
    auth: Auth,
    PathParam(kind): PathParam<String>,
    body: Bytes,
) -> ApiResult {
    require(&auth.actor, Permission::CreateOntology)?;
    let kind = ontology_kind(&kind)?;
    let req: TypeBody = json(&body)?;
    blocking(move || {
        let id = annotate::ontology_add(&app.store, &auth.actor, kind, &req.label, req.description.as_deref())?;
        ok(json!({ "id": id, "label": req.label }))
    })
    .await
}

#[derive(Deserialize)]
struct LabelParams {
    label: String,
}

async fn remove_type(
    State(app): State<Arc<App>>,
    auth: Auth,
    PathParam(kind): PathParam<String>,
    Params(p): Params<LabelParams>,
) -> ApiResult {
    require(&auth.actor, Permission::CreateOntology)?;
    let kind = ontology_kind(&kind)?;
    blocking(move || {
        annotate::ontology_remove(&app.store, &auth.actor, kind, &p.label)?;
        no_content()
    })
    .await
}

// ---- annotations ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityBody {
    client_token: String,
    line_id: Id,
    lemma: String,
    node_type: String,
}

/// Replays with the same `client_token` answer with the same id.
async fn post_entity(State(app): State<Arc<App>>, auth: Auth, body: Bytes) -> ApiResult {
    require(&auth.actor, Permission::Annotate)?;
    let req: EntityBody = json(&body)?;
    blocking(move || {
        let id = annotate::annotate_entity(
            &app.store,
            &auth.actor,
            &req.client_token,
            req.line_id,
            &req.lemma,
            &req.node_type,
        )?;
        ok(json!({ "id": id, "client_token": req.client_token }))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationBody {
    client_token: String,
    line_id: Id,
    source: String,
    target: String,
    relation_type: String,
    #[serde(default)]
    detail: Option<String>,
}

async fn post_relation(State(app): State<Arc<App>>, auth: Auth, body: Bytes) -> ApiResult {
    require(&auth.actor, Permission::Annotate)?;
    let req: RelationBody = json(&body)?;
    blocking(move || {
        let relation = RelationInput {
            source: &req.source,
            target: &req.target,
            relation_type: &req.relation_type,
            detail: req.detail.as_deref(),
        };
        let id = annotate::annotate_relation(&app.store, &auth.actor, &req.client_token, req.line_id, relation)?;
        ok(json!({ "id": id, "client_token": req.client_token }))
    })
    .await
}

#[derive(Deserialize)]
struct ScopeParams {
    #[serde(default)]
    scope: Option<Scope>,
}

async fn line_annotations(
    State(app): State<Arc<App>>,
    auth: Auth,
    PathParam(id): PathParam<Id>,
    Params(p): Params<ScopeParams>,
) -> ApiResult {
    let scope = p.scope.unwrap_or(Scope::Own);
    require(
        &auth.actor,
        match scope {
            Scope::Own => Permission::Annotate,
            Scope::All => Permission::Curate,
        },
    )?;
    blocking(move || ok(annotate::list_annotations(&app.store, &auth.actor, id, scope)?)).await
}

async fn delete_annotation(State(app): State<Arc<App>>, auth: Auth, PathParam(id): PathParam<Id>) -> ApiResult {
    require(&auth.actor, Permission::Annotate)?;
    blocking(move || {
        annotate::delete_annotation(&app.store, &auth.actor, id)?;
        no_content()
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurationBody {
    decision: CurationDecision,
}

async fn curate(State(app): State<Arc<App>>, auth: Auth, PathParam(id): PathParam<Id>, body: Bytes) -> ApiResult {
    require(&auth.actor, Permission::Curate)?;
    let req: CurationBody = json(&body)?;
    blocking(move || {
        let state: CurationState = annotate::curate(&app.store, &auth.actor, id, req.decision)?;
        ok(json!({ "id": id, "curation_state": state }))
    })
    .await
}

#[derive(Deserialize)]
struct SuggestParams {
    line: Id,
    #[serde(default)]
    prefix: String,
    #[serde(default)]
    limit: Option<usize>,
}

async fn suggest(State(app): State<Arc<App>>, auth: Auth, Params(p): Params<SuggestParams>) -> ApiResult {
    require(&auth.actor, Permission::Annotate)?;
    blocking(move || {
        let limit = p.limit.unwrap_or(DEFAULT_SUGGESTIONS);
        ok(annotate::suggest(&app.store, p.line, &p.prefix, limit)?)
    })
    .await
}

// ---- graph ----

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BuildBody {
    #[serde(default)]
    include_states: Option<BTreeSet<CurationState>>,
    #[serde(default)]
    corpus_ids: Option<BTreeSet<Id>>,
}

async fn build_graph(State(app): State<Arc<App>>, auth: Auth, body: Bytes) -> ApiResult {
    require(&auth.actor, Permission::UploadCorpus)?;
    let req: BuildBody = json_or_default(&body)?;
    blocking(move || {
        let mut policy: BuildPolicy = app.config.build_policy();
        if let Some(states) = req.include_states {
            policy.include_states = states;
        }
        policy.corpus_ids = req.corpus_ids;
        policy.validate()?;
        let g = app.rebuild_graph(&policy)?;
        ok(json!({
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "built_at": g.built_at(),
            "policy": policy,
        }))
    })
    .await
}

async fn export_graph(State(app): State<Arc<App>>, auth: Auth) -> ApiResult {
    require(&auth.actor, Permission::UploadCorpus)?;
    let g = app.graph();
    blocking(move || {
        Ok((
            [
                (CONTENT_TYPE, "application/x-ndjson".to_string()),
                (
                    CONTENT_DISPOSITION,
                    format!("attachment; filename=\"{}\"", graph::SNAPSHOT_FILE),
                ),
            ],
            graph::export_jsonl(&g),
        )
            .into_response())
    })
    .await
}

// ---- templates and queries ----

#[derive(Serialize)]
struct TemplateView<'a> {
    id: usize,
    #[serde(flatten)]
    template: &'a QueryTemplate,
}

async fn list_templates(State(app): State<Arc<App>>, auth: Auth) -> ApiResult {
    require(&auth.actor, Permission::Query)?;
    let views: Vec<TemplateView<'_>> = app
        .templates
        .iter()
        .enumerate()
        .map(|(id, template)| TemplateView { id, template })
        .collect();
    ok(views)
}

fn default_language() -> String {
    "english".into()
}

/// Exactly one of `template_id`, `template_gid` (when unique) or
/// `query_text` selects what runs.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    #[serde(default)]
    template_id: Option<usize>,
    #[serde(default)]
    template_gid: Option<String>,
    #[serde(default)]
    query_text: Option<String>,
    #[serde(default = "default_language")]
    language: String,
    #[serde(default)]
    inputs: Vec<String>,
}

#[derive(Serialize)]
struct QueryResponse {
    id: u64,
    instance: Option<TemplateInstance>,
    #[serde(flatten)]
    output: qtemplate::QueryOutput,
}

fn select_template<'a>(app: &'a App, req: &QueryBody) -> ApiResult<Option<&'a QueryTemplate>> {
    match (req.template_id, &req.template_gid, &req.query_text) {
        (Some(id), None, None) => app
            .templates
            .get(id)
            .map(Some)
            .ok_or_else(|| ApiError::not_found(format!("template {id} not found"))),
        (None, Some(gid), None) => {
            let mut matching = app.templates.iter().filter(|t| &t.gid == gid);
            match (matching.next(), matching.next()) {
                (Some(t), None) => Ok(Some(t)),
                (None, _) => Err(ApiError::not_found(format!("no template with gid `{gid}`"))),
                (Some(_), Some(_)) => Err(ApiError::bad_request(
                    "ambiguous_template",
                    format!("several templates share gid `{gid}`; use template_id"),
                )),
            }
        }
        (None, None, Some(_)) => Ok(None),
        _ => Err(ApiError::bad_request(
            "validation",
            "give exactly one of template_id, template_gid, query_text",
        )),
    }
}

async fn run_query(State(app): State<Arc<App>>, auth: Auth, body: Bytes) -> ApiResult {
    require(&auth.actor, Permission::Query)?;
    let req: QueryBody = json(&body)?;
    let graph = app.graph();
    blocking(move || {
        let (instance, output) = match select_template(&app, &req)? {
            Some(template) => {
                let run = qtemplate::run(&graph, template, &req.language, &req.inputs)?;
                (Some(run.instance), run.output)
            }
            None => {
                let text = req.query_text.as_deref().unwrap_or_default();
                let result = qengine::run(&graph, text)?;
                (None, qtemplate::tabulate(&graph, &result, &[]))
            }
        };
        let id = app.cache_result(auth.actor.id, output.clone());
        ok(QueryResponse { id, instance, output })
    })
    .await
}

#[derive(Deserialize)]
struct ExportParams {
    #[serde(default)]
    format: Option<String>,
}

async fn export_query(
    State(app): State<Arc<App>>,
    auth: Auth,
    PathParam(id): PathParam<u64>,
    Params(p): Params<ExportParams>,
) -> ApiResult {
    require(&auth.actor, Permission::Query)?;
    let format: ExportFormat = p
        .format
        .as_deref()
        .unwrap_or("csv")
        .parse()
        .map_err(|e: String| ApiError::bad_request("invalid_query", e))?;
    let output = app
        .cached_result(id, auth.actor.id)
        .ok_or_else(|| ApiError::not_found(format!("query result {id} not found")))?;
    Ok((
        [
            (CONTENT_TYPE, format.mime().to_string()),
            (
                CONTENT_DISPOSITION,
                format!("attachment; filename=\"result-{id}.{}\"", format.extension()),
            ),
        ],
        qtemplate::export_result(&output, format),
    )
        .into_response())
}

async fn stats(State(app): State<Arc<App>>, auth: Auth) -> ApiResult {
    require(&auth.actor, Permission::ViewCorpus)?;
    blocking(move || ok(app::stats(&app.store)?)).await
}

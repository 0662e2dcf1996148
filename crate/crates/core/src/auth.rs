//! Accounts, sessions and the role/permission matrix.
//!
//! | Permission      | querier | annotator | curator | admin |
//! |-----------------|:-------:|:---------:|:-------:|:-----:|
//! | Query           |    x    |     x     |    x    |   x   |
//! | Annotate        |         |     x     |    x    |   x   |
//! | Curate          |         |           |    x    |   x   |
//! | CreateOntology  |         |           |         |   x   |
//! | UploadCorpus    |         |           |         |   x   |
//! | ManageAccess    |         |           |         |   x   |
//!
//! `ViewCorpus` is held by every registered user, whatever their roles.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use argon2::password_hash::rand_core::OsRng;
use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{queries, Id, Store, StoreError, UserRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Querier,
    Annotator,
    Curator,
    Admin,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Querier, Role::Annotator, Role::Curator, Role::Admin];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Querier => "querier",
            Role::Annotator => "annotator",
            Role::Curator => "curator",
            Role::Admin => "admin",
        }
    }

    /// Permissions granted by this role alone (excluding `ViewCorpus`).
    pub fn permissions(self) -> &'static [Permission] {
        use Permission::*;
        match self {
            Role::Querier => &[Query],
            Role::Annotator => &[Query, Annotate],
            Role::Curator => &[Query, Annotate, Curate],
            Role::Admin => &[Query, Annotate, Curate, CreateOntology, UploadCorpus, ManageAccess],
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Permission {
    Query,
    Annotate,
    Curate,
    CreateOntology,
    UploadCorpus,
    ManageAccess,
    ViewCorpus,
}

impl Permission {
    pub const ALL: [Permission; 7] = [
        Permission::Query,
        Permission::Annotate,
        Permission::Curate,
        Permission::CreateOntology,
        Permission::UploadCorpus,
        Permission::ManageAccess,
        Permission::ViewCorpus,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Allow,
    Deny,
}

impl Decision {
    pub fn is_allow(self) -> bool {
        self == Decision::Allow
    }
}

/// Decide `permission` for a registered user holding `roles`: the union of
/// the per-role grants, plus `ViewCorpus` for everyone.
pub fn check_permission(roles: &BTreeSet<Role>, permission: Permission) -> Decision {
    if permission == Permission::ViewCorpus
        || roles.iter().any(|r| r.permissions().contains(&permission))
    {
        Decision::Allow
    } else {
        Decision::Deny
    }
}

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("invalid username or password")]
    InvalidCredentials,
    #[error("session is missing, invalid or expired")]
    InvalidSession,
    #[error("permission {0:?} required")]
    Forbidden(Permission),
    #[error("username `{0}` is already taken")]
    DuplicateUsername(String),
    #[error("{0}")]
    Validation(String),
    #[error("user {0} not found")]
    UnknownUser(Id),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// The authenticated caller of an operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Actor {
    pub id: Id,
    pub username: String,
    pub roles: BTreeSet<Role>,
}

impl Actor {
    pub fn can(&self, permission: Permission) -> bool {
        check_permission(&self.roles, permission).is_allow()
    }

    pub fn require(&self, permission: Permission) -> Result<(), AuthError> {
        if self.can(permission) {
            Ok(())
        } else {
            Err(AuthError::Forbidden(permission))
        }
    }

    pub fn load(store: &Store, user_id: Id) -> Result<Actor, AuthError> {
        let user = store
            .read(|c| queries::user(c, user_id))?
            .ok_or(AuthError::UnknownUser(user_id))?;
        Ok(Actor::from(user))
    }
}

impl From<UserRecord> for Actor {
    fn from(u: UserRecord) -> Self {
        Actor {
            id: u.id,
            username: u.username,
            roles: u.roles,
        }
    }
}

pub fn hash_password(password: &str) -> Result<String, AuthError> {
    let salt = SaltString::generate(&mut OsRng);
    Argon2::default()
        .hash_password(password.as_bytes(), &salt)
        .map(|h| h.to_string())
        .map_err(|e| AuthError::Validation(format!("cannot hash password: {e}")))
}

pub fn verify_password(password: &str, digest: &str) -> bool {
    PasswordHash::new(digest)
        .map(|parsed| {
            Argon2::default()
                .verify_password(password.as_bytes(), &parsed)
                .is_ok()
        })
        .unwrap_or(false)
}

/// Register a new account holding only the querier role.
pub fn register(store: &Store, username: &str, email: &str, password: &str) -> Result<Id, AuthError> {
    register_with_roles(store, username, email, password, &BTreeSet::from([Role::Querier]))
}

pub fn register_with_roles(
    store: &Store,
    username: &str,
    email: &str,
    password: &str,
    roles: &BTreeSet<Role>,
) -> Result<Id, AuthError> {
    if username.is_empty() {
        return Err(AuthError::Validation("username must be non-empty".into()));
    }
    if password.is_empty() {
        return Err(AuthError::Validation("password must be non-empty".into()));
    }
    let digest = hash_password(password)?;
    store.write(|tx| {
        if queries::user_by_name(tx, username)?.is_some() {
            return Err(AuthError::DuplicateUsername(username.to_string()));
        }
        let id = tx.insert_user(username, email, &digest)?;
        tx.set_roles(id, roles)?;
        Ok(id)
    })
}

/// Create the configured owner account with the admin role unless a user
/// of that name already exists. Returns the owner's id.
pub fn bootstrap_admin(
    store: &Store,
    username: &str,
    email: &str,
    password: &str,
) -> Result<Id, AuthError> {
    if let Some(existing) = store.read(|c| queries::user_by_name(c, username))? {
        return Ok(existing.id);
    }
    register_with_roles(store, username, email, password, &BTreeSet::from([Role::Admin]))
}

/// Replace `target`'s roles. Requires `ManageAccess`; every change is audited.
pub fn grant_roles(
    store: &Store,
    actor: &Actor,
    target: Id,
    roles: &BTreeSet<Role>,
) -> Result<BTreeSet<Role>, AuthError> {
    actor.require(Permission::ManageAccess)?;
    store.write(|tx| {
        if queries::user(tx, target)?.is_none() {
            return Err(AuthError::UnknownUser(target));
        }
        tx.set_roles(target, roles)?;
        tx.append_role_audit(actor.id, target, roles)?;
        Ok(queries::user(tx, target)?
            .map(|u| u.roles)
            .unwrap_or_default())
    })
}

/// Time source for session expiry.
pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
}

#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default()
    }
}

/// Manually advanced clock for tests.
#[derive(Debug, Default)]
pub struct ManualClock {
    millis: AtomicU64,
}

impl ManualClock {
    pub fn advance(&self, by: Duration) {
        self.millis.fetch_add(by.as_millis() as u64, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        Duration::from_millis(self.millis.load(Ordering::SeqCst))
    }
}

#[derive(Debug, Clone, Copy)]
struct Session {
    user_id: Id,
    last_seen: Duration,
}

/// In-memory session table keyed by opaque 256-bit bearer tokens. Sessions
/// expire after `idle` without use.
pub struct SessionManager {
    idle: Duration,
    clock: Arc<dyn Clock>,
    sessions: Mutex<HashMap<String, Session>>,
}

impl SessionManager {
    pub fn new(idle: Duration) -> Self {
        Self::with_clock(idle, Arc::new(SystemClock))
    }

    pub fn with_clock(idle: Duration, clock: Arc<dyn Clock>) -> Self {
        SessionManager {
            idle,
            clock,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn create(&self, user_id: Id) -> String {
        let mut bytes = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut bytes);
        let token = hex::encode(bytes);
        let now = self.clock.now();
        let mut sessions = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
        sessions.retain(|_, s| now.saturating_sub(s.last_seen) < self.idle);
        sessions.insert(token.clone(), Session { user_id, last_seen: now });
        token
    }

    /// Resolve a token to its user, refreshing the idle timer.
    pub fn validate(&self, token: &str) -> Option<Id> {
        let now = self.clock.now();
        let mut sessions = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
        let session = sessions.get_mut(token)?;
        if now.saturating_sub(session.last_seen) >= self.idle {
            sessions.remove(token);
            return None;
        }
        session.last_seen = now;
        Some(session.user_id)
    }

    pub fn revoke(&self, token: &str) {
        self.sessions
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .remove(token);
    }
}

/// Check credentials and open a session. Unknown users and wrong passwords
/// produce the same error.
pub fn authenticate(
    store: &Store,
    sessions: &SessionManager,
    username: &str,
    password: &str,
) -> Result<String, AuthError> {
    let user = store.read(|c| queries::user_by_name(c, username))?;
    match user {
        Some(u) if verify_password(password, &u.password_hash) => Ok(sessions.create(u.id)),
        Some(_) => Err(AuthError::InvalidCredentials),
        None => {
            // Spend the same hashing work as a real check.
            static DUMMY: OnceLock<String> = OnceLock::new();
            let digest = DUMMY.get_or_init(|| hash_password("\u{0}").unwrap_or_default());
            let _ = verify_password(password, digest);
            Err(AuthError::InvalidCredentials)
        }
    }
}

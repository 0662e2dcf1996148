/// Bumped whenever the table layout changes; stored in `PRAGMA user_version`.
pub const SCHEMA_VERSION: i64 = 1;

pub const CREATE: &str = r#"
CREATE TABLE users (
    id            INTEGER PRIMARY KEY AUTOINCREMENT,
    username      TEXT NOT NULL UNIQUE CHECK (length(username) > 0),
    email         TEXT NOT NULL,
    password_hash TEXT NOT NULL
);

CREATE TABLE user_roles (
    user_id INTEGER NOT NULL REFERENCES users(id) ON DELETE CASCADE,
    role    TEXT NOT NULL CHECK (role IN ('querier', 'annotator', 'curator', 'admin')),
    PRIMARY KEY (user_id, role)
);

CREATE TABLE role_audit (
    id        INTEGER PRIMARY KEY AUTOINCREMENT,
    actor_id  INTEGER NOT NULL REFERENCES users(id),
    target_id INTEGER NOT NULL REFERENCES users(id),
    roles     TEXT NOT NULL,
    at        TEXT NOT NULL
);

CREATE TABLE corpora (
    id          INTEGER PRIMARY KEY AUTOINCREMENT,
    name        TEXT NOT NULL UNIQUE CHECK (length(name) > 0),
    description TEXT NOT NULL
);

CREATE TABLE chapters (
    id        INTEGER PRIMARY KEY AUTOINCREMENT,
    corpus_id INTEGER NOT NULL REFERENCES corpora(id),
    name      TEXT NOT NULL,
    UNIQUE (corpus_id, name)
);

CREATE TABLE verses (
    id         INTEGER PRIMARY KEY AUTOINCREMENT,
    chapter_id INTEGER NOT NULL REFERENCES chapters(id),
    verse_mark TEXT
);

CREATE TABLE lines (
    id         INTEGER PRIMARY KEY AUTOINCREMENT,
    verse_id   INTEGER NOT NULL REFERENCES verses(id),
    chapter_id INTEGER NOT NULL REFERENCES chapters(id),
    ordinal    INTEGER NOT NULL CHECK (ordinal >= 0),
    text       TEXT NOT NULL CHECK (length(text) > 0),
    split      TEXT,
    UNIQUE (chapter_id, ordinal)
);

CREATE TABLE line_analysis (
    line_id INTEGER PRIMARY KEY REFERENCES lines(id),
    source  TEXT NOT NULL,
    text    TEXT NOT NULL
);

CREATE TABLE analysis_tokens (
    id         INTEGER PRIMARY KEY AUTOINCREMENT,
    line_id    INTEGER NOT NULL REFERENCES lines(id),
    position   INTEGER NOT NULL,
    attributes TEXT NOT NULL,
    UNIQUE (line_id, position)
);

CREATE TABLE lexicon (
    id    INTEGER PRIMARY KEY AUTOINCREMENT,
    lemma TEXT NOT NULL UNIQUE CHECK (length(lemma) > 0)
);

CREATE TABLE node_types (
    id          INTEGER PRIMARY KEY AUTOINCREMENT,
    label       TEXT NOT NULL UNIQUE CHECK (length(label) > 0),
    description TEXT
);

CREATE TABLE relation_types (
    id          INTEGER PRIMARY KEY AUTOINCREMENT,
    label       TEXT NOT NULL UNIQUE CHECK (length(label) > 0),
    description TEXT
);

CREATE TABLE annotations (
    id                INTEGER PRIMARY KEY AUTOINCREMENT,
    kind              TEXT NOT NULL CHECK (kind IN ('entity', 'relation')),
    client_token      TEXT NOT NULL UNIQUE,
    line_id           INTEGER NOT NULL REFERENCES lines(id),
    annotator_id      INTEGER NOT NULL REFERENCES users(id),
    curation_state    TEXT NOT NULL DEFAULT 'proposed'
                      CHECK (curation_state IN ('proposed', 'kept', 'discarded')),
    lexicon_id        INTEGER REFERENCES lexicon(id),
    node_type_id      INTEGER REFERENCES node_types(id),
    source_lexicon_id INTEGER REFERENCES lexicon(id),
    target_lexicon_id INTEGER REFERENCES lexicon(id),
    relation_type_id  INTEGER REFERENCES relation_types(id),
    detail            TEXT,
    CHECK (
        (kind = 'entity' AND lexicon_id IS NOT NULL AND node_type_id IS NOT NULL
            AND source_lexicon_id IS NULL AND relation_type_id IS NULL)
        OR
        (kind = 'relation' AND source_lexicon_id IS NOT NULL AND target_lexicon_id IS NOT NULL
            AND relation_type_id IS NOT NULL AND lexicon_id IS NULL AND node_type_id IS NULL)
    )
);

CREATE UNIQUE INDEX entity_annotation_tuple
    ON annotations (lexicon_id, node_type_id, line_id, annotator_id)
    WHERE kind = 'entity';
CREATE INDEX annotations_by_line ON annotations (line_id);
CREATE INDEX lines_by_verse ON lines (verse_id);
"#;

//! Scenarios and sessions in memory, with an optional append-only log on
//! disk. Each session log is JSON lines of `created`, `move` and `deleted`
//! events; restarting replays them.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use drhai_core::dialogue::MoveRecord;
use drhai_core::Move;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::error::ServiceError;
use crate::scenario::{builtin, Scenario, ScenarioSpec};
use crate::session::{MenuEntry, Session, SessionConfig};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
enum Event {
    Created { scenario: String, at: u64 },
    Move { #[serde(rename = "move")] record: MoveRecord, at: u64 },
    Deleted { at: u64 },
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

type Shared = Arc<Mutex<Session>>;

pub struct Store {
    config: SessionConfig,
    data_dir: Option<PathBuf>,
    scenarios: RwLock<BTreeMap<String, Arc<Scenario>>>,
    sessions: RwLock<HashMap<String, Shared>>,
    next_id: AtomicU64,
}

fn corrupt(path: &Path, what: impl std::fmt::Display) -> ServiceError {
    ServiceError::Corrupt(format!("{}: {what}", path.display()))
}

impl Store {
    /// Starts from the built-in scenarios plus whatever `data_dir` holds.
    pub fn open(config: SessionConfig, data_dir: Option<PathBuf>) -> Result<Store, ServiceError> {
        let store = Store {
            config,
            data_dir,
            scenarios: RwLock::new(builtin().into_iter().map(|s| (s.id.clone(), Arc::new(s))).collect()),
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        };
        if let Some(dir) = &store.data_dir {
            fs::create_dir_all(dir.join("scenarios"))?;
            fs::create_dir_all(dir.join("sessions"))?;
            store.load_scenarios(&dir.join("scenarios"))?;
            store.load_sessions(&dir.join("sessions"))?;
        }
        Ok(store)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    fn load_scenarios(&self, dir: &Path) -> Result<(), ServiceError> {
        for entry in sorted_entries(dir, "json")? {
            let spec: ScenarioSpec =
                serde_json::from_slice(&fs::read(&entry)?).map_err(|e| corrupt(&entry, e))?;
            let id = entry.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
            let scenario = Scenario::new(id.clone(), spec).map_err(|e| corrupt(&entry, e))?;
            self.scenarios.write().unwrap().insert(id, Arc::new(scenario));
        }
        Ok(())
    }

    fn load_sessions(&self, dir: &Path) -> Result<(), ServiceError> {
        let mut highest = 0;
        for path in sorted_entries(dir, "jsonl")? {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
            if let Some(n) = id.strip_prefix("d-").and_then(|n| n.parse::<u64>().ok()) {
                highest = highest.max(n);
            }
            let mut events = Vec::new();
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if !line.trim().is_empty() {
                    events.push(serde_json::from_str::<Event>(&line).map_err(|e| corrupt(&path, e))?);
                }
            }
            let mut events = events.into_iter();
            let Some(Event::Created { scenario, at: created }) = events.next() else {
                return Err(corrupt(&path, "log does not start with a created event"));
            };
            let scenario = self.scenario(&scenario).map_err(|e| corrupt(&path, e))?;
            let mut moves = Vec::new();
            let mut updated = created;
            let mut deleted = false;
            for event in events {
                match event {
                    Event::Move { record, at } => {
                        moves.push(Move::try_from(record).map_err(|e| corrupt(&path, e))?);
                        updated = at;
                    }
                    Event::Deleted { .. } => deleted = true,
                    Event::Created { .. } => return Err(corrupt(&path, "second created event")),
                }
            }
            if deleted {
                continue;
            }
            let session = Session::replay(id.clone(), scenario, moves, created, updated, &self.config)
                .map_err(|e| corrupt(&path, e))?;
            self.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(session)));
        }
        self.next_id.store(highest + 1, Ordering::SeqCst);
        Ok(())
    }

    fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.data_dir.as_ref().map(|d| d.join("sessions").join(format!("{id}.jsonl")))
    }

    fn append(&self, id: &str, events: &[Event]) -> Result<(), ServiceError> {
        let Some(path) = self.log_path(id) else {
            return Ok(());
        };
        let mut buf = Vec::new();
        for e in events {
            serde_json::to_writer(&mut buf, e).map_err(std::io::Error::other)?;
            buf.push(b'\n');
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        file.write_all(&buf)?;
        file.sync_data()?;
        Ok(())
    }

    pub fn scenarios(&self) -> Vec<Arc<Scenario>> {
        self.scenarios.read().unwrap().values().cloned().collect()
    }

    pub fn scenario(&self, id: &str) -> Result<Arc<Scenario>, ServiceError> {
        self.scenarios
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownScenario(id.to_owned()))
    }

    /// Validates and stores an uploaded scenario. Uploading the same content
    /// twice yields the same scenario.
    pub fn add_scenario(&self, spec: ScenarioSpec) -> Result<Arc<Scenario>, ServiceError> {
        let id = Scenario::derived_id(&spec);
        if let Ok(existing) = self.scenario(&id) {
            return Ok(existing);
        }
        let scenario = Arc::new(Scenario::new(id.clone(), spec)?);
        if let Some(dir) = &self.data_dir {
            let bytes = serde_json::to_vec_pretty(&scenario.spec).map_err(std::io::Error::other)?;
            fs::write(dir.join("scenarios").join(format!("{id}.json")), bytes)?;
        }
        self.scenarios.write().unwrap().insert(id, scenario.clone());
        Ok(scenario)
    }

    pub fn session(&self, id: &str) -> Result<Shared, ServiceError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_owned()))
    }

    /// Opens a session on `scenario_id`: the opening query and the
    /// explainer's first reply are played before it is returned.
    pub fn create_session(&self, scenario_id: &str) -> Result<Shared, ServiceError> {
        let scenario = self.scenario(scenario_id)?;
        let id = format!("d-{:06}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let at = now();
        let (session, played) = Session::start(id.clone(), scenario, &self.config, at)?;
        let mut events = vec![Event::Created {
            scenario: scenario_id.to_owned(),
            at,
        }];
        events.extend(played.iter().map(|m| Event::Move {
            record: m.into(),
            at,
        }));
        self.append(&id, &events)?;
        let shared = Arc::new(Mutex::new(session));
        self.sessions.write().unwrap().insert(id, shared.clone());
        Ok(shared)
    }

    pub fn menu(&self, session: &Session) -> Result<Vec<MenuEntry>, ServiceError> {
        session.menu(&self.config)
    }

    /// Plays the human's move and the explainer's reply, logging both.
    pub fn play(&self, session: &mut Session, token: &str) -> Result<Vec<Move>, ServiceError> {
        let at = now();
        let mut next = session.clone();
        let played = next.play(token, &self.config, at)?;
        let events: Vec<Event> = played.iter().map(|m| Event::Move { record: m.into(), at }).collect();
        self.append(&next.id, &events)?;
        *session = next;
        Ok(played)
    }

    pub fn delete_session(&self, id: &str) -> Result<(), ServiceError> {
        let removed = self.sessions.write().unwrap().remove(id);
        if removed.is_none() {
            return Err(ServiceError::UnknownSession(id.to_owned()));
        }
        self.append(id, &[Event::Deleted { at: now() }])
    }
}

fn sorted_entries(dir: &Path, extension: &str) -> Result<Vec<PathBuf>, ServiceError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == extension) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

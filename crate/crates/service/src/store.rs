use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vidcue_core::evidence::{validate_annotation, VideoAnnotation, Verdict, Violation};
use vidcue_core::record::{from_canonical, to_canonical};

pub const ARCHIVE_FORMAT: &str = "vidcue-archive/1";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("not-found: {0}")]
    NotFound(String),
    #[error("invalid video id {0:?}")]
    BadId(String),
    #[error("conflict: expected revision {expected}, stored revision {current}")]
    Conflict { expected: u64, current: u64 },
    #[error("annotation rejected: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("annotation does not match video {0}: {1}")]
    Mismatch(String, String),
    #[error("export refused: {}", .0.iter().map(|(id, why)| format!("{id} ({why})")).collect::<Vec<_>>().join(", "))]
    ExportRefused(Vec<(String, String)>),
    #[error("corrupt record {0}: {1}")]
    Corrupt(String, String),
    #[error("import refused: {0}")]
    Import(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Fixed properties of a clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoInfo {
    pub video_id: String,
    pub source: String,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
}

impl VideoInfo {
    pub fn of(a: &VideoAnnotation) -> Self {
        Self {
            video_id: a.video_id.clone(),
            source: a.source.clone(),
            fps: a.fps,
            width: a.width,
            height: a.height,
            frame_count: a.frame_count,
        }
    }
}

/// What is stored per video. Revision 0 means registered but never annotated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationEnvelope {
    pub info: VideoInfo,
    pub revision: u64,
    pub updated_at: Option<String>,
    pub annotation: Option<VideoAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListEntry {
    pub video_id: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub info: Option<VideoInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revision: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Test hook that stops a write after the temp file is on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failpoint {
    CrashBeforeRename,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    #[serde(flatten)]
    info: VideoInfo,
    revision: u64,
    updated_at: Option<String>,
    annotated: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Archive {
    format: String,
    manifest: Vec<ManifestEntry>,
    records: Vec<VideoAnnotation>,
}

pub struct Store {
    root: PathBuf,
    locks: DashMap<String, Arc<Mutex<()>>>,
    failpoint: Mutex<Option<Failpoint>>,
    tmp_counter: AtomicU64,
}

pub fn check_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id.len() <= 200
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::BadId(id.to_string()))
    }
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("videos"))?;
        Ok(Self { root, locks: DashMap::new(), failpoint: Mutex::new(None), tmp_counter: AtomicU64::new(0) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn set_failpoint(&self, fp: Option<Failpoint>) {
        *self.failpoint.lock().expect("failpoint lock") = fp;
    }

    fn path(&self, id: &str) -> PathBuf {
        self.root.join("videos").join(format!("{id}.json"))
    }

    pub fn frame_dir(&self, id: &str) -> PathBuf {
        self.root.join("frames").join(id)
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks.entry(id.to_string()).or_default().clone()
    }

    fn read(&self, id: &str) -> Result<AnnotationEnvelope, StoreError> {
        check_id(id)?;
        let text = match fs::read_to_string(self.path(id)) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.into())),
            Err(e) => return Err(e.into()),
        };
        let env: AnnotationEnvelope =
            from_canonical(&text).map_err(|e| StoreError::Corrupt(id.into(), e.to_string()))?;
        if env.info.video_id != id {
            return Err(StoreError::Corrupt(id.into(), format!("file holds video {}", env.info.video_id)));
        }
        Ok(env)
    }

    fn write(&self, env: &AnnotationEnvelope) -> Result<(), StoreError> {
        let id = &env.info.video_id;
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let tmp = self.root.join("videos").join(format!(".{id}.json.tmp{n}"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(to_canonical(env).as_bytes())?;
            f.sync_all()?;
        }
        if *self.failpoint.lock().expect("failpoint lock") == Some(Failpoint::CrashBeforeRename) {
            return Err(StoreError::Io(std::io::Error::other("simulated crash before rename")));
        }
        fs::rename(&tmp, self.path(id))?;
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<AnnotationEnvelope, StoreError> {
        self.read(id)
    }

    /// Registers an unannotated clip; a no-op when the id already exists.
    pub fn add_video(&self, info: VideoInfo) -> Result<AnnotationEnvelope, StoreError> {
        check_id(&info.video_id)?;
        let lock = self.lock(&info.video_id);
        let _guard = lock.lock().expect("video lock");
        match self.read(&info.video_id) {
            Ok(env) => Ok(env),
            Err(StoreError::NotFound(_)) => {
                let env = AnnotationEnvelope { info, revision: 0, updated_at: None, annotation: None };
                self.write(&env)?;
                Ok(env)
            }
            Err(e) => Err(e),
        }
    }

    /// Writes `annotation` if `expected_revision` is the stored revision. An
    /// unknown id is created when the expected revision is 0.
    pub fn put(&self, id: &str, annotation: VideoAnnotation, expected_revision: u64) -> Result<AnnotationEnvelope, StoreError> {
        check_id(id)?;
        if annotation.video_id != id {
            return Err(StoreError::Mismatch(id.into(), format!("body names video {}", annotation.video_id)));
        }
        let violations = validate_annotation(&annotation);
        if !violations.is_empty() {
            return Err(StoreError::Invalid(violations));
        }
        let lock = self.lock(id);
        let _guard = lock.lock().expect("video lock");
        let (info, current) = match self.read(id) {
            Ok(env) => (env.info, env.revision),
            Err(StoreError::NotFound(_)) => (VideoInfo::of(&annotation), 0),
            Err(e) => return Err(e),
        };
        if expected_revision != current {
            return Err(StoreError::Conflict { expected: expected_revision, current });
        }
        if VideoInfo::of(&annotation) != info {
            return Err(StoreError::Mismatch(id.into(), "source, rate, size or length differ from the registered clip".into()));
        }
        let env = AnnotationEnvelope {
            info,
            revision: current + 1,
            updated_at: Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)),
            annotation: Some(annotation),
        };
        self.write(&env)?;
        Ok(env)
    }

    fn ids(&self) -> Result<Vec<String>, StoreError> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join("videos"))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().map(str::to_string))
            .filter(|n| !n.starts_with('.'))
            .filter_map(|n| n.strip_suffix(".json").map(str::to_string))
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn list(&self) -> Result<Vec<ListEntry>, StoreError> {
        Ok(self
            .ids()?
            .into_iter()
            .map(|id| match self.read(&id) {
                Ok(env) => ListEntry {
                    video_id: id,
                    status: "ok",
                    verdict: env.annotation.as_ref().map(|a| a.verdict),
                    revision: Some(env.revision),
                    info: Some(env.info),
                    error: None,
                },
                Err(e) => ListEntry { video_id: id, status: "invalid", info: None, revision: None, verdict: None, error: Some(e.to_string()) },
            })
            .collect())
    }

    /// Deterministic bundle of every clip. Refused while any record is
    /// unreadable or fails validation.
    pub fn export(&self) -> Result<String, StoreError> {
        let mut offenders = Vec::new();
        let mut manifest = Vec::new();
        let mut records = Vec::new();
        for id in self.ids()? {
            match self.read(&id) {
                Err(e) => offenders.push((id, e.to_string())),
                Ok(env) => {
                    if let Some(a) = &env.annotation {
                        let v = validate_annotation(a);
                        if !v.is_empty() {
                            offenders.push((id.clone(), join(&v)));
                            continue;
                        }
                        if VideoInfo::of(a) != env.info {
                            offenders.push((id.clone(), "annotation disagrees with clip info".into()));
                            continue;
                        }
                    }
                    manifest.push(ManifestEntry {
                        info: env.info,
                        revision: env.revision,
                        updated_at: env.updated_at,
                        annotated: env.annotation.is_some(),
                    });
                    records.extend(env.annotation);
                }
            }
        }
        if !offenders.is_empty() {
            return Err(StoreError::ExportRefused(offenders));
        }
        Ok(to_canonical(&Archive { format: ARCHIVE_FORMAT.into(), manifest, records }))
    }

    /// Loads an archive into an empty store.
    pub fn import(&self, archive: &str) -> Result<usize, StoreError> {
        if !self.ids()?.is_empty() {
            return Err(StoreError::Import("store is not empty".into()));
        }
        let archive: Archive = from_canonical(archive).map_err(|e| StoreError::Import(e.to_string()))?;
        if archive.format != ARCHIVE_FORMAT {
            return Err(StoreError::Import(format!("unknown format {}", archive.format)));
        }
        let mut records = archive.records.into_iter();
        let mut envs = Vec::new();
        for m in archive.manifest {
            check_id(&m.info.video_id)?;
            let annotation = if m.annotated {
                let a = records.next().ok_or_else(|| StoreError::Import("fewer records than manifest entries".into()))?;
                if VideoInfo::of(&a) != m.info {
                    return Err(StoreError::Import(format!("record for {} does not match its manifest entry", m.info.video_id)));
                }
                let v = validate_annotation(&a);
                if !v.is_empty() {
                    return Err(StoreError::Invalid(v));
                }
                Some(a)
            } else {
                None
            };
            envs.push(AnnotationEnvelope { info: m.info, revision: m.revision, updated_at: m.updated_at, annotation });
        }
        if records.next().is_some() {
            return Err(StoreError::Import("more records than manifest entries".into()));
        }
        for env in &envs {
            self.write(env)?;
        }
        Ok(envs.len())
    }
}

use anyhow::{Context, Result};
use clubx_core::{FrameDag, Schedule};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// Marks errors caused by unreadable or malformed input.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScheduleFile {
    Wrapped {
        schedule: Schedule,
        #[serde(default)]
        frames: Option<FrameDag>,
    },
    Bare(Schedule),
}

/// A bare schedule or a solver output, with any frames stored alongside.
pub fn read_schedule(path: &Path) -> Result<(Schedule, Option<FrameDag>)> {
    Ok(match read_json::<ScheduleFile>(path)? {
        ScheduleFile::Wrapped { schedule, frames } => (schedule, frames),
        ScheduleFile::Bare(schedule) => (schedule, None),
    })
}

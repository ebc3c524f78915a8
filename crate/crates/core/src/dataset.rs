//! On-disk dataset layout.
//!
//! ```text
//! <root>/index.jsonl             one {"id","task","frames"} line per instance, sorted by id
//! <root>/<id>/meta.json          schema-versioned instance metadata
//! <root>/<id>/frame_0000.png ... lossless RGB frames
//! ```
//!
//! Instance directories are written under a temporary name and renamed into
//! place, so readers never see a half-written instance.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{TaskInstance, TaskKind};
use crate::render::{Frame, FrameSequence};

pub const SCHEMA_VERSION: u32 = 1;
pub const INDEX_FILE: &str = "index.jsonl";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub task: TaskKind,
    pub frames: usize,
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    schema_version: u32,
    frame_count: usize,
    #[serde(flatten)]
    instance: TaskInstance,
}

pub fn frame_file_name(i: usize) -> String {
    format!("frame_{i:04}.png")
}

/// Canonical `meta.json` text for one sequence.
pub fn meta_json(seq: &FrameSequence) -> Result<String> {
    let meta = MetaFile {
        schema_version: SCHEMA_VERSION,
        frame_count: seq.frames.len(),
        instance: seq.meta.clone(),
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    Ok(text)
}

/// Parses `meta.json` text, checking the schema version and task tag first
/// so that unknown tasks surface as [`Error::UnknownTask`].
pub fn parse_meta(text: &str) -> Result<(TaskInstance, usize)> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        other => {
            return Err(Error::SchemaVersionMismatch(format!(
                "expected schema_version {SCHEMA_VERSION}, found {other:?}"
            )))
        }
    }
    let task = value
        .get("task")
        .and_then(|t| t.as_str())
        .ok_or_else(|| Error::SchemaVersionMismatch("meta.json has no task".into()))?;
    task.parse::<TaskKind>()?;
    let meta: MetaFile = serde_json::from_value(value)?;
    Ok((meta.instance, meta.frame_count))
}

fn write_png(path: &Path, frame: &Frame) -> Result<()> {
    let img = image::RgbImage::from_raw(frame.width as u32, frame.height as u32, frame.rgb.clone())
        .ok_or_else(|| Error::GeometryMismatch("frame buffer does not match its size".into()))?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::CorruptFrame {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

fn read_png(path: &Path) -> Result<Frame> {
    let img = image::open(path)
        .map_err(|e| Error::CorruptFrame {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?
        .to_rgb8();
    Ok(Frame {
        width: img.width() as usize,
        height: img.height() as usize,
        rgb: img.into_raw(),
    })
}

/// Writes one instance directory atomically.
pub fn write_instance(root: &Path, seq: &FrameSequence) -> Result<PathBuf> {
    let id = &seq.meta.id;
    if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
        return Err(Error::InvalidArgument(format!(
            "instance id {id:?} is not a plain name"
        )));
    }
    let final_dir = root.join(id);
    let tmp_dir = root.join(format!(".{id}.tmp"));
    if tmp_dir.exists() {
        fs::remove_dir_all(&tmp_dir)?;
    }
    fs::create_dir_all(&tmp_dir)?;
    for (i, frame) in seq.frames.iter().enumerate() {
        write_png(&tmp_dir.join(frame_file_name(i)), frame)?;
    }
    fs::write(tmp_dir.join(META_FILE), meta_json(seq)?)?;
    if final_dir.exists() {
        fs::remove_dir_all(&final_dir)?;
    }
    fs::rename(&tmp_dir, &final_dir)?;
    Ok(final_dir)
}

pub fn read_index(root: &Path) -> Result<Vec<IndexEntry>> {
    let file = fs::File::open(root.join(INDEX_FILE))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

fn write_index(root: &Path, entries: &BTreeMap<String, IndexEntry>) -> Result<()> {
    let tmp = root.join(format!(".{INDEX_FILE}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        for e in entries.values() {
            writeln!(f, "{}", serde_json::to_string(e)?)?;
        }
        f.sync_all()?;
    }
    fs::rename(tmp, root.join(INDEX_FILE))?;
    Ok(())
}

/// Adds `entries` to the root index, replacing any with the same id. Creates
/// an empty index when there is none yet.
pub fn merge_index(root: &Path, entries: impl IntoIterator<Item = IndexEntry>) -> Result<()> {
    fs::create_dir_all(root)?;
    let mut index: BTreeMap<String, IndexEntry> = if root.join(INDEX_FILE).exists() {
        read_index(root)?.into_iter().map(|e| (e.id.clone(), e)).collect()
    } else {
        BTreeMap::new()
    };
    for e in entries {
        index.insert(e.id.clone(), e);
    }
    write_index(root, &index)
}

pub fn index_entry(seq: &FrameSequence) -> IndexEntry {
    IndexEntry {
        id: seq.meta.id.clone(),
        task: seq.meta.task(),
        frames: seq.frames.len(),
    }
}

/// Writes every sequence and merges them into the root index.
pub fn write_dataset(seqs: &[FrameSequence], root: &Path) -> Result<()> {
    fs::create_dir_all(root)?;
    for seq in seqs {
        write_instance(root, seq)?;
    }
    merge_index(root, seqs.iter().map(index_entry))
}

pub fn read_instance(dir: &Path) -> Result<FrameSequence> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path)
        .map_err(|e| Error::SchemaVersionMismatch(format!("cannot read {}: {e}", meta_path.display())))?;
    let (meta, frame_count) = parse_meta(&text)?;
    let on_disk = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| {
            let name = e.file_name();
            let name = name.to_string_lossy();
            name.starts_with("frame_") && name.ends_with(".png")
        })
        .count();
    if on_disk != frame_count {
        return Err(Error::CorruptFrame {
            path: dir.to_path_buf(),
            reason: format!("meta declares {frame_count} frames, found {on_disk} files"),
        });
    }
    let frames = (0..frame_count)
        .map(|i| read_png(&dir.join(frame_file_name(i))))
        .collect::<Result<Vec<_>>>()?;
    if frames.is_empty() {
        return Err(Error::CorruptFrame {
            path: dir.to_path_buf(),
            reason: "instance has no frames".into(),
        });
    }
    Ok(FrameSequence { frames, meta })
}

/// Reads every instance listed in the index, in index order.
pub fn read_dataset(root: &Path) -> Result<Vec<FrameSequence>> {
    read_index(root)?
        .iter()
        .map(|e| read_instance(&root.join(&e.id)))
        .collect()
}

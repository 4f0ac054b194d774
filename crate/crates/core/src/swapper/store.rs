//! Where segment bytes live while their graph is swapped out.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug)]
pub enum SegmentStore {
    Memory(BTreeMap<u16, Vec<u8>>),
    /// One `graph-<id>.gsw` file per segment.
    Directory(PathBuf),
}

impl Default for SegmentStore {
    fn default() -> Self {
        SegmentStore::Memory(BTreeMap::new())
    }
}

fn io(e: std::io::Error, path: &Path) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

impl SegmentStore {
    pub fn directory(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io(e, &dir))?;
        Ok(SegmentStore::Directory(dir))
    }

    pub fn file_name(graph: u16) -> String {
        format!("graph-{graph}.gsw")
    }

    pub fn put(&mut self, graph: u16, bytes: Vec<u8>) -> Result<()> {
        match self {
            SegmentStore::Memory(m) => {
                m.insert(graph, bytes);
                Ok(())
            }
            SegmentStore::Directory(dir) => {
                let path = dir.join(Self::file_name(graph));
                let tmp = dir.join(format!("{}.tmp", Self::file_name(graph)));
                fs::write(&tmp, &bytes).map_err(|e| io(e, &tmp))?;
                fs::rename(&tmp, &path).map_err(|e| io(e, &path))
            }
        }
    }

    pub fn get(&self, graph: u16) -> Result<Vec<u8>> {
        match self {
            SegmentStore::Memory(m) => m
                .get(&graph)
                .cloned()
                .ok_or_else(|| Error::SwapFault(format!("no segment for graph {graph}"))),
            SegmentStore::Directory(dir) => {
                let path = dir.join(Self::file_name(graph));
                fs::read(&path).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => Error::SwapFault(format!("no segment for graph {graph}")),
                    _ => io(e, &path),
                })
            }
        }
    }

    pub fn remove(&mut self, graph: u16) -> Result<()> {
        match self {
            SegmentStore::Memory(m) => {
                m.remove(&graph);
                Ok(())
            }
            SegmentStore::Directory(dir) => {
                let path = dir.join(Self::file_name(graph));
                match fs::remove_file(&path) {
                    Ok(()) => Ok(()),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
                    Err(e) => Err(io(e, &path)),
                }
            }
        }
    }
}

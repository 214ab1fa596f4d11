//! Versioned JSON documents.
//!
//! Persisted artifacts are wrapped as `{"format": ..., "version": ..., "data": ...}`.
//! Floats are written in shortest round-trip form and parsed exactly, so
//! write/read cycles reproduce every value bit for bit.

use std::path::Path;

use serde::de::{DeserializeOwned, IgnoredAny};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait Versioned: Serialize + DeserializeOwned {
    const FORMAT: &'static str;
    const VERSION: u32;
}

#[derive(Serialize)]
struct DocumentRef<'a, T> {
    format: &'static str,
    version: u32,
    data: &'a T,
}

#[derive(Deserialize)]
struct Document<T> {
    format: String,
    version: u32,
    data: T,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
    #[allow(dead_code)]
    data: IgnoredAny,
}

/// Parses JSON without serde_json's nesting limit; deep trees nest far past it.
pub fn from_str_unbounded<T: DeserializeOwned>(s: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(s);
    de.disable_recursion_limit();
    let value = T::deserialize(&mut de)?;
    de.end()?;
    Ok(value)
}

pub fn to_json<T: Versioned>(value: &T) -> Result<String> {
    let doc = DocumentRef {
        format: T::FORMAT,
        version: T::VERSION,
        data: value,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json<T: Versioned>(s: &str) -> Result<T> {
    let doc: Document<T> = from_str_unbounded(s)?;
    if doc.format != T::FORMAT || doc.version != T::VERSION {
        return Err(Error::Format {
            expected: T::FORMAT.to_string(),
            version: T::VERSION,
            found: doc.format,
            found_version: doc.version,
        });
    }
    Ok(doc.data)
}

/// Reads only the `format` and `version` fields of a document.
pub fn peek_format(s: &str) -> Result<(String, u32)> {
    let header: Header = from_str_unbounded(s)?;
    Ok((header.format, header.version))
}

pub fn write_file<T: Versioned>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_file<T: Versioned>(path: &Path) -> Result<T> {
    from_json(&read_text(path)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

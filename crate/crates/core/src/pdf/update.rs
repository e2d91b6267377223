//! Incremental updates: the original bytes are kept verbatim and the
//! rewritten objects are appended together with a new cross-reference
//! section chained to the old one through `/Prev`.

use lopdf::{Dictionary, Object, ObjectId, Stream};

use super::serialize::{write_dictionary, write_indirect};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum XrefKind {
    Table,
    Stream,
}

/// Offset recorded by the last `startxref` keyword of the file.
pub(crate) fn last_startxref(bytes: &[u8]) -> Result<usize> {
    const KEYWORD: &[u8] = b"startxref";
    let pos = bytes
        .windows(KEYWORD.len())
        .rposition(|w| w == KEYWORD)
        .ok_or_else(|| Error::malformed("no startxref keyword"))?;
    let digits: Vec<u8> = bytes[pos + KEYWORD.len()..]
        .iter()
        .copied()
        .skip_while(u8::is_ascii_whitespace)
        .take_while(u8::is_ascii_digit)
        .collect();
    let bad = || Error::MalformedPdf {
        offset: Some(pos),
        reason: "startxref is not followed by an offset".into(),
    };
    let offset: usize = std::str::from_utf8(&digits)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(bad)?;
    if offset >= bytes.len() {
        return Err(Error::MalformedPdf {
            offset: Some(pos),
            reason: format!("startxref points past the end of the file ({offset})"),
        });
    }
    Ok(offset)
}

pub(crate) fn xref_kind(bytes: &[u8], offset: usize) -> XrefKind {
    let rest = &bytes[offset..];
    let start = rest
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .unwrap_or(rest.len());
    if rest[start..].starts_with(b"xref") {
        XrefKind::Table
    } else {
        XrefKind::Stream
    }
}

/// Runs of consecutive object numbers: (first, count).
fn subsections(ids: &[u32]) -> Vec<(u32, u32)> {
    let mut runs: Vec<(u32, u32)> = Vec::new();
    for &id in ids {
        match runs.last_mut() {
            Some((first, count)) if *first + *count == id => *count += 1,
            _ => runs.push((id, 1)),
        }
    }
    runs
}

/// Appends `objects` (replacing objects of the same number) to `original`.
/// `trailer` is the document's current trailer; `/Root`, `/Info` and `/ID`
/// are carried over into the new section.
pub(crate) fn append_update(
    original: &[u8],
    trailer: &Dictionary,
    objects: &[(ObjectId, Object)],
) -> Result<Vec<u8>> {
    let prev = last_startxref(original)?;
    let kind = xref_kind(original, prev);

    let mut out = original.to_vec();
    if !matches!(out.last(), Some(b'\n' | b'\r')) {
        out.push(b'\n');
    }

    let mut entries: Vec<(ObjectId, usize)> = Vec::with_capacity(objects.len() + 1);
    for (id, obj) in objects {
        entries.push((*id, out.len()));
        write_indirect(&mut out, *id, obj)?;
    }

    let declared = trailer
        .get(b"Size")
        .and_then(Object::as_i64)
        .unwrap_or(0)
        .max(0) as u32;
    let highest = objects.iter().map(|((id, _), _)| id + 1).max().unwrap_or(0);
    let mut size = declared.max(highest);

    let mut new_trailer = Dictionary::new();
    let root = trailer
        .get(b"Root")
        .map_err(|_| Error::malformed("trailer has no /Root"))?;
    new_trailer.set("Root", root.clone());
    for key in [b"Info".as_slice(), b"ID".as_slice()] {
        if let Ok(value) = trailer.get(key) {
            new_trailer.set(key.to_vec(), value.clone());
        }
    }
    new_trailer.set("Prev", prev as i64);

    let xref_offset = out.len();
    match kind {
        XrefKind::Table => {
            entries.sort_by_key(|((id, _), _)| *id);
            let ids: Vec<u32> = entries.iter().map(|((id, _), _)| *id).collect();
            out.extend_from_slice(b"xref\n0 1\n0000000000 65535 f\r\n");
            let mut entry_iter = entries.iter();
            for (first, count) in subsections(&ids) {
                out.extend_from_slice(format!("{first} {count}\n").as_bytes());
                for ((_, generation), offset) in entry_iter.by_ref().take(count as usize) {
                    out.extend_from_slice(format!("{offset:010} {generation:05} n\r\n").as_bytes());
                }
            }
            new_trailer.set("Size", i64::from(size));
            out.extend_from_slice(b"trailer\n");
            write_dictionary(&mut out, &new_trailer);
            out.push(b'\n');
        }
        XrefKind::Stream => {
            let xref_id = size;
            size += 1;
            entries.push(((xref_id, 0), xref_offset));
            entries.sort_by_key(|((id, _), _)| *id);
            let ids: Vec<u32> = entries.iter().map(|((id, _), _)| *id).collect();
            let mut data = Vec::with_capacity(entries.len() * 7);
            for ((_, generation), offset) in &entries {
                let offset = u32::try_from(*offset)
                    .map_err(|_| Error::malformed("file too large for a 4-byte xref offset"))?;
                data.push(1);
                data.extend_from_slice(&offset.to_be_bytes());
                data.extend_from_slice(&generation.to_be_bytes());
            }
            let index: Vec<Object> = subsections(&ids)
                .into_iter()
                .flat_map(|(first, count)| {
                    [
                        Object::from(i64::from(first)),
                        Object::from(i64::from(count)),
                    ]
                })
                .collect();
            new_trailer.set("Type", "XRef");
            new_trailer.set("Size", i64::from(size));
            new_trailer.set("W", vec![Object::from(1), Object::from(4), Object::from(2)]);
            new_trailer.set("Index", index);
            let stream = Stream::new(new_trailer, data);
            write_indirect(&mut out, (xref_id, 0), &Object::Stream(stream))?;
        }
    }
    out.extend_from_slice(format!("startxref\n{xref_offset}\n%%EOF\n").as_bytes());
    Ok(out)
}

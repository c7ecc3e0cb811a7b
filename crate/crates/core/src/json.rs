//! Canonical JSON output: object keys sorted, two-space indentation,
//! trailing newline.

use serde::Serialize;

use crate::error::Result;

pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's Map is a BTreeMap here, so a round trip through Value sorts
    // every object's keys, including struct fields.
    let value = serde_json::to_value(value)?;
    let mut out = serde_json::to_string_pretty(&value)?;
    out.push('\n');
    Ok(out)
}

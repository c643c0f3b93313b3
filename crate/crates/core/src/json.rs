//! Byte-stable JSON output.

use serde::Serialize;

/// Pretty JSON with object keys sorted, terminated by a newline.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    // serde_json::Value keeps keys in a BTreeMap unless `preserve_order` is on.
    let value = serde_json::to_value(value)?;
    let mut out = serde_json::to_string_pretty(&value)?;
    out.push('\n');
    Ok(out)
}

/// Single-line JSON with object keys sorted.
pub fn to_canonical_line<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let value = serde_json::to_value(value)?;
    serde_json::to_string(&value)
}

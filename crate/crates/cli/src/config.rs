//! Flag-over-file layering for subcommand options.
//!
//! Every subcommand's options are a struct of `Option` fields. A JSON
//! config file supplies values under the same snake_case keys; a flag
//! given on the command line wins over the file, and anything still unset
//! falls back to the documented default.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::UsageError;

pub fn load_file(path: &Path) -> Result<Map<String, Value>, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(UsageError(format!(
            "{}: config must be a JSON object",
            path.display()
        ))),
        Err(e) => Err(UsageError(format!("{}: {e}", path.display()))),
    }
}

/// `flags` with every unset field filled from `file`. Keys in the file that
/// the subcommand does not know are ignored, so one file can serve several
/// subcommands.
pub fn layer<T>(flags: &T, file: Option<&Map<String, Value>>) -> Result<T, UsageError>
where
    T: Serialize + DeserializeOwned,
{
    let Value::Object(mut merged) =
        serde_json::to_value(flags).map_err(|e| UsageError(e.to_string()))?
    else {
        unreachable!("option structs serialize to objects");
    };
    if let Some(file) = file {
        for (k, v) in merged.iter_mut() {
            if v.is_null() {
                if let Some(fv) = file.get(k) {
                    *v = fv.clone();
                }
            }
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| UsageError(format!("config file: {e}")))
}

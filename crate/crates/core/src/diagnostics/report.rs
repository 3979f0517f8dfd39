use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// One diagnostic outcome, serialized as
/// `{check_name, inputs_digest, values, threshold, pass}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check_name: String,
    /// SHA-256 of the textual description of the check's inputs.
    pub inputs_digest: String,
    pub values: BTreeMap<String, f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(
        check_name: impl Into<String>,
        inputs: &str,
        values: impl IntoIterator<Item = (&'static str, f64)>,
        threshold: f64,
        pass: bool,
    ) -> Self {
        Self {
            check_name: check_name.into(),
            inputs_digest: digest(inputs),
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            threshold,
            pass,
        }
    }
}

pub fn digest(inputs: &str) -> String {
    hex::encode(Sha256::digest(inputs.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_sha256() {
        assert_eq!(
            digest("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let r = CheckReport::new("x", "abc", [("value", 1.0)], 2.0, true);
        assert_eq!(r.values["value"], 1.0);
    }
}

//! Canonical on-disk record format for annotations: pretty-printed JSON with
//! a fixed field order and a trailing newline.

use serde::{de::DeserializeOwned, Serialize};

use crate::evidence::VideoAnnotation;

pub fn to_canonical<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("record types always serialize");
    text.push('\n');
    text
}

pub fn from_canonical<T: DeserializeOwned>(text: &str) -> Result<T, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn annotation_to_record(a: &VideoAnnotation) -> String {
    to_canonical(a)
}

pub fn annotation_from_record(text: &str) -> Result<VideoAnnotation, serde_json::Error> {
    from_canonical(text)
}

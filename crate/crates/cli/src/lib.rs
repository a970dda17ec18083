//! Spec-file format and report types behind the `tolim` binary.

#![forbid(unsafe_code)]

pub mod format;
pub mod report;

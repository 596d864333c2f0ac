//! HTTP session service for SketchQuest: durable per-session event logs,
//! the session registry, the JSON API and a scripted demo.

pub mod api;
pub mod config;
pub mod demo;
pub mod error;
pub mod eventlog;
pub mod sessions;

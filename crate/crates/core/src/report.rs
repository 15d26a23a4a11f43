//! Named scalar diagnostics.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A titled list of named values, in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub entries: Vec<ReportEntry>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report { title: title.into(), entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.entries.push(ReportEntry { name: name.into(), value, note: None });
        self
    }

    pub fn push_note(&mut self, name: impl Into<String>, value: f64, note: impl Into<String>) -> &mut Self {
        self.entries.push(ReportEntry { name: name.into(), value, note: Some(note.into()) });
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.value)
    }
}

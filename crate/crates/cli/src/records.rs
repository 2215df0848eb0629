//! Plain-text output: `key = value` records with shortest round-trip floats.
//!
//! Every value is written through `Display`, so `f64` columns survive a parse
//! back to the identical bits and two runs over the same inputs produce
//! byte-identical files.

use std::fmt::Display;
use std::fmt::Write as _;

pub struct Record {
    body: String,
}

impl Record {
    pub fn new(command: &str) -> Self {
        let mut record = Record { body: String::new() };
        record.push("command", command);
        record
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        writeln!(self.body, "{key} = {value}").expect("string writes never fail");
        self
    }

    /// Optional numeric field; absent values read `none`.
    pub fn push_opt(&mut self, key: &str, value: Option<impl Display>) -> &mut Self {
        match value {
            Some(v) => self.push(key, v),
            None => self.push(key, "none"),
        }
    }

    pub fn render(self) -> String {
        self.body
    }
}

#[cfg(test)]
mod tests {
    use super::Record;

    #[test]
    fn floats_round_trip_through_the_record() {
        let value = 0.1f64 + 0.2f64;
        let mut record = Record::new("probe");
        record.push("x", value);
        let text = record.render();
        let line = text.lines().find(|l| l.starts_with("x = ")).unwrap();
        let parsed: f64 = line.trim_start_matches("x = ").parse().unwrap();
        assert_eq!(parsed.to_bits(), value.to_bits());
    }

    #[test]
    fn missing_values_read_none() {
        let mut record = Record::new("probe");
        record.push_opt("residual", None::<f64>);
        assert!(record.render().contains("residual = none"));
    }
}

//! Deterministic table output.
//!
//! Every command emits a provenance header (tool, version, command, the
//! fully resolved configuration, and the master seed) followed by rows.
//! CSV and JSON renderings carry identical numeric content; floats are
//! printed with the shortest round-trip representation in both.

use std::io::Write;

/// One table cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    /// Rendered as an empty CSV field / JSON null.
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // Shortest round-trip representation, byte-identical to the
            // JSON rendering of the same value.
            Cell::Float(v) => serde_json::to_string(v).expect("finite float"),
            Cell::Text(v) => v.clone(),
            Cell::Bool(v) => v.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => serde_json::json!(v),
            Cell::Float(v) => serde_json::json!(v),
            Cell::Text(v) => serde_json::json!(v),
            Cell::Bool(v) => serde_json::json!(v),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

/// The table a command produces: fixed columns, rows, and trailing notes
/// (verdict lines and bit-flag legends).
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub struct Provenance {
    pub command: &'static str,
    /// Fully resolved configuration, serialized to canonical JSON.
    pub config_json: String,
    pub master_seed: u64,
}

pub fn render(table: &Table, prov: &Provenance, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "# tool: steinlab {}", env!("CARGO_PKG_VERSION"))?;
            writeln!(out, "# command: {}", prov.command)?;
            writeln!(out, "# seed: {}", prov.master_seed)?;
            writeln!(out, "# config: {}", prov.config_json)?;
            writeln!(out, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
            for note in &table.notes {
                writeln!(out, "# {note}")?;
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = table
                .rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, serde_json::Value> = table
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.to_string(), cell.json()))
                        .collect();
                    serde_json::Value::Object(obj)
                })
                .collect();
            let doc = serde_json::json!({
                "tool": "steinlab",
                "version": env!("CARGO_PKG_VERSION"),
                "command": prov.command,
                "seed": prov.master_seed,
                "config": serde_json::from_str::<serde_json::Value>(&prov.config_json)
                    .expect("config is valid JSON"),
                "rows": rows,
                "notes": table.notes,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}

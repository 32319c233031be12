//! Table rendering: CSV with a JSON configuration header comment, or a
//! JSON document carrying the same configuration. Floats print with 10
//! significant digits so reruns are byte-identical.

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format_float(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            // keep the same printed precision in both formats
            Cell::F(v) => serde_json::Value::String(format_float(*v)),
            Cell::I(v) => serde_json::Value::from(*v),
            Cell::S(s) => serde_json::Value::String(s.clone()),
        }
    }
}

fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.9e}")
    }
}

pub struct Table {
    config: String,
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(config: String, header: &[S]) -> Self {
        Self {
            config,
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# {}\n", self.config);
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(k, c)| (k.clone(), c.json()))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let config: serde_json::Value =
            serde_json::from_str(&self.config).unwrap_or(serde_json::Value::Null);
        let doc = serde_json::json!({ "config": config, "rows": rows });
        let mut text = serde_json::to_string_pretty(&doc).unwrap();
        text.push('\n');
        text
    }
}

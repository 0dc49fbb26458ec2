//! Report model with plain-text and `key=value` renderings.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Kv,
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Heading(String),
    Field { key: Option<String>, label: String, value: String },
    Table { key: String, headers: Vec<String>, rows: Vec<Vec<String>> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    items: Vec<Item>,
}

impl Report {
    pub fn heading(&mut self, title: impl Into<String>) -> &mut Self {
        self.items.push(Item::Heading(title.into()));
        self
    }

    /// A value shown as `label: value` in text and `key=value` in kv.
    pub fn field(&mut self, key: impl Into<String>, label: impl Into<String>, value: impl ToString) -> &mut Self {
        self.items.push(Item::Field {
            key: Some(key.into()),
            label: label.into(),
            value: value.to_string(),
        });
        self
    }

    /// A field shown in text only.
    pub fn note(&mut self, label: impl Into<String>, value: impl ToString) -> &mut Self {
        self.items.push(Item::Field {
            key: None,
            label: label.into(),
            value: value.to_string(),
        });
        self
    }

    /// Rows rendered aligned in text and as `key.row.column=value` in kv.
    pub fn table(&mut self, key: impl Into<String>, headers: &[&str], rows: Vec<Vec<String>>) -> &mut Self {
        self.items.push(Item::Table {
            key: key.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows,
        });
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text(),
            Format::Kv => self.kv(),
        }
    }

    fn text(&self) -> String {
        let width = self
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Field { label, .. } => Some(label.len()),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        for item in &self.items {
            match item {
                Item::Heading(t) => {
                    if !out.is_empty() {
                        out.push('\n');
                    }
                    let _ = writeln!(out, "== {t} ==");
                }
                Item::Field { label, value, .. } => {
                    let _ = writeln!(out, "{label:<width$}  {value}");
                }
                Item::Table { headers, rows, .. } => {
                    let mut widths: Vec<usize> = headers.iter().map(String::len).collect();
                    for row in rows {
                        for (w, cell) in widths.iter_mut().zip(row) {
                            *w = (*w).max(cell.len());
                        }
                    }
                    let fmt_row = |cells: &[String]| {
                        let parts: Vec<String> =
                            cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                        format!("  {}", parts.join("  ")).trim_end().to_string()
                    };
                    let _ = writeln!(out, "{}", fmt_row(headers));
                    for row in rows {
                        let _ = writeln!(out, "{}", fmt_row(row));
                    }
                }
            }
        }
        out
    }

    fn kv(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            match item {
                Item::Field { key: Some(key), value, .. } => {
                    let _ = writeln!(out, "{key}={value}");
                }
                Item::Table { key, headers, rows } => {
                    for (i, row) in rows.iter().enumerate() {
                        for (h, cell) in headers.iter().zip(row) {
                            let _ = writeln!(out, "{key}.{i}.{h}={cell}");
                        }
                    }
                }
                Item::Field { key: None, .. } | Item::Heading(_) => {}
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_formats() {
        let mut r = Report::default();
        r.heading("demo")
            .field("a", "alpha", 1)
            .field("bb", "beta value", "x")
            .table("t", &["k", "p"], vec![vec!["0".into(), "0.5".into()], vec!["10".into(), "0.25".into()]])
            .note("gamma", 3);
        assert_eq!(
            r.render(Format::Text),
            "== demo ==\nalpha       1\nbeta value  x\n   k     p\n   0   0.5\n  10  0.25\ngamma       3\n"
        );
        assert_eq!(r.render(Format::Kv), "a=1\nbb=x\nt.0.k=0\nt.0.p=0.5\nt.1.k=10\nt.1.p=0.25\n");
    }
}

//! Line-delimited JSON universe catalogs: one [`ContextElement`] per line.
//!
//! Blank lines and lines starting with `#` are skipped.

use std::path::Path;

use thiserror::Error;

use crate::element::ContextElement;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn parse_catalog(text: &str) -> Result<Vec<ContextElement>, CatalogError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let element: ContextElement =
            serde_json::from_str(line).map_err(|e| CatalogError::Parse { line: idx + 1, message: e.to_string() })?;
        out.push(element);
    }
    Ok(out)
}

pub fn load_catalog(path: &Path) -> Result<Vec<ContextElement>, CatalogError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
    parse_catalog(&text)
}

pub fn write_catalog(elements: &[ContextElement]) -> String {
    let mut out = String::new();
    for e in elements {
        out.push_str(&serde_json::to_string(e).expect("elements serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_records_and_reports_line_numbers() {
        let text = r#"
# universe
{"id":"a","tokens":15,"namespace":"task","atoms":[{"key":"x","critical":true}]}
{"id":"b","tokens":"oops","namespace":"task"}
"#;
        match parse_catalog(text) {
            Err(CatalogError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let ok = parse_catalog(&text.lines().take(3).collect::<Vec<_>>().join("\n")).unwrap();
        assert_eq!(ok.len(), 1);
        assert_eq!(parse_catalog(&write_catalog(&ok)).unwrap(), ok);
    }
}

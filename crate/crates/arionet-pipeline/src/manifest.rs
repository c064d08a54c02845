//! Manifest parsing: UTF-8 CSV with header `path,species` and standard
//! quoting (double quotes, doubled to escape).

use crate::PipelineError;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub species: String,
}

/// Ordered recording list for one extraction run.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

fn split_csv_line(line: &str, line_no: usize) -> Result<Vec<String>, PipelineError> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        if quoted {
            match c {
                '"' if chars.peek() == Some(&'"') => {
                    chars.next();
                    field.push('"');
                }
                '"' => quoted = false,
                _ => field.push(c),
            }
        } else {
            match c {
                '"' if field.is_empty() => quoted = true,
                ',' => fields.push(std::mem::take(&mut field)),
                _ => field.push(c),
            }
        }
    }
    if quoted {
        return Err(PipelineError::BadManifest {
            line: line_no,
            reason: "unterminated quoted field".into(),
        });
    }
    fields.push(field);
    Ok(fields)
}

/// Parse manifest text. The header row must be exactly `path,species`;
/// every following non-empty row needs a path and a non-empty species.
pub fn parse_manifest(text: &str) -> Result<Manifest, PipelineError> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, l)| l.trim_end_matches('\r'))
        .unwrap_or("");
    if split_csv_line(header, 1)? != ["path", "species"] {
        return Err(PipelineError::BadManifest {
            line: 1,
            reason: format!("expected header \"path,species\", got \"{header}\""),
        });
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields = split_csv_line(line, idx + 1)?;
        if fields.len() != 2 {
            return Err(PipelineError::BadManifest {
                line: idx + 1,
                reason: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        if fields[1].is_empty() {
            return Err(PipelineError::BadManifest {
                line: idx + 1,
                reason: "species name is empty".into(),
            });
        }
        rows.push(ManifestRow {
            path: PathBuf::from(&fields[0]),
            species: fields[1].clone(),
        });
    }
    Ok(Manifest { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_rows() {
        let m = parse_manifest("path,species\na.wav,lark\nb.wav,wren\n").unwrap();
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.rows[0].species, "lark");
        assert_eq!(m.rows[1].path, PathBuf::from("b.wav"));
    }

    #[test]
    fn parses_quoted_fields() {
        let m = parse_manifest("path,species\n\"dir with, comma/a.wav\",\"song \"\"x\"\"\"\n")
            .unwrap();
        assert_eq!(m.rows[0].path, PathBuf::from("dir with, comma/a.wav"));
        assert_eq!(m.rows[0].species, "song \"x\"");
    }

    #[test]
    fn rejects_bad_header_and_rows() {
        assert!(parse_manifest("file,label\na.wav,x\n").is_err());
        assert!(parse_manifest("path,species\nonly_one_field\n").is_err());
        assert!(parse_manifest("path,species\na.wav,\n").is_err());
        assert!(parse_manifest("path,species\n\"broken,x\n").is_err());
    }

    #[test]
    fn skips_blank_lines_and_crlf() {
        let m = parse_manifest("path,species\r\na.wav,lark\r\n\r\nb.wav,wren\r\n").unwrap();
        assert_eq!(m.rows.len(), 2);
    }
}

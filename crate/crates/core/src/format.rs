//! Shared error type and helpers for the CSV and text file formats.

use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing or malformed header, expected `{expected}`")]
    Header { expected: String },
    #[error("invalid content: {0}")]
    Invalid(String),
}

impl FormatError {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse { line, message: message.into() }
    }
}

pub(crate) fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64, FormatError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| FormatError::parse(line, format!("cannot parse {what} from `{}`", field.trim())))?;
    if !v.is_finite() {
        return Err(FormatError::parse(line, format!("{what} is not finite")));
    }
    Ok(v)
}

/// Value of a `# key=value` comment, searched across the leading comment lines.
pub(crate) fn comment_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .map(str::trim)
        .take_while(|l| l.starts_with('#') || l.is_empty())
        .filter_map(|l| l.strip_prefix('#'))
        .flat_map(|l| l.split_whitespace())
        .find_map(|kv| kv.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
}

pub(crate) fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

pub(crate) fn check_header(reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), FormatError> {
    let headers = reader.headers()?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(FormatError::Header { expected: expected.join(",") });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comment_lookup() {
        let text = "# unit=counts\n# model_height=1.80\nt_ms,ax\n# unit=ms2\n";
        assert_eq!(comment_value(text, "unit"), Some("counts"));
        assert_eq!(comment_value(text, "model_height"), Some("1.80"));
        assert_eq!(comment_value(text, "missing"), None);
    }
}

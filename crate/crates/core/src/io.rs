//! Plain-text point files: one `x y` pair per line, whitespace separated.
//! Blank lines and lines starting with `#` are ignored.

use thiserror::Error;

use crate::geom::Point;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_points(text: &str) -> Result<Vec<Point>, ParseError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ParseError {
            line: k + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(format!("expected 2 fields, found {}", fields.len())));
        }
        let mut xy = [0.0; 2];
        for (slot, f) in xy.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .map_err(|e| err(format!("invalid number {f:?}: {e}")))?;
            if !slot.is_finite() {
                return Err(err(format!("non-finite coordinate {f:?}")));
            }
        }
        out.push(Point::new(xy[0], xy[1]));
    }
    Ok(out)
}

/// Inverse of [`parse_points`].
pub fn format_points(points: &[Point]) -> String {
    points.iter().map(|p| format!("{} {}\n", p.x, p.y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# header\n1 2\n\n  -3.5\t4e-1  \n# tail\n";
        assert_eq!(
            parse_points(text).unwrap(),
            vec![Point::new(1.0, 2.0), Point::new(-3.5, 0.4)]
        );
    }

    #[test]
    fn reports_line_numbers() {
        assert_eq!(parse_points("1 2\n3\n").unwrap_err().line, 2);
        assert_eq!(parse_points("1 x\n").unwrap_err().line, 1);
        assert_eq!(parse_points("1 2 3\n").unwrap_err().line, 1);
        assert_eq!(parse_points("inf 0\n").unwrap_err().line, 1);
    }

    #[test]
    fn round_trips() {
        let pts = vec![Point::new(0.1, -2.0), Point::new(1e-300, 3.25e10)];
        assert_eq!(parse_points(&format_points(&pts)).unwrap(), pts);
    }
}

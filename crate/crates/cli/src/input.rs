use std::io::Read;
use std::path::Path;

use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Graph(Vec<u32>),
    Bipartite { rows: Vec<u32>, cols: Vec<u32> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarginsJson {
    rows: Vec<u32>,
    cols: Vec<u32>,
}

/// Text of an input argument: `-` is standard input, an existing path is
/// read as a file, anything else is taken literally.
pub fn read_source(arg: &str) -> Result<String, String> {
    if arg == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| format!("reading standard input: {e}"))?;
        return Ok(text);
    }
    let path = Path::new(arg);
    if path.is_file() {
        return std::fs::read_to_string(path).map_err(|e| format!("reading {arg}: {e}"));
    }
    Ok(arg.to_string())
}

/// A JSON object is bipartite margins; otherwise whitespace-separated
/// non-negative integers form a degree sequence.
pub fn parse(text: &str) -> Result<Input, String> {
    if text.trim_start().starts_with('{') {
        let m: MarginsJson = serde_json::from_str(text)
            .map_err(|e| format!("line {}, column {}: {e}", e.line(), e.column()))?;
        return Ok(Input::Bipartite {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let mut degrees = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let mut column = 1;
        for piece in line.split_inclusive(char::is_whitespace) {
            let token = piece.trim_end();
            if !token.is_empty() {
                let value = token.parse::<u32>().map_err(|_| {
                    format!(
                        "line {}, column {}: expected a non-negative integer, found '{token}'",
                        line_no + 1,
                        column
                    )
                })?;
                degrees.push(value);
            }
            column += piece.chars().count();
        }
    }
    if degrees.is_empty() {
        return Err("input contains no degrees".into());
    }
    Ok(Input::Graph(degrees))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_text_sequences() {
        assert_eq!(parse("2 2 2\n 2  2\n").unwrap(), Input::Graph(vec![2; 5]));
    }

    #[test]
    fn bipartite_json() {
        assert_eq!(
            parse(r#"{"rows":[1,1],"cols":[2]}"#).unwrap(),
            Input::Bipartite {
                rows: vec![1, 1],
                cols: vec![2]
            }
        );
    }

    #[test]
    fn errors_name_line_and_column() {
        let e = parse("1 2\n3 x4").unwrap_err();
        assert!(e.starts_with("line 2, column 3"), "{e}");
        let e = parse("{\"rows\": [1,\n -1]}").unwrap_err();
        assert!(e.starts_with("line 2"), "{e}");
        assert!(parse("  \n").is_err());
    }
}

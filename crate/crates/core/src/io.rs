//! Contrast-level input: CSV with header `treat1,treat2,effect,variance[,studlab]`
//! or a JSON array of objects with the same field names.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::network::{build_network, DirectComparison, EvidenceNetwork};

const REQUIRED: [&str; 4] = ["treat1", "treat2", "effect", "variance"];

fn parse_error(line: u64, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// One row per contrast; rows for the same pair are pooled later by
/// [`build_network`].
pub fn parse_contrast_csv(bytes: &[u8]) -> Result<Vec<DirectComparison>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| parse_error(1, 1, format!("input is not UTF-8: {e}")))?;
    if text.trim().is_empty() {
        return Err(parse_error(1, 1, "empty input"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| parse_error(1, 1, e.to_string()))?
        .clone();
    let mut columns = [0usize; 4];
    for (slot, name) in columns.iter_mut().zip(REQUIRED) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                parse_error(
                    1,
                    headers.len() + 1,
                    format!("missing required column `{name}`"),
                )
            })?;
    }

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(line, 1, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |c: usize| -> Result<&str> {
            match record.get(c) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(parse_error(
                    line,
                    c + 1,
                    format!("missing value for `{}`", &headers[c]),
                )),
            }
        };
        let number = |c: usize| -> Result<f64> {
            let raw = field(c)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(line, c + 1, format!("`{raw}` is not a finite number")))
        };
        let t1 = field(columns[0])?;
        let t2 = field(columns[1])?;
        let effect = number(columns[2])?;
        let variance = number(columns[3])?;
        if variance <= 0.0 {
            return Err(parse_error(
                line,
                columns[3] + 1,
                format!("variance must be positive, got {variance}"),
            ));
        }
        let c = DirectComparison::new(t1, t2, effect, variance)
            .map_err(|e| parse_error(line, columns[0] + 1, e.to_string()))?;
        out.push(c);
    }
    if out.is_empty() {
        return Err(parse_error(2, 1, "no data rows"));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonRow {
    treat1: String,
    treat2: String,
    effect: f64,
    variance: f64,
    #[allow(dead_code)]
    #[serde(default)]
    studlab: Option<String>,
}

/// JSON array of `{treat1, treat2, effect, variance[, studlab]}` objects.
/// Validation failures report the 1-based record number as the line.
pub fn parse_contrast_json(bytes: &[u8]) -> Result<Vec<DirectComparison>> {
    let rows: Vec<JsonRow> = serde_json::from_slice(bytes)
        .map_err(|e| parse_error(e.line() as u64, e.column(), e.to_string()))?;
    if rows.is_empty() {
        return Err(parse_error(1, 1, "no records"));
    }
    rows.into_iter()
        .enumerate()
        .map(|(k, r)| {
            if !(r.variance > 0.0) {
                return Err(parse_error(
                    k as u64 + 1,
                    4,
                    format!(
                        "record {}: variance must be positive, got {}",
                        k + 1,
                        r.variance
                    ),
                ));
            }
            DirectComparison::new(&r.treat1, &r.treat2, r.effect, r.variance)
                .map_err(|e| parse_error(k as u64 + 1, 1, format!("record {}: {e}", k + 1)))
        })
        .collect()
}

/// Parse by content: a leading `[` means JSON, anything else CSV.
pub fn parse_contrasts(bytes: &[u8]) -> Result<Vec<DirectComparison>> {
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'[') {
        parse_contrast_json(bytes)
    } else {
        parse_contrast_csv(bytes)
    }
}

pub fn load_network(path: &Path) -> Result<EvidenceNetwork> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    build_network(&parse_contrasts(&bytes)?)
}

/// Pooled network back to CSV. Numbers use the shortest representation that
/// parses back to the same `f64`.
pub fn write_contrast_csv(network: &EvidenceNetwork) -> String {
    let mut out = String::from("treat1,treat2,effect,variance\n");
    for e in network.edges() {
        out.push_str(&format!("{},{},{},{}\n", e.t1, e.t2, e.effect, e.variance));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "treat1,treat2,effect,variance\n\
        T_1,T_2,0.5,0.09\n\
        T_1,T_3,2,0.09\n\
        T_1,T_4,1.5,0.09\n\
        T_2,T_3,0.5,0.09\n\
        T_4,T_3,1.5,0.09\n";

    #[test]
    fn toy_csv() {
        let rows = parse_contrast_csv(TOY.as_bytes()).unwrap();
        assert_eq!(rows.len(), 5);
        let net = build_network(&rows).unwrap();
        assert_eq!((net.n_nodes(), net.n_edges()), (4, 5));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(parse_contrast_csv(b""), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_contrast_csv(b"treat1,treat2,effect,variance\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn duplicate_rows_pool() {
        let rows = parse_contrast_csv(
            b"treat1,treat2,effect,variance,studlab\nA,B,1.0,0.1,s1\nA,B,1.0,0.1,s2\n",
        )
        .unwrap();
        let net = build_network(&rows).unwrap();
        assert_eq!(net.n_edges(), 1);
        assert_eq!(net.edges()[0].effect, 1.0);
        assert!((net.edges()[0].variance - 0.05).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_location() {
        let err = parse_contrast_csv(b"treat1,treat2,effect,variance\nA,B,x,0.1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                column: 3,
                message: "`x` is not a finite number".into()
            }
        );
        let err =
            parse_contrast_csv(b"treat1,treat2,effect,variance\nA,B,1,0.1\nA,C,1,0\n").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 3,
                    column: 4,
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_contrast_csv(b"treat1,treat2,effect\nA,B,1\n").unwrap_err();
        assert!(
            matches!(err, Error::Parse { line: 1, ref message, .. } if message.contains("variance"))
        );
        let err = parse_contrast_csv(b"treat1,treat2,effect,variance\nA,B,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn columns_in_any_order() {
        let rows = parse_contrast_csv(b"variance,effect,treat2,treat1\n0.2,0.3,B,A\n").unwrap();
        assert_eq!(rows[0].t1.as_str(), "A");
        assert_eq!(rows[0].effect, 0.3);
    }

    #[test]
    fn json_equivalent() {
        let json = br#"[{"treat1":"A","treat2":"B","effect":1.0,"variance":0.1,"studlab":"s"},
                        {"treat1":"B","treat2":"C","effect":-0.5,"variance":0.2}]"#;
        let rows = parse_contrasts(json).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(matches!(
            parse_contrast_json(br#"[{"treat1":"A","treat2":"B","effect":1.0,"variance":-1}]"#),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_contrast_json(b"[{"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let net = build_network(&parse_contrast_csv(TOY.as_bytes()).unwrap()).unwrap();
        let text = write_contrast_csv(&net);
        let again = build_network(&parse_contrast_csv(text.as_bytes()).unwrap()).unwrap();
        assert_eq!(net.effects(), again.effects());
        assert_eq!(net.variance_matrix(), again.variance_matrix());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_bit_for_bit(
                effects in prop::collection::vec(-1e3f64..1e3, 4),
                variances in prop::collection::vec(1e-6f64..1e3, 4),
            ) {
                let labels = [("A", "B"), ("B", "C"), ("C", "D"), ("A", "D")];
                let rows: Vec<_> = labels
                    .iter()
                    .zip(effects.iter().zip(&variances))
                    .map(|((a, b), (&e, &v))| DirectComparison::new(a, b, e, v).unwrap())
                    .collect();
                let net = build_network(&rows).unwrap();
                let again = build_network(
                    &parse_contrast_csv(write_contrast_csv(&net).as_bytes()).unwrap(),
                )
                .unwrap();
                prop_assert_eq!(net.effects(), again.effects());
                prop_assert_eq!(net.variances(), again.variances());
            }
        }
    }
}

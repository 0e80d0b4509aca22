//! Prediction files (`id<TAB>label`) and feature dumps.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::RelationLabel;
use crate::error::{Error, Result};

pub fn write_predictions<W: Write>(w: &mut W, rows: &[(u64, RelationLabel)]) -> Result<()> {
    for (id, label) in rows {
        writeln!(w, "{id}\t{label}")?;
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<(u64, RelationLabel)>> {
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::Decode { line: n + 1 },
            _ => Error::Io(e),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::format("prediction file", format!("line {}: `{line}`", n + 1));
        let (id, label) = line.split_once(['\t', ' ']).ok_or_else(bad)?;
        let id = id.trim().parse().map_err(|_| bad())?;
        rows.push((id, label.trim().parse()?));
    }
    Ok(rows)
}

/// Pairs gold and predicted labels by id, in gold order.
pub fn align_by_id(
    gold: &[(u64, RelationLabel)],
    pred: &[(u64, RelationLabel)],
) -> Result<(Vec<RelationLabel>, Vec<RelationLabel>)> {
    let mut by_id = HashMap::with_capacity(pred.len());
    for &(id, label) in pred {
        if by_id.insert(id, label).is_some() {
            return Err(Error::Instance {
                id,
                message: "predicted more than once".into(),
            });
        }
    }
    if by_id.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: by_id.len(),
        });
    }
    let mut g = Vec::with_capacity(gold.len());
    let mut p = Vec::with_capacity(gold.len());
    for &(id, label) in gold {
        let predicted = by_id.get(&id).ok_or_else(|| Error::Instance {
            id,
            message: "no prediction".into(),
        })?;
        g.push(label);
        p.push(*predicted);
    }
    Ok((g, p))
}

/// One `id<TAB>label<TAB>v1,v2,…` line.
pub fn write_feature_row<W: Write>(
    w: &mut W,
    id: u64,
    label: RelationLabel,
    values: &[f64],
) -> Result<()> {
    write!(w, "{id}\t{label}\t")?;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            w.write_all(b",")?;
        }
        write!(w, "{v}")?;
    }
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Direction, Family};

    #[test]
    fn prediction_round_trip_and_alignment() {
        let rows = vec![
            (
                8001,
                RelationLabel::Relation(Family::MessageTopic, Direction::Backward),
            ),
            (8002, RelationLabel::Other),
        ];
        let mut buf = Vec::new();
        write_predictions(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "8001\tMessage-Topic(e2,e1)\n8002\tOther\n"
        );
        let back = read_predictions(&buf[..]).unwrap();
        assert_eq!(back, rows);
        let reversed: Vec<_> = rows.iter().rev().copied().collect();
        let (g, p) = align_by_id(&rows, &reversed).unwrap();
        assert_eq!(g, p);
        assert!(align_by_id(&rows, &rows[..1]).is_err());
    }

    #[test]
    fn feature_row_format() {
        let mut buf = Vec::new();
        write_feature_row(&mut buf, 3, RelationLabel::Other, &[0.5, -1.0]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "3\tOther\t0.5,-1\n");
    }
}

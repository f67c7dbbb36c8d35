//! Query-grouped ranking datasets and SVMLight-with-qid I/O.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One document: dense feature vector, relevance grade, product identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRow {
    pub product_id: String,
    pub features: Vec<f64>,
    pub grade: u8,
}

/// All documents for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub query_id: String,
    pub rows: Vec<DataRow>,
}

/// Query-grouped feature vectors with graded relevance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingDataset {
    pub groups: Vec<QueryGroup>,
    /// Column names; every dense vector has this length. Kept sorted so
    /// SVMLight indices are stable.
    pub feature_names: Vec<String>,
}

impl RankingDataset {
    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Dataset("dataset has no groups".into()));
        }
        for group in &self.groups {
            if group.rows.len() < 2 {
                return Err(Error::Dataset(format!(
                    "group {} has fewer than 2 documents",
                    group.query_id
                )));
            }
            for row in &group.rows {
                if row.grade > 3 {
                    return Err(Error::Dataset(format!(
                        "grade {} out of range in group {}",
                        row.grade, group.query_id
                    )));
                }
                if row.features.len() != self.feature_names.len() {
                    return Err(Error::Dataset(format!(
                        "vector length {} != {} feature names in group {}",
                        row.features.len(),
                        self.feature_names.len(),
                        group.query_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_rows(&self) -> usize {
        self.groups.iter().map(|g| g.rows.len()).sum()
    }
}

/// Write `<grade> qid:<n> 1:<v> ... # q=<query_id> p=<product_id>` lines.
/// Feature indices follow sorted feature-name order; the mapping goes to the
/// `sidecar` as CSV `index,feature_name`.
pub fn write_svmlight(
    dataset: &RankingDataset,
    mut out: impl Write,
    mut sidecar: impl Write,
) -> Result<()> {
    let mut order: Vec<usize> = (0..dataset.feature_names.len()).collect();
    order.sort_by(|&a, &b| dataset.feature_names[a].cmp(&dataset.feature_names[b]));

    writeln!(sidecar, "index,feature_name")?;
    for (i, &col) in order.iter().enumerate() {
        writeln!(sidecar, "{},{}", i + 1, dataset.feature_names[col])?;
    }

    for (qid0, group) in dataset.groups.iter().enumerate() {
        for row in &group.rows {
            write!(out, "{} qid:{}", row.grade, qid0 + 1)?;
            for (i, &col) in order.iter().enumerate() {
                write!(out, " {}:{}", i + 1, row.features[col])?;
            }
            writeln!(out, " # q={} p={}", group.query_id, row.product_id)?;
        }
    }
    Ok(())
}

/// Read a dataset written by [`write_svmlight`].
pub fn read_svmlight(data: impl BufRead, sidecar: impl BufRead) -> Result<RankingDataset> {
    let mut feature_names = Vec::new();
    for (idx, line) in sidecar.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || idx == 0 {
            continue;
        }
        let (index, name) = line.split_once(',').ok_or_else(|| Error::ParseLine {
            line: idx + 1,
            reason: "expected `index,feature_name`".into(),
        })?;
        let index: usize = index.parse().map_err(|_| Error::ParseLine {
            line: idx + 1,
            reason: format!("bad index `{index}`"),
        })?;
        if index != feature_names.len() + 1 {
            return Err(Error::ParseLine {
                line: idx + 1,
                reason: format!("indices must be contiguous from 1, got {index}"),
            });
        }
        feature_names.push(name.to_string());
    }

    let mut groups: Vec<QueryGroup> = Vec::new();
    let mut last_qid: Option<u64> = None;
    for (idx, line) in data.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::ParseLine {
            line: line_no,
            reason: reason.to_string(),
        };
        let (body, comment) = line.split_once('#').ok_or_else(|| bad("missing comment"))?;
        let mut query_id = None;
        let mut product_id = None;
        for token in comment.split_whitespace() {
            if let Some(q) = token.strip_prefix("q=") {
                query_id = Some(q.to_string());
            } else if let Some(p) = token.strip_prefix("p=") {
                product_id = Some(p.to_string());
            }
        }
        let query_id = query_id.ok_or_else(|| bad("missing q= in comment"))?;
        let product_id = product_id.ok_or_else(|| bad("missing p= in comment"))?;

        let mut tokens = body.split_whitespace();
        let grade: u8 = tokens
            .next()
            .ok_or_else(|| bad("empty line"))?
            .parse()
            .map_err(|_| bad("bad grade"))?;
        let qid: u64 = tokens
            .next()
            .and_then(|t| t.strip_prefix("qid:"))
            .ok_or_else(|| bad("missing qid"))?
            .parse()
            .map_err(|_| bad("bad qid"))?;
        let mut features = vec![0.0; feature_names.len()];
        for token in tokens {
            let (i, v) = token.split_once(':').ok_or_else(|| bad("bad feature pair"))?;
            let i: usize = i.parse().map_err(|_| bad("bad feature index"))?;
            if i == 0 || i > feature_names.len() {
                return Err(bad(&format!("feature index {i} out of range")));
            }
            features[i - 1] = v.parse().map_err(|_| bad("bad feature value"))?;
        }

        if last_qid != Some(qid) {
            groups.push(QueryGroup {
                query_id,
                rows: Vec::new(),
            });
            last_qid = Some(qid);
        }
        groups.last_mut().unwrap().rows.push(DataRow {
            product_id,
            features,
            grade,
        });
    }

    Ok(RankingDataset {
        groups,
        feature_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn sample() -> RankingDataset {
        RankingDataset {
            feature_names: vec!["web_30_cr".into(), "app_30_cr".into()],
            groups: vec![
                QueryGroup {
                    query_id: "milk".into(),
                    rows: vec![
                        DataRow {
                            product_id: "p1".into(),
                            features: vec![0.25, 0.125],
                            grade: 3,
                        },
                        DataRow {
                            product_id: "p2".into(),
                            features: vec![0.0625, 0.5],
                            grade: 0,
                        },
                    ],
                },
                QueryGroup {
                    query_id: "socks".into(),
                    rows: vec![
                        DataRow {
                            product_id: "p3".into(),
                            features: vec![0.1, 0.2],
                            grade: 1,
                        },
                        DataRow {
                            product_id: "p4".into(),
                            features: vec![0.3, 0.4],
                            grade: 2,
                        },
                    ],
                },
            ],
        }
    }

    #[test]
    fn svmlight_roundtrip_and_sorted_indices() {
        let ds = sample();
        let mut data = Vec::new();
        let mut sidecar = Vec::new();
        write_svmlight(&ds, &mut data, &mut sidecar).unwrap();

        let sidecar_text = String::from_utf8(sidecar.clone()).unwrap();
        // app_30_cr sorts before web_30_cr.
        assert_eq!(
            sidecar_text,
            "index,feature_name\n1,app_30_cr\n2,web_30_cr\n"
        );
        let first_line = String::from_utf8(data.clone())
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert_eq!(first_line, "3 qid:1 1:0.125 2:0.25 # q=milk p=p1");

        let back = read_svmlight(Cursor::new(data), Cursor::new(sidecar)).unwrap();
        back.validate().unwrap();
        assert_eq!(back.feature_names, vec!["app_30_cr", "web_30_cr"]);
        assert_eq!(back.groups.len(), 2);
        // Columns come back in sidecar order.
        assert_eq!(back.groups[0].rows[0].features, vec![0.125, 0.25]);
        assert_eq!(back.groups[0].rows[0].grade, 3);
        assert_eq!(back.groups[1].query_id, "socks");
    }

    #[test]
    fn validate_rejects_small_groups_and_bad_grades() {
        let mut ds = sample();
        ds.groups[0].rows.truncate(1);
        assert!(ds.validate().is_err());

        let mut ds = sample();
        ds.groups[1].rows[0].grade = 4;
        assert!(ds.validate().is_err());
    }
}

//! Labeling, date-based train/test split, AdaBoost over decision stumps,
//! and ROC AUC — including the single-column baseline run.

use std::path::Path;

use chrono::NaiveDate;

use crate::corpus::{csv_error, find_column};
use crate::error::{Error, Result};
use crate::features::FeatureTable;

/// Column names the labels CSV must carry (LACE is optional).
pub const LABELS_ID_COLUMN: &str = "PAT_ENC_CSN_ID";
pub const LABELS_LAG_COLUMN: &str = "READMITLAG";
pub const LABELS_DATE_COLUMN: &str = "DISCHARGEDATE";
pub const LABELS_LACE_COLUMN: &str = "LACE";

/// One row of the labels file.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub encounter_id: String,
    pub readmit_lag: Option<i64>,
    pub discharge_date: NaiveDate,
    pub lace: Option<f64>,
}

/// 1 when the readmission lag falls in 1..=30 days; missing lag is 0.
pub fn label_readmission(lag_days: Option<i64>) -> u8 {
    match lag_days {
        Some(lag) if (1..=30).contains(&lag) => 1,
        _ => 0,
    }
}

/// Reads the labels CSV: `PAT_ENC_CSN_ID,READMITLAG,DISCHARGEDATE,LACE`.
/// READMITLAG may be empty; dates are ISO `YYYY-MM-DD`; the LACE column is
/// optional.
pub fn load_labels(path: &Path) -> Result<Vec<LabelRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_labels_from_reader(std::io::BufReader::new(file), path)
}

pub fn load_labels_from_reader(rdr: impl std::io::Read, path: &Path) -> Result<Vec<LabelRecord>> {
    let mut reader = csv::Reader::from_reader(rdr);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let id_col = find_column(&headers, LABELS_ID_COLUMN, path)?;
    let lag_col = find_column(&headers, LABELS_LAG_COLUMN, path)?;
    let date_col = find_column(&headers, LABELS_DATE_COLUMN, path)?;
    let lace_col = headers.iter().position(|h| h == LABELS_LACE_COLUMN);

    let mut records = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record =
            record.map_err(|e| Error::Schema(format!("{}: line {line}: {e}", path.display())))?;
        let encounter_id = record.get(id_col).unwrap_or("").to_string();
        if encounter_id.is_empty() {
            return Err(Error::Schema(format!(
                "{}: line {line}: empty {LABELS_ID_COLUMN}",
                path.display()
            )));
        }
        let lag_raw = record.get(lag_col).unwrap_or("").trim();
        let readmit_lag = if lag_raw.is_empty() {
            None
        } else {
            Some(lag_raw.parse::<i64>().map_err(|_| {
                Error::Schema(format!(
                    "{}: line {line}: bad {LABELS_LAG_COLUMN} {lag_raw:?}",
                    path.display()
                ))
            })?)
        };
        let date_raw = record.get(date_col).unwrap_or("").trim();
        let discharge_date = NaiveDate::parse_from_str(date_raw, "%Y-%m-%d").map_err(|_| {
            Error::Schema(format!(
                "{}: line {line}: bad {LABELS_DATE_COLUMN} {date_raw:?}, expected YYYY-MM-DD",
                path.display()
            ))
        })?;
        let lace = match lace_col {
            Some(c) => {
                let raw = record.get(c).unwrap_or("").trim();
                if raw.is_empty() {
                    None
                } else {
                    Some(raw.parse::<f64>().map_err(|_| {
                        Error::Schema(format!(
                            "{}: line {line}: bad {LABELS_LACE_COLUMN} {raw:?}",
                            path.display()
                        ))
                    })?)
                }
            }
            None => None,
        };
        records.push(LabelRecord {
            encounter_id,
            readmit_lag,
            discharge_date,
            lace,
        });
    }
    Ok(records)
}

/// A joined feature/label row ready for boosting.
#[derive(Debug, Clone)]
pub struct LabeledRow {
    pub encounter_id: String,
    pub features: Vec<f64>,
    pub label: u8,
    pub discharge_date: NaiveDate,
    pub baseline_score: Option<f64>,
}

/// Rows sharing one feature schema.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub schema: Vec<String>,
    pub rows: Vec<LabeledRow>,
}

/// Default split date: train strictly before the cutoff, test on or after.
pub const DEFAULT_CUTOFF: &str = "2014-07-01";

pub fn default_cutoff() -> NaiveDate {
    NaiveDate::parse_from_str(DEFAULT_CUTOFF, "%Y-%m-%d").unwrap()
}

/// Splits rows by discharge date. Either side empty is an error.
pub fn split_by_date(
    rows: Vec<LabeledRow>,
    cutoff: NaiveDate,
) -> Result<(Vec<LabeledRow>, Vec<LabeledRow>)> {
    let (train, test): (Vec<_>, Vec<_>) =
        rows.into_iter().partition(|r| r.discharge_date < cutoff);
    if train.is_empty() {
        return Err(Error::Eval(format!("no training rows before {cutoff}")));
    }
    if test.is_empty() {
        return Err(Error::Eval(format!("no test rows on or after {cutoff}")));
    }
    Ok((train, test))
}

/// One weighted decision stump: predicts `polarity` when the feature value
/// exceeds the threshold, `-polarity` otherwise.
#[derive(Debug, Clone)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub alpha: f64,
}

impl Stump {
    /// Prediction in {-1, +1}.
    pub fn predict(&self, features: &[f64]) -> i8 {
        let raw = if features[self.feature] > self.threshold {
            1i8
        } else {
            -1i8
        };
        raw * self.polarity
    }
}

/// An AdaBoost stump ensemble.
#[derive(Debug, Clone)]
pub struct BoostModel {
    pub stumps: Vec<Stump>,
    pub rounds: usize,
    pub schema: Vec<String>,
    /// Weighted error of the stump chosen in each completed round.
    pub round_errors: Vec<f64>,
}

impl BoostModel {
    pub fn feature_name(&self, stump: &Stump) -> &str {
        &self.schema[stump.feature]
    }
}

const EPS_CLAMP: f64 = 1e-10;

/// Candidate thresholds for one feature: -inf, midpoints of consecutive
/// distinct sorted values, +inf. The sweep in `best_stump` enumerates the
/// same set; this form exists for the exhaustive test oracle.
#[cfg(test)]
fn candidate_thresholds(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut out = vec![f64::NEG_INFINITY];
    for w in sorted.windows(2) {
        out.push(w[0] + (w[1] - w[0]) / 2.0);
    }
    out.push(f64::INFINITY);
    out
}

/// Finds the (feature, threshold, polarity) stump with minimal weighted
/// error. Ties resolve in feature-then-threshold order, polarity +1 first.
fn best_stump(
    rows: &[LabeledRow],
    weights: &[f64],
    n_features: usize,
    sorted_by_feature: &[Vec<usize>],
) -> (Stump, f64) {
    let mut best: Option<(Stump, f64)> = None;
    for feature in 0..n_features {
        let order = &sorted_by_feature[feature];
        // error of the polarity=+1 stump at threshold -inf: everything is
        // predicted +1, so the wrong rows are the negatives.
        let mut err_plus: f64 = rows
            .iter()
            .zip(weights)
            .filter(|(r, _)| r.label == 0)
            .map(|(_, w)| w)
            .sum();
        let consider = |threshold: f64, err_plus: f64, best: &mut Option<(Stump, f64)>| {
            for (polarity, err) in [(1i8, err_plus), (-1i8, 1.0 - err_plus)] {
                if best.as_ref().is_none_or(|&(_, e)| err < e) {
                    *best = Some((
                        Stump {
                            feature,
                            threshold,
                            polarity,
                            alpha: 0.0,
                        },
                        err,
                    ));
                }
            }
        };
        consider(f64::NEG_INFINITY, err_plus, &mut best);
        let mut i = 0;
        while i < order.len() {
            let value = rows[order[i]].features[feature];
            // move every row carrying this value to the "below threshold" side
            while i < order.len() && rows[order[i]].features[feature] == value {
                let idx = order[i];
                if rows[idx].label == 1 {
                    err_plus += weights[idx];
                } else {
                    err_plus -= weights[idx];
                }
                i += 1;
            }
            let threshold = if i < order.len() {
                let next = rows[order[i]].features[feature];
                value + (next - value) / 2.0
            } else {
                f64::INFINITY
            };
            consider(threshold, err_plus, &mut best);
        }
    }
    best.expect("at least one candidate stump")
}

/// Discrete AdaBoost: uniform initial weights, per round the globally best
/// stump over midpoint thresholds, vote weight `α = ½·ln((1−ε)/ε)` with ε
/// clamped away from 0 and 1, multiplicative weight update, renormalize.
/// Stops early when no stump beats chance (ε ≥ 0.5) or one is perfect
/// (ε ≤ 1e-10).
pub fn train_adaboost(data: &LabeledDataset, rounds: usize) -> Result<BoostModel> {
    if rounds == 0 {
        return Err(Error::Param("rounds must be >= 1".into()));
    }
    if data.schema.is_empty() {
        return Err(Error::Schema("empty feature schema".into()));
    }
    let n = data.rows.len();
    if n == 0 {
        return Err(Error::Train("no training rows".into()));
    }
    for row in &data.rows {
        if row.features.len() != data.schema.len() {
            return Err(Error::Schema(format!(
                "row {:?} has {} features, schema has {}",
                row.encounter_id,
                row.features.len(),
                data.schema.len()
            )));
        }
    }
    let positives = data.rows.iter().filter(|r| r.label == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::Train(
            "training rows contain a single class".into(),
        ));
    }

    let n_features = data.schema.len();
    let sorted_by_feature: Vec<Vec<usize>> = (0..n_features)
        .map(|f| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| data.rows[a].features[f].total_cmp(&data.rows[b].features[f]));
            order
        })
        .collect();

    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    let mut round_errors = Vec::new();

    for _round in 0..rounds {
        let (mut stump, eps) = best_stump(&data.rows, &weights, n_features, &sorted_by_feature);
        if eps >= 0.5 {
            break;
        }
        let eps_c = eps.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
        stump.alpha = 0.5 * ((1.0 - eps_c) / eps_c).ln();
        let alpha = stump.alpha;
        let mut total = 0.0;
        for (row, w) in data.rows.iter().zip(weights.iter_mut()) {
            let y = if row.label == 1 { 1.0 } else { -1.0 };
            let h = stump.predict(&row.features) as f64;
            *w *= (-alpha * y * h).exp();
            total += *w;
        }
        for w in &mut weights {
            *w /= total;
        }
        stumps.push(stump);
        round_errors.push(eps);
        if eps <= EPS_CLAMP {
            break;
        }
    }

    Ok(BoostModel {
        stumps,
        rounds,
        schema: data.schema.clone(),
        round_errors,
    })
}

/// Ensemble margin Σ α·h(x).
pub fn margin(model: &BoostModel, features: &[f64]) -> Result<f64> {
    if features.len() != model.schema.len() {
        return Err(Error::Schema(format!(
            "feature vector has {} entries, schema has {}",
            features.len(),
            model.schema.len()
        )));
    }
    if features.iter().any(|v| v.is_nan()) {
        return Err(Error::Schema("missing (NaN) feature at prediction".into()));
    }
    Ok(model
        .stumps
        .iter()
        .map(|s| s.alpha * s.predict(features) as f64)
        .sum())
}

/// Readmission-risk score in (0, 1): the logistic of twice the margin.
/// Strictly monotone in the margin, 0.5 for an empty ensemble.
pub fn predict_score(model: &BoostModel, features: &[f64]) -> Result<f64> {
    let m = margin(model, features)?;
    Ok(1.0 / (1.0 + (-2.0 * m).exp()))
}

/// AUC with positive/negative counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AucResult {
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Mann-Whitney AUC: the probability a random positive outscores a random
/// negative, ties counting one half. Computed by midranks, which matches
/// pair counting exactly.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<AucResult> {
    if scores.len() != labels.len() {
        return Err(Error::Param(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Eval("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Eval(
            "undefined AUC: labels contain a single class".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied scores share the average rank
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let p = positives as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(AucResult {
        auc: u / (p * negatives as f64),
        positives,
        negatives,
    })
}

/// Joins a feature table with label records on encounter id (inner join,
/// feature-table row order).
pub fn join_features_labels(
    table: &FeatureTable,
    labels: &[LabelRecord],
) -> Result<LabeledDataset> {
    let mut by_id: std::collections::HashMap<&str, &LabelRecord> = std::collections::HashMap::new();
    for rec in labels {
        by_id.insert(rec.encounter_id.as_str(), rec);
    }
    let mut rows = Vec::new();
    for (id, features) in table.iter() {
        if let Some(rec) = by_id.get(id.as_str()) {
            rows.push(LabeledRow {
                encounter_id: id.clone(),
                features: features.to_vec(),
                label: label_readmission(rec.readmit_lag),
                discharge_date: rec.discharge_date,
                baseline_score: rec.lace,
            });
        }
    }
    Ok(LabeledDataset {
        schema: table.columns().to_vec(),
        rows,
    })
}

/// Outcome of one feature-set evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub auc: AucResult,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Training rows discarded for carrying a missing feature.
    pub dropped_incomplete: usize,
}

/// Merges features with labels, splits by discharge date, trains the
/// ensemble, scores the test rows, and returns the AUC. Training rows with
/// any missing (NaN) feature are dropped; a missing feature at test time is
/// an error.
pub fn evaluate_feature_table(
    table: &FeatureTable,
    labels: &[LabelRecord],
    cutoff: NaiveDate,
    rounds: usize,
) -> Result<Evaluation> {
    let dataset = join_features_labels(table, labels)?;
    evaluate_dataset(dataset, cutoff, rounds)
}

/// The benchmark single-column run over the baseline score. Rows lacking
/// the baseline are dropped from training; one missing in test is an error.
pub fn evaluate_baseline(
    labels: &[LabelRecord],
    cutoff: NaiveDate,
    rounds: usize,
) -> Result<Evaluation> {
    let rows: Vec<LabeledRow> = labels
        .iter()
        .map(|rec| LabeledRow {
            encounter_id: rec.encounter_id.clone(),
            features: vec![rec.lace.unwrap_or(f64::NAN)],
            label: label_readmission(rec.readmit_lag),
            discharge_date: rec.discharge_date,
            baseline_score: rec.lace,
        })
        .collect();
    let dataset = LabeledDataset {
        schema: vec![LABELS_LACE_COLUMN.to_string()],
        rows,
    };
    evaluate_dataset(dataset, cutoff, rounds)
}

fn evaluate_dataset(
    dataset: LabeledDataset,
    cutoff: NaiveDate,
    rounds: usize,
) -> Result<Evaluation> {
    let schema = dataset.schema;
    let (train, test) = split_by_date(dataset.rows, cutoff)?;
    let before = train.len();
    let train: Vec<LabeledRow> = train
        .into_iter()
        .filter(|r| !r.features.iter().any(|v| v.is_nan()))
        .collect();
    let dropped_incomplete = before - train.len();
    if train.is_empty() {
        return Err(Error::Eval(
            "every training row carries a missing feature".into(),
        ));
    }
    let model = train_adaboost(
        &LabeledDataset {
            schema,
            rows: train.clone(),
        },
        rounds,
    )?;
    let mut scores = Vec::with_capacity(test.len());
    let mut labels = Vec::with_capacity(test.len());
    for row in &test {
        scores.push(predict_score(&model, &row.features)?);
        labels.push(row.label);
    }
    let auc = roc_auc(&scores, &labels)?;
    Ok(Evaluation {
        auc,
        train_rows: train.len(),
        test_rows: test.len(),
        dropped_incomplete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn row(id: &str, features: &[f64], label: u8, d: &str) -> LabeledRow {
        LabeledRow {
            encounter_id: id.to_string(),
            features: features.to_vec(),
            label,
            discharge_date: date(d),
            baseline_score: None,
        }
    }

    #[test]
    fn label_boundaries() {
        assert_eq!(label_readmission(None), 0);
        assert_eq!(label_readmission(Some(0)), 0);
        assert_eq!(label_readmission(Some(1)), 1);
        assert_eq!(label_readmission(Some(30)), 1);
        assert_eq!(label_readmission(Some(31)), 0);
        assert_eq!(label_readmission(Some(-5)), 0);
    }

    #[test]
    fn split_boundary_dates() {
        let rows = vec![
            row("a", &[0.0], 0, "2014-06-30"),
            row("b", &[0.0], 1, "2014-07-01"),
        ];
        let (train, test) = split_by_date(rows, default_cutoff()).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(train[0].encounter_id, "a");
        assert_eq!(test[0].encounter_id, "b");
    }

    #[test]
    fn split_rejects_empty_side() {
        let rows = vec![row("a", &[0.0], 0, "2013-01-01")];
        let err = split_by_date(rows, default_cutoff()).unwrap_err();
        assert_eq!(err.category(), "eval");
    }

    #[test]
    fn split_conserves_rows() {
        let rows: Vec<LabeledRow> = (0..10)
            .map(|i| {
                let d = if i % 3 == 0 { "2014-08-01" } else { "2014-01-01" };
                row(&i.to_string(), &[0.0], (i % 2) as u8, d)
            })
            .collect();
        let n = rows.len();
        let (train, test) = split_by_date(rows, default_cutoff()).unwrap();
        assert_eq!(train.len() + test.len(), n);
    }

    fn separable_1d() -> LabeledDataset {
        LabeledDataset {
            schema: vec!["x".into()],
            rows: vec![
                row("a", &[0.0], 0, "2014-01-01"),
                row("b", &[1.0], 0, "2014-01-01"),
                row("c", &[2.0], 1, "2014-01-01"),
                row("d", &[3.0], 1, "2014-01-01"),
            ],
        }
    }

    #[test]
    fn adaboost_separates_in_one_round() {
        let model = train_adaboost(&separable_1d(), 10).unwrap();
        assert_eq!(model.stumps.len(), 1);
        let s = &model.stumps[0];
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 1.5);
        for r in &separable_1d().rows {
            let pred = if predict_score(&model, &r.features).unwrap() > 0.5 {
                1
            } else {
                0
            };
            assert_eq!(pred, r.label);
        }
    }

    #[test]
    fn adaboost_zero_rounds_is_param_error() {
        let err = train_adaboost(&separable_1d(), 0).unwrap_err();
        assert_eq!(err.category(), "param");
    }

    #[test]
    fn adaboost_single_class_is_train_error() {
        let data = LabeledDataset {
            schema: vec!["x".into()],
            rows: vec![row("a", &[0.0], 1, "2014-01-01")],
        };
        let err = train_adaboost(&data, 5).unwrap_err();
        assert_eq!(err.category(), "train");
    }

    /// Brute-force stump search for the oracle check: every feature, every
    /// midpoint-or-sentinel threshold, both polarities.
    fn oracle_min_error(rows: &[LabeledRow], weights: &[f64], n_features: usize) -> f64 {
        let mut best = f64::INFINITY;
        for f in 0..n_features {
            let values: Vec<f64> = rows.iter().map(|r| r.features[f]).collect();
            for threshold in candidate_thresholds(&values) {
                for polarity in [1i8, -1] {
                    let stump = Stump {
                        feature: f,
                        threshold,
                        polarity,
                        alpha: 0.0,
                    };
                    let err: f64 = rows
                        .iter()
                        .zip(weights)
                        .filter(|(r, _)| {
                            let y = if r.label == 1 { 1 } else { -1 };
                            stump.predict(&r.features) != y
                        })
                        .map(|(_, w)| w)
                        .sum();
                    if err < best {
                        best = err;
                    }
                }
            }
        }
        best
    }

    #[test]
    fn first_round_stump_is_globally_optimal() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _case in 0..50 {
            let n = rng.random_range(2..=6);
            let n_features = rng.random_range(1..=3);
            let mut rows = Vec::new();
            let mut has = [false, false];
            for i in 0..n {
                let features: Vec<f64> =
                    (0..n_features).map(|_| rng.random_range(-5..5) as f64).collect();
                let label = rng.random_range(0..2) as u8;
                has[label as usize] = true;
                rows.push(row(&i.to_string(), &features, label, "2014-01-01"));
            }
            if !(has[0] && has[1]) {
                continue;
            }
            let weights = vec![1.0 / n as f64; n];
            let sorted: Vec<Vec<usize>> = (0..n_features)
                .map(|f| {
                    let mut o: Vec<usize> = (0..n).collect();
                    o.sort_by(|&a, &b| rows[a].features[f].total_cmp(&rows[b].features[f]));
                    o
                })
                .collect();
            let (_, eps) = best_stump(&rows, &weights, n_features, &sorted);
            let oracle = oracle_min_error(&rows, &weights, n_features);
            assert!(
                (eps - oracle).abs() < 1e-12,
                "sweep {eps} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn completed_rounds_beat_chance_and_bound_training_error() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<LabeledRow> = (0..60)
            .map(|i| {
                let x = rng.random::<f64>() * 4.0 - 2.0;
                let y = rng.random::<f64>() * 4.0 - 2.0;
                // noisy quadrant rule
                let mut label = u8::from(x + 0.5 * y > 0.0);
                if rng.random::<f64>() < 0.1 {
                    label = 1 - label;
                }
                row(&i.to_string(), &[x, y], label, "2014-01-01")
            })
            .collect();
        let data = LabeledDataset {
            schema: vec!["x".into(), "y".into()],
            rows,
        };
        let model = train_adaboost(&data, 30).unwrap();
        assert!(!model.round_errors.is_empty());
        let mut bound = 1.0;
        for &eps in &model.round_errors {
            assert!(eps < 0.5);
            bound *= 2.0 * (eps * (1.0 - eps)).sqrt();
        }
        let errors = data
            .rows
            .iter()
            .filter(|r| {
                let m = margin(&model, &r.features).unwrap();
                let pred = u8::from(m > 0.0);
                pred != r.label
            })
            .count();
        let training_error = errors as f64 / data.rows.len() as f64;
        assert!(
            training_error <= bound + 1e-12,
            "training error {training_error} exceeds exponential bound {bound}"
        );
    }

    #[test]
    fn predict_empty_model_is_half() {
        let model = BoostModel {
            stumps: vec![],
            rounds: 5,
            schema: vec!["x".into()],
            round_errors: vec![],
        };
        assert_eq!(predict_score(&model, &[0.3]).unwrap(), 0.5);
    }

    #[test]
    fn predict_rejects_schema_mismatch() {
        let model = train_adaboost(&separable_1d(), 3).unwrap();
        let err = predict_score(&model, &[1.0, 2.0]).unwrap_err();
        assert_eq!(err.category(), "schema");
        let err = predict_score(&model, &[f64::NAN]).unwrap_err();
        assert_eq!(err.category(), "schema");
    }

    #[test]
    fn score_ranking_equals_margin_ranking() {
        let model = train_adaboost(&separable_1d(), 3).unwrap();
        let inputs = [[-1.0], [0.5], [1.7], [2.5], [9.0]];
        let mut by_margin: Vec<usize> = (0..inputs.len()).collect();
        by_margin.sort_by(|&a, &b| {
            margin(&model, &inputs[a])
                .unwrap()
                .total_cmp(&margin(&model, &inputs[b]).unwrap())
        });
        let mut by_score: Vec<usize> = (0..inputs.len()).collect();
        by_score.sort_by(|&a, &b| {
            predict_score(&model, &inputs[a])
                .unwrap()
                .total_cmp(&predict_score(&model, &inputs[b]).unwrap())
        });
        assert_eq!(by_margin, by_score);
    }

    #[test]
    fn auc_examples() {
        let perfect = roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!(perfect.auc, 1.0);
        let flat = roc_auc(&[0.5, 0.5, 0.5, 0.5], &[0, 1, 0, 1]).unwrap();
        assert_eq!(flat.auc, 0.5);
        let mixed = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_eq!(mixed.auc, 0.75);
        assert_eq!(mixed.positives, 2);
        assert_eq!(mixed.negatives, 2);
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            let n = rng.random_range(4..=60);
            let scores: Vec<f64> = (0..n)
                .map(|_| rng.random_range(0..=10) as f64 / 10.0)
                .collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            labels[0] = 0;
            labels[n - 1] = 1;
            let base = roc_auc(&scores, &labels).unwrap().auc;
            // strictly increasing map preserves order and ties
            let warped: Vec<f64> = scores.iter().map(|&s| (3.0 * s).exp() - 0.5).collect();
            assert_eq!(roc_auc(&warped, &labels).unwrap().auc, base);
        }
    }

    #[test]
    fn auc_single_class_is_error() {
        let err = roc_auc(&[0.1, 0.2], &[1, 1]).unwrap_err();
        assert_eq!(err.category(), "eval");
    }

    #[test]
    fn auc_complement_identity() {
        let scores = [0.1, 0.7, 0.7, 0.3, 0.9, 0.2];
        let labels = [0u8, 1, 0, 1, 1, 0];
        let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();
        let a = roc_auc(&scores, &labels).unwrap().auc;
        let b = roc_auc(&scores, &flipped).unwrap().auc;
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_degenerate_sanity() {
        // feature equals the label: post-cutoff AUC must be 1
        let mut table = FeatureTable::new(vec!["f".into()]).unwrap();
        let mut labels = Vec::new();
        for i in 0..40 {
            let label01 = i % 2;
            let d = if i < 20 { "2014-01-01" } else { "2014-08-01" };
            table
                .insert_row(i.to_string(), vec![label01 as f64])
                .unwrap();
            labels.push(LabelRecord {
                encounter_id: i.to_string(),
                readmit_lag: if label01 == 1 { Some(10) } else { None },
                discharge_date: date(d),
                lace: Some(5.0),
            });
        }
        let eval = evaluate_feature_table(&table, &labels, default_cutoff(), 10).unwrap();
        assert_eq!(eval.auc.auc, 1.0);
        assert_eq!(eval.train_rows, 20);
        assert_eq!(eval.test_rows, 20);
    }

    #[test]
    fn evaluate_drops_incomplete_training_rows() {
        // feature "f" misses the first five (training) encounters
        let mut part = FeatureTable::new(vec!["f".into()]).unwrap();
        for i in 5..30 {
            part.insert_row(i.to_string(), vec![(i % 2) as f64]).unwrap();
        }
        let mut full = FeatureTable::new(vec!["g".into()]).unwrap();
        for i in 0..30 {
            full.insert_row(i.to_string(), vec![(i % 2) as f64]).unwrap();
        }
        let labels: Vec<LabelRecord> = (0..30)
            .map(|i| LabelRecord {
                encounter_id: i.to_string(),
                readmit_lag: if i % 2 == 1 { Some(5) } else { None },
                discharge_date: date(if i < 15 { "2014-02-01" } else { "2014-09-01" }),
                lace: None,
            })
            .collect();
        let merged = FeatureTable::merge(&[part.clone(), full.clone()]).unwrap();
        let eval = evaluate_feature_table(&merged, &labels, default_cutoff(), 5).unwrap();
        assert_eq!(eval.dropped_incomplete, 5);
        assert_eq!(eval.train_rows, 10);
        assert_eq!(eval.auc.auc, 1.0);

        // a missing feature on a TEST row is an error, not a silent drop
        let mut part_test_gap = FeatureTable::new(vec!["f".into()]).unwrap();
        for i in 0..29 {
            part_test_gap
                .insert_row(i.to_string(), vec![(i % 2) as f64])
                .unwrap();
        }
        let merged = FeatureTable::merge(&[part_test_gap, full]).unwrap();
        let err = evaluate_feature_table(&merged, &labels, default_cutoff(), 5).unwrap_err();
        assert_eq!(err.category(), "schema");
    }

    #[test]
    fn labels_csv_parses_variants() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.csv");
        std::fs::write(
            &p,
            "PAT_ENC_CSN_ID,READMITLAG,DISCHARGEDATE,LACE\n\
             1,5,2014-01-03,7\n\
             2,,2014-07-02,\n\
             3,31,2013-12-30,11.5\n",
        )
        .unwrap();
        let recs = load_labels(&p).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].readmit_lag, Some(5));
        assert_eq!(recs[1].readmit_lag, None);
        assert_eq!(recs[1].lace, None);
        assert_eq!(recs[2].lace, Some(11.5));
        assert_eq!(recs[0].discharge_date, date("2014-01-03"));
    }

    #[test]
    fn labels_csv_missing_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.csv");
        std::fs::write(&p, "PAT_ENC_CSN_ID,DISCHARGEDATE\n1,2014-01-01\n").unwrap();
        let err = load_labels(&p).unwrap_err();
        assert_eq!(err.category(), "schema");
        assert!(err.to_string().contains("READMITLAG"));
    }

    #[test]
    fn labels_csv_bad_date_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.csv");
        std::fs::write(
            &p,
            "PAT_ENC_CSN_ID,READMITLAG,DISCHARGEDATE\n1,5,01/03/2014\n",
        )
        .unwrap();
        let err = load_labels(&p).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}

//! Weather-dataset ingestion. The expected file is delimited text with a
//! header and the columns
//!
//! ```text
//! station,date,mean_temp,mean_dew_point,mean_visibility,mean_wind_speed,
//! max_sustained_wind,precipitation,latitude,longitude
//! ```
//!
//! where `date` is `YYYY-MM-DD` and `precipitation` is 1 for a
//! rain-or-snow day and 0 otherwise. Rows with missing or unparseable
//! fields are dropped and counted. Days up to 2012 are the training
//! split, later days the test split; a station without valid training
//! rows is excluded with a warning. The station graph links each station
//! to its nearest peers in the (longitude, latitude) plane.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array1;
use proxnet::graph::knn_network;
use proxnet::Network;

use crate::error::{HarnessError, Result};

pub const FEATURE_DIMENSION: usize = 5;
/// Final training year (inclusive); later years form the test split.
pub const TRAIN_LAST_YEAR: i32 = 2012;

/// One parsed measurement row.
#[derive(Debug, Clone)]
pub struct WeatherRecord {
    pub station: String,
    /// `(year, month, day)`.
    pub date: (i32, u8, u8),
    pub features: [f64; FEATURE_DIMENSION],
    /// +1 for rain or snow, -1 otherwise.
    pub label: f64,
    pub latitude: f64,
    pub longitude: f64,
}

/// Chronological train/test streams of one station.
#[derive(Debug, Clone)]
pub struct StationStreams {
    pub id: String,
    /// `(longitude, latitude)` used for the k-NN graph.
    pub coordinates: (f64, f64),
    pub train: Vec<(Array1<f64>, f64)>,
    pub test: Vec<(Array1<f64>, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub parsed_rows: usize,
    pub dropped_rows: usize,
    /// Stations excluded for having no valid training rows.
    pub excluded_stations: Vec<String>,
    /// Shortest training stream across retained stations.
    pub min_train_days: usize,
    pub min_test_days: usize,
}

#[derive(Debug)]
pub struct IngestedWeather {
    /// Retained stations sorted by id.
    pub stations: Vec<StationStreams>,
    pub network: Network,
    pub report: IngestReport,
}

fn parse_date(text: &str) -> Option<(i32, u8, u8)> {
    let mut parts = text.split('-');
    let year = parts.next()?.parse().ok()?;
    let month = parts.next()?.parse().ok()?;
    let day = parts.next()?.parse().ok()?;
    if parts.next().is_some() || !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return None;
    }
    Some((year, month, day))
}

fn parse_record(row: &csv::StringRecord) -> Option<WeatherRecord> {
    if row.len() != 10 {
        return None;
    }
    let station = row.get(0)?.trim();
    if station.is_empty() {
        return None;
    }
    let date = parse_date(row.get(1)?.trim())?;
    let mut features = [0.0; FEATURE_DIMENSION];
    for (slot, feature) in features.iter_mut().enumerate() {
        let value: f64 = row.get(2 + slot)?.trim().parse().ok()?;
        if !value.is_finite() {
            return None;
        }
        *feature = value;
    }
    let label = match row.get(7)?.trim() {
        "1" => 1.0,
        "0" => -1.0,
        _ => return None,
    };
    let latitude: f64 = row.get(8)?.trim().parse().ok()?;
    let longitude: f64 = row.get(9)?.trim().parse().ok()?;
    if !latitude.is_finite() || !longitude.is_finite() {
        return None;
    }
    Some(WeatherRecord {
        station: station.to_string(),
        date,
        features,
        label,
        latitude,
        longitude,
    })
}

/// Reads and splits the dataset, builds the k-NN station graph.
pub fn ingest_weather(path: &Path, k_neighbors: usize) -> Result<IngestedWeather> {
    if !path.exists() {
        return Err(HarnessError::MissingDataset {
            path: path.to_path_buf(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| HarnessError::DatasetSchema {
            message: e.to_string(),
        })?;
    {
        let headers = reader.headers().map_err(|e| HarnessError::DatasetSchema {
            message: e.to_string(),
        })?;
        let expected = [
            "station",
            "date",
            "mean_temp",
            "mean_dew_point",
            "mean_visibility",
            "mean_wind_speed",
            "max_sustained_wind",
            "precipitation",
            "latitude",
            "longitude",
        ];
        let actual: Vec<&str> = headers.iter().map(str::trim).collect();
        if actual != expected {
            let detail: Vec<String> = expected
                .iter()
                .zip(actual.iter().chain(std::iter::repeat(&"<missing>")))
                .filter(|(e, a)| *a != *e)
                .map(|(e, a)| format!("expected column `{e}`, found `{a}`"))
                .collect();
            return Err(HarnessError::DatasetSchema {
                message: detail.join("; "),
            });
        }
    }

    let mut report = IngestReport::default();
    let mut per_station: BTreeMap<String, Vec<WeatherRecord>> = BTreeMap::new();
    for row in reader.records() {
        let Ok(row) = row else {
            report.dropped_rows += 1;
            continue;
        };
        match parse_record(&row) {
            Some(record) => {
                report.parsed_rows += 1;
                per_station
                    .entry(record.station.clone())
                    .or_default()
                    .push(record);
            }
            None => report.dropped_rows += 1,
        }
    }
    if per_station.is_empty() {
        return Err(HarnessError::DatasetSchema {
            message: "no valid rows in the dataset".into(),
        });
    }

    let mut stations = Vec::new();
    for (id, mut records) in per_station {
        records.sort_by_key(|r| r.date);
        let coordinates = (records[0].longitude, records[0].latitude);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for record in records {
            let sample = (Array1::from(record.features.to_vec()), record.label);
            if record.date.0 <= TRAIN_LAST_YEAR {
                train.push(sample);
            } else {
                test.push(sample);
            }
        }
        if train.is_empty() {
            report.excluded_stations.push(id);
            continue;
        }
        stations.push(StationStreams {
            id,
            coordinates,
            train,
            test,
        });
    }
    if stations.is_empty() {
        return Err(HarnessError::DatasetSchema {
            message: "every station lacks training rows".into(),
        });
    }

    report.min_train_days = stations.iter().map(|s| s.train.len()).min().unwrap_or(0);
    report.min_test_days = stations.iter().map(|s| s.test.len()).min().unwrap_or(0);

    let coordinates: Vec<(f64, f64)> = stations.iter().map(|s| s.coordinates).collect();
    let network = knn_network(&coordinates, k_neighbors)?;

    Ok(IngestedWeather {
        stations,
        network,
        report,
    })
}

/// Per-station z-scoring on training statistics, applied to both splits.
/// A constant feature (zero training variance) is centered only.
pub fn standardize_per_station(stations: &mut [StationStreams]) {
    for station in stations {
        let n = station.train.len() as f64;
        let dim = FEATURE_DIMENSION;
        let mut mean = vec![0.0; dim];
        for (features, _) in &station.train {
            for (m, value) in features.iter().enumerate() {
                mean[m] += value;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut variance = vec![0.0; dim];
        for (features, _) in &station.train {
            for (m, value) in features.iter().enumerate() {
                let centered = value - mean[m];
                variance[m] += centered * centered;
            }
        }
        let scale: Vec<f64> = variance
            .iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 0.0 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        let transform = |samples: &mut Vec<(Array1<f64>, f64)>| {
            for (features, _) in samples.iter_mut() {
                for m in 0..dim {
                    features[m] = (features[m] - mean[m]) * scale[m];
                }
            }
        };
        transform(&mut station.train);
        transform(&mut station.test);
    }
}

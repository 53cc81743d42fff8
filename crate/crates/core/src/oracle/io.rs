//! JSON instance files. Set systems are `{"k": .., "sets": [[..]..]}`;
//! metrics are `{"n": .., "coords": [[..]..] | "matrix": [[..]..],
//! "terminals": [..]}`. Loaders validate all container invariants on read.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MetricInstance, SetSystem};
use crate::error::{CoreError, Result};

#[derive(Serialize, Deserialize)]
struct SetSystemJson {
    k: usize,
    sets: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct MetricJson {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
    terminals: Vec<usize>,
}

pub fn load_set_system(path: &Path) -> Result<SetSystem> {
    let text = std::fs::read_to_string(path)?;
    let raw: SetSystemJson = serde_json::from_str(&text)?;
    SetSystem::new(raw.k, raw.sets)
}

pub fn save_set_system(system: &SetSystem, path: &Path) -> Result<()> {
    let raw = SetSystemJson {
        k: system.universe_size(),
        sets: (0..system.family_size())
            .map(|s| system.set_members(s).iter().map(|&e| e as usize).collect())
            .collect(),
    };
    std::fs::write(path, serde_json::to_string(&raw)?)?;
    Ok(())
}

pub fn load_metric(path: &Path) -> Result<MetricInstance> {
    let text = std::fs::read_to_string(path)?;
    let raw: MetricJson = serde_json::from_str(&text)?;
    match (raw.coords, raw.matrix) {
        (Some(coords), None) => {
            if coords.len() != raw.n {
                return Err(CoreError::InvalidInstance(format!(
                    "declared n = {} but got {} coordinate rows",
                    raw.n,
                    coords.len()
                )));
            }
            MetricInstance::from_coords(&coords, raw.terminals)
        }
        (None, Some(matrix)) => {
            if matrix.len() != raw.n {
                return Err(CoreError::InvalidInstance(format!(
                    "declared n = {} but got {} matrix rows",
                    raw.n,
                    matrix.len()
                )));
            }
            MetricInstance::from_matrix(matrix, raw.terminals)
        }
        _ => Err(CoreError::InvalidInstance(
            "metric file needs exactly one of \"coords\" or \"matrix\"".into(),
        )),
    }
}

pub fn save_metric(metric: &MetricInstance, path: &Path) -> Result<()> {
    let n = metric.n_points();
    let raw = MetricJson {
        n,
        coords: None,
        matrix: Some(
            (0..n)
                .map(|i| (0..n).map(|j| metric.distance_raw(i, j)).collect())
                .collect(),
        ),
        terminals: metric.terminals().iter().map(|&t| t as usize).collect(),
    };
    std::fs::write(path, serde_json::to_string(&raw)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_system_round_trip() {
        let dir = std::env::temp_dir().join("sublin_io_test_sets");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sys.json");
        let sys = SetSystem::new(4, vec![vec![0, 1], vec![2], vec![]]).unwrap();
        save_set_system(&sys, &path).unwrap();
        let back = load_set_system(&path).unwrap();
        assert_eq!(back.universe_size(), 4);
        assert_eq!(back.family_size(), 3);
        assert_eq!(back.set_members(0), &[0, 1]);
    }

    #[test]
    fn loader_rejects_invalid() {
        let dir = std::env::temp_dir().join("sublin_io_test_bad");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.json");
        std::fs::write(&path, r#"{"k": 2, "sets": [[0, 5]]}"#).unwrap();
        assert!(load_set_system(&path).is_err());
        std::fs::write(&path, r#"{"n": 2, "terminals": [0]}"#).unwrap();
        assert!(load_metric(&path).is_err());
    }

    #[test]
    fn metric_round_trip() {
        let dir = std::env::temp_dir().join("sublin_io_test_metric");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.json");
        let m = MetricInstance::from_coords(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0, 2],
        )
        .unwrap();
        save_metric(&m, &path).unwrap();
        let back = load_metric(&path).unwrap();
        assert_eq!(back.n_points(), 3);
        assert_eq!(back.terminals(), &[0, 2]);
        assert_eq!(back.distance_raw(0, 1), 1.0);
    }
}

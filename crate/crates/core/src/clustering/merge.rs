use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw cluster id to merged behaviour label.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MergeMap(pub BTreeMap<usize, String>);

impl MergeMap {
    /// Every raw cluster keeps its own label, `cluster-NN`.
    pub fn identity(k: usize) -> Self {
        Self((0..k).map(|id| (id, format!("cluster-{id:02}"))).collect())
    }

    /// Parses a map whose keys are decimal cluster ids (as they come from a
    /// TOML table).
    pub fn from_string_keys(map: &BTreeMap<String, String>) -> Result<Self> {
        map.iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<usize>()
                    .map(|id| (id, v.clone()))
                    .map_err(|_| Error::Config(format!("merge_map key `{k}` is not a cluster id")))
            })
            .collect::<Result<BTreeMap<_, _>>>()
            .map(Self)
    }

    /// Checks the map covers every id in `[0, k)` with a non-empty label.
    pub fn validate(&self, k: usize) -> Result<()> {
        if let Some(id) = (0..k).find(|id| !self.0.contains_key(id)) {
            return Err(Error::Config(format!("merge_map has no label for raw cluster {id}")));
        }
        if let Some((id, _)) = self.0.iter().find(|(_, l)| l.trim().is_empty()) {
            return Err(Error::Config(format!("merge_map label for raw cluster {id} is empty")));
        }
        if self.0.is_empty() {
            return Err(Error::Config("merge_map has no labels".into()));
        }
        Ok(())
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.0.get(&id).map(String::as_str)
    }
}

/// Where a window came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WindowRef {
    pub traj_id: String,
    pub start_index: usize,
}

/// Windows and trajectories grouped under merged labels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledPartition {
    /// Merged label of each window, aligned with the input order.
    pub window_labels: Vec<String>,
    pub windows_by_label: BTreeMap<String, Vec<WindowRef>>,
    pub trajectory_labels: BTreeMap<String, String>,
    pub trajectories_by_label: BTreeMap<String, BTreeSet<String>>,
}

/// Unions raw clusters through the merge map and labels each trajectory by
/// the majority label of its windows; a tie goes to the label of the
/// trajectory's earliest window.
pub fn apply_merge_map(
    windows: &[WindowRef],
    raw_labels: &[usize],
    merge_map: &MergeMap,
) -> Result<LabeledPartition> {
    if windows.len() != raw_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} windows but {} cluster labels",
            windows.len(),
            raw_labels.len()
        )));
    }
    let mut out = LabeledPartition::default();
    // per trajectory: label -> (count, earliest start)
    let mut votes: BTreeMap<&str, BTreeMap<&str, (usize, usize)>> = BTreeMap::new();
    for (w, &id) in windows.iter().zip(raw_labels) {
        let label = merge_map
            .label(id)
            .ok_or_else(|| Error::Config(format!("merge_map has no label for raw cluster {id}")))?;
        out.window_labels.push(label.to_string());
        out.windows_by_label
            .entry(label.to_string())
            .or_default()
            .push(w.clone());
        let e = votes
            .entry(w.traj_id.as_str())
            .or_default()
            .entry(label)
            .or_insert((0, w.start_index));
        e.0 += 1;
        e.1 = e.1.min(w.start_index);
    }
    for (traj, tally) in votes {
        let (label, _) = tally
            .iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
            .expect("at least one window");
        out.trajectory_labels.insert(traj.to_string(), label.to_string());
        out.trajectories_by_label
            .entry(label.to_string())
            .or_default()
            .insert(traj.to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn refs(n: usize) -> Vec<WindowRef> {
        (0..n)
            .map(|i| WindowRef {
                traj_id: format!("t{i:02}"),
                start_index: 0,
            })
            .collect()
    }

    fn map(pairs: &[(usize, &str)]) -> MergeMap {
        MergeMap(pairs.iter().map(|(k, v)| (*k, v.to_string())).collect())
    }

    #[test]
    fn merging_counts() {
        let labels = [0, 0, 0, 1, 1, 2, 2, 2, 2];
        let p = apply_merge_map(&refs(9), &labels, &map(&[(0, "A"), (1, "A"), (2, "B")])).unwrap();
        assert_eq!(p.windows_by_label["A"].len(), 5);
        assert_eq!(p.windows_by_label["B"].len(), 4);
        assert_eq!(p.trajectories_by_label["A"].len(), 5);
    }

    #[test]
    fn identity_map_keeps_clusters() {
        let labels = [2, 0, 1, 2];
        let p = apply_merge_map(&refs(4), &labels, &MergeMap::identity(3)).unwrap();
        assert_eq!(p.windows_by_label.len(), 3);
        assert_eq!(p.windows_by_label["cluster-02"].len(), 2);
    }

    #[test]
    fn single_label() {
        let labels = [0, 1, 2, 1];
        let p = apply_merge_map(&refs(4), &labels, &map(&[(0, "x"), (1, "x"), (2, "x")])).unwrap();
        assert_eq!(p.trajectories_by_label.len(), 1);
        assert_eq!(p.trajectories_by_label["x"].len(), 4);
    }

    #[test]
    fn missing_id_is_config_error() {
        let err = apply_merge_map(&refs(2), &[0, 3], &map(&[(0, "a")])).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains('3')));
        assert!(map(&[(0, "a")]).validate(2).is_err());
    }

    #[test]
    fn majority_and_tie_break() {
        let w = |s| WindowRef {
            traj_id: "t".into(),
            start_index: s,
        };
        let wins = vec![w(30), w(0), w(60)];
        let m = map(&[(0, "late"), (1, "early")]);
        // two "late" windows beat one "early"
        let p = apply_merge_map(&wins, &[0, 1, 0], &m).unwrap();
        assert_eq!(p.trajectory_labels["t"], "late");
        // 1-1 tie: earliest window (start 0) decides
        let p = apply_merge_map(&wins[..2], &[0, 1], &m).unwrap();
        assert_eq!(p.trajectory_labels["t"], "early");
    }

    #[test]
    fn string_keys() {
        let raw: BTreeMap<String, String> = [("0".to_string(), "a".to_string())].into();
        assert_eq!(MergeMap::from_string_keys(&raw).unwrap().label(0), Some("a"));
        let bad: BTreeMap<String, String> = [("x".to_string(), "a".to_string())].into();
        assert!(MergeMap::from_string_keys(&bad).is_err());
    }
}

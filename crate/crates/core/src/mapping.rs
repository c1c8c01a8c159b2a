//! Class-mapping layer: groups or remaps the 17 fine-grained classes into
//! application alert categories, purely as postprocessing.
//!
//! A [`ClassMap`] is a total function from source class ids (1..=17) to
//! target category ids, which themselves live in 1..=17 so that mapped
//! frames, labels, and events stay representable with the core types.
//! Frame mapping sums probability mass per target; event mapping relabels
//! and merges adjacent same-target events.
//!
//! Two presets ship with the crate: the confounder-absorption map used in
//! ablations ([`no_confounders_map`]) and a deployment display grouping
//! ([`deployment_groups_map`]).

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::types::{
    AlertEvent, LabeledFrame, ProbabilityFrame, CLASS_COUNT, CLASS_NAMES, NORMAL_CLASS,
};

/// Total mapping from the 17 source classes to named target categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    /// `targets[source_id - 1]` is the target category id.
    targets: [u8; CLASS_COUNT],
    target_names: BTreeMap<u8, String>,
    non_alerting: BTreeSet<u8>,
}

impl ClassMap {
    /// Build a map from raw parts. Target ids must be in 1..=17 and every
    /// used target must be named. Alert-policy rules (exactly one
    /// non-alerting category holding the Normal class) are enforced only by
    /// the file loader, so tests and ad-hoc analyses can build looser maps.
    pub fn new(
        targets: [u8; CLASS_COUNT],
        target_names: BTreeMap<u8, String>,
        non_alerting: BTreeSet<u8>,
    ) -> Result<Self> {
        for (i, &t) in targets.iter().enumerate() {
            if t == 0 || t as usize > CLASS_COUNT {
                return Err(Error::InvalidMap(format!(
                    "source class {} maps to target id {} outside 1..=17",
                    i + 1,
                    t
                )));
            }
            if !target_names.contains_key(&t) {
                return Err(Error::InvalidMap(format!("target id {t} has no name")));
            }
        }
        for id in &non_alerting {
            if !target_names.contains_key(id) {
                return Err(Error::InvalidMap(format!(
                    "non-alerting target id {id} has no name"
                )));
            }
        }
        Ok(Self {
            targets,
            target_names,
            non_alerting,
        })
    }

    /// The identity map over the canonical taxonomy.
    pub fn identity() -> Self {
        let mut targets = [0u8; CLASS_COUNT];
        let mut names = BTreeMap::new();
        for id in 1..=CLASS_COUNT as u8 {
            targets[id as usize - 1] = id;
            names.insert(id, CLASS_NAMES[id as usize - 1].to_string());
        }
        Self {
            targets,
            target_names: names,
            non_alerting: BTreeSet::from([NORMAL_CLASS]),
        }
    }

    pub fn target_of(&self, source_id: u8) -> Result<u8> {
        if source_id == 0 || source_id as usize > CLASS_COUNT {
            return Err(Error::InvalidClassId(source_id));
        }
        Ok(self.targets[source_id as usize - 1])
    }

    pub fn target_name(&self, target_id: u8) -> Option<&str> {
        self.target_names.get(&target_id).map(String::as_str)
    }

    pub fn is_alerting(&self, target_id: u8) -> bool {
        !self.non_alerting.contains(&target_id)
    }

    /// Distinct target ids in ascending order.
    pub fn target_ids(&self) -> Vec<u8> {
        self.target_names.keys().copied().collect()
    }

    /// Parse the map file schema:
    ///
    /// ```json
    /// {"targets": {"<source id>": "<category name>"},
    ///  "non_alerting": ["<category name>"],
    ///  "target_ids": {"<category name>": <id>}}
    /// ```
    ///
    /// `target_ids` is optional; without it, the non-alerting category gets
    /// id 1 and alerting categories get 2.. in order of first appearance by
    /// source id. Exactly one non-alerting category is required and it must
    /// hold the Normal class, so downstream `class_id != 1` semantics stay
    /// intact after mapping.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct MapFile {
            #[serde(default)]
            #[allow(dead_code)]
            description: Option<String>,
            #[serde(default)]
            #[allow(dead_code)]
            version: Option<u32>,
            targets: BTreeMap<String, String>,
            non_alerting: Vec<String>,
            #[serde(default)]
            target_ids: Option<BTreeMap<String, u8>>,
        }

        let file: MapFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidMap(format!("malformed map file: {e}")))?;

        let mut by_source: BTreeMap<u8, String> = BTreeMap::new();
        for (key, name) in &file.targets {
            let source: u8 = key
                .parse()
                .map_err(|_| Error::InvalidMap(format!("bad source id {key:?}")))?;
            if source == 0 || source as usize > CLASS_COUNT {
                return Err(Error::InvalidMap(format!(
                    "source id {source} outside 1..=17"
                )));
            }
            by_source.insert(source, name.clone());
        }
        if by_source.len() != CLASS_COUNT {
            return Err(Error::InvalidMap(format!(
                "map must cover all {CLASS_COUNT} source classes, found {}",
                by_source.len()
            )));
        }

        if file.non_alerting.len() != 1 {
            return Err(Error::InvalidMap(
                "exactly one non-alerting category is supported; \
                 the pipeline treats target id 1 as the single non-alerting class"
                    .into(),
            ));
        }
        let normal_category = &file.non_alerting[0];
        if by_source[&NORMAL_CLASS] != *normal_category {
            return Err(Error::InvalidMap(format!(
                "the Normal class must map to the non-alerting category {normal_category:?}"
            )));
        }

        // Assign category ids: explicit table wins, otherwise non-alerting
        // first, then first appearance by source id.
        let mut ids: BTreeMap<String, u8> = BTreeMap::new();
        if let Some(explicit) = file.target_ids {
            for name in by_source.values() {
                let id = *explicit.get(name).ok_or_else(|| {
                    Error::InvalidMap(format!("target_ids missing category {name:?}"))
                })?;
                if id == 0 || id as usize > CLASS_COUNT {
                    return Err(Error::InvalidMap(format!(
                        "target id {id} for {name:?} outside 1..=17"
                    )));
                }
                if let Some(&prev) = ids.get(name) {
                    if prev != id {
                        return Err(Error::InvalidMap(format!(
                            "conflicting ids for category {name:?}"
                        )));
                    }
                }
                ids.insert(name.clone(), id);
            }
            let distinct: BTreeSet<u8> = ids.values().copied().collect();
            if distinct.len() != ids.len() {
                return Err(Error::InvalidMap("duplicate target ids".into()));
            }
            if ids[normal_category] != NORMAL_CLASS {
                return Err(Error::InvalidMap(
                    "the non-alerting category must have target id 1".into(),
                ));
            }
        } else {
            ids.insert(normal_category.clone(), NORMAL_CLASS);
            let mut next = NORMAL_CLASS + 1;
            for source in 1..=CLASS_COUNT as u8 {
                let name = &by_source[&source];
                if !ids.contains_key(name) {
                    if next as usize > CLASS_COUNT {
                        return Err(Error::InvalidMap("more than 17 categories".into()));
                    }
                    ids.insert(name.clone(), next);
                    next += 1;
                }
            }
        }

        let mut targets = [0u8; CLASS_COUNT];
        for source in 1..=CLASS_COUNT as u8 {
            targets[source as usize - 1] = ids[&by_source[&source]];
        }
        let target_names: BTreeMap<u8, String> =
            ids.iter().map(|(name, &id)| (id, name.clone())).collect();
        Self::new(targets, target_names, BTreeSet::from([NORMAL_CLASS]))
    }
}

/// Map a probability stream: target-category probability is the sum of its
/// source probabilities. Output vectors keep the 17-slot layout (unused
/// target ids hold zero mass) and remain simplices.
pub fn apply_map_frames(frames: &[ProbabilityFrame], map: &ClassMap) -> Vec<ProbabilityFrame> {
    frames
        .iter()
        .map(|frame| {
            let mut probs = vec![0.0; CLASS_COUNT];
            for (i, &p) in frame.probs.iter().enumerate().take(CLASS_COUNT) {
                probs[map.targets[i] as usize - 1] += p;
            }
            ProbabilityFrame::new(frame.t, probs)
        })
        .collect()
}

/// Map frame labels through the class map.
pub fn apply_map_labels(labels: &[LabeledFrame], map: &ClassMap) -> Result<Vec<LabeledFrame>> {
    labels
        .iter()
        .map(|l| {
            Ok(LabeledFrame {
                t: l.t,
                label: map.target_of(l.label)?,
            })
        })
        .collect()
}

/// Map events: relabel each event's class, drop events that land on a
/// non-alerting category, and merge same-target events that touch or
/// overlap (gap of zero frames).
pub fn apply_map_events(events: &[AlertEvent], map: &ClassMap) -> Result<Vec<AlertEvent>> {
    let mut mapped: Vec<AlertEvent> = Vec::with_capacity(events.len());
    for ev in events {
        let target = map.target_of(ev.class_id)?;
        if !map.is_alerting(target) {
            continue;
        }
        mapped.push(AlertEvent::new(target, ev.t_start, ev.t_end));
    }
    mapped.sort_by_key(|e| (e.t_start, e.t_end, e.class_id));
    let mut merged: Vec<AlertEvent> = Vec::with_capacity(mapped.len());
    for ev in mapped {
        match merged.last_mut() {
            Some(last) if last.class_id == ev.class_id && ev.t_start <= last.t_end + 1 => {
                last.t_end = last.t_end.max(ev.t_end);
            }
            _ => merged.push(ev),
        }
    }
    Ok(merged)
}

/// The confounder-absorption ablation map: grooming (14) folds into
/// Phone - Talk Right (3), control-panel interaction (15) into
/// Phone - Text Right (5), everything else maps to itself.
pub fn no_confounders_map() -> ClassMap {
    let mut targets = [0u8; CLASS_COUNT];
    let mut names = BTreeMap::new();
    for id in 1..=CLASS_COUNT as u8 {
        let target = match id {
            14 => 3,
            15 => 5,
            other => other,
        };
        targets[id as usize - 1] = target;
        names
            .entry(target)
            .or_insert_with(|| CLASS_NAMES[target as usize - 1].to_string());
    }
    ClassMap::new(targets, names, BTreeSet::from([NORMAL_CLASS])).expect("static map")
}

/// Bundled confounder-absorption preset (identical to
/// [`no_confounders_map`], shipped as a file for CLI use).
pub const NO_CONFOUNDERS_PRESET: &str = include_str!("../presets/no_confounders.json");

/// Bundled deployment display grouping: six alert categories plus normal.
pub const DEPLOYMENT_GROUPS_PRESET: &str = include_str!("../presets/deployment_groups.json");

/// The deployment display grouping as a ready-made map.
pub fn deployment_groups_map() -> ClassMap {
    ClassMap::from_json(DEPLOYMENT_GROUPS_PRESET).expect("bundled preset parses")
}

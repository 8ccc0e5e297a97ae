use std::collections::BTreeMap;
use std::path::Path;

use super::{IoError, Result};

const DKT_TSV: &str = include_str!("../../data/dkt_labels.tsv");

/// Offset between left (1xxx) and right (2xxx) cortical FreeSurfer codes.
const CORTICAL_HEMI_OFFSET: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Laterality {
    Left,
    Right,
    Midline,
    /// One training label standing for a left/right pair of FreeSurfer labels.
    MergedPair,
}

impl Laterality {
    pub fn as_str(self) -> &'static str {
        match self {
            Laterality::Left => "Left",
            Laterality::Right => "Right",
            Laterality::Midline => "Midline",
            Laterality::MergedPair => "MergedPair",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTableEntry {
    pub internal_id: u16,
    pub name: String,
    /// FreeSurfer code; the left-hemisphere code for merged pairs.
    pub fs_code: u32,
    /// Right-hemisphere FreeSurfer code of a merged pair.
    pub paired_fs_code: Option<u32>,
    pub laterality: Laterality,
    /// Shared id used by the sagittal network (the left partner's id).
    pub sagittal_merge_id: Option<u16>,
}

impl LabelTableEntry {
    pub fn fs_codes(&self) -> Vec<u32> {
        std::iter::once(self.fs_code).chain(self.paired_fs_code).collect()
    }

    pub fn is_cortical(&self) -> bool {
        self.fs_code >= CORTICAL_HEMI_OFFSET
    }
}

/// Validated label table with lookups by internal id and FreeSurfer code.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    entries: Vec<LabelTableEntry>,
    by_id: BTreeMap<u16, usize>,
    by_fs: BTreeMap<u32, usize>,
}

impl LabelTable {
    /// The 78-label DKT table shipped with the crate.
    pub fn dkt() -> Self {
        Self::parse(DKT_TSV).expect("shipped DKT label table is valid")
    }

    pub fn from_entries(entries: Vec<LabelTableEntry>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        let mut by_fs = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if by_id.insert(e.internal_id, i).is_some() {
                return Err(IoError::DuplicateId(e.internal_id));
            }
            let n_codes = e.fs_codes().len();
            let expected = if e.laterality == Laterality::MergedPair { 2 } else { 1 };
            if n_codes != expected {
                return Err(IoError::MalformedTable {
                    line: i + 1,
                    reason: format!(
                        "{} entry {} must reference {expected} FreeSurfer code(s)",
                        e.laterality.as_str(),
                        e.internal_id
                    ),
                });
            }
            for code in e.fs_codes() {
                if by_fs.insert(code, i).is_some() {
                    return Err(IoError::DuplicateFsCode(code));
                }
            }
        }
        for e in &entries {
            if let Some(m) = e.sagittal_merge_id {
                if !by_id.contains_key(&m) {
                    return Err(IoError::MalformedTable {
                        line: by_id[&e.internal_id] + 1,
                        reason: format!("sagittal_merge_id {m} is not a known internal id"),
                    });
                }
            }
        }
        Ok(Self { entries, by_id, by_fs })
    }

    /// Parses TSV rows `internal_id, name, fs_code, laterality, sagittal_merge_id`.
    /// A header row starting with `internal_id` is optional. Merged pairs list
    /// both codes as `1003,2003`; a single cortical left code implies its
    /// right partner at +1000.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') || raw.starts_with("internal_id") {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() < 4 || cols.len() > 5 {
                return Err(IoError::MalformedTable {
                    line,
                    reason: format!("expected 4 or 5 tab-separated columns, found {}", cols.len()),
                });
            }
            let bad = |what: &str, v: &str| IoError::MalformedTable {
                line,
                reason: format!("bad {what} {v:?}"),
            };
            let internal_id: u16 =
                cols[0].trim().parse().map_err(|_| bad("internal_id", cols[0]))?;
            if internal_id == 0 {
                return Err(bad("internal_id (0 is background)", cols[0]));
            }
            let laterality = match cols[3].trim() {
                "Left" => Laterality::Left,
                "Right" => Laterality::Right,
                "Midline" => Laterality::Midline,
                "MergedPair" => Laterality::MergedPair,
                other => return Err(IoError::BadLaterality { line, value: other.to_string() }),
            };
            let codes: Vec<u32> = cols[2]
                .split(',')
                .map(|c| c.trim().parse().map_err(|_| bad("fs_code", cols[2])))
                .collect::<Result<_>>()?;
            let (fs_code, paired_fs_code) = match (laterality, codes.as_slice()) {
                (Laterality::MergedPair, [l, r]) => (*l, Some(*r)),
                (Laterality::MergedPair, [l])
                    if (CORTICAL_HEMI_OFFSET..2 * CORTICAL_HEMI_OFFSET).contains(l) =>
                {
                    (*l, Some(l + CORTICAL_HEMI_OFFSET))
                }
                (Laterality::MergedPair, _) => {
                    return Err(bad("fs_code for MergedPair (need two codes)", cols[2]))
                }
                (_, [c]) => (*c, None),
                _ => return Err(bad("fs_code (need one code)", cols[2])),
            };
            let merge = cols.get(4).map(|s| s.trim()).unwrap_or("");
            let sagittal_merge_id = if merge.is_empty() {
                None
            } else {
                Some(merge.parse().map_err(|_| bad("sagittal_merge_id", merge))?)
            };
            entries.push(LabelTableEntry {
                internal_id,
                name: cols[1].trim().to_string(),
                fs_code,
                paired_fs_code,
                laterality,
                sagittal_merge_id,
            });
        }
        Self::from_entries(entries)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("internal_id\tname\tfs_code\tlaterality\tsagittal_merge_id\n");
        for e in &self.entries {
            let codes: Vec<String> = e.fs_codes().iter().map(u32::to_string).collect();
            let merge = e.sagittal_merge_id.map(|m| m.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.internal_id,
                e.name,
                codes.join(","),
                e.laterality.as_str(),
                merge
            ));
        }
        s
    }

    pub fn entries(&self) -> &[LabelTableEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, internal_id: u16) -> Option<&LabelTableEntry> {
        self.by_id.get(&internal_id).map(|&i| &self.entries[i])
    }

    pub fn by_fs_code(&self, code: u32) -> Option<&LabelTableEntry> {
        self.by_fs.get(&code).map(|&i| &self.entries[i])
    }

    /// All FreeSurfer codes after lateral expansion, ascending.
    pub fn fs_codes(&self) -> Vec<u32> {
        self.by_fs.keys().copied().collect()
    }

    pub fn max_internal_id(&self) -> u16 {
        self.by_id.keys().next_back().copied().unwrap_or(0)
    }

    /// Id used by the sagittal view (identity for unmerged labels).
    pub fn sagittal_id(&self, internal_id: u16) -> u16 {
        self.get(internal_id).and_then(|e| e.sagittal_merge_id).unwrap_or(internal_id)
    }

    /// Distinct sagittal class ids, ascending.
    pub fn sagittal_classes(&self) -> Vec<u16> {
        let mut ids: Vec<u16> = self.entries.iter().map(|e| self.sagittal_id(e.internal_id)).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Internal ids of the left and right cortical white matter labels
    /// (FreeSurfer codes 2 and 41).
    pub fn white_matter_ids(&self) -> Option<(u16, u16)> {
        Some((self.by_fs_code(2)?.internal_id, self.by_fs_code(41)?.internal_id))
    }

    /// Hemisphere of a FreeSurfer code: `Some(Left)`, `Some(Right)` or `None`
    /// for midline structures and unknown codes.
    pub fn fs_code_side(&self, code: u32) -> Option<Laterality> {
        let e = self.by_fs_code(code)?;
        match e.laterality {
            Laterality::Left => Some(Laterality::Left),
            Laterality::Right => Some(Laterality::Right),
            Laterality::MergedPair if code == e.fs_code => Some(Laterality::Left),
            Laterality::MergedPair => Some(Laterality::Right),
            Laterality::Midline => None,
        }
    }

    /// Cortical regions that receive no one-voxel padding in the brain mask
    /// (lateral orbitofrontal and pars orbitalis).
    pub fn is_padding_excluded(&self, internal_id: u16) -> bool {
        self.get(internal_id)
            .map(|e| e.is_cortical() && matches!(e.fs_code % CORTICAL_HEMI_OFFSET, 12 | 19))
            .unwrap_or(false)
    }
}

pub fn read_label_table(path: impl AsRef<Path>) -> Result<LabelTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    LabelTable::parse(&text)
}

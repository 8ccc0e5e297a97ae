use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cortexkit::netref::ViewWeights;
use cortexkit::Laterality;

/// Pipeline stages in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Conform,
    Mask,
    Surf,
    Sphere,
    Map,
    Thickness,
    Metrics,
    Stats,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Conform,
        Stage::Mask,
        Stage::Surf,
        Stage::Sphere,
        Stage::Map,
        Stage::Thickness,
        Stage::Metrics,
        Stage::Stats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Conform => "conform",
            Stage::Mask => "mask",
            Stage::Surf => "surf",
            Stage::Sphere => "sphere",
            Stage::Map => "map",
            Stage::Thickness => "thickness",
            Stage::Metrics => "metrics",
            Stage::Stats => "stats",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL.into_iter().find(|st| st.name() == s.trim()).ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HemiSide {
    Lh,
    Rh,
}

impl HemiSide {
    pub fn prefix(self) -> &'static str {
        match self {
            HemiSide::Lh => "lh",
            HemiSide::Rh => "rh",
        }
    }

    pub fn laterality(self) -> Laterality {
        match self {
            HemiSide::Lh => Laterality::Left,
            HemiSide::Rh => Laterality::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Hemi {
    Left,
    Right,
    #[default]
    Both,
}

impl Hemi {
    pub fn sides(self) -> Vec<HemiSide> {
        match self {
            Hemi::Left => vec![HemiSide::Lh],
            Hemi::Right => vec![HemiSide::Rh],
            Hemi::Both => vec![HemiSide::Lh, HemiSide::Rh],
        }
    }
}

impl FromStr for Hemi {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "left" | "lh" => Ok(Hemi::Left),
            "right" | "rh" => Ok(Hemi::Right),
            "both" => Ok(Hemi::Both),
            other => Err(format!("hemi must be left, right or both, got {other:?}")),
        }
    }
}

pub fn parse_view_weights(s: &str) -> Result<ViewWeights, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| format!("bad view weight {p:?}")))
        .collect::<Result<_, _>>()?;
    let [c, a, sg] = nums[..] else {
        return Err(format!("view weights need three values, got {}", nums.len()));
    };
    let w = ViewWeights { coronal: c, axial: a, sagittal: sg };
    w.validate().map_err(|e| e.to_string())?;
    Ok(w)
}

fn parse_axes(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad axis {p:?}")))
        .collect::<Result<_, _>>()?;
    let [a, b, c] = v[..] else {
        return Err("axes need three values".into());
    };
    let mut sorted = [a, b, c];
    sorted.sort_unstable();
    if sorted != [0, 1, 2] {
        return Err(format!("axes must be a permutation of 0,1,2, got {s}"));
    }
    Ok([a, b, c])
}

/// Everything one pipeline run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub subject_dir: PathBuf,
    /// `None` uses the built-in DKT table.
    pub label_table: Option<PathBuf>,
    pub stages: Vec<Stage>,
    pub threads: usize,
    pub hemi: Hemi,
    pub seed: u64,
    pub view_weights: ViewWeights,
    pub fwhm_mm: f64,
    /// Anatomical axis receiving each of the three eigenfunctions.
    pub axes: [usize; 3],
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            subject_dir: PathBuf::from("."),
            label_table: None,
            stages: Stage::ALL.to_vec(),
            threads: 1,
            hemi: Hemi::Both,
            seed: 0,
            view_weights: ViewWeights::default(),
            fwhm_mm: 15.0,
            axes: [0, 1, 2],
        }
    }
}

pub const CONFIG_KEYS: [&str; 9] =
    ["subject_dir", "label_table", "stages", "threads", "hemi", "seed", "view_weights", "fwhm", "axes"];

/// Flat `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key = value", i + 1));
        };
        let k = k.trim();
        if !CONFIG_KEYS.contains(&k) {
            return Err(format!("config line {}: unknown key {k:?}", i + 1));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl PipelineConfig {
    /// Applies `key = value` settings on top of `self`. Call [`Self::validate`]
    /// once every layer is applied.
    pub fn apply(&mut self, settings: &BTreeMap<String, String>) -> Result<(), String> {
        for (k, v) in settings {
            match k.as_str() {
                "subject_dir" => self.subject_dir = PathBuf::from(v),
                "label_table" => self.label_table = Some(PathBuf::from(v)),
                "stages" => {
                    self.stages = v.split(',').map(Stage::from_str).collect::<Result<_, _>>()?;
                }
                "threads" => {
                    self.threads = v.parse().map_err(|_| format!("bad threads {v:?}"))?;
                }
                "hemi" => self.hemi = v.parse()?,
                "seed" => self.seed = v.parse().map_err(|_| format!("bad seed {v:?}"))?,
                "view_weights" => self.view_weights = parse_view_weights(v)?,
                "fwhm" => self.fwhm_mm = v.parse().map_err(|_| format!("bad fwhm {v:?}"))?,
                "axes" => self.axes = parse_axes(v)?,
                other => return Err(format!("unknown key {other:?}")),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.threads == 0 {
            return Err("threads must be at least 1".into());
        }
        if self.stages.windows(2).any(|w| w[0] >= w[1]) {
            return Err("stages must be listed once each, in pipeline order".into());
        }
        if !(self.fwhm_mm.is_finite() && self.fwhm_mm >= 0.0) {
            return Err(format!("fwhm must be nonnegative, got {}", self.fwhm_mm));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_config_file() {
        let text = "# subject settings\nsubject_dir = /data/s1\nthreads=4 # two hemis\nhemi = left\nview_weights = 1, 1, 0.5\n\nstages = surf,sphere\n";
        let kv = parse_config_text(text).unwrap();
        let mut c = PipelineConfig::default();
        c.apply(&kv).unwrap();
        assert_eq!(c.subject_dir, PathBuf::from("/data/s1"));
        assert_eq!(c.threads, 4);
        assert_eq!(c.hemi, Hemi::Left);
        assert_eq!(c.stages, vec![Stage::Surf, Stage::Sphere]);
        assert_eq!(c.view_weights.sagittal, 0.5);
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(parse_config_text("threads 4").is_err());
        assert!(parse_config_text("colour = red").is_err());
        let mut c = PipelineConfig::default();
        let kv = parse_config_text("threads = 0").unwrap();
        c.apply(&kv).unwrap();
        assert!(c.validate().is_err());
        let kv = parse_config_text("stages = sphere,surf").unwrap();
        let mut c = PipelineConfig::default();
        c.apply(&kv).unwrap();
        assert!(c.validate().is_err());
        assert!(c.apply(&parse_config_text("hemi = up").unwrap()).is_err());
        assert!(parse_view_weights("0,0,0").is_err());
        assert!(parse_view_weights("1,2").is_err());
        assert!(parse_axes("0,0,1").is_err());
        assert_eq!(parse_axes("2,0,1").unwrap(), [2, 0, 1]);
    }
}

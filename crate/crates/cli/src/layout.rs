//! Where each stage reads and writes inside a subject directory.

use std::path::{Path, PathBuf};

use crate::config::{HemiSide, Stage};

pub const VIEWS: [&str; 3] = ["coronal", "axial", "sagittal"];

#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.name())
    }

    fn stage_file(&self, stage: Stage, name: &str) -> PathBuf {
        self.stage_dir(stage).join(name)
    }

    fn hemi_file(&self, stage: Stage, h: HemiSide, name: &str) -> PathBuf {
        self.stage_file(stage, &format!("{}.{name}", h.prefix()))
    }

    /// First existing `input/<stem>.fslv` or `.nii`; the FSLV path otherwise.
    fn input_volume(&self, stem: &str) -> PathBuf {
        let dir = self.root.join("input");
        let nii = dir.join(format!("{stem}.nii"));
        let fslv = dir.join(format!("{stem}.fslv"));
        if !fslv.exists() && nii.exists() {
            nii
        } else {
            fslv
        }
    }

    pub fn input_labels(&self) -> PathBuf {
        self.input_volume("labels")
    }

    pub fn input_t1(&self) -> PathBuf {
        self.input_volume("t1")
    }

    pub fn input_truth(&self) -> PathBuf {
        self.input_volume("truth")
    }

    pub fn input_probs(&self, view: &str) -> PathBuf {
        self.root.join("input").join("probs").join(format!("{view}.fslv"))
    }

    pub fn conformed_labels(&self) -> PathBuf {
        self.stage_file(Stage::Conform, "labels.fslv")
    }

    pub fn conformed_labels_fs(&self) -> PathBuf {
        self.stage_file(Stage::Conform, "labels_fs.fslv")
    }

    pub fn conformed_t1(&self) -> PathBuf {
        self.stage_file(Stage::Conform, "t1.fslv")
    }

    pub fn conformed_truth_fs(&self) -> PathBuf {
        self.stage_file(Stage::Conform, "truth_fs.fslv")
    }

    pub fn brainmask(&self) -> PathBuf {
        self.stage_file(Stage::Mask, "brainmask.fslv")
    }

    pub fn white_mask(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Mask, h, "white.fslv")
    }

    pub fn pial_mask(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Mask, h, "pial.fslv")
    }

    pub fn white_surface(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Surf, h, "white.off")
    }

    pub fn pial_surface(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Surf, h, "pial.off")
    }

    pub fn sphere(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Sphere, h, "sphere.off")
    }

    pub fn embedding(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Sphere, h, "embedding.csv")
    }

    pub fn surface_labels(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Map, h, "labels.csv")
    }

    pub fn thickness(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Thickness, h, "thickness.csv")
    }

    pub fn thickness_smoothed(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Thickness, h, "thickness.smooth.csv")
    }

    pub fn curvature(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Thickness, h, "curv.csv")
    }

    pub fn surface_metrics(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Metrics, h, "surface.csv")
    }

    pub fn label_metrics(&self) -> PathBuf {
        self.stage_file(Stage::Metrics, "labels.csv")
    }

    pub fn metric_summary(&self) -> PathBuf {
        self.stage_file(Stage::Metrics, "summary.csv")
    }

    pub fn roi_stats(&self, h: HemiSide) -> PathBuf {
        self.hemi_file(Stage::Stats, h, "aparc.csv")
    }

    pub fn group_measures(&self) -> PathBuf {
        self.root.join("group").join("measures.csv")
    }

    pub fn group_repeats(&self) -> PathBuf {
        self.root.join("group").join("repeats.csv")
    }

    pub fn glm(&self) -> PathBuf {
        self.stage_file(Stage::Stats, "glm.csv")
    }

    pub fn icc(&self) -> PathBuf {
        self.stage_file(Stage::Stats, "icc.csv")
    }

    pub fn timing(&self) -> PathBuf {
        self.root.join("timing.csv")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

//! Stage implementations and the runner.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cortexkit::evalstats::{
    dice_per_label, glm_group, icc_absolute, Covariate, EvalError, MeasureTable,
};
use cortexkit::io::{
    read_label_table, read_mesh, read_vertex_map, read_volume, write_mesh, write_vertex_map, CsvTable, IoError,
    LabelTable, StatsRow, Volume, VolumeHeader,
};
use cortexkit::netref::{view_aggregate, ProbVolume};
use cortexkit::surfgen::{
    euler_defects, marching_cubes, mesh_quality, metric_distortion, self_intersections, spectral_sphere_map_with,
    EigenOptions, SurfError, TriangleMesh,
};
use cortexkit::surfmeasure::{
    area_weighted_mean, mean_curvature, roi_stats, sample_labels_to_surface, smooth_scalar, thickness,
    MeasureError, SamplingOptions, SmoothSpec, SurfaceLabeling,
};
use cortexkit::voxelgrid::{
    conform_intensity, conform_labels, fill_holes, largest_component, lateralize, make_brainmask, Connectivity,
    GridError, LabelSpace, ScalarVolume, StructuringElement,
};
use cortexkit::{BinaryMask, LabelVolume, Laterality};

use crate::config::{HemiSide, PipelineConfig, Stage};
use crate::layout::{Layout, VIEWS};

/// FreeSurfer codes left out of the white-surface fill: cerebellum,
/// hippocampus and amygdala.
const NOT_WHITE: [u32; 8] = [7, 8, 17, 18, 46, 47, 53, 54];
const CORTICAL_OFFSET: u32 = 1000;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{}: {reason}", path.display())]
    Input { path: PathBuf, reason: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{stage} failed numerically: {reason}")]
    Numerical { stage: Stage, reason: String },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input { .. } | PipelineError::Config(_) => 1,
            PipelineError::Numerical { .. } => 2,
        }
    }

    fn input(path: &Path, reason: impl ToString) -> Self {
        PipelineError::Input { path: path.to_path_buf(), reason: reason.to_string() }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(IoError) -> PipelineError + '_ {
    move |e| PipelineError::input(path, e)
}

fn grid_err(stage: Stage, path: &Path) -> impl FnOnce(GridError) -> PipelineError + '_ {
    move |e| match e {
        GridError::Io(e) => PipelineError::input(path, e),
        GridError::UnknownLabel { .. }
        | GridError::WrongDtype { .. }
        | GridError::MissingWhiteMatter { .. }
        | GridError::NoWhiteMatterLabels
        | GridError::EmptyVolume => PipelineError::input(path, e),
        other => PipelineError::Numerical { stage, reason: other.to_string() },
    }
}

fn surf_err(stage: Stage, path: &Path) -> impl FnOnce(SurfError) -> PipelineError + '_ {
    move |e| match e {
        SurfError::EmptyMask | SurfError::IndexOutOfRange { .. } | SurfError::DegenerateFace { .. } => {
            PipelineError::input(path, e)
        }
        other => PipelineError::Numerical { stage, reason: format!("{}: {other}", path.display()) },
    }
}

fn measure_err(stage: Stage, path: &Path) -> impl FnOnce(MeasureError) -> PipelineError + '_ {
    move |e| match e {
        MeasureError::Surf(s) => surf_err(stage, path)(s),
        MeasureError::LengthMismatch { .. } | MeasureError::EmptyMesh | MeasureError::OutOfBounds { .. } => {
            PipelineError::input(path, e)
        }
        other => PipelineError::Numerical { stage, reason: other.to_string() },
    }
}

fn eval_err(stage: Stage, path: &Path) -> impl FnOnce(EvalError) -> PipelineError + '_ {
    move |e| match e {
        EvalError::InvalidInput(_) | EvalError::GridMismatch(_) => PipelineError::input(path, e),
        other => PipelineError::Numerical { stage, reason: format!("{}: {other}", path.display()) },
    }
}

fn need(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(PipelineError::input(path, "required input is missing (run the earlier stage first)"))
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| PipelineError::input(path, e))
}

fn read_vol(path: &Path) -> Result<Volume> {
    need(path)?;
    read_volume(path).map_err(io_err(path))
}

fn read_labels(stage: Stage, path: &Path) -> Result<LabelVolume> {
    LabelVolume::from_volume(&read_vol(path)?).map_err(grid_err(stage, path))
}

fn read_mask(path: &Path) -> Result<BinaryMask> {
    Ok(BinaryMask::from_volume(&read_vol(path)?))
}

fn write_vol(v: &Volume, path: &Path) -> Result<()> {
    cortexkit::io::write_volume(&v.header, &v.data, path).map_err(io_err(path))
}

fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    need(path)?;
    read_mesh(path).map_err(io_err(path))
}

fn save_mesh(m: &TriangleMesh, path: &Path) -> Result<()> {
    write_mesh(m, path).map_err(io_err(path))
}

fn load_map(path: &Path) -> Result<Vec<f64>> {
    need(path)?;
    read_vertex_map(path).map_err(io_err(path))
}

fn save_map(values: &[f64], comments: &[String], path: &Path) -> Result<()> {
    write_vertex_map(values, comments, path).map_err(io_err(path))
}

fn save_csv(t: &CsvTable, path: &Path) -> Result<()> {
    t.write(path).map_err(io_err(path))
}

fn stats_table(rows: &[StatsRow]) -> CsvTable {
    let mut t = CsvTable::new(["roi", "measure", "value"]);
    for r in rows {
        t.push([r.roi.clone(), r.measure.clone(), r.value.to_string()]);
    }
    t
}

fn row(roi: &str, measure: &str, value: f64) -> StatsRow {
    StatsRow { roi: roi.into(), measure: measure.into(), value }
}

/// Shared, read-only state of one run.
struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    layout: Layout,
    table: LabelTable,
}

fn conformed_header(h: &VolumeHeader) -> VolumeHeader {
    let d = h.dims;
    let s = h.spacing();
    let dims = [0, 1, 2].map(|a| ((d[a] as f64 * s[a]).round() as usize).max(1));
    VolumeHeader::new(dims, [1.0; 3], h.dtype)
}

/// Class ids of a stacked probability file: background then the table ids.
fn prob_classes(table: &LabelTable, sagittal: bool) -> Vec<u16> {
    let mut ids: Vec<u16> = if sagittal {
        table.sagittal_classes()
    } else {
        let mut v: Vec<u16> = table.entries().iter().map(|e| e.internal_id).collect();
        v.sort_unstable();
        v
    };
    ids.insert(0, 0);
    ids
}

fn aggregate_views(ctx: &Ctx) -> Result<LabelVolume> {
    let mut probs = Vec::new();
    for view in VIEWS {
        let path = ctx.layout.input_probs(view);
        let vol = read_vol(&path)?;
        let p = ProbVolume::from_stacked_volume(&vol, prob_classes(&ctx.table, view == "sagittal"))
            .map_err(|e| PipelineError::input(&path, e))?;
        probs.push(p);
    }
    let path = ctx.layout.input_probs(VIEWS[0]);
    let (labels, _) = view_aggregate(&probs[0], &probs[1], &probs[2], &ctx.table, ctx.cfg.view_weights)
        .map_err(|e| PipelineError::input(&path, e))?;
    Ok(labels)
}

fn stage_conform(ctx: &Ctx) -> Result<()> {
    let l = &ctx.layout;
    ensure_dir(&l.stage_dir(Stage::Conform))?;
    let probs_present = VIEWS.iter().any(|v| l.input_probs(v).exists());
    let (labels, src) = if probs_present {
        log::info!("aggregating view probabilities");
        (aggregate_views(ctx)?, l.input_probs(VIEWS[0]))
    } else {
        let p = l.input_labels();
        (read_labels(Stage::Conform, &p)?, p)
    };
    labels.validate(&ctx.table, LabelSpace::Internal).map_err(grid_err(Stage::Conform, &src))?;
    let target = conformed_header(&labels.header);
    let conformed = conform_labels(&labels, &target).map_err(grid_err(Stage::Conform, &src))?;
    let fs = lateralize(&conformed, &ctx.table).map_err(grid_err(Stage::Conform, &src))?;
    write_vol(&conformed.to_volume(), &l.conformed_labels())?;
    write_vol(&fs.to_volume(), &l.conformed_labels_fs())?;

    let t1 = l.input_t1();
    if t1.is_file() {
        let v = ScalarVolume::from_volume(&read_vol(&t1)?);
        let target = conformed_header(&v.header);
        let c = conform_intensity(&v, &target).map_err(grid_err(Stage::Conform, &t1))?;
        write_vol(&c.to_volume(), &l.conformed_t1())?;
    }
    let truth = l.input_truth();
    if truth.is_file() {
        let t = read_labels(Stage::Conform, &truth)?;
        t.validate(&ctx.table, LabelSpace::Internal).map_err(grid_err(Stage::Conform, &truth))?;
        let c = conform_labels(&t, &conformed_header(&t.header)).map_err(grid_err(Stage::Conform, &truth))?;
        let fs = lateralize(&c, &ctx.table).map_err(grid_err(Stage::Conform, &truth))?;
        write_vol(&fs.to_volume(), &l.conformed_truth_fs())?;
    }
    Ok(())
}

fn stage_mask(ctx: &Ctx) -> Result<()> {
    let l = &ctx.layout;
    let labels = read_labels(Stage::Mask, &l.conformed_labels())?;
    ensure_dir(&l.stage_dir(Stage::Mask))?;
    let bm = make_brainmask(&labels, &ctx.table, true, StructuringElement::brainmask_default());
    write_vol(&bm.to_volume(), &l.brainmask())
}

fn side_of(table: &LabelTable, code: u16, side: Laterality) -> bool {
    code != 0 && table.fs_code_side(u32::from(code)) == Some(side)
}

fn stage_mask_hemi(ctx: &Ctx, h: HemiSide) -> Result<()> {
    let l = &ctx.layout;
    let fs = read_labels(Stage::Mask, &l.conformed_labels_fs())?;
    let side = h.laterality();
    let t = &ctx.table;
    let white_raw = fs.mask_of(|c| {
        side_of(t, c, side) && u32::from(c) < CORTICAL_OFFSET && !NOT_WHITE.contains(&u32::from(c))
    });
    let white = fill_holes(&largest_component(&white_raw, Connectivity::Face6));
    let cortex = fs.mask_of(|c| side_of(t, c, side) && u32::from(c) >= CORTICAL_OFFSET);
    let pial = fill_holes(&largest_component(&white.union(&cortex), Connectivity::Face6));
    write_vol(&white.to_volume(), &l.white_mask(h))?;
    write_vol(&pial.to_volume(), &l.pial_mask(h))
}

fn stage_surf(ctx: &Ctx, h: HemiSide) -> Result<()> {
    let l = &ctx.layout;
    ensure_dir(&l.stage_dir(Stage::Surf))?;
    for (mask, out) in [(l.white_mask(h), l.white_surface(h)), (l.pial_mask(h), l.pial_surface(h))] {
        let m = read_mask(&mask)?;
        let mesh = marching_cubes(&m).map_err(surf_err(Stage::Surf, &mask))?;
        save_mesh(&mesh, &out)?;
    }
    Ok(())
}

fn stage_sphere(ctx: &Ctx, h: HemiSide) -> Result<()> {
    let l = &ctx.layout;
    let wp = l.white_surface(h);
    let white = load_mesh(&wp)?;
    ensure_dir(&l.stage_dir(Stage::Sphere))?;
    let (sphere, emb) = spectral_sphere_map_with(&white, EigenOptions::default(), ctx.cfg.axes)
        .map_err(surf_err(Stage::Sphere, &wp))?;
    save_mesh(&sphere, &l.sphere(h))?;
    let mut text = String::new();
    for (i, lam) in emb.eigenvalues.iter().enumerate() {
        text.push_str(&format!("# lambda{} = {lam}\n", i + 1));
    }
    let mut t = CsvTable::new(["vertex_id", "f1", "f2", "f3"]);
    for v in 0..white.vertices.len() {
        let e = emb.vector(v);
        t.push([v.to_string(), e[0].to_string(), e[1].to_string(), e[2].to_string()]);
    }
    text.push_str(&t.to_csv_string());
    let p = l.embedding(h);
    std::fs::write(&p, text).map_err(|e| PipelineError::input(&p, e))
}

/// Internal-id labels of one hemisphere; everything else becomes 0.
fn hemi_labels(ctx: &Ctx, h: HemiSide) -> Result<LabelVolume> {
    let l = &ctx.layout;
    let internal = read_labels(Stage::Map, &l.conformed_labels())?;
    let fs = read_labels(Stage::Map, &l.conformed_labels_fs())?;
    let side = h.laterality();
    let mut out = internal.clone();
    for (o, &c) in out.labels.iter_mut().zip(&fs.labels) {
        if !side_of(&ctx.table, c, side) {
            *o = 0;
        }
    }
    Ok(out)
}

fn stage_map(ctx: &Ctx, h: HemiSide) -> Result<()> {
    let l = &ctx.layout;
    let wp = l.white_surface(h);
    let white = load_mesh(&wp)?;
    let labels = hemi_labels(ctx, h)?;
    ensure_dir(&l.stage_dir(Stage::Map))?;
    let lab = sample_labels_to_surface(&labels, &white, &ctx.table, SamplingOptions::default())
        .map_err(measure_err(Stage::Map, &wp))?;
    let values: Vec<f64> = lab.labels.iter().map(|&x| f64::from(x)).collect();
    save_map(&values, &["internal label id per white vertex".into()], &l.surface_labels(h))
}

fn stage_thickness(ctx: &Ctx, h: HemiSide) -> Result<()> {
    let l = &ctx.layout;
    let (wp, pp) = (l.white_surface(h), l.pial_surface(h));
    let white = load_mesh(&wp)?;
    let pial = load_mesh(&pp)?;
    ensure_dir(&l.stage_dir(Stage::Thickness))?;
    let th = thickness(&white, &pial).map_err(measure_err(Stage::Thickness, &wp))?;
    let curv = mean_curvature(&white).map_err(measure_err(Stage::Thickness, &wp))?;
    let smooth = if ctx.cfg.fwhm_mm > 0.0 {
        let spec = SmoothSpec::new(ctx.cfg.fwhm_mm).map_err(measure_err(Stage::Thickness, &wp))?;
        smooth_scalar(&th.values, &white, spec).map_err(measure_err(Stage::Thickness, &wp))?
    } else {
        th.values.clone()
    };
    save_map(&th.values, &["thickness in mm per white vertex".into()], &l.thickness(h))?;
    save_map(&curv, &["mean curvature in 1/mm per white vertex".into()], &l.curvature(h))?;
    save_map(&smooth, &[format!("thickness smoothed at {} mm FWHM", ctx.cfg.fwhm_mm)], &l.thickness_smoothed(h))
}

fn stage_metrics(ctx: &Ctx) -> Result<()> {
    let l = &ctx.layout;
    ensure_dir(&l.stage_dir(Stage::Metrics))?;
    let truth = l.conformed_truth_fs();
    if !truth.is_file() {
        log::info!("no ground truth; skipping volumetric metrics");
        return Ok(());
    }
    let gt = read_labels(Stage::Metrics, &truth)?;
    let pred = read_labels(Stage::Metrics, &l.conformed_labels_fs())?;
    let scores = dice_per_label(&gt, &pred, &ctx.table, LabelSpace::FreeSurfer).map_err(eval_err(Stage::Metrics, &truth))?;
    let na = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
    let mut t = CsvTable::new(["label", "dice", "avg_hd"]);
    for s in &scores.labels {
        t.push([s.label.to_string(), na(s.dice), na(s.avg_hd)]);
    }
    save_csv(&t, &l.label_metrics())?;
    let mut rows = Vec::new();
    if let Some(v) = scores.cortical_mean_dice {
        rows.push(row("cortical", "mean_dice", v));
    }
    if let Some(v) = scores.subcortical_mean_dice {
        rows.push(row("subcortical", "mean_dice", v));
    }
    save_csv(&stats_table(&rows), &l.metric_summary())
}

fn surface_rows(name: &str, mesh: &TriangleMesh, path: &Path, rows: &mut Vec<StatsRow>) -> Result<()> {
    let topo = euler_defects(mesh).map_err(surf_err(Stage::Metrics, path))?;
    let (q, qmean) = mesh_quality(mesh);
    let qmin = q.iter().copied().fold(f64::INFINITY, f64::min);
    rows.push(row(name, "vertices", mesh.vertices.len() as f64));
    rows.push(row(name, "faces", mesh.faces.len() as f64));
    rows.push(row(name, "euler", topo.euler as f64));
    rows.push(row(name, "genus", topo.genus as f64));
    rows.push(row(name, "components", topo.components as f64));
    rows.push(row(name, "defect_count", topo.defect_count as f64));
    rows.push(row(name, "self_intersections", self_intersections(mesh).0 as f64));
    rows.push(row(name, "quality_mean", qmean));
    rows.push(row(name, "quality_min", qmin));
    Ok(())
}

fn stage_metrics_hemi(ctx: &Ctx, h: HemiSide) -> Result<()> {
    let l = &ctx.layout;
    let (wp, pp, sp) = (l.white_surface(h), l.pial_surface(h), l.sphere(h));
    let white = load_mesh(&wp)?;
    let pial = load_mesh(&pp)?;
    let sphere = load_mesh(&sp)?;
    let th = load_map(&l.thickness(h))?;
    let mut rows = Vec::new();
    surface_rows("white", &white, &wp, &mut rows)?;
    surface_rows("pial", &pial, &pp, &mut rows)?;
    let distortion = metric_distortion(&white, &sphere).map_err(surf_err(Stage::Metrics, &sp))?;
    let norm_err = sphere
        .vertices
        .iter()
        .map(|v| ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    rows.push(row("sphere", "metric_distortion", distortion));
    rows.push(row("sphere", "signed_volume", sphere.signed_volume()));
    rows.push(row("sphere", "max_norm_error", norm_err));
    let mean_t = area_weighted_mean(&th, &white).map_err(measure_err(Stage::Metrics, &wp))?;
    rows.push(row("thickness", "mean_mm", mean_t));
    save_csv(&stats_table(&rows), &l.surface_metrics(h))
}

fn stage_stats_hemi(ctx: &Ctx, h: HemiSide) -> Result<()> {
    let l = &ctx.layout;
    let wp = l.white_surface(h);
    let white = load_mesh(&wp)?;
    let lab_path = l.surface_labels(h);
    let labels: Vec<u16> = load_map(&lab_path)?
        .into_iter()
        .map(|x| if x >= 0.0 && x <= f64::from(u16::MAX) && x.fract() == 0.0 { Ok(x as u16) } else { Err(x) })
        .collect::<std::result::Result<_, _>>()
        .map_err(|x| PipelineError::input(&lab_path, format!("label value {x} is not an id")))?;
    let th = load_map(&l.thickness(h))?;
    let curv = load_map(&l.curvature(h))?;
    ensure_dir(&l.stage_dir(Stage::Stats))?;
    let stats = roi_stats(&SurfaceLabeling { labels }, &th, &curv, &white).map_err(measure_err(Stage::Stats, &wp))?;
    let mut rows = Vec::new();
    for s in stats {
        let name = ctx.table.get(s.roi).map(|e| e.name.clone()).unwrap_or_else(|| s.roi.to_string());
        rows.push(row(&name, "thickness_mean", s.mean_thickness));
        rows.push(row(&name, "curvature_mean_abs", s.mean_abs_curvature));
        rows.push(row(&name, "area_mm2", s.area_mm2));
    }
    save_csv(&stats_table(&rows), &l.roi_stats(h))
}

fn read_csv(path: &Path) -> Result<CsvTable> {
    CsvTable::read(path).map_err(io_err(path))
}

fn stage_stats(ctx: &Ctx) -> Result<()> {
    let l = &ctx.layout;
    ensure_dir(&l.stage_dir(Stage::Stats))?;
    let gm = l.group_measures();
    if gm.is_file() {
        let table = MeasureTable::from_csv(&read_csv(&gm)?).map_err(eval_err(Stage::Stats, &gm))?;
        let mut out = CsvTable::new(["roi", "beta", "t", "signed_p"]);
        for roi in &table.rois {
            let mut cov = vec![Covariate::Age, Covariate::Sex];
            if roi.contains("volume") {
                cov.push(Covariate::HeadSize);
            }
            let r = glm_group(&table, roi, &cov).map_err(eval_err(Stage::Stats, &gm))?;
            out.push([roi.clone(), r.beta.to_string(), r.t.to_string(), r.signed_p.to_string()]);
        }
        save_csv(&out, &l.glm())?;
    }
    let rp = l.group_repeats();
    if rp.is_file() {
        let t = read_csv(&rp)?;
        if t.header.len() < 4 || t.header[0] != "subject" || t.header[1] != "roi" {
            return Err(PipelineError::input(&rp, "expected columns subject,roi then two or more repeats"));
        }
        let mut rois: Vec<String> = Vec::new();
        let mut data: Vec<Vec<Vec<f64>>> = Vec::new();
        for (i, r) in t.rows.iter().enumerate() {
            let vals = r[2..]
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| PipelineError::input(&rp, format!("row {}: bad measurement", i + 2)))?;
            let k = match rois.iter().position(|x| x == &r[1]) {
                Some(k) => k,
                None => {
                    rois.push(r[1].clone());
                    data.push(Vec::new());
                    rois.len() - 1
                }
            };
            data[k].push(vals);
        }
        let mut out = CsvTable::new(["roi", "icc", "lower", "upper"]);
        for (roi, rows) in rois.iter().zip(&data) {
            let r = icc_absolute(rows).map_err(eval_err(Stage::Stats, &rp))?;
            out.push([roi.clone(), r.icc.to_string(), r.lower.to_string(), r.upper.to_string()]);
        }
        save_csv(&out, &l.icc())?;
    }
    Ok(())
}

fn run_global(stage: Stage, ctx: &Ctx) -> Option<Result<()>> {
    Some(match stage {
        Stage::Conform => stage_conform(ctx),
        Stage::Mask => stage_mask(ctx),
        Stage::Metrics => stage_metrics(ctx),
        Stage::Stats => stage_stats(ctx),
        _ => return None,
    })
}

fn run_hemi(stage: Stage, ctx: &Ctx, h: HemiSide) -> Option<Result<()>> {
    Some(match stage {
        Stage::Mask => stage_mask_hemi(ctx, h),
        Stage::Surf => stage_surf(ctx, h),
        Stage::Sphere => stage_sphere(ctx, h),
        Stage::Map => stage_map(ctx, h),
        Stage::Thickness => stage_thickness(ctx, h),
        Stage::Metrics => stage_metrics_hemi(ctx, h),
        Stage::Stats => stage_stats_hemi(ctx, h),
        Stage::Conform => return None,
    })
}

/// Wall time of one stage part.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub stage: Stage,
    pub hemi: &'static str,
    pub seconds: f64,
}

#[derive(Debug)]
pub struct RunReport {
    pub timings: Vec<Timing>,
    pub error: Option<PipelineError>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, PipelineError::exit_code)
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed().as_secs_f64())
}

fn run_stages(ctx: &Ctx, timings: &mut Vec<Timing>) -> Result<()> {
    let sides = ctx.cfg.hemi.sides();
    let parallel = ctx.cfg.threads >= 2 && sides.len() > 1;
    for &stage in &ctx.cfg.stages {
        log::info!("stage {stage}");
        let (res, secs) = timed(|| run_global(stage, ctx));
        if let Some(res) = res {
            timings.push(Timing { stage, hemi: "both", seconds: secs });
            res?;
        }
        let results: Vec<(HemiSide, Option<Result<()>>, f64)> = if parallel {
            std::thread::scope(|s| {
                let handles: Vec<_> = sides
                    .iter()
                    .map(|&h| s.spawn(move || (h, timed(|| run_hemi(stage, ctx, h)))))
                    .collect();
                handles
                    .into_iter()
                    .map(|j| {
                        let (h, (r, t)) = j.join().expect("hemisphere worker panicked");
                        (h, r, t)
                    })
                    .collect()
            })
        } else {
            sides
                .iter()
                .map(|&h| {
                    let (r, t) = timed(|| run_hemi(stage, ctx, h));
                    (h, r, t)
                })
                .collect()
        };
        let mut first_err = None;
        for (h, r, t) in results {
            if let Some(r) = r {
                timings.push(Timing { stage, hemi: h.prefix(), seconds: t });
                if let Err(e) = r {
                    first_err.get_or_insert(e);
                }
            }
        }
        if let Some(e) = first_err {
            return Err(e);
        }
    }
    Ok(())
}

fn write_timing(layout: &Layout, timings: &[Timing]) {
    let mut t = CsvTable::new(["stage", "hemi", "seconds"]);
    for r in timings {
        t.push([r.stage.name().to_string(), r.hemi.to_string(), format!("{:.6}", r.seconds)]);
    }
    if let Err(e) = std::fs::create_dir_all(layout.root()).map_err(|e| e.to_string()).and_then(|_| {
        t.write(layout.timing()).map_err(|e| e.to_string())
    }) {
        log::error!("could not write timing report: {e}");
    }
}

/// Runs the configured stages. The timing report is written whether or not
/// a stage fails.
pub fn run(cfg: &PipelineConfig) -> RunReport {
    let layout = Layout::new(&cfg.subject_dir);
    let mut timings = Vec::new();
    let result = (|| {
        cfg.validate().map_err(PipelineError::Config)?;
        if !cfg.subject_dir.is_dir() {
            return Err(PipelineError::input(&cfg.subject_dir, "subject directory does not exist"));
        }
        let table = match &cfg.label_table {
            Some(p) => {
                need(p)?;
                read_label_table(p).map_err(io_err(p))?
            }
            None => LabelTable::dkt(),
        };
        let ctx = Ctx { cfg, layout: layout.clone(), table };
        run_stages(&ctx, &mut timings)
    })();
    if cfg.subject_dir.is_dir() {
        write_timing(&layout, &timings);
    }
    if let Err(e) = &result {
        log::error!("{e}");
    }
    RunReport { timings, error: result.err() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformed_grid_keeps_field_of_view() {
        let h = VolumeHeader::new([10, 20, 7], [2.0, 0.5, 1.0], cortexkit::io::DType::U16);
        assert_eq!(conformed_header(&h).dims, [20, 10, 7]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(PipelineError::input(Path::new("x"), "gone").exit_code(), 1);
        assert_eq!(PipelineError::Config("bad".into()).exit_code(), 1);
        assert_eq!(PipelineError::Numerical { stage: Stage::Sphere, reason: String::new() }.exit_code(), 2);
    }
}

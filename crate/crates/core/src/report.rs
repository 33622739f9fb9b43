//! Experiment configs, deterministic report bundles, and report comparison.
//!
//! A config fully determines its outputs: re-running produces byte-identical
//! CSV and JSON. Floats are written with Rust's shortest-roundtrip formatting
//! and rows follow fixed (block, scale) orders.

use serde::{Deserialize, Serialize};

use crate::certify::{weak_expander_constants, WeakExpanderReport};
use crate::generators::{generate_sequence, Family, GeneratorSpec};
use crate::pipeline::{build_gap_ghost, kernel_fixed_vectors, onl_block_construction};
use crate::space::SpaceFile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Gap,
    Blocks,
    CertifyOnly,
}

/// A reproducible experiment: generator, pipeline, and parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub pipeline: PipelineKind,
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default)]
    pub s_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.generator.sizes.is_empty() {
            return Err(Error::Config("empty generator size list".into()));
        }
        if !(self.r > 0.0) {
            return Err(Error::Config(format!("scale r must be positive, got {}", self.r)));
        }
        match self.pipeline {
            PipelineKind::CertifyOnly => {
                if self.generator.family == Family::Complete {
                    return Err(Error::Config(
                        "the complete family demonstrates unbounded geometry and is \
                         excluded from certification pipelines"
                            .into(),
                    ));
                }
                if self.s_grid.is_empty() {
                    return Err(Error::Config("certify pipeline needs an S grid".into()));
                }
            }
            PipelineKind::Gap => {
                if self.generator.family == Family::Complete {
                    return Err(Error::Config(
                        "the complete family is excluded from certification pipelines".into(),
                    ));
                }
                if self.kappa.is_none() || self.eps.is_none() {
                    return Err(Error::Config("gap pipeline needs kappa and eps".into()));
                }
            }
            PipelineKind::Blocks => {
                if self.count.is_none() {
                    return Err(Error::Config("block pipeline needs a count".into()));
                }
            }
        }
        Ok(())
    }
}

/// Named files produced by a run, in deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunBundle {
    pub files: Vec<(String, Vec<u8>)>,
}

impl RunBundle {
    pub fn write_to(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn weak_expander_csv(report: &WeakExpanderReport) -> String {
    let mut out = String::from("block,size,r,s,c,boundary,subset_size,center,exact\n");
    for e in &report.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            e.block,
            e.block_size,
            fmt_f64(report.r),
            fmt_f64(e.s),
            fmt_f64(e.c),
            e.boundary,
            e.subset_size,
            e.center,
            e.exact
        ));
    }
    out
}

pub fn decay_csv(out: &crate::pipeline::GapGhostOutput) -> String {
    let mut s = String::from("block,size,s_n,gap,g_n,e_n,top_eig,bound_2eps,applicable\n");
    for row in &out.ledger {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.block,
            row.block_size,
            fmt_f64(row.s_check),
            fmt_f64(row.gap),
            fmt_f64(row.g),
            fmt_f64(row.e),
            fmt_f64(row.top_eig),
            fmt_f64(2.0 * out.eps),
            row.applicable
        ));
    }
    s
}

pub fn block_ghost_csv(out: &crate::pipeline::BlockGhostOutput) -> String {
    let mut s = String::from("block,size,s_n,gap,g_n,e_n,top_eig,bound_2eps,applicable\n");
    for row in &out.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.block,
            row.support_size,
            fmt_f64(row.s),
            fmt_f64(row.top_eig_exact),
            fmt_f64(row.g),
            fmt_f64(row.e),
            fmt_f64(row.top_eig_poly),
            fmt_f64(2.0 * out.eps),
            row.bound_applies
        ));
    }
    s
}

pub fn localization_csv(profile: &crate::certify::LocalizationProfile) -> String {
    let mut s = String::from("operator,s,loc,center\n");
    for ((sv, loc), center) in
        profile.s_values.iter().zip(&profile.loc).zip(&profile.centers)
    {
        s.push_str(&format!(
            "{},{},{},{}\n",
            profile.operator,
            fmt_f64(*sv),
            fmt_f64(*loc),
            center
        ));
    }
    s
}

pub fn roe_csv(profile: &crate::certify::RoeMembershipProfile) -> String {
    let mut s = String::from("r,err\n");
    for (r, e) in profile.radii.iter().zip(&profile.err) {
        s.push_str(&format!("{},{}\n", fmt_f64(*r), fmt_f64(*e)));
    }
    s
}

pub fn ghost_decay_csv(report: &crate::certify::GhostDecayReport) -> String {
    let mut s = String::from("block,size,g_n,e_n\n");
    for row in &report.rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            row.block,
            row.block_size,
            fmt_f64(row.g),
            fmt_f64(row.e)
        ));
    }
    s
}

/// A minimal deterministic SVG polyline plot.
pub fn svg_line_plot(title: &str, xs: &[f64], ys: &[f64]) -> String {
    let (w, h, pad) = (640.0, 400.0, 48.0);
    let (xmin, xmax) = bounds(xs);
    let (ymin, ymax) = bounds(ys);
    let sx = |x: f64| pad + (x - xmin) / (xmax - xmin).max(1e-300) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - ymin) / (ymax - ymin).max(1e-300) * (h - 2.0 * pad);
    let mut points = String::new();
    for (x, y) in xs.iter().zip(ys) {
        points.push_str(&format!("{:.2},{:.2} ", sx(*x), sy(*y)));
    }
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" ",
            "viewBox=\"0 0 640 400\">\n",
            "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n",
            "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            "<line x1=\"48\" y1=\"352\" x2=\"592\" y2=\"352\" stroke=\"black\"/>\n",
            "<line x1=\"48\" y1=\"48\" x2=\"48\" y2=\"352\" stroke=\"black\"/>\n",
            "<text x=\"48\" y=\"368\" font-size=\"10\">{}</text>\n",
            "<text x=\"560\" y=\"368\" font-size=\"10\">{}</text>\n",
            "<text x=\"8\" y=\"352\" font-size=\"10\">{}</text>\n",
            "<text x=\"8\" y=\"56\" font-size=\"10\">{}</text>\n",
            "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            "</svg>\n"
        ),
        title,
        fmt_f64(xmin),
        fmt_f64(xmax),
        fmt_f64(ymin),
        fmt_f64(ymax),
        points.trim_end()
    )
}

fn bounds(vs: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vs {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Executes a config and assembles the deterministic report bundle.
pub fn run(config: &ExperimentConfig) -> Result<RunBundle> {
    config.validate()?;
    let box_space = generate_sequence(&config.generator)?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    files.push((
        "config.json".into(),
        serde_json::to_vec_pretty(config)?,
    ));
    files.push((
        "space.json".into(),
        serde_json::to_vec_pretty(&SpaceFile::from_box(&box_space))?,
    ));
    match config.pipeline {
        PipelineKind::CertifyOnly => {
            let report = weak_expander_constants(&box_space, config.r, &config.s_grid)?;
            files.push(("we.json".into(), serde_json::to_vec_pretty(&report)?));
            files.push(("we.csv".into(), weak_expander_csv(&report).into_bytes()));
            if config.svg {
                // c_n(R, S) against S for the last block.
                let last = box_space.block_count() - 1;
                let xs: Vec<f64> = report.s_values.clone();
                let ys: Vec<f64> = report
                    .s_values
                    .iter()
                    .map(|&s| report.entry(last, s).map(|e| e.c).unwrap_or(f64::NAN))
                    .collect();
                files.push((
                    "we.svg".into(),
                    svg_line_plot("weak-expander constant vs S", &xs, &ys).into_bytes(),
                ));
            }
        }
        PipelineKind::Gap => {
            let kappa = config.kappa.unwrap();
            let eps = config.eps.unwrap();
            let out = build_gap_ghost(&box_space, config.r, kappa, eps)?;
            let fixed = kernel_fixed_vectors(&out.op, &box_space, config.r, eps)?;
            files.push(("decay.csv".into(), decay_csv(&out).into_bytes()));
            files.push(("ledger.json".into(), serde_json::to_vec_pretty(&out.ledger)?));
            files.push(("fixed.json".into(), serde_json::to_vec_pretty(&fixed)?));
            files.push((
                "filter.json".into(),
                serde_json::to_vec_pretty(&out.approx)?,
            ));
            if config.svg {
                let xs: Vec<f64> = out.ledger.iter().map(|r| r.block as f64).collect();
                let ys: Vec<f64> = out.ledger.iter().map(|r| r.g).collect();
                files.push((
                    "decay.svg".into(),
                    svg_line_plot("max column norm vs block", &xs, &ys).into_bytes(),
                ));
            }
        }
        PipelineKind::Blocks => {
            let count = config.count.unwrap();
            let co = onl_block_construction(
                &box_space,
                config.r,
                count,
                None,
                crate::pipeline::localized_witness_provider,
            )?;
            let eps = config.eps.unwrap_or(0.01);
            let out = crate::pipeline::build_block_ghost(&co, &box_space, eps)?;
            files.push(("blocks.csv".into(), block_ghost_csv(&out).into_bytes()));
            files.push((
                "construction.json".into(),
                serde_json::to_vec_pretty(&construction_summary(&co))?,
            ));
        }
    }
    Ok(RunBundle { files })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionSummary {
    pub kappa: f64,
    pub c: f64,
    pub r: f64,
    pub side_is_even: bool,
    pub blocks: Vec<ConstructionBlockSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionBlockSummary {
    pub s: f64,
    pub support: Vec<usize>,
    pub witness_c: f64,
    pub group_index: usize,
    pub selected_norm: f64,
}

pub fn construction_summary(co: &crate::pipeline::ConstructionOutput) -> ConstructionSummary {
    ConstructionSummary {
        kappa: co.kappa,
        c: co.c,
        r: co.r,
        side_is_even: co.side_is_even,
        blocks: co
            .blocks
            .iter()
            .map(|b| ConstructionBlockSummary {
                s: b.s,
                support: b.support.clone(),
                witness_c: b.witness_c,
                group_index: b.group_index,
                selected_norm: b.selected_norm,
            })
            .collect(),
    }
}

/// Per-column comparison of two CSV reports with identical schemas.
#[derive(Debug, Clone, Serialize)]
pub struct DiffSummary {
    pub columns: Vec<ColumnDiff>,
    pub rows: usize,
    pub identical: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnDiff {
    pub name: String,
    /// Largest absolute difference over numeric cells; cell mismatch count
    /// for non-numeric columns.
    pub max_delta: f64,
    pub mismatches: usize,
}

pub fn compare_csv(a: &str, b: &str) -> Result<DiffSummary> {
    let pa: Vec<Vec<&str>> =
        a.lines().filter(|l| !l.is_empty()).map(|l| l.split(',').collect()).collect();
    let pb: Vec<Vec<&str>> =
        b.lines().filter(|l| !l.is_empty()).map(|l| l.split(',').collect()).collect();
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::SchemaMismatch("empty report".into()));
    }
    if pa[0] != pb[0] {
        return Err(Error::SchemaMismatch(format!(
            "headers differ: {:?} vs {:?}",
            pa[0], pb[0]
        )));
    }
    if pa.len() != pb.len() {
        return Err(Error::SchemaMismatch(format!(
            "row counts differ: {} vs {}",
            pa.len() - 1,
            pb.len() - 1
        )));
    }
    let header = &pa[0];
    let mut columns: Vec<ColumnDiff> = header
        .iter()
        .map(|name| ColumnDiff { name: name.to_string(), max_delta: 0.0, mismatches: 0 })
        .collect();
    for (ra, rb) in pa.iter().zip(&pb).skip(1) {
        if ra.len() != header.len() || rb.len() != header.len() {
            return Err(Error::SchemaMismatch("ragged row".into()));
        }
        for (c, (va, vb)) in ra.iter().zip(rb.iter()).enumerate() {
            match (va.parse::<f64>(), vb.parse::<f64>()) {
                (Ok(x), Ok(y)) => columns[c].max_delta = columns[c].max_delta.max((x - y).abs()),
                _ => {
                    if va != vb {
                        columns[c].mismatches += 1;
                    }
                }
            }
        }
    }
    let identical = columns.iter().all(|c| c.max_delta == 0.0 && c.mismatches == 0);
    Ok(DiffSummary { columns, rows: pa.len() - 1, identical })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycles_config() -> ExperimentConfig {
        ExperimentConfig {
            generator: GeneratorSpec {
                family: Family::Cycle,
                sizes: vec![8, 16, 32],
                degree: None,
                seed: 0,
            },
            pipeline: PipelineKind::CertifyOnly,
            r: 1.0,
            kappa: None,
            eps: None,
            s_grid: vec![1.0, 2.0, 3.0],
            count: None,
            svg: true,
        }
    }

    #[test]
    fn certify_run_produces_monotone_constants() {
        let bundle = run(&cycles_config()).unwrap();
        let csv = bundle
            .files
            .iter()
            .find(|(n, _)| n == "we.csv")
            .map(|(_, b)| String::from_utf8(b.clone()).unwrap())
            .unwrap();
        // c decreases along the S grid within each block.
        let mut per_block: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for line in csv.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            per_block
                .entry(cells[0].parse().unwrap())
                .or_default()
                .push(cells[4].parse().unwrap());
        }
        for (_, cs) in per_block {
            for w in cs.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn runs_are_byte_identical() {
        let config = cycles_config();
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_generator_is_a_schema_error() {
        let mut config = cycles_config();
        config.generator.sizes.clear();
        assert!(matches!(run(&config), Err(Error::Config(_))));
    }

    #[test]
    fn complete_family_is_excluded_from_certification() {
        let mut config = cycles_config();
        config.generator.family = Family::Complete;
        assert!(matches!(config.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn compare_detects_identity_and_schema_mismatch() {
        let a = "x,y\n1,2\n3,4\n";
        let diff = compare_csv(a, a).unwrap();
        assert!(diff.identical);

        let b = "x,y\n1,2\n3,5\n";
        let diff = compare_csv(a, b).unwrap();
        assert!(!diff.identical);
        assert_eq!(diff.columns[1].max_delta, 1.0);

        let c = "x,z\n1,2\n3,4\n";
        assert!(matches!(compare_csv(a, c), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn svg_plot_is_deterministic() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [0.5, 0.25, 0.125];
        assert_eq!(svg_line_plot("t", &xs, &ys), svg_line_plot("t", &xs, &ys));
    }
}

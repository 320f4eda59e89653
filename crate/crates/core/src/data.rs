//! Heterogeneous-domain data sets: representation, CSV interchange,
//! stratified splitting and a synthetic generator.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

pub const SOURCE_FILE: &str = "source.csv";
pub const LABELED_FILE: &str = "target_labeled.csv";
pub const UNLABELED_FILE: &str = "target_unlabeled.csv";

/// Ground-truth labels of the unlabeled target rows.
///
/// Training code never looks at these; only scoring does, through
/// [`HeldOutLabels::reveal`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOutLabels(Vec<usize>);

impl HeldOutLabels {
    pub fn new(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    pub fn reveal(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Labeled source set, labeled target set and unlabeled target set.
///
/// Source and target feature dimensions may differ. Every class in
/// `0..classes` must appear in both labeled sets.
#[derive(Debug, Clone, PartialEq)]
pub struct HdaDataset {
    source: Matrix,
    source_labels: Vec<usize>,
    labeled: Matrix,
    labeled_labels: Vec<usize>,
    unlabeled: Matrix,
    truth: Option<HeldOutLabels>,
    classes: usize,
}

impl HdaDataset {
    pub fn new(
        source: Matrix,
        source_labels: Vec<usize>,
        labeled: Matrix,
        labeled_labels: Vec<usize>,
        unlabeled: Matrix,
        truth: Option<HeldOutLabels>,
        classes: usize,
    ) -> Result<Self> {
        if classes == 0 {
            return Err(Error::Config("at least one class is required".into()));
        }
        if source.rows() != source_labels.len() {
            return Err(Error::Config(format!(
                "{} source rows but {} source labels",
                source.rows(),
                source_labels.len()
            )));
        }
        if labeled.rows() != labeled_labels.len() {
            return Err(Error::Config(format!(
                "{} labeled target rows but {} labels",
                labeled.rows(),
                labeled_labels.len()
            )));
        }
        if unlabeled.rows() > 0 && unlabeled.cols() != labeled.cols() {
            return Err(Error::Config(format!(
                "labeled target has {} features, unlabeled target has {}",
                labeled.cols(),
                unlabeled.cols()
            )));
        }
        if let Some(t) = &truth {
            if t.len() != unlabeled.rows() {
                return Err(Error::Config(format!(
                    "{} held-out labels for {} unlabeled rows",
                    t.len(),
                    unlabeled.rows()
                )));
            }
            if let Some(&y) = t.reveal().iter().find(|&&y| y >= classes) {
                return Err(Error::Config(format!(
                    "held-out label {y} outside 0..{classes}"
                )));
            }
        }
        for (side, labels) in [("source", &source_labels), ("labeled target", &labeled_labels)] {
            let mut seen = vec![false; classes];
            for &y in labels.iter() {
                if y >= classes {
                    return Err(Error::Config(format!(
                        "{side} label {y} outside 0..{classes}"
                    )));
                }
                seen[y] = true;
            }
            if let Some(k) = seen.iter().position(|s| !s) {
                return Err(Error::Config(format!("class {k} has no {side} samples")));
            }
        }
        let all_finite = source.all_finite() && labeled.all_finite() && unlabeled.all_finite();
        if !all_finite {
            return Err(Error::Config("features contain NaN or infinity".into()));
        }
        Ok(Self {
            source,
            source_labels,
            labeled,
            labeled_labels,
            unlabeled,
            truth,
            classes,
        })
    }

    pub fn source(&self) -> &Matrix {
        &self.source
    }

    pub fn source_labels(&self) -> &[usize] {
        &self.source_labels
    }

    pub fn labeled(&self) -> &Matrix {
        &self.labeled
    }

    pub fn labeled_labels(&self) -> &[usize] {
        &self.labeled_labels
    }

    pub fn unlabeled(&self) -> &Matrix {
        &self.unlabeled
    }

    pub fn truth(&self) -> Option<&HeldOutLabels> {
        self.truth.as_ref()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn source_dim(&self) -> usize {
        self.source.cols()
    }

    pub fn target_dim(&self) -> usize {
        self.labeled.cols()
    }

    /// Labeled plus unlabeled target rows.
    pub fn target(&self) -> Matrix {
        self.labeled
            .vstack(&self.unlabeled)
            .expect("target widths validated at construction")
    }

    /// Draws a fresh labeled/unlabeled target split with `k_per_class`
    /// labeled rows per class from the pooled target rows.
    ///
    /// Needs held-out labels for the current unlabeled rows.
    pub fn resplit(&self, k_per_class: usize, rng: &mut SeededRng) -> Result<HdaDataset> {
        let truth = self.truth.as_ref().ok_or_else(|| {
            Error::Config("resampling the target split needs held-out labels".into())
        })?;
        let pool = self.target();
        let labels: Vec<usize> = self
            .labeled_labels
            .iter()
            .chain(truth.reveal())
            .copied()
            .collect();
        let split = stratified_sample(&labels, k_per_class, rng)?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
        HdaDataset::new(
            self.source.clone(),
            self.source_labels.clone(),
            pool.select_rows(&split.selected),
            pick(&split.selected),
            pool.select_rows(&split.rest),
            Some(HeldOutLabels(pick(&split.rest))),
            self.classes,
        )
    }

    /// Same data with the unlabeled rows (and their held-out labels)
    /// reordered by `order`.
    pub fn permute_unlabeled(&self, order: &[usize]) -> Result<HdaDataset> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.unlabeled.rows()).collect::<Vec<_>>() {
            return Err(Error::Config("not a permutation of the unlabeled rows".into()));
        }
        let mut out = self.clone();
        out.unlabeled = self.unlabeled.select_rows(order);
        out.truth = self
            .truth
            .as_ref()
            .map(|t| HeldOutLabels(order.iter().map(|&i| t.0[i]).collect()));
        Ok(out)
    }

    /// Writes the three standard CSV files into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_csv(&dir.join(SOURCE_FILE), &self.source, Some(&self.source_labels))?;
        write_csv(&dir.join(LABELED_FILE), &self.labeled, Some(&self.labeled_labels))?;
        write_csv(
            &dir.join(UNLABELED_FILE),
            &self.unlabeled,
            self.truth.as_ref().map(|t| t.reveal()),
        )?;
        Ok(())
    }

    /// Reads the three standard CSV files from `dir`.
    pub fn load_dir(dir: &Path, schema: &CsvSchema) -> Result<HdaDataset> {
        load_csv(
            &dir.join(SOURCE_FILE),
            &dir.join(LABELED_FILE),
            &dir.join(UNLABELED_FILE),
            schema,
        )
    }
}

/// Layout of the CSV files read by [`load_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// First line of each file is a header.
    pub has_header: bool,
    /// The unlabeled file carries a trailing ground-truth label column.
    pub unlabeled_has_labels: bool,
    /// Class count; inferred from the labeled files when absent.
    pub classes: Option<usize>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            has_header: true,
            unlabeled_has_labels: true,
            classes: None,
        }
    }
}

/// Writes one sample per line, features then (optionally) the label.
pub fn write_csv(path: &Path, features: &Matrix, labels: Option<&[usize]>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let header: Vec<String> = (0..features.cols())
        .map(|j| format!("f{j}"))
        .chain(labels.map(|_| "label".to_string()))
        .collect();
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (i, row) in features.iter_rows().enumerate() {
        let mut line = row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>();
        if let Some(l) = labels {
            line.push(l[i].to_string());
        }
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parsed contents of one CSV file.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub features: Matrix,
    pub labels: Option<Vec<usize>>,
    /// 1-based source line of each row.
    pub lines: Vec<usize>,
}

/// Reads comma-separated numeric rows, optionally with a trailing integer label.
pub fn read_csv(path: &Path, has_header: bool, has_labels: bool) -> Result<CsvTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut width = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if has_header && i == 0 {
            continue;
        }
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let cells: Vec<&str> = raw.split(',').map(str::trim).collect();
        let expected = *width.get_or_insert(cells.len());
        if cells.len() != expected {
            return Err(parse_err(
                line_no,
                format!("{} columns, expected {expected}", cells.len()),
            ));
        }
        let n_feat = if has_labels { expected - 1 } else { expected };
        if has_labels && expected < 2 {
            return Err(parse_err(line_no, "need at least one feature and a label".into()));
        }
        for cell in &cells[..n_feat] {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-numeric cell {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value {cell:?}")));
            }
            data.push(v);
        }
        if has_labels {
            let cell = cells[n_feat];
            let y: usize = cell
                .parse()
                .map_err(|_| parse_err(line_no, format!("label {cell:?} is not a class index")))?;
            labels.push(y);
        }
        lines.push(line_no);
    }
    let cols = width.map_or(0, |w| if has_labels { w - 1 } else { w });
    Ok(CsvTable {
        features: Matrix::new(lines.len(), cols, data)?,
        labels: has_labels.then_some(labels),
        lines,
    })
}

/// Loads a data set from its three CSV files.
pub fn load_csv(
    source_path: &Path,
    labeled_path: &Path,
    unlabeled_path: &Path,
    schema: &CsvSchema,
) -> Result<HdaDataset> {
    let src = read_csv(source_path, schema.has_header, true)?;
    let lab = read_csv(labeled_path, schema.has_header, true)?;
    let unl = read_csv(unlabeled_path, schema.has_header, schema.unlabeled_has_labels)?;

    let classes = match schema.classes {
        Some(c) => c,
        None => {
            let max = src
                .labels
                .iter()
                .chain(lab.labels.iter())
                .flatten()
                .copied()
                .max()
                .ok_or_else(|| Error::Config("no labeled rows".into()))?;
            max + 1
        }
    };
    for (path, table) in [
        (source_path, &src),
        (labeled_path, &lab),
        (unlabeled_path, &unl),
    ] {
        if let Some(labels) = &table.labels {
            if let Some(pos) = labels.iter().position(|&y| y >= classes) {
                return Err(Error::Parse {
                    path: PathBuf::from(path),
                    line: table.lines[pos],
                    msg: format!("label {} outside 0..{classes}", labels[pos]),
                });
            }
        }
    }
    if unl.features.rows() > 0 && unl.features.cols() != lab.features.cols() {
        return Err(Error::Parse {
            path: unlabeled_path.to_path_buf(),
            line: unl.lines[0],
            msg: format!(
                "{} features, labeled target file has {}",
                unl.features.cols(),
                lab.features.cols()
            ),
        });
    }
    HdaDataset::new(
        src.features,
        src.labels.unwrap_or_default(),
        lab.features,
        lab.labels.unwrap_or_default(),
        unl.features,
        unl.labels.map(HeldOutLabels::new),
        classes,
    )
}

/// Result of [`stratified_sample`]; both index lists are ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedSplit {
    pub selected: Vec<usize>,
    pub rest: Vec<usize>,
}

/// Picks exactly `k_per_class` indices of every class `0..=max(labels)`.
pub fn stratified_sample(
    labels: &[usize],
    k_per_class: usize,
    rng: &mut SeededRng,
) -> Result<StratifiedSplit> {
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut members = vec![Vec::new(); classes];
    for (i, &y) in labels.iter().enumerate() {
        members[y].push(i);
    }
    let mut selected = Vec::with_capacity(classes * k_per_class);
    for (class, idx) in members.iter_mut().enumerate() {
        if idx.len() < k_per_class {
            return Err(Error::Sampling {
                class,
                available: idx.len(),
                requested: k_per_class,
            });
        }
        rng.shuffle(idx);
        selected.extend_from_slice(&idx[..k_per_class]);
    }
    selected.sort_unstable();
    let mut chosen = vec![false; labels.len()];
    for &i in &selected {
        chosen[i] = true;
    }
    let rest = (0..labels.len()).filter(|&i| !chosen[i]).collect();
    Ok(StratifiedSplit { selected, rest })
}

/// Parameters of the synthetic two-domain generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub classes: usize,
    pub latent_dim: usize,
    pub source_dim: usize,
    pub target_dim: usize,
    /// Scale of the class means in the latent space.
    pub separation: f64,
    /// Standard deviation of the isotropic observation noise.
    pub noise: f64,
    pub source_per_class: usize,
    pub labeled_per_class: usize,
    pub unlabeled_per_class: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: 4,
            latent_dim: 3,
            source_dim: 20,
            target_dim: 15,
            separation: 2.0,
            noise: 1.0,
            source_per_class: 100,
            labeled_per_class: 3,
            unlabeled_per_class: 50,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("classes", self.classes),
            ("latent_dim", self.latent_dim),
            ("source_dim", self.source_dim),
            ("target_dim", self.target_dim),
            ("source_per_class", self.source_per_class),
            ("labeled_per_class", self.labeled_per_class),
            ("unlabeled_per_class", self.unlabeled_per_class),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.latent_dim > self.source_dim.min(self.target_dim) {
            return Err(Error::Config(format!(
                "latent_dim {} exceeds min(source_dim, target_dim) = {}",
                self.latent_dim,
                self.source_dim.min(self.target_dim)
            )));
        }
        if !(self.separation >= 0.0) || !(self.noise >= 0.0) {
            return Err(Error::Config("separation and noise must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Class-conditional Gaussian latents observed through one random affine map
/// per domain, plus isotropic noise.
///
/// Source rows, the labeled/unlabeled target split and the held-out labels
/// are all determined by `spec.seed`.
pub fn gen_synthetic(spec: &SynthSpec) -> Result<HdaDataset> {
    spec.validate()?;
    let root = SeededRng::new(spec.seed);
    let c = spec.classes;

    let means = root.fork(0).normal(c, spec.latent_dim).scale(spec.separation);
    let mut map_rng = root.fork(1);
    let latent_scale = 1.0 / (spec.latent_dim as f64).sqrt();
    let map_s = map_rng.normal(spec.latent_dim, spec.source_dim).scale(latent_scale);
    let off_s = map_rng.normal(1, spec.source_dim);
    let map_t = map_rng.normal(spec.latent_dim, spec.target_dim).scale(latent_scale);
    let off_t = map_rng.normal(1, spec.target_dim);

    let observe = |rng: &mut SeededRng, labels: &[usize], map: &Matrix, offset: &Matrix| -> Result<Matrix> {
        let mut latent = rng.normal(labels.len(), spec.latent_dim);
        for (i, &y) in labels.iter().enumerate() {
            for (z, &m) in latent.row_mut(i).iter_mut().zip(means.row(y)) {
                *z += m;
            }
        }
        let mut x = latent.matmul(map)?;
        let noise = rng.normal(labels.len(), map.cols()).scale(spec.noise);
        x.add_assign(&noise)?;
        for r in 0..x.rows() {
            for (v, &o) in x.row_mut(r).iter_mut().zip(offset.as_slice()) {
                *v += o;
            }
        }
        Ok(x)
    };

    let interleaved = |per_class: usize, rng: &mut SeededRng| {
        let mut labels: Vec<usize> = (0..c).flat_map(|k| std::iter::repeat_n(k, per_class)).collect();
        rng.shuffle(&mut labels);
        labels
    };

    let mut src_rng = root.fork(2);
    let source_labels = interleaved(spec.source_per_class, &mut src_rng);
    let source = observe(&mut src_rng, &source_labels, &map_s, &off_s)?;

    let mut tgt_rng = root.fork(3);
    let pool_labels = interleaved(spec.labeled_per_class + spec.unlabeled_per_class, &mut tgt_rng);
    let pool = observe(&mut tgt_rng, &pool_labels, &map_t, &off_t)?;

    let split = stratified_sample(&pool_labels, spec.labeled_per_class, &mut root.fork(4))?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| pool_labels[i]).collect::<Vec<_>>();
    HdaDataset::new(
        source,
        source_labels,
        pool.select_rows(&split.selected),
        pick(&split.selected),
        pool.select_rows(&split.rest),
        Some(HeldOutLabels::new(pick(&split.rest))),
        c,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small_spec() -> SynthSpec {
        SynthSpec {
            classes: 3,
            latent_dim: 2,
            source_dim: 6,
            target_dim: 4,
            separation: 3.0,
            noise: 0.5,
            source_per_class: 10,
            labeled_per_class: 3,
            unlabeled_per_class: 7,
            seed: 11,
        }
    }

    fn counts(labels: &[usize], c: usize) -> Vec<usize> {
        let mut out = vec![0; c];
        for &y in labels {
            out[y] += 1;
        }
        out
    }

    #[test]
    fn synthetic_is_deterministic_and_stratified() {
        let a = gen_synthetic(&small_spec()).unwrap();
        let b = gen_synthetic(&small_spec()).unwrap();
        assert_eq!(a, b);
        assert_eq!(counts(a.source_labels(), 3), vec![10; 3]);
        assert_eq!(counts(a.labeled_labels(), 3), vec![3; 3]);
        assert_eq!(counts(a.truth().unwrap().reveal(), 3), vec![7; 3]);
        assert_eq!(a.source().shape(), (30, 6));
        assert_eq!(a.labeled().shape(), (9, 4));
        assert_eq!(a.unlabeled().shape(), (21, 4));

        let mut other = small_spec();
        other.seed = 12;
        assert_ne!(gen_synthetic(&other).unwrap(), a);
    }

    #[test]
    fn synthetic_spec_validation() {
        let mut s = small_spec();
        s.latent_dim = 5;
        assert!(gen_synthetic(&s).is_err());
        let mut s = small_spec();
        s.labeled_per_class = 0;
        assert!(gen_synthetic(&s).is_err());
    }

    #[test]
    fn stratified_cases() {
        let labels: Vec<usize> = (0..50).map(|i| i % 10).collect();
        let mut rng = SeededRng::new(1);
        let split = stratified_sample(&labels, 3, &mut rng).unwrap();
        assert_eq!(split.selected.len(), 30);
        assert_eq!(counts(&split.selected.iter().map(|&i| labels[i]).collect::<Vec<_>>(), 10), vec![3; 10]);
        let mut all: Vec<usize> = split.selected.iter().chain(&split.rest).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());

        let full = stratified_sample(&labels, 5, &mut rng).unwrap();
        assert!(full.rest.is_empty());

        let err = stratified_sample(&[0, 0, 1], 2, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Sampling { class: 1, .. }));
    }

    #[test]
    fn csv_round_trip() {
        let d = gen_synthetic(&small_spec()).unwrap();
        let dir = tempdir().unwrap();
        d.write_dir(dir.path()).unwrap();
        let back = HdaDataset::load_dir(dir.path(), &CsvSchema::default()).unwrap();
        assert_eq!(back.classes(), 3);
        for (a, b) in [
            (d.source(), back.source()),
            (d.labeled(), back.labeled()),
            (d.unlabeled(), back.unlabeled()),
        ] {
            assert!(a.max_abs_diff(b).unwrap() <= 1e-12);
        }
        assert_eq!(d.labeled_labels(), back.labeled_labels());
        assert_eq!(d.truth(), back.truth());
    }

    #[test]
    fn csv_shape_and_label_column() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "1.0,2.0,3.0,0\n4.5,-1,0.25,1\n").unwrap();
        let t = read_csv(&p, false, true).unwrap();
        assert_eq!(t.features.shape(), (2, 3));
        assert_eq!(t.labels.unwrap(), vec![0, 1]);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.csv");

        fs::write(&p, "1,2,0\n1,2\n").unwrap();
        let err = read_csv(&p, false, true).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");

        fs::write(&p, "h1,h2,label\n1,x,0\n").unwrap();
        let err = read_csv(&p, true, true).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");

        let src = dir.path().join("src.csv");
        let lab = dir.path().join("lab.csv");
        let unl = dir.path().join("unl.csv");
        fs::write(&src, "1,2,0\n3,4,1\n5,6,2\n").unwrap();
        fs::write(&lab, "1,0\n2,1\n3,2\n4,7\n").unwrap();
        fs::write(&unl, "1\n2\n").unwrap();
        let schema = CsvSchema {
            has_header: false,
            unlabeled_has_labels: false,
            classes: Some(3),
        };
        let err = load_csv(&src, &lab, &unl, &schema).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        assert!(err.to_string().contains("lab.csv:4"), "{err}");
    }

    #[test]
    fn missing_class_is_a_config_error() {
        let err = HdaDataset::new(
            Matrix::zeros(2, 2),
            vec![0, 1],
            Matrix::zeros(1, 3),
            vec![0],
            Matrix::zeros(0, 3),
            None,
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("class 1"));
    }

    #[test]
    fn resplit_keeps_pool_and_counts() {
        let d = gen_synthetic(&small_spec()).unwrap();
        let r = d.resplit(2, &mut SeededRng::new(5)).unwrap();
        assert_eq!(counts(r.labeled_labels(), 3), vec![2; 3]);
        assert_eq!(r.labeled().rows() + r.unlabeled().rows(), 30);
        assert_eq!(r.source(), d.source());
        let again = d.resplit(2, &mut SeededRng::new(5)).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn permute_unlabeled_moves_truth_along() {
        let d = gen_synthetic(&small_spec()).unwrap();
        let n = d.unlabeled().rows();
        let order: Vec<usize> = (0..n).rev().collect();
        let p = d.permute_unlabeled(&order).unwrap();
        assert_eq!(p.unlabeled().row(0), d.unlabeled().row(n - 1));
        assert_eq!(p.truth().unwrap().reveal()[0], d.truth().unwrap().reveal()[n - 1]);
        assert!(d.permute_unlabeled(&[0, 0]).is_err());
    }

    /// Nearest-class-mean classifier fitted on all target ground truth: with
    /// well separated classes and little noise the task must be learnable.
    #[test]
    fn easy_task_is_learnable() {
        let spec = SynthSpec {
            classes: 4,
            latent_dim: 3,
            source_dim: 20,
            target_dim: 15,
            separation: 8.0,
            noise: 0.1,
            source_per_class: 20,
            labeled_per_class: 3,
            unlabeled_per_class: 100,
            seed: 3,
        };
        let d = gen_synthetic(&spec).unwrap();
        let x = d.target();
        let y: Vec<usize> = d.labeled_labels().iter().chain(d.truth().unwrap().reveal()).copied().collect();
        let mut means = Matrix::zeros(4, x.cols());
        let mut n = [0usize; 4];
        for (i, &k) in y.iter().enumerate() {
            n[k] += 1;
            for (m, &v) in means.row_mut(k).iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        for k in 0..4 {
            for m in means.row_mut(k) {
                *m /= n[k] as f64;
            }
        }
        let correct = y
            .iter()
            .enumerate()
            .filter(|&(i, &k)| {
                let dist = |c: usize| -> f64 {
                    x.row(i).iter().zip(means.row(c)).map(|(a, b)| (a - b) * (a - b)).sum()
                };
                (0..4).min_by(|&a, &b| dist(a).total_cmp(&dist(b))).unwrap() == k
            })
            .count();
        assert!(correct as f64 / y.len() as f64 >= 0.99);
    }
}

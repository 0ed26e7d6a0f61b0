//! Trial data: clusters, individuals, observation patterns and CSV ingestion.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Index of a cluster inside [`TrialDataset::clusters`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterIdx(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRecord {
    pub id: String,
    /// Cluster-level treatment assignment, 0 or 1.
    pub z: u8,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndividualRecord {
    pub cluster: ClusterIdx,
    /// Encoded covariates; `NaN` marks a gap prior to imputation.
    pub covariates: Vec<f64>,
    pub r_s: bool,
    pub s_obs: Option<bool>,
    pub r_y: bool,
    pub y_obs: Option<f64>,
}

/// How the survival and outcome of an individual were recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObservationPattern {
    CompleteSurvivor,
    DeathTruncation,
    SurvivorOutcomeMissing,
    StatusAndOutcomeMissing,
}

impl ObservationPattern {
    pub const ALL: [ObservationPattern; 4] = [
        ObservationPattern::CompleteSurvivor,
        ObservationPattern::DeathTruncation,
        ObservationPattern::SurvivorOutcomeMissing,
        ObservationPattern::StatusAndOutcomeMissing,
    ];
}

impl fmt::Display for ObservationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ObservationPattern::CompleteSurvivor => "complete_survivor",
            ObservationPattern::DeathTruncation => "death_truncation",
            ObservationPattern::SurvivorOutcomeMissing => "survivor_outcome_missing",
            ObservationPattern::StatusAndOutcomeMissing => "status_and_outcome_missing",
        };
        f.write_str(s)
    }
}

/// Classify a record that satisfies the [`IndividualRecord`] invariants.
pub fn classify_pattern(ind: &IndividualRecord) -> ObservationPattern {
    match (ind.r_s, ind.s_obs, ind.r_y) {
        (false, _, _) => ObservationPattern::StatusAndOutcomeMissing,
        (true, Some(false), _) => ObservationPattern::DeathTruncation,
        (true, _, true) => ObservationPattern::CompleteSurvivor,
        (true, _, false) => ObservationPattern::SurvivorOutcomeMissing,
    }
}

impl IndividualRecord {
    pub fn pattern(&self) -> ObservationPattern {
        classify_pattern(self)
    }

    /// Checks the truncation-by-death and missingness invariants.
    pub fn check(&self) -> std::result::Result<(), String> {
        match (self.r_s, self.s_obs) {
            (true, None) => return Err("r_s=1 but s_obs is absent".into()),
            (false, Some(_)) => return Err("r_s=0 but s_obs is present".into()),
            _ => {}
        }
        if self.r_y != self.y_obs.is_some() {
            return Err(format!(
                "r_y={} disagrees with y_obs {}",
                u8::from(self.r_y),
                if self.y_obs.is_some() { "present" } else { "absent" }
            ));
        }
        if self.s_obs == Some(false) && (self.r_y || self.y_obs.is_some()) {
            return Err("outcome recorded for an observed non-survivor (s_obs=0)".into());
        }
        if !self.r_s && (self.r_y || self.y_obs.is_some()) {
            return Err("outcome recorded while survival status is missing".into());
        }
        if let Some(y) = self.y_obs {
            if !y.is_finite() {
                return Err("y_obs is not finite".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovariateKind {
    Continuous,
    /// Ordered categories mapped to integer ranks in the listed order.
    Ordinal { levels: Vec<String> },
    /// Unordered categories, one-hot encoded. Empty `levels` means "use the
    /// sorted distinct values found in the file".
    Nominal { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnEncoding {
    Continuous,
    OrdinalRank,
    Indicator { level: String },
}

/// One column of the encoded covariate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedColumn {
    pub name: String,
    /// Raw CSV column this was derived from.
    pub source: String,
    pub encoding: ColumnEncoding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImputationMethod {
    Mean,
    Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationRecord {
    pub source: String,
    pub method: ImputationMethod,
    pub n_imputed: usize,
    pub fill: String,
}

/// Column-name mapping for [`load_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub cluster_id: String,
    pub z: String,
    pub r_s: String,
    pub s_obs: String,
    pub r_y: String,
    pub y_obs: String,
    /// Explicit covariate list; `None` means every non-design column.
    pub covariates: Option<Vec<String>>,
    /// Per-covariate kind; unlisted covariates are continuous.
    pub kinds: BTreeMap<String, CovariateKind>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            cluster_id: "cluster_id".into(),
            z: "z".into(),
            r_s: "r_s".into(),
            s_obs: "s_obs".into(),
            r_y: "r_y".into(),
            y_obs: "y_obs".into(),
            covariates: None,
            kinds: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    pub clusters: Vec<ClusterRecord>,
    pub individuals: Vec<IndividualRecord>,
    pub columns: Vec<EncodedColumn>,
    pub imputation: Vec<ImputationRecord>,
}

impl TrialDataset {
    /// Builds a dataset and checks every structural invariant. Cluster sizes
    /// are recomputed from the individuals.
    pub fn new(
        mut clusters: Vec<ClusterRecord>,
        individuals: Vec<IndividualRecord>,
        columns: Vec<EncodedColumn>,
    ) -> Result<Self> {
        for c in clusters.iter_mut() {
            c.size = 0;
        }
        for (row, ind) in individuals.iter().enumerate() {
            let c = clusters.get_mut(ind.cluster.0).ok_or_else(|| Error::Consistency {
                row: row + 1,
                message: format!("unknown cluster index {}", ind.cluster.0),
            })?;
            c.size += 1;
            if ind.covariates.len() != columns.len() {
                return Err(Error::Dimension {
                    expected: columns.len(),
                    got: ind.covariates.len(),
                });
            }
            ind.check().map_err(|message| Error::Consistency {
                row: row + 1,
                message,
            })?;
        }
        if let Some(c) = clusters.iter().find(|c| c.size == 0) {
            return Err(Error::Schema(format!("cluster {} has no individuals", c.id)));
        }
        for c in &clusters {
            if c.z > 1 {
                return Err(Error::Schema(format!("cluster {} has z={}", c.id, c.z)));
            }
        }
        for arm in [0u8, 1] {
            if !clusters.iter().any(|c| c.z == arm) {
                return Err(Error::Positivity { arm });
            }
        }
        Ok(Self {
            clusters,
            individuals,
            columns,
            imputation: Vec::new(),
        })
    }

    pub fn n_individuals(&self) -> usize {
        self.individuals.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.columns.len()
    }

    pub fn covariate_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn z_of(&self, i: usize) -> u8 {
        self.clusters[self.individuals[i].cluster.0].z
    }

    pub fn has_covariate_gaps(&self) -> bool {
        self.individuals
            .iter()
            .any(|ind| ind.covariates.iter().any(|v| v.is_nan()))
    }

    pub fn pattern_counts(&self) -> HashMap<ObservationPattern, usize> {
        let mut m: HashMap<ObservationPattern, usize> =
            ObservationPattern::ALL.iter().map(|&p| (p, 0)).collect();
        for ind in &self.individuals {
            *m.entry(ind.pattern()).or_default() += 1;
        }
        m
    }

    /// Writes the canonical CSV layout with encoded covariate columns.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["cluster_id", "z", "r_s", "s_obs", "r_y", "y_obs"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for ind in &self.individuals {
            let c = &self.clusters[ind.cluster.0];
            let mut rec = vec![
                c.id.clone(),
                c.z.to_string(),
                u8::from(ind.r_s).to_string(),
                ind.s_obs.map(|s| u8::from(s).to_string()).unwrap_or_default(),
                u8::from(ind.r_y).to_string(),
                ind.y_obs.map(format_real).unwrap_or_default(),
            ];
            rec.extend(ind.covariates.iter().map(|&v| {
                if v.is_nan() {
                    String::new()
                } else {
                    format_real(v)
                }
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Shortest representation that round-trips exactly.
pub(crate) fn format_real(v: f64) -> String {
    format!("{v}")
}

fn parse_binary(field: &str, column: &str, row: usize) -> Result<Option<bool>> {
    match field.trim() {
        "" => Ok(None),
        "0" | "false" | "FALSE" => Ok(Some(false)),
        "1" | "true" | "TRUE" => Ok(Some(true)),
        other => Err(Error::Consistency {
            row,
            message: format!("column '{column}' expects 0/1, found '{other}'"),
        }),
    }
}

fn required_binary(field: &str, column: &str, row: usize) -> Result<bool> {
    parse_binary(field, column, row)?.ok_or_else(|| Error::Consistency {
        row,
        message: format!("column '{column}' must not be empty"),
    })
}

fn parse_real(field: &str, column: &str, row: usize) -> Result<Option<f64>> {
    let t = field.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    t.parse::<f64>().map(Some).map_err(|_| Error::Consistency {
        row,
        message: format!("column '{column}' expects a number, found '{t}'"),
    })
}

/// Reads and validates a trial CSV. Covariate gaps are kept as `NaN`; see
/// [`impute_baseline_covariates`].
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<TrialDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::Csv(e),
        })?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    };
    let design = [
        &schema.cluster_id,
        &schema.z,
        &schema.r_s,
        &schema.s_obs,
        &schema.r_y,
        &schema.y_obs,
    ];
    let [i_cl, i_z, i_rs, i_s, i_ry, i_y] = [
        find(design[0])?,
        find(design[1])?,
        find(design[2])?,
        find(design[3])?,
        find(design[4])?,
        find(design[5])?,
    ];
    let covariate_sources: Vec<String> = match &schema.covariates {
        Some(list) => list.clone(),
        None => headers
            .iter()
            .filter(|h| !design.iter().any(|d| d == h))
            .cloned()
            .collect(),
    };
    let source_idx: Vec<usize> = covariate_sources
        .iter()
        .map(|c| find(c))
        .collect::<Result<_>>()?;
    for name in schema.kinds.keys() {
        if !covariate_sources.contains(name) {
            return Err(Error::Schema(format!(
                "kind declared for unknown covariate '{name}'"
            )));
        }
    }

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    // Resolve nominal levels that were left implicit.
    let mut kinds: Vec<CovariateKind> = covariate_sources
        .iter()
        .map(|c| schema.kinds.get(c).cloned().unwrap_or(CovariateKind::Continuous))
        .collect();
    for (k, kind) in kinds.iter_mut().enumerate() {
        let implicit = match kind {
            CovariateKind::Nominal { levels } | CovariateKind::Ordinal { levels } => levels.is_empty(),
            CovariateKind::Continuous => false,
        };
        if implicit {
            let mut seen: Vec<String> = records
                .iter()
                .map(|r| r.get(source_idx[k]).unwrap_or("").trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            seen.sort();
            seen.dedup();
            match kind {
                CovariateKind::Nominal { levels } | CovariateKind::Ordinal { levels } => *levels = seen,
                CovariateKind::Continuous => unreachable!(),
            }
        }
    }

    let mut columns = Vec::new();
    for (src, kind) in covariate_sources.iter().zip(&kinds) {
        match kind {
            CovariateKind::Continuous => columns.push(EncodedColumn {
                name: src.clone(),
                source: src.clone(),
                encoding: ColumnEncoding::Continuous,
            }),
            CovariateKind::Ordinal { .. } => columns.push(EncodedColumn {
                name: src.clone(),
                source: src.clone(),
                encoding: ColumnEncoding::OrdinalRank,
            }),
            CovariateKind::Nominal { levels } => {
                for level in levels {
                    columns.push(EncodedColumn {
                        name: format!("{src}={level}"),
                        source: src.clone(),
                        encoding: ColumnEncoding::Indicator {
                            level: level.clone(),
                        },
                    });
                }
            }
        }
    }

    let mut clusters: Vec<ClusterRecord> = Vec::new();
    let mut cluster_index: HashMap<String, usize> = HashMap::new();
    let mut individuals = Vec::with_capacity(records.len());
    for (k, rec) in records.iter().enumerate() {
        let row = k + 1;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let cid = get(i_cl).trim().to_string();
        if cid.is_empty() {
            return Err(Error::Consistency {
                row,
                message: "empty cluster id".into(),
            });
        }
        let z = u8::from(required_binary(get(i_z), &schema.z, row)?);
        let ci = match cluster_index.get(&cid) {
            Some(&ci) => {
                if clusters[ci].z != z {
                    return Err(Error::Randomization {
                        cluster: cid,
                        first: clusters[ci].z,
                        other: z,
                        row,
                    });
                }
                ci
            }
            None => {
                clusters.push(ClusterRecord {
                    id: cid.clone(),
                    z,
                    size: 0,
                });
                cluster_index.insert(cid, clusters.len() - 1);
                clusters.len() - 1
            }
        };
        let r_s = required_binary(get(i_rs), &schema.r_s, row)?;
        let s_obs = parse_binary(get(i_s), &schema.s_obs, row)?;
        let r_y = required_binary(get(i_ry), &schema.r_y, row)?;
        let y_obs = parse_real(get(i_y), &schema.y_obs, row)?;

        let mut covariates = Vec::with_capacity(columns.len());
        for (k, kind) in kinds.iter().enumerate() {
            let src = &covariate_sources[k];
            let raw = get(source_idx[k]).trim();
            match kind {
                CovariateKind::Continuous => {
                    covariates.push(parse_real(raw, src, row)?.unwrap_or(f64::NAN));
                }
                CovariateKind::Ordinal { levels } => {
                    if raw.is_empty() {
                        covariates.push(f64::NAN);
                    } else {
                        let rank = levels.iter().position(|l| l == raw).ok_or_else(|| {
                            Error::Schema(format!("row {row}: unknown level '{raw}' for '{src}'"))
                        })?;
                        covariates.push(rank as f64);
                    }
                }
                CovariateKind::Nominal { levels } => {
                    if raw.is_empty() {
                        covariates.extend(std::iter::repeat_n(f64::NAN, levels.len()));
                    } else {
                        let hit = levels.iter().position(|l| l == raw).ok_or_else(|| {
                            Error::Schema(format!("row {row}: unknown level '{raw}' for '{src}'"))
                        })?;
                        covariates.extend((0..levels.len()).map(|j| if j == hit { 1.0 } else { 0.0 }));
                    }
                }
            }
        }
        let ind = IndividualRecord {
            cluster: ClusterIdx(ci),
            covariates,
            r_s,
            s_obs,
            r_y,
            y_obs,
        };
        ind.check().map_err(|message| Error::Consistency { row, message })?;
        individuals.push(ind);
    }
    TrialDataset::new(clusters, individuals, columns)
}

/// Fills covariate gaps: means for continuous columns, the modal category for
/// ordinal and one-hot groups. Returns the dataset unchanged if there are no
/// gaps.
pub fn impute_baseline_covariates(mut raw: TrialDataset) -> Result<TrialDataset> {
    if !raw.has_covariate_gaps() {
        return Ok(raw);
    }
    // Group encoded columns by their source column.
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (j, col) in raw.columns.iter().enumerate() {
        match groups.iter_mut().find(|(s, _)| *s == col.source) {
            Some((_, v)) => v.push(j),
            None => groups.push((col.source.clone(), vec![j])),
        }
    }
    let n = raw.individuals.len();
    let mut records = Vec::new();
    for (source, cols) in groups {
        let missing: Vec<usize> = (0..n)
            .filter(|&i| cols.iter().any(|&j| raw.individuals[i].covariates[j].is_nan()))
            .collect();
        if missing.is_empty() {
            continue;
        }
        if missing.len() == n {
            return Err(Error::EmptyCovariate(source));
        }
        let first = &raw.columns[cols[0]].encoding;
        match first {
            ColumnEncoding::Continuous => {
                let j = cols[0];
                let (sum, count) = raw
                    .individuals
                    .iter()
                    .map(|ind| ind.covariates[j])
                    .filter(|v| !v.is_nan())
                    .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
                let mean = sum / count as f64;
                for &i in &missing {
                    raw.individuals[i].covariates[j] = mean;
                }
                records.push(ImputationRecord {
                    source,
                    method: ImputationMethod::Mean,
                    n_imputed: missing.len(),
                    fill: format_real(mean),
                });
            }
            ColumnEncoding::OrdinalRank => {
                let j = cols[0];
                let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
                for ind in &raw.individuals {
                    let v = ind.covariates[j];
                    if !v.is_nan() {
                        *counts.entry(v as i64).or_default() += 1;
                    }
                }
                // ties resolve to the lowest rank
                let mode = counts
                    .iter()
                    .fold((0i64, 0usize), |best, (&k, &c)| if c > best.1 { (k, c) } else { best })
                    .0 as f64;
                for &i in &missing {
                    raw.individuals[i].covariates[j] = mode;
                }
                records.push(ImputationRecord {
                    source,
                    method: ImputationMethod::Mode,
                    n_imputed: missing.len(),
                    fill: format_real(mode),
                });
            }
            ColumnEncoding::Indicator { .. } => {
                let mut counts = vec![0usize; cols.len()];
                for ind in &raw.individuals {
                    for (k, &j) in cols.iter().enumerate() {
                        if ind.covariates[j] == 1.0 {
                            counts[k] += 1;
                        }
                    }
                }
                let mut best = 0;
                for k in 1..counts.len() {
                    if counts[k] > counts[best] {
                        best = k;
                    }
                }
                for &i in &missing {
                    for (k, &j) in cols.iter().enumerate() {
                        raw.individuals[i].covariates[j] = if k == best { 1.0 } else { 0.0 };
                    }
                }
                let level = match &raw.columns[cols[best]].encoding {
                    ColumnEncoding::Indicator { level } => level.clone(),
                    _ => unreachable!("indicator group"),
                };
                records.push(ImputationRecord {
                    source,
                    method: ImputationMethod::Mode,
                    n_imputed: missing.len(),
                    fill: level,
                });
            }
        }
    }
    raw.imputation = records;
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const FOUR_ROWS: &str = "cluster_id,z,r_s,s_obs,r_y,y_obs,age\n\
        a,1,1,1,1,60.5,70\n\
        a,1,1,0,0,,80\n\
        b,0,1,1,0,,75\n\
        b,0,0,,0,,\n";

    #[test]
    fn loads_four_rows_two_clusters() {
        let f = write(FOUR_ROWS);
        let ds = load_dataset(f.path(), &Schema::default()).unwrap();
        assert_eq!(ds.n_individuals(), 4);
        assert_eq!(ds.n_clusters(), 2);
        assert_eq!(ds.clusters[0].size, 2);
        let patterns: Vec<_> = ds.individuals.iter().map(classify_pattern).collect();
        assert_eq!(
            patterns,
            vec![
                ObservationPattern::CompleteSurvivor,
                ObservationPattern::DeathTruncation,
                ObservationPattern::SurvivorOutcomeMissing,
                ObservationPattern::StatusAndOutcomeMissing
            ]
        );
        assert!(ds.individuals[3].covariates[0].is_nan());
    }

    #[test]
    fn outcome_on_dead_row_is_rejected_with_row() {
        let f = write("cluster_id,z,r_s,s_obs,r_y,y_obs\na,1,1,1,1,3\nb,0,1,0,1,57\n");
        match load_dataset(f.path(), &Schema::default()) {
            Err(Error::Consistency { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected consistency error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_schema_error() {
        let f = write("cluster_id,z,r_s,s_obs,y_obs\na,1,1,1,3\n");
        assert!(matches!(
            load_dataset(f.path(), &Schema::default()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn mixed_assignment_is_randomization_error() {
        let f = write("cluster_id,z,r_s,s_obs,r_y,y_obs\na,1,1,1,1,3\na,0,1,1,1,4\nb,0,1,1,1,4\n");
        assert!(matches!(
            load_dataset(f.path(), &Schema::default()),
            Err(Error::Randomization { row: 2, .. })
        ));
    }

    #[test]
    fn positivity_fires_iff_arm_empty() {
        let f = write("cluster_id,z,r_s,s_obs,r_y,y_obs\na,1,1,1,1,3\nb,1,1,1,1,4\n");
        assert!(matches!(
            load_dataset(f.path(), &Schema::default()),
            Err(Error::Positivity { arm: 0 })
        ));
        let f = write("cluster_id,z,r_s,s_obs,r_y,y_obs\na,1,1,1,1,3\nb,0,1,1,1,4\n");
        assert!(load_dataset(f.path(), &Schema::default()).is_ok());
    }

    #[test]
    fn classify_table_cases() {
        let base = IndividualRecord {
            cluster: ClusterIdx(0),
            covariates: vec![],
            r_s: true,
            s_obs: Some(true),
            r_y: true,
            y_obs: Some(1.0),
        };
        assert_eq!(classify_pattern(&base), ObservationPattern::CompleteSurvivor);
        let dead = IndividualRecord {
            s_obs: Some(false),
            r_y: false,
            y_obs: None,
            ..base.clone()
        };
        assert_eq!(classify_pattern(&dead), ObservationPattern::DeathTruncation);
        let unknown = IndividualRecord {
            r_s: false,
            s_obs: None,
            r_y: false,
            y_obs: None,
            ..base
        };
        assert_eq!(classify_pattern(&unknown), ObservationPattern::StatusAndOutcomeMissing);
    }

    #[test]
    fn mean_imputation_of_age() {
        let f = write(FOUR_ROWS);
        let ds = load_dataset(f.path(), &Schema::default()).unwrap();
        let ds = impute_baseline_covariates(ds).unwrap();
        assert_eq!(ds.individuals[3].covariates[0], 75.0);
        assert_eq!(ds.imputation.len(), 1);
        assert_eq!(ds.imputation[0].method, ImputationMethod::Mean);
    }

    #[test]
    fn no_gaps_is_identity() {
        let f = write("cluster_id,z,r_s,s_obs,r_y,y_obs,age\na,1,1,1,1,3,70\nb,0,1,1,1,4,80\n");
        let ds = load_dataset(f.path(), &Schema::default()).unwrap();
        let out = impute_baseline_covariates(ds.clone()).unwrap();
        assert_eq!(ds, out);
    }

    #[test]
    fn categorical_mode_and_encoding() {
        let csv = "cluster_id,z,r_s,s_obs,r_y,y_obs,edu,eth\n\
            a,1,1,1,1,3,none,white\n\
            a,1,1,1,1,3,gcse,white\n\
            b,0,1,1,1,4,none,other\n\
            b,0,1,1,1,4,,\n";
        let f = write(csv);
        let mut schema = Schema::default();
        schema.kinds.insert(
            "edu".into(),
            CovariateKind::Ordinal {
                levels: vec!["none".into(), "gcse".into(), "degree".into()],
            },
        );
        schema
            .kinds
            .insert("eth".into(), CovariateKind::Nominal { levels: vec![] });
        let ds = load_dataset(f.path(), &schema).unwrap();
        assert_eq!(ds.covariate_names(), vec!["edu", "eth=other", "eth=white"]);
        assert_eq!(ds.individuals[1].covariates, vec![1.0, 0.0, 1.0]);
        let ds = impute_baseline_covariates(ds).unwrap();
        assert_eq!(ds.individuals[3].covariates, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn fully_missing_covariate_is_unrecoverable() {
        let f = write("cluster_id,z,r_s,s_obs,r_y,y_obs,age\na,1,1,1,1,3,\nb,0,1,1,1,4,\n");
        let ds = load_dataset(f.path(), &Schema::default()).unwrap();
        assert!(matches!(
            impute_baseline_covariates(ds),
            Err(Error::EmptyCovariate(_))
        ));
    }

    #[test]
    fn rewrite_reload_preserves_patterns() {
        let f = write(FOUR_ROWS);
        let ds = load_dataset(f.path(), &Schema::default()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        ds.write_csv(out.path()).unwrap();
        let again = load_dataset(out.path(), &Schema::default()).unwrap();
        let a: Vec<_> = ds.individuals.iter().map(classify_pattern).collect();
        let b: Vec<_> = again.individuals.iter().map(classify_pattern).collect();
        assert_eq!(a, b);
        let counts = again.pattern_counts();
        assert_eq!(counts.values().sum::<usize>(), again.n_individuals());
    }
}

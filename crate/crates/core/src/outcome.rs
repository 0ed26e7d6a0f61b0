//! Arm- and stratum-specific Gaussian outcome models.

use crate::bart::{BartSettings, Design, ResponseScale, SumOfTreesModel};
use crate::data::ClusterIdx;
use crate::error::{Error, Result};
use crate::kernels::{log_gaussian_density, RngStream};
use crate::strata::PrincipalStratum;

/// The three `(stratum, arm)` cells in which an outcome is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutcomeCell {
    AlwaysTreated,
    AlwaysControl,
    ProtectedTreated,
}

impl OutcomeCell {
    pub const ALL: [OutcomeCell; 3] = [
        OutcomeCell::AlwaysTreated,
        OutcomeCell::AlwaysControl,
        OutcomeCell::ProtectedTreated,
    ];

    /// `None` where the outcome is undefined by truncation.
    pub fn of(g: PrincipalStratum, z: u8) -> Option<Self> {
        match (g, z) {
            (PrincipalStratum::AlwaysSurvivor, 1) => Some(OutcomeCell::AlwaysTreated),
            (PrincipalStratum::AlwaysSurvivor, 0) => Some(OutcomeCell::AlwaysControl),
            (PrincipalStratum::Protected, 1) => Some(OutcomeCell::ProtectedTreated),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            OutcomeCell::AlwaysTreated => "11_1",
            OutcomeCell::AlwaysControl => "11_0",
            OutcomeCell::ProtectedTreated => "10_1",
        }
    }
}

fn undefined_cell(g: PrincipalStratum, z: u8) -> Error {
    Error::Contract(format!("outcome undefined for stratum {g} under z={z}"))
}

/// Rows, responses and clusters of one update subset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellSubset {
    pub rows: Vec<usize>,
    pub y: Vec<f64>,
    pub clusters: Vec<ClusterIdx>,
}

impl CellSubset {
    pub fn push(&mut self, row: usize, y: f64, cluster: ClusterIdx) {
        self.rows.push(row);
        self.y.push(y);
        self.clusters.push(cluster);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// What happened to each model during one update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateReport {
    /// Empty subset; parameters carried forward.
    pub skipped: [bool; 3],
    /// Subset below the structure threshold; tree shapes held fixed.
    pub frozen: [bool; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModelSet {
    models: [SumOfTreesModel; 3],
    min_subset: usize,
}

impl OutcomeModelSet {
    pub fn new(
        settings: &BartSettings,
        n_covariates: usize,
        n_clusters: usize,
        response: ResponseScale,
        min_subset: usize,
    ) -> Self {
        let m = SumOfTreesModel::gaussian(settings, n_covariates, n_clusters, response);
        Self {
            models: [m.clone(), m.clone(), m],
            min_subset,
        }
    }

    pub fn from_models(models: [SumOfTreesModel; 3], min_subset: usize) -> Self {
        Self { models, min_subset }
    }

    pub fn model(&self, cell: OutcomeCell) -> &SumOfTreesModel {
        &self.models[cell.index()]
    }

    pub fn model_mut(&mut self, cell: OutcomeCell) -> &mut SumOfTreesModel {
        &mut self.models[cell.index()]
    }

    /// `σ²_{g,z}` on the response scale.
    pub fn variance(&self, cell: OutcomeCell) -> f64 {
        self.model(cell).resid_var()
    }

    pub fn mean_row(&self, cell: OutcomeCell, design: &Design, row: usize, cluster: ClusterIdx) -> f64 {
        self.model(cell).predict_row(design, row, Some(cluster))
    }

    /// Outcome log density at `y` under cell `(g, z)`.
    pub fn log_density_row(
        &self,
        y: f64,
        g: PrincipalStratum,
        z: u8,
        design: &Design,
        row: usize,
        cluster: ClusterIdx,
    ) -> Result<f64> {
        let cell = OutcomeCell::of(g, z).ok_or_else(|| undefined_cell(g, z))?;
        Ok(log_gaussian_density(
            y,
            self.mean_row(cell, design, row, cluster),
            self.variance(cell),
        ))
    }

    /// Gaussian density of `y` at raw covariates `x`.
    pub fn density(&self, y: f64, g: PrincipalStratum, z: u8, x: &[f64], cluster: ClusterIdx) -> Result<f64> {
        let cell = OutcomeCell::of(g, z).ok_or_else(|| undefined_cell(g, z))?;
        let mean = self.model(cell).predict(x, Some(cluster))?;
        Ok(log_gaussian_density(y, mean, self.variance(cell)).exp())
    }

    /// Posterior predictive outcome draw for a survivor; `None` for
    /// individuals whose outcome is undefined under `(g, z)`.
    pub fn impute_row(
        &self,
        g: PrincipalStratum,
        z: u8,
        design: &Design,
        row: usize,
        cluster: ClusterIdx,
        rng: &mut RngStream,
    ) -> Option<f64> {
        let cell = OutcomeCell::of(g, z)?;
        let mean = self.mean_row(cell, design, row, cluster);
        Some(rng.normal(mean, self.variance(cell).sqrt()))
    }

    /// Explicit survivor draw; asking for a cell where the outcome is
    /// undefined is a programming error.
    pub fn impute_survivor(
        &self,
        g: PrincipalStratum,
        z: u8,
        x: &[f64],
        cluster: ClusterIdx,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let cell = OutcomeCell::of(g, z).ok_or_else(|| undefined_cell(g, z))?;
        let mean = self.model(cell).predict(x, Some(cluster))?;
        Ok(rng.normal(mean, self.variance(cell).sqrt()))
    }

    /// Tree moves, leaves and intercepts for each model on its subset. Empty
    /// subsets are skipped; subsets smaller than the structure threshold only
    /// redraw leaf values.
    pub fn update_means(
        &mut self,
        design: &Design,
        subsets: &[CellSubset; 3],
        rngs: &mut [RngStream; 3],
    ) -> Result<UpdateReport> {
        let mut report = UpdateReport::default();
        for cell in OutcomeCell::ALL {
            let k = cell.index();
            let sub = &subsets[k];
            if sub.is_empty() {
                report.skipped[k] = true;
                self.models[k].sweep_mean(design, &[], &[], &[], false, &mut rngs[k])?;
                continue;
            }
            let structure = sub.len() >= self.min_subset;
            report.frozen[k] = !structure;
            self.models[k].sweep_mean(design, &sub.rows, &sub.y, &sub.clusters, structure, &mut rngs[k])?;
        }
        Ok(report)
    }

    /// `σ²_{g,z}` and `σ_b²` draws for every model that saw data in the last
    /// mean update.
    pub fn update_variances(&mut self, rngs: &mut [RngStream; 3]) {
        for (m, rng) in self.models.iter_mut().zip(rngs.iter_mut()) {
            m.update_variances(rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_set(mean: f64, var: f64) -> (OutcomeModelSet, Design) {
        let settings = BartSettings {
            n_trees: 4,
            ..BartSettings::default()
        };
        let mut set = OutcomeModelSet::new(&settings, 1, 1, ResponseScale::identity(), 5);
        for cell in OutcomeCell::ALL {
            let m = set.model_mut(cell);
            for t in m.trees_mut() {
                t.set_leaf_value(0, mean / 4.0);
            }
            m.set_resid_var(var);
        }
        let design = Design::from_rows(&[vec![0.0], vec![1.0]], 10).unwrap();
        (set, design)
    }

    #[test]
    fn density_examples() {
        let (set, _) = flat_set(5.0, 4.0);
        let g = PrincipalStratum::AlwaysSurvivor;
        let d = set.density(7.0, g, 1, &[0.0], ClusterIdx(0)).unwrap();
        assert!((d - 0.120985).abs() < 1e-5);
        let (set, _) = flat_set(0.0, 1.0);
        let mode = set.density(0.0, g, 0, &[0.0], ClusterIdx(0)).unwrap();
        assert!((mode - 0.398_942_280_401_432_7).abs() < 1e-12);
        let two = set.density(2.0, g, 0, &[0.0], ClusterIdx(0)).unwrap();
        assert!((two - mode * (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn undefined_cells_are_contract_errors() {
        let (set, design) = flat_set(1.0, 1.0);
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(
            set.density(0.0, PrincipalStratum::Protected, 0, &[0.0], ClusterIdx(0)),
            Err(Error::Contract(_))
        ));
        assert!(set
            .impute_survivor(PrincipalStratum::NeverSurvivor, 1, &[0.0], ClusterIdx(0), &mut rng)
            .is_err());
        assert_eq!(
            set.impute_row(PrincipalStratum::NeverSurvivor, 0, &design, 0, ClusterIdx(0), &mut rng),
            None
        );
        assert_eq!(
            set.impute_row(PrincipalStratum::Protected, 0, &design, 0, ClusterIdx(0), &mut rng),
            None
        );
    }

    #[test]
    fn near_zero_variance_imputes_the_mean() {
        let (set, _) = flat_set(53.0, 1e-12);
        let mut rng = RngStream::new(0, 0);
        let y = set
            .impute_survivor(PrincipalStratum::AlwaysSurvivor, 0, &[0.0], ClusterIdx(0), &mut rng)
            .unwrap();
        assert!((y - 53.0).abs() < 1e-4);
    }

    #[test]
    fn empty_subset_is_skipped_and_carried_forward() {
        let (mut set, design) = flat_set(2.0, 1.0);
        let before = set.model(OutcomeCell::ProtectedTreated).clone();
        let mut s11 = CellSubset::default();
        for r in 0..2 {
            s11.push(r, 2.0, ClusterIdx(0));
        }
        let subsets = [s11.clone(), s11, CellSubset::default()];
        let mut rngs = [RngStream::new(1, 0), RngStream::new(1, 1), RngStream::new(1, 2)];
        let rep = set.update_means(&design, &subsets, &mut rngs).unwrap();
        set.update_variances(&mut rngs);
        assert_eq!(rep.skipped, [false, false, true]);
        assert_eq!(rep.frozen, [true, true, false]);
        assert_eq!(set.model(OutcomeCell::ProtectedTreated), &before);
    }
}

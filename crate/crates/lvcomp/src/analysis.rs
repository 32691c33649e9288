//! Features, correlation and rotated factors from sweep records.

use anyhow::{bail, Result};
use lvcomp_core::{
    build_features, correlation_matrix, extract_factors, label_factors, FactorLabel, FactorReport,
    FeatureMatrix, SweepRecord,
};

#[derive(Debug, Clone)]
pub struct Analysis {
    pub features: FeatureMatrix,
    pub report: FactorReport,
    pub labels: Vec<FactorLabel>,
}

pub fn analyze(records: &[SweepRecord], factors: usize) -> Result<Analysis> {
    let features = build_features(records)?;
    if factors > features.cols() {
        bail!(
            "cannot extract {factors} factors from {} features",
            features.cols()
        );
    }
    let correlation = correlation_matrix(&features)?;
    let report = extract_factors(&correlation, factors)?;
    let labels = label_factors(&report, &features.groups)?;
    Ok(Analysis {
        features,
        report,
        labels,
    })
}

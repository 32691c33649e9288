//! Factor analysis of fully random sweeps.
//!
//! Features per run are the diffusion coefficients `eps_k`, the
//! growth-normalised competition ratios `alpha_kl / r_k`, the initial
//! populations and the final domain averages. Factors are extracted as
//! principal components of the Pearson correlation matrix, rotated with
//! (Kaiser-normalised) varimax and labelled by the feature group that loads
//! most heavily on them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::math;
use crate::sweep::{off_diagonal_pairs, SweepRecord};

/// Labelled group of feature columns. Species numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureGroup {
    Diffusion(usize),
    /// The ratios `alpha_kl / r_k` of one species `k`.
    GrowCompete(usize),
    InitialPopulation(usize),
    FinalPopulation(usize),
}

impl FeatureGroup {
    pub fn is_diffusion(self) -> bool {
        matches!(self, FeatureGroup::Diffusion(_))
    }

    pub fn is_grow_compete(self) -> bool {
        matches!(self, FeatureGroup::GrowCompete(_))
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureGroup::Diffusion(k) => write!(f, "Diffusion {k}"),
            FeatureGroup::GrowCompete(k) => write!(f, "Grow Compete {k}"),
            FeatureGroup::InitialPopulation(k) => write!(f, "Init. Pop. {k}"),
            FeatureGroup::FinalPopulation(k) => write!(f, "Fin. Pop. {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub groups: Vec<FeatureGroup>,
    /// One row per converged run.
    pub data: Matrix,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }
}

/// Feature rows for every converged record, columns ordered
/// `eps_k`, `alpha_kl/r_k` (row-major over `k != l`), `u0_k`, final average.
pub fn build_features(records: &[SweepRecord]) -> Result<FeatureMatrix> {
    let first = records.first().ok_or(Error::Empty("sweep records"))?;
    let m = first.species_count();
    let pairs: Vec<(usize, usize)> = off_diagonal_pairs(m).collect();

    let mut names = Vec::new();
    let mut groups = Vec::new();
    for k in 1..=m {
        names.push(format!("eps{k}"));
        groups.push(FeatureGroup::Diffusion(k));
    }
    for &(k, l) in &pairs {
        names.push(format!("a{}{}/r{}", k + 1, l + 1, k + 1));
        groups.push(FeatureGroup::GrowCompete(k + 1));
    }
    for k in 1..=m {
        names.push(format!("u0_{k}"));
        groups.push(FeatureGroup::InitialPopulation(k));
    }
    for k in 1..=m {
        names.push(format!("fin{k}"));
        groups.push(FeatureGroup::FinalPopulation(k));
    }

    let cols = names.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for r in records.iter().filter(|r| r.converged) {
        if r.species_count() != m {
            return Err(Error::DimensionMismatch {
                what: "record species count",
                expected: m,
                found: r.species_count(),
            });
        }
        data.extend_from_slice(&r.diffusion);
        for &(k, l) in &pairs {
            if r.growth[k] == 0.0 {
                return Err(Error::invalid(
                    "growth rate",
                    format!(
                        "run {}: r_{} = 0 makes alpha/r undefined",
                        r.run_index,
                        k + 1
                    ),
                ));
            }
            data.push(r.alpha(k, l) / r.growth[k]);
        }
        data.extend_from_slice(&r.initial);
        data.extend_from_slice(&r.final_averages);
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Empty("converged sweep records"));
    }
    Ok(FeatureMatrix {
        names,
        groups,
        data: Matrix::from_row_major(rows, cols, data)?,
    })
}

/// Pearson correlation of the feature columns, exactly symmetric with a unit
/// diagonal.
pub fn correlation_matrix(features: &FeatureMatrix) -> Result<Matrix> {
    let n = features.rows();
    let p = features.cols();
    if n < 2 {
        return Err(Error::invalid("feature matrix", "need at least two rows"));
    }
    let mut z = Matrix::zeros(n, p);
    for j in 0..p {
        let col = features.data.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|x| (x - mean) * (x - mean)).sum();
        if !(ss > 0.0) || !ss.is_finite() {
            return Err(Error::ZeroVariance(features.names[j].clone()));
        }
        let scale = 1.0 / math::sqrt(ss);
        for (i, x) in col.iter().enumerate() {
            z[(i, j)] = (x - mean) * scale;
        }
    }
    let mut c = Matrix::identity(p);
    for a in 0..p {
        for b in (a + 1)..p {
            let r = (0..n)
                .map(|i| z[(i, a)] * z[(i, b)])
                .sum::<f64>()
                .clamp(-1.0, 1.0);
            c[(a, b)] = r;
            c[(b, a)] = r;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorReport {
    pub correlation: Matrix,
    /// All eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// `P x F` loadings before rotation, column `j` = `v_j sqrt(lambda_j)`.
    pub unrotated: Matrix,
    /// `P x F` loadings after rotation, columns in descending explained variance.
    pub loadings: Matrix,
    /// Share of the total variance `P` carried by each rotated factor.
    pub explained_variance: Vec<f64>,
    pub cumulative_variance: f64,
}

impl FactorReport {
    pub fn factor_count(&self) -> usize {
        self.loadings.cols()
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Principal-factor extraction of `retain` factors followed by varimax.
pub fn extract_factors(correlation: &Matrix, retain: usize) -> Result<FactorReport> {
    let p = correlation.rows();
    if !correlation.is_square() {
        return Err(Error::DimensionMismatch {
            what: "correlation columns",
            expected: p,
            found: correlation.cols(),
        });
    }
    if let Some((row, col)) = correlation.asymmetry(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric { row, col });
    }
    if retain == 0 || retain > p {
        return Err(Error::invalid(
            "factor count",
            format!("need 1 <= F <= {p}, got {retain}"),
        ));
    }
    let eigen = symmetric_eigen(correlation)?;

    let mut unrotated = Matrix::zeros(p, retain);
    for j in 0..retain {
        let s = math::sqrt(eigen.values[j].max(0.0));
        for i in 0..p {
            unrotated[(i, j)] = eigen.vectors[(i, j)] * s;
        }
    }
    orient_columns(&mut unrotated);

    let rotated = if retain >= 2 {
        varimax(&unrotated)
    } else {
        unrotated.clone()
    };

    let variances: Vec<f64> = (0..retain)
        .map(|j| (0..p).map(|i| rotated[(i, j)] * rotated[(i, j)]).sum())
        .collect();
    let mut order: Vec<usize> = (0..retain).collect();
    order.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]).then(a.cmp(&b)));
    let mut loadings = Matrix::zeros(p, retain);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..p {
            loadings[(i, dst)] = rotated[(i, src)];
        }
    }
    orient_columns(&mut loadings);

    let total = p as f64;
    Ok(FactorReport {
        correlation: correlation.clone(),
        cumulative_variance: eigen.values[..retain]
            .iter()
            .map(|l| l.max(0.0))
            .sum::<f64>()
            / total,
        explained_variance: order.iter().map(|&j| variances[j] / total).collect(),
        eigenvalues: eigen.values,
        unrotated,
        loadings,
    })
}

/// Flips each column so its largest-magnitude entry is positive.
fn orient_columns(m: &mut Matrix) {
    for j in 0..m.cols() {
        let mut pivot = 0.0f64;
        for i in 0..m.rows() {
            if m[(i, j)].abs() > pivot.abs() {
                pivot = m[(i, j)];
            }
        }
        if pivot < 0.0 {
            for i in 0..m.rows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}

const VARIMAX_MAX_SWEEPS: usize = 500;
const VARIMAX_ANGLE_TOL: f64 = 1e-12;

/// Kaiser-normalised varimax by successive planar rotations.
pub fn varimax(loadings: &Matrix) -> Matrix {
    let p = loadings.rows();
    let f = loadings.cols();
    let mut a = loadings.clone();
    let norms: Vec<f64> = (0..p)
        .map(|i| math::sqrt(a.row(i).iter().map(|x| x * x).sum()))
        .collect();
    for i in 0..p {
        if norms[i] > 0.0 {
            for j in 0..f {
                a[(i, j)] /= norms[i];
            }
        }
    }

    let n = p as f64;
    for _ in 0..VARIMAX_MAX_SWEEPS {
        let mut largest = 0.0f64;
        for c1 in 0..f {
            for c2 in (c1 + 1)..f {
                let (mut sa, mut sb, mut sc, mut sd) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..p {
                    let x = a[(i, c1)];
                    let y = a[(i, c2)];
                    let u = x * x - y * y;
                    let v = 2.0 * x * y;
                    sa += u;
                    sb += v;
                    sc += u * u - v * v;
                    sd += 2.0 * u * v;
                }
                let num = sd - 2.0 * sa * sb / n;
                let den = sc - (sa * sa - sb * sb) / n;
                let phi = 0.25 * math::atan2(num, den);
                if phi.abs() < VARIMAX_ANGLE_TOL {
                    continue;
                }
                largest = largest.max(phi.abs());
                let (s, c) = math::sin_cos(phi);
                for i in 0..p {
                    let x = a[(i, c1)];
                    let y = a[(i, c2)];
                    a[(i, c1)] = c * x + s * y;
                    a[(i, c2)] = -s * x + c * y;
                }
            }
        }
        if largest < VARIMAX_ANGLE_TOL {
            break;
        }
    }

    for i in 0..p {
        if norms[i] > 0.0 {
            for j in 0..f {
                a[(i, j)] *= norms[i];
            }
        }
    }
    a
}

/// Raw varimax criterion: sum over factors of the variance of squared loadings.
pub fn varimax_criterion(loadings: &Matrix) -> f64 {
    let p = loadings.rows() as f64;
    (0..loadings.cols())
        .map(|j| {
            let sq: Vec<f64> = (0..loadings.rows())
                .map(|i| loadings[(i, j)] * loadings[(i, j)])
                .collect();
            let mean = sq.iter().sum::<f64>() / p;
            sq.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / p
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorLabel {
    /// 1-based factor number.
    pub factor: usize,
    pub group: FeatureGroup,
    /// Mean absolute loading of the winning group.
    pub score: f64,
    pub explained_variance: f64,
    /// Another group matched the winning score.
    pub tie: bool,
}

impl fmt::Display for FactorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Factor {}: {} (var {:.1}%)",
            self.factor,
            self.group,
            100.0 * self.explained_variance
        )?;
        if self.tie {
            f.write_str(" [tie]")?;
        }
        Ok(())
    }
}

/// Labels each factor by the group with the largest mean absolute loading.
/// Ties go to the group whose first column comes first.
pub fn label_factors(report: &FactorReport, groups: &[FeatureGroup]) -> Result<Vec<FactorLabel>> {
    let p = report.loadings.rows();
    if groups.len() != p {
        return Err(Error::DimensionMismatch {
            what: "feature groups",
            expected: p,
            found: groups.len(),
        });
    }
    let mut distinct: Vec<FeatureGroup> = Vec::new();
    for g in groups {
        if !distinct.contains(g) {
            distinct.push(*g);
        }
    }
    let labels = (0..report.factor_count())
        .map(|j| {
            let scores: Vec<f64> = distinct
                .iter()
                .map(|g| {
                    let (sum, count) = groups
                        .iter()
                        .enumerate()
                        .filter(|(_, h)| *h == g)
                        .fold((0.0, 0usize), |(s, c), (i, _)| {
                            (s + report.loadings[(i, j)].abs(), c + 1)
                        });
                    sum / count as f64
                })
                .collect();
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let close = |s: f64| (best - s).abs() <= 1e-12 * best.abs().max(1.0);
            let winner = scores.iter().position(|&s| close(s)).expect("non-empty");
            FactorLabel {
                factor: j + 1,
                group: distinct[winner],
                score: scores[winner],
                explained_variance: report.explained_variance[j],
                tie: scores.iter().filter(|&&s| close(s)).count() > 1,
            }
        })
        .collect();
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::SurvivalCode;
    use alloc::string::ToString;
    use alloc::vec;

    fn features(cols: &[Vec<f64>]) -> FeatureMatrix {
        let rows = cols[0].len();
        let mut data = Matrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                data[(i, j)] = v;
            }
        }
        FeatureMatrix {
            names: (0..cols.len()).map(|j| format!("c{j}")).collect(),
            groups: (0..cols.len())
                .map(|j| FeatureGroup::Diffusion(j + 1))
                .collect(),
            data,
        }
    }

    #[test]
    fn duplicated_and_negated_columns() {
        let x = vec![0.1, 0.5, 0.2, 0.9, 0.4];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let c = correlation_matrix(&features(&[x.clone(), x, neg])).unwrap();
        assert!((c[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((c[(0, 2)] + 1.0).abs() < 1e-15);
        assert_eq!(c[(2, 2)], 1.0);
        assert_eq!(c[(1, 0)], c[(0, 1)]);
    }

    #[test]
    fn zero_variance_names_the_column() {
        let fm = features(&[vec![1.0, 2.0, 3.0], vec![0.5, 0.5, 0.5]]);
        assert_eq!(
            correlation_matrix(&fm),
            Err(Error::ZeroVariance("c1".into()))
        );
        assert!(correlation_matrix(&features(&[vec![1.0]])).is_err());
    }

    #[test]
    fn identity_correlation_splits_variance_evenly() {
        let r = extract_factors(&Matrix::identity(4), 4).unwrap();
        for j in 0..4 {
            assert!((r.explained_variance[j] - 0.25).abs() < 1e-14);
            let col = r.loadings.column(j);
            assert_eq!(
                col.iter().filter(|v| (v.abs() - 1.0).abs() < 1e-14).count(),
                1
            );
            assert_eq!(col.iter().filter(|v| v.abs() < 1e-14).count(), 3);
        }
        assert!((r.cumulative_variance - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_single_factor() {
        let c = Matrix::from_rows(&[vec![1.0, 0.6], vec![0.6, 1.0]]).unwrap();
        let r = extract_factors(&c, 1).unwrap();
        assert!((r.eigenvalues[0] - 1.6).abs() < 1e-14);
        assert!((r.cumulative_variance - 0.8).abs() < 1e-14);
        let s = math::sqrt(0.8);
        assert!((r.loadings[(0, 0)] - s).abs() < 1e-14);
        assert!((r.loadings[(1, 0)] - s).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut c = Matrix::identity(3);
        c[(0, 1)] = 0.5;
        assert!(matches!(
            extract_factors(&c, 2),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(extract_factors(&Matrix::identity(3), 0).is_err());
        assert!(extract_factors(&Matrix::identity(3), 4).is_err());
        assert!(extract_factors(&Matrix::zeros(2, 3), 1).is_err());
    }

    fn report_with(loadings: Matrix) -> FactorReport {
        let f = loadings.cols();
        FactorReport {
            correlation: Matrix::identity(loadings.rows()),
            eigenvalues: vec![1.0; loadings.rows()],
            unrotated: loadings.clone(),
            loadings,
            explained_variance: vec![0.25; f],
            cumulative_variance: 0.25 * f as f64,
        }
    }

    #[test]
    fn label_by_dominant_group() {
        let groups = [
            FeatureGroup::Diffusion(1),
            FeatureGroup::Diffusion(2),
            FeatureGroup::GrowCompete(1),
            FeatureGroup::GrowCompete(2),
        ];
        let l = Matrix::from_rows(&[vec![0.1], vec![0.9], vec![0.2], vec![-0.15]]).unwrap();
        let labels = label_factors(&report_with(l), &groups).unwrap();
        assert_eq!(labels[0].group, FeatureGroup::Diffusion(2));
        assert!(!labels[0].tie);
        assert_eq!(labels[0].to_string(), "Factor 1: Diffusion 2 (var 25.0%)");
    }

    #[test]
    fn ties_go_to_lower_group_and_are_flagged() {
        let groups = [
            FeatureGroup::Diffusion(1),
            FeatureGroup::GrowCompete(1),
            FeatureGroup::GrowCompete(1),
        ];
        let l = Matrix::from_rows(&[vec![0.5], vec![0.5], vec![-0.5]]).unwrap();
        let labels = label_factors(&report_with(l), &groups).unwrap();
        assert_eq!(labels[0].group, FeatureGroup::Diffusion(1));
        assert!(labels[0].tie);
        assert!(labels[0].to_string().ends_with("[tie]"));
    }

    #[test]
    fn varimax_does_not_decrease_simplicity() {
        let l = Matrix::from_rows(&[
            vec![0.7, 0.4],
            vec![0.6, 0.5],
            vec![0.5, -0.6],
            vec![0.4, -0.7],
        ])
        .unwrap();
        let r = varimax(&l);
        assert!(varimax_criterion(&r) >= varimax_criterion(&l));
        for i in 0..4 {
            let before: f64 = l.row(i).iter().map(|x| x * x).sum();
            let after: f64 = r.row(i).iter().map(|x| x * x).sum();
            assert!((before - after).abs() < 1e-12);
        }
    }

    #[test]
    fn builds_expected_columns() {
        let rec = |m: usize| SweepRecord {
            run_index: 0,
            growth: vec![0.05; m],
            raw_diffusion: vec![0.02; m],
            diffusion: vec![0.02; m],
            competition: vec![0.1; m * (m - 1)],
            initial: vec![0.3; m],
            final_averages: vec![0.4; m],
            survival_code: SurvivalCode::new(vec![true; m]),
            steps_to_equilibrium: 3,
            converged: true,
        };
        let two = build_features(&[rec(2), rec(2)]).unwrap();
        assert_eq!(two.cols(), 8);
        assert_eq!(two.rows(), 2);
        assert_eq!(two.data[(0, 2)], 2.0);
        assert_eq!(two.data.row(0), two.data.row(1));
        assert_eq!(
            two.names,
            ["eps1", "eps2", "a12/r1", "a21/r2", "u0_1", "u0_2", "fin1", "fin2"]
        );
        let three = build_features(&[rec(3)]).unwrap();
        assert_eq!(three.cols(), 15);
        assert_eq!(three.groups[3], FeatureGroup::GrowCompete(1));
        assert_eq!(three.groups[5], FeatureGroup::GrowCompete(2));

        let mut nc = rec(2);
        nc.converged = false;
        assert!(build_features(&[nc]).is_err());
        assert!(build_features(&[]).is_err());
    }
}

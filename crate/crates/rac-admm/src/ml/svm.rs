//! Kernelized soft-margin binary classification trained through the
//! box-constrained dual.
//!
//! Training solves
//!
//! ```text
//! min ½ zᵀQz − eᵀz   s.t.  yᵀz = 0,  0 ≤ z ≤ C,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! with the core multi-block solver, using the loose residual protocol that
//! works well for classification (tolerance 1e-1, ten iterations, penalty
//! 0.1·p for p blocks of at most 100 points). The dual residual is left at
//! that same loose scale on purpose: tightening it barely moves test accuracy
//! but inflates run time. The trained model keeps the support vectors, their
//! coefficients, and an averaged bias, and predicts with
//! `sign(Σ y_i z_i K(x_i, ·) + b)` where a zero decision value maps to +1.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::admm::{solve, Grouping, Mode, SolverOptions};
use crate::error::Error;
use crate::generators::{gen_svm_dual, GaussianKernel, SvmSpec};
use crate::Result;

/// Dual coefficients at or below this value are treated as zero; support
/// indices are exactly the coordinates above it.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Knobs for [`train_csvc`]. The defaults implement the loose training
/// protocol; tests and callers that need an interior-accurate dual can
/// tighten `eps` and raise `max_iter`.
#[derive(Debug, Clone)]
pub struct SvmTrainOptions {
    /// Maximum training points per block.
    pub block_size: usize,
    /// Augmented Lagrangian penalty; defaults to 0.1 · (number of blocks).
    pub beta: Option<f64>,
    /// Residual tolerance handed to the dual solver.
    pub eps: f64,
    /// Iteration cap for the dual solver.
    pub max_iter: usize,
    /// Seed for the random block assembly.
    pub seed: u64,
}

impl Default for SvmTrainOptions {
    fn default() -> Self {
        SvmTrainOptions {
            block_size: 100,
            beta: None,
            eps: 1e-1,
            max_iter: 10,
            seed: 0,
        }
    }
}

/// A trained classifier: support coefficients, the retained support points
/// for kernel evaluation, the averaged bias, and the hyperparameters.
#[derive(Debug, Clone)]
pub struct SvmModel {
    /// Full clamped dual vector, one coefficient per training point, each in
    /// `[0, C]` exactly.
    pub coefficients: Vec<f64>,
    /// Indices of training points whose coefficient exceeds [`SUPPORT_TOL`].
    pub support: Vec<usize>,
    /// Labels of the support points.
    pub support_labels: Vec<f64>,
    /// Bias of the decision function.
    pub b: f64,
    /// Gaussian kernel width.
    pub sigma: f64,
    /// Box bound of the dual.
    pub c: f64,
    /// Kernel over the retained support points.
    kernel: GaussianKernel,
}

#[derive(Serialize)]
struct ModelSummary<'a> {
    support_indices: &'a [usize],
    coefficients: Vec<f64>,
    b: f64,
    sigma: f64,
    c: f64,
}

impl SvmModel {
    /// Raw decision value `Σ_{i in support} y_i z_i K(x_i, x) + b`.
    /// Coefficients at or below [`SUPPORT_TOL`] are treated as zero.
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        let mut v = self.b;
        for (k, &i) in self.support.iter().enumerate() {
            v += self.support_labels[k] * self.coefficients[i] * self.kernel.eval_point(k, x);
        }
        v
    }

    /// Predicted label, +1.0 or -1.0. A decision value of exactly zero maps
    /// to +1.
    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.decision_value(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Percentage of correctly predicted labels, in [0, 100]. One test point
    /// per row of `features`.
    pub fn accuracy(&self, features: &DMatrix<f64>, labels: &[f64]) -> Result<f64> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "cannot score an empty test set".into(),
            ));
        }
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} labels for {} test points",
                labels.len(),
                n
            )));
        }
        let mut correct = 0usize;
        let mut point = vec![0.0; features.ncols()];
        for i in 0..n {
            for (j, v) in point.iter_mut().enumerate() {
                *v = features[(i, j)];
            }
            if self.predict(&point) == labels[i] {
                correct += 1;
            }
        }
        Ok(correct as f64 / n as f64 * 100.0)
    }

    /// JSON summary of the model: support indices, their coefficients, bias,
    /// and hyperparameters.
    pub fn to_json(&self) -> Result<String> {
        let summary = ModelSummary {
            support_indices: &self.support,
            coefficients: self.support.iter().map(|&i| self.coefficients[i]).collect(),
            b: self.b,
            sigma: self.sigma,
            c: self.c,
        };
        Ok(serde_json::to_string_pretty(&summary)?)
    }
}

/// Train a C-parameterized soft-margin classifier on `spec`.
///
/// The dual solve runs under `options`; the returned coefficients are the
/// final iterate projected onto `[0, C]`, so box feasibility is exact. The
/// bias is averaged over margin vectors (coefficients strictly inside the
/// box); when none exist it falls back to averaging over all support
/// vectors, and when there is no support at all (e.g. every label identical
/// forces `z = 0`) the bias is the mean label, which yields a constant
/// majority classifier.
pub fn train_csvc(spec: &SvmSpec, options: &SvmTrainOptions) -> Result<SvmModel> {
    if options.block_size == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    let (problem, _) = gen_svm_dual(spec)?;
    let n = spec.features.nrows();
    let p = n.div_ceil(options.block_size).max(1);
    let beta = options.beta.unwrap_or(0.1 * p as f64);

    let solver = SolverOptions {
        mode: Mode::Rac,
        p,
        beta,
        eps: options.eps,
        max_iter: options.max_iter,
        max_time: None,
        seed: options.seed,
        grouping: Grouping::None,
        partial: None,
        initial_x: None,
    };
    let result = solve(&problem, &solver)?;

    let z: Vec<f64> = result.x.iter().map(|&v| v.clamp(0.0, spec.c)).collect();
    let support: Vec<usize> = (0..n).filter(|&i| z[i] > SUPPORT_TOL).collect();
    let support_labels: Vec<f64> = support.iter().map(|&i| spec.labels[i]).collect();

    let train_kernel = GaussianKernel {
        points: spec.features.clone(),
        sigma: spec.sigma,
    };
    // w'phi(x_i) restricted to the support; smaller coefficients are noise at
    // the protocol's tolerance and are dropped consistently with prediction.
    let w_dot = |i: usize| -> f64 {
        support
            .iter()
            .map(|&j| spec.labels[j] * z[j] * train_kernel.eval(j, i))
            .sum()
    };

    let margin: Vec<usize> = support
        .iter()
        .copied()
        .filter(|&i| z[i] < spec.c - SUPPORT_TOL)
        .collect();
    let averaging_set: &[usize] = if !margin.is_empty() {
        &margin
    } else {
        &support
    };
    let b = if averaging_set.is_empty() {
        spec.labels.iter().sum::<f64>() / n as f64
    } else {
        averaging_set
            .iter()
            .map(|&i| spec.labels[i] - w_dot(i))
            .sum::<f64>()
            / averaging_set.len() as f64
    };

    let r = spec.features.ncols();
    let support_points = DMatrix::from_fn(support.len(), r, |k, j| spec.features[(support[k], j)]);
    Ok(SvmModel {
        coefficients: z,
        support,
        support_labels,
        b,
        sigma: spec.sigma,
        c: spec.c,
        kernel: GaussianKernel {
            points: support_points,
            sigma: spec.sigma,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    /// Tightened protocol for tests that need an accurate dual rather than
    /// the loose training defaults.
    fn tight() -> SvmTrainOptions {
        SvmTrainOptions {
            eps: 1e-8,
            max_iter: 2000,
            ..Default::default()
        }
    }

    fn two_point_spec() -> SvmSpec {
        SvmSpec {
            features: DMatrix::from_column_slice(2, 1, &[-1.0, 1.0]),
            labels: vec![-1.0, 1.0],
            c: 1.0,
            sigma: 1.0,
        }
    }

    #[test]
    fn the_two_point_model_matches_the_analytic_solution() {
        // Symmetric pair x = -1, +1 with labels -1, +1: Q = [[1, -k],[-k, 1]]
        // with k = exp(-2). On the feasible line z1 = z2 = t the objective is
        // (1-k)t^2 - 2t, minimized at t = 1/(1-k) > 1 = C, so the box clamps
        // both coefficients to C and the averaged bias cancels to zero.
        let k = (-2.0f64).exp();
        let unclamped = 1.0 / (1.0 - k);
        assert!(unclamped > 1.0);

        let model = train_csvc(&two_point_spec(), &tight()).unwrap();
        assert!((model.coefficients[0] - 1.0).abs() < 1e-6);
        assert!((model.coefficients[1] - 1.0).abs() < 1e-6);
        assert!(
            (model.coefficients[0] - model.coefficients[1]).abs() < 1e-8,
            "symmetry: {:?}",
            model.coefficients
        );
        assert_eq!(model.support, vec![0, 1]);
        assert!(model.b.abs() < 1e-9, "bias {}", model.b);

        // Training points reproduce their labels; accuracy is exactly 100.
        assert_eq!(model.predict(&[-1.0]), -1.0);
        assert_eq!(model.predict(&[1.0]), 1.0);
        let spec = two_point_spec();
        let acc = model.accuracy(&spec.features, &spec.labels).unwrap();
        assert_eq!(acc, 100.0);
    }

    #[test]
    fn the_midpoint_of_the_symmetric_pair_takes_the_positive_tie() {
        let model = train_csvc(&two_point_spec(), &tight()).unwrap();
        let v = model.decision_value(&[0.0]);
        assert!(v.abs() < 1e-9, "midpoint decision value {v}");
        assert_eq!(model.predict(&[0.0]), 1.0);
    }

    #[test]
    fn far_points_follow_the_nearest_support_vector() {
        let model = train_csvc(&two_point_spec(), &tight()).unwrap();
        // At x = 3 the kernel weight of the +1 point (exp(-2)) dwarfs that of
        // the -1 point (exp(-8)); symmetrically at x = -3.
        assert_eq!(model.predict(&[3.0]), 1.0);
        assert_eq!(model.predict(&[-3.0]), -1.0);
        assert!(model.decision_value(&[3.0]) > 0.1);
        assert!(model.decision_value(&[-3.0]) < -0.1);
    }

    #[test]
    fn duplicating_the_training_set_keeps_the_decision_function() {
        let base = SvmSpec {
            features: DMatrix::from_column_slice(4, 1, &[-2.0, -1.0, 1.0, 2.0]),
            labels: vec![-1.0, -1.0, 1.0, 1.0],
            c: 10.0,
            sigma: 1.0,
        };
        let doubled = SvmSpec {
            features: DMatrix::from_column_slice(
                8,
                1,
                &[-2.0, -1.0, 1.0, 2.0, -2.0, -1.0, 1.0, 2.0],
            ),
            labels: vec![-1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0],
            c: 10.0,
            sigma: 1.0,
        };
        let opts = SvmTrainOptions {
            eps: 1e-9,
            max_iter: 5000,
            ..Default::default()
        };
        let m1 = train_csvc(&base, &opts).unwrap();
        let m2 = train_csvc(&doubled, &opts).unwrap();

        // The duplicated dual splits each coefficient across the two copies,
        // so the total mass is conserved while the decision function is
        // unchanged.
        let sum1: f64 = m1.coefficients.iter().sum();
        let sum2: f64 = m2.coefficients.iter().sum();
        assert!(
            (sum1 - sum2).abs() < 1e-3 * sum1.max(1.0),
            "coefficient mass {sum1} vs {sum2}"
        );
        // The grid is offset from the symmetry point x = 0, where the
        // decision value vanishes and its sign is numerical noise.
        let mut x = -3.25;
        while x <= 3.25 {
            assert_eq!(m1.predict(&[x]), m2.predict(&[x]), "disagree at {x}");
            assert!(
                (m1.decision_value(&[x]) - m2.decision_value(&[x])).abs() < 1e-2,
                "decision values drift at {x}"
            );
            x += 0.5;
        }
    }

    #[test]
    fn identical_labels_collapse_to_a_constant_classifier() {
        for label in [1.0, -1.0] {
            let spec = SvmSpec {
                features: DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0]),
                labels: vec![label; 3],
                c: 1.0,
                sigma: 1.0,
            };
            let opts = SvmTrainOptions {
                eps: 1e-10,
                max_iter: 5000,
                ..Default::default()
            };
            let model = train_csvc(&spec, &opts).unwrap();
            // The balance row y'z = 0 with z >= 0 forces z = 0, leaving the
            // mean-label bias.
            let mass: f64 = model.coefficients.iter().sum();
            assert!(mass < 1e-4, "dual mass {mass}");
            assert!((model.b - label).abs() < 1e-3, "bias {}", model.b);
            for x in [-5.0, 0.0, 1.0, 7.5] {
                assert_eq!(model.predict(&[x]), label);
            }
        }
    }

    #[test]
    fn trained_duals_respect_the_box_and_the_balance_row() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let n = 30;
        let features = DMatrix::from_fn(n, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let labels: Vec<f64> = (0..n)
            .map(|i| {
                if features[(i, 0)] + features[(i, 1)] > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let spec = SvmSpec {
            features,
            labels: labels.clone(),
            c: 1.0,
            sigma: 1.0,
        };
        let eps = 1e-6;
        let opts = SvmTrainOptions {
            eps,
            max_iter: 20_000,
            ..Default::default()
        };
        let model = train_csvc(&spec, &opts).unwrap();
        assert!(model
            .coefficients
            .iter()
            .all(|&z| (0.0..=spec.c).contains(&z)));
        let balance: f64 = model
            .coefficients
            .iter()
            .zip(&labels)
            .map(|(&z, &y)| y * z)
            .sum();
        // The solver certifies |y'x| to eps up to residual normalization, and
        // the box projection can move each of the n coordinates by the bound
        // slack, which is also eps-scaled; 100x headroom covers both.
        assert!(balance.abs() <= 100.0 * eps, "|y'z| = {}", balance.abs());
    }

    #[test]
    fn accuracy_is_an_exact_percentage_and_rejects_empty_sets() {
        let model = train_csvc(&two_point_spec(), &tight()).unwrap();

        let spec = two_point_spec();
        assert_eq!(
            model.accuracy(&spec.features, &spec.labels).unwrap(),
            100.0
        );

        // One of two labels flipped: exactly half correct.
        assert_eq!(
            model.accuracy(&spec.features, &[-1.0, -1.0]).unwrap(),
            50.0
        );

        // Ten-point fixture counted by hand: predictions are the sign of x
        // (with +1 at the midpoint), so the labels at indices 2 and 6
        // mismatch and exactly 8 of 10 are correct.
        let xs = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0];
        let labels = [-1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0];
        let fixture = DMatrix::from_column_slice(10, 1, &xs);
        assert_eq!(model.accuracy(&fixture, &labels).unwrap(), 80.0);

        let empty = DMatrix::<f64>::zeros(0, 1);
        assert!(matches!(
            model.accuracy(&empty, &[]).unwrap_err(),
            Error::InvalidArgument(_)
        ));
        assert!(matches!(
            model.accuracy(&fixture, &labels[..9]).unwrap_err(),
            Error::Dimension(_)
        ));
    }

    #[test]
    fn the_loose_protocol_separates_two_clouds() {
        // 200 points in two well-separated clusters, trained with the loose
        // defaults (tolerance 1e-1, ten iterations, two blocks, penalty 0.2).
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let n = 200;
        let features = DMatrix::from_fn(n, 2, |i, _| {
            let center = if i < n / 2 { 2.0 } else { -2.0 };
            center + 0.3 * rng.sample::<f64, _>(StandardNormal)
        });
        let labels: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
        let spec = SvmSpec {
            features: features.clone(),
            labels: labels.clone(),
            c: 1.0,
            sigma: 1.0,
        };
        let model = train_csvc(&spec, &SvmTrainOptions::default()).unwrap();
        let acc = model.accuracy(&features, &labels).unwrap();
        assert!(acc >= 95.0, "training accuracy {acc}");
    }

    #[test]
    fn the_model_serializes_its_support_summary() {
        let model = train_csvc(&two_point_spec(), &tight()).unwrap();
        let json = model.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let idx = v["support_indices"].as_array().unwrap();
        let coef = v["coefficients"].as_array().unwrap();
        assert_eq!(idx.len(), model.support.len());
        assert_eq!(coef.len(), model.support.len());
        assert!(v["b"].is_number());
        assert_eq!(v["sigma"].as_f64().unwrap(), 1.0);
        assert_eq!(v["c"].as_f64().unwrap(), 1.0);
    }

    #[test]
    fn zero_block_size_is_rejected() {
        let bad = SvmTrainOptions {
            block_size: 0,
            ..Default::default()
        };
        assert!(matches!(
            train_csvc(&two_point_spec(), &bad).unwrap_err(),
            Error::InvalidArgument(_)
        ));
    }
}

//! Posterior-predictive mean and variance averaged over a hyperparameter ensemble.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{kernel_value, KernelForm, PairwiseDistances};
use crate::matrix::Matrix;
use crate::params::{BlockParams, HyperParams, Layout};
use crate::trace::Probe;

/// Where an ensemble came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine: String,
    pub seed: u64,
    pub schedule: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub weight: f64,
    pub params: HyperParams,
}

/// Weighted hyperparameter samples; weights sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEnsemble {
    samples: Vec<WeightedSample>,
    provenance: Provenance,
}

impl PosteriorEnsemble {
    pub fn new(samples: Vec<WeightedSample>, provenance: Provenance) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("an ensemble needs at least one sample".into()));
        }
        let layout = samples[0].params.layout();
        if samples.iter().any(|s| s.params.layout() != layout) {
            return Err(Error::Shape("ensemble samples differ in layout".into()));
        }
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        if !(total > 0.0 && total.is_finite()) || samples.iter().any(|s| !(s.weight >= 0.0)) {
            return Err(Error::Config("ensemble weights must be non-negative with a positive sum".into()));
        }
        let samples = samples
            .into_iter()
            .map(|s| WeightedSample {
                weight: s.weight / total,
                params: s.params,
            })
            .collect();
        Ok(Self {
            samples,
            provenance,
        })
    }

    /// Equally weighted ensemble from raw `θ` vectors.
    pub fn uniform(layout: Layout, thetas: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        let w = 1.0 / thetas.len().max(1) as f64;
        let samples = thetas
            .into_iter()
            .map(|t| {
                Ok(WeightedSample {
                    weight: w,
                    params: HyperParams::new(layout.d, layout.m, t)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, provenance)
    }

    pub fn samples(&self) -> &[WeightedSample] {
        &self.samples
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn layout(&self) -> Layout {
        self.samples[0].params.layout()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// At most `max` samples, evenly spaced through the ensemble, reweighted uniformly
    /// when the source was uniform and renormalized otherwise.
    pub fn thinned(&self, max: usize) -> Self {
        if max == 0 || self.samples.len() <= max {
            return self.clone();
        }
        let n = self.samples.len();
        let picked = (0..max)
            .map(|i| self.samples[i * n / max].clone())
            .collect();
        Self::new(picked, self.provenance.clone()).expect("subset of a valid ensemble")
    }

    /// Weighted posterior mean of every scalar.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.layout().len()];
        for s in &self.samples {
            for (acc, v) in m.iter_mut().zip(s.params.values()) {
                *acc += s.weight * v;
            }
        }
        m
    }
}

/// Predictive moments in original output units, `n_test x m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: Matrix,
    pub variance: Matrix,
}

/// Per-output predictive moments for one `θ`, in standardized units.
#[derive(Clone, Debug)]
pub struct SamplePrediction {
    pub mean: Vec<Vec<f64>>,
    pub variance: Option<Vec<Vec<f64>>>,
}

/// Precomputed training geometry for repeated predictions against one test set.
pub struct Predictor<'a> {
    train: &'a Dataset,
    test: &'a Matrix,
    form: KernelForm,
    jitter: f64,
    distances: PairwiseDistances,
    outputs: Vec<Vec<f64>>,
}

impl<'a> Predictor<'a> {
    /// `test_inputs` must already be normalized with the training transform.
    pub fn new(train: &'a Dataset, test_inputs: &'a Matrix, form: KernelForm, jitter: f64) -> Result<Self> {
        if test_inputs.rows() > 0 && test_inputs.cols() != train.input_dim() {
            return Err(Error::Shape(format!(
                "test inputs have {} columns, model expects {}",
                test_inputs.cols(),
                train.input_dim()
            )));
        }
        Ok(Self {
            train,
            test: test_inputs,
            form,
            jitter,
            distances: PairwiseDistances::new(train),
            outputs: (0..train.output_dim()).map(|k| train.output_column(k)).collect(),
        })
    }

    /// GP predictive for one `θ`. The test-point variance includes both noise terms.
    pub fn predict_theta(&self, theta: &[f64], with_variance: bool) -> Result<SamplePrediction> {
        let layout = Layout::new(self.train.input_dim(), self.train.output_dim());
        if theta.len() != layout.len() {
            return Err(Error::Shape("theta does not match the training data".into()));
        }
        let x = self.train.inputs();
        let n_test = self.test.rows();
        let mut means = Vec::with_capacity(layout.m);
        let mut vars = Vec::with_capacity(layout.m);
        for k in 0..layout.m {
            let bp = BlockParams::from_slice(layout, theta, k);
            let block = self.distances.build_block(bp, k, self.form, self.jitter, theta)?;
            let alpha = block.cholesky.solve(&self.outputs[k]);
            let prior_var = self.form.prior_variance(layout.d, bp.lambda_z);
            let noise = 1.0 / bp.lambda_s + 1.0 / bp.lambda_o;
            let mut mean = Vec::with_capacity(n_test);
            let mut var = Vec::with_capacity(n_test);
            let mut kstar = vec![0.0; x.rows()];
            for t in 0..n_test {
                let xt = self.test.row(t);
                for (i, ks) in kstar.iter_mut().enumerate() {
                    *ks = kernel_value(xt, x.row(i), bp.beta, bp.lambda_z, self.form);
                }
                mean.push(kstar.iter().zip(&alpha).map(|(a, b)| a * b).sum());
                if with_variance {
                    let explained = block.cholesky.quadratic_form(&kstar);
                    // cancellation can push the latent variance a hair below zero
                    var.push((prior_var - explained).max(0.0) + noise);
                }
            }
            means.push(mean);
            vars.push(var);
        }
        Ok(SamplePrediction {
            mean: means,
            variance: with_variance.then_some(vars),
        })
    }

    /// Mixture moments over weighted samples, standardized units, indexed `[k][t]`.
    fn mixture(&self, thetas: &[&[f64]], weights: &[f64], with_variance: bool) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let m = self.train.output_dim();
        let n_test = self.test.rows();
        let mut mean = vec![vec![0.0; n_test]; m];
        let mut second = vec![vec![0.0; n_test]; m];
        for (theta, &w) in thetas.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let p = self.predict_theta(theta, with_variance)?;
            for k in 0..m {
                for t in 0..n_test {
                    let mu = p.mean[k][t];
                    mean[k][t] += w * mu;
                    if let Some(v) = &p.variance {
                        second[k][t] += w * (v[k][t] + mu * mu);
                    }
                }
            }
        }
        let var = (0..m)
            .map(|k| {
                (0..n_test)
                    .map(|t| (second[k][t] - mean[k][t] * mean[k][t]).max(0.0))
                    .collect()
            })
            .collect();
        Ok((mean, var))
    }

    /// Bayesian-model-averaged prediction in original units.
    pub fn predict(&self, ensemble: &PosteriorEnsemble) -> Result<Prediction> {
        let thetas: Vec<&[f64]> = ensemble.samples().iter().map(|s| s.params.values()).collect();
        let weights: Vec<f64> = ensemble.samples().iter().map(|s| s.weight).collect();
        let (mean, var) = self.mixture(&thetas, &weights, true)?;
        self.to_original_units(&mean, Some(&var))
    }

    fn to_original_units(&self, mean: &[Vec<f64>], var: Option<&[Vec<f64>]>) -> Result<Prediction> {
        let norm = self.train.normalization();
        let m = mean.len();
        let n_test = self.test.rows();
        let mut mean_m = Matrix::zeros(n_test, m);
        let mut var_m = Matrix::zeros(n_test, m);
        for k in 0..m {
            for t in 0..n_test {
                mean_m.set(t, k, mean[k][t]);
                if let Some(v) = var {
                    var_m.set(t, k, norm.destandardize_variance(k, v[k][t]));
                }
            }
        }
        Ok(Prediction {
            mean: norm.destandardize_outputs(&mean_m)?,
            variance: var_m,
        })
    }

    /// Mean-only mixture prediction in original units.
    pub fn predict_mean(&self, thetas: &[&[f64]], weights: &[f64]) -> Result<Matrix> {
        let (mean, _) = self.mixture(thetas, weights, false)?;
        Ok(self.to_original_units(&mean, None)?.mean)
    }
}

/// Ensemble prediction at normalized `test_inputs`.
pub fn predict(
    train: &Dataset,
    ensemble: &PosteriorEnsemble,
    test_inputs: &Matrix,
    form: KernelForm,
    jitter: f64,
) -> Result<Prediction> {
    let layout = ensemble.layout();
    if layout.d != train.input_dim() || layout.m != train.output_dim() {
        return Err(Error::Shape("ensemble does not match the training data".into()));
    }
    Predictor::new(train, test_inputs, form, jitter)?.predict(ensemble)
}

/// Per-output `sqrt(mean((pred - actual)²))`.
pub fn rmse(predicted: &Matrix, actual: &Matrix) -> Result<Vec<f64>> {
    if predicted.rows() != actual.rows() || predicted.cols() != actual.cols() {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, test outputs are {}x{}",
            predicted.rows(),
            predicted.cols(),
            actual.rows(),
            actual.cols()
        )));
    }
    if actual.rows() == 0 {
        return Err(Error::Shape("no test rows".into()));
    }
    let n = actual.rows() as f64;
    Ok((0..actual.cols())
        .map(|k| {
            let s: f64 = (0..actual.rows())
                .map(|i| (predicted.get(i, k) - actual.get(i, k)).powi(2))
                .sum();
            (s / n).sqrt()
        })
        .collect())
}

/// Scores weighted `θ` sets on a held-out split by the RMSE of the mixture mean.
pub struct RmseProbe<'a> {
    predictor: Predictor<'a>,
    actual: Matrix,
}

impl<'a> RmseProbe<'a> {
    pub fn new(train: &'a Dataset, test: &'a Dataset, form: KernelForm, jitter: f64) -> Result<Self> {
        Ok(Self {
            predictor: Predictor::new(train, test.inputs(), form, jitter)?,
            actual: test.raw_outputs(),
        })
    }
}

impl Probe for RmseProbe<'_> {
    fn rmse(&self, thetas: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>> {
        let mean = self.predictor.predict_mean(thetas, weights)?;
        rmse(&mean, &self.actual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provenance() -> Provenance {
        Provenance {
            engine: "test".into(),
            seed: 0,
            schedule: String::new(),
        }
    }

    fn small() -> Dataset {
        Dataset::normalized(
            Matrix::from_rows(&[vec![0.0], vec![0.45], vec![1.0]]).unwrap(),
            Matrix::new(3, 1, vec![0.8, -0.3, 1.1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rmse_examples() {
        let a = Matrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        assert_eq!(rmse(&a, &a).unwrap(), vec![0.0]);
        let shifted = Matrix::new(2, 1, vec![1.5, 2.5]).unwrap();
        assert!((rmse(&shifted, &a).unwrap()[0] - 0.5).abs() < 1e-15);
        let p = Matrix::new(2, 1, vec![3.0, 4.0]).unwrap();
        let z = Matrix::new(2, 1, vec![0.0, 0.0]).unwrap();
        assert!((rmse(&p, &z).unwrap()[0] - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&p, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn interpolates_training_point_without_noise() {
        let ds = small();
        let p = HyperParams::uniform(1, 1, 2.0, 1.0, 1e12, 1e12).unwrap();
        let ens = PosteriorEnsemble::uniform(p.layout(), vec![p.values().to_vec()], provenance()).unwrap();
        let test = Matrix::from_rows(&[vec![0.45]]).unwrap();
        let pred = predict(&ds, &ens, &test, KernelForm::ExponentiatedSum, 1e-12).unwrap();
        assert!((pred.mean.get(0, 0) + 0.3).abs() < 1e-6);
    }

    #[test]
    fn single_sample_mixture_is_that_sample() {
        let ds = small();
        let theta = vec![3.0, 0.7, 20.0, 50.0];
        let test = Matrix::from_rows(&[vec![0.2], vec![0.7], vec![1.4]]).unwrap();
        let pr = Predictor::new(&ds, &test, KernelForm::AdditiveSum, 1e-10).unwrap();
        let one = pr.predict_theta(&theta, true).unwrap();
        let ens = PosteriorEnsemble::uniform(Layout::new(1, 1), vec![theta], provenance()).unwrap();
        let mix = pr.predict(&ens).unwrap();
        for t in 0..3 {
            assert!((mix.mean.get(t, 0) - one.mean[0][t]).abs() < 1e-14);
            let v = one.variance.as_ref().unwrap()[0][t];
            assert!((mix.variance.get(t, 0) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn far_test_point_reverts_to_zero_mean() {
        let ds = small();
        let theta = vec![5.0, 1.0, 1e-3, 1e-3];
        let test = Matrix::from_rows(&[vec![50.0]]).unwrap();
        let pr = Predictor::new(&ds, &test, KernelForm::ExponentiatedSum, 1e-10).unwrap();
        let p = pr.predict_theta(&theta, false).unwrap();
        assert!(p.mean[0][0].abs() < 1e-12);
    }

    #[test]
    fn mixture_variance_and_order() {
        let ds = small();
        let test = Matrix::from_rows(&[vec![0.1], vec![0.6], vec![2.0]]).unwrap();
        let pr = Predictor::new(&ds, &test, KernelForm::ExponentiatedSum, 1e-10).unwrap();
        let a = vec![1.0, 1.0, 10.0, 10.0];
        let b = vec![20.0, 0.5, 3.0, 100.0];
        let layout = Layout::new(1, 1);
        let ab = PosteriorEnsemble::uniform(layout, vec![a.clone(), b.clone()], provenance()).unwrap();
        let ba = PosteriorEnsemble::uniform(layout, vec![b.clone(), a.clone()], provenance()).unwrap();
        let p1 = pr.predict(&ab).unwrap();
        let p2 = pr.predict(&ba).unwrap();
        let va = pr.predict_theta(&a, true).unwrap().variance.unwrap();
        let vb = pr.predict_theta(&b, true).unwrap().variance.unwrap();
        for t in 0..3 {
            assert!((p1.mean.get(t, 0) - p2.mean.get(t, 0)).abs() < 1e-14);
            assert!(p1.variance.get(t, 0) >= va[0][t].min(vb[0][t]) - 1e-14);
        }
    }

    #[test]
    fn thinning_keeps_spacing() {
        let layout = Layout::new(1, 1);
        let thetas: Vec<Vec<f64>> = (1..=10).map(|i| vec![i as f64, 1.0, 1.0, 1.0]).collect();
        let ens = PosteriorEnsemble::uniform(layout, thetas, provenance()).unwrap();
        let t = ens.thinned(5);
        let firsts: Vec<f64> = t.samples().iter().map(|s| s.params.values()[0]).collect();
        assert_eq!(firsts, vec![1.0, 3.0, 5.0, 7.0, 9.0]);
        assert!((t.samples().iter().map(|s| s.weight).sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(ens.thinned(50).len(), 10);
    }
}

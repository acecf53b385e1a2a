//! On-disk model format.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use gptemper::predict::{PosteriorEnsemble, Provenance, WeightedSample};
use gptemper::{Dataset, HyperParams, KernelForm, Layout, Matrix, Normalization, PriorSpec, RunConfig, TrainOutcome};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT: &str = "gptemper-model/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelProvenance {
    pub version: String,
    pub engine: String,
    pub seed: u64,
    pub schedule: String,
    /// SHA-256 over the run configuration and the data description.
    pub config_hash: String,
    pub data_sha256: String,
    pub output_columns: Vec<String>,
    pub test_fraction: f64,
    pub config: RunConfig,
    pub total_factorizations: u64,
    pub per_worker_factorizations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingData {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// Original units, one row per point.
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub normalization: Normalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSample {
    pub weight: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub provenance: ModelProvenance,
    pub priors: PriorSpec,
    pub kernel_form: KernelForm,
    pub jitter: f64,
    pub training: TrainingData,
    /// Names of the entries of every sample's `values`.
    pub parameter_names: Vec<String>,
    pub samples: Vec<ModelSample>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

impl ModelFile {
    pub fn build(
        train: &Dataset,
        config: &RunConfig,
        priors: &PriorSpec,
        outcome: &TrainOutcome,
        data_bytes: &[u8],
        test_fraction: f64,
        output_columns: &[String],
    ) -> Result<Self> {
        let data_sha256 = hex(&Sha256::digest(data_bytes));
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(config)?);
        h.update(data_sha256.as_bytes());
        h.update(serde_json::to_vec(&(output_columns, test_fraction))?);
        let ens = &outcome.ensemble;
        Ok(Self {
            format: FORMAT.into(),
            provenance: ModelProvenance {
                version: env!("CARGO_PKG_VERSION").into(),
                engine: ens.provenance().engine.clone(),
                seed: config.seed,
                schedule: ens.provenance().schedule.clone(),
                config_hash: hex(&h.finalize()),
                data_sha256,
                output_columns: output_columns.to_vec(),
                test_fraction,
                config: config.clone(),
                total_factorizations: outcome.total_factorizations,
                per_worker_factorizations: outcome.per_worker_factorizations,
            },
            priors: priors.clone(),
            kernel_form: config.kernel_form,
            jitter: config.jitter,
            training: TrainingData {
                input_names: train.input_names().to_vec(),
                output_names: train.output_names().to_vec(),
                inputs: rows(&train.raw_inputs()),
                outputs: rows(&train.raw_outputs()),
                normalization: train.normalization().clone(),
            },
            parameter_names: ens.layout().names(),
            samples: ens
                .samples()
                .iter()
                .map(|s| ModelSample {
                    weight: s.weight,
                    values: s.params.values().to_vec(),
                })
                .collect(),
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let m: Self = serde_json::from_reader(r).context("parsing model file")?;
        if m.format != FORMAT {
            bail!("unsupported model format `{}`", m.format);
        }
        Ok(m)
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.training.input_names.len(), self.training.output_names.len())
    }

    /// Rebuilds the training set with the stored normalization.
    pub fn training_dataset(&self) -> Result<Dataset> {
        let t = &self.training;
        let (d, m) = (t.input_names.len(), t.output_names.len());
        let x = Matrix::new(t.inputs.len(), d, t.inputs.concat())?;
        let y = Matrix::new(t.outputs.len(), m, t.outputs.concat())?;
        Ok(Dataset::with_normalization(
            x,
            y,
            t.input_names.clone(),
            t.output_names.clone(),
            t.normalization.clone(),
        )?)
    }

    pub fn ensemble(&self) -> Result<PosteriorEnsemble> {
        let layout = self.layout();
        if self.parameter_names != layout.names() {
            bail!("parameter names do not match a {}-input, {}-output model", layout.d, layout.m);
        }
        let samples = self
            .samples
            .iter()
            .map(|s| {
                Ok(WeightedSample {
                    weight: s.weight,
                    params: HyperParams::new(layout.d, layout.m, s.values.clone())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let provenance = Provenance {
            engine: self.provenance.engine.clone(),
            seed: self.provenance.seed,
            schedule: self.provenance.schedule.clone(),
        };
        Ok(PosteriorEnsemble::new(samples, provenance)?)
    }
}

//! The hyperparameter vector of the multi-output GP.
//!
//! Layout: for each output `k`, `d` inverse squared length-scales followed by the
//! signal precision and the noise precision; the shared cross-output noise
//! precision comes last. The total length is `m * (d + 2) + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of scalar hyperparameters for `d` inputs and `m` outputs.
pub const fn hyperparam_count(d: usize, m: usize) -> usize {
    m * (d + 2) + 1
}

/// Which role a scalar plays in the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Beta { output: usize, dim: usize },
    LambdaZ { output: usize },
    LambdaS { output: usize },
    LambdaO,
}

impl ParamKind {
    /// The covariance block a change to this scalar invalidates, `None` for all of them.
    pub fn block(self) -> Option<usize> {
        match self {
            ParamKind::Beta { output, .. }
            | ParamKind::LambdaZ { output }
            | ParamKind::LambdaS { output } => Some(output),
            ParamKind::LambdaO => None,
        }
    }
}

/// Index arithmetic for a `(d, m)` hyperparameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub d: usize,
    pub m: usize,
}

impl Layout {
    pub fn new(d: usize, m: usize) -> Self {
        Self { d, m }
    }

    pub fn len(&self) -> usize {
        hyperparam_count(self.d, self.m)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn stride(&self) -> usize {
        self.d + 2
    }

    pub fn beta_index(&self, output: usize, dim: usize) -> usize {
        output * self.stride() + dim
    }

    pub fn lambda_z_index(&self, output: usize) -> usize {
        output * self.stride() + self.d
    }

    pub fn lambda_s_index(&self, output: usize) -> usize {
        output * self.stride() + self.d + 1
    }

    pub fn lambda_o_index(&self) -> usize {
        self.m * self.stride()
    }

    pub fn kind(&self, index: usize) -> ParamKind {
        assert!(index < self.len(), "index {index} out of range");
        if index == self.lambda_o_index() {
            return ParamKind::LambdaO;
        }
        let (output, offset) = (index / self.stride(), index % self.stride());
        match offset {
            o if o < self.d => ParamKind::Beta { output, dim: o },
            o if o == self.d => ParamKind::LambdaZ { output },
            _ => ParamKind::LambdaS { output },
        }
    }

    /// Human-readable names, 1-based: `beta[k][l]`, `lambda_z[k]`, `lambda_s[k]`, `lambda_o`.
    pub fn names(&self) -> Vec<String> {
        (0..self.len())
            .map(|i| match self.kind(i) {
                ParamKind::Beta { output, dim } => format!("beta[{}][{}]", output + 1, dim + 1),
                ParamKind::LambdaZ { output } => format!("lambda_z[{}]", output + 1),
                ParamKind::LambdaS { output } => format!("lambda_s[{}]", output + 1),
                ParamKind::LambdaO => "lambda_o".to_owned(),
            })
            .collect()
    }

    /// Inverse of [`Layout::names`].
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names().iter().position(|n| n == name)
    }
}

/// A full hyperparameter vector. Every entry is strictly positive and finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    layout: Layout,
    values: Vec<f64>,
}

impl HyperParams {
    pub fn new(d: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        let layout = Layout::new(d, m);
        if d == 0 || m == 0 {
            return Err(Error::Domain("need d >= 1 and m >= 1".into()));
        }
        if values.len() != layout.len() {
            return Err(Error::Shape(format!(
                "{} hyperparameters given, {} expected for d={d}, m={m}",
                values.len(),
                layout.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain(format!(
                "{} = {} is not a positive finite number",
                layout.names()[i],
                values[i]
            )));
        }
        Ok(Self { layout, values })
    }

    /// Same `beta`, `lambda_z`, `lambda_s` for every output.
    pub fn uniform(
        d: usize,
        m: usize,
        beta: f64,
        lambda_z: f64,
        lambda_s: f64,
        lambda_o: f64,
    ) -> Result<Self> {
        let layout = Layout::new(d, m);
        let mut values = Vec::with_capacity(layout.len());
        for _ in 0..m {
            values.extend(std::iter::repeat(beta).take(d));
            values.push(lambda_z);
            values.push(lambda_s);
        }
        values.push(lambda_o);
        Self::new(d, m, values)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn beta(&self, output: usize) -> &[f64] {
        let start = self.layout.beta_index(output, 0);
        &self.values[start..start + self.layout.d]
    }

    pub fn lambda_z(&self, output: usize) -> f64 {
        self.values[self.layout.lambda_z_index(output)]
    }

    pub fn lambda_s(&self, output: usize) -> f64 {
        self.values[self.layout.lambda_s_index(output)]
    }

    pub fn lambda_o(&self) -> f64 {
        self.values[self.layout.lambda_o_index()]
    }
}

/// Borrowed view of one output's kernel parameters inside a raw `θ` slice.
#[derive(Clone, Copy, Debug)]
pub struct BlockParams<'a> {
    pub beta: &'a [f64],
    pub lambda_z: f64,
    pub lambda_s: f64,
    pub lambda_o: f64,
}

impl<'a> BlockParams<'a> {
    pub fn from_slice(layout: Layout, theta: &'a [f64], output: usize) -> Self {
        let start = layout.beta_index(output, 0);
        Self {
            beta: &theta[start..start + layout.d],
            lambda_z: theta[layout.lambda_z_index(output)],
            lambda_s: theta[layout.lambda_s_index(output)],
            lambda_o: theta[layout.lambda_o_index()],
        }
    }

    pub fn of(params: &'a HyperParams, output: usize) -> Self {
        Self::from_slice(params.layout(), params.values(), output)
    }
}

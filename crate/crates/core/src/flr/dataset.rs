use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qgd::classical_gradient_rows;
use crate::qsim::StateVector;

/// One client's private samples: rows of X and targets y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientDataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl ClientDataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let ds = Self { x, y };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::InvalidArgument("a client needs at least one sample".into()));
        }
        if self.y.len() != self.x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x.len(),
                got: self.y.len(),
            });
        }
        let dim = self.x[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("samples need at least one feature".into()));
        }
        if let Some(row) = self.x.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        Ok(())
    }

    /// M_k.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// D.
    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Reads a CSV with a header row; the last column is y, the others are features.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_csv(path).map_err(|e| e.in_file(path))
    }

    fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (line, record) in reader.records().enumerate() {
            let values: Vec<f64> = record?
                .iter()
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidArgument(format!("row {}: `{f}`: {e}", line + 1))
                    })
                })
                .collect::<Result<_>>()?;
            let (target, features) = values
                .split_last()
                .ok_or_else(|| Error::InvalidArgument("empty CSV row".into()))?;
            x.push(features.to_vec());
            y.push(*target);
        }
        Self::new(x, y)
    }

    /// Writes the same layout `from_csv` reads.
    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        writer.write_record(&header)?;
        for (row, y) in self.x.iter().zip(&self.y) {
            writer.write_record(row.iter().chain(std::iter::once(y)).map(|v| v.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Features uniform on [-1, 1], y = x.w* + b + noise * u with u uniform on [-1, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Sample count per client.
    pub sizes: Vec<usize>,
    pub w_star: Vec<f64>,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn generate(&self) -> Result<Vec<ClientDataset>> {
        if self.w_star.is_empty() || self.sizes.is_empty() {
            return Err(Error::InvalidArgument("synthetic data needs D >= 1 and at least one client".into()));
        }
        let mut rng = StateVector::rng(self.seed);
        self.sizes
            .iter()
            .map(|&m| {
                let x: Vec<Vec<f64>> = (0..m)
                    .map(|_| self.w_star.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect())
                    .collect();
                let y = x
                    .iter()
                    .map(|r| {
                        let clean: f64 = r.iter().zip(&self.w_star).map(|(a, b)| a * b).sum::<f64>() + self.b;
                        clean + self.noise * rng.gen_range(-1.0..=1.0)
                    })
                    .collect();
                ClientDataset::new(x, y)
            })
            .collect()
    }
}

/// g^j = (1/M_k) sum_i (x_i.w + b - y_i) x_i^j.
pub fn classical_gradient(data: &ClientDataset, w: &[f64], b: f64) -> Vec<f64> {
    classical_gradient_rows(&data.x, &data.y, w, b)
}

/// E = (1/2M) sum_i (x_i.w + b - y_i)^2 over the union of all clients' samples.
pub fn mse_loss(clients: &[ClientDataset], w: &[f64], b: f64) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for c in clients {
        for (x, y) in c.x.iter().zip(&c.y) {
            let r: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b - y;
            sum += r * r;
            count += 1;
        }
    }
    sum / (2.0 * count as f64)
}

/// w' = w - alpha G.
pub fn update_parameters(w: &[f64], g: &[f64], alpha: f64) -> Vec<f64> {
    w.iter().zip(g).map(|(wj, gj)| wj - alpha * gj).collect()
}

/// sum_j (G^j)^2 <= epsilon.
pub fn converged(g: &[f64], epsilon: f64) -> bool {
    g.iter().map(|v| v * v).sum::<f64>() <= epsilon
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn single_sample_gradient() {
        let ds = ClientDataset::new(vec![vec![2.0, 3.464]], vec![2.464]).unwrap();
        let g = classical_gradient(&ds, &[0.866, 0.5], 0.0);
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(g[1], 3.464, epsilon = 2e-3);
    }

    #[test]
    fn zero_residual_gradient() {
        let w = [0.3, -1.1, 2.0];
        let x = vec![vec![1.0, 2.0, 3.0], vec![-0.5, 0.25, 4.0]];
        let y = x.iter().map(|r: &Vec<f64>| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 0.7).collect();
        let ds = ClientDataset::new(x, y).unwrap();
        assert!(classical_gradient(&ds, &w, 0.7).iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ds = SyntheticSpec {
            sizes: vec![8],
            w_star: vec![0.5, -1.0, 2.0, 0.1],
            b: 0.3,
            noise: 0.5,
            seed: 4,
        }
        .generate()
        .unwrap();
        let w = [0.2, 0.4, -0.6, 1.0];
        let g = classical_gradient(&ds[0], &w, 0.3);
        let h = 1e-5;
        for j in 0..4 {
            let (mut up, mut down) = (w, w);
            up[j] += h;
            down[j] -= h;
            let fd = (mse_loss(&ds, &up, 0.3) - mse_loss(&ds, &down, 0.3)) / (2.0 * h);
            assert_abs_diff_eq!(g[j], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn update_examples() {
        assert_eq!(update_parameters(&[1.0, 2.0], &[0.0, 0.0], 0.5), vec![1.0, 2.0]);
        let w = update_parameters(&[0.866, 0.5], &[3.5, 6.06], 0.01);
        assert_abs_diff_eq!(w[0], 0.831, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.4394, epsilon = 1e-12);
        assert_eq!(update_parameters(&[1.5, -2.0], &[1.5, -2.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn convergence_examples() {
        assert!(converged(&[0.0, 0.0], 1e-9));
        assert!(!converged(&[3.5, 6.06], 1.0));
        assert!(converged(&[3.0, 4.0], 25.0));
    }

    #[test]
    fn rejects_ragged_data() {
        assert!(ClientDataset::new(vec![], vec![]).is_err());
        assert!(ClientDataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0]).is_err());
        assert!(ClientDataset::new(vec![vec![1.0]], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let ds = ClientDataset::new(vec![vec![1.5, -2.0], vec![0.25, 3.0]], vec![1.0, -0.5]).unwrap();
        ds.to_csv(&path).unwrap();
        assert_eq!(ClientDataset::from_csv(&path).unwrap(), ds);
        std::fs::write(&path, "x0,y\n1.0,abc\n").unwrap();
        assert!(ClientDataset::from_csv(&path).is_err());
    }

    proptest! {
        #[test]
        fn gradient_is_linear_in_residual(
            rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..8),
            w in prop::collection::vec(-2.0f64..2.0, 3),
            b in -1.0f64..1.0,
        ) {
            let y = vec![0.0; rows.len()];
            let ds = ClientDataset::new(rows.clone(), y).unwrap();
            let g = classical_gradient(&ds, &w, b);
            let doubled: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
            let g2 = classical_gradient(&ds, &doubled, 2.0 * b);
            for j in 0..3 {
                prop_assert!((g2[j] - 2.0 * g[j]).abs() < 1e-9);
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightKind {
    One,
    Power {
        gamma: f64,
    },
    /// Piecewise-linear interpolation of `(r, omega)` samples, constant
    /// beyond the ends.
    Table {
        radii: Vec<f64>,
        values: Vec<f64>,
    },
}

/// A positive, almost increasing weight `omega(r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub kind: WeightKind,
    /// Almost-increasing constant: `omega(r) <= c1 omega(rho)` for `r < rho`.
    pub c1: f64,
}

impl Weight {
    pub fn one() -> Self {
        Weight {
            kind: WeightKind::One,
            c1: 1.0,
        }
    }

    pub fn power(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "weight exponent must be >= 0, got {gamma}"
            )));
        }
        Ok(Weight {
            kind: WeightKind::Power { gamma },
            c1: 1.0,
        })
    }

    pub fn table(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.is_empty() {
            return Err(Error::InvalidArgument(
                "weight table needs matching, nonempty columns".into(),
            ));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
            return Err(Error::InvalidArgument(
                "weight table radii must be positive and increasing".into(),
            ));
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(
                "weight values must be positive".into(),
            ));
        }
        // smallest c1 with omega(r) <= c1 omega(rho) for sampled r < rho
        let mut c1 = 1.0f64;
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                c1 = c1.max(values[i] / values[j]);
            }
        }
        Ok(Weight {
            kind: WeightKind::Table { radii, values },
            c1,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match &self.kind {
            WeightKind::One => 1.0,
            WeightKind::Power { gamma } => r.powf(*gamma),
            WeightKind::Table { radii, values } => {
                if r <= radii[0] {
                    return values[0];
                }
                let last = radii.len() - 1;
                if r >= radii[last] {
                    return values[last];
                }
                let i = radii.partition_point(|&x| x <= r) - 1;
                let t = (r - radii[i]) / (radii[i + 1] - radii[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// `omega^e`, e.g. `omega' = omega^{p-1}` for the forcing.
    pub fn pow(&self, e: f64) -> Weight {
        let kind = match &self.kind {
            WeightKind::One => WeightKind::One,
            WeightKind::Power { gamma } => WeightKind::Power { gamma: gamma * e },
            WeightKind::Table { radii, values } => WeightKind::Table {
                radii: radii.clone(),
                values: values.iter().map(|v| v.powf(e)).collect(),
            },
        };
        Weight {
            kind,
            c1: self.c1.powf(e.abs()),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            WeightKind::One => "one".into(),
            WeightKind::Power { gamma } => format!("power({gamma})"),
            WeightKind::Table { radii, .. } => format!("table({} points)", radii.len()),
        }
    }

    /// Largest `omega(r) / (c1 omega(rho))` over sampled `r < rho` in `(0, rmax]`;
    /// at most 1 for an almost increasing weight.
    pub fn almost_increasing_defect(&self, rmax: f64, samples: usize) -> f64 {
        let rs: Vec<f64> = (1..=samples)
            .map(|i| rmax * i as f64 / samples as f64)
            .collect();
        let mut worst = 0.0f64;
        for i in 0..rs.len() {
            for j in i + 1..rs.len() {
                worst = worst.max(self.eval(rs[i]) / (self.c1 * self.eval(rs[j])));
            }
        }
        worst
    }

    /// Whether `omega(r) / omega(sigma r) <= c1 sigma^{-gamma/p}` holds on
    /// sampled `r <= rmax`, `sigma in (0, 1]`.
    pub fn satisfies_growth(&self, gamma: f64, p: f64, rmax: f64) -> bool {
        let mut ok = true;
        for i in 1..=20 {
            let r = rmax * i as f64 / 20.0;
            for j in 1..=20 {
                let sigma = j as f64 / 20.0;
                let lhs = self.eval(r) / self.eval(sigma * r);
                ok &= lhs <= self.c1 * sigma.powf(-gamma / p) * (1.0 + 1e-12);
            }
        }
        ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_weight_satisfies_growth_condition() {
        let w = Weight::power(0.2).unwrap();
        assert!(w.satisfies_growth(3.0 * 0.2, 3.0, 1.0));
        assert!(!w.satisfies_growth(0.3, 3.0, 1.0));
        assert!(w.almost_increasing_defect(1.0, 50) <= 1.0);
    }

    #[test]
    fn table_weight_interpolates_and_computes_c1() {
        let w = Weight::table(vec![0.1, 0.2, 0.4], vec![1.0, 0.8, 2.0]).unwrap();
        assert!((w.c1 - 1.25).abs() < 1e-15);
        assert!((w.eval(0.15) - 0.9).abs() < 1e-12);
        assert_eq!(w.eval(0.01), 1.0);
        assert_eq!(w.eval(1.0), 2.0);
        assert!(w.almost_increasing_defect(0.5, 40) <= 1.0 + 1e-12);
    }

    #[test]
    fn pow_maps_exponents() {
        let w = Weight::power(0.3).unwrap().pow(2.0);
        assert!((w.eval(0.5) - 0.5f64.powf(0.6)).abs() < 1e-15);
    }
}

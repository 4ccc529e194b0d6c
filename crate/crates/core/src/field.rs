use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Real-valued grid over (site, time), e.g. C(r,t) or F(r,t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub sites: Vec<f64>,
    pub times: Vec<f64>,
    /// row-major: `values[site_index * times.len() + time_index]`
    pub values: Vec<f64>,
    /// optional standard error per entry, same layout as `values`
    pub stderr: Option<Vec<f64>>,
    pub method: String,
    pub seed: Option<u64>,
}

impl SpaceTimeField {
    pub fn zeros(sites: Vec<f64>, times: Vec<f64>, method: impl Into<String>) -> Self {
        let n = sites.len() * times.len();
        Self { sites, times, values: vec![0.0; n], stderr: None, method: method.into(), seed: None }
    }

    pub fn from_fn(
        sites: Vec<f64>,
        times: Vec<f64>,
        method: impl Into<String>,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Self {
        let mut field = Self::zeros(sites, times, method);
        for i in 0..field.sites.len() {
            for j in 0..field.times.len() {
                let v = f(field.sites[i], field.times[j]);
                field.set(i, j, v);
            }
        }
        field
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn num_times(&self) -> usize {
        self.times.len()
    }

    pub fn get(&self, site: usize, time: usize) -> f64 {
        self.values[site * self.times.len() + time]
    }

    pub fn set(&mut self, site: usize, time: usize, v: f64) {
        let nt = self.times.len();
        self.values[site * nt + time] = v;
    }

    pub fn error(&self, site: usize, time: usize) -> Option<f64> {
        self.stderr.as_ref().map(|e| e[site * self.times.len() + time])
    }

    /// Values at time index `time`, ordered by site.
    pub fn profile(&self, time: usize) -> Vec<f64> {
        (0..self.sites.len()).map(|s| self.get(s, time)).collect()
    }

    /// Values at site index `site`, ordered by time.
    pub fn history(&self, site: usize) -> Vec<f64> {
        let nt = self.times.len();
        self.values[site * nt..(site + 1) * nt].to_vec()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.sites.len() * self.times.len() {
            return Err(Error::DimensionMismatch("field values do not match grid".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("field times must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Largest |self − other| over the common grid.
    pub fn max_abs_diff(&self, other: &SpaceTimeField) -> Result<f64> {
        if self.sites.len() != other.sites.len() || self.times.len() != other.times.len() {
            return Err(Error::DimensionMismatch("fields on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_slices() {
        let f = SpaceTimeField::from_fn(vec![0.0, 1.0, 2.0], vec![0.0, 0.5], "test", |r, t| r + 10.0 * t);
        assert_eq!(f.get(2, 1), 7.0);
        assert_eq!(f.profile(1), vec![5.0, 6.0, 7.0]);
        assert_eq!(f.history(1), vec![1.0, 6.0]);
        assert!(f.validate().is_ok());
        assert_eq!(f.max_abs_diff(&f).unwrap(), 0.0);
    }

    #[test]
    fn rejects_unsorted_times() {
        let f = SpaceTimeField::zeros(vec![0.0], vec![1.0, 0.5], "x");
        assert!(f.validate().is_err());
    }
}

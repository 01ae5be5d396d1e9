//! JSON form of an HMM: `{"n", "m", "T", "pi", "A": [[..]], "B": [[..]]}`.

use online_hmm::{HmmParams, ModelDims};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsJson {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub pi: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

impl ParamsJson {
    pub fn from_params(p: &HmmParams) -> Self {
        let ModelDims { n, m, t } = p.dims();
        Self {
            n,
            m,
            t,
            pi: p.pi().to_vec(),
            a: (0..n).map(|i| p.a_row(i).to_vec()).collect(),
            b: (0..n).map(|i| p.b_row(i).to_vec()).collect(),
        }
    }

    /// Shape-checked conversion; stochasticity is checked by the caller.
    pub fn to_params(&self) -> online_hmm::Result<HmmParams> {
        let params = HmmParams::from_rows(self.pi.clone(), &self.a, &self.b, self.t)?;
        let dims = params.dims();
        if dims.n != self.n || dims.m != self.m {
            return Err(online_hmm::Error::DimensionMismatch(format!(
                "declared n={}, m={} but matrices have n={}, m={}",
                self.n, self.m, dims.n, dims.m
            )));
        }
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let p = HmmParams::from_rows(
            vec![0.1, 0.9],
            &[vec![0.3, 0.7], vec![1.0 / 3.0, 2.0 / 3.0]],
            &[vec![0.2, 0.2, 0.6], vec![0.5, 0.25, 0.25]],
            4,
        )
        .unwrap();
        let text = serde_json::to_string(&ParamsJson::from_params(&p)).unwrap();
        assert!(text.contains("\"T\":4"));
        let back: ParamsJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_params().unwrap(), p);
    }

    #[test]
    fn declared_shape_must_match() {
        let text = r#"{"n":3,"m":2,"T":2,"pi":[0.5,0.5],"A":[[1,0],[0,1]],"B":[[1,0],[0,1]]}"#;
        let j: ParamsJson = serde_json::from_str(text).unwrap();
        assert!(j.to_params().is_err());
    }
}

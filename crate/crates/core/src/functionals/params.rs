use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::unit_ball_volume;

/// Parameters shared by the three regimes.  Only `d` and `n` are needed
/// everywhere; the rest are read through accessors that name the missing
/// field when a regime needs it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(rename = "M_prime", default, skip_serializing_if = "Option::is_none")]
    pub m_prime: Option<f64>,
    #[serde(rename = "M0", default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Boundary-shell slack; defaults to `a_n / ln a_n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_n: Option<f64>,
}

fn need<T: Copy>(v: Option<T>, name: &'static str) -> Result<T> {
    v.ok_or(Error::MissingParameter(name))
}

fn positive(v: f64, name: &'static str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

impl RegimeParams {
    pub fn base(d: usize, n: f64) -> Self {
        Self { d: Some(d), n: Some(n), ..Default::default() }
    }

    pub fn sparse(d: usize, n: f64, r_n: f64, k0: usize) -> Self {
        Self { r_n: Some(r_n), k0: Some(k0), ..Self::base(d, n) }
    }

    pub fn critical(d: usize, n: f64, k: usize, alpha: f64) -> Self {
        Self { k: Some(k), alpha: Some(alpha), ..Self::base(d, n) }
    }

    pub fn dense(d: usize, n: f64, k: usize, a_n: f64, s0: f64) -> Self {
        Self { k: Some(k), a_n: Some(a_n), s0: Some(s0), ..Self::base(d, n) }
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_m_prime(mut self, m_prime: f64) -> Self {
        self.m_prime = Some(m_prime);
        self
    }

    pub fn with_m0(mut self, m0: f64) -> Self {
        self.m0 = Some(m0);
        self
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&self, other: &RegimeParams) -> RegimeParams {
        macro_rules! pick {
            ($($f:ident),*) => { RegimeParams { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(d, n, r_n, k0, k, alpha, a_n, s0, m, m_prime, m0, epsilon, w_n)
    }

    pub fn d(&self) -> Result<usize> {
        let d = need(self.d, "d")?;
        if d == 0 || d > crate::geometry::MAX_DIM {
            return Err(invalid("d", format!("must be in 1..={}", crate::geometry::MAX_DIM)));
        }
        Ok(d)
    }

    pub fn n(&self) -> Result<f64> {
        positive(need(self.n, "n")?, "n")
    }

    pub fn r_n(&self) -> Result<f64> {
        positive(need(self.r_n, "r_n")?, "r_n")
    }

    pub fn k0(&self) -> Result<usize> {
        let k0 = need(self.k0, "k0")?;
        if k0 == 0 {
            return Err(invalid("k0", "must be at least 1"));
        }
        Ok(k0)
    }

    pub fn k(&self) -> Result<usize> {
        let k = need(self.k, "k")?;
        if k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        Ok(k)
    }

    pub fn alpha(&self) -> Result<f64> {
        let a = need(self.alpha, "alpha")?;
        if !(a >= 0.0 && a.is_finite()) {
            return Err(invalid("alpha", format!("must be non-negative, got {a}")));
        }
        Ok(a)
    }

    pub fn a_n(&self) -> Result<f64> {
        positive(need(self.a_n, "a_n")?, "a_n")
    }

    pub fn s0(&self) -> Result<f64> {
        let s0 = self.s0.unwrap_or(0.0);
        if !s0.is_finite() {
            return Err(invalid("s0", "must be finite"));
        }
        Ok(s0)
    }

    pub fn big_m(&self) -> Result<f64> {
        positive(need(self.m, "M")?, "M")
    }

    pub fn m_prime(&self) -> Result<f64> {
        positive(need(self.m_prime, "M_prime")?, "M_prime")
    }

    pub fn m0(&self) -> Result<f64> {
        positive(need(self.m0, "M0")?, "M0")
    }

    pub fn epsilon(&self) -> Result<f64> {
        let e = need(self.epsilon, "epsilon")?;
        if !(0.0..=1.0).contains(&e) {
            return Err(invalid("epsilon", format!("must lie in [0,1], got {e}")));
        }
        Ok(e)
    }

    pub fn w_n(&self) -> Result<f64> {
        match self.w_n {
            Some(w) => positive(w, "w_n"),
            None => {
                let a = self.a_n()?;
                if a <= 1.0 {
                    return Err(invalid("w_n", "default a_n/ln a_n needs a_n > 1"));
                }
                Ok(a / a.ln())
            }
        }
    }

    pub fn kappa(&self) -> Result<f64> {
        Ok(unit_ball_volume(self.d()?))
    }

    /// `n^{k0} r_n^{d(k0-1)}`.
    pub fn sparse_speed(&self, k0: usize) -> Result<f64> {
        let (n, r, d) = (self.n()?, self.r_n()?, self.d()?);
        Ok(n.powi(k0 as i32) * r.powi((d * (k0 - 1)) as i32))
    }

    /// `n a_n^{k-1} e^{-a_n}`.
    pub fn dense_speed(&self) -> Result<f64> {
        let (n, k, a) = (self.n()?, self.k()?, self.a_n()?);
        Ok(n * a.powi(k as i32 - 1) * (-a).exp())
    }

    /// `n^{-1/d}`, the typical interpoint spacing.
    pub fn spacing(&self) -> Result<f64> {
        Ok(self.n()?.powf(-1.0 / self.d()? as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_fields_are_named() {
        let p = RegimeParams::base(1, 10.0);
        assert!(matches!(p.r_n(), Err(Error::MissingParameter("r_n"))));
        assert!(matches!(p.big_m(), Err(Error::MissingParameter("M"))));
    }

    #[test]
    fn json_names_and_unknown_fields() {
        let p: RegimeParams = serde_json::from_str(r#"{"d":2,"n":5,"M":3,"M_prime":4}"#).unwrap();
        assert_eq!(p.m, Some(3.0));
        assert_eq!(p.m_prime, Some(4.0));
        assert!(serde_json::from_str::<RegimeParams>(r#"{"d":2,"bogus":1}"#).is_err());
    }

    #[test]
    fn speeds() {
        let p = RegimeParams::sparse(1, 10.0, 0.01, 2);
        assert!((p.sparse_speed(2).unwrap() - 1.0).abs() < 1e-12);
        let q = RegimeParams::dense(1, 10.0, 1, 1.0, 0.0);
        assert!((q.dense_speed().unwrap() - 10.0 / std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn overlay_prefers_other() {
        let a = RegimeParams::sparse(1, 10.0, 0.01, 2);
        let b = RegimeParams { n: Some(20.0), ..Default::default() };
        let c = a.overlay(&b);
        assert_eq!(c.n, Some(20.0));
        assert_eq!(c.r_n, Some(0.01));
    }
}

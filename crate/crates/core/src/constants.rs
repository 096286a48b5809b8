//! The parameter bundle threading through the pipelines, plus the huge
//! pigeonhole bound `g(m)` it can override.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{parse_ratio, ratio, ratio_string, Ratio};

#[derive(Clone, Debug, Serialize)]
pub struct Constants {
    pub m: usize,
    pub alpha: Ratio,
    pub gamma: Ratio,
    pub epsilon: Ratio,
    pub g_override: Option<u64>,
    pub sparsity_ratio: Ratio,
    pub retries: u32,
    pub strict: bool,
}

impl Constants {
    /// Defaults at desk scale: `alpha = 1/5`, `gamma = alpha^2`,
    /// `epsilon = 1/250`, sparsity ratio `1/25`, 64 retries, relaxed mode.
    pub fn defaults(m: usize) -> Constants {
        let alpha = ratio(1, 5);
        Constants {
            m,
            alpha,
            gamma: alpha * alpha,
            epsilon: ratio(1, 250),
            g_override: None,
            sparsity_ratio: ratio(1, 25),
            retries: 64,
            strict: false,
        }
    }

    /// `g(m) = (m+1)^{2m+6} + 1`; `None` when it overflows u128.
    pub fn g_of(m: usize) -> Option<u128> {
        let base = (m as u128).checked_add(1)?;
        let exp = 2 * m as u32 + 6;
        base.checked_pow(exp)?.checked_add(1)
    }

    /// The max-degree demand the first pipeline works against: the override
    /// when set, otherwise `g(m)`.
    pub fn effective_g(&self) -> Option<u128> {
        match self.g_override {
            Some(g) => Some(g as u128),
            None => Self::g_of(self.m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Ratio::from_integer(0);
        let one = Ratio::from_integer(1);
        for (name, v) in [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
            ("sparsity_ratio", self.sparsity_ratio),
        ] {
            if v <= zero || v >= one {
                return Err(Error::invalid(format!(
                    "{name} = {} must lie strictly between 0 and 1",
                    ratio_string(v)
                )));
            }
        }
        if let Some(g) = self.g_override {
            if (g as usize) < self.m {
                return Err(Error::invalid(format!(
                    "g_override = {g} below m = {}",
                    self.m
                )));
            }
        }
        Ok(())
    }

    /// Parses `key=value` lines: keys `m`, `alpha`, `gamma`, `epsilon`,
    /// `g_override`, `retries`, `mode` (strict|relaxed), `sparsity_ratio`.
    /// Unset `gamma` defaults to `alpha^2`.
    pub fn parse(text: &str) -> Result<Constants> {
        let mut m = None;
        let mut alpha = None;
        let mut gamma = None;
        let mut epsilon = None;
        let mut g_override = None;
        let mut retries = None;
        let mut strict = None;
        let mut sparsity = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("bad constants line '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "m" => {
                    m = Some(
                        value
                            .parse()
                            .map_err(|_| Error::parse(format!("bad m '{value}'")))?,
                    )
                }
                "alpha" => alpha = Some(parse_ratio(value)?),
                "gamma" => gamma = Some(parse_ratio(value)?),
                "epsilon" => epsilon = Some(parse_ratio(value)?),
                "sparsity_ratio" => sparsity = Some(parse_ratio(value)?),
                "g_override" => {
                    g_override = Some(
                        value
                            .parse()
                            .map_err(|_| Error::parse(format!("bad g_override '{value}'")))?,
                    )
                }
                "retries" => {
                    retries = Some(
                        value
                            .parse()
                            .map_err(|_| Error::parse(format!("bad retries '{value}'")))?,
                    )
                }
                "mode" => match value {
                    "strict" => strict = Some(true),
                    "relaxed" => strict = Some(false),
                    other => return Err(Error::parse(format!("bad mode '{other}'"))),
                },
                other => return Err(Error::parse(format!("unknown constants key '{other}'"))),
            }
        }
        let m = m.ok_or_else(|| Error::parse("constants file must set m"))?;
        let mut c = Constants::defaults(m);
        if let Some(a) = alpha {
            c.alpha = a;
            c.gamma = a * a;
        }
        if let Some(g) = gamma {
            c.gamma = g;
        }
        if let Some(e) = epsilon {
            c.epsilon = e;
        }
        if let Some(s) = sparsity {
            c.sparsity_ratio = s;
        }
        if let Some(g) = g_override {
            c.g_override = Some(g);
        }
        if let Some(r) = retries {
            c.retries = r;
        }
        if let Some(s) = strict {
            c.strict = s;
        }
        c.validate()?;
        Ok(c)
    }

    /// `alpha^{1/k} * m` as a float, ready for freezing into counts.
    pub fn alpha_root_m(&self, k: u32) -> f64 {
        crate::num::root_frac(self.alpha, k) * self.m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_values() {
        // g(3) = 4^12 + 1
        assert_eq!(Constants::g_of(3), Some(16_777_217));
        assert_eq!(Constants::g_of(1), Some(257));
        // overflows for large m
        assert_eq!(Constants::g_of(40), None);
    }

    #[test]
    fn parse_and_defaults() {
        let c = Constants::parse("m=12\nalpha=0.2\ng_override=20\nmode=strict\n").unwrap();
        assert_eq!(c.m, 12);
        assert_eq!(c.alpha, ratio(1, 5));
        assert_eq!(c.gamma, ratio(1, 25)); // alpha^2 by default
        assert_eq!(c.g_override, Some(20));
        assert!(c.strict);
        assert_eq!(c.effective_g(), Some(20));

        let c = Constants::parse("m=4\ngamma=1/30\n").unwrap();
        assert_eq!(c.gamma, ratio(1, 30));

        assert!(Constants::parse("alpha=0.2\n").is_err());
        assert!(Constants::parse("m=4\nalpha=7\n").is_err());
        assert!(Constants::parse("m=9\ng_override=2\n").is_err());
    }
}

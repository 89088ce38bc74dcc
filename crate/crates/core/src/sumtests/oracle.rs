use serde::Serialize;

use super::schedule::Schedule;
use super::uh::u_h;
use crate::lab::Lab;
use crate::numerics::{pair_encode, BitString, Dyadic, Rational};
use crate::semimeasure::StagedSemimeasure;
use crate::{Error, Result};

/// Finite-horizon stand-in for the halting-oracle mass of `x`. It carries no
/// guarantee and is always reported as exploratory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleEstimate {
    pub x: BitString,
    pub window: (u64, u64),
    /// `min_{t in window} m_T(x|t)`.
    pub estimate: Dyadic,
    pub argmin: u64,
    /// `estimate / m_T(x)`.
    pub gap: Rational,
    pub u_h: Option<Rational>,
}

pub fn oracle_estimate(
    lab: &Lab,
    x: &BitString,
    horizon: u64,
    window: (u64, u64),
    h: Option<&Schedule>,
) -> Result<OracleEstimate> {
    let (a, b) = window;
    if a < 1 || a > b || b > horizon {
        return Err(Error::Config(format!(
            "window [{a},{b}] is not inside [1,{horizon}]"
        )));
    }
    let (argmin, estimate) = (a..=b)
        .map(|t| (t, lab.m_cond_stage(x, t, horizon)))
        .min_by(|l, r| l.1.cmp(&r.1))
        .expect("nonempty window");
    let gap = Rational::new(estimate.clone(), lab.m_stage(x, horizon))?;
    let u_h = match h {
        Some(h) => Some(u_h(lab, x, &StagedSemimeasure::MachineMix, h, horizon)?),
        None => None,
    };
    Ok(OracleEstimate {
        x: x.clone(),
        window,
        estimate,
        argmin,
        gap,
        u_h,
    })
}

/// `K^t(x) + K^t(y) - K^t(<x,y>)`; undefined if any term is infinite.
pub fn itime(lab: &Lab, x: &BitString, y: &BitString, stage: u64) -> Result<i64> {
    let empty = BitString::new();
    let k = |z: &BitString| {
        lab.ktime(z, &empty, stage)
            .ok_or_else(|| Error::Undefined(format!("K^{stage}({z}) is infinite")))
    };
    let (kx, ky, kxy) = (k(x)?, k(y)?, k(&pair_encode(x, y))?);
    Ok(kx as i64 + ky as i64 - kxy as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bits;

    #[test]
    fn itime_values() {
        let lab = Lab::with_max_len(12);
        assert!(matches!(
            itime(&lab, &bits(""), &bits(""), 0),
            Err(Error::Undefined(_))
        ));
        // K("") = 3 and the pair code "1" needs "01100" (5)
        assert_eq!(itime(&lab, &bits(""), &bits(""), 5).unwrap(), 1);
    }

    #[test]
    fn window_minimum() {
        let lab = Lab::with_max_len(12);
        let x = bits("0");
        let single = oracle_estimate(&lab, &x, 16, (3, 3), None).unwrap();
        assert_eq!(single.estimate, lab.m_cond_stage(&x, 3, 16));
        let wide = oracle_estimate(&lab, &x, 16, (1, 8), None).unwrap();
        assert!(wide.estimate <= single.estimate);
        assert!(oracle_estimate(&lab, &x, 16, (0, 3), None).is_err());
    }
}

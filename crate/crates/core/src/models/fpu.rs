use std::sync::Arc;

use super::{Block, OscillatorySystem, PhaseState, Potential};
use crate::error::{Error, Result};

/// Quartic soft-spring coupling of the stiff/soft Fermi–Pasta–Ulam chain in
/// centre-of-mass (`x`) and elongation (`y`) coordinates, `q = (x, y)`:
///
/// `U = 1/4 [ (x_1 - y_1)^4 + sum_{i<m} (x_{i+1} - y_{i+1} - x_i - y_i)^4 + (x_m + y_m)^4 ]`
#[derive(Debug, Clone, Copy)]
pub struct FpuCoupling {
    pub m: usize,
}

impl FpuCoupling {
    fn springs(&self, q: &[f64]) -> Vec<f64> {
        let m = self.m;
        let (x, y) = q.split_at(m);
        let mut s = Vec::with_capacity(m + 1);
        s.push(x[0] - y[0]);
        for i in 0..m - 1 {
            s.push(x[i + 1] - y[i + 1] - x[i] - y[i]);
        }
        s.push(x[m - 1] + y[m - 1]);
        s
    }
}

impl Potential for FpuCoupling {
    fn dim(&self) -> usize {
        2 * self.m
    }

    fn value(&self, q: &[f64]) -> f64 {
        0.25 * self.springs(q).iter().map(|s| s.powi(4)).sum::<f64>()
    }

    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let m = self.m;
        let s3: Vec<f64> = self.springs(q).iter().map(|s| s.powi(3)).collect();
        let mut g = vec![0.0; 2 * m];
        let (gx, gy) = g.split_at_mut(m);
        gx[0] += s3[0];
        gy[0] -= s3[0];
        for i in 0..m - 1 {
            let f = s3[i + 1];
            gx[i + 1] += f;
            gy[i + 1] -= f;
            gx[i] -= f;
            gy[i] -= f;
        }
        gx[m - 1] += s3[m];
        gy[m - 1] += s3[m];
        g
    }
}

/// FPU chain with `m` stiff springs of frequency `omega`: one slow block
/// `x` in R^m and `m` fast scalar blocks `y_j`. Starts from
/// `x_1 = 1, x_1' = 1, y_1 = 1/omega, y_1' = 1`, everything else zero.
pub fn make_fpu_chain(m: usize, omega: f64) -> Result<(OscillatorySystem, PhaseState)> {
    if m < 1 {
        return Err(Error::contract("the FPU chain needs at least one stiff spring"));
    }
    if !(omega >= 10.0) {
        return Err(Error::contract(format!("omega must be at least 10, got {omega}")));
    }
    let mut blocks = vec![Block { dim: m, omega: 0.0 }];
    blocks.extend((0..m).map(|_| Block { dim: 1, omega }));
    let sys = OscillatorySystem::new(blocks, Arc::new(FpuCoupling { m }))?;

    let mut y = PhaseState::zeros(2 * m);
    y.q[0] = 1.0;
    y.p[0] = 1.0;
    y.q[m] = 1.0 / omega;
    y.p[m] = 1.0;
    Ok((sys, y))
}

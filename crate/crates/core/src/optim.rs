//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of parameter buffers that can be updated in place.
///
/// `buffers` and `buffers_mut` must return the same buffers in the same
/// order, and `zeros_like` must produce a set with identical lengths.
pub trait ParamSet {
    fn zeros_like(&self) -> Self;
    fn buffers(&self) -> Vec<&[f64]>;
    fn buffers_mut(&mut self) -> Vec<&mut [f64]>;
}

impl ParamSet for Vec<f64> {
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }

    fn buffers(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }

    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<P> {
    m: P,
    v: P,
    t: u64,
}

impl<P: ParamSet> AdamState<P> {
    pub fn new(params: &P) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One Adam update of `params` in place.
    ///
    /// `iteration` only labels the divergence error. Non-finite gradients
    /// leave `params` and the state untouched.
    pub fn step(
        &mut self,
        params: &mut P,
        grads: &P,
        cfg: &AdamConfig,
        iteration: usize,
    ) -> Result<()> {
        let g_bufs = grads.buffers();
        if g_bufs.iter().any(|b| b.iter().any(|g| !g.is_finite())) {
            return Err(Error::Divergence {
                iteration,
                what: "non-finite gradient".into(),
            });
        }
        let mut p_bufs = params.buffers_mut();
        let lens = |bs: &[&[f64]]| bs.iter().map(|b| b.len()).collect::<Vec<_>>();
        let p_lens: Vec<usize> = p_bufs.iter().map(|b| b.len()).collect();
        if p_lens != lens(&g_bufs) || p_lens != lens(&self.m.buffers()) {
            return Err(Error::shape(
                "adam_step",
                "gradient or moment buffers are not congruent with the parameters",
            ));
        }

        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for (((p, g), m), v) in p_bufs
            .iter_mut()
            .zip(&g_bufs)
            .zip(self.m.buffers_mut())
            .zip(self.v.buffers_mut())
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step<P: ParamSet>(
    state: &mut AdamState<P>,
    params: &mut P,
    grads: &P,
    cfg: &AdamConfig,
    iteration: usize,
) -> Result<()> {
    state.step(params, grads, cfg, iteration)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = vec![1.0, -2.0, 3.5];
        let before = p.clone();
        let mut st = AdamState::new(&p);
        for i in 0..5 {
            st.step(&mut p, &vec![0.0; 3], &AdamConfig::default(), i).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(st.steps(), 5);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = AdamConfig::default();
        for g in [0.5, -3.0, 100.0] {
            let mut p = vec![0.0];
            let mut st = AdamState::new(&p);
            st.step(&mut p, &vec![g], &cfg, 0).unwrap();
            assert!((p[0].abs() - cfg.lr).abs() < 1e-6);
            assert_eq!(p[0].signum(), -f64::signum(g));
        }
    }

    /// Scalar recursion written out independently of `AdamState`.
    fn scalar_adam_oracle(mut p: f64, steps: usize, lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=steps {
            let g = p - 3.0;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            p -= lr * mh / (vh.sqrt() + eps);
        }
        p
    }

    #[test]
    fn converges_on_shifted_quadratic() {
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut p = vec![0.0];
        let mut st = AdamState::new(&p);
        for i in 0..100 {
            let g = vec![p[0] - 3.0];
            st.step(&mut p, &g, &cfg, i).unwrap();
        }
        let oracle = scalar_adam_oracle(0.0, 100, 0.1);
        assert!((oracle - 3.0).abs() < 0.05, "oracle ended at {oracle}");
        assert!((p[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_reports_iteration() {
        let mut p = vec![1.0, 1.0];
        let mut st = AdamState::new(&p);
        let err = st
            .step(&mut p, &vec![0.1, f64::NAN], &AdamConfig::default(), 17)
            .unwrap_err();
        assert!(matches!(err, Error::Divergence { iteration: 17, .. }));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(st.steps(), 0);
    }

    #[test]
    fn incongruent_gradient_rejected() {
        let mut p = vec![1.0, 1.0];
        let mut st = AdamState::new(&p);
        assert!(st
            .step(&mut p, &vec![0.1], &AdamConfig::default(), 0)
            .is_err());
    }
}

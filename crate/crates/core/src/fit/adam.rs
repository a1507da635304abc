use alloc::vec::Vec;

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: alloc::vec![0.0; n], v: alloc::vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam update of `x` in place.
///
/// Panics if the slice lengths differ from the state.
pub fn adam_step(state: &mut AdamState, x: &mut [f64], grad: &[f64], p: &AdamParams) {
    assert_eq!(x.len(), state.m.len(), "parameter length");
    assert_eq!(grad.len(), state.m.len(), "gradient length");
    state.t += 1;
    let t = state.t as f64;
    let c1 = 1.0 - libm::pow(p.beta1, t);
    let c2 = 1.0 - libm::pow(p.beta2, t);
    for i in 0..x.len() {
        let g = grad[i];
        state.m[i] = p.beta1 * state.m[i] + (1.0 - p.beta1) * g;
        state.v[i] = p.beta2 * state.v[i] + (1.0 - p.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        x[i] -= p.lr * m_hat / (libm::sqrt(v_hat) + p.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: AdamParams = AdamParams { lr: 1e-4, beta1: 0.5, beta2: 0.999, eps: 1e-8 };

    #[test]
    fn first_step_with_unit_gradient() {
        let mut s = AdamState::new(4);
        let mut x = [0.0; 4];
        adam_step(&mut s, &mut x, &[1.0; 4], &P);
        for v in x {
            assert!((v + 1e-4 / (1.0 + 1e-8)).abs() < 1e-18);
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = AdamState::new(3);
        let mut x = [0.3, -1.0, 2.0];
        for _ in 0..100 {
            adam_step(&mut s, &mut x, &[0.0; 3], &P);
        }
        assert_eq!(x, [0.3, -1.0, 2.0]);
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let run = || {
            let mut s = AdamState::new(2);
            let mut x = [1.0, -2.0];
            for i in 0..50 {
                let g = [x[0] * 2.0 + i as f64 * 0.01, (x[1] - 1.0).sin()];
                adam_step(&mut s, &mut x, &g, &P);
            }
            x
        };
        assert_eq!(run().map(f64::to_bits), run().map(f64::to_bits));
    }
}

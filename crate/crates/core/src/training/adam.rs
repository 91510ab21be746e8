//! Adam with bias-corrected moment estimates, over a list of parameter blocks.

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64, block_sizes: &[usize]) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One update. Blocks whose `active` flag is false are left untouched,
    /// moments included.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[Vec<f64>], active: &[bool]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for (b, p) in params.iter_mut().enumerate() {
            if !active[b] {
                continue;
            }
            let (m, v, g) = (&mut self.m[b], &mut self.v[b], &grads[b]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar reference written directly from the update equations.
    fn reference(grads: &[f64], lr: f64, b1: f64, b2: f64, eps: f64, x0: f64) -> f64 {
        let (mut x, mut m, mut v) = (x0, 0.0, 0.0);
        for (t, &g) in grads.iter().enumerate() {
            let t = (t + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            x -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
        }
        x
    }

    #[test]
    fn matches_scalar_reference() {
        let grads = [0.5, -1.25, 3.0, 0.0, 1e-3, -7.5];
        let mut opt = Adam::new(1e-3, 0.9, 0.999, 1e-8, &[1, 2]);
        let mut a = [0.2];
        let mut b = [1.0, -1.0];
        for &g in &grads {
            let mut params: Vec<&mut [f64]> = vec![&mut a, &mut b];
            opt.step(&mut params, &[vec![g], vec![g, -g]], &[true, true]);
        }
        assert!((a[0] - reference(&grads, 1e-3, 0.9, 0.999, 1e-8, 0.2)).abs() < 1e-12);
        let neg: Vec<f64> = grads.iter().map(|g| -g).collect();
        assert!((b[1] - reference(&neg, 1e-3, 0.9, 0.999, 1e-8, -1.0)).abs() < 1e-12);
        assert_eq!(opt.steps(), grads.len() as i32);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut opt = Adam::new(0.01, 0.9, 0.999, 1e-8, &[1]);
        let mut x = [0.0];
        opt.step(&mut [&mut x[..]], &[vec![123.0]], &[true]);
        assert!((x[0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn inactive_blocks_untouched() {
        let mut opt = Adam::new(0.1, 0.9, 0.999, 1e-8, &[1, 1]);
        let (mut a, mut b) = ([1.0], [1.0]);
        opt.step(&mut [&mut a[..], &mut b[..]], &[vec![1.0], vec![1.0]], &[true, false]);
        assert_ne!(a[0], 1.0);
        assert_eq!(b[0], 1.0);
    }
}

//! Classical fixed-step fourth-order Runge-Kutta.

/// Reusable RK4 stage buffers for systems of a fixed dimension.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances the autonomous system `y' = field(y)` by `h` in place.
    pub fn step<F>(&mut self, field: &mut F, y: &mut [f64], h: f64)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let n = y.len();
        field(y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        field(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        field(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        field(&self.tmp, &mut self.k4);
        for i in 0..n {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_fourth_order() {
        let run = |h: f64| {
            let mut rk = Rk4::new(2);
            let mut y = [1.0, 0.0];
            let mut field = |y: &[f64], out: &mut [f64]| {
                out[0] = y[1];
                out[1] = -y[0];
            };
            let steps = (2.0 / h).round() as usize;
            for _ in 0..steps {
                rk.step(&mut field, &mut y, h);
            }
            (y[0] - 2f64.cos()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }
}

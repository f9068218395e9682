//! Adaptive Dormand-Prince 5(4) integrator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, initial_step: 1e-3, max_step: 0.1, max_steps: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates `y' = f(t, y)` from `t0` to exactly `t1` (either direction).
///
/// `on_accept(t, y)` runs after every accepted step and may modify the state in place (for
/// constraint projection or chart changes). Returns the final state and the step statistics.
pub fn integrate<F, P>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut on_accept: P,
) -> Result<(Vec<f64>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    P: FnMut(f64, &mut Vec<f64>) -> Result<()>,
{
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = opts.initial_step.min(opts.max_step).min((t1 - t0).abs());
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut stats = OdeStats::default();
    if t0 == t1 {
        return Ok((y, stats));
    }
    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepBudgetExceeded(opts.max_steps));
        }
        let last = h >= (t1 - t).abs() * (1.0 - 1e-12);
        if last {
            h = (t1 - t).abs();
        }
        let hs = h * dir;
        for s in 0..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += hs * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            f(t + C[s] * hs, &tmp, &mut k[s])?;
            stats.evaluations += 1;
        }
        let mut err = 0.0;
        let mut y_new = vec![0.0; n];
        for i in 0..n {
            let mut hi5 = 0.0;
            let mut hi4 = 0.0;
            for s in 0..7 {
                hi5 += B5[s] * k[s][i];
                hi4 += B4[s] * k[s][i];
            }
            y_new[i] = y[i] + hs * hi5;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (hs * (hi5 - hi4) / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepBudgetExceeded(stats.accepted + stats.rejected));
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y = y_new;
            stats.accepted += 1;
            on_accept(t, &mut y)?;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(opts.max_step);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepBudgetExceeded(stats.accepted + stats.rejected));
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let opts = OdeOptions::default();
        let (y, stats) = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[0.0, 1.0],
            std::f64::consts::PI,
            &opts,
            |_, _| Ok(()),
        )
        .unwrap();
        assert!(y[0].abs() < 1e-9 && (y[1] + 1.0).abs() < 1e-9, "{y:?}");
        assert!(stats.accepted > 10);
    }

    #[test]
    fn backward_integration_and_exact_endpoint() {
        let mut last_t = 0.0;
        let (y, _) = integrate(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            1.0,
            &[1f64.exp()],
            0.0,
            &OdeOptions::default(),
            |t, _| {
                last_t = t;
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(last_t, 0.0);
        assert!((y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn step_budget() {
        let opts = OdeOptions { max_steps: 5, ..Default::default() };
        let r = integrate(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            10.0,
            &opts,
            |_, _| Ok(()),
        );
        assert!(matches!(r, Err(Error::StepBudgetExceeded(_))));
    }
}

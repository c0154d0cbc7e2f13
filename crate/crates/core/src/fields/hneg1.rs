use super::grid::GridField;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Largest `|∫ f|` accepted by [`h_neg1_norm`].
pub const ZERO_MODE_TOL: f64 = 1e-8;

/// Periodic inhomogeneous `H^{-1}` norm
/// `(Σ_{k≠0} |f̂_k|² / (1 + |2πk/L|²))^{1/2}`, with `f̂` scaled so that
/// `Σ |f̂_k|² = ∫ |f|²`. Rejects fields whose mean exceeds [`ZERO_MODE_TOL`].
pub fn h_neg1_norm(field: &GridField) -> Result<f64> {
    norm_impl(field, false)
}

/// Same as [`h_neg1_norm`] but silently drops any zero mode.
pub fn h_neg1_norm_dropping_mean(field: &GridField) -> Result<f64> {
    norm_impl(field, true)
}

fn norm_impl(field: &GridField, drop_mean: bool) -> Result<f64> {
    let spec = field.spec;
    let n = spec.n;
    let l = spec.side;
    let mean = field.integral();
    if !drop_mean && mean.abs() > ZERO_MODE_TOL {
        return Err(Error::NonzeroMean { mean, tol: ZERO_MODE_TOL });
    }
    let mut data: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft3(&mut data, n);

    // f̂ = L^{3/2} F / n³
    let scale = l.powf(1.5) / (n as f64).powi(3);
    let freq = |i: usize| -> f64 {
        let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        2.0 * std::f64::consts::PI * k / l
    };
    let mut acc = 0.0;
    for iz in 0..n {
        let kz = freq(iz);
        let mut plane = 0.0;
        for iy in 0..n {
            let ky = freq(iy);
            let mut row = 0.0;
            for ix in 0..n {
                if ix == 0 && iy == 0 && iz == 0 {
                    continue;
                }
                let kx = freq(ix);
                let c = data[ix + n * (iy + n * iz)] * scale;
                row += c.norm_sqr() / (1.0 + kx * kx + ky * ky + kz * kz);
            }
            plane += row;
        }
        acc += plane;
    }
    Ok(acc.sqrt())
}

/// In-place forward 3D DFT of an `n³` array with `x` fastest.
fn fft3(data: &mut [Complex64], n: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // x lines are contiguous
    for line in data.chunks_exact_mut(n) {
        fft.process_with_scratch(line, &mut scratch);
    }
    let mut line = vec![Complex64::default(); n];
    for stride in [n, n * n] {
        for base in 0..n * n {
            // enumerate the n² lines along the axis with this stride
            let start = if stride == n { (base / n) * n * n + base % n } else { base };
            for (t, v) in line.iter_mut().enumerate() {
                *v = data[start + t * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (t, v) in line.iter().enumerate() {
                data[start + t * stride] = *v;
            }
        }
    }
}

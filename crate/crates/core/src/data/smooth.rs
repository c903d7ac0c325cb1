use crate::error::{Error, Result};

/// Samples spanned by a window of `window` seconds at sampling period `dt`,
/// rounded up to the next odd count.
pub fn window_samples(window: f64, dt: f64) -> usize {
    let n = (window / dt).round().max(1.0) as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Weights that evaluate, at offset 0, the least-squares polynomial of
/// degree `order` fitted to samples at offsets `lo..=hi`.
fn fit_weights(lo: isize, hi: isize, order: usize) -> Vec<f64> {
    let half = lo.unsigned_abs().max(hi.unsigned_abs()).max(1) as f64;
    let m = order + 1;
    // Offsets are scaled to [-1, 1] to keep the normal equations well conditioned.
    let rows: Vec<Vec<f64>> = (lo..=hi)
        .map(|k| {
            let u = k as f64 / half;
            (0..m).scan(1.0, |p, _| {
                let out = *p;
                *p *= u;
                Some(out)
            })
            .collect()
        })
        .collect();
    let mut ata = vec![vec![0.0; m]; m];
    for r in &rows {
        for i in 0..m {
            for j in 0..m {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    // The fitted value at u = 0 is the constant coefficient: e0ᵀ (AᵀA)⁻¹ Aᵀ y.
    let mut e0 = vec![0.0; m];
    e0[0] = 1.0;
    let z = solve_spd(ata, e0);
    rows.iter().map(|r| r.iter().zip(&z).map(|(a, b)| a * b).sum()).collect()
}

/// Cholesky solve of a small symmetric positive definite system.
fn solve_spd(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] -= a[i][k] * b[k];
        }
        b[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] -= a[k][i] * b[k];
        }
        b[i] /= a[i][i];
    }
    b
}

/// Savitzky-Golay smoothing with a window of `window` seconds.
///
/// Near the ends the window is truncated to the available samples and the
/// polynomial is fitted to what remains, so the output has the input's
/// length. Series shorter than the window are fitted the same way.
pub fn savgol_smooth(series: &[f64], dt: f64, window: f64, order: usize) -> Result<Vec<f64>> {
    let n = window_samples(window, dt);
    if n < order + 2 {
        return Err(Error::WindowTooShort { samples: n, order });
    }
    let half = (n / 2) as isize;
    let len = series.len() as isize;
    let interior = fit_weights(-half, half, order);
    let mut out = Vec::with_capacity(series.len());
    for i in 0..len {
        let lo = (i - half).max(0);
        let hi = (i + half).min(len - 1);
        let points = (hi - lo + 1) as usize;
        let window = &series[lo as usize..=hi as usize];
        let value = if lo == i - half && hi == i + half {
            window.iter().zip(&interior).map(|(y, w)| y * w).sum()
        } else {
            let degree = order.min(points - 1);
            let w = fit_weights(lo - i, hi - i, degree);
            window.iter().zip(&w).map(|(y, w)| y * w).sum()
        };
        out.push(value);
    }
    Ok(out)
}

//! Derivative-free bounded search: Halton start points and compass search.

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = inv;
    while index > 0 {
        out += (index % b) as f64 * f;
        index /= b;
        f *= inv;
    }
    out
}

/// Point `index` of the Halton sequence in `dim <= 12` dimensions, rotated by
/// `shift` modulo 1.
pub fn halton(index: u64, dim: usize, shift: &[f64]) -> Vec<f64> {
    (0..dim)
        .map(|d| (radical_inverse(index, PRIMES[d]) + shift[d]).fract())
        .collect()
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Compass search inside `[lower, upper]`: poll each coordinate in both
/// directions, move on the first strict improvement, halve every step after
/// a sweep without one. Stops when all steps fall below `tol` times the
/// box width or after `max_sweeps` sweeps.
pub fn compass_search<F>(f: F, x0: &[f64], lower: &[f64], upper: &[f64], max_sweeps: usize, tol: f64) -> SearchOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut x: Vec<f64> = x0.iter().zip(lower.iter().zip(upper)).map(|(&v, (&l, &u))| v.clamp(l, u)).collect();
    let mut fx = f(&x);
    let mut evaluations = 1;
    let width: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
    let mut step: Vec<f64> = width.iter().map(|w| 0.25 * w).collect();
    for _ in 0..max_sweeps {
        if step.iter().zip(&width).all(|(s, w)| *s < tol * w) {
            break;
        }
        let mut improved = false;
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let candidate = (x[i] + sign * step[i]).clamp(lower[i], upper[i]);
                if candidate == x[i] {
                    continue;
                }
                let mut y = x.clone();
                y[i] = candidate;
                let fy = f(&y);
                evaluations += 1;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
        }
    }
    SearchOutcome {
        x,
        value: fx,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_examples() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn halton_points_fill_unit_cube() {
        let shift = [0.3; 9];
        for k in 0..100 {
            assert!(halton(k, 9, &shift).iter().all(|&u| (0.0..1.0).contains(&u)));
        }
    }

    #[test]
    fn compass_search_finds_bounded_minimum() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 2.0).powi(2);
        let out = compass_search(f, &[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], 1000, 1e-9);
        assert!((out.x[0] - 0.3).abs() < 1e-6);
        assert_eq!(out.x[1], -1.0);
    }
}

//! Mixed Nash equilibria of the 2×4 merge bimatrix by support enumeration.

use serde::{Deserialize, Serialize};

use crate::payoff::PayoffMatrix;

/// Tolerance for the best-response checks applied to enumerated candidates.
pub const NASH_EPS: f64 = 1e-10;

const PIVOT_EPS: f64 = 1e-12;
const NEG_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile {
    /// Probabilities over (ChangeLanes, KeepStraight).
    pub row_mix: [f64; 2],
    /// Probabilities over (YB, YA, Bk, DN).
    pub col_mix: [f64; 4],
}

impl MixedProfile {
    pub fn pure(row: usize, col: usize) -> Self {
        let mut row_mix = [0.0; 2];
        let mut col_mix = [0.0; 4];
        row_mix[row] = 1.0;
        col_mix[col] = 1.0;
        Self { row_mix, col_mix }
    }

    pub fn row_value(&self, game: &PayoffMatrix) -> f64 {
        bilinear(&game.p, &self.row_mix, &self.col_mix)
    }

    pub fn col_value(&self, game: &PayoffMatrix) -> f64 {
        bilinear(&game.q, &self.row_mix, &self.col_mix)
    }

    /// Largest gain any player gets from a unilateral pure deviation.
    pub fn max_deviation_gain(&self, game: &PayoffMatrix) -> f64 {
        let row_now = self.row_value(game);
        let col_now = self.col_value(game);
        let row_best = (0..2)
            .map(|i| dot4(&game.p[i], &self.col_mix))
            .fold(f64::NEG_INFINITY, f64::max);
        let col_best = (0..4)
            .map(|j| self.row_mix[0] * game.q[0][j] + self.row_mix[1] * game.q[1][j])
            .fold(f64::NEG_INFINITY, f64::max);
        (row_best - row_now).max(col_best - col_now)
    }
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn bilinear(m: &[[f64; 4]; 2], x: &[f64; 2], y: &[f64; 4]) -> f64 {
    x[0] * dot4(&m[0], y) + x[1] * dot4(&m[1], y)
}

/// Solves `a · z = b` for a square system of size `n <= 5` by Gaussian
/// elimination with partial pivoting. `None` when singular.
fn solve_square(a: &mut [[f64; 6]; 5], n: usize) -> Option<[f64; 5]> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < PIVOT_EPS {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let mut z = [0.0; 5];
    for (i, zi) in z.iter_mut().enumerate().take(n) {
        *zi = a[i][n] / a[i][i];
    }
    Some(z)
}

/// Mixed strategy of one player that makes the opponent indifferent over
/// `opp_support`, using only `own_support`. `payoff(own, opp)` is the
/// opponent's payoff. Only square systems are solved; other support pairs
/// are covered by smaller supports.
fn indifference_mix<F>(own_support: &[usize], opp_support: &[usize], payoff: F) -> Option<Vec<f64>>
where
    F: Fn(usize, usize) -> f64,
{
    let k = own_support.len();
    if k != opp_support.len() {
        return None;
    }
    // Unknowns: k probabilities and the common value. Equations: one
    // indifference row per opponent action, plus normalization.
    let n = k + 1;
    let mut a = [[0.0; 6]; 5];
    for (r, &opp) in opp_support.iter().enumerate() {
        for (c, &own) in own_support.iter().enumerate() {
            a[r][c] = payoff(own, opp);
        }
        a[r][k] = -1.0;
    }
    for c in 0..k {
        a[k][c] = 1.0;
    }
    a[k][n] = 1.0;
    let z = solve_square(&mut a, n)?;
    let mix: Vec<f64> = z[..k].to_vec();
    if mix.iter().any(|&p| p < -NEG_EPS || !p.is_finite()) {
        return None;
    }
    Some(mix)
}

fn normalize<const N: usize>(mut v: [f64; N]) -> [f64; N] {
    for p in v.iter_mut() {
        *p = p.max(0.0);
    }
    let total: f64 = v.iter().sum();
    for p in v.iter_mut() {
        *p /= total;
    }
    v
}

fn support_key(profile: &MixedProfile) -> (usize, u8, usize, u8) {
    let mut rows = 0u8;
    let mut cols = 0u8;
    for (i, &p) in profile.row_mix.iter().enumerate() {
        if p > 0.0 {
            rows |= 1 << i;
        }
    }
    for (j, &p) in profile.col_mix.iter().enumerate() {
        if p > 0.0 {
            cols |= 1 << j;
        }
    }
    (rows.count_ones() as usize, rows, cols.count_ones() as usize, cols)
}

/// Every equilibrium the support enumeration produces.
pub fn enumerate_equilibria(game: &PayoffMatrix) -> Vec<MixedProfile> {
    const ROW_SUPPORTS: [&[usize]; 3] = [&[0], &[1], &[0, 1]];
    let mut found: Vec<MixedProfile> = Vec::new();
    for rows in ROW_SUPPORTS {
        for mask in 1u8..16 {
            let cols: Vec<usize> = (0..4).filter(|j| mask & (1 << j) != 0).collect();
            let Some(x) = indifference_mix(rows, &cols, |i, j| game.q[i][j]) else {
                continue;
            };
            let Some(y) = indifference_mix(&cols, rows, |j, i| game.p[i][j]) else {
                continue;
            };
            let mut row_mix = [0.0; 2];
            for (&i, &p) in rows.iter().zip(&x) {
                row_mix[i] = p;
            }
            let mut col_mix = [0.0; 4];
            for (&j, &p) in cols.iter().zip(&y) {
                col_mix[j] = p;
            }
            let profile = MixedProfile {
                row_mix: normalize(row_mix),
                col_mix: normalize(col_mix),
            };
            if profile.max_deviation_gain(game) <= NASH_EPS
                && !found.iter().any(|f| same_profile(f, &profile))
            {
                found.push(profile);
            }
        }
    }
    found
}

fn same_profile(a: &MixedProfile, b: &MixedProfile) -> bool {
    let close = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(p, q)| (p - q).abs() < 1e-12);
    close(&a.row_mix, &b.row_mix) && close(&a.col_mix, &b.col_mix)
}

fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn unique_argmax(values: &[f64]) -> Option<usize> {
    let best = argmax(values.iter().copied());
    let runner_up = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    (values[best] > runner_up).then_some(best)
}

/// When neither player's payoff depends on the opponent's action and both
/// have a unique best action, that pure profile is the only equilibrium.
fn dominant_profile(game: &PayoffMatrix) -> Option<MixedProfile> {
    if game.q[0] != game.q[1] || game.p.iter().any(|row| row.iter().any(|&v| v != row[0])) {
        return None;
    }
    let col = unique_argmax(&game.q[0])?;
    let row = unique_argmax(&[game.p[0][0], game.p[1][0]])?;
    Some(MixedProfile::pure(row, col))
}

/// A mixed Nash equilibrium of `game`.
///
/// Among several equilibria the one with the highest lag (column) payoff is
/// returned, then the highest merger (row) payoff, then the lexicographically
/// smallest support.
pub fn nash_mixed(game: &PayoffMatrix) -> MixedProfile {
    if let Some(pure) = dominant_profile(game) {
        return pure;
    }
    let mut candidates = enumerate_equilibria(game);
    candidates.sort_by(|a, b| {
        b.col_value(game)
            .total_cmp(&a.col_value(game))
            .then(b.row_value(game).total_cmp(&a.row_value(game)))
            .then(support_key(a).cmp(&support_key(b)))
    });
    if let Some(best) = candidates.first() {
        return *best;
    }
    // Only reachable for degenerate games; exact under literal conditioning.
    let col = argmax((0..4).map(|j| game.q[0][j] + game.q[1][j]));
    let row = argmax((0..2).map(|i| game.p[i][col]));
    MixedProfile::pure(row, col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opponent_independent(p: [f64; 2], q: [f64; 4]) -> PayoffMatrix {
        PayoffMatrix {
            p: [[p[0]; 4], [p[1]; 4]],
            q: [q, q],
        }
    }

    /// Brute-force ε-Nash check written against the raw matrices.
    fn passes_oracle(game: &PayoffMatrix, prof: &MixedProfile, eps: f64) -> bool {
        let (x, y) = (prof.row_mix, prof.col_mix);
        let mut u_row = 0.0;
        let mut u_col = 0.0;
        for i in 0..2 {
            for j in 0..4 {
                u_row += x[i] * y[j] * game.p[i][j];
                u_col += x[i] * y[j] * game.q[i][j];
            }
        }
        let rows_ok = (0..2).all(|i| (0..4).map(|j| y[j] * game.p[i][j]).sum::<f64>() <= u_row + eps);
        let cols_ok = (0..4).all(|j| (0..2).map(|i| x[i] * game.q[i][j]).sum::<f64>() <= u_col + eps);
        let sums_ok = (x.iter().sum::<f64>() - 1.0).abs() < 1e-12 && (y.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        rows_ok && cols_ok && sums_ok && x.iter().chain(y.iter()).all(|&p| p >= 0.0)
    }

    #[test]
    fn dominant_strategies_give_pure_profile() {
        let game = opponent_independent([0.2, -0.4], [0.1, -0.3, 0.6, 0.0]);
        let prof = nash_mixed(&game);
        assert_eq!(prof, MixedProfile::pure(0, 2));
    }

    #[test]
    fn matching_pennies_block_mixes_uniformly() {
        // Columns YB and YA form matching pennies; Bk and DN are strictly dominated.
        let game = PayoffMatrix {
            p: [[1.0, -1.0, 0.0, 0.0], [-1.0, 1.0, 0.0, 0.0]],
            q: [[-1.0, 1.0, -5.0, -5.0], [1.0, -1.0, -5.0, -5.0]],
        };
        let prof = nash_mixed(&game);
        assert!((prof.row_mix[0] - 0.5).abs() < 1e-12);
        assert!((prof.col_mix[0] - 0.5).abs() < 1e-12);
        assert!((prof.col_mix[1] - 0.5).abs() < 1e-12);
        assert_eq!(prof.col_mix[2], 0.0);
        assert_eq!(prof.col_mix[3], 0.0);
    }

    #[test]
    fn random_games_pass_deviation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut game = PayoffMatrix { p: [[0.0; 4]; 2], q: [[0.0; 4]; 2] };
            for i in 0..2 {
                for j in 0..4 {
                    game.p[i][j] = rng.random_range(-1.0..=1.0);
                    game.q[i][j] = rng.random_range(-1.0..=1.0);
                }
            }
            let prof = nash_mixed(&game);
            assert!(passes_oracle(&game, &prof, 1e-8), "{game:?} -> {prof:?}");
        }
    }

    #[test]
    fn tie_break_prefers_lag_payoff() {
        // Coordination game with two pure equilibria; (KeepStraight, DN) pays the lag more.
        let game = PayoffMatrix {
            p: [[1.0, -1.0, -1.0, 0.0], [0.0, -1.0, -1.0, 1.0]],
            q: [[0.5, -1.0, -1.0, 0.0], [0.0, -1.0, -1.0, 0.9]],
        };
        let prof = nash_mixed(&game);
        assert_eq!(prof, MixedProfile::pure(1, 3));
    }

    #[test]
    fn ties_resolve_to_smallest_support() {
        let game = opponent_independent([0.0, 0.0], [0.3, 0.3, 0.3, 0.3]);
        let prof = nash_mixed(&game);
        assert_eq!(prof, MixedProfile::pure(0, 0));
        assert!(passes_oracle(&game, &prof, 1e-8));
    }

    #[test]
    fn shortcut_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let p = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
            let q = [(); 4].map(|_| rng.random_range(-1.0..=1.0));
            let game = opponent_independent(p, q);
            let fast = nash_mixed(&game);
            let all = enumerate_equilibria(&game);
            assert_eq!(all.len(), 1);
            assert_eq!(fast, all[0]);
        }
    }
}

//! Exact stationary law of the driven chain, computed as the law of X at the
//! first time Y hits 0 when the count chain starts from (N, N).
//!
//! X never increases, so the state space splits into slices of fixed x. Mass
//! entering slice x is pushed through the substochastic within-slice
//! kernel (sleep moves y down by one, settling moves y up) by one linear
//! solve; exit mass feeds slice x - 1.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::count_chain::{CountChain, CountState};
use crate::error::{Error, Result};
use crate::params::ModelParams;

pub const DEFAULT_CAP: u32 = 300;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDist {
    /// `mass[k]` = mu_k, k = 0..=N.
    pub mass: Vec<f64>,
}

impl StationaryDist {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.mass.iter().enumerate().map(|(k, p)| (k as f64 - m).powi(2) * p).sum()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.mass.iter().enumerate() {
            if p > self.mass[best] {
                best = k;
            }
        }
        best
    }

    pub fn total_variation(&self, other: &[f64]) -> f64 {
        let len = self.mass.len().max(other.len());
        0.5 * (0..len)
            .map(|k| (self.mass.get(k).copied().unwrap_or(0.0) - other.get(k).copied().unwrap_or(0.0)).abs())
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceSolver {
    /// nalgebra LU on the full slice matrix.
    Dense,
    /// O(n^2) elimination using the one-step-down structure.
    Hessenberg,
}

pub fn stationary_exact(params: &ModelParams) -> Result<StationaryDist> {
    stationary_exact_with(params, SliceSolver::Dense, DEFAULT_CAP)
}

pub fn stationary_exact_with(params: &ModelParams, solver: SliceSolver, cap: u32) -> Result<StationaryDist> {
    let n = params.n_sites;
    if n > cap {
        return Err(Error::Domain(format!("N={n} exceeds exact-solver cap {cap}")));
    }
    let chain = CountChain::new(*params);
    let p_sleep = params.p_sleep();
    let mut mu = vec![0.0; n as usize + 1];
    // inflow[y] for the current slice, y = 0..=x
    let mut inflow = vec![0.0; n as usize + 1];
    inflow[n as usize] = 1.0;

    for x in (0..=n).rev() {
        let xs = x as usize;
        mu[xs] += inflow[0];
        if x == 0 {
            break;
        }
        let laws: Vec<_> = (1..=x).map(|y| chain.increment_law(CountState::new(x, y))).collect::<Result<_>>()?;
        // a[i][j] = (I - Q)^T over y = 1..=x, index y - 1
        let mut a = DMatrix::<f64>::zeros(xs, xs);
        for (i, law) in laws.iter().enumerate() {
            a[(i, i)] += 1.0;
            if i > 0 {
                a[(i - 1, i)] -= p_sleep;
            }
            for (k, &p) in law.settle.iter().enumerate() {
                a[(i + k, i)] -= p;
            }
        }
        let rhs = DVector::from_iterator(xs, inflow[1..=xs].iter().copied());
        let g = match solver {
            SliceSolver::Dense => a
                .clone()
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Solver(format!("singular slice x={x}")))?,
            SliceSolver::Hessenberg => DVector::from_vec(solve_lower_hessenberg(&a, rhs.as_slice())?),
        };
        let residual = (&a * &g - &rhs).amax();
        if !(residual <= RESIDUAL_TOL) {
            return Err(Error::Solver(format!("residual {residual:e} at slice x={x}")));
        }

        mu[xs] += g[0] * p_sleep;
        let mut next = vec![0.0; n as usize + 1];
        for (i, law) in laws.iter().enumerate() {
            let y = i + 1;
            for (k, &p) in law.exit.iter().enumerate() {
                next[y - 1 + k] += g[i] * p;
            }
        }
        inflow = next;
    }
    Ok(StationaryDist { mass: mu })
}

/// Solves a g = b for `a` with zero entries above the first superdiagonal.
/// Reversing the index order makes the matrix upper Hessenberg; Gaussian
/// elimination then only ever touches two rows per column.
fn solve_lower_hessenberg(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let r = |i: usize| n - 1 - i;
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = a[(r(i), r(j))];
        }
    }
    let mut rhs: Vec<f64> = (0..n).map(|i| b[r(i)]).collect();
    for k in 0..n.saturating_sub(1) {
        if h[(k + 1) * n + k].abs() > h[k * n + k].abs() {
            for j in k..n {
                h.swap(k * n + j, (k + 1) * n + j);
            }
            rhs.swap(k, k + 1);
        }
        let piv = h[k * n + k];
        if piv == 0.0 {
            return Err(Error::Solver("zero pivot".into()));
        }
        let l = h[(k + 1) * n + k] / piv;
        if l != 0.0 {
            for j in k..n {
                h[(k + 1) * n + j] -= l * h[k * n + j];
            }
            rhs[k + 1] -= l * rhs[k];
        }
    }
    let mut sol = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= h[i * n + j] * sol[j];
        }
        let d = h[i * n + i];
        if d == 0.0 {
            return Err(Error::Solver("zero pivot".into()));
        }
        sol[i] = s / d;
    }
    Ok((0..n).map(|i| sol[r(i)]).collect())
}

fn check_nm(n: u64, m: u64) -> Result<()> {
    if n == 0 || m <= n {
        return Err(Error::Domain(format!("need 1 <= n < m, got n={n}, m={m}")));
    }
    Ok(())
}

/// Terms n(n-1)...(n-l+1) / (m(m-1)...(m-l+1)) for l = 1..=n.
fn falling_ratios(n: u64, m: u64) -> impl Iterator<Item = (u64, f64)> {
    let mut p = 1.0;
    (1..=n).map(move |l| {
        p *= (n - l + 1) as f64 / (m - l + 1) as f64;
        (l, p)
    })
}

/// (direct sum, n/(m-n+1)).
pub fn sum_identity_first(n: u64, m: u64) -> Result<(f64, f64)> {
    check_nm(n, m)?;
    let lhs = falling_ratios(n, m).map(|(_, p)| p).sum();
    Ok((lhs, n as f64 / (m - n + 1) as f64))
}

/// (direct sum, n(m+1)/((m-n+1)(m-n+2))).
pub fn sum_identity_second(n: u64, m: u64) -> Result<(f64, f64)> {
    check_nm(n, m)?;
    let lhs = falling_ratios(n, m).map(|(l, p)| l as f64 * p).sum();
    let d = (m - n + 1) as f64;
    Ok((lhs, n as f64 * (m + 1) as f64 / (d * (d + 1.0))))
}

/// (direct sum, first-order expansion in theta, residual).
pub fn sum_identity_exp(n: u64, m: u64, theta: f64) -> Result<(f64, f64, f64)> {
    check_nm(n, m)?;
    if (-theta).exp() * n as f64 / m as f64 > 0.9 {
        return Err(Error::Domain("exp(-theta) n/m must be at most 0.9".into()));
    }
    let lhs: f64 = falling_ratios(n, m).map(|(l, p)| (-(l as f64) * theta).exp() * p).sum();
    let (_, r1) = sum_identity_first(n, m)?;
    let (_, r2) = sum_identity_second(n, m)?;
    let rhs = r1 - theta * r2;
    Ok((lhs, rhs, lhs - rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(n: u32, l: f64) -> ModelParams {
        ModelParams::new(n, l).unwrap()
    }

    #[test]
    fn one_site() {
        for lambda in [0.3, 1.0, 7.0] {
            let mu = stationary_exact(&p(1, lambda)).unwrap();
            assert_abs_diff_eq!(mu.mass[0], 1.0 / (1.0 + lambda), epsilon = 1e-15);
            assert_abs_diff_eq!(mu.mass[1], lambda / (1.0 + lambda), epsilon = 1e-15);
        }
    }

    #[test]
    fn two_sites_by_hand() {
        // From (2,2): sleep -> (2,1); exit(0) -> (1,1); settle(0) loops.
        // Solve the small system directly with the hand-derived law.
        let c = CountChain::new(p(2, 1.0));
        let l22 = c.increment_law(CountState::new(2, 2)).unwrap();
        let l21 = c.increment_law(CountState::new(2, 1)).unwrap();
        let l11 = c.increment_law(CountState::new(1, 1)).unwrap();
        // absorption at x=1 from (1,1) and from (1,0)
        let h11 = l11.sleep / (1.0 - l11.settle[0]);
        // from (2,1): stays in slice via settle(0) (prob 0) or settle(1) -> (2,2)
        // from (2,2): settle(0) loops, sleep -> (2,1), exit(0) -> (1,1)
        // u = P[end at x=2 | (2,2)], v = P[end at x=2 | (2,1)]
        // u = s0 u + sl v ; v = sl + st1 u + st0 v
        let (s0, sl, e0) = (l22.settle[0], l22.sleep, l22.exit[0]);
        let st1 = l21.settle[1];
        let u = sl * l21.sleep / ((1.0 - s0) * (1.0 - l21.settle[0]) - sl * st1);
        // P[end at x=1]: via exit from (2,2) to (1,1), from (2,1) exit(1) to (1,1), exit(0) to (1,0)
        let w22 = 1.0 / ((1.0 - s0) - sl * st1 / (1.0 - l21.settle[0]));
        let w21 = w22 * sl / (1.0 - l21.settle[0]);
        let to11 = w22 * e0 + w21 * l21.exit[1];
        let to10 = w21 * l21.exit[0];
        let mu1 = to10 + to11 * h11;
        let mu = stationary_exact(&p(2, 1.0)).unwrap();
        assert_abs_diff_eq!(mu.mass[2], u, epsilon = 1e-14);
        assert_abs_diff_eq!(mu.mass[1], mu1, epsilon = 1e-14);
        assert_abs_diff_eq!(mu.total(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn solvers_agree() {
        for lambda in [0.1, 1.0, 10.0] {
            let d = stationary_exact_with(&p(60, lambda), SliceSolver::Dense, 300).unwrap();
            let h = stationary_exact_with(&p(60, lambda), SliceSolver::Hessenberg, 300).unwrap();
            for (a, b) in d.mass.iter().zip(&h.mass) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cap_enforced() {
        assert!(stationary_exact(&p(301, 1.0)).is_err());
    }

    #[test]
    fn fifty_sites_peak() {
        let mu = stationary_exact(&p(50, 1.0)).unwrap();
        let k = mu.argmax() as f64;
        assert!((25.0..=25.0 + 3.0 * (50.0 * 50f64.ln()).sqrt()).contains(&k), "{k}");
    }

    #[test]
    fn hessenberg_matches_lu_on_random_matrix() {
        use rand::Rng;
        let mut rng = crate::rng::trial_rng(1, 0);
        let n = 12;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..(i + 2).min(n) {
                a[(i, j)] = rng.random::<f64>() - 0.5;
            }
            a[(i, i)] += 3.0;
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 4.0).collect();
        let x = solve_lower_hessenberg(&a, &b).unwrap();
        let y = a.clone().lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert_abs_diff_eq!(x[i], y[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn identities_small() {
        assert_eq!(sum_identity_first(1, 2).unwrap(), (0.5, 0.5));
        let (l, r) = sum_identity_first(2, 3).unwrap();
        assert_abs_diff_eq!(l, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
        let (l, r) = sum_identity_second(2, 3).unwrap();
        assert_abs_diff_eq!(l, 4.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(sum_identity_second(1, 2).unwrap(), (0.5, 0.5));
        let (l, r) = sum_identity_first(30, 100).unwrap();
        assert!((l - r).abs() <= 1e-12);
        let (l, r) = sum_identity_second(30, 100).unwrap();
        assert!((l - r).abs() <= 1e-12);
        assert!(sum_identity_first(3, 3).is_err());
    }

    #[test]
    fn exp_identity_order() {
        let (_, _, r0) = sum_identity_exp(50, 200, 0.0).unwrap();
        assert_eq!(r0, 0.0);
        let (_, _, r2) = sum_identity_exp(50, 200, 1e-2).unwrap();
        let (_, _, r3) = sum_identity_exp(50, 200, 1e-3).unwrap();
        let ratio = r2 / r3;
        assert!((70.0..130.0).contains(&ratio), "{ratio}");
        let (_, _, r) = sum_identity_exp(2, 3, 0.1).unwrap();
        assert!(r.abs() <= 0.05);
        assert!(sum_identity_exp(19, 20, 0.0).is_err());
    }
}

//! Archimedean generators, their inverses and exact derivatives up to order 6.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Highest generator derivative order supported (dimension cap + 1).
pub const MAX_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Clayton,
    Gumbel,
    Frank,
    /// Clayton generator composed with the outer power `t^(1/beta)`.
    OpClayton,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::OpClayton => "op_clayton",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clayton" => Ok(Family::Clayton),
            "gumbel" => Ok(Family::Gumbel),
            "frank" => Ok(Family::Frank),
            "op_clayton" | "opclayton" | "opc" => Ok(Family::OpClayton),
            _ => Err(Error::Parameter(format!("unknown copula family {s:?}"))),
        }
    }
}

/// A parameterized Archimedean generator `psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    family: Family,
    theta: f64,
    beta: f64,
}

impl Generator {
    /// Validate parameters; `beta` is only meaningful for [`Family::OpClayton`].
    pub fn new(family: Family, theta: f64, beta: Option<f64>) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::Parameter("theta must be finite".to_string()));
        }
        match family {
            Family::Clayton | Family::OpClayton if theta <= 0.0 => {
                return Err(Error::Parameter("theta must be > 0".to_string()));
            }
            Family::Gumbel if theta < 1.0 => {
                return Err(Error::Parameter("theta must be >= 1".to_string()));
            }
            Family::Frank if theta == 0.0 => {
                return Err(Error::Parameter("theta must be nonzero".to_string()));
            }
            _ => {}
        }
        let beta = match (family, beta) {
            (Family::OpClayton, Some(b)) if b.is_finite() && b >= 1.0 => b,
            (Family::OpClayton, Some(_)) => {
                return Err(Error::Parameter("beta must be >= 1".to_string()));
            }
            (Family::OpClayton, None) => {
                return Err(Error::Parameter("op_clayton requires beta".to_string()));
            }
            (_, Some(b)) if b != 1.0 => {
                return Err(Error::Parameter(format!("beta is only used by op_clayton, got {b}")));
            }
            _ => 1.0,
        };
        Ok(Self { family, theta, beta })
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::new(Family::Clayton, theta, None)
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        Self::new(Family::Gumbel, theta, None)
    }

    pub fn frank(theta: f64) -> Result<Self> {
        Self::new(Family::Frank, theta, None)
    }

    pub fn op_clayton(theta: f64, beta: f64) -> Result<Self> {
        Self::new(Family::OpClayton, theta, Some(beta))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Outer-power parameter (1 for every family but op_clayton).
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Check that the generator yields a copula in `dim` dimensions.
    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        if !(2..=MAX_ORDER - 1).contains(&dim) {
            return Err(Error::Parameter(format!("dimension {dim} outside 2..=5")));
        }
        if self.family == Family::Frank && self.theta < 0.0 && dim != 2 {
            return Err(Error::Parameter("negative theta only in dimension 2".to_string()));
        }
        Ok(())
    }

    /// `psi(t)` for `t >= 0`.
    pub fn psi(&self, t: f64) -> f64 {
        let th = self.theta;
        match self.family {
            Family::Clayton => clayton_psi(th, t),
            Family::Gumbel => (-t.powf(1.0 / th)).exp(),
            Family::Frank => -frank_ln_one_minus_x(th, t) / th,
            Family::OpClayton => clayton_psi(th, t.powf(1.0 / self.beta)),
        }
    }

    /// `psi^{-1}(u)` for `u` in `(0, 1]`.
    pub fn psi_inverse(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::Domain(format!("psi_inverse needs u in (0, 1], got {u}")));
        }
        let th = self.theta;
        Ok(match self.family {
            Family::Clayton => clayton_psi_inv(th, u),
            Family::Gumbel => (-u.ln()).powf(th),
            Family::Frank => {
                // -ln[(e^{-th u} - 1)/(e^{-th} - 1)], written to stay accurate near u = 1
                let ratio = (-th * u).exp_m1() / (-th).exp_m1();
                if ratio < 0.5 {
                    -ratio.ln()
                } else {
                    let num = -(-th * u).exp() * (-th * (1.0 - u)).exp_m1();
                    -(num / (-th).exp_m1()).ln_1p()
                }
            }
            Family::OpClayton => clayton_psi_inv(th, u).powf(self.beta),
        })
    }

    /// `d psi^{-1}(u) / du = 1 / psi'(psi^{-1}(u))`.
    pub fn psi_inverse_deriv(&self, u: f64) -> Result<f64> {
        let t = self.psi_inverse(u)?;
        Ok(1.0 / self.psi_deriv(t, 1)?)
    }

    /// Exact `order`-th derivative of `psi` at `t > 0`.
    pub fn psi_deriv(&self, t: f64, order: usize) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("psi derivative needs t > 0, got {t}")));
        }
        let k = self.kernel(order)?;
        let (log_abs, sign) = k.eval(t);
        Ok(sign * log_abs.exp())
    }

    /// Precomputed evaluator for `ln |psi^{(order)}(t)|` and its sign.
    pub fn kernel(&self, order: usize) -> Result<DerivKernel> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::Domain(format!("derivative order {order} outside 1..=6")));
        }
        Ok(DerivKernel::new(*self, order))
    }
}

fn clayton_psi(theta: f64, t: f64) -> f64 {
    (-(theta * t).ln_1p() / theta).exp()
}

fn clayton_psi_inv(theta: f64, u: f64) -> f64 {
    (-theta * u.ln()).exp_m1() / theta
}

/// `ln(1 - x)` with `x = (1 - e^{-theta}) e^{-t}`.
fn frank_ln_one_minus_x(theta: f64, t: f64) -> f64 {
    let x = -(-theta).exp_m1() * (-t).exp();
    if x.abs() < 0.5 {
        (-x).ln_1p()
    } else {
        (-(-t).exp_m1() + (-theta - t).exp()).ln()
    }
}

/// `|(a)_j|` for the falling factorial `a (a-1) ... (a-j+1)`, `j = 1..=m`.
fn abs_falling(a: f64, m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m);
    let mut acc = 1.0;
    for j in 0..m {
        acc *= a - j as f64;
        out.push(acc.abs());
    }
    out
}

/// Partial Bell polynomials `B_{m,k}(x_1, ..., x_{m-k+1})` for `k = 0..=m`.
pub(crate) fn bell_row(m: usize, x: &[f64]) -> Vec<f64> {
    // table[n][k]
    let mut table = vec![vec![0.0; m + 1]; m + 1];
    table[0][0] = 1.0;
    let mut binom = vec![vec![0.0; m + 1]; m + 1];
    for n in 0..=m {
        binom[n][0] = 1.0;
        for k in 1..=n {
            binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0.0 };
        }
    }
    for n in 1..=m {
        for k in 1..=n {
            let mut s = 0.0;
            for i in 1..=(n - k + 1) {
                s += binom[n - 1][i - 1] * x[i - 1] * table[n - i][k - 1];
            }
            table[n][k] = s;
        }
    }
    table.swap_remove(m)
}

/// Eulerian polynomial coefficients `A_n(x) = sum_k A(n, k) x^k`.
fn eulerian(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for m in 1..=n {
        let mut next = vec![0.0; m];
        for k in 0..m {
            let keep = if k < row.len() { (k + 1) as f64 * row[k] } else { 0.0 };
            let carry = if k >= 1 && k - 1 < row.len() { (m - k) as f64 * row[k - 1] } else { 0.0 };
            next[k] = keep + carry;
        }
        row = next;
    }
    row
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq)]
enum KernelForm {
    /// `ln|psi^(m)| = log_coef - exponent * ln(1 + theta t)`.
    Clayton { log_coef: f64, exponent: f64 },
    /// Faa di Bruno over `exp(-t^a)`; `log_bell[k-1] = ln B_{m,k}(|(a)_j|)`.
    Gumbel { a: f64, log_bell: Vec<f64> },
    /// Faa di Bruno of the Clayton generator over `t^a`.
    OpClayton { a: f64, log_bell: Vec<f64>, log_outer: Vec<f64> },
    /// `(-1)^m (1/theta) Li_{1-m}(x)` via Eulerian polynomials in `x`.
    Frank { ln_scale: f64, poly: Vec<f64> },
}

/// Evaluator for one derivative order of one generator.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivKernel {
    theta: f64,
    order: usize,
    form: KernelForm,
}

impl DerivKernel {
    fn new(g: Generator, m: usize) -> Self {
        let th = g.theta;
        let form = match g.family {
            Family::Clayton => KernelForm::Clayton {
                log_coef: (0..m).map(|k| (1.0 + k as f64 * th).ln()).sum(),
                exponent: 1.0 / th + m as f64,
            },
            Family::Gumbel => {
                let a = 1.0 / th;
                let bell = bell_row(m, &abs_falling(a, m));
                KernelForm::Gumbel { a, log_bell: bell[1..].iter().map(|b| b.ln()).collect() }
            }
            Family::OpClayton => {
                let a = 1.0 / g.beta;
                let bell = bell_row(m, &abs_falling(a, m));
                let log_outer = (1..=m)
                    .map(|k| (0..k).map(|j| (1.0 + j as f64 * th).ln()).sum())
                    .collect();
                KernelForm::OpClayton { a, log_bell: bell[1..].iter().map(|b| b.ln()).collect(), log_outer }
            }
            Family::Frank => KernelForm::Frank {
                // ln(x / theta) = ln_scale - t
                ln_scale: (-(-th).exp_m1() / th).ln(),
                poly: eulerian(m - 1),
            },
        };
        Self { theta: th, order: m, form }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `(ln |psi^(m)(t)|, sign)` for `t > 0`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let m = self.order;
        let alternating = if m % 2 == 0 { 1.0 } else { -1.0 };
        let th = self.theta;
        match &self.form {
            KernelForm::Clayton { log_coef, exponent } => {
                (log_coef - exponent * (th * t).ln_1p(), alternating)
            }
            KernelForm::Gumbel { a, log_bell } => {
                let lt = t.ln();
                let s = (a * lt).exp();
                let terms = log_bell.iter().enumerate().map(move |(k, lb)| lb + (k + 1) as f64 * a * lt);
                (-s - m as f64 * lt + log_sum_exp(terms), alternating)
            }
            KernelForm::OpClayton { a, log_bell, log_outer } => {
                let lt = t.ln();
                let s = (a * lt).exp();
                let l1p = (th * s).ln_1p();
                let terms = log_bell.iter().zip(log_outer).enumerate().map(move |(i, (lb, lo))| {
                    let k = (i + 1) as f64;
                    lo - (1.0 / th + k) * l1p + lb + (k * a - m as f64) * lt
                });
                (log_sum_exp(terms), alternating)
            }
            KernelForm::Frank { ln_scale, poly } => {
                let x = -(-th).exp_m1() * (-t).exp();
                let p = poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
                let l1mx = frank_ln_one_minus_x(th, t);
                (ln_scale - t + p.abs().ln() - m as f64 * l1mx, alternating * p.signum())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_generators() -> Vec<Generator> {
        vec![
            Generator::clayton(2.0).unwrap(),
            Generator::clayton(0.3).unwrap(),
            Generator::gumbel(2.0).unwrap(),
            Generator::gumbel(1.0).unwrap(),
            Generator::frank(3.0).unwrap(),
            Generator::frank(12.0).unwrap(),
            Generator::op_clayton(1.0, 1.5).unwrap(),
            Generator::op_clayton(0.5, 3.0).unwrap(),
        ]
    }

    #[test]
    fn generator_values() {
        for g in all_generators() {
            assert_eq!(g.psi(0.0), 1.0, "{g:?}");
            assert_eq!(g.psi_inverse(1.0).unwrap(), 0.0, "{g:?}");
        }
        let c = Generator::clayton(1.0).unwrap();
        assert!((c.psi(1.0) - 0.5).abs() < 1e-15);
        assert!((c.psi_inverse(0.5).unwrap() - 1.0).abs() < 1e-15);
        let g = Generator::gumbel(1.0).unwrap();
        assert!((g.psi(1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let f = Generator::frank(3.0).unwrap();
        for u in [0.1, 0.5, 0.9] {
            let t = f.psi_inverse(u).unwrap();
            assert!((f.psi(t) - u).abs() <= 1e-12 * u);
        }
        for g in all_generators() {
            for u in [1e-6, 0.01, 0.3, 0.77, 0.999_999] {
                let t = g.psi_inverse(u).unwrap();
                assert!((g.psi(t) - u).abs() <= 1e-12 * u, "{g:?} u={u}");
            }
        }
        assert!(Generator::frank(-2.0).unwrap().psi_inverse(0.0).is_err());
    }

    #[test]
    fn first_derivative_by_hand() {
        let c = Generator::clayton(1.0).unwrap();
        assert!((c.psi_deriv(1.0, 1).unwrap() + 0.25).abs() < 1e-15);
        assert!(Generator::gumbel(2.0).unwrap().psi_deriv(1.0, 2).unwrap() > 0.0);
        assert!(c.psi_deriv(0.0, 1).is_err());
        assert!(c.psi_deriv(1.0, 7).is_err());
    }

    // Central differences of the previous order with Richardson extrapolation.
    fn fd_deriv(g: &Generator, t: f64, order: usize) -> f64 {
        let lower = |x: f64| if order == 1 { g.psi(x) } else { g.psi_deriv(x, order - 1).unwrap() };
        let d = |h: f64| (lower(t + h) - lower(t - h)) / (2.0 * h);
        let h = 1e-3 * t;
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for g in all_generators() {
            for order in 1..=6 {
                for t in [0.1, 1.0, 10.0] {
                    let exact = g.psi_deriv(t, order).unwrap();
                    let fd = fd_deriv(&g, t, order);
                    let rel = ((exact - fd) / exact).abs();
                    assert!(rel < 1e-6, "{g:?} order={order} t={t} exact={exact} fd={fd}");
                }
            }
        }
    }

    #[test]
    fn complete_monotonicity_signs() {
        for g in all_generators() {
            for m in 1..=5 {
                for i in 0..40 {
                    let t = 10f64.powf(-4.0 + i as f64 * 0.2);
                    let v = g.psi_deriv(t, m).unwrap();
                    let expected = if m % 2 == 0 { 1.0 } else { -1.0 };
                    assert!(v * expected > 0.0 || v == 0.0 && t > 100.0, "{g:?} m={m} t={t} v={v}");
                }
            }
        }
    }

    #[test]
    fn generator_axioms_on_grid() {
        for g in all_generators() {
            let mut prev = 1.0;
            for i in 1..200 {
                let t = i as f64 * 0.25;
                let v = g.psi(t);
                assert!(v < prev && v > 0.0, "{g:?} t={t}");
                prev = v;
            }
            assert!(g.psi(1e8) < 1e-3, "{g:?}");
        }
    }

    #[test]
    fn negative_frank_second_derivative() {
        let g = Generator::frank(-2.0).unwrap();
        for t in [0.1, 1.0, 5.0] {
            let exact = g.psi_deriv(t, 2).unwrap();
            assert!(exact > 0.0);
            assert!(((exact - fd_deriv(&g, t, 2)) / exact).abs() < 1e-6);
        }
    }

    #[test]
    fn bell_polynomials_known_values() {
        // B_{4,2}(x1,x2,x3) = 4 x1 x3 + 3 x2^2
        let row = bell_row(4, &[2.0, 3.0, 5.0, 7.0]);
        assert_eq!(row[2], 4.0 * 2.0 * 5.0 + 3.0 * 9.0);
        assert_eq!(row[4], 16.0);
        assert_eq!(eulerian(3), vec![1.0, 4.0, 1.0]);
        assert_eq!(eulerian(4), vec![1.0, 11.0, 11.0, 1.0]);
    }

    #[test]
    fn parameter_bounds() {
        assert_eq!(
            Generator::gumbel(0.5).unwrap_err(),
            Error::Parameter("theta must be >= 1".to_string())
        );
        assert!(Generator::clayton(0.0).is_err());
        assert!(Generator::op_clayton(1.0, 0.9).is_err());
        assert!(Generator::frank(0.0).is_err());
        let neg = Generator::frank(-2.0).unwrap();
        assert!(neg.check_dimension(2).is_ok());
        assert_eq!(
            neg.check_dimension(3).unwrap_err(),
            Error::Parameter("negative theta only in dimension 2".to_string())
        );
    }
}

//! Marshall-Olkin frailty sampling.
//!
//! A frailty `V` with Laplace transform `psi` is drawn, then
//! `u_j = psi(E_j / V)` for i.i.d. unit exponentials `E_j`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use super::{Family, Generator, MixtureCopula};
use crate::rng::substream;
use crate::{MarginSource, PseudoSample};

/// Positive stable variable with Laplace transform `exp(-t^alpha)` (Kanter).
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u: f64 = rng.random::<f64>() * PI;
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = ((1.0 - alpha) * u).sin() / w;
    a * b.powf((1.0 - alpha) / alpha)
}

/// Gamma frailty of the Clayton generator `(1 + theta t)^(-1/theta)`.
fn clayton_frailty<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> f64 {
    Gamma::new(1.0 / theta, theta).expect("theta > 0").sample(rng)
}

/// Logarithmic series variable with `P(k) = p^k / (k theta)`, `p = 1 - e^{-theta}`
/// (Kemp's LK algorithm).
fn log_series<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> f64 {
    let p = -(-theta).exp_m1();
    let v: f64 = rng.random();
    if v > p {
        return 1.0;
    }
    let q = -(-theta * rng.random::<f64>()).exp_m1();
    if v <= q * q {
        (1.0 + v.ln() / q.ln()).floor()
    } else if v <= q {
        2.0
    } else {
        1.0
    }
}

fn frailty<R: Rng + ?Sized>(g: &Generator, rng: &mut R) -> f64 {
    match g.family() {
        Family::Clayton => clayton_frailty(g.theta(), rng),
        Family::Gumbel => positive_stable(1.0 / g.theta(), rng),
        Family::Frank => log_series(g.theta(), rng),
        Family::OpClayton => {
            let base = clayton_frailty(g.theta(), rng);
            base.powf(g.beta()) * positive_stable(1.0 / g.beta(), rng)
        }
    }
}

fn interior(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn draw_row<R: Rng + ?Sized>(g: &Generator, dim: usize, rng: &mut R, out: &mut Vec<f64>) {
    if g.family() == Family::Frank && g.theta() < 0.0 {
        // negative Frank has no frailty; invert the conditional distribution
        let th = g.theta();
        let u: f64 = interior(rng.random());
        let w: f64 = interior(rng.random());
        let v = -((w * (-th).exp_m1()) / (w + (1.0 - w) * (-th * u).exp())).ln_1p() / th;
        out.push(u);
        out.push(interior(v));
        return;
    }
    let v = frailty(g, rng);
    for _ in 0..dim {
        let e: f64 = Exp1.sample(rng);
        out.push(interior(g.psi(e / v)));
    }
}

/// Draw `n` rows from the mixture.
pub fn sample_copula<R: Rng + ?Sized>(model: &MixtureCopula, n: usize, rng: &mut R) -> PseudoSample {
    let dim = model.dim();
    let mut data = Vec::with_capacity(n * dim);
    let comps = model.components();
    let weights = model.weights();
    for _ in 0..n {
        let pick: f64 = rng.random();
        let mut acc = 0.0;
        let mut idx = comps.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if pick < acc {
                idx = i;
                break;
            }
        }
        draw_row(&comps[idx], dim, rng, &mut data);
    }
    PseudoSample::new(data, dim, alloc::vec![MarginSource::Simulated; dim])
        .expect("samples are clamped to the open unit cube")
}

/// [`sample_copula`] on the `sample_copula` substream of `seed`.
pub fn sample_copula_seeded(model: &MixtureCopula, n: usize, seed: u64) -> PseudoSample {
    sample_copula(model, n, &mut substream(seed, "sample_copula"))
}

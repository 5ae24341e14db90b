//! Central finite-difference oracles for the critic and the actor decoder.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikeinsert::rl::CriticNet;
use spikeinsert::snn::{ActorConfig, ActorTape, SpikingActor};
use spikeinsert::tensor::ParamSet;
use spikeinsert::types::{ActionVector, StateVector};

pub const BOUNDS: [f64; 6] = [0.005, 0.005, 0.005, 0.01745, 0.01745, 0.01745];

/// Relative error with an absolute floor so two vanishing values compare equal.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

pub fn random_state(rng: &mut ChaCha8Rng) -> StateVector {
    let mut s = [0.0; 13];
    s[0] = rng.random_range(-0.02..0.02);
    s[1] = rng.random_range(-0.02..0.02);
    s[2] = rng.random_range(-0.07..0.01);
    s[3] = 1.0;
    for v in &mut s[7..10] {
        *v = rng.random_range(-8.0..8.0);
    }
    for v in &mut s[10..13] {
        *v = rng.random_range(-0.5..0.5);
    }
    StateVector(s)
}

pub fn random_action(rng: &mut ChaCha8Rng) -> ActionVector {
    ActionVector(BOUNDS.map(|b| rng.random_range(-b..b)))
}

fn critic_value(c: &CriticNet, s: &StateVector, a: &ActionVector) -> f64 {
    c.q(s, a).expect("critic forward")
}

/// Worst relative error between backprop and central differences of `Q`
/// over `points` random inputs. Each point checks `coords` random parameters
/// per tensor plus one random direction through all parameters.
pub fn critic_gradcheck(hidden: [usize; 2], points: usize, coords: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut critic = CriticNet::new(hidden, 10.0, &BOUNDS, &mut rng).expect("critic");
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..points {
        let s = random_state(&mut rng);
        let a = random_action(&mut rng);
        let (_, cache) = critic.forward(&[s], &[a]).expect("forward");
        let (grads, _) = critic.backward(&cache, &Array1::from_elem(1, 1.0)).expect("backward");
        let g: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.data.to_vec()).collect();

        for (k, gk) in g.iter().enumerate() {
            for _ in 0..coords {
                let i = rng.random_range(0..gk.len());
                let orig = critic.params.tensors_mut()[k][i];
                critic.params.tensors_mut()[k][i] = orig + h;
                let up = critic_value(&critic, &s, &a);
                critic.params.tensors_mut()[k][i] = orig - h;
                let down = critic_value(&critic, &s, &a);
                critic.params.tensors_mut()[k][i] = orig;
                worst = worst.max(rel_err(gk[i], (up - down) / (2.0 * h)));
            }
        }

        let dir: Vec<Vec<f64>> = g.iter().map(|gk| gk.iter().map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let analytic: f64 = g.iter().zip(&dir).flat_map(|(gk, dk)| gk.iter().zip(dk).map(|(x, y)| x * y)).sum();
        let base = critic.clone();
        let shifted = |eps: f64| {
            let mut c = base.clone();
            for (t, dk) in c.params.tensors_mut().into_iter().zip(&dir) {
                for (v, d) in t.iter_mut().zip(dk) {
                    *v += eps * d;
                }
            }
            critic_value(&c, &s, &a)
        };
        let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
        worst = worst.max(rel_err(analytic, numeric));
    }
    worst
}

/// Worst relative error of the decoder gradient of `Σ_d u_d a_d` against
/// central differences, every decoder weight, over `points` random states.
pub fn decoder_gradcheck(points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actor = SpikingActor::new(&ActorConfig::default(), &BOUNDS, &mut rng).expect("actor");
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..points {
        let s = random_state(&mut rng);
        let u: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let upstream = ndarray::Array2::from_shape_fn((1, 6), |(_, d)| u[d]);
        let mut tape = ActorTape::new();
        tape.forward(&actor, &[s]).expect("forward");
        let grads = tape.backward(&actor, &upstream).expect("backward");
        let objective = |a: &SpikingActor| {
            let act = a.act(&s).expect("act");
            act.0.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>()
        };
        let (rows, cols) = actor.params.decoder.dim();
        for d in 0..rows {
            for j in 0..cols {
                let orig = actor.params.decoder[[d, j]];
                actor.params.decoder[[d, j]] = orig + h;
                let up = objective(&actor);
                actor.params.decoder[[d, j]] = orig - h;
                let down = objective(&actor);
                actor.params.decoder[[d, j]] = orig;
                worst = worst.max(rel_err(grads.decoder[[d, j]], (up - down) / (2.0 * h)));
            }
        }
    }
    worst
}

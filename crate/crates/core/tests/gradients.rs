//! Backpropagation checked against central finite differences and against a
//! generic layer-stack network that knows nothing about encoders or decoders.

use ilm_core::neuralnet::sigmoid;
use ilm_core::{Agent, Loss, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff < 1e-8 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs())
}

fn random_binary(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0..2) as f64).collect()
}

fn mlp_max_error(dims: [usize; 3], loss: Loss, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = Mlp::init(dims, &mut rng).unwrap();
    let x = random_binary(dims[0], &mut rng);
    let t = random_binary(dims[2], &mut rng);
    let (_, grad) = net.gradient(&x, &t, loss).unwrap();
    let analytic = grad.params();
    let base = net.params();
    let mut worst = 0.0f64;
    for k in 0..base.len() {
        let mut probe = net.clone();
        let mut p = base.clone();
        p[k] = base[k] + H;
        probe.set_params(&p).unwrap();
        let up = probe.loss(&x, &t, loss).unwrap();
        p[k] = base[k] - H;
        probe.set_params(&p).unwrap();
        let down = probe.loss(&x, &t, loss).unwrap();
        worst = worst.max(rel_err(analytic[k], (up - down) / (2.0 * H)));
    }
    worst
}

fn agent_max_error(n1: usize, n2: usize, n3: usize, loss: Loss, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agent = Agent::new(n1, n2, n3, &mut rng).unwrap();
    let m = random_binary(n1, &mut rng);
    let (_, ge, gd) = agent.autoencoder_gradient(&m, loss).unwrap();
    let mut worst = 0.0f64;
    for which in 0..2 {
        let (analytic, base) = if which == 0 {
            (ge.params(), agent.encoder.params())
        } else {
            (gd.params(), agent.decoder.params())
        };
        for k in 0..base.len() {
            let eval = |delta: f64| {
                let mut probe = agent.clone();
                let mut p = base.clone();
                p[k] += delta;
                if which == 0 {
                    probe.encoder.set_params(&p).unwrap();
                } else {
                    probe.decoder.set_params(&p).unwrap();
                }
                probe.autoencoder_loss(&m, loss).unwrap()
            };
            let numeric = (eval(H) - eval(-H)) / (2.0 * H);
            worst = worst.max(rel_err(analytic[k], numeric));
        }
    }
    worst
}

#[test]
fn encoder_and_decoder_gradients_match_finite_differences() {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        for &dims in &[[4, 3, 4], [3, 2, 3], [2, 3, 4], [4, 3, 2], [1, 1, 1]] {
            for loss in [Loss::Mse, Loss::Bce] {
                worst = worst.max(mlp_max_error(dims, loss, seed));
            }
        }
    }
    assert!(worst <= 1e-4, "max relative error {worst}");
}

#[test]
fn composite_gradients_match_finite_differences() {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        for &(n1, n2, n3) in &[(3, 2, 3), (4, 3, 4), (2, 3, 4), (3, 4, 2)] {
            for loss in [Loss::Mse, Loss::Bce] {
                worst = worst.max(agent_max_error(n1, n2, n3, loss, seed));
            }
        }
    }
    assert!(worst <= 1e-4, "max relative error {worst}");
}

/// Plain stack of sigmoid layers with its own backprop, used as an oracle.
struct Stack {
    // (weights row-major (out, in), bias)
    layers: Vec<(Vec<f64>, Vec<f64>, usize, usize)>,
}

impl Stack {
    fn from_agent(agent: &Agent) -> Self {
        let mut layers = Vec::new();
        for net in [&agent.encoder, &agent.decoder] {
            let [a, b, c] = net.dims();
            let p = net.params();
            let (w1, rest) = p.split_at(a * b);
            let (b1, rest) = rest.split_at(b);
            let (w2, b2) = rest.split_at(b * c);
            layers.push((w1.to_vec(), b1.to_vec(), a, b));
            layers.push((w2.to_vec(), b2.to_vec(), b, c));
        }
        Stack { layers }
    }

    /// MSE gradient for every layer, flattened as (W, b) per layer.
    fn mse_gradient(&self, x: &[f64], t: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (w, b, n_in, n_out) in &self.layers {
            let input = acts.last().unwrap();
            let out: Vec<f64> = (0..*n_out)
                .map(|k| sigmoid(b[k] + (0..*n_in).map(|i| w[k * n_in + i] * input[i]).sum::<f64>()))
                .collect();
            acts.push(out);
        }
        let y = acts.last().unwrap();
        let n = y.len() as f64;
        let mut delta: Vec<f64> = y
            .iter()
            .zip(t)
            .map(|(&y, &t)| 2.0 * (y - t) / n * y * (1.0 - y))
            .collect();
        let mut grads = vec![Vec::new(); self.layers.len()];
        for l in (0..self.layers.len()).rev() {
            let (w, _, n_in, n_out) = &self.layers[l];
            let input = &acts[l];
            let mut g = vec![0.0; n_in * n_out + n_out];
            for k in 0..*n_out {
                for i in 0..*n_in {
                    g[k * n_in + i] = delta[k] * input[i];
                }
                g[n_in * n_out + k] = delta[k];
            }
            grads[l] = g;
            if l > 0 {
                delta = (0..*n_in)
                    .map(|i| {
                        let back: f64 = (0..*n_out).map(|k| w[k * n_in + i] * delta[k]).sum();
                        back * input[i] * (1.0 - input[i])
                    })
                    .collect();
            }
        }
        grads
    }
}

#[test]
fn composite_gradient_matches_layer_stack_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let agent = Agent::new(4, 3, 5, &mut rng).unwrap();
        let m = random_binary(4, &mut rng);
        let (_, ge, gd) = agent.autoencoder_gradient(&m, Loss::Mse).unwrap();
        let oracle = Stack::from_agent(&agent).mse_gradient(&m, &m);
        // regroup oracle layers into W1 b1 W2 b2 order per network
        let regroup = |l0: &Vec<f64>, l1: &Vec<f64>, w0: usize, w1: usize| {
            let mut v = l0[..w0].to_vec();
            v.extend_from_slice(&l0[w0..]);
            v.extend_from_slice(&l1[..w1]);
            v.extend_from_slice(&l1[w1..]);
            v
        };
        let enc = regroup(&oracle[0], &oracle[1], 4 * 3, 3 * 5);
        let dec = regroup(&oracle[2], &oracle[3], 5 * 3, 3 * 4);
        for (a, b) in ge.params().iter().zip(&enc).chain(gd.params().iter().zip(&dec)) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn training_is_bit_reproducible() {
    let train = || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut agent = Agent::new(4, 3, 4, &mut rng).unwrap();
        for step in 0..500u32 {
            let m: Vec<f64> = (0..4).map(|i| ((step >> i) & 1) as f64).collect();
            let s: Vec<f64> = m.iter().rev().copied().collect();
            agent.encoder.sgd_step(&m, &s, 5.0, Loss::Mse).unwrap();
            agent.decoder.sgd_step(&s, &m, 5.0, Loss::Mse).unwrap();
            agent.autoencoder_step(&m, 5.0, Loss::Mse).unwrap();
        }
        agent
    };
    let a = train();
    let b = train();
    assert_eq!(a.encoder.params(), b.encoder.params());
    assert_eq!(a.decoder.params(), b.decoder.params());
    assert!(a.is_finite());
}

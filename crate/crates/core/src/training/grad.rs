//! Log loss of the learned metric and its analytic gradient.

use crate::error::{Error, Result};
use crate::metric::{kernel_distance_unchecked, sigmoid, DistanceKernel, MetricModel, DISTANCE_EPS};

use super::sample::TrainingSample;

/// What the loss is taken over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    /// One log loss on the scale-averaged distance.
    Combined,
    /// A separate log loss per scale, summed; scales never interact.
    #[default]
    PerScale,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Combined => "combined",
            Objective::PerScale => "per-scale",
        }
    }
}

/// `−[y ln d + (1−y) ln(1−d)]` with `d` clamped to `[ε, 1−ε]`.
pub fn log_loss(d: f64, positive: bool) -> f64 {
    let d = d.clamp(DISTANCE_EPS, 1.0 - DISTANCE_EPS);
    if positive {
        -d.ln()
    } else {
        -(1.0 - d).ln()
    }
}

/// Derivative of [`log_loss`] in `d`; zero where the clamp is active.
fn log_loss_slope(d: f64, positive: bool) -> f64 {
    if !(DISTANCE_EPS..=1.0 - DISTANCE_EPS).contains(&d) {
        return 0.0;
    }
    if positive {
        -1.0 / d
    } else {
        1.0 / (1.0 - d)
    }
}

/// Gradient with the model's parameter layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGradient {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
}

impl ModelGradient {
    pub fn zeros(model: &MetricModel) -> Self {
        ModelGradient {
            alpha: vec![vec![0.0; model.n]; model.scales.len()],
            beta: vec![vec![0.0; model.n * model.m]; model.scales.len()],
        }
    }

    pub fn add(&mut self, other: &ModelGradient) {
        for (a, b) in self.alpha.iter_mut().flatten().zip(other.alpha.iter().flatten()) {
            *a += b;
        }
        for (a, b) in self.beta.iter_mut().flatten().zip(other.beta.iter().flatten()) {
            *a += b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.alpha
            .iter()
            .chain(&self.beta)
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Forward pass of one scale, kept for the backward pass.
struct ScaleForward {
    ut: Vec<f64>,
    vt: Vec<f64>,
    d: f64,
}

fn forward(model: &MetricModel, s: usize, u: &[f64], v: &[f64]) -> ScaleForward {
    let p = &model.scales[s];
    let m = model.m;
    let mut ut = Vec::with_capacity(model.n);
    let mut vt = Vec::with_capacity(model.n);
    for (a, row) in p.alpha.iter().zip(p.beta.chunks_exact(m)) {
        let (mut zu, mut zv) = (*a, *a);
        for ((b, x), y) in row.iter().zip(u).zip(v) {
            zu += b * x;
            zv += b * y;
        }
        ut.push(sigmoid(zu));
        vt.push(sigmoid(zv));
    }
    let d = kernel_distance_unchecked(&ut, &vt, model.kernel, model.sigma);
    ScaleForward { ut, vt, d }
}

/// Adds `g · ∂d_s/∂θ_s` into the gradient of scale `s`.
fn backward(
    model: &MetricModel,
    s: usize,
    u: &[f64],
    v: &[f64],
    f: &ScaleForward,
    g: f64,
    out: &mut ModelGradient,
) {
    if g == 0.0 {
        return;
    }
    let (n, m) = (model.n, model.m);
    let ga = &mut out.alpha[s];
    let gb = &mut out.beta[s];
    for k in 0..n {
        let delta = f.ut[k] - f.vt[k];
        let dd = match model.kernel {
            DistanceKernel::Rbf => (1.0 - f.d) * delta / (model.sigma * model.sigma),
            DistanceKernel::Linear => {
                if delta > 0.0 {
                    1.0 / n as f64
                } else if delta < 0.0 {
                    -1.0 / n as f64
                } else {
                    0.0
                }
            }
        };
        let cu = g * dd * f.ut[k] * (1.0 - f.ut[k]);
        let cv = g * dd * f.vt[k] * (1.0 - f.vt[k]);
        ga[k] += cu - cv;
        for ((b, x), y) in gb[k * m..(k + 1) * m].iter_mut().zip(u).zip(v) {
            *b += cu * x - cv * y;
        }
    }
}

fn check_sample(model: &MetricModel, sample: &TrainingSample) -> Result<()> {
    if sample.pairs.len() != model.scales.len() {
        return Err(Error::Dimension(format!(
            "sample has {} scales, model has {}",
            sample.pairs.len(),
            model.scales.len()
        )));
    }
    for (u, v) in &sample.pairs {
        if u.len() != model.m || v.len() != model.m {
            return Err(Error::Dimension(format!(
                "histograms of length {}/{} for M={}",
                u.len(),
                v.len(),
                model.m
            )));
        }
    }
    Ok(())
}

/// Loss of one sample and its gradient.
pub fn sample_loss_and_gradient(
    model: &MetricModel,
    sample: &TrainingSample,
    objective: Objective,
) -> Result<(f64, ModelGradient)> {
    check_sample(model, sample)?;
    let mut grad = ModelGradient::zeros(model);
    let fw: Vec<ScaleForward> = sample
        .pairs
        .iter()
        .enumerate()
        .map(|(s, (u, v))| forward(model, s, u, v))
        .collect();
    let y = sample.positive;
    let loss = match objective {
        Objective::Combined => {
            let ns = fw.len() as f64;
            let d = fw.iter().map(|f| f.d).sum::<f64>() / ns;
            let g = log_loss_slope(d, y) / ns;
            for (s, f) in fw.iter().enumerate() {
                let (u, v) = &sample.pairs[s];
                backward(model, s, u, v, f, g, &mut grad);
            }
            log_loss(d, y)
        }
        Objective::PerScale => {
            let mut total = 0.0;
            for (s, f) in fw.iter().enumerate() {
                let (u, v) = &sample.pairs[s];
                backward(model, s, u, v, f, log_loss_slope(f.d, y), &mut grad);
                total += log_loss(f.d, y);
            }
            total
        }
    };
    Ok((loss, grad))
}

/// Gradient of the loss of one sample.
pub fn gradients(model: &MetricModel, sample: &TrainingSample, objective: Objective) -> Result<ModelGradient> {
    sample_loss_and_gradient(model, sample, objective).map(|(_, g)| g)
}

/// Loss of one sample.
pub fn sample_loss(model: &MetricModel, sample: &TrainingSample, objective: Objective) -> Result<f64> {
    check_sample(model, sample)?;
    let d: Vec<f64> = sample
        .pairs
        .iter()
        .enumerate()
        .map(|(s, (u, v))| forward(model, s, u, v).d)
        .collect();
    Ok(match objective {
        Objective::Combined => log_loss(d.iter().sum::<f64>() / d.len() as f64, sample.positive),
        Objective::PerScale => d.iter().map(|&d| log_loss(d, sample.positive)).sum(),
    })
}

/// Summed loss over `samples`.
pub fn loss(samples: &[TrainingSample], model: &MetricModel, objective: Objective) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("loss of an empty sample list".into()));
    }
    samples.iter().map(|s| sample_loss(model, s, objective)).sum()
}

/// `θ ← θ − lr · g`.
pub fn apply_gradient(model: &mut MetricModel, grad: &ModelGradient, lr: f64) {
    for (p, (ga, gb)) in model.scales.iter_mut().zip(grad.alpha.iter().zip(&grad.beta)) {
        for (a, g) in p.alpha.iter_mut().zip(ga) {
            *a -= lr * g;
        }
        for (b, g) in p.beta.iter_mut().zip(gb) {
            *b -= lr * g;
        }
    }
}

/// One SGD step on one sample; returns the loss before the step.
pub fn sgd_step(model: &mut MetricModel, sample: &TrainingSample, objective: Objective, lr: f64) -> Result<f64> {
    let (l, g) = sample_loss_and_gradient(model, sample, objective)?;
    apply_gradient(model, &g, lr);
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::test_support::{random_model, random_sample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_losses() {
        assert!((log_loss(0.5, true) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(log_loss(1.0 - 1e-12, true) < 1e-11);
        assert!(log_loss(1.0 - 1e-9, false) > log_loss(1.0 - 1e-6, false));
    }

    #[test]
    fn matches_forward_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = random_model(DistanceKernel::Rbf, 5, &mut rng);
        let s = random_sample(&model, true, &mut rng);
        let pairs: Vec<(&[f64], &[f64])> = s.pairs.iter().map(|(u, v)| (u.as_slice(), v.as_slice())).collect();
        let d = model.lbm_multi(&pairs).unwrap();
        let l = sample_loss(&model, &s, Objective::Combined).unwrap();
        assert!((l + d.ln()).abs() < 1e-12);
    }

    #[test]
    fn coincident_pair_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut model = random_model(DistanceKernel::Rbf, 4, &mut rng);
        for p in &mut model.scales {
            p.alpha.iter_mut().for_each(|v| *v = 0.0);
            p.beta.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut s = random_sample(&model, false, &mut rng);
        for (u, v) in &mut s.pairs {
            *v = u.clone();
        }
        for obj in [Objective::Combined, Objective::PerScale] {
            assert_eq!(gradients(&model, &s, obj).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn gradient_is_additive_over_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = random_model(DistanceKernel::Linear, 4, &mut rng);
        let s = random_sample(&model, true, &mut rng);
        let g = gradients(&model, &s, Objective::PerScale).unwrap();
        let mut twice = g.clone();
        twice.add(&g);
        for (a, b) in twice.beta.iter().flatten().zip(g.beta.iter().flatten()) {
            assert_eq!(*a, 2.0 * b);
        }
    }

    #[test]
    fn small_step_decreases_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..20 {
            let kernel = if i % 2 == 0 { DistanceKernel::Rbf } else { DistanceKernel::Linear };
            let mut model = random_model(kernel, 6, &mut rng);
            let s = random_sample(&model, i % 3 == 0, &mut rng);
            let before = sgd_step(&mut model, &s, Objective::PerScale, 1e-6).unwrap();
            let after = sample_loss(&model, &s, Objective::PerScale).unwrap();
            assert!(after < before, "draw {i}: {after} >= {before}");
        }
    }

    #[test]
    fn empty_loss_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_model(DistanceKernel::Rbf, 3, &mut rng);
        assert!(loss(&[], &model, Objective::PerScale).is_err());
    }
}

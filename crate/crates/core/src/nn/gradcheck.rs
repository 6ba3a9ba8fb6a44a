use rand::seq::SliceRandom;
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;

/// Anything with a flat parameter vector and an analytic gradient of a
/// scalar loss on some batch type.
pub trait Differentiable {
    type Batch;

    fn param_count(&self) -> usize;
    fn param(&self, i: usize) -> f64;
    fn set_param(&mut self, i: usize, v: f64);
    fn loss(&self, batch: &Self::Batch) -> f64;
    /// Loss and gradient flattened in parameter index order.
    fn loss_and_grad(&self, batch: &Self::Batch) -> (f64, Vec<f64>);

    /// Additive pieces of the loss. Differencing piece by piece keeps the
    /// rounding error of the finite difference at the scale of the pieces
    /// that actually move rather than the scale of the whole loss.
    fn loss_terms(&self, batch: &Self::Batch) -> Vec<f64> {
        vec![self.loss(batch)]
    }

    /// On/off state of every piecewise-linear unit. Empty for smooth models.
    fn activation_pattern(&self, _batch: &Self::Batch) -> Vec<bool> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameters whose +-h perturbation switched a ReLU on or off, so the
    /// central difference straddles a kink and says nothing about the
    /// derivative. They are replaced by further samples.
    pub skipped_kinks: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Central-difference check of `samples` randomly chosen parameters (all of
/// them if fewer exist). Returns the worst relative error.
pub fn gradient_check<N: Differentiable, R: Rng>(net: &mut N, batch: &N::Batch, samples: usize, rng: &mut R) -> f64 {
    gradient_check_report(net, batch, samples, rng).max_rel_error
}

pub fn gradient_check_report<N: Differentiable, R: Rng>(
    net: &mut N,
    batch: &N::Batch,
    samples: usize,
    rng: &mut R,
) -> GradCheckReport {
    let (_, grad) = net.loss_and_grad(batch);
    let base_pattern = net.activation_pattern(batch);
    let mut order: Vec<usize> = (0..net.param_count()).collect();
    order.shuffle(rng);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped_kinks: 0,
    };
    for i in order {
        if report.checked == samples {
            break;
        }
        let orig = net.param(i);
        net.set_param(i, orig + FD_STEP);
        let up = net.loss_terms(batch);
        let up_pattern = net.activation_pattern(batch);
        net.set_param(i, orig - FD_STEP);
        let down = net.loss_terms(batch);
        let down_pattern = net.activation_pattern(batch);
        net.set_param(i, orig);
        if up_pattern != base_pattern || down_pattern != base_pattern {
            report.skipped_kinks += 1;
            continue;
        }
        let diff: f64 = up.iter().zip(&down).map(|(u, d)| u - d).sum();
        let numeric = diff / (2.0 * FD_STEP);
        report.max_rel_error = report.max_rel_error.max(relative_error(grad[i], numeric));
        report.checked += 1;
    }
    report
}

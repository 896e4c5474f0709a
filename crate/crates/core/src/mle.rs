//! Maximum-likelihood position estimators for both emission scenarios.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{CoreError, CoreResult};
use crate::matrix::{generic_labels, SymMatrix};
use crate::model::{Detection, SourceModel, Window};

/// Per-window sample means. Sources without detections are listed in
/// `unestimable` and their coordinates are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct BlinkingEstimate {
    pub theta: Vec<f64>,
    pub unestimable: Vec<usize>,
}

pub fn mle_blinking(detections: &[Detection], model: &SourceModel) -> CoreResult<BlinkingEstimate> {
    let dim = model.dim();
    let k = model.sources();
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for d in detections {
        let src = match d.window {
            Window::Source(s) if s < k => s,
            Window::Source(_) => return Err(CoreError::Domain("detection window beyond the source count")),
            Window::Mixed => return Err(CoreError::Domain("blinking estimator needs per-source windows")),
        };
        counts[src] += 1;
        for j in 0..dim {
            sums[src * dim + j] += d.coords[j];
        }
    }
    let mut unestimable = Vec::new();
    for (s, &c) in counts.iter().enumerate() {
        if c == 0 {
            unestimable.push(s);
        }
        for j in 0..dim {
            sums[s * dim + j] = if c == 0 { f64::NAN } else { sums[s * dim + j] / c as f64 };
        }
    }
    Ok(BlinkingEstimate { theta: sums, unestimable })
}

/// Multi-start settings for the cofluorescent likelihood.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSettings {
    pub starts: usize,
    pub max_iterations: usize,
    /// Converged when `‖∇ℓ‖ < grad_tol·N/σ`.
    pub grad_tol: f64,
    /// Standard deviation of random start perturbations, in units of σ.
    pub perturbation: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { starts: 8, max_iterations: 200, grad_tol: 1e-8, perturbation: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleResult {
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub converged_starts: usize,
}

/// Log-likelihood of the cofluorescent mixture and its derivatives.
struct Likelihood<'a> {
    model: &'a SourceModel,
    points: Vec<f64>,
    log_weights: Vec<f64>,
}

impl<'a> Likelihood<'a> {
    fn new(model: &'a SourceModel, detections: &[Detection]) -> Self {
        let dim = model.dim();
        let points = detections.iter().flat_map(|d| d.coords[..dim].iter().copied()).collect();
        let log_weights =
            model.weights().iter().map(|&w| if w > 0.0 { libm::log(w) } else { f64::NEG_INFINITY }).collect();
        Self { model, points, log_weights }
    }

    fn count(&self) -> usize {
        self.points.len() / self.model.dim()
    }

    /// `ℓ(θ)` up to a θ-independent constant.
    fn value(&self, theta: &[f64]) -> f64 {
        let dim = self.model.dim();
        let var = self.model.sigma() * self.model.sigma();
        let w = &self.log_weights;
        let mut ll = 0.0;
        for r in self.points.chunks_exact(dim) {
            ll += log_mix(r, theta, w, dim, var, |_, _| {});
        }
        ll
    }

    /// `ℓ`, gradient, Hessian and the EM update of the positions.
    fn derivatives(&self, theta: &[f64]) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let dim = self.model.dim();
        let m = theta.len();
        let var = self.model.sigma() * self.model.sigma();
        let w = &self.log_weights;
        let mut g = vec![0.0; m];
        let mut h = vec![0.0; m * m];
        let mut em = vec![0.0; m];
        let mut mass = vec![0.0; w.len()];
        let mut resp = vec![0.0; w.len()];
        let mut s = vec![0.0; m];
        let mut ll = 0.0;
        for r in self.points.chunks_exact(dim) {
            ll += log_mix(r, theta, w, dim, var, |k, p| resp[k] = p);
            for (k, &rk) in resp.iter().enumerate() {
                mass[k] += rk;
                for a in 0..dim {
                    s[k * dim + a] = rk * (r[a] - theta[k * dim + a]) / var;
                    em[k * dim + a] += rk * r[a];
                }
            }
            for i in 0..m {
                g[i] += s[i];
                for j in 0..m {
                    h[i * m + j] -= s[i] * s[j];
                }
            }
            for (k, &rk) in resp.iter().enumerate() {
                if rk == 0.0 {
                    continue;
                }
                for a in 0..dim {
                    let da = r[a] - theta[k * dim + a];
                    for c in 0..dim {
                        let dc = r[c] - theta[k * dim + c];
                        let kron = if a == c { 1.0 } else { 0.0 };
                        h[(k * dim + a) * m + k * dim + c] += rk * (da * dc / (var * var) - kron / var);
                    }
                }
            }
        }
        for (k, &mk) in mass.iter().enumerate() {
            for a in 0..dim {
                em[k * dim + a] = if mk > 0.0 { em[k * dim + a] / mk } else { theta[k * dim + a] };
            }
        }
        (ll, g, h, em)
    }
}

/// `ln Σ μ_k exp(−|r−x_k|²/2σ²)` from log-weights, with responsibilities
/// passed to `resp`.
#[inline]
fn log_mix(r: &[f64], theta: &[f64], log_w: &[f64], dim: usize, var: f64, mut resp: impl FnMut(usize, f64)) -> f64 {
    let k = log_w.len();
    let mut small = [0.0f64; 8];
    let mut large = Vec::new();
    let e: &mut [f64] = if k <= small.len() {
        &mut small[..k]
    } else {
        large.resize(k, 0.0);
        &mut large
    };
    let mut e_max = f64::NEG_INFINITY;
    for (j, slot) in e.iter_mut().enumerate() {
        let d2: f64 = (0..dim).map(|a| sq(r[a] - theta[j * dim + a])).sum();
        *slot = log_w[j] - 0.5 * d2 / var;
        e_max = e_max.max(*slot);
    }
    let mut total = 0.0;
    for slot in e.iter_mut() {
        *slot = libm::exp(*slot - e_max);
        total += *slot;
    }
    for (j, &v) in e.iter().enumerate() {
        resp(j, v / total);
    }
    e_max + libm::log(total)
}

/// Solves `A·x = b` for symmetric positive definite `A` by Cholesky;
/// `None` if `A` is not numerically positive definite.
fn cholesky_solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 1e-12 * a[i * n + i].abs()) {
                    return None;
                }
                l[i * n + i] = libm::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    Some(x)
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

struct Ascent {
    theta: Vec<f64>,
    ll: f64,
    converged: bool,
    iterations: usize,
}

fn ascend(lik: &Likelihood<'_>, start: Vec<f64>, settings: &OptimizerSettings) -> Ascent {
    let sigma = lik.model.sigma();
    let tol = settings.grad_tol * lik.count() as f64 / sigma;
    let mut theta = start;
    let (mut ll, mut g, mut h, mut em) = lik.derivatives(&theta);
    let mut stalled = 0;
    for it in 0..settings.max_iterations {
        if norm(&g) < tol {
            return Ascent { theta, ll, converged: true, iterations: it };
        }
        let previous = ll;
        let neg_h: Vec<f64> = h.iter().map(|x| -x).collect();
        let mut moved = false;
        if let Some(d) = cholesky_solve(&neg_h, &g) {
            let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            // Cap steps at a few σ.
            let mut alpha = 1.0f64.min(3.0 * sigma / norm(&d).max(f64::MIN_POSITIVE));
            for _ in 0..30 {
                let trial: Vec<f64> = theta.iter().zip(&d).map(|(t, s)| t + alpha * s).collect();
                if lik.value(&trial) >= ll + 1e-4 * alpha * slope {
                    theta = trial;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
        }
        if !moved && lik.value(&em) > ll {
            // EM never decreases ℓ.
            theta.clone_from(&em);
            moved = true;
        }
        if !moved {
            // No step improves ℓ at floating-point resolution.
            let converged = norm(&g) < 1e3 * tol;
            return Ascent { theta, ll, converged, iterations: it };
        }
        (ll, g, h, em) = lik.derivatives(&theta);
        stalled = if ll - previous <= 1e-13 * ll.abs() { stalled + 1 } else { 0 };
        if stalled >= 10 {
            return Ascent { converged: norm(&g) < tol, theta, ll, iterations: it + 1 };
        }
    }
    let converged = norm(&g) < tol;
    Ascent { theta, ll, converged, iterations: settings.max_iterations }
}

fn unit(rng: &mut dyn RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn standard_normal(rng: &mut dyn RngCore) -> f64 {
    let (u1, u2) = (unit(rng), unit(rng));
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Splits detections along their principal axis into consecutive groups
/// sized by the weights; group means in source order.
fn centroid_split(points: &[f64], dim: usize, weights: &[f64], reverse: bool) -> Vec<f64> {
    let n = points.len() / dim;
    let k = weights.len();
    let mut mean = [0.0; 2];
    for r in points.chunks_exact(dim) {
        for a in 0..dim {
            mean[a] += r[a] / n as f64;
        }
    }
    let axis = if dim == 1 {
        [1.0, 0.0]
    } else {
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for r in points.chunks_exact(2) {
            let (dx, dy) = (r[0] - mean[0], r[1] - mean[1]);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        let angle = 0.5 * libm::atan2(2.0 * sxy, sxx - syy);
        [libm::cos(angle), libm::sin(angle)]
    };
    let mut proj: Vec<(f64, usize)> = points
        .chunks_exact(dim)
        .enumerate()
        .map(|(i, r)| ((0..dim).map(|a| (r[a] - mean[a]) * axis[a]).sum(), i))
        .collect();
    proj.sort_by(|a, b| a.0.total_cmp(&b.0));
    if reverse {
        proj.reverse();
    }
    let mut out = vec![0.0; k * dim];
    let mut start = 0usize;
    let mut cum = 0.0;
    for s in 0..k {
        cum += weights[s];
        let end = if s + 1 == k { n } else { (libm::round(cum * n as f64) as usize).clamp(start, n) };
        let group = &proj[start..end];
        for a in 0..dim {
            out[s * dim + a] = if group.is_empty() {
                mean[a]
            } else {
                group.iter().map(|&(_, i)| points[i * dim + a]).sum::<f64>() / group.len() as f64
            };
        }
        start = end;
    }
    out
}

/// Method-of-moments start for two 1D sources with known weights, in both
/// orientations.
fn moment_starts(points: &[f64], weights: &[f64], sigma: f64) -> Vec<Vec<f64>> {
    let n = points.len() as f64;
    let mean = points.iter().sum::<f64>() / n;
    let var = points.iter().map(|x| sq(x - mean)).sum::<f64>() / n;
    let (m1, m2) = (weights[0], weights[1]);
    let prod = (m1 * m2).max(1e-12);
    let d = libm::sqrt((var - sigma * sigma).max(0.0) / prod);
    vec![vec![mean - m2 * d, mean + m1 * d], vec![mean + m2 * d, mean - m1 * d]]
}

/// Maximizes the cofluorescent log-likelihood over all positions from
/// several starts and keeps the best converged optimum.
pub fn mle_cofluorescent(
    detections: &[Detection],
    model: &SourceModel,
    settings: &OptimizerSettings,
    rng: &mut dyn RngCore,
) -> CoreResult<MleResult> {
    if detections.is_empty() {
        return Err(CoreError::Domain("no detections"));
    }
    if settings.starts == 0 {
        return Err(CoreError::Domain("at least one start is required"));
    }
    let dim = model.dim();
    let k = model.sources();
    let sigma = model.sigma();
    let lik = Likelihood::new(model, detections);
    let w = model.weights();

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(settings.starts);
    if dim == 1 && k == 2 {
        starts.extend(moment_starts(&lik.points, w, sigma));
    }
    starts.push(centroid_split(&lik.points, dim, w, false));
    starts.push(centroid_split(&lik.points, dim, w, true));
    starts.truncate(settings.starts);
    let base = centroid_split(&lik.points, dim, w, false);
    while starts.len() < settings.starts {
        let p: Vec<f64> = base.iter().map(|b| b + settings.perturbation * sigma * standard_normal(rng)).collect();
        starts.push(p);
    }

    let mut best: Option<Ascent> = None;
    let mut fallback: Option<Ascent> = None;
    let mut converged_starts = 0;
    let mut iterations = 0;
    for start in starts {
        let a = ascend(&lik, start, settings);
        iterations += a.iterations;
        let slot = if a.converged {
            converged_starts += 1;
            &mut best
        } else {
            &mut fallback
        };
        if slot.as_ref().is_none_or(|b| a.ll > b.ll) {
            *slot = Some(a);
        }
    }
    let (a, converged) = match (best, fallback) {
        (Some(b), _) => (b, true),
        (None, Some(f)) => (f, false),
        (None, None) => unreachable!("at least one start"),
    };
    Ok(MleResult { theta: a.theta, log_likelihood: a.ll, converged, iterations, converged_starts })
}

/// Relabels sources by the permutation minimizing squared error to `truth`.
/// Used when equal weights make labels exchangeable.
pub fn align_to_truth(estimate: &[f64], truth: &[f64], dim: usize) -> Vec<f64> {
    let k = truth.len() / dim;
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best_perm = perm.clone();
    let mut best = f64::INFINITY;
    let cost = |p: &[usize]| -> f64 {
        (0..k).map(|s| (0..dim).map(|a| sq(estimate[p[s] * dim + a] - truth[s * dim + a])).sum::<f64>()).sum()
    };
    // Heap's algorithm over all permutations; K is small.
    let mut c = vec![0usize; k];
    let e = cost(&perm);
    if e < best {
        best = e;
        best_perm.clone_from(&perm);
    }
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let e = cost(&perm);
            if e < best {
                best = e;
                best_perm.clone_from(&perm);
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let mut out = vec![0.0; estimate.len()];
    for s in 0..k {
        for a in 0..dim {
            out[s * dim + a] = estimate[best_perm[s] * dim + a];
        }
    }
    out
}

/// Sample covariance of `rows` about `center` (divisor = row count).
pub fn covariance_about(rows: &[Vec<f64>], center: &[f64]) -> CoreResult<SymMatrix> {
    let m = center.len();
    if rows.is_empty() {
        return Err(CoreError::Domain("no rows"));
    }
    let mut c = SymMatrix::zeros(generic_labels(m));
    for r in rows {
        if r.len() != m {
            return Err(CoreError::DimensionMismatch { expected: m, found: r.len() });
        }
        for i in 0..m {
            for j in i..m {
                c.set(i, j, c.get(i, j) + (r[i] - center[i]) * (r[j] - center[j]));
            }
        }
    }
    Ok(c.scaled(1.0 / rows.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn det(x: f64, w: Window) -> Detection {
        Detection { coords: [x, 0.0], window: w }
    }

    #[test]
    fn blinking_means_and_empty_window() {
        let m = SourceModel::two_source_1d(2.0, 0.0, 1.0, 4).unwrap();
        let d = [det(1.5, Window::Source(0)), det(1.5, Window::Source(0)), det(3.0, Window::Source(0))];
        let e = mle_blinking(&d, &m).unwrap();
        assert_eq!(e.theta[0], 2.0);
        assert!(e.theta[1].is_nan());
        assert_eq!(e.unestimable, [1]);
        assert!(mle_blinking(&[det(0.0, Window::Mixed)], &m).is_err());
    }

    #[test]
    fn single_source_is_sample_mean() {
        let m = SourceModel::new(1, &[&[0.0]], &[1.0], 1.0, 5).unwrap();
        let xs = [0.3, -1.2, 0.9, 2.2, -0.4];
        let d: Vec<_> = xs.iter().map(|&x| det(x, Window::Mixed)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = mle_cofluorescent(&d, &m, &OptimizerSettings::default(), &mut rng).unwrap();
        assert!(r.converged);
        assert!((r.theta[0] - 0.36).abs() < 1e-9);
    }

    #[test]
    fn likelihood_symmetric_under_swap_at_equal_weights() {
        let m = SourceModel::two_source_1d(2.0, 0.0, 1.0, 3).unwrap();
        let d = [det(0.3, Window::Mixed), det(-1.0, Window::Mixed), det(2.0, Window::Mixed)];
        let lik = Likelihood::new(&m, &d);
        assert_eq!(lik.value(&[-0.7, 1.1]), lik.value(&[1.1, -0.7]));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = SourceModel::two_source_1d(2.0, 0.3, 1.0, 3).unwrap();
        let d = [det(0.3, Window::Mixed), det(-1.0, Window::Mixed), det(2.0, Window::Mixed)];
        let lik = Likelihood::new(&m, &d);
        let t = [-0.8, 1.2];
        let (_, g, h, em) = lik.derivatives(&t);
        assert!(lik.value(&em) >= lik.value(&t));
        let eps = 1e-5;
        for i in 0..2 {
            let mut p = t;
            let mut q = t;
            p[i] += eps;
            q[i] -= eps;
            let fd = (lik.value(&p) - lik.value(&q)) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-7);
            let (_, gp, _, _) = lik.derivatives(&p);
            let (_, gq, _, _) = lik.derivatives(&q);
            for j in 0..2 {
                let fd2 = (gp[j] - gq[j]) / (2.0 * eps);
                assert!((fd2 - h[j * 2 + i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn alignment_picks_best_permutation() {
        assert_eq!(align_to_truth(&[1.0, -1.0], &[-1.0, 1.0], 1), [-1.0, 1.0]);
        let est = [3.0, 3.0, 0.0, 0.1, -2.0, 1.0];
        let truth = [0.0, 0.0, -2.0, 1.0, 3.0, 3.0];
        assert_eq!(align_to_truth(&est, &truth, 2), [0.0, 0.1, -2.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky_solve(&[1.0, 2.0, 2.0, 1.0], &[1.0, 1.0]).is_none());
        let x = cholesky_solve(&[4.0, 2.0, 2.0, 3.0], &[2.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
    }
}

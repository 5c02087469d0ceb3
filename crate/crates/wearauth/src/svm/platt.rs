//! Platt scaling: a sigmoid over decision values fitted by regularized
//! maximum likelihood, giving posterior probabilities for margin classifiers.

use serde::{Deserialize, Serialize};

use super::SvmError;

/// Fitted sigmoid: `P(genuine | f) = 1 / (1 + exp(a * f + b))`.
///
/// `a` is negative whenever larger decision values mean "more genuine".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScale {
    pub a: f64,
    pub b: f64,
}

impl PlattScale {
    pub fn probability(&self, decision: f64) -> f64 {
        sigmoid(self.a * decision + self.b)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Fit the sigmoid on decision values and labels by Newton's method.
///
/// Targets use Platt's smoothing `(N+ + 1)/(N+ + 2)` and `1/(N- + 2)`, which
/// keeps the likelihood bounded even for perfectly separated inputs. The
/// iteration stops when the gradient norm drops below 1e-8.
///
/// Decision values are standardized internally (kernel sums can reach 1e4
/// and make the Hessian nearly singular); the returned pair is mapped back
/// to the raw-value parametrization.
pub fn fit_platt(decision_values: &[f64], labels: &[bool]) -> Result<PlattScale, SvmError> {
    assert_eq!(decision_values.len(), labels.len());
    if decision_values.is_empty() {
        return Err(SvmError::SingleClass);
    }
    let n = decision_values.len() as f64;
    let location = decision_values.iter().sum::<f64>() / n;
    let spread = (decision_values
        .iter()
        .map(|f| (f - location) * (f - location))
        .sum::<f64>()
        / n)
        .sqrt();
    let scale = if spread > 0.0 { spread } else { 1.0 };
    let standardized: Vec<f64> = decision_values.iter().map(|f| (f - location) / scale).collect();
    let fitted = fit_platt_raw(&standardized, labels)?;
    Ok(PlattScale {
        a: fitted.a / scale,
        b: fitted.b - fitted.a * location / scale,
    })
}

fn fit_platt_raw(decision_values: &[f64], labels: &[bool]) -> Result<PlattScale, SvmError> {
    let n_pos = labels.iter().filter(|l| **l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(SvmError::SingleClass);
    }
    let n = labels.len() as f64;

    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels.iter().map(|l| if *l { hi } else { lo }).collect();

    // Mean negative log-likelihood; the mean form keeps Newton decrements
    // above f64 resolution regardless of the sample count.
    let nll = |a: f64, b: f64| -> f64 {
        decision_values
            .iter()
            .zip(&targets)
            .map(|(f, t)| {
                let z = a * f + b;
                if z >= 0.0 {
                    t * z + (1.0 + (-z).exp()).ln()
                } else {
                    (t - 1.0) * z + (1.0 + z.exp()).ln()
                }
            })
            .sum::<f64>()
            / n
    };

    let sigma = 1e-12;
    let mut a = 0.0f64;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut fval = nll(a, b);

    for _ in 0..200 {
        let (mut h11, mut h22) = (sigma, sigma);
        let (mut h21, mut g1, mut g2) = (0.0f64, 0.0f64, 0.0f64);
        for (f, t) in decision_values.iter().zip(&targets) {
            let z = a * f + b;
            let p = sigmoid(z);
            let q = 1.0 - p;
            let d2 = p * q / n;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = (t - p) / n;
            g1 += f * d1;
            g2 += d1;
        }

        if (g1 * g1 + g2 * g2).sqrt() < 1e-8 {
            return Ok(PlattScale { a, b });
        }

        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0f64;
        loop {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = nll(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
            if step < 1e-10 {
                return Err(SvmError::NoConvergence { iterations: 0 });
            }
        }
    }
    Err(SvmError::NoConvergence { iterations: 200 })
}

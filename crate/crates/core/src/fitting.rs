//! Zero-mean Student's t and Gaussian fits to return samples, and
//! exponential-decay fits to autocorrelation curves.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::measures::{histogram, AcfCurve, ReturnSeries};
use crate::optim::{bfgs, nelder_mead};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    StudentT,
    Gaussian,
    ExpDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MaximumLikelihood,
    BinnedLeastSquares,
    LogLinearLeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub model: Model,
    pub method: Method,
    pub params: BTreeMap<String, f64>,
    pub std_errors: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_sum: Option<f64>,
    pub n_samples: usize,
    pub excluded: usize,
}

impl FitReport {
    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn std_error(&self, name: &str) -> f64 {
        self.std_errors.get(name).copied().unwrap_or(f64::NAN)
    }
}

fn named(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_owned(), v)).collect()
}

pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "Beta function needs positive arguments, got ({a}, {b})"
        )));
    }
    Ok(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

pub fn beta_function(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

/// Trigamma via upward recurrence to `x >= 10` and the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x
        + x2 / 2.0
        + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 * (1.0 / 30.0 - x2 * 5.0 / 66.0))))
}

fn check_scale(nu: f64, sigma: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {nu}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive, got {sigma}")));
    }
    Ok(())
}

fn student_t_log_norm(nu: f64, sigma: f64) -> f64 {
    -0.5 * (nu * sigma * sigma).ln() - (ln_gamma(nu / 2.0) + ln_gamma(0.5) - ln_gamma((nu + 1.0) / 2.0))
}

/// Zero-mean Student's t density with `nu` degrees of freedom and scale `sigma`.
pub fn student_t_pdf(r: f64, nu: f64, sigma: f64) -> Result<f64> {
    check_scale(nu, sigma)?;
    let z = r * r / (nu * sigma * sigma);
    Ok((student_t_log_norm(nu, sigma) - 0.5 * (nu + 1.0) * z.ln_1p()).exp())
}

pub fn gaussian_pdf(r: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "standard deviation must be positive, got {sigma}"
        )));
    }
    Ok((-0.5 * (r / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt()))
}

/// Total log-likelihood of a zero-mean Student's t sample.
pub fn student_t_log_likelihood(values: &[f64], nu: f64, sigma: f64) -> f64 {
    let c = student_t_log_norm(nu, sigma);
    let s2 = nu * sigma * sigma;
    values.iter().map(|r| c - 0.5 * (nu + 1.0) * (r * r / s2).ln_1p()).sum()
}

/// Analytic score `(d/d nu, d/d sigma)` of the total log-likelihood.
pub fn student_t_score(values: &[f64], nu: f64, sigma: f64) -> [f64; 2] {
    let s2 = nu * sigma * sigma;
    let per_nu = -0.5 / nu - 0.5 * digamma(nu / 2.0) + 0.5 * digamma((nu + 1.0) / 2.0);
    let (mut g_nu, mut g_sigma) = (0.0, 0.0);
    for r in values {
        let z = r * r / s2;
        let w = z / (1.0 + z);
        g_nu += per_nu - 0.5 * z.ln_1p() + 0.5 * (nu + 1.0) * w / nu;
        g_sigma += -1.0 / sigma + (nu + 1.0) * w / sigma;
    }
    [g_nu, g_sigma]
}

/// Analytic Hessian of the total log-likelihood in `(nu, sigma)`.
pub fn student_t_hessian(values: &[f64], nu: f64, sigma: f64) -> [[f64; 2]; 2] {
    let s2 = nu * sigma * sigma;
    let per_nu = 0.5 / (nu * nu) - 0.25 * trigamma(nu / 2.0) + 0.25 * trigamma((nu + 1.0) / 2.0);
    let (mut hnn, mut hns, mut hss) = (0.0, 0.0, 0.0);
    for r in values {
        let z = r * r / s2;
        let u = 1.0 + z;
        let w = z / u;
        hnn += per_nu + w / (2.0 * nu) - w / (2.0 * nu * nu) - (nu + 1.0) * z / (2.0 * nu * nu * u * u);
        hns += w / sigma - (nu + 1.0) * z / (nu * sigma * u * u);
        hss += 1.0 / (sigma * sigma) - (nu + 1.0) * (w + 2.0 * z / (u * u)) / (sigma * sigma);
    }
    [[hnn, hns], [hns, hss]]
}

fn sample_moments(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let m2 = values.iter().map(|r| r * r).sum::<f64>() / t;
    let m4 = values.iter().map(|r| r.powi(4)).sum::<f64>() / t;
    (m2, m4 / (m2 * m2))
}

/// Moment-matched start: `nu0 = max(4.5, 6 / (K - 3) + 4)` and
/// `sigma0^2 = var (nu0 - 2) / nu0`, both about zero.
fn moment_start(values: &[f64]) -> (f64, f64) {
    let (m2, k) = sample_moments(values);
    let nu0 = if k > 3.0 {
        (6.0 / (k - 3.0) + 4.0).max(4.5)
    } else {
        30.0
    };
    (nu0, (m2 * (nu0 - 2.0) / nu0).sqrt())
}

const MAX_LOG_NU: f64 = 13.815_510_557_964_274; // ln 1e6

fn check_sample(r: &ReturnSeries, needed: usize) -> Result<()> {
    if r.len() < needed {
        return Err(Error::TooShort { needed, got: r.len() });
    }
    if !r.values.iter().all(|v| v.is_finite()) {
        return Err(Error::Degenerate("non-finite return".into()));
    }
    if !r.values.iter().any(|&v| v != 0.0) {
        return Err(Error::Degenerate("all returns are zero".into()));
    }
    Ok(())
}

/// Maximum-likelihood zero-mean Student's t fit.
///
/// Quasi-Newton search in `(ln nu, ln sigma)` on the mean log-likelihood from
/// several starts; standard errors come from the observed information.
pub fn fit_student_t(r: &ReturnSeries) -> Result<FitReport> {
    const GTOL: f64 = 1e-8;
    check_sample(r, 50)?;
    let values = &r.values;
    let t = values.len() as f64;

    let objective = |x: [f64; 2]| {
        if x[0] > MAX_LOG_NU + 1.0 || x[0] < -10.0 {
            return (f64::INFINITY, [0.0, 0.0]);
        }
        let (nu, sigma) = (x[0].exp(), x[1].exp());
        let ll = student_t_log_likelihood(values, nu, sigma) / t;
        let g = student_t_score(values, nu, sigma);
        (-ll, [-g[0] * nu / t, -g[1] * sigma / t])
    };

    let (nu0, sigma0) = moment_start(values);
    let starts = [(nu0, sigma0), (3.0, sigma0 * 0.8), (15.0, sigma0 * 1.1)];
    let mut best = starts
        .iter()
        .map(|&(nu, s)| bfgs(objective, [nu.ln(), s.ln()], 1e-6, 200))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("non-empty starts");
    if best.grad_norm >= GTOL && best.x[0] <= MAX_LOG_NU {
        // Near the optimum the mean log-likelihood is flat to rounding and
        // line searches stall; Newton steps on the analytic Hessian do not
        // need a decrease in value.
        let (x, grad_norm) = newton_polish(values, best.x, GTOL);
        best.x = x;
        best.value = objective(x).0;
        best.grad_norm = grad_norm;
        best.converged = grad_norm < GTOL;
    }

    if best.x[0] > MAX_LOG_NU {
        return Err(Error::NonConvergence(format!(
            "degrees of freedom diverge (nu > {:.0e}); the sample looks Gaussian",
            MAX_LOG_NU.exp()
        )));
    }
    if !best.converged {
        return Err(Error::NonConvergence(format!(
            "gradient norm {:.3e} after {} iterations",
            best.grad_norm, best.iterations
        )));
    }

    let (nu, sigma) = (best.x[0].exp(), best.x[1].exp());
    let h = student_t_hessian(values, nu, sigma);
    // Observed information is -H; invert the 2x2.
    let (a, b, d) = (-h[0][0], -h[0][1], -h[1][1]);
    let det = a * d - b * b;
    let (se_nu, se_sigma) = if det > 0.0 && a > 0.0 {
        ((d / det).sqrt(), (a / det).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(FitReport {
        model: Model::StudentT,
        method: Method::MaximumLikelihood,
        params: named(&[("nu", nu), ("sigma", sigma)]),
        std_errors: named(&[("nu", se_nu), ("sigma", se_sigma)]),
        log_likelihood: Some(-best.value * t),
        residual_sum: None,
        n_samples: values.len(),
        excluded: 0,
    })
}

/// Newton iterations on the mean log-likelihood in `(ln nu, ln sigma)`,
/// kept only while they shrink the gradient.
fn newton_polish(values: &[f64], mut x: [f64; 2], gtol: f64) -> ([f64; 2], f64) {
    let t = values.len() as f64;
    let log_grad = |x: [f64; 2]| {
        let (nu, sigma) = (x[0].exp(), x[1].exp());
        let g = student_t_score(values, nu, sigma);
        [g[0] * nu / t, g[1] * sigma / t]
    };
    let mut g = log_grad(x);
    let mut gn = g[0].hypot(g[1]);
    for _ in 0..30 {
        if gn < gtol {
            break;
        }
        let (nu, sigma) = (x[0].exp(), x[1].exp());
        let h = student_t_hessian(values, nu, sigma);
        // Chain rule into log coordinates.
        let haa = (nu * nu * h[0][0]) / t + g[0];
        let hab = nu * sigma * h[0][1] / t;
        let hbb = (sigma * sigma * h[1][1]) / t + g[1];
        let det = haa * hbb - hab * hab;
        if !(det > 0.0 && haa < 0.0) {
            break;
        }
        let step = [(hbb * g[0] - hab * g[1]) / det, (haa * g[1] - hab * g[0]) / det];
        let xn = [x[0] - step[0], x[1] - step[1]];
        let gnew = log_grad(xn);
        let gnew_norm = gnew[0].hypot(gnew[1]);
        if !(gnew_norm < gn) {
            break;
        }
        x = xn;
        g = gnew;
        gn = gnew_norm;
    }
    (x, gn)
}

/// Least-squares fit of the Student's t density to a normalised histogram
/// of the sample, for comparison with the likelihood fit.
pub fn fit_student_t_binned(r: &ReturnSeries, bins: usize) -> Result<FitReport> {
    check_sample(r, 50)?;
    let hist = histogram(&r.values, bins)?;
    let points: Vec<(f64, f64)> = hist.centres().zip(hist.densities.iter().copied()).collect();
    let sse = |x: [f64; 2]| {
        if x[0] > MAX_LOG_NU + 1.0 || x[0] < -10.0 {
            return f64::INFINITY;
        }
        let (nu, sigma) = (x[0].exp(), x[1].exp());
        points
            .iter()
            .map(|&(c, d)| {
                let s = student_t_pdf(c, nu, sigma).unwrap_or(f64::NAN);
                (s - d) * (s - d)
            })
            .sum::<f64>()
    };
    let (nu0, sigma0) = moment_start(&r.values);
    let m = nelder_mead(sse, [nu0.ln(), sigma0.ln()], 0.3, 1e-14, 5000);
    if !m.converged || m.x[0] > MAX_LOG_NU {
        return Err(Error::NonConvergence("binned Student's t fit did not settle".into()));
    }
    Ok(FitReport {
        model: Model::StudentT,
        method: Method::BinnedLeastSquares,
        params: named(&[("nu", m.x[0].exp()), ("sigma", m.x[1].exp())]),
        std_errors: BTreeMap::new(),
        log_likelihood: None,
        residual_sum: Some(m.value),
        n_samples: r.len(),
        excluded: 0,
    })
}

/// Zero-mean Gaussian MLE: `sigma^2 = mean(r^2)`, standard error
/// `sigma / sqrt(2T)`.
pub fn fit_gaussian(r: &ReturnSeries) -> Result<FitReport> {
    check_sample(r, 2)?;
    let t = r.len() as f64;
    let m2 = r.values.iter().map(|v| v * v).sum::<f64>() / t;
    let sigma = m2.sqrt();
    let log_likelihood = -0.5 * t * ((2.0 * PI * m2).ln() + 1.0);
    Ok(FitReport {
        model: Model::Gaussian,
        method: Method::MaximumLikelihood,
        params: named(&[("sigma", sigma)]),
        std_errors: named(&[("sigma", sigma / (2.0 * t).sqrt())]),
        log_likelihood: Some(log_likelihood),
        residual_sum: None,
        n_samples: r.len(),
        excluded: 0,
    })
}

/// Fits `A(tau) = a exp(-tau / t0)` by ordinary least squares of `ln A`
/// against `tau` over the positive points with `tau >= 1`.
pub fn fit_exp_decay(acf: &AcfCurve) -> Result<FitReport> {
    let mut excluded = 0;
    let mut pts = Vec::with_capacity(acf.lags.len());
    for (&lag, &a) in acf.lags.iter().zip(&acf.values) {
        if lag == 0 {
            continue;
        }
        if a > 0.0 {
            pts.push((lag as f64, a.ln()));
        } else {
            excluded += 1;
        }
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientPositive {
            needed: 3,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se_slope = (ssr / (n - 2.0) / sxx).sqrt();
    let se_intercept = (ssr / (n - 2.0) * (1.0 / n + mx * mx / sxx)).sqrt();
    let decay_rate = -slope;
    if decay_rate < 0.0 {
        return Err(Error::Degenerate(format!(
            "autocorrelation grows with lag (slope {slope:.3e})"
        )));
    }
    Ok(FitReport {
        model: Model::ExpDecay,
        method: Method::LogLinearLeastSquares,
        params: named(&[("decay_rate", decay_rate), ("log_amplitude", intercept)]),
        std_errors: named(&[("decay_rate", se_slope), ("log_amplitude", se_intercept)]),
        log_likelihood: None,
        residual_sum: Some(ssr),
        n_samples: pts.len(),
        excluded,
    })
}

/// Folded density `2 S(|r|)` for plotting against absolute-return histograms.
pub fn folded_student_t_pdf(abs_r: f64, nu: f64, sigma: f64) -> Result<f64> {
    student_t_pdf(abs_r, nu, sigma).map(|d| 2.0 * d)
}

pub fn folded_gaussian_pdf(abs_r: f64, sigma: f64) -> Result<f64> {
    gaussian_pdf(abs_r, sigma).map(|d| 2.0 * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Source;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StudentT};

    fn t_sample(nu: f64, sigma: f64, n: usize, seed: u64) -> ReturnSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = StudentT::new(nu).unwrap();
        ReturnSeries::new((0..n).map(|_| sigma * d.sample(&mut rng)).collect(), Source::Simulation)
    }

    #[test]
    fn beta_examples() {
        assert!((beta_function(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((beta_function(0.5, 0.5).unwrap() - PI).abs() < 1e-12);
        assert!((beta_function(2.0, 3.0).unwrap() - 1.0 / 12.0).abs() < 1e-14);
        assert!(beta_function(0.0, 1.0).is_err());
        assert!(beta_function(1.0, -2.0).is_err());
    }

    #[test]
    fn trigamma_reference_values() {
        // psi'(1) = pi^2 / 6, psi'(1/2) = pi^2 / 2
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-11);
        // Recurrence psi'(x + 1) = psi'(x) - 1 / x^2
        for x in [0.3, 2.7, 11.0, 120.0] {
            assert!((trigamma(x + 1.0) - trigamma(x) + 1.0 / (x * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn student_t_pdf_examples() {
        assert!((student_t_pdf(0.0, 1.0, 1.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        for r in [0.1, 1.0, 3.3, 40.0] {
            assert_eq!(
                student_t_pdf(r, 4.0, 0.7).unwrap(),
                student_t_pdf(-r, 4.0, 0.7).unwrap()
            );
        }
        // Gamma(50.5) / (Gamma(50) Gamma(1/2) sqrt(100)), independent closed form
        let direct = (ln_gamma(50.5) - ln_gamma(50.0)).exp() / (PI * 100.0).sqrt();
        let v = student_t_pdf(0.0, 100.0, 1.0).unwrap();
        assert!((v - direct).abs() < 1e-13);
        // mpmath, 30 digits: 0.397946186935893807...
        assert!((v - 0.397_946_186_935_893_8).abs() < 1e-13);
        assert!(student_t_pdf(0.0, 0.0, 1.0).is_err());
        assert!(student_t_pdf(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_pdf_examples() {
        assert!((gaussian_pdf(0.0, 1.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((gaussian_pdf(1.0, 1.0).unwrap() - (-0.5f64).exp() / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert_eq!(gaussian_pdf(1.3, 2.0).unwrap(), gaussian_pdf(-1.3, 2.0).unwrap());
        assert!(gaussian_pdf(0.0, 0.0).is_err());
    }

    #[test]
    fn student_t_tends_to_gaussian() {
        let sup = (-400..=400)
            .map(|i| i as f64 * 0.02)
            .map(|r| (student_t_pdf(r, 1e4, 1.3).unwrap() - gaussian_pdf(r, 1.3).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-3, "{sup}");
    }

    #[test]
    fn hessian_matches_finite_differences_of_score() {
        let r = t_sample(4.0, 0.5, 2000, 3);
        let (nu, sigma) = (3.7, 0.52);
        let h = student_t_hessian(&r.values, nu, sigma);
        let eps = 1e-5;
        let dn = |d: f64| student_t_score(&r.values, nu + d, sigma);
        let ds = |d: f64| student_t_score(&r.values, nu, sigma + d);
        let fd_nn = (dn(eps)[0] - dn(-eps)[0]) / (2.0 * eps);
        let fd_ns = (ds(eps)[0] - ds(-eps)[0]) / (2.0 * eps);
        let fd_ss = (ds(eps)[1] - ds(-eps)[1]) / (2.0 * eps);
        for (a, b) in [(h[0][0], fd_nn), (h[0][1], fd_ns), (h[1][1], fd_ss)] {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn recovers_student_t_parameters() {
        let r = t_sample(5.0, 0.8, 100_000, 11);
        let fit = fit_student_t(&r).unwrap();
        let (nu, sigma) = (fit.param("nu"), fit.param("sigma"));
        assert!((4.5..=5.5).contains(&nu), "nu {nu}");
        assert!((0.78..=0.82).contains(&sigma), "sigma {sigma}");
        assert!(fit.std_error("nu") > 0.0 && fit.std_error("sigma") > 0.0);
        let g = student_t_score(&r.values, nu, sigma);
        let t = r.len() as f64;
        assert!((g[0] * nu / t).hypot(g[1] * sigma / t) < 1e-8);
    }

    #[test]
    fn student_t_fit_is_scale_equivariant() {
        let r = t_sample(3.0, 1.0, 5000, 5);
        let base = fit_student_t(&r).unwrap();
        for c in [0.01, -3.0, 250.0] {
            let fit = fit_student_t(&r.scaled(c)).unwrap();
            assert!((fit.param("nu") / base.param("nu") - 1.0).abs() < 1e-6);
            assert!((fit.param("sigma") / (base.param("sigma") * c.abs()) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn student_t_fit_rejects_bad_input() {
        let short = ReturnSeries::new(vec![0.1; 10], Source::Simulation);
        assert!(matches!(fit_student_t(&short), Err(Error::TooShort { .. })));
        let zeros = ReturnSeries::new(vec![0.0; 100], Source::Simulation);
        assert!(matches!(fit_student_t(&zeros), Err(Error::Degenerate(_))));
    }

    #[test]
    fn binned_fit_lands_near_truth() {
        let r = t_sample(5.0, 0.8, 100_000, 12);
        let fit = fit_student_t_binned(&r, 101).unwrap();
        assert!((fit.param("sigma") - 0.8).abs() < 0.08, "{fit:?}");
    }

    #[test]
    fn gaussian_fit_examples() {
        let fit = fit_gaussian(&ReturnSeries::new(vec![-1.0, 1.0], Source::Simulation)).unwrap();
        assert_eq!(fit.param("sigma"), 1.0);
        assert!((fit.std_error("sigma") - 0.5).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = Normal::new(0.0, 0.25).unwrap();
        let r = ReturnSeries::new((0..1_000_000).map(|_| d.sample(&mut rng)).collect(), Source::Simulation);
        let fit = fit_gaussian(&r).unwrap();
        let rms = (r.values.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt();
        assert_eq!(fit.param("sigma"), rms);
        assert!((0.2495..=0.2505).contains(&rms));
        assert!(fit_gaussian(&ReturnSeries::new(vec![0.0, 0.0], Source::Simulation)).is_err());
    }

    #[test]
    fn exp_decay_exact_curve() {
        let lags: Vec<usize> = (1..=100).collect();
        let values = lags.iter().map(|&l| (-(l as f64) / 1000.0).exp()).collect();
        let fit = fit_exp_decay(&AcfCurve { lags, values }).unwrap();
        assert!((fit.param("decay_rate") - 1e-3).abs() < 1e-15);
        assert!(fit.residual_sum.unwrap() < 1e-25);
        assert_eq!(fit.excluded, 0);
    }

    #[test]
    fn exp_decay_excludes_nonpositive() {
        let curve = AcfCurve {
            lags: vec![0, 1, 2, 3, 4, 5],
            values: vec![1.0, 0.5, -0.1, 0.25, 0.0, 0.125],
        };
        let fit = fit_exp_decay(&curve).unwrap();
        assert_eq!(fit.excluded, 2);
        assert_eq!(fit.n_samples, 3);
        let sparse = AcfCurve {
            lags: vec![1, 2, 3],
            values: vec![0.5, -0.2, 0.1],
        };
        assert!(matches!(
            fit_exp_decay(&sparse),
            Err(Error::InsufficientPositive { got: 2, .. })
        ));
    }
}

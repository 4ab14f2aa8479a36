//! Derivative-free minimizers: a Nelder–Mead simplex for the distribution
//! fits and a golden-section search for one-dimensional cost curves.

/// Simplex settings. Defaults follow the usual reflection/expansion/
/// contraction/shrink coefficients.
#[derive(Debug, Clone)]
pub struct NelderMeadConfig {
    pub max_iterations: usize,
    /// Stop once the largest vertex distance from the best vertex drops below this.
    pub diameter_tol: f64,
    pub initial_step: f64,
    /// Number of re-starts from the previous optimum with a fresh simplex.
    pub restarts: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    pub sigma: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            diameter_tol: 1e-8,
            initial_step: 0.1,
            restarts: 2,
            alpha: 1.0,
            gamma: 2.0,
            rho: 0.5,
            sigma: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn diameter(simplex: &[Vec<f64>], best: usize) -> f64 {
    simplex
        .iter()
        .map(|v| {
            v.iter()
                .zip(&simplex[best])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn nelder_mead_once<F>(f: &F, start: &[f64], cfg: &NelderMeadConfig) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        let step = if v[i].abs() > 1e-12 {
            cfg.initial_step * v[i].abs()
        } else {
            cfg.initial_step
        };
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut order: Vec<usize> = (0..=n).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        if diameter(&simplex, best) < cfg.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &idx in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = along(-cfg.alpha);
        let fr = eval(&reflected);
        if fr < values[best] {
            let expanded = along(-cfg.alpha * cfg.gamma);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[worst] {
            let c = along(-cfg.alpha * cfg.rho);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = along(cfg.rho);
            let fc = eval(&c);
            (c, fc)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let anchor = simplex[best].clone();
        for idx in 0..=n {
            if idx == best {
                continue;
            }
            for (x, a) in simplex[idx].iter_mut().zip(&anchor) {
                *x = a + cfg.sigma * (*x - a);
            }
            values[idx] = eval(&simplex[idx]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        point: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Minimize `f` from each starting point, restarting every run from its own
/// optimum `cfg.restarts` times, and keep the overall best.
pub fn nelder_mead<F>(f: F, starts: &[Vec<f64>], cfg: &NelderMeadConfig) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let mut best: Option<Minimum> = None;
    for start in starts {
        let mut run = nelder_mead_once(&f, start, cfg);
        let mut total = run.iterations;
        for _ in 0..cfg.restarts {
            let next = nelder_mead_once(&f, &run.point, cfg);
            total += next.iterations;
            let improved = next.value < run.value;
            if improved || next.value == run.value {
                run = next;
            }
            if !improved {
                break;
            }
        }
        run.iterations = total;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    best.expect("at least one starting point")
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`,
/// stopping when the bracket is narrower than `tol`.
pub fn golden_section<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if hi - lo <= tol {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[vec![-1.2, 1.0]], &NelderMeadConfig::default());
        assert!((m.point[0] - 1.0).abs() < 1e-6, "{:?}", m);
        assert!((m.point[1] - 1.0).abs() < 1e-6, "{:?}", m);
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 0.3).powi(2) + x[1].powi(2)
            }
        };
        let m = nelder_mead(f, &[vec![0.05, 0.5]], &NelderMeadConfig::default());
        assert!((m.point[0] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn golden_quadratic() {
        let x = golden_section(|x| (x - 0.64).powi(2), 0.0, 20.0, 1e-10);
        assert!((x - 0.64).abs() < 1e-9);
    }
}

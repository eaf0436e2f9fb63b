//! Derivative-free Nelder–Mead simplex maximizer.

use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Relative perturbation for nonzero starting coordinates.
    pub nonzero_delta: f64,
    /// Absolute perturbation for zero starting coordinates.
    pub zero_delta: f64,
    pub f_tol: f64,
    pub x_tol: f64,
    /// Defaults to `400·dim` when `None`.
    pub max_iterations: Option<usize>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            nonzero_delta: 0.05,
            zero_delta: 0.00025,
            f_tol: 1e-10,
            x_tol: 1e-10,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOutcome {
    pub x: DVector<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when the iteration cap was hit.
    pub converged: bool,
}

/// Maximizes `f` from `x0`. `f` must be total; the best vertex is never worse
/// than `f(x0)`.
pub fn nelder_mead_maximize<F>(
    mut f: F,
    x0: &DVector<f64>,
    opts: &NelderMeadOptions,
) -> NelderMeadOutcome
where
    F: FnMut(&DVector<f64>) -> f64,
{
    let dim = x0.len();
    let max_iter = opts.max_iterations.unwrap_or(400 * dim.max(1));
    let mut evaluations = 0usize;
    // Internally minimize g = −f.
    let mut g = |x: &DVector<f64>| {
        evaluations += 1;
        let v = -f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<DVector<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.clone());
    for k in 0..dim {
        let mut p = x0.clone();
        if p[k] != 0.0 {
            p[k] *= 1.0 + opts.nonzero_delta;
        } else {
            p[k] = opts.zero_delta;
        }
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(&mut g).collect();

    let finish =
        |simplex: Vec<DVector<f64>>, values: Vec<f64>, it: usize, ev: usize, conv: bool| {
            let best = (0..values.len())
                .min_by(|&a, &b| values[a].total_cmp(&values[b]))
                .unwrap_or(0);
            NelderMeadOutcome {
                x: simplex[best].clone(),
                f: -values[best],
                iterations: it,
                evaluations: ev,
                converged: conv,
            }
        };

    // A perfectly flat start gives no search direction.
    if dim == 0 || values.iter().all(|v| v.to_bits() == values[0].to_bits()) {
        let ev = dim + 1;
        return NelderMeadOutcome {
            x: x0.clone(),
            f: -values[0],
            iterations: 0,
            evaluations: ev,
            converged: true,
        };
    }

    let mut order: Vec<usize> = (0..=dim).collect();
    let mut iterations = 0usize;
    let mut converged = false;
    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let simplex_sorted: Vec<DVector<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let values_sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = simplex_sorted;
        values = values_sorted;
        order = (0..=dim).collect();

        let f_spread = values[1..]
            .iter()
            .map(|v| (v - values[0]).abs())
            .fold(0.0, f64::max);
        let x_spread = simplex[1..]
            .iter()
            .map(|p| (p - &simplex[0]).amax())
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let worst = dim;
        let centroid = simplex[..dim]
            .iter()
            .fold(DVector::zeros(dim), |acc, p| acc + p)
            / dim as f64;
        let xr = &centroid + (&centroid - &simplex[worst]) * opts.reflection;
        let fr = g(&xr);

        if fr < values[0] {
            let xe = &centroid + (&xr - &centroid) * opts.expansion;
            let fe = g(&xe);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let shrink_needed = if fr < values[worst] {
            let xc = &centroid + (&xr - &centroid) * opts.contraction;
            let fc = g(&xc);
            if fc <= fr {
                simplex[worst] = xc;
                values[worst] = fc;
                false
            } else {
                true
            }
        } else {
            let xcc = &centroid + (&simplex[worst] - &centroid) * opts.contraction;
            let fcc = g(&xcc);
            if fcc < values[worst] {
                simplex[worst] = xcc;
                values[worst] = fcc;
                false
            } else {
                true
            }
        };
        if shrink_needed {
            let best = simplex[0].clone();
            for k in 1..=dim {
                simplex[k] = &best + (&simplex[k] - &best) * opts.shrink;
                values[k] = g(&simplex[k]);
            }
        }
    }
    finish(simplex, values, iterations, evaluations, converged)
}

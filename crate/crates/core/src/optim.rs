//! Small two-parameter optimisers used by the distribution fits.
//!
//! Both minimise. Callers negate log-likelihoods.

#[derive(Debug, Clone, Copy)]
pub struct Minimum {
    pub x: [f64; 2],
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

/// BFGS with Armijo backtracking. `f` returns `(value, gradient)`; a
/// non-finite value marks a point outside the domain and is backtracked over.
pub fn bfgs<F>(f: F, x0: [f64; 2], gtol: f64, max_iter: usize) -> Minimum
where
    F: Fn([f64; 2]) -> (f64, [f64; 2]),
{
    let mut x = x0;
    let (mut fx, mut g) = f(x);
    let mut h = [[1.0, 0.0], [0.0, 1.0]];
    let mut iterations = 0;
    while iterations < max_iter && norm(g) >= gtol {
        iterations += 1;
        let mut p = [-(h[0][0] * g[0] + h[0][1] * g[1]), -(h[1][0] * g[0] + h[1][1] * g[1])];
        if dot(p, g) >= 0.0 {
            // Lost positive definiteness; restart from steepest descent.
            h = [[1.0, 0.0], [0.0, 1.0]];
            p = [-g[0], -g[1]];
        }
        // Cap the step so a bad curvature estimate cannot jump across the domain.
        let pn = norm(p);
        if pn > 2.0 {
            p = [p[0] * 2.0 / pn, p[1] * 2.0 / pn];
        }
        let slope = dot(p, g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = [x[0] + step * p[0], x[1] + step * p[1]];
            let (fnew, gnew) = f(xn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };
        let s = [xn[0] - x[0], xn[1] - x[1]];
        let y = [gnew[0] - g[0], gnew[1] - g[1]];
        let sy = dot(s, y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let a = [
                [1.0 - rho * s[0] * y[0], -rho * s[0] * y[1]],
                [-rho * s[1] * y[0], 1.0 - rho * s[1] * y[1]],
            ];
            let mut ah = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    ah[i][j] = a[i][0] * h[0][j] + a[i][1] * h[1][j];
                }
            }
            let mut hn = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    hn[i][j] = ah[i][0] * a[j][0] + ah[i][1] * a[j][1] + rho * s[i] * s[j];
                }
            }
            h = hn;
        }
        x = xn;
        fx = fnew;
        g = gnew;
    }
    let grad_norm = norm(g);
    Minimum {
        x,
        value: fx,
        grad_norm,
        iterations,
        converged: grad_norm < gtol,
    }
}

/// Nelder–Mead simplex search; `grad_norm` is reported as NaN.
pub fn nelder_mead<F>(f: F, x0: [f64; 2], scale: f64, ftol: f64, max_iter: usize) -> Minimum
where
    F: Fn([f64; 2]) -> f64,
{
    let eval = |x: [f64; 2]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex = [x0, [x0[0] + scale, x0[1]], [x0[0], x0[1] + scale]];
    let mut values = simplex.map(eval);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        if (values[2] - values[0]).abs() <= ftol * (values[0].abs() + ftol) {
            converged = true;
            break;
        }
        let c = [
            (simplex[0][0] + simplex[1][0]) / 2.0,
            (simplex[0][1] + simplex[1][1]) / 2.0,
        ];
        let along = |t: f64| [c[0] + t * (simplex[2][0] - c[0]), c[1] + t * (simplex[2][1] - c[1])];
        let xr = along(-1.0);
        let fr = eval(xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(xe);
            if fe < fr {
                simplex[2] = xe;
                values[2] = fe;
            } else {
                simplex[2] = xr;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = xr;
            values[2] = fr;
        } else {
            let (xc, fc) = if fr < values[2] {
                let x = along(-0.5);
                (x, eval(x))
            } else {
                let x = along(0.5);
                (x, eval(x))
            };
            if fc < values[2].min(fr) {
                simplex[2] = xc;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
                    ];
                    values[i] = eval(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    Minimum {
        x: simplex[best],
        value: values[best],
        grad_norm: f64::NAN,
        iterations,
        converged,
    }
}

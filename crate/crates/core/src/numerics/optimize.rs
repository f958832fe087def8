use super::{OPTIMIZER_MAX_ITER, OPTIMIZER_TOLERANCE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Bounded Nelder-Mead with restart.
///
/// Trial points are projected onto the box. Non-finite objective values
/// during the search count as +∞. Converges when the simplex spread in
/// function value is below `tolerance·(1 + |f_best|)` and the coordinate
/// spread (relative to the box width) is below `√tolerance`, and a fresh
/// simplex around the best point fails to improve on it.
pub fn minimize<F>(
    objective: F,
    initial: &[f64],
    lower: &[f64],
    upper: &[f64],
    tolerance: f64,
) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    let k = initial.len();
    if k == 0 || lower.len() != k || upper.len() != k {
        return Err(Error::invalid("minimize: dimension mismatch"));
    }
    for i in 0..k {
        if !(lower[i] < upper[i]) {
            return Err(Error::invalid(format!("minimize: lower[{i}] >= upper[{i}]")));
        }
        if !(lower[i]..=upper[i]).contains(&initial[i]) {
            return Err(Error::invalid(format!("minimize: initial[{i}] outside bounds")));
        }
    }
    let f0 = objective(initial);
    if !f0.is_finite() {
        return Err(Error::NonFinite("objective at the initial point".into()));
    }

    let width: Vec<f64> = (0..k).map(|i| upper[i] - lower[i]).collect();
    let eval = |x: &[f64]| {
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let project = |x: &mut [f64]| {
        for i in 0..k {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };

    let mut best = initial.to_vec();
    let mut best_value = f0;
    let mut evaluations = 1;
    let mut converged = false;
    let mut step_scale = 0.1;

    while evaluations < OPTIMIZER_MAX_ITER {
        // Simplex around the current best, stepping inward from the bounds.
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best.clone(), best_value)];
        for i in 0..k {
            let mut p = best.clone();
            let step = step_scale * width[i];
            p[i] = if p[i] + step <= upper[i] { p[i] + step } else { p[i] - step };
            project(&mut p);
            let v = eval(&p);
            evaluations += 1;
            simplex.push((p, v));
        }

        let mut inner_converged = false;
        while evaluations < OPTIMIZER_MAX_ITER {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let f_best = simplex[0].1;
            let f_worst = simplex[k].1;
            let f_spread = f_worst - f_best;
            let (head, rest) = (&simplex[0].0, &simplex[1..]);
            let x_spread = rest
                .iter()
                .flat_map(|(p, _)| p.iter().zip(head).zip(&width).map(|((a, b), w)| (a - b).abs() / w))
                .fold(0.0, f64::max);
            if f_spread.is_finite()
                && f_spread <= tolerance * (1.0 + f_best.abs())
                && x_spread <= tolerance.sqrt()
            {
                inner_converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..k)
                .map(|i| simplex[..k].iter().map(|(p, _)| p[i]).sum::<f64>() / k as f64)
                .collect();
            let toward = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = (0..k)
                    .map(|i| centroid[i] + t * (simplex[k].0[i] - centroid[i]))
                    .collect();
                project(&mut p);
                p
            };

            let reflected = toward(-1.0);
            let fr = eval(&reflected);
            evaluations += 1;
            if fr < simplex[0].1 {
                let expanded = toward(-2.0);
                let fe = eval(&expanded);
                evaluations += 1;
                simplex[k] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[k - 1].1 {
                simplex[k] = (reflected, fr);
            } else {
                let (contracted, fc) = if fr < simplex[k].1 {
                    let c = toward(-0.5);
                    let v = eval(&c);
                    (c, v)
                } else {
                    let c = toward(0.5);
                    let v = eval(&c);
                    (c, v)
                };
                evaluations += 1;
                if fc < simplex[k].1.min(fr) {
                    simplex[k] = (contracted, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for (p, v) in simplex.iter_mut().skip(1) {
                        for i in 0..k {
                            p[i] = anchor[i] + 0.5 * (p[i] - anchor[i]);
                        }
                        *v = eval(p);
                        evaluations += 1;
                    }
                }
            }
        }

        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improvement = best_value - simplex[0].1;
        if simplex[0].1 < best_value {
            best = simplex[0].0.clone();
            best_value = simplex[0].1;
        }
        if inner_converged && improvement <= tolerance * (1.0 + best_value.abs()) {
            converged = true;
            break;
        }
        step_scale = (step_scale * 0.5).max(1e-4);
    }

    Ok(Minimum {
        argmin: best,
        value: best_value,
        converged,
        evaluations,
    })
}

/// Convenience wrapper using the crate-wide optimizer tolerance.
pub fn minimize_default<F>(objective: F, initial: &[f64], lower: &[f64], upper: &[f64]) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    minimize(objective, initial, lower, upper, OPTIMIZER_TOLERANCE)
}

//! Scenario execution. Each runner returns the full table in memory so
//! nothing is written unless the whole computation succeeds.

use dephasim::engine::{evolve_exact, evolve_mc};
use dephasim::observables::{
    damped_pattern, linear_entropy_closed_form, linear_entropy_oracle, mc_gaussian_entropy,
    mc_pattern,
};
use dephasim::profiles::classify_regime;
use dephasim::stochastic::{mc_central_moments, moment_closed_form, moment_recursion};
use dephasim::TimeGrid;

use crate::config::Plan;
use crate::plot::{Chart, Style};
use crate::CliError;

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub table: Table,
    pub chart: Chart,
    pub summary: String,
}

fn num(v: f64) -> String {
    // `-0` would otherwise leak into the CSV from conjugation and rounding
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

fn numerical(e: dephasim::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

/// At most `k` indices spread over `0..n`, always including the last.
fn spread(n: usize, k: usize) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    (0..k).map(|i| (n - 1) - (k - 1 - i) * (n - 1) / (k - 1)).collect()
}

pub fn run(plan: &Plan) -> Result<Outcome, CliError> {
    match plan {
        Plan::Pattern { pair, profile, times, xs, mc } => {
            let mut rows = Vec::with_capacity(times.len() * xs.len());
            let mut chart = Chart::new(
                format!("Interference, {} environment", profile.label()),
                "x",
                "intensity",
            );
            let slices = spread(times.len(), 4);
            let mut worst: f64 = 0.0;
            for (i, &t) in times.iter().enumerate() {
                let mut exact_pts = Vec::new();
                let mut mc_pts = Vec::new();
                for &x in xs {
                    let exact = damped_pattern(x, t, pair, profile).map_err(numerical)?;
                    let est = mc_pattern(x, t, pair, profile, mc).map_err(numerical)?;
                    worst = worst.max((est.mean - exact).abs());
                    rows.push(vec![num(x), num(t), num(exact), num(est.mean), num(est.std_err)]);
                    exact_pts.push((x, exact));
                    mc_pts.push((x, est.mean));
                }
                if let Some(color) = slices.iter().position(|&s| s == i) {
                    chart.push(format!("exact t={t:.3}"), exact_pts, Style::Solid, color);
                    chart.push(format!("MC t={t:.3}"), mc_pts, Style::Markers, color);
                }
            }
            Ok(Outcome {
                summary: format!("{} points, max |MC - exact| = {worst:.3e}", rows.len()),
                table: Table {
                    header: vec!["x", "t", "intensity_exact", "intensity_mc", "std_err"],
                    rows,
                },
                chart,
            })
        }
        Plan::Entropy { packet, grid, profile, times, mc } => {
            let mut rows = Vec::with_capacity(times.len());
            let (mut oracle_pts, mut closed_pts, mut mc_pts) = (Vec::new(), Vec::new(), Vec::new());
            for &t in times {
                let lambda = profile.lambda(t).map_err(numerical)?;
                let oracle = linear_entropy_oracle(t, packet, profile).map_err(numerical)?;
                let closed = linear_entropy_closed_form(t, packet, profile).map_err(numerical)?;
                let est = mc_gaussian_entropy(t, packet, profile, grid, mc).map_err(numerical)?;
                rows.push(vec![num(t), num(lambda), num(oracle), num(closed), num(est.mean), num(est.std_err)]);
                oracle_pts.push((t, oracle));
                closed_pts.push((t, closed));
                mc_pts.push((t, est.mean));
            }
            let mut chart = Chart::new(
                format!("Linear entropy, {} environment", profile.label()),
                "t",
                "S_lin",
            );
            chart.push("oracle", oracle_pts, Style::Solid, 0);
            chart.push("closed form", closed_pts, Style::Dashed, 1);
            chart.push("Monte Carlo", mc_pts, Style::Markers, 2);
            let last = rows.last().map(|r| r[2].clone()).unwrap_or_default();
            Ok(Outcome {
                summary: format!("{} times, S_lin(t_max) = {last}", rows.len()),
                table: Table {
                    header: vec!["t", "lambda", "s_lin_oracle", "s_lin_eq7", "s_lin_mc", "std_err"],
                    rows,
                },
                chart,
            })
        }
        Plan::Evolve { rho0, hamiltonian, profile, times, mc } => {
            let d = rho0.dim();
            let pairs: Vec<(usize, usize)> = (0..d)
                .flat_map(|m| ((m + 1)..d).map(move |n| (m, n)))
                .take(4)
                .collect();
            let mut exact_series = vec![Vec::new(); pairs.len()];
            let mut mc_series = vec![Vec::new(); pairs.len()];
            let mut rows = Vec::new();
            let mut fraction = 0.0;
            for &t in times {
                let lambda = profile.lambda(t).map_err(numerical)?;
                let exact = evolve_exact(rho0, hamiltonian, t, profile).map_err(numerical)?;
                let est = evolve_mc(rho0, hamiltonian, t, profile, mc).map_err(numerical)?;
                fraction += est.fraction_within(&exact, 3.0);
                for m in 0..d {
                    for n in 0..d {
                        let e = exact.get(m, n);
                        let s = est.mean[(m, n)];
                        rows.push(vec![
                            num(t),
                            num(lambda),
                            m.to_string(),
                            n.to_string(),
                            num(e.re),
                            num(e.im),
                            num(s.re),
                            num(s.im),
                            num(est.std_err[(m, n)]),
                        ]);
                    }
                }
                for (k, &(m, n)) in pairs.iter().enumerate() {
                    exact_series[k].push((t, exact.get(m, n).norm()));
                    mc_series[k].push((t, est.mean[(m, n)].norm()));
                }
            }
            let mut chart = Chart::new("Coherence magnitudes", "t", "|rho_mn|");
            for (k, &(m, n)) in pairs.iter().enumerate() {
                chart.push(format!("exact ({m},{n})"), exact_series[k].clone(), Style::Solid, k);
                chart.push(format!("MC ({m},{n})"), mc_series[k].clone(), Style::Markers, k);
            }
            Ok(Outcome {
                summary: format!(
                    "d = {d}, {} times, {:.1}% of entries within 3 SE",
                    times.len(),
                    100.0 * fraction / times.len() as f64
                ),
                table: Table {
                    header: vec![
                        "t", "lambda", "row", "col", "re_exact", "im_exact", "re_mc", "im_mc", "std_err",
                    ],
                    rows,
                },
                chart,
            })
        }
        Plan::Classify { profiles, horizon, window } => {
            let mut rows = Vec::new();
            let mut chart = Chart::new("Decoherence functions", "ln t", "ln lambda");
            let mut counts = Vec::new();
            for (k, p) in profiles.iter().enumerate() {
                let class = classify_regime(p, *horizon, *window).map_err(numerical)?;
                rows.push(vec![
                    p.label().to_string(),
                    num(class.fitted_exponent),
                    class.regime.name().to_string(),
                ]);
                counts.push(format!("{} -> {}", p.label(), class.regime));
                let lo = horizon * 1e-3;
                let pts = (0..=60)
                    .map(|i| lo * (horizon / lo).powf(i as f64 / 60.0))
                    .filter_map(|t| match p.lambda(t) {
                        Ok(l) if l > 0.0 => Some(Ok((t.ln(), l.ln()))),
                        Ok(_) => None,
                        Err(e) => Some(Err(numerical(e))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                chart.push(p.label(), pts, Style::Solid, k);
            }
            Ok(Outcome {
                summary: counts.join(", "),
                table: Table {
                    header: vec!["profile", "fitted_exponent", "regime"],
                    rows,
                },
                chart,
            })
        }
        Plan::Moments { profile, times, n_max, steps_per_unit_time, mc } => {
            let t_max = *times.last().expect("validated non-empty");
            let intervals = times.len().saturating_sub(1).max(1);
            let per_sample = ((t_max * *steps_per_unit_time as f64) / intervals as f64).ceil().max(1.0) as usize;
            let grid = TimeGrid::new(t_max, per_sample * intervals).map_err(numerical)?;
            let table = moment_recursion(*n_max, profile, &grid).map_err(numerical)?;
            let offset = if times.len() == 1 { intervals } else { 0 };
            let mut rows = Vec::new();
            let mut closed_series = vec![Vec::new(); *n_max as usize + 1];
            let mut mc_series = vec![Vec::new(); *n_max as usize + 1];
            let mut worst_ode: f64 = 0.0;
            for (j, &t) in times.iter().enumerate() {
                let lambda = profile.lambda(t).map_err(numerical)?;
                let est = mc_central_moments(t, profile, *n_max, mc).map_err(numerical)?;
                for n in 0..=*n_max {
                    let closed = moment_closed_form(n, lambda).map_err(numerical)?;
                    let ode = table.get(n, (j + offset) * per_sample);
                    worst_ode = worst_ode.max((ode - closed).abs() / closed.abs().max(1.0));
                    let e = &est[n as usize];
                    rows.push(vec![n.to_string(), num(t), num(closed), num(ode), num(e.mean), num(e.std_err)]);
                    closed_series[n as usize].push((t, closed));
                    mc_series[n as usize].push((t, e.mean));
                }
            }
            let mut chart = Chart::new(
                format!("Central moments of the phase time, {} environment", profile.label()),
                "t",
                "beta_n",
            );
            for (color, n) in (2..=*n_max).step_by(2).enumerate() {
                chart.push(format!("n={n} closed"), closed_series[n as usize].clone(), Style::Solid, color);
                chart.push(format!("n={n} MC"), mc_series[n as usize].clone(), Style::Markers, color);
            }
            Ok(Outcome {
                summary: format!("{} rows, max relative ODE error {worst_ode:.2e}", rows.len()),
                table: Table {
                    header: vec!["n", "t", "beta_closed", "beta_ode", "beta_mc", "std_err"],
                    rows,
                },
                chart,
            })
        }
        Plan::Selfcheck { .. } => unreachable!("self-check has its own runner"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_picks_the_end() {
        assert_eq!(spread(3, 4), vec![0, 1, 2]);
        assert_eq!(spread(10, 4), vec![0, 3, 6, 9]);
        assert_eq!(spread(11, 4), vec![0, 4, 7, 10]);
    }
}

use crate::error::{Error, Result};

/// Least-squares slope of `ln λ` against `ln t`.
///
/// Requires at least three points with strictly increasing positive `t` and
/// positive `λ`.
pub fn tail_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "tail slope needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || !(points[0].0 > 0.0) {
        return Err(Error::domain("tail slope needs strictly increasing t > 0"));
    }
    if let Some(&(t, l)) = points.iter().find(|(_, l)| !(*l > 0.0)) {
        return Err(Error::domain(format!(
            "tail slope needs λ > 0, got λ({t}) = {l}"
        )));
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(t, l)| (sx + t.ln(), sy + l.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(t, l)| {
        let dx = t.ln() - mx;
        (sxy + dx * (l.ln() - my), sxx + dx * dx)
    });
    Ok(sxy / sxx)
}

//! Small dense vector helpers.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += s * x`
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    norm2(&sub(a, b))
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    norm_inf(&sub(a, b))
}

/// Returns `a / ‖a‖₂`, or `None` for a (numerically) zero vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm2(a);
    if n > 1e-300 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-13 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        m[r][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Orthogonalises `v` against the orthonormal rows of `basis` twice and normalises it.
/// Returns `None` if the remainder has norm below `tol`.
pub fn orthonormalize_against(v: &[f64], basis: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&w, b);
            axpy(&mut w, -c, b);
        }
    }
    let n = norm2(&w);
    if n < tol {
        None
    } else {
        Some(scale(&w, 1.0 / n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_square(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve_square(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn orthonormalization() {
        let basis = vec![vec![1.0, 0.0, 0.0]];
        let w = orthonormalize_against(&[1.0, 1.0, 0.0], &basis, 1e-12).unwrap();
        assert!((w[1] - 1.0).abs() < 1e-12 && w[0].abs() < 1e-15);
        assert!(orthonormalize_against(&[2.0, 0.0, 0.0], &basis, 1e-12).is_none());
    }
}

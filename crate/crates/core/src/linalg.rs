//! Small exact linear algebra over the rationals: solving, determinants,
//! rank, and signature tests for symmetric forms.

use crate::rat::Rat;

pub type Vector = Vec<Rat>;
pub type Matrix = Vec<Vec<Rat>>;

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add(a: &[Rat], b: &[Rat]) -> Vector {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rat], b: &[Rat]) -> Vector {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Rat], s: &Rat) -> Vector {
    a.iter().map(|x| x * s).collect()
}

pub fn mat_vec(m: &Matrix, v: &[Rat]) -> Vector {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Solve the square system A x = b by Gaussian elimination.
/// Returns None when A is singular.
pub fn solve(a: &Matrix, b: &[Rat]) -> Option<Vector> {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n) && b.len() == n);
    let mut m: Vec<Vector> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for j in col..=n {
            m[col][j] = &m[col][j] * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in col..=n {
                    let v = &m[col][j] * &f;
                    m[r][j] = &m[r][j] - &v;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

pub fn det(a: &Matrix) -> Rat {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n));
    let mut m = a.to_vec();
    let mut d = Rat::one();
    for col in 0..n {
        let pivot = match (col..n).find(|&r| !m[r][col].is_zero()) {
            Some(p) => p,
            None => return Rat::zero(),
        };
        if pivot != col {
            m.swap(col, pivot);
            d = -d;
        }
        d = d * &m[col][col];
        let inv = m[col][col].recip();
        for r in col + 1..n {
            if !m[r][col].is_zero() {
                let f = &m[r][col] * &inv;
                for j in col..n {
                    let v = &m[col][j] * &f;
                    m[r][j] = &m[r][j] - &v;
                }
            }
        }
    }
    d
}

pub fn rank(a: &Matrix) -> usize {
    if a.is_empty() {
        return 0;
    }
    let rows = a.len();
    let cols = a[0].len();
    let mut m = a.to_vec();
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows).find(|&r| !m[r][col].is_zero());
        let Some(pivot) = pivot else { continue };
        m.swap(rank, pivot);
        let inv = m[rank][col].recip();
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let f = &m[r][col] * &inv;
                for j in 0..cols {
                    let v = &m[rank][j] * &f;
                    m[r][j] = &m[r][j] - &v;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Signature (p, q) of a nondegenerate symmetric matrix: the sign counts of
/// the leading principal minors via Jacobi's criterion does not apply to
/// degenerate leading blocks, so this uses symmetric congruence reduction.
/// Returns None when the form is degenerate.
pub fn signature(a: &Matrix) -> Option<(usize, usize)> {
    let n = a.len();
    let mut m = a.to_vec();
    let mut pos = 0;
    let mut neg = 0;
    for k in 0..n {
        if m[k][k].is_zero() {
            // congruence: mix in a row with a nonzero pairing against k.
            // The new diagonal entry is 2*lambda*c + lambda^2*d with
            // c = m[r][k] != 0, d = m[r][r], so one of lambda = +/-1 works.
            let r = (k + 1..n).find(|&r| !m[r][k].is_zero());
            let Some(r) = r else {
                return None; // e_k is in the kernel of the remaining block
            };
            let c = m[r][k].clone();
            let d = m[r][r].clone();
            let lambda = if !(Rat::from_int(2) * &c + &d).is_zero() {
                Rat::one()
            } else {
                -Rat::one()
            };
            for j in 0..n {
                let v = &m[r][j] * &lambda;
                m[k][j] = &m[k][j] + &v;
            }
            for i in 0..n {
                let v = &m[i][r] * &lambda;
                m[i][k] = &m[i][k] + &v;
            }
            assert!(!m[k][k].is_zero());
        }
        let d = m[k][k].clone();
        if d.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        let inv = d.recip();
        for r in k + 1..n {
            if !m[r][k].is_zero() {
                let f = &m[r][k] * &inv;
                for j in k..n {
                    let v = &m[k][j] * &f;
                    m[r][j] = &m[r][j] - &v;
                }
                for i in k..n {
                    let v = &m[i][k] * &f;
                    m[i][r] = &m[i][r] - &v;
                }
            }
        }
    }
    if pos + neg < n {
        return None;
    }
    Some((pos, neg))
}

/// True when the symmetric matrix is negative definite, by the alternating
/// sign test on leading principal minors.
pub fn is_negative_definite(a: &Matrix) -> bool {
    let n = a.len();
    for k in 1..=n {
        let minor: Matrix = (0..k)
            .map(|i| (0..k).map(|j| a[i][j].clone()).collect())
            .collect();
        let d = det(&minor);
        let want_positive = k % 2 == 0;
        if d.is_zero() || d.is_positive() != want_positive {
            return false;
        }
    }
    true
}

/// Affine dimension of a point set (dimension of the span of differences).
pub fn affine_dim(points: &[Vector]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0];
    let diffs: Matrix = points[1..].iter().map(|p| sub(p, base)).collect();
    rank(&diffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    #[test]
    fn solve_2x2() {
        // x + 2y = 5, 3x - y = 1  ->  x = 1, y = 2
        let a = vec![vec![ratio(1), ratio(2)], vec![ratio(3), ratio(-1)]];
        let b = vec![ratio(5), ratio(1)];
        assert_eq!(solve(&a, &b), Some(vec![ratio(1), ratio(2)]));
    }

    #[test]
    fn singular_detected() {
        let a = vec![vec![ratio(1), ratio(2)], vec![ratio(2), ratio(4)]];
        assert_eq!(solve(&a, &vec![ratio(1), ratio(1)]), None);
        assert_eq!(det(&a), ratio(0));
    }

    #[test]
    fn det_3x3() {
        let a = vec![
            vec![ratio(2), ratio(0), ratio(1)],
            vec![ratio(1), ratio(1), ratio(0)],
            vec![ratio(0), ratio(3), ratio(1)],
        ];
        assert_eq!(det(&a), ratio(5));
    }

    #[test]
    fn hyperbolic_signature() {
        // diag(1, -1): signature (1,1)
        let a = vec![vec![ratio(1), ratio(0)], vec![ratio(0), ratio(-1)]];
        assert_eq!(signature(&a), Some((1, 1)));
        // antidiagonal pairing has the same signature
        let b = vec![vec![ratio(0), ratio(1)], vec![ratio(1), ratio(0)]];
        assert_eq!(signature(&b), Some((1, 1)));
    }

    #[test]
    fn degenerate_signature_is_none() {
        let a = vec![vec![ratio(1), ratio(1)], vec![ratio(1), ratio(1)]];
        assert_eq!(signature(&a), None);
    }

    #[test]
    fn negative_definiteness() {
        let a = vec![vec![ratio(-1), rat(1, 2)], vec![rat(1, 2), ratio(-1)]];
        assert!(is_negative_definite(&a));
        let b = vec![vec![ratio(-1), ratio(2)], vec![ratio(2), ratio(-1)]];
        assert!(!is_negative_definite(&b));
        assert!(!is_negative_definite(&vec![vec![ratio(0)]]));
    }
}

//! Exact linear algebra over Z and Q: fraction-free (Bareiss) elimination for
//! determinants, solving and rank, and Smith normal form with unimodular
//! transforms for small integer matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Determinant of a square integer matrix by Bareiss elimination.
pub fn det_bareiss(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Rank of an integer matrix given as rows.
pub fn rank(rows: &[Vec<BigInt>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<BigInt>> = rows.to_vec();
    let nrows = m.len();
    let ncols = m[0].len();
    let mut r = 0;
    let mut prev = BigInt::one();
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(piv) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, piv);
        for i in r + 1..nrows {
            for j in c + 1..ncols {
                let v = &m[i][j] * &m[r][c] - &m[i][c] * &m[r][j];
                m[i][j] = v / &prev;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        r += 1;
    }
    r
}

/// Solve `a x = b` over Q for square nonsingular `a`; `None` if singular.
///
/// Rows are scaled to integers, eliminated fraction-free, then
/// back-substituted in rationals.
pub fn solve_rational(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for (row, rhs) in a.iter().zip(b) {
        let den = row
            .iter()
            .chain(std::iter::once(rhs))
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let scaled = row
            .iter()
            .chain(std::iter::once(rhs))
            .map(|q| q.numer() * (&den / q.denom()))
            .collect();
        m.push(scaled);
    }
    solve_integer_augmented(m)
}

/// Solve an integer system given as augmented rows `[A | b]`.
pub fn solve_integer_augmented(mut m: Vec<Vec<BigInt>>) -> Option<Vec<BigRational>> {
    let n = m.len();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            let r = (k + 1..n).find(|&r| !m[r][k].is_zero())?;
            m.swap(k, r);
        }
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let mut x = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = BigRational::from_integer(m[i][n].clone());
        for j in i + 1..n {
            if !m[i][j].is_zero() {
                acc -= BigRational::from_integer(m[i][j].clone()) * &x[j];
            }
        }
        x[i] = acc / BigRational::from_integer(m[i][i].clone());
    }
    Some(x)
}

/// Smith normal form `u * m * v = d` of a small integer matrix.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: Vec<Vec<i128>>,
    pub d: Vec<Vec<i128>>,
    pub v: Vec<Vec<i128>>,
}

impl Smith {
    /// Diagonal entries (nonnegative, each dividing the next).
    pub fn diagonal(&self) -> Vec<i128> {
        (0..self.d.len().min(self.d.first().map_or(0, |r| r.len())))
            .map(|i| self.d[i][i])
            .collect()
    }
}

fn identity(n: usize) -> Vec<Vec<i128>> {
    (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect()
}

pub fn smith(m: &[Vec<i128>]) -> Smith {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut d: Vec<Vec<i128>> = m.to_vec();
    let mut u = identity(rows);
    let mut v = identity(cols);

    let row_op = |mat: &mut Vec<Vec<i128>>, dst: usize, src: usize, f: i128| {
        // row dst += f * row src
        let s = mat[src].clone();
        for (x, y) in mat[dst].iter_mut().zip(s) {
            *x += f * y;
        }
    };
    let col_op = |mat: &mut Vec<Vec<i128>>, dst: usize, src: usize, f: i128| {
        for row in mat.iter_mut() {
            let y = row[src];
            row[dst] += f * y;
        }
    };

    for t in 0..rows.min(cols) {
        loop {
            // pick the smallest nonzero entry of the trailing block as pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if d[i][j] != 0
                        && best.map_or(true, |(bi, bj)| d[i][j].abs() < d[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finish(u, d, v);
            };
            d.swap(t, pi);
            u.swap(t, pi);
            for row in d.iter_mut() {
                row.swap(t, pj);
            }
            for row in v.iter_mut() {
                row.swap(t, pj);
            }

            let mut clean = true;
            for i in t + 1..rows {
                let q = d[i][t].div_euclid(d[t][t]);
                if q != 0 {
                    row_op(&mut d, i, t, -q);
                    row_op(&mut u, i, t, -q);
                }
                if d[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                let q = d[t][j].div_euclid(d[t][t]);
                if q != 0 {
                    col_op(&mut d, j, t, -q);
                    col_op(&mut v, j, t, -q);
                }
                if d[t][j] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility of the trailing block by the pivot
            let bad = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| d[i][j] % d[t][t] != 0);
            match bad {
                Some((i, _)) => {
                    row_op(&mut d, t, i, 1);
                    row_op(&mut u, t, i, 1);
                }
                None => break,
            }
        }
        if d[t][t] < 0 {
            for x in d[t].iter_mut() {
                *x = -*x;
            }
            for x in u[t].iter_mut() {
                *x = -*x;
            }
        }
    }
    finish(u, d, v)
}

fn finish(mut u: Vec<Vec<i128>>, mut d: Vec<Vec<i128>>, v: Vec<Vec<i128>>) -> Smith {
    for (i, row) in d.iter_mut().enumerate() {
        if i < row.len() && row[i] < 0 {
            for x in row.iter_mut() {
                *x = -*x;
            }
            for x in u[i].iter_mut() {
                *x = -*x;
            }
        }
    }
    Smith { u, d, v }
}

/// Convenience: integer to rational.
pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn is_nonneg(x: &BigInt) -> bool {
    !x.is_negative()
}

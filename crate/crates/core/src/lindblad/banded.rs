//! LU factorization with partial pivoting for banded complex systems.
//!
//! Row `i` keeps the window of columns `i − kl ..= i + kl + ku`; the extra
//! `kl` columns on the right absorb fill-in from row interchanges.

use num_complex::Complex64;

pub(crate) struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    rows: Vec<Complex64>,
    lower: Vec<Complex64>,
    piv: Vec<usize>,
    pub min_pivot: f64,
}

#[derive(Debug)]
pub(crate) struct Singular {
    #[allow(dead_code)]
    pub column: usize,
}

impl BandedLu {
    /// `entries` are `(row, col, value)` with `|row − col|` inside the band.
    pub fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        entries: impl IntoIterator<Item = (usize, usize, Complex64)>,
        singular_below: f64,
    ) -> Result<Self, Singular> {
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            rows: vec![Complex64::new(0.0, 0.0); n * width],
            lower: vec![Complex64::new(0.0, 0.0); n * kl],
            piv: vec![0; n],
            min_pivot: f64::INFINITY,
        };
        for (r, c, v) in entries {
            debug_assert!(c + kl >= r && c <= r + ku, "entry ({r},{c}) outside band");
            let i = lu.idx(r, c);
            lu.rows[i] += v;
        }
        lu.eliminate(singular_below)?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn eliminate(&mut self, singular_below: f64) -> Result<(), Singular> {
        let n = self.n;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kl + self.ku).min(n - 1);

            let mut p = k;
            let mut best = self.rows[self.idx(k, k)].norm();
            for r in k + 1..=last_row {
                let v = self.rows[self.idx(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            self.piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.rows.swap(a, b);
                }
            }
            self.min_pivot = self.min_pivot.min(best);
            if best <= singular_below {
                return Err(Singular { column: k });
            }
            let pivot = self.rows[self.idx(k, k)];
            let span = last_col - k;
            for r in k + 1..=last_row {
                let m = self.rows[self.idx(r, k)] / pivot;
                self.lower[k * self.kl + (r - k - 1)] = m;
                if m == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = self.idx(k, k + 1);
                let dst = self.idx(r, k + 1);
                // rows k and r never overlap in storage
                let (head, tail) = self.rows.split_at_mut(dst);
                let pivot_row = &head[src..src + span];
                for (d, s) in tail[..span].iter_mut().zip(pivot_row) {
                    *d -= m * s;
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            if bk == Complex64::new(0.0, 0.0) {
                continue;
            }
            let last_row = (k + self.kl).min(n - 1);
            for r in k + 1..=last_row {
                b[r] -= self.lower[k * self.kl + (r - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let start = self.idx(k, k);
            let row = &self.rows[start..start + (last_col - k) + 1];
            let mut s = b[k];
            for (u, x) in row[1..].iter().zip(&b[k + 1..=last_col]) {
                s -= u * x;
            }
            b[k] = s / row[0];
        }
    }
}

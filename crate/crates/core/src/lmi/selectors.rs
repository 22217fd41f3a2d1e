use nalgebra::DMatrix;

/// Number of `n`-blocks in the augmented state vector.
pub const BLOCKS: usize = 14;

/// Block selectors `e_0 .. e_14`, each `14n x n`.
///
/// `e_0` is zero; `e_i` for `i >= 1` is the `i`-th block column of the
/// `14n x 14n` identity. The augmented state stacks, in order: `m(t)`,
/// `m(t - tau_bar)`, `m(t - tau)`, `p(t)`, `p(t - sigma_bar)`,
/// `p(t - sigma)`, `f(p(t))`, `f(p(t - sigma))`, `dm/dt`, `dp/dt` and the
/// four averaged integrals of `m` over `[t - tau, t]`, `[t - tau_bar, t - tau]`
/// and of `p` over `[t - sigma, t]`, `[t - sigma_bar, t - sigma]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Selectors {
    n: usize,
    e: Vec<DMatrix<f64>>,
}

impl Selectors {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn e(&self, i: usize) -> &DMatrix<f64> {
        &self.e[i]
    }

    /// Linear combination `sum c_i e_i`.
    pub fn combo(&self, terms: &[(usize, f64)]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(BLOCKS * self.n, self.n);
        for &(i, c) in terms {
            out += &self.e[i] * c;
        }
        out
    }
}

pub fn build_selectors(n: usize) -> Selectors {
    assert!(n >= 1, "selectors need n >= 1");
    let e = (0..=BLOCKS)
        .map(|i| {
            let mut m = DMatrix::zeros(BLOCKS * n, n);
            if i > 0 {
                m.view_mut(((i - 1) * n, 0), (n, n)).fill_with_identity();
            }
            m
        })
        .collect();
    Selectors { n, e }
}

/// The two-column interval blocks `Delta_1..Delta_8` (mRNA channel) and
/// `Theta_1..Theta_8` (protein channel), each `14n x 2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBlocks {
    delta: Vec<DMatrix<f64>>,
    theta: Vec<DMatrix<f64>>,
}

impl IntervalBlocks {
    /// `Delta_i`, `i` in `1..=8`.
    pub fn delta(&self, i: usize) -> &DMatrix<f64> {
        &self.delta[i - 1]
    }

    /// `Theta_i`, `i` in `1..=8`.
    pub fn theta(&self, i: usize) -> &DMatrix<f64> {
        &self.theta[i - 1]
    }

    pub fn all(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.delta.iter().chain(self.theta.iter())
    }
}

fn pair(a: DMatrix<f64>, b: DMatrix<f64>) -> DMatrix<f64> {
    let (rows, n) = a.shape();
    let mut out = DMatrix::zeros(rows, 2 * n);
    out.view_mut((0, 0), (rows, n)).copy_from(&a);
    out.view_mut((0, n), (rows, n)).copy_from(&b);
    out
}

/// Horizontal concatenation `[a b]` of two interval blocks.
pub fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = a.nrows();
    assert_eq!(rows, b.nrows());
    let mut out = DMatrix::zeros(rows, a.ncols() + b.ncols());
    out.view_mut((0, 0), (rows, a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (rows, b.ncols())).copy_from(b);
    out
}

/// Blocks for one delay channel. `bar` is the delay bound, `now`, `max`
/// and `cur` index the undelayed, maximally delayed and currently delayed
/// state blocks, `near`/`far` the averaged integrals over the recent and
/// the older part of the window.
fn channel(s: &Selectors, bar: f64, now: usize, max: usize, cur: usize, near: usize, far: usize) -> Vec<DMatrix<f64>> {
    let c = |t: &[(usize, f64)]| s.combo(t);
    vec![
        pair(c(&[(now, 1.0)]), c(&[(far, bar)])),
        pair(c(&[(0, 1.0)]), c(&[(near, 1.0), (far, -1.0)])),
        pair(c(&[(max, 1.0)]), c(&[(far, bar)])),
        pair(c(&[(far, bar)]), c(&[(far, bar * bar)])),
        pair(c(&[(near, 1.0), (far, -1.0)]), c(&[(near, bar), (far, -bar)])),
        pair(c(&[(0, 1.0)]), c(&[(now, 1.0), (max, -1.0)])),
        pair(c(&[(cur, 1.0), (max, -1.0)]), c(&[(cur, 1.0), (max, 1.0), (far, -2.0)])),
        pair(c(&[(now, 1.0), (cur, -1.0)]), c(&[(now, 1.0), (cur, 1.0), (near, -2.0)])),
    ]
}

pub fn build_interval_blocks(selectors: &Selectors, tau_bar: f64, sigma_bar: f64) -> IntervalBlocks {
    IntervalBlocks {
        delta: channel(selectors, tau_bar, 1, 2, 3, 11, 12),
        theta: channel(selectors, sigma_bar, 4, 5, 6, 13, 14),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e3_positions() {
        let s = build_selectors(1);
        let e3 = s.e(3);
        assert_eq!(e3.shape(), (14, 1));
        for r in 0..14 {
            assert_eq!(e3[(r, 0)], if r == 2 { 1.0 } else { 0.0 });
        }
        let s2 = build_selectors(2);
        let e3 = s2.e(3);
        assert_eq!(e3[(4, 0)], 1.0);
        assert_eq!(e3[(5, 1)], 1.0);
        assert_eq!(e3.sum(), 2.0);
    }

    #[test]
    fn selectors_are_orthonormal() {
        for n in 1..=3 {
            let s = build_selectors(n);
            assert_eq!(s.e(0), &DMatrix::zeros(14 * n, n));
            for i in 1..=14 {
                for j in 1..=14 {
                    let g = s.e(i).transpose() * s.e(j);
                    let want = if i == j { DMatrix::identity(n, n) } else { DMatrix::zeros(n, n) };
                    assert_eq!(g, want, "i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn delta1_instantiation() {
        let s = build_selectors(1);
        let b = build_interval_blocks(&s, 3.0, 1.0);
        let d1 = b.delta(1);
        assert_eq!(d1.shape(), (14, 2));
        for r in 0..14 {
            assert_eq!(d1[(r, 0)], if r == 0 { 1.0 } else { 0.0 });
            assert_eq!(d1[(r, 1)], if r == 11 { 3.0 } else { 0.0 });
        }
        assert!(b.delta(6).column(0).iter().all(|v| *v == 0.0));
        assert!(b.theta(6).column(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn theta7_columns() {
        let s = build_selectors(1);
        let b = build_interval_blocks(&s, 2.0, 5.0);
        let t7 = b.theta(7);
        let col1 = s.e(6) - s.e(5);
        let col2 = s.e(6) + s.e(5) - s.e(14) * 2.0;
        assert_eq!(t7.column(0).into_owned(), col1.column(0).into_owned());
        assert_eq!(t7.column(1).into_owned(), col2.column(0).into_owned());
    }

    #[test]
    fn blocks_have_rank_at_most_2n_and_selector_support() {
        for n in 1..=2 {
            let s = build_selectors(n);
            let b = build_interval_blocks(&s, 1.7, 0.6);
            for m in b.all() {
                assert_eq!(m.shape(), (14 * n, 2 * n));
                assert!(m.rank(1e-12) <= 2 * n);
                // Within each n-block every column is a multiple of the
                // identity column, so the block lies in span{e_i}.
                for blk in 0..14 {
                    for half in 0..2 {
                        let sub = m.view((blk * n, half * n), (n, n));
                        let d = sub[(0, 0)];
                        assert_eq!(sub.into_owned(), DMatrix::identity(n, n) * d);
                    }
                }
            }
        }
    }
}

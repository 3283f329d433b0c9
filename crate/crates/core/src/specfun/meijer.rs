use std::fmt;

use crate::error::{Error, Result};

/// One instance `G^{m,n}_{p,q}(z | a; b)` of the Meijer G-function with real
/// parameters and a positive real argument.
#[derive(Debug, Clone, PartialEq)]
pub struct MeijerGSpec {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    z: f64,
}

fn same(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-13 * x.abs().max(y.abs()).max(1.0)
}

impl MeijerGSpec {
    pub fn new(m: usize, n: usize, a: Vec<f64>, b: Vec<f64>, z: f64) -> Result<Self> {
        let (p, q) = (a.len(), b.len());
        if m > q || n > p {
            return Err(Error::Domain(format!(
                "Meijer G orders need m <= q and n <= p (m={m}, n={n}, p={p}, q={q})"
            )));
        }
        if p > q {
            return Err(Error::Domain(format!(
                "only p <= q is supported (p={p}, q={q})"
            )));
        }
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::Domain(format!(
                "Meijer G argument must be positive, got {z}"
            )));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Domain("Meijer G parameters must be finite".into()));
        }
        Ok(Self { m, n, a, b, z })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn q(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn with_z(&self, z: f64) -> Result<Self> {
        Self::new(self.m, self.n, self.a.clone(), self.b.clone(), z)
    }

    pub(crate) fn with_b(&self, b: Vec<f64>) -> Self {
        Self { b, ..self.clone() }
    }

    /// Drops parameter pairs whose gamma factors cancel in the Mellin-Barnes
    /// integrand: `a_j = b_k` with `j > n, k <= m`, and `a_j = b_k` with
    /// `j <= n, k > m`.
    pub fn reduced(&self) -> Self {
        let mut a_left: Vec<f64> = self.a[..self.n].to_vec();
        let mut a_right: Vec<f64> = self.a[self.n..].to_vec();
        let mut b_left: Vec<f64> = self.b[..self.m].to_vec();
        let mut b_right: Vec<f64> = self.b[self.m..].to_vec();

        let mut i = 0;
        while i < a_right.len() {
            if let Some(k) = b_left.iter().position(|&b| same(b, a_right[i])) {
                b_left.remove(k);
                a_right.remove(i);
            } else {
                i += 1;
            }
        }
        let mut i = 0;
        while i < a_left.len() {
            if let Some(k) = b_right.iter().position(|&b| same(b, a_left[i])) {
                b_right.remove(k);
                a_left.remove(i);
            } else {
                i += 1;
            }
        }
        let (m, n) = (b_left.len(), a_left.len());
        a_left.extend(a_right);
        b_left.extend(b_right);
        Self {
            m,
            n,
            a: a_left,
            b: b_left,
            z: self.z,
        }
    }
}

impl fmt::Display for MeijerGSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        write!(
            f,
            "G^{{{},{}}}_{{{},{}}}({} | {}; {})",
            self.m,
            self.n,
            self.p(),
            self.q(),
            self.z,
            join(&self.a),
            join(&self.b)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_orders_and_argument() {
        assert!(MeijerGSpec::new(1, 0, vec![], vec![0.0], 1.0).is_ok());
        assert!(MeijerGSpec::new(2, 0, vec![], vec![0.0], 1.0).is_err());
        assert!(MeijerGSpec::new(1, 1, vec![], vec![0.0], 1.0).is_err());
        assert!(MeijerGSpec::new(1, 0, vec![1.0, 2.0], vec![0.0], 1.0).is_err());
        assert!(MeijerGSpec::new(1, 0, vec![], vec![0.0], 0.0).is_err());
        assert!(MeijerGSpec::new(1, 0, vec![], vec![0.0], -1.0).is_err());
    }

    #[test]
    fn reduction_cancels_matching_pairs() {
        // G^{6,3}_{5,8} of the known-CSI error-rate terms reduces to G^{5,2}_{3,6}
        let xi2 = 6.0025;
        let g = MeijerGSpec::new(
            6,
            3,
            vec![-1.5, 0.5, 1.0, (xi2 + 1.0) / 2.0, (xi2 + 2.0) / 2.0],
            vec![xi2 / 2.0, (xi2 + 1.0) / 2.0, 2.1, 2.6, 0.7, 1.2, 0.0, 0.5],
            0.3,
        )
        .unwrap();
        let r = g.reduced();
        assert_eq!((r.m(), r.n(), r.p(), r.q()), (5, 2, 3, 6));
        assert_eq!(r.a(), &[-1.5, 1.0, (xi2 + 2.0) / 2.0]);
        assert_eq!(r.b(), &[xi2 / 2.0, 2.1, 2.6, 0.7, 1.2, 0.0]);
    }

    #[test]
    fn display_is_readable() {
        let g = MeijerGSpec::new(1, 0, vec![], vec![0.0], 2.0).unwrap();
        assert_eq!(g.to_string(), "G^{1,0}_{0,1}(2 | ; 0)");
    }
}

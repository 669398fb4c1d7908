use nalgebra::DVector;

/// Christoffel symbols Γ^i_{jk} at one point, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let idx = self.index(i, j, k);
        self.data[idx] = value;
    }

    /// Sets Γ^i_{jk} and Γ^i_{kj}.
    pub fn set_sym(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.set(i, j, k, value);
        self.set(i, k, j, value);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `Γ(a, b)^i = Σ_{jk} Γ^i_{jk} a^j b^k`.
    pub fn contract(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |i, _| {
            let mut acc = 0.0;
            for j in 0..n {
                if a[j] == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for k in 0..n {
                    inner += self.get(i, j, k) * b[k];
                }
                acc += a[j] * inner;
            }
            acc
        })
    }

    /// Largest |Γ^i_{jk} − Γ^i_{kj}|.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) - self.get(i, k, j)).abs());
                }
            }
        }
        worst
    }
}

/// Partial derivatives ∂_m Γ^i_{jk}.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelJacobian {
    dim: usize,
    data: Vec<f64>,
}

impl ChristoffelJacobian {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim * dim],
        }
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize, m: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, m: usize) -> f64 {
        self.data[self.index(i, j, k, m)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, m: usize, value: f64) {
        let idx = self.index(i, j, k, m);
        self.data[idx] = value;
    }

    /// Sets ∂_m Γ^i_{jk} and ∂_m Γ^i_{kj}.
    pub fn set_sym(&mut self, i: usize, j: usize, k: usize, m: usize, value: f64) {
        self.set(i, j, k, m, value);
        self.set(i, k, j, m, value);
    }

    /// Directional derivative `Σ_m ∂_m Γ · u^m`.
    pub fn directional(&self, u: &DVector<f64>) -> Christoffel {
        let n = self.dim;
        let mut out = Christoffel::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += self.get(i, j, k, m) * u[m];
                    }
                    out.set(i, j, k, acc);
                }
            }
        }
        out
    }
}

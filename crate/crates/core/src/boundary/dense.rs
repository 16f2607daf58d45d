use nalgebra::DMatrix;

/// Square row-major matrix with spare capacity, used to hold `S⁻¹`.
#[derive(Debug, Clone)]
pub struct GrowableMatrix {
    n: usize,
    stride: usize,
    data: Vec<f64>,
}

impl GrowableMatrix {
    pub fn identity(n: usize) -> Self {
        let mut m = Self { n: 0, stride: 0, data: Vec::new() };
        m.grow_identity(n);
        m
    }

    pub fn from_dmatrix(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let mut m = Self::identity(a.nrows());
        for i in 0..m.n {
            for j in 0..m.n {
                m.data[i * m.stride + j] = a[(i, j)];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.stride + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.stride..i * self.stride + self.n]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Appends `k` rows and columns forming an identity block.
    pub fn grow_identity(&mut self, k: usize) {
        let n_new = self.n + k;
        if n_new > self.stride {
            let stride = n_new.max(self.stride * 3 / 2).max(16);
            let mut data = vec![0.0; stride * stride];
            for i in 0..self.n {
                data[i * stride..i * stride + self.n].copy_from_slice(self.row(i));
            }
            self.data = data;
            self.stride = stride;
        } else {
            for i in 0..self.n {
                self.data[i * self.stride + self.n..i * self.stride + n_new].fill(0.0);
            }
            for i in self.n..n_new {
                self.data[i * self.stride..i * self.stride + n_new].fill(0.0);
            }
        }
        for i in self.n..n_new {
            self.data[i * self.stride + i] = 1.0;
        }
        self.n = n_new;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Given `self = S⁻¹`, turns it into `(S + Σₖ e_{rₖ} dₖᵀ)⁻¹` where each
    /// change is `(rₖ, sparse dₖ)`. Returns `Err(rows)` if the capacitance
    /// matrix is singular.
    pub fn woodbury_rows(&mut self, changes: &[(usize, Vec<(usize, f64)>)]) -> Result<(), Vec<usize>> {
        let m = changes.len();
        if m == 0 {
            return Ok(());
        }
        let n = self.n;
        let rows: Vec<usize> = changes.iter().map(|c| c.0).collect();
        // Q = D A  (m × n)
        let mut q = DMatrix::<f64>::zeros(m, n);
        for (k, (_, d)) in changes.iter().enumerate() {
            for &(j, v) in d {
                let a = self.row(j);
                for c in 0..n {
                    q[(k, c)] += v * a[c];
                }
            }
        }
        let mut cap = DMatrix::<f64>::identity(m, m);
        for k in 0..m {
            for (l, &r) in rows.iter().enumerate() {
                cap[(k, l)] += q[(k, r)];
            }
        }
        let y = cap.lu().solve(&q).ok_or_else(|| rows.clone())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(rows);
        }
        // A -= A[:, rows] Y
        let mut p = vec![0.0; m];
        for i in 0..n {
            let base = i * self.stride;
            let mut any = false;
            for (k, &r) in rows.iter().enumerate() {
                p[k] = self.data[base + r];
                any |= p[k] != 0.0;
            }
            if !any {
                continue;
            }
            let row = &mut self.data[base..base + n];
            for (k, &pk) in p.iter().enumerate() {
                if pk == 0.0 {
                    continue;
                }
                for (c, a) in row.iter_mut().enumerate() {
                    *a -= pk * y[(k, c)];
                }
            }
        }
        Ok(())
    }
}

//! Small dense kernels: LU with partial pivoting and the 3x3 matrix exponential.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Threshold on `|det| / prod_i max_j |a_ij|` below which a system counts as singular.
pub const SINGULAR_REL_DET: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub rel_det: f64,
}

/// In-place LU factorisation `P A = L U`; unit lower triangle below the diagonal.
#[derive(Debug, Clone, Copy)]
pub struct Lu<const N: usize> {
    lu: [[f64; N]; N],
    perm: [usize; N],
    det: f64,
    rel_det: f64,
}

impl<const N: usize> Lu<N> {
    #[allow(clippy::needless_range_loop)]
    pub fn factor(a: &[[f64; N]; N]) -> Result<Self, Singular> {
        let mut row_scale = 1.0;
        for row in a {
            row_scale *= row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        }
        if !(row_scale > 0.0 && row_scale.is_finite()) {
            return Err(Singular { rel_det: 0.0 });
        }

        let mut lu = *a;
        let mut perm: [usize; N] = std::array::from_fn(|i| i);
        let mut det = 1.0;
        for k in 0..N {
            let mut p = k;
            for i in k + 1..N {
                if lu[i][k].abs() > lu[p][k].abs() {
                    p = i;
                }
            }
            if lu[p][k] == 0.0 {
                return Err(Singular { rel_det: 0.0 });
            }
            if p != k {
                lu.swap(p, k);
                perm.swap(p, k);
                det = -det;
            }
            let pivot = lu[k][k];
            det *= pivot;
            for i in k + 1..N {
                let l = lu[i][k] / pivot;
                lu[i][k] = l;
                for j in k + 1..N {
                    lu[i][j] -= l * lu[k][j];
                }
            }
        }

        let rel_det = det.abs() / row_scale;
        if !(rel_det >= SINGULAR_REL_DET) {
            return Err(Singular { rel_det });
        }
        Ok(Self {
            lu,
            perm,
            det,
            rel_det,
        })
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn rel_det(&self) -> f64 {
        self.rel_det
    }

    pub fn solve(&self, b: &[f64; N]) -> [f64; N] {
        let mut x: [f64; N] = std::array::from_fn(|i| b[self.perm[i]]);
        for i in 0..N {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..N).rev() {
            for j in i + 1..N {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

pub fn lu_solve<const N: usize>(a: &[[f64; N]; N], b: &[f64; N]) -> Result<[f64; N], Singular> {
    Ok(Lu::factor(a)?.solve(b))
}

pub fn mat_vec(a: &Mat3, x: &Vec3) -> Vec3 {
    std::array::from_fn(|i| a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2])
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j])
    })
}

pub fn identity() -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

fn norm1(a: &Mat3) -> f64 {
    (0..3)
        .map(|j| a[0][j].abs() + a[1][j].abs() + a[2][j].abs())
        .fold(0.0, f64::max)
}

// Diagonal Pade(6,6) coefficients (12-k)! 6! / (12! k! (6-k)!).
const PADE6: [f64; 7] = [
    1.0,
    1.0 / 2.0,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// Scaled argument norm for the Pade kernel; truncation error is far below 1e-16 here.
const PADE_THETA: f64 = 0.5;

/// `exp(A)` by scaling and squaring around a Pade(6,6) kernel.
pub fn expm3(a: &Mat3) -> Mat3 {
    let nrm = norm1(a);
    if nrm == 0.0 {
        return identity();
    }
    let squarings = if nrm > PADE_THETA {
        (nrm / PADE_THETA).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5_f64.powi(squarings);
    let x: Mat3 = a.map(|r| r.map(|v| v * scale));

    let mut num = identity();
    let mut den = identity();
    let mut power = identity();
    for (k, &c) in PADE6.iter().enumerate().skip(1) {
        power = mat_mul(&power, &x);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for i in 0..3 {
            for j in 0..3 {
                num[i][j] += c * power[i][j];
                den[i][j] += sign * c * power[i][j];
            }
        }
    }

    // den is close to the identity after scaling, so it is never singular.
    let lu = Lu::factor(&den).expect("Pade denominator is well conditioned");
    let mut r = [[0.0; 3]; 3];
    for j in 0..3 {
        let col = lu.solve(&[num[0][j], num[1][j], num[2][j]]);
        for i in 0..3 {
            r[i][j] = col[i];
        }
    }
    for _ in 0..squarings {
        r = mat_mul(&r, &r);
    }
    r
}

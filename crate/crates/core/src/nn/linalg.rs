//! Safe wrappers over `matrixmultiply::dgemm` for the three products
//! the layers need. All buffers are row-major.

/// `a[m,k] · b[k,n]`
pub(crate) fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    gemm(a, (k as isize, 1), b, (n as isize, 1), m, k, n)
}

/// `aᵀ · b` where `a` is stored `[k,m]` and `b` is `[k,n]`.
pub(crate) fn matmul_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    gemm(a, (1, m as isize), b, (n as isize, 1), m, k, n)
}

/// `a · bᵀ` where `a` is `[m,k]` and `b` is stored `[n,k]`.
pub(crate) fn matmul_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    gemm(a, (k as isize, 1), b, (1, k as isize), m, k, n)
}

fn gemm(
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    m: usize,
    k: usize,
    n: usize,
) -> Vec<f64> {
    assert_eq!(a.len(), m * k, "lhs has wrong length");
    assert_eq!(b.len(), k * n, "rhs has wrong length");
    let mut c = vec![0.0; m * n];
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: lengths are checked above and every stride pair describes a
    // dense m×k, k×n or m×n matrix inside its buffer.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                c[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
            }
        }
        c
    }

    fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut t = vec![0.0; a.len()];
        for i in 0..rows {
            for j in 0..cols {
                t[j * rows + i] = a[i * cols + j];
            }
        }
        t
    }

    #[test]
    fn products_agree_with_naive_loops() {
        let (m, k, n) = (3, 4, 5);
        let a: Vec<f64> = (0..m * k).map(|v| v as f64 * 0.5 - 2.0).collect();
        let b: Vec<f64> = (0..k * n).map(|v| (v as f64).sin()).collect();
        let expected = naive(&a, &b, m, k, n);

        for (g, e) in matmul(&a, &b, m, k, n).iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12);
        }

        let at = transpose(&a, m, k);
        let got = matmul_tn(&at, &b, m, k, n);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12);
        }

        let bt = transpose(&b, k, n);
        let got = matmul_nt(&a, &bt, m, k, n);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12);
        }
    }
}

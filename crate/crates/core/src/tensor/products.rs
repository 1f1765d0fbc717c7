use crate::error::{Error, Result};
use crate::tensor::{DenseMatrix, DenseTensor};

/// Kronecker product `x ⊗ y`: block `(i, j)` of the result is `x[i, j] · y`.
pub fn kron(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    let overflow = || Error::SizeOverflow(format!("kron of {:?} and {:?}", x.shape(), y.shape()));
    let rows = x.rows().checked_mul(y.rows()).ok_or_else(overflow)?;
    let cols = x.cols().checked_mul(y.cols()).ok_or_else(overflow)?;
    rows.checked_mul(cols).ok_or_else(overflow)?;
    let mut out = vec![0.0; rows * cols];
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let a = x.get(i, j);
            if a == 0.0 {
                continue;
            }
            for bi in 0..y.rows() {
                let row = i * y.rows() + bi;
                let base = row * cols + j * y.cols();
                for (o, b) in out[base..base + y.cols()].iter_mut().zip(y.row(bi)) {
                    *o = a * b;
                }
            }
        }
    }
    Ok(DenseMatrix::from_raw(rows, cols, out))
}

/// Kronecker product of a list of matrices in the given order.
pub fn kron_all(factors: &[DenseMatrix]) -> Result<DenseMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Dimension("empty factor list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, f| kron(&acc, f))
}

/// Column-wise Kronecker product.
pub fn khatri_rao(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    if x.cols() != y.cols() {
        return Err(Error::Dimension(format!(
            "khatri_rao needs equal column counts, got {} and {}",
            x.cols(),
            y.cols()
        )));
    }
    let rows = x
        .rows()
        .checked_mul(y.rows())
        .ok_or_else(|| Error::SizeOverflow("khatri_rao rows".into()))?;
    Ok(DenseMatrix::from_fn(rows, x.cols(), |r, c| {
        x.get(r / y.rows(), c) * y.get(r % y.rows(), c)
    }))
}

/// Stacks the columns of `x` into a column vector; entry `r + rows·c` is `x[r, c]`.
pub fn vec(x: &DenseMatrix) -> DenseMatrix {
    let (rows, cols) = x.shape();
    DenseMatrix::from_raw(
        rows * cols,
        1,
        (0..rows * cols).map(|idx| x.get(idx % rows, idx / rows)).collect(),
    )
}

/// Inverse of [`vec`].
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<DenseMatrix> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(DenseMatrix::from_fn(rows, cols, |r, c| v[r + rows * c]))
}

/// Mode-`mode` product (0-based): replaces `dims[mode]` by `a.rows()` and
/// satisfies `unfold(result, mode) == a · unfold(t, mode)`.
pub fn mode_k_product(t: &DenseTensor, a: &DenseMatrix, mode: usize) -> Result<DenseTensor> {
    let unfolded = t.unfold(mode)?;
    if a.cols() != unfolded.rows() {
        return Err(Error::Dimension(format!(
            "mode-{mode} product needs {} columns, factor has {}",
            unfolded.rows(),
            a.cols()
        )));
    }
    let mut dims = t.dims().to_vec();
    dims[mode] = a.rows();
    DenseTensor::fold(&a.matmul(&unfolded)?, mode, &dims)
}

/// Multiplies `core` by `factors[k]` along every mode `k`.
///
/// `vec(result) == (factors[K-1] ⊗ … ⊗ factors[0]) · vec(core)`.
pub fn tucker_reconstruct(core: &DenseTensor, factors: &[DenseMatrix]) -> Result<DenseTensor> {
    if factors.len() != core.order() {
        return Err(Error::Dimension(format!(
            "{} factors for an order-{} core",
            factors.len(),
            core.order()
        )));
    }
    factors
        .iter()
        .enumerate()
        .try_fold(core.clone(), |acc, (k, f)| mode_k_product(&acc, f, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
        proptest::collection::vec(-3.0f64..3.0, rows * cols)
            .prop_map(move |d| DenseMatrix::new(rows, cols, d).unwrap())
    }

    fn arb_tensor(dims: Vec<usize>) -> impl Strategy<Value = DenseTensor> {
        let n: usize = dims.iter().product();
        proptest::collection::vec(-3.0f64..3.0, n)
            .prop_map(move |d| DenseTensor::new(dims.clone(), d).unwrap())
    }

    #[test]
    fn kron_identity_is_block_diagonal() {
        let b = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let k = kron(&DenseMatrix::identity(2), &b).unwrap();
        let expected = mat(&[
            &[1.0, 2.0, 0.0, 0.0],
            &[3.0, 4.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 2.0],
            &[0.0, 0.0, 3.0, 4.0],
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_norm_example() {
        let x = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let y = mat(&[&[0.0, 1.0]]);
        let k = kron(&x, &y).unwrap();
        assert_eq!(k.shape(), (2, 4));
        assert!((k.frobenius_norm() - 30f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn khatri_rao_of_identities_selects_diagonal() {
        let kr = khatri_rao(&DenseMatrix::identity(2), &DenseMatrix::identity(2)).unwrap();
        assert_eq!(kr, mat(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]));
        assert!(khatri_rao(&DenseMatrix::identity(2), &DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn khatri_rao_single_column_is_vector_kron() {
        let u = DenseMatrix::column_vector(vec![1.0, 2.0]).unwrap();
        let v = DenseMatrix::column_vector(vec![3.0, 4.0, 5.0]).unwrap();
        assert_eq!(khatri_rao(&u, &v).unwrap(), kron(&u, &v).unwrap());
    }

    #[test]
    fn vec_examples() {
        assert_eq!(vec(&DenseMatrix::identity(2)).as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        let u = DenseMatrix::column_vector(vec![1.0, 2.0]).unwrap();
        let v = DenseMatrix::column_vector(vec![3.0, 4.0]).unwrap();
        let outer = u.matmul(&v.transpose()).unwrap();
        assert_eq!(vec(&outer).as_slice(), &[3.0, 6.0, 4.0, 8.0]);
        assert_eq!(vec(&outer), kron(&v, &u).unwrap());
    }

    #[test]
    fn mode_product_shape_error() {
        let t = DenseTensor::zeros(vec![2, 3]).unwrap();
        assert!(matches!(
            mode_k_product(&t, &DenseMatrix::zeros(2, 2), 1),
            Err(Error::Dimension(_))
        ));
        assert!(tucker_reconstruct(&t, &[DenseMatrix::identity(2)]).is_err());
    }

    #[test]
    fn tucker_identity_factors_leave_core() {
        let core = DenseTensor::new(vec![2, 2, 2], (0..8).map(f64::from).collect()).unwrap();
        let ids: Vec<_> = core.dims().iter().map(|&d| DenseMatrix::identity(d)).collect();
        assert_eq!(tucker_reconstruct(&core, &ids).unwrap(), core);
    }

    proptest! {
        #[test]
        fn mixed_product(
            x1 in arb_matrix(2, 3), x2 in arb_matrix(2, 2),
            y1 in arb_matrix(3, 2), y2 in arb_matrix(2, 3),
        ) {
            let lhs = kron(&x1, &x2).unwrap().matmul(&kron(&y1, &y2).unwrap()).unwrap();
            let rhs = kron(&x1.matmul(&y1).unwrap(), &x2.matmul(&y2).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
        }

        #[test]
        fn kron_norm_factorizes(x in arb_matrix(3, 2), y in arb_matrix(2, 4)) {
            let k = kron(&x, &y).unwrap().frobenius_norm();
            let f = x.frobenius_norm() * y.frobenius_norm();
            prop_assert!((k - f).abs() <= 1e-12 * f.max(1.0));
        }

        #[test]
        fn khatri_rao_columns_are_kron_diagonal(x in arb_matrix(3, 3), y in arb_matrix(3, 3)) {
            let kr = khatri_rao(&x, &y).unwrap();
            let k = kron(&x, &y).unwrap();
            for j in 0..3 {
                prop_assert_eq!(kr.column(j), k.column(3 * j + j));
            }
        }

        #[test]
        fn vec_unvec_round_trip(x in arb_matrix(3, 5)) {
            prop_assert_eq!(unvec(vec(&x).as_slice(), 3, 5).unwrap(), x);
        }

        #[test]
        fn unfold_fold_round_trip(t in arb_tensor(vec![2, 3, 4]), mode in 0usize..3) {
            let u = t.unfold(mode).unwrap();
            prop_assert_eq!(DenseTensor::fold(&u, mode, t.dims()).unwrap(), t);
        }

        #[test]
        fn mode_product_matches_unfolding(
            t in arb_tensor(vec![2, 3, 2]), mode in 0usize..3, seed in proptest::collection::vec(-2.0f64..2.0, 12),
        ) {
            let dk = t.dims()[mode];
            let a = DenseMatrix::new(4, dk, seed[..4 * dk].to_vec()).unwrap();
            let y = mode_k_product(&t, &a, mode).unwrap();
            let expected = a.matmul(&t.unfold(mode).unwrap()).unwrap();
            prop_assert!(y.unfold(mode).unwrap().max_abs_diff(&expected).unwrap() <= 1e-12);
        }

        #[test]
        fn mode_products_commute(t in arb_tensor(vec![2, 3, 2]), a in arb_matrix(3, 2), b in arb_matrix(2, 3)) {
            let ab = mode_k_product(&mode_k_product(&t, &a, 0).unwrap(), &b, 1).unwrap();
            let ba = mode_k_product(&mode_k_product(&t, &b, 1).unwrap(), &a, 0).unwrap();
            let diff = ab.as_slice().iter().zip(ba.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-12);
        }

        #[test]
        fn tucker_second_order_is_triple_product(core in arb_matrix(3, 4), d1 in arb_matrix(2, 3), d2 in arb_matrix(5, 4)) {
            let y = tucker_reconstruct(&DenseTensor::from_matrix(&core), &[d1.clone(), d2.clone()]).unwrap();
            let direct = d1.matmul(&core).unwrap().matmul(&d2.transpose()).unwrap();
            prop_assert!(y.unfold(0).unwrap().max_abs_diff(&direct).unwrap() <= 1e-12);
        }

        #[test]
        fn tucker_vec_identity(core in arb_tensor(vec![2, 2, 2]), fs in proptest::collection::vec(arb_matrix(3, 2), 3)) {
            let y = tucker_reconstruct(&core, &fs).unwrap();
            let big = kron_all(&[fs[2].clone(), fs[1].clone(), fs[0].clone()]).unwrap();
            let v = big.apply(core.as_slice()).unwrap();
            let diff = v.iter().zip(y.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-12);
        }
    }
}

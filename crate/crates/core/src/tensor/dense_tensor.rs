use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Dense tensor of order `K` stored with the first index varying fastest,
/// so that the raw storage equals `vec` of the mode-1 unfolding.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Dimension(format!(
                "tensor dims must be non-empty and positive, got {dims:?}"
            )));
        }
        let len = checked_product(&dims)?;
        if data.len() != len {
            return Err(Error::Dimension(format!(
                "dims {dims:?} need {len} entries, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = checked_product(&dims)?;
        Self::new(dims, vec![0.0; len])
    }

    /// Reads a matrix as a 2nd-order tensor with entry `(i, j)` = `m[i, j]`.
    pub fn from_matrix(m: &DenseMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(m.get(i, j));
            }
        }
        Self {
            dims: vec![rows, cols],
            data,
        }
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Raw storage, first index fastest. Equals `vec(unfold(self, 0))`.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        let mut offset = 0;
        let mut stride = 1;
        for (i, d) in index.iter().zip(&self.dims) {
            offset += i * stride;
            stride *= d;
        }
        offset
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.dims.len());
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    /// Mode-`mode` unfolding (modes are 0-based): a `dims[mode] x ∏_{i≠mode} dims[i]`
    /// matrix whose column index runs over the remaining modes, lowest mode fastest.
    pub fn unfold(&self, mode: usize) -> Result<DenseMatrix> {
        self.check_mode(mode)?;
        let rows = self.dims[mode];
        let cols = self.data.len() / rows;
        let mut out = vec![0.0; rows * cols];
        let mut index = vec![0usize; self.order()];
        for &value in &self.data {
            let (r, c) = self.unfolded_position(&index, mode);
            out[r * cols + c] = value;
            self.advance(&mut index);
        }
        Ok(DenseMatrix::from_raw(rows, cols, out))
    }

    /// Inverse of [`DenseTensor::unfold`] for a tensor with the given dims.
    pub fn fold(matrix: &DenseMatrix, mode: usize, dims: &[usize]) -> Result<Self> {
        let mut t = Self::zeros(dims.to_vec())?;
        t.check_mode(mode)?;
        let expected = (dims[mode], t.data.len() / dims[mode]);
        if matrix.shape() != expected {
            return Err(Error::Dimension(format!(
                "mode-{mode} unfolding of {dims:?} is {}x{}, got {}x{}",
                expected.0,
                expected.1,
                matrix.rows(),
                matrix.cols()
            )));
        }
        let mut index = vec![0usize; dims.len()];
        for slot in 0..t.data.len() {
            let (r, c) = t.unfolded_position(&index, mode);
            t.data[slot] = matrix.get(r, c);
            t.advance(&mut index);
        }
        Ok(t)
    }

    fn unfolded_position(&self, index: &[usize], mode: usize) -> (usize, usize) {
        let mut col = 0;
        let mut stride = 1;
        for (k, (&i, &d)) in index.iter().zip(&self.dims).enumerate() {
            if k != mode {
                col += i * stride;
                stride *= d;
            }
        }
        (index[mode], col)
    }

    fn advance(&self, index: &mut [usize]) {
        for (i, d) in index.iter_mut().zip(&self.dims) {
            *i += 1;
            if *i < *d {
                return;
            }
            *i = 0;
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::Index(format!(
                "mode {mode} of an order-{} tensor",
                self.order()
            )));
        }
        Ok(())
    }
}

fn checked_product(dims: &[usize]) -> Result<usize> {
    dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| Error::SizeOverflow(format!("tensor dims {dims:?}")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(dims: Vec<usize>) -> DenseTensor {
        let n: usize = dims.iter().product();
        DenseTensor::new(dims, (0..n).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn second_order_unfoldings_are_matrix_and_transpose() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let t = DenseTensor::from_matrix(&m);
        assert_eq!(t.unfold(0).unwrap(), m);
        assert_eq!(t.unfold(1).unwrap(), m.transpose());
    }

    #[test]
    fn unfold_shapes_and_out_of_range_mode() {
        let t = ramp(vec![2, 3, 4]);
        assert_eq!(t.unfold(1).unwrap().shape(), (3, 8));
        assert_eq!(t.unfold(2).unwrap().shape(), (4, 6));
        assert!(matches!(t.unfold(3), Err(Error::Index(_))));
    }

    #[test]
    fn unfold_column_fixes_other_indices() {
        // column c of the mode-1 unfolding of a (2,3,4) tensor fixes (i0, i2) with c = i0 + 2*i2
        let t = ramp(vec![2, 3, 4]);
        let u = t.unfold(1).unwrap();
        for i0 in 0..2 {
            for i1 in 0..3 {
                for i2 in 0..4 {
                    assert_eq!(u.get(i1, i0 + 2 * i2), t.get(&[i0, i1, i2]));
                }
            }
        }
    }

    #[test]
    fn storage_is_vec_of_mode0_unfolding() {
        let t = ramp(vec![3, 2, 2]);
        let u = t.unfold(0).unwrap();
        let stacked: Vec<f64> = (0..u.cols()).flat_map(|c| u.column(c)).collect();
        assert_eq!(stacked, t.as_slice());
    }
}

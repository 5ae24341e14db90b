//! Flat access to named parameter tensors, shared by the optimizer, target
//! network updates and the checkpoint format.

/// A named, shaped view of one parameter tensor.
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

pub trait ParamSet {
    /// Tensors in a fixed order.
    fn tensors(&self) -> Vec<TensorRef<'_>>;
    /// Same order as [`ParamSet::tensors`].
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

/// Row-major copy of `a` unless it already is; flat tensor access relies on it.
pub fn standard<D: ndarray::Dimension>(a: ndarray::Array<f64, D>) -> ndarray::Array<f64, D> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

/// `target ← ρ·live + (1 − ρ)·target`, tensor by tensor.
pub fn soft_update<P: ParamSet>(target: &mut P, live: &P, rho: f64) {
    let src: Vec<Vec<f64>> = live.tensors().iter().map(|t| t.data.to_vec()).collect();
    for (dst, s) in target.tensors_mut().into_iter().zip(src) {
        for (d, v) in dst.iter_mut().zip(s) {
            *d = rho * v + (1.0 - rho) * *d;
        }
    }
}

/// Copies every tensor of `src` into `dst` (shapes must agree).
pub fn copy_params<P: ParamSet>(dst: &mut P, src: &P) {
    soft_update(dst, src, 1.0);
}

use super::Matrix;

pub fn tanh_forward(x: &Matrix) -> Matrix {
    x.map(f64::tanh)
}

/// Gradient through tanh given its forward *output* `y`.
pub fn tanh_backward(y: &Matrix, grad_out: &Matrix) -> Matrix {
    let mut g = grad_out.clone();
    for (gi, yi) in g.as_mut_slice().iter_mut().zip(y.as_slice()) {
        *gi *= 1.0 - yi * yi;
    }
    g
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
